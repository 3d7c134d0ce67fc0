pub mod conditions;
pub mod cone;
pub mod expr;
pub mod grid;
pub mod impulse;
pub mod measures;
pub mod poly;
pub mod problem;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod scheduler;
pub mod sl_kernel;
pub mod solver;
pub mod value;
