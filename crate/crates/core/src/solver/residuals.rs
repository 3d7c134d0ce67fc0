//! Residuals of a grid solution against the original boundary value problem.
//!
//! Derivatives come from differentiating the representation formula rather
//! than from one-sided differences, whose `O(h)` error would swamp the jump
//! and boundary checks.

use serde::Serialize;

use super::{Operator, SolverError};
use crate::expr::Var;
use crate::grid::PiecewiseGridFunction;
use crate::rational;

/// Per-equation maxima of each residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    /// `|u - T u|_inf`.
    pub integral: [f64; 2],
    /// `max |D^2 u + g f|` over interior nodes away from impulse points.
    pub ode: [f64; 2],
    pub jump_value: [f64; 2],
    pub jump_slope: [f64; 2],
    pub bc_left: [f64; 2],
    pub bc_right: [f64; 2],
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.integral, self.ode, self.jump_value, self.jump_slope, self.bc_left, self.bc_right]
            .iter()
            .flatten()
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_integral(&self) -> f64 {
        self.integral[0].max(self.integral[1])
    }
}

pub fn residuals(op: &Operator, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction) -> Result<Residuals, SolverError> {
    let grid = &op.grid;
    let x = grid.nodes();
    let exact = grid.exact_nodes();
    let n = x.len();
    let doubled = |k: usize| (k > 0 && exact[k] == exact[k - 1]) || (k + 1 < n && exact[k] == exact[k + 1]);
    let mut r = Residuals {
        integral: [0.0; 2],
        ode: [0.0; 2],
        jump_value: [0.0; 2],
        jump_slope: [0.0; 2],
        bc_left: [0.0; 2],
        bc_right: [0.0; 2],
    };
    for i in 0..2 {
        let eq = &op.problem.equations[i];
        let equation = i + 1;
        let w = if i == 0 { u } else { v };
        let comp = op.components(i, u, v)?;
        let du = op.derivative(i, &comp);
        let y = &w.values;

        r.integral[i] = y.iter().zip(&comp.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

        for k in 1..n.saturating_sub(1) {
            if doubled(k - 1) || doubled(k) || doubled(k + 1) {
                continue;
            }
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            let d2 = 2.0 * ((y[k + 1] - y[k]) / h1 - (y[k] - y[k - 1]) / h0) / (h0 + h1);
            r.ode[i] = r.ode[i].max((d2 + comp.source[k]).abs());
        }

        let j = grid.jump_index(eq.tau()).ok_or_else(|| SolverError::Impulse {
            equation,
            source: crate::impulse::ImpulseError::MissingJumpNode(rational::format(eq.tau())),
        })?;
        let left = y[j];
        let eerr = |source| SolverError::Eval { equation, source };
        let i_val = eq.impulse.i.eval_at(Var::W, left.max(0.0)).map_err(eerr)?;
        let n_val = eq.impulse.n.eval_at(Var::W, left.max(0.0)).map_err(eerr)?;
        r.jump_value[i] = (y[j + 1] - y[j] - i_val).abs();
        r.jump_slope[i] = (du[j + 1] - du[j] - n_val).abs();

        let bc = eq.basis.coeffs.clone();
        let f = rational::to_f64;
        r.bc_left[i] = (f(&bc.a1) * y[0] - f(&bc.b1) * du[0] - comp.h_value).abs();
        r.bc_right[i] = (f(&bc.a2) * y[n - 1] + f(&bc.b2) * du[n - 1] - comp.l_value).abs();
    }
    Ok(r)
}
