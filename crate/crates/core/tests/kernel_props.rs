mod common;

use common::*;
use ibvp::rational::ratio;
use ibvp::sl_kernel::{make_basis, GreenKernel, SlCoefficients};
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = SlCoefficients> {
    any::<u64>().prop_map(|seed| random_coeffs(&mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetry_defect_and_window_bounds(c in coeffs()) {
        check_kernel_grid(&c, 20).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn row_integral_matches_quadrature(c in coeffs(), t in 0.0f64..=1.0) {
        check_row_integral(&c, t).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dirichlet_row_integral(k in 0i64..=64) {
        let g = GreenKernel::new(make_basis(&SlCoefficients::from_ints(1, 0, 1, 0)).unwrap());
        let t = ratio(k, 64);
        let closed = g.row_integral(&ratio(0, 1), &ratio(1, 1)).eval(&t);
        prop_assert_eq!(closed, &t * (ratio(1, 1) - &t) / ratio(2, 1));
    }
}
