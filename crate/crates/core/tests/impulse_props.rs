mod common;

use common::*;
use ibvp::impulse::g_value_exact;
use ibvp::rational::{ratio, Rational};
use ibvp::sl_kernel::make_basis;
use num_traits::Signed;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jumps_reconstruct_i_and_n(seed in any::<u64>(), ip in -60i64..60, iq in 1i64..30, np in -60i64..60, nq in 1i64..30) {
        let mut r = rng(seed);
        let coeffs = random_coeffs(&mut r);
        let tau = unit_rational(&mut r, 50);
        check_reconstruction(&coeffs, &tau, &ratio(ip, iq), &ratio(np, nq)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn g_is_nonnegative_under_the_bounds(seed in any::<u64>()) {
        // with d1 I + e1 N >= p11 w >= 0 and d2 I + e2 N >= 0, G is a nonnegative combination of gamma and delta
        let mut r = rng(seed);
        let basis = make_basis(&random_coeffs(&mut r)).unwrap();
        let tau = unit_rational(&mut r, 40);
        let jumps: (Rational, Rational) = (ratio(r.gen_range(0..50), 7), ratio(r.gen_range(0..50), 11));
        for k in 0..=32 {
            let t = ratio(k, 32);
            for right in [false, true] {
                prop_assert!(!g_value_exact(&basis, &tau, &jumps, &t, right).is_negative());
            }
        }
    }
}
