mod common;

use common::*;
use ibvp::measures::StieltjesMeasure;
use ibvp::rational::ratio;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn linearity_and_positivity(seed in any::<u64>(), with_density in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_measure(&mut r, with_density);
        let (w1, w2) = (random_poly(&mut r, false), random_poly(&mut r, false));
        let (a, b) = (ratio(r.gen_range(-9..10), 7), ratio(r.gen_range(-9..10), 5));
        check_measure(&m, &w1, &w2, &a, &b).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn nonnegative_polynomials_give_nonnegative_values(seed in any::<u64>(), with_density in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_measure(&mut r, with_density);
        let w = random_poly(&mut r, true);
        prop_assert!(m.apply(&w).unwrap().to_f64() >= 0.0);
    }

    #[test]
    fn augmentation_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tau = unit_rational(&mut r, 30);
        let m = random_measure(&mut r, false);
        let m = StieltjesMeasure { atoms: m.atoms.into_iter().filter(|a| a.at != tau).collect(), density: None };
        let w = random_poly(&mut r, false);
        check_augmentation(&m, &w, &ratio(r.gen_range(1..9), 4), &ratio(r.gen_range(0..9), 3), &tau)
            .map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn transform_matches_direct_application(seed in any::<u64>()) {
        let mut r = rng(seed);
        let coeffs = random_coeffs(&mut r);
        let m = random_measure(&mut r, false);
        let pts: Vec<f64> = (0..25).map(|_| r.gen_range(0.0..1.0)).collect();
        check_transform(&coeffs, &m, &pts, 1e-12).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn transform_with_density(seed in any::<u64>()) {
        let mut r = rng(seed);
        let coeffs = random_coeffs(&mut r);
        let m = random_measure(&mut r, true);
        let pts: Vec<f64> = (0..5).map(|_| r.gen_range(0.0..1.0)).collect();
        check_transform(&coeffs, &m, &pts, 1e-9).map_err(TestCaseError::fail)?;
    }
}
