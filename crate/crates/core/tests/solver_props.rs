mod common;

use common::*;
use ibvp::cone::cone_constants;
use ibvp::problem::Problem;
use ibvp::rational::ratio;
use ibvp::solver::{multi_start, solve_picard, start_values, Operator, PicardSettings, SolutionPair};
use proptest::prelude::*;

fn fixed_point_gap(op: &Operator, s: &SolutionPair) -> f64 {
    let (tu, tv) = op.apply(&s.u, &s.v).unwrap();
    tu.max_abs_diff(&s.u).max(tv.max_abs_diff(&s.v))
}

fn nonnegative(s: &SolutionPair) -> bool {
    s.u.values.iter().chain(&s.v.values).all(|&x| x >= 0.0)
}

/// The linear test with forcing `a` and `b (1 + t)` and an impulse in the second equation.
fn forced(a: i64, b: i64) -> Problem {
    let text = include_str!("../examples_data/linear.json")
        .replacen(r#""f": "1""#, &format!(r#""f": "{a}/4""#), 1)
        .replacen(r#""f": "0""#, &format!(r#""f": "({b}/4)*(1 + t) + u/10""#), 1);
    Problem::from_json(&text).unwrap()
}

#[test]
fn residual_of_known_solution_is_second_order() {
    let r: Vec<f64> = [25, 50, 100, 200].into_iter().map(known_solution_residual).collect();
    for w in r.windows(2) {
        let q = w[0] / w[1];
        assert!((q - 4.0).abs() <= 0.5, "ratio {q} from {r:?}");
    }
}

#[test]
fn example_solutions_are_consistent_and_positive() {
    let p = example();
    let op = Operator::new(&p, 100).unwrap();
    let settings = PicardSettings::from_problem(&p);
    let rho = [ratio(1, 8), ratio(1, 1), ratio(11, 1)];
    let ms = multi_start(&op, &start_values(&rho), &cone_constants(&p).c.0, settings);
    assert!(!ms.solutions.is_empty());
    for s in &ms.solutions {
        assert!(fixed_point_gap(&op, s) < 10.0 * settings.tol, "{}", fixed_point_gap(&op, s));
        assert!(nonnegative(s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returned_pairs_are_fixed_points(a in 0i64..20, b in 0i64..20, n in 16usize..80, damping in 0.3f64..=1.0, start in 0.0f64..3.0) {
        let p = forced(a, b);
        let op = Operator::new(&p, n).unwrap();
        let settings = PicardSettings { damping, tol: 1e-11, max_iter: 5000 };
        let s = solve_picard(&op, (op.constant(start), op.constant(start)), settings).unwrap();
        prop_assert!(fixed_point_gap(&op, &s) < 10.0 * settings.tol);
        prop_assert!(nonnegative(&s));
    }
}
