//! One line per acceptance criterion, then a single assertion over all of them.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use ibvp::cone::cone_constants;
use ibvp::measures::StieltjesMeasure;
use ibvp::rational::{self, int, ratio, Rational};
use ibvp::report::{run_analyze, run_solve, AnalyzeReport};
use ibvp::scheduler::Pattern;
use ibvp::solver::Operator;
use ibvp::value::Value;
use rand::Rng;

type Outcome = Result<String, String>;

fn exact(v: &Value) -> Option<&Rational> {
    match v {
        Value::Exact(r) => Some(r),
        Value::Float(_) => None,
    }
}

fn expect_exact(what: &str, got: &Value, want: Rational, errs: &mut Vec<String>) {
    if exact(got) != Some(&want) {
        errs.push(format!("{what}: got {got}, want {}", rational::format(&want)));
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

fn analyze_example() -> (AnalyzeReport, Duration) {
    let p = example();
    let (r, dt) = timed(|| run_analyze(&p));
    (r.expect("analyze"), dt)
}

fn exact_constants(r: &AnalyzeReport, dt: Duration) -> Outcome {
    let mut errs = Vec::new();
    let f = &r.augmented_functionals;
    expect_exact("alpha~1[gamma1]", &f[0].alpha_tilde_gamma, ratio(641, 1000), &mut errs);
    expect_exact("alpha~2[gamma2]", &f[1].alpha_tilde_gamma, ratio(79, 1140), &mut errs);
    expect_exact("alpha~2[delta2]", &f[1].alpha_tilde_delta, ratio(23, 950), &mut errs);
    expect_exact("alpha-1[gamma1]", &f[0].alpha_bar_gamma, ratio(183, 700), &mut errs);
    expect_exact("alpha-2[gamma2]", &f[1].alpha_bar_gamma, ratio(21, 400), &mut errs);
    expect_exact("beta1[1]", &f[0].beta_mass, int(1), &mut errs);
    expect_exact("beta2[1]", &f[1].beta_mass, int(1), &mut errs);
    let b = &r.bound_constants;
    expect_exact("int K~1", &b[0].int_k_tilde, ratio(3189, 40000), &mut errs);
    expect_exact("int K~2", &b[1].int_k_tilde, ratio(853, 42750), &mut errs);
    expect_exact("int K-1", &b[0].int_k_bar, ratio(181, 8400), &mut errs);
    expect_exact("int K-2", &b[1].int_k_bar, ratio(11, 1200), &mut errs);
    for (i, (m, big)) in [(8, 16), (2, 4)].into_iter().enumerate() {
        match (b[i].m(), b[i].big_m()) {
            (Some(x), Some(y)) => {
                expect_exact(&format!("m{}", i + 1), &x, int(m), &mut errs);
                expect_exact(&format!("M{}", i + 1), &y, int(big), &mut errs);
            }
            _ => errs.push(format!("m/M of equation {} undefined", i + 1)),
        }
    }
    let want = [[ratio(1, 1), ratio(-1, 5), ratio(-1, 1), ratio(-4, 5)], [ratio(1, 1), ratio(-2, 5), int(0), ratio(-1, 1)]];
    for (i, w) in want.iter().enumerate() {
        let c = &r.basis[i].impulse_coefficients;
        let got = [&c.d1.0, &c.e1.0, &c.d2.0, &c.e2.0];
        if got.iter().zip(w).any(|(g, w)| *g != w) {
            errs.push(format!("impulse coefficients {}: {got:?}", i + 1));
        }
    }
    if dt >= Duration::from_secs(1) {
        errs.push(format!("runtime {dt:?} >= 1 s"));
    }
    if errs.is_empty() {
        Ok(format!("all exact, {dt:.0?}"))
    } else {
        Err(errs.join("; "))
    }
}

fn discrepancies(r: &AnalyzeReport) -> Outcome {
    let mut errs = Vec::new();
    let find = |k: &str| r.discrepancies.iter().find(|d| d.key == k);
    for (key, printed, computed) in [("alpha_tilde_delta_1", "634/3000", ratio(637, 3000)), ("c", "1/4", ratio(1, 7))] {
        match find(key) {
            None => errs.push(format!("{key} not flagged")),
            Some(d) => {
                if d.printed != printed || exact(&d.computed) != Some(&computed) {
                    errs.push(format!("{key}: printed {} computed {}", d.printed, d.computed));
                }
                if d.trace.is_empty() || d.trace.contains('\n') {
                    errs.push(format!("{key}: trace is not one line"));
                }
            }
        }
    }
    for src in ["computed", "override"] {
        if r.certificate(src).is_none() {
            errs.push(format!("no certificate with {src} c"));
        }
    }
    if errs.is_empty() {
        Ok("637/3000 vs 634/3000, 1/7 vs 1/4; certificates under both c".into())
    } else {
        Err(errs.join("; "))
    }
}

fn thresholds(r: &AnalyzeReport) -> Outcome {
    let t = &r.thresholds;
    let get = |v: &Option<Value>| v.as_ref().map_or(f64::NAN, Value::to_f64);
    let checks = [
        ("I0* i=1", get(&t[0].i0), 14.33, 14.33),
        ("I1 i=1", get(&t[0].i1), 2.46, 2.46),
        ("I1 i=2", get(&t[1].i1), 1.82, 1.82),
        ("I0 i=2", get(&t[1].i0), 3.85, 3.86),
    ];
    let mut shown = Vec::new();
    let mut ok = true;
    for (name, x, lo, hi) in checks {
        ok &= x >= lo - 0.02 && x <= hi + 0.02;
        shown.push(format!("{name} = {x:.4}"));
    }
    if ok {
        Ok(shown.join(", "))
    } else {
        Err(shown.join(", "))
    }
}

fn certificate(r: &AnalyzeReport, dt: Duration) -> Outcome {
    let c = r.certificate("computed").ok_or("no certificate")?;
    let rho: Vec<Rational> = c.rho.iter().map(|x| x.0.clone()).collect();
    if c.pattern != Pattern::S3 || rho != [ratio(1, 8), int(1), int(11)] {
        return Err(format!("got {} at {rho:?}", c.pattern));
    }
    if !c.conclusion.contains("at least two positive solutions") {
        return Err(format!("conclusion: {}", c.conclusion));
    }
    if dt >= Duration::from_secs(5) {
        return Err(format!("runtime {dt:?} >= 5 s"));
    }
    Ok(format!("S3 at (1/8, 1, 11): {}", c.conclusion))
}

fn run_cases(name: &str, n: usize, mut case: impl FnMut(usize) -> Result<(), String>) -> Result<String, String> {
    for k in 0..n {
        case(k).map_err(|e| format!("{name} case {k}: {e}"))?;
    }
    Ok(format!("{name} {n}"))
}

fn property_suites() -> Outcome {
    let mut done = Vec::new();
    let p = example();

    let mut r = rng(11);
    let mut kernels: Vec<_> = p.equations.iter().map(|e| e.basis.coeffs.clone()).collect();
    kernels.extend((0..3).map(|_| random_coeffs(&mut r)));
    done.push(run_cases("kernel grids (101x101)", kernels.len(), |k| check_kernel_grid(&kernels[k], 100))?);

    let mut r = rng(12);
    done.push(run_cases("measures", 200, |k| {
        let m = random_measure(&mut r, k % 2 == 1);
        let (w1, w2) = (random_poly(&mut r, false), random_poly(&mut r, false));
        let (a, b) = (ratio(r.gen_range(-9..10), 7), ratio(r.gen_range(-9..10), 5));
        check_measure(&m, &w1, &w2, &a, &b)?;
        if k % 2 == 0 {
            let tau = unit_rational(&mut r, 30);
            let m = StieltjesMeasure { atoms: m.atoms.into_iter().filter(|a| a.at != tau).collect(), density: None };
            check_augmentation(&m, &w1, &ratio(r.gen_range(1..9), 4), &ratio(r.gen_range(0..9), 3), &tau)?;
            let coeffs = random_coeffs(&mut r);
            let pts: Vec<f64> = (0..25).map(|_| r.gen_range(0.0..1.0)).collect();
            check_transform(&coeffs, &m, &pts, 1e-12)?;
        }
        Ok(())
    })?);

    let mut r = rng(13);
    done.push(run_cases("impulse reconstructions", 100, |_| {
        let coeffs = random_coeffs(&mut r);
        let tau = unit_rational(&mut r, 50);
        let i = ratio(r.gen_range(-50..50), r.gen_range(1..20));
        let n = ratio(r.gen_range(-50..50), r.gen_range(1..20));
        check_reconstruction(&coeffs, &tau, &i, &n)
    })?);

    let op = Operator::new(&p, 100).map_err(|e| e.to_string())?;
    let c = rational::to_f64(&cone_constants(&p).c.0);
    let mut r = rng(14);
    done.push(run_cases("cone invariance", 50, |_| {
        let scale = 10f64.powf(r.gen_range(-1.5..1.5));
        let (u, v) = random_cone_member(&mut r, &op, c, scale);
        check_cone_invariance(&op, &u, &v)
    })?);

    let mut r = rng(15);
    done.push(run_cases("sandwich", 200, |_| {
        let scale = 10f64.powf(r.gen_range(-1.0..1.5));
        let (u, v) = random_cone_member(&mut r, &op, c, scale);
        let rho = scale * r.gen_range(0.05..2.0) / c.sqrt();
        check_sandwich(&p, &u, &v, rho)
    })?);
    Ok(done.join(", "))
}

fn linear_convergence() -> Outcome {
    let exact = |t: f64| t * (1.0 - t) / 2.0;
    let mut errs = Vec::new();
    for n in [200, 400] {
        let mut p = linear();
        p.solver.grid_n = n;
        let s = run_solve(&p).map_err(|e| e.to_string())?;
        let sol = s.solutions.first().ok_or("linear test did not converge")?;
        errs.push(interpolant_error(&sol.u, exact));
    }
    let ratio = errs[0] / errs[1];
    let line = format!("error {:.3e} at n=200, ratio {ratio:.3}", errs[0]);
    if errs[0] < 1e-4 && (ratio - 4.0).abs() <= 0.5 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn example_solution() -> Outcome {
    let p = example();
    let (s, dt) = timed(|| run_solve(&p));
    let s = s.map_err(|e| e.to_string())?;
    let good = s.solutions.iter().find(|x| {
        let r = &x.residuals;
        let bc = r.bc_left.iter().chain(&r.bc_right).fold(0.0f64, |a, &b| a.max(b));
        let jump = r.jump_value.iter().chain(&r.jump_slope).fold(0.0f64, |a, &b| a.max(b));
        r.max_integral() < 1e-6 && jump < 1e-8 && bc < 1e-6 && x.membership.as_ref().is_some_and(|m| m.iter().all(|m| m.pass))
    });
    match good {
        Some(x) if dt < Duration::from_secs(30) => Ok(format!(
            "{} solution(s); integral {:.1e}, jump {:.1e}, bc {:.1e}, cone ok, {dt:.1?}",
            s.solutions.len(),
            x.residuals.max_integral(),
            x.residuals.jump_value.iter().chain(&x.residuals.jump_slope).fold(0.0f64, |a, &b| a.max(b)),
            x.residuals.bc_left.iter().chain(&x.residuals.bc_right).fold(0.0f64, |a, &b| a.max(b)),
        )),
        Some(_) => Err(format!("runtime {dt:?} >= 30 s")),
        None => Err(format!("no solution meets the residual bounds among {}", s.solutions.len())),
    }
}

fn determinism() -> Outcome {
    let file = concat!(env!("CARGO_MANIFEST_DIR"), "/examples_data/example.json");
    let run = || Command::new(env!("CARGO_BIN_EXE_ibvp")).args(["analyze", file]).output().map_err(|e| e.to_string());
    let (a, b) = (run()?, run()?);
    if a.stdout.is_empty() {
        return Err("empty report".into());
    }
    if a.stdout == b.stdout && a.status == b.status {
        Ok(format!("{} bytes identical", a.stdout.len()))
    } else {
        Err("reports differ".into())
    }
}

#[test]
fn acceptance() {
    let (report, dt) = analyze_example();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 exact constants", exact_constants(&report, dt)),
        ("2 documented discrepancies", discrepancies(&report)),
        ("3 thresholds", thresholds(&report)),
        ("4 S3 certificate", certificate(&report, dt)),
        ("5 property suites", property_suites()),
        ("6a linear test convergence", linear_convergence()),
        ("6b example solution", example_solution()),
        ("7 determinism", determinism()),
    ];
    let mut all = true;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                all = false;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    assert!(all, "acceptance criteria failed");
}

