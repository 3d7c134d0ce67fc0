#![allow(dead_code)]

use ibvp::cone::{cone_constants, cone_membership, in_k_rho, in_v_rho};
use ibvp::expr::Var;
use ibvp::grid::PiecewiseGridFunction;
use ibvp::impulse::{g_slope_exact, g_value_exact, impulse_coeffs};
use ibvp::measures::{augment_tilde, kernel_transform, Atom, FnTest, StieltjesMeasure};
use ibvp::poly::Poly;
use ibvp::problem::Problem;
use ibvp::rational::{self, int, ratio, Rational};
use ibvp::sl_kernel::{interval_constants, make_basis, GreenKernel, SlCoefficients};
use ibvp::solver::Operator;
use ibvp::value::Value;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn example() -> Problem {
    Problem::from_json(include_str!("../../examples_data/example.json")).unwrap()
}

pub fn linear() -> Problem {
    Problem::from_json(include_str!("../../examples_data/linear.json")).unwrap()
}

pub fn zero() -> Problem {
    Problem::from_json(include_str!("../../examples_data/zero.json")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p/q` with `0 < p/q < 1`, `q <= den`.
pub fn unit_rational(r: &mut impl Rng, den: i64) -> Rational {
    let q = r.gen_range(2..=den);
    ratio(r.gen_range(1..q), q)
}

/// Boundary coefficients with small integer entries that admit a basis.
pub fn random_coeffs(r: &mut impl Rng) -> SlCoefficients {
    loop {
        let c = SlCoefficients::from_ints(r.gen_range(0..5), r.gen_range(0..5), r.gen_range(0..5), r.gen_range(0..5));
        if make_basis(&c).is_ok() {
            return c;
        }
    }
}

// ---------- kernel ----------

/// Symmetry, unit slope defect and the window bounds on the `(n+1) x (n+1)` grid, exactly.
pub fn check_kernel_grid(coeffs: &SlCoefficients, n: i64) -> Result<(), String> {
    let basis = make_basis(coeffs).map_err(|e| e.to_string())?;
    let (a, b) = (ratio(1, 4), ratio(3, 4));
    let wc = interval_constants(&basis, &a, &b).map_err(|e| e.to_string())?;
    let k = GreenKernel::new(basis.clone());
    let phi = k.phi();
    let pts: Vec<Rational> = (0..=n).map(|j| ratio(j, n)).collect();
    for t in &pts {
        for s in &pts {
            let kts = k.eval(t, s);
            if kts != k.eval(s, t) {
                return Err(format!("{coeffs:?}: k({t},{s}) != k({s},{t})"));
            }
            let ps = phi.eval(s);
            if kts > ps {
                return Err(format!("{coeffs:?}: k({t},{s}) = {kts} > Phi = {ps}"));
            }
            if t >= &a && t <= &b && kts < &wc.c_phi.0 * &ps {
                return Err(format!("{coeffs:?}: k({t},{s}) = {kts} < c_Phi Phi"));
            }
        }
    }
    // t -> k(t,s) is affine on each side of s, so difference quotients are exact slopes
    let h = ratio(1, n);
    for s in &pts[1..pts.len() - 1] {
        let left = (k.eval(s, s) - k.eval(&(s - &h), s)) / &h;
        let right = (k.eval(&(s + &h), s) - k.eval(s, s)) / &h;
        if &right - &left != int(-1) {
            return Err(format!("{coeffs:?}: slope defect at s = {s} is {}", right - left));
        }
    }
    Ok(())
}

/// Closed-form `int_0^1 k(t,s) ds` against adaptive quadrature.
pub fn check_row_integral(coeffs: &SlCoefficients, t: f64) -> Result<(), String> {
    let k = GreenKernel::new(make_basis(coeffs).map_err(|e| e.to_string())?);
    let closed = k.row_integral(&int(0), &int(1)).eval_f64(t);
    let quad = ibvp::quadrature::integrate(|s| Ok(k.eval_f64(t, s)), 0.0, 1.0, &[t], 1e-13).map_err(|e| e.to_string())?;
    if (closed - quad).abs() > 1e-12 {
        return Err(format!("{coeffs:?} at t = {t}: closed {closed} vs quadrature {quad}"));
    }
    Ok(())
}

// ---------- measures ----------

pub fn random_measure(r: &mut impl Rng, with_density: bool) -> StieltjesMeasure {
    let atoms = (0..r.gen_range(1..4))
        .map(|_| Atom::new(unit_rational(r, 40), ratio(r.gen_range(0..40), 20)))
        .collect();
    let density = with_density.then(|| {
        let c = r.gen_range(0..5);
        ibvp::expr::Expression::parse(&format!("{c}/4 + s^2")).unwrap()
    });
    StieltjesMeasure { atoms, density }
}

pub fn random_poly(r: &mut impl Rng, nonnegative: bool) -> Poly {
    let deg = r.gen_range(0..4);
    let lo = if nonnegative { 0 } else { -20 };
    Poly::new((0..=deg).map(|_| ratio(r.gen_range(lo..20), r.gen_range(1..10))).collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Linearity and positivity of `apply` for one measure and a pair of test functions.
pub fn check_measure(m: &StieltjesMeasure, w1: &Poly, w2: &Poly, a: &Rational, b: &Rational) -> Result<(), String> {
    let combo = w1.scale(a).add(&w2.scale(b));
    let lhs = m.apply(&combo).map_err(|e| e.to_string())?;
    let r1 = m.apply(w1).map_err(|e| e.to_string())?;
    let r2 = m.apply(w2).map_err(|e| e.to_string())?;
    let rhs = Value::Exact(a.clone()).mul(&r1).add(&Value::Exact(b.clone()).mul(&r2));
    match (&lhs, &rhs) {
        (Value::Exact(x), Value::Exact(y)) if x != y => return Err(format!("exact linearity: {x} vs {y}")),
        _ if !close(lhs.to_f64(), rhs.to_f64(), 1e-12) => return Err(format!("linearity: {lhs} vs {rhs}")),
        _ => {}
    }
    // a nonnegative, non-polynomial test function
    let pos = FnTest(|x: f64| (3.0 * x).sin().abs() + x * x);
    let v = m.apply(&pos).map_err(|e| e.to_string())?.to_f64();
    if v < 0.0 {
        return Err(format!("positivity: apply = {v}"));
    }
    Ok(())
}

/// `apply(augment_tilde(alpha,h2,p12,tau), w) = h2 alpha[w] + p12 w(tau)`, exactly.
pub fn check_augmentation(m: &StieltjesMeasure, w: &Poly, h2: &Rational, p12: &Rational, tau: &Rational) -> Result<(), String> {
    let aug = augment_tilde(m, h2, p12, tau).apply(w).map_err(|e| e.to_string())?;
    let base = m.apply(w).map_err(|e| e.to_string())?;
    let expect = Value::Exact(h2.clone()).mul(&base).add(&Value::Exact(p12 * w.eval(tau)));
    if aug != expect {
        return Err(format!("augmented {aug} vs {expect}"));
    }
    Ok(())
}

/// `K_m(s) = m[t -> k(t,s)]` at the given points.
pub fn check_transform(coeffs: &SlCoefficients, m: &StieltjesMeasure, points: &[f64], tol: f64) -> Result<(), String> {
    let k = GreenKernel::new(make_basis(coeffs).map_err(|e| e.to_string())?);
    let tr = kernel_transform(&k, m);
    for &s in points {
        let direct = match &m.density {
            None => m.apply(&FnTest(|t: f64| k.eval_f64(t, s))).map_err(|e| e.to_string())?.to_f64(),
            Some(d) => {
                // k(., s) * density is a cubic on each side of s, where Simpson's rule is exact
                let f = |t: f64| k.eval_f64(t, s) * d.eval_at(Var::S, t).unwrap();
                let simpson = |a: f64, b: f64| (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
                let atoms: f64 = m.atoms.iter().map(|a| rational::to_f64(&a.weight) * k.eval_f64(rational::to_f64(&a.at), s)).sum();
                atoms + simpson(0.0, s) + simpson(s, 1.0)
            }
        };
        let via = tr.eval(s).map_err(|e| e.to_string())?;
        if !close(direct, via, tol) {
            return Err(format!("transform at s = {s}: {via} vs {direct}"));
        }
    }
    Ok(())
}

// ---------- impulses ----------

/// The jump of `G` and of its slope at `tau` equal the prescribed `I` and `N` values.
pub fn check_reconstruction(coeffs: &SlCoefficients, tau: &Rational, i: &Rational, n: &Rational) -> Result<(), String> {
    let basis = make_basis(coeffs).map_err(|e| e.to_string())?;
    let c = impulse_coeffs(&basis, tau);
    let j1 = &c.d1.0 * i + &c.e1.0 * n;
    let j2 = &c.d2.0 * i + &c.e2.0 * n;
    // independent oracle: G = delta*j2 left of tau, gamma*j1 right of it
    let dv = basis.gamma_at(tau) * &j1 - basis.delta_at(tau) * &j2;
    let ds = basis.gamma.slope() * &j1 - basis.delta.slope() * &j2;
    if &dv != i || &ds != n {
        return Err(format!("{coeffs:?}, tau = {tau}: jumps ({dv}, {ds}) vs ({i}, {n})"));
    }
    let jumps = (j1, j2);
    let lib_dv = g_value_exact(&basis, tau, &jumps, tau, true) - g_value_exact(&basis, tau, &jumps, tau, false);
    let lib_ds = g_slope_exact(&basis, tau, &jumps, tau, true) - g_slope_exact(&basis, tau, &jumps, tau, false);
    if &lib_dv != i || &lib_ds != n {
        return Err(format!("library jumps ({lib_dv}, {lib_ds}) vs ({i}, {n})"));
    }
    // scaling the boundary operators by k scales the coefficients by k, leaving G unchanged
    let k = int(3) / int(7);
    let scaled = SlCoefficients::new(&coeffs.a1 * &k, &coeffs.b1 * &k, &coeffs.a2 * &k, &coeffs.b2 * &k);
    let c2 = impulse_coeffs(&make_basis(&scaled).map_err(|e| e.to_string())?, tau);
    let got = [&c2.d1.0, &c2.e1.0, &c2.d2.0, &c2.e2.0];
    let want = [&c.d1.0, &c.e1.0, &c.d2.0, &c.e2.0].map(|x| x * &k);
    if got.iter().zip(&want).any(|(g, w)| *g != w) {
        return Err(format!("scaling by 3/7: {c:?} vs {c2:?}"));
    }
    Ok(())
}

// ---------- cone ----------

/// A random pair in the cone on `op`'s grid with sup norm at most about `scale`.
pub fn random_cone_member(r: &mut impl Rng, op: &Operator, c: f64, scale: f64) -> (PiecewiseGridFunction, PiecewiseGridFunction) {
    let grid = op.grid.clone();
    let taus: Vec<f64> = op.problem.taus().iter().map(rational::to_f64).collect();
    let mut one = |tau: f64| {
        let base = r.gen_range(0.05..1.0) * scale;
        let spread = base * (1.0 - c) / c * r.gen_range(0.0..1.0);
        let knots: Vec<f64> = (0..7).map(|_| r.gen_range(0.0..1.0)).collect();
        let step = r.gen_range(-0.5..0.5);
        let g = grid.clone();
        let nodes = g.nodes().to_vec();
        let values = nodes
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let x = t * 6.0;
                let j = (x.floor() as usize).min(5);
                let w = x - j as f64;
                let mut psi = knots[j] * (1.0 - w) + knots[j + 1] * w;
                if t > tau || (t == tau && g.is_right_entry(k)) {
                    psi = (psi + step).clamp(0.0, 1.0);
                }
                base + spread * psi
            })
            .collect();
        PiecewiseGridFunction::new(grid.clone(), values)
    };
    (one(taus[0]), one(taus[1]))
}

/// `T` maps the pair into the cone (within `1e-8` times its size).
pub fn check_cone_invariance(op: &Operator, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction) -> Result<(), String> {
    let p = op.problem;
    let c = rational::to_f64(&cone_constants(p).c.0);
    for (i, w) in [u, v].into_iter().enumerate() {
        let win = &p.equations[i].window;
        let m = cone_membership(w, (rational::to_f64(&win.0), rational::to_f64(&win.1)), c, 1e-12 * w.sup_norm());
        if !m.pass {
            return Err(format!("generated input {} is not in the cone: {:?}", i + 1, m.witness));
        }
    }
    let (tu, tv) = op.apply(u, v).map_err(|e| e.to_string())?;
    for (i, w) in [tu, tv].iter().enumerate() {
        let win = &p.equations[i].window;
        let tol = 1e-8 * w.sup_norm().max(1.0);
        let m = cone_membership(w, (rational::to_f64(&win.0), rational::to_f64(&win.1)), c, tol);
        if !m.pass {
            return Err(format!("T component {} leaves the cone: {:?}", i + 1, m.witness));
        }
    }
    Ok(())
}

/// `K_rho` inside `V_rho` inside `K_{rho/c}` for one cone member.
pub fn check_sandwich(p: &Problem, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction, rho: f64) -> Result<(), String> {
    let c = rational::to_f64(&cone_constants(p).c.0);
    let tol = 1e-12 * rho.max(1.0);
    if in_k_rho(u, v, rho) && !in_v_rho(p, u, v, rho) {
        return Err(format!("in K_rho but not V_rho at rho = {rho}"));
    }
    if in_v_rho(p, u, v, rho) && !in_k_rho(u, v, rho / c + tol) {
        return Err(format!("in V_rho but norm {} >= rho/c = {}", u.sup_norm().max(v.sup_norm()), rho / c));
    }
    Ok(())
}

// ---------- solver ----------

/// Sup error of the piecewise-linear interpolant of `u` against `exact`, at nodes and panel midpoints.
pub fn interpolant_error(u: &PiecewiseGridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    let x = u.grid.nodes();
    let mut err: f64 = 0.0;
    for k in 0..x.len() {
        err = err.max((u.values[k] - exact(x[k])).abs());
        if k + 1 < x.len() && x[k + 1] > x[k] {
            let m = 0.5 * (x[k] + x[k + 1]);
            err = err.max((0.5 * (u.values[k] + u.values[k + 1]) - exact(m)).abs());
        }
    }
    err
}

/// `|u* - T u*|` for the known solution `u* = (t - t^4)/12` of `-u'' = t^2` with Dirichlet data.
pub fn known_solution_residual(n: usize) -> f64 {
    let text = include_str!("../../examples_data/linear.json").replace(r#""f": "1""#, r#""f": "t^2""#);
    let p = Problem::from_json(&text).unwrap();
    let op = Operator::new(&p, n).unwrap();
    let u = PiecewiseGridFunction::from_fn(op.grid.clone(), |t| (t - t.powi(4)) / 12.0);
    let v = op.constant(0.0);
    let (tu, _) = op.apply(&u, &v).unwrap();
    tu.max_abs_diff(&u)
}
