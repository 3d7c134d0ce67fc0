//! Cone constants `c_i`, `c` and cone membership of grid functions.

use serde::Serialize;

use crate::grid::PiecewiseGridFunction;
use crate::problem::{Equation, Problem};
use crate::rational::{self, Rat, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationCone {
    pub window: (Rat, Rat),
    pub c_phi: Rat,
    pub c_gamma: Rat,
    pub c_delta: Rat,
    /// `c_gamma |gamma| p11 / max{|gamma| p12, |delta| p22}`.
    pub c_impulse: Rat,
    pub c: Rat,
    pub gamma_norm: Rat,
    pub delta_norm: Rat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeData {
    pub equations: [EquationCone; 2],
    pub c: Rat,
    /// One-line derivation of `c`.
    pub trace: String,
}

pub fn equation_cone(eq: &Equation) -> EquationCone {
    let wc = &eq.window_constants;
    let gamma_norm = eq.basis.gamma_norm();
    let delta_norm = eq.basis.delta_norm();
    let imp = &eq.impulse;
    let denom = (&gamma_norm * &imp.p12).max(&delta_norm * &imp.p22);
    let c_impulse = &wc.c_gamma.0 * &gamma_norm * &imp.p11 / denom;
    let c = [&wc.c_phi.0, &wc.c_gamma.0, &wc.c_delta.0, &c_impulse]
        .into_iter()
        .min()
        .cloned()
        .expect("four candidates");
    EquationCone {
        window: (Rat(eq.window.0.clone()), Rat(eq.window.1.clone())),
        c_phi: wc.c_phi.clone(),
        c_gamma: wc.c_gamma.clone(),
        c_delta: wc.c_delta.clone(),
        c_impulse: Rat(c_impulse),
        c: Rat(c),
        gamma_norm: Rat(gamma_norm),
        delta_norm: Rat(delta_norm),
    }
}

pub fn cone_constants(problem: &Problem) -> ConeData {
    let e1 = equation_cone(&problem.equations[0]);
    let e2 = equation_cone(&problem.equations[1]);
    let c = e1.c.clone().min(e2.c.clone());
    let part = |i: usize, e: &EquationCone| {
        format!(
            "c{i} = min{{c_Phi, c_gamma, c_delta, c_gamma*|gamma|*p11/max{{|gamma|*p12, |delta|*p22}}}} = min{{{}, {}, {}, {}}} = {}",
            e.c_phi, e.c_gamma, e.c_delta, e.c_impulse, e.c
        )
    };
    let trace = format!("{}; {}; c = min{{c1, c2}} = {}", part(1, &e1), part(2, &e2), c);
    ConeData { equations: [e1, e2], c, trace }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub pass: bool,
    pub min_value: f64,
    pub window_min: f64,
    pub sup_norm: f64,
    /// Where and why membership fails.
    pub witness: Option<String>,
}

/// `u >= -tol` everywhere and `min_[a,b] u >= c |u| - tol`.
pub fn cone_membership(u: &PiecewiseGridFunction, window: (f64, f64), c: f64, tol: f64) -> Membership {
    let (min_value, at) = u.min();
    let (window_min, wat) = u.min_on(window.0, window.1);
    let sup_norm = u.sup_norm();
    let witness = if min_value < -tol {
        Some(format!("negative value {min_value:e} at t = {}", u.grid.nodes()[at]))
    } else if window_min < c * sup_norm - tol {
        Some(format!("window minimum {window_min} at t = {wat} is below c*|u| = {}", c * sup_norm))
    } else {
        None
    };
    Membership { pass: witness.is_none(), min_value, window_min, sup_norm, witness }
}

/// Membership of a pair in `K` using each equation's window and the global `c`.
pub fn pair_membership(problem: &Problem, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction, c: &Rational, tol: f64) -> [Membership; 2] {
    let c = rational::to_f64(c);
    let win = |i: usize| {
        let w = &problem.equations[i].window;
        (rational::to_f64(&w.0), rational::to_f64(&w.1))
    };
    [cone_membership(u, win(0), c, tol), cone_membership(v, win(1), c, tol)]
}

/// `|(u,v)| < rho`.
pub fn in_k_rho(u: &PiecewiseGridFunction, v: &PiecewiseGridFunction, rho: f64) -> bool {
    u.sup_norm().max(v.sup_norm()) < rho
}

/// Both window minima below `rho`.
pub fn in_v_rho(problem: &Problem, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction, rho: f64) -> bool {
    let w = |i: usize| {
        let w = &problem.equations[i].window;
        (rational::to_f64(&w.0), rational::to_f64(&w.1))
    };
    let (a1, b1) = w(0);
    let (a2, b2) = w(1);
    u.min_on(a1, b1).0 < rho && v.min_on(a2, b2).0 < rho
}
