//! Node sets on `[0,1]` with doubled entries at impulse points, and
//! piecewise-linear functions on them.

use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::measures::TestFunction;
use crate::rational::{self, int, ratio, Rational};

/// Ordered entries; each impulse point appears twice (left value, then right value).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    exact: Vec<Rational>,
    nodes: Vec<f64>,
    taus: Vec<Rational>,
}

/// Union of uniform `n`-panel partitions of `[0, tau]` and `[tau, 1]` for every `tau`.
pub fn build_grid(taus: &[Rational], n: usize) -> Grid {
    assert!(n >= 1, "at least one panel per piece");
    let mut pos: Vec<Rational> = vec![int(0), int(1)];
    for tau in taus {
        for k in 0..=n {
            let f = ratio(k as i64, n as i64);
            pos.push(tau * &f);
            pos.push(tau + (int(1) - tau) * &f);
        }
    }
    Grid::from_positions(pos, taus)
}

impl Grid {
    /// Grid from arbitrary positions in `[0,1]`; `0`, `1` and the taus are added.
    pub fn from_positions(mut pos: Vec<Rational>, taus: &[Rational]) -> Grid {
        pos.push(int(0));
        pos.push(int(1));
        pos.extend(taus.iter().cloned());
        pos.retain(|x| !x.is_negative() && x <= &int(1));
        pos.sort();
        pos.dedup();
        let mut taus: Vec<Rational> = taus
            .iter()
            .filter(|t| t.is_positive() && *t < &int(1))
            .cloned()
            .collect();
        taus.sort();
        taus.dedup();
        let mut exact = Vec::with_capacity(pos.len() + taus.len());
        for x in pos {
            if taus.contains(&x) {
                exact.push(x.clone());
            }
            exact.push(x);
        }
        let nodes = exact.iter().map(rational::to_f64).collect();
        Grid { exact, nodes, taus }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn exact_nodes(&self) -> &[Rational] {
        &self.exact
    }

    pub fn taus(&self) -> &[Rational] {
        &self.taus
    }

    pub fn distinct_positions(&self) -> usize {
        self.len() - self.taus.len()
    }

    /// Index of the left entry of the doubled node at `tau`.
    pub fn jump_index(&self, tau: &Rational) -> Option<usize> {
        if !self.taus.contains(tau) {
            return None;
        }
        self.exact.iter().position(|x| x == tau)
    }

    /// True for the second (right-value) entry of a doubled node.
    pub fn is_right_entry(&self, k: usize) -> bool {
        k > 0 && self.exact[k] == self.exact[k - 1]
    }

    /// True when entry `k` lies in `(tau, 1]` in the sense of the right-limit convention.
    pub fn after(&self, k: usize, tau: &Rational) -> bool {
        self.exact[k] > *tau || (self.exact[k] == *tau && self.is_right_entry(k))
    }

    /// Largest panel width.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Entry indices `(i, i+1)` bracketing `t` for interpolation; at a doubled node
    /// the left entry is returned as an exact hit.
    fn locate(&self, t: f64) -> Locate {
        let n = &self.nodes;
        let k = n.partition_point(|&x| x < t);
        if k < n.len() && n[k] == t {
            return Locate::At(k);
        }
        if k == 0 {
            return Locate::At(0);
        }
        if k >= n.len() {
            return Locate::At(n.len() - 1);
        }
        Locate::Between(k - 1, k)
    }
}

enum Locate {
    At(usize),
    Between(usize, usize),
}

/// Values at the grid entries, linearly interpolated between them.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseGridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl PiecewiseGridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "one value per grid entry");
        PiecewiseGridFunction { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&t| f(t)).collect();
        PiecewiseGridFunction { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        PiecewiseGridFunction { grid, values: vec![c; n] }
    }

    /// Value at `t`; at a doubled node this is the left value.
    pub fn at(&self, t: f64) -> f64 {
        match self.grid.locate(t) {
            Locate::At(k) => self.values[k],
            Locate::Between(i, j) => {
                let (x0, x1) = (self.grid.nodes[i], self.grid.nodes[j]);
                let w = (t - x0) / (x1 - x0);
                self.values[i] * (1.0 - w) + self.values[j] * w
            }
        }
    }

    /// `(left, right)` values at an impulse point.
    pub fn sides(&self, tau: &Rational) -> Option<(f64, f64)> {
        self.grid.jump_index(tau).map(|k| (self.values[k], self.values[k + 1]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest value and the entry where it occurs.
    pub fn min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, at), (k, &v)| if v < m { (v, k) } else { (m, at) })
    }

    /// Minimum over `[a, b]`, including the interpolated endpoint values.
    pub fn min_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut best = (self.at(a), a);
        let right = self.at(b);
        if right < best.0 {
            best = (right, b);
        }
        for (k, &x) in self.grid.nodes.iter().enumerate() {
            if x >= a && x <= b && self.values[k] < best.0 {
                best = (self.values[k], x);
            }
        }
        best
    }

    pub fn max_abs_diff(&self, o: &PiecewiseGridFunction) -> f64 {
        self.values
            .iter()
            .zip(&o.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PiecewiseGridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `(1 - lambda) self + lambda other`.
    pub fn blend(&self, other: &PiecewiseGridFunction, lambda: f64) -> Self {
        PiecewiseGridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect(),
        }
    }
}

impl TestFunction for PiecewiseGridFunction {
    fn value(&self, t: f64) -> f64 {
        self.at(t)
    }

    fn discontinuities(&self) -> Vec<Rational> {
        self.grid
            .taus
            .iter()
            .filter(|tau| self.sides(tau).is_some_and(|(l, r)| l != r))
            .cloned()
            .collect()
    }

    fn kinks(&self) -> Vec<f64> {
        self.grid.nodes.clone()
    }
}

/// Whether all entries are zero.
pub fn is_zero(f: &PiecewiseGridFunction) -> bool {
    f.values.iter().all(|v| v.is_zero())
}
