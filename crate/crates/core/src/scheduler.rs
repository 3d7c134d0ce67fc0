//! Multiplicity patterns S1..S6 and rho-ladder certificates.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionContext, ConditionError, ConditionKind, ConditionReport, Verdict};
use crate::rational::{self, Rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

/// Condition required at one position of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// I0, or failing that I0*.
    I0OrStar,
    I1,
    I0,
}

/// `rho_j < rho_{j+1}` or `rho_j / c < rho_{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    Plain,
    OverC,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [Pattern::S1, Pattern::S2, Pattern::S3, Pattern::S4, Pattern::S5, Pattern::S6];

    pub fn steps(self) -> &'static [Step] {
        use Step::*;
        match self {
            Pattern::S1 => &[I0OrStar, I1],
            Pattern::S2 => &[I1, I0],
            Pattern::S3 => &[I0OrStar, I1, I0],
            Pattern::S4 => &[I1, I0, I1],
            Pattern::S5 => &[I0OrStar, I1, I0, I1],
            Pattern::S6 => &[I1, I0, I1, I0],
        }
    }

    pub fn gaps(self) -> &'static [Gap] {
        use Gap::*;
        match self {
            Pattern::S1 => &[OverC],
            Pattern::S2 => &[Plain],
            Pattern::S3 => &[OverC, Plain],
            Pattern::S4 => &[Plain, OverC],
            Pattern::S5 => &[OverC, Plain, OverC],
            Pattern::S6 => &[Plain, OverC, Plain],
        }
    }

    pub fn len(self) -> usize {
        self.steps().len()
    }

    pub fn min_solutions(self) -> usize {
        match self {
            Pattern::S1 | Pattern::S2 => 1,
            Pattern::S3 | Pattern::S4 => 2,
            Pattern::S5 | Pattern::S6 => 3,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown pattern `{s}` (expected S1..S6)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCheck {
    pub relation: String,
    pub lhs: Rat,
    pub rhs: Rat,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderStep {
    pub rho: Rat,
    pub required: Step,
    pub used: ConditionKind,
    pub report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pattern: Pattern,
    pub c: Rat,
    pub rho: Vec<Rat>,
    pub steps: Vec<LadderStep>,
    pub gaps: Vec<GapCheck>,
    pub min_solutions: usize,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("pattern {pattern} needs {expected} radii, got {got}")]
    WrongLength { pattern: Pattern, expected: usize, got: usize },
    #[error("radius {0} is not positive")]
    NonPositive(String),
    #[error("gap violated: {0}")]
    Gap(String),
    #[error("{condition} fails at rho = {rho} (position {position}): {detail}")]
    Condition { position: usize, rho: String, condition: &'static str, detail: String },
    #[error(transparent)]
    Evaluation(#[from] ConditionError),
}

fn gap_checks(pattern: Pattern, rho: &[Rational], c: &Rational) -> Vec<GapCheck> {
    pattern
        .gaps()
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let (lhs, relation) = match g {
                Gap::Plain => (rho[j].clone(), format!("rho{} < rho{}", j + 1, j + 2)),
                Gap::OverC => (&rho[j] / c, format!("rho{}/c < rho{}", j + 1, j + 2)),
            };
            let holds = lhs < rho[j + 1];
            GapCheck { relation, lhs: Rat(lhs), rhs: Rat(rho[j + 1].clone()), holds }
        })
        .collect()
}

fn summarize(r: &ConditionReport) -> String {
    r.equations
        .iter()
        .map(|e| format!("equation {}: lhs = {} ({:?})", e.equation, e.lhs, e.verdict).to_lowercase())
        .collect::<Vec<_>>()
        .join("; ")
}

fn conclusion(n: usize) -> String {
    match n {
        1 => "at least one positive solution".into(),
        2 => "at least two positive solutions".into(),
        _ => "at least three positive solutions".into(),
    }
}

/// Runs the condition required by `step` at `rho`, returning the condition
/// actually satisfied (or the last report on failure).
fn check_step(ctx: &ConditionContext, step: Step, rho: &Rational, c: &Rational) -> Result<(bool, ConditionReport), ConditionError> {
    match step {
        Step::I1 => {
            let r = ctx.check(ConditionKind::I1, rho, c)?;
            Ok((r.verdict == Verdict::Pass, r))
        }
        Step::I0 => {
            let r = ctx.check(ConditionKind::I0, rho, c)?;
            Ok((r.verdict == Verdict::Pass, r))
        }
        Step::I0OrStar => {
            let r = ctx.check(ConditionKind::I0, rho, c)?;
            if r.verdict == Verdict::Pass {
                return Ok((true, r));
            }
            let s = ctx.check(ConditionKind::I0Star, rho, c)?;
            Ok((s.verdict == Verdict::Pass, s))
        }
    }
}

/// Checks a fixed ladder against a pattern using cone constant `c`.
pub fn certify(ctx: &ConditionContext, pattern: Pattern, rho: &[Rational], c: &Rational) -> Result<Certificate, CertifyError> {
    if rho.len() != pattern.len() {
        return Err(CertifyError::WrongLength { pattern, expected: pattern.len(), got: rho.len() });
    }
    if let Some(r) = rho.iter().find(|r| **r <= Rational::from_integer(0.into())) {
        return Err(CertifyError::NonPositive(rational::format(r)));
    }
    let gaps = gap_checks(pattern, rho, c);
    if let Some(g) = gaps.iter().find(|g| !g.holds) {
        return Err(CertifyError::Gap(format!("{} needs {} < {}", g.relation, g.lhs, g.rhs)));
    }
    let mut steps = Vec::with_capacity(rho.len());
    for (j, (&step, r)) in pattern.steps().iter().zip(rho).enumerate() {
        let (ok, report) = check_step(ctx, step, r, c)?;
        if !ok {
            return Err(CertifyError::Condition {
                position: j + 1,
                rho: rational::format(r),
                condition: report.condition.label(),
                detail: summarize(&report),
            });
        }
        steps.push(LadderStep { rho: Rat(r.clone()), required: step, used: report.condition, report });
    }
    let n = pattern.min_solutions();
    Ok(Certificate {
        pattern,
        c: Rat(c.clone()),
        rho: rho.iter().cloned().map(Rat).collect(),
        steps,
        gaps,
        min_solutions: n,
        conclusion: conclusion(n),
    })
}

/// First ladder (in lexicographic grid order) that certifies `pattern`.
pub fn search_ladder(
    ctx: &ConditionContext,
    pattern: Pattern,
    grid: &[Rational],
    c: &Rational,
) -> Result<Option<Certificate>, ConditionError> {
    let mut pts: Vec<Rational> = grid.iter().filter(|r| **r > Rational::from_integer(0.into())).cloned().collect();
    pts.sort();
    pts.dedup();
    if pts.len() < pattern.len() {
        return Ok(None);
    }
    // verdicts for every (point, step) pair, computed concurrently
    let kinds = [Step::I0OrStar, Step::I1, Step::I0];
    let table: Vec<[bool; 3]> = pts
        .par_iter()
        .map(|r| -> Result<[bool; 3], ConditionError> {
            let i1 = check_step(ctx, Step::I1, r, c)?.0;
            let i0 = ctx.check(ConditionKind::I0, r, c)?.verdict == Verdict::Pass;
            let star = i0 || ctx.check(ConditionKind::I0Star, r, c)?.verdict == Verdict::Pass;
            Ok([star, i1, i0])
        })
        .collect::<Result<_, _>>()?;
    let ok = |k: usize, step: Step| table[k][kinds.iter().position(|s| *s == step).unwrap()];

    let steps = pattern.steps();
    let gaps = pattern.gaps();
    let mut idx: Vec<usize> = Vec::with_capacity(steps.len());
    // depth-first over increasing index tuples, pruning on verdicts and gaps
    fn dfs(
        idx: &mut Vec<usize>,
        pts: &[Rational],
        steps: &[Step],
        gaps: &[Gap],
        c: &Rational,
        ok: &dyn Fn(usize, Step) -> bool,
    ) -> bool {
        let depth = idx.len();
        if depth == steps.len() {
            return true;
        }
        let start = idx.last().map_or(0, |k| k + 1);
        for k in start..pts.len() {
            if !ok(k, steps[depth]) {
                continue;
            }
            if let Some(&prev) = idx.last() {
                let lhs = match gaps[depth - 1] {
                    Gap::Plain => pts[prev].clone(),
                    Gap::OverC => &pts[prev] / c,
                };
                if lhs >= pts[k] {
                    continue;
                }
            }
            idx.push(k);
            if dfs(idx, pts, steps, gaps, c, ok) {
                return true;
            }
            idx.pop();
        }
        false
    }
    if !dfs(&mut idx, &pts, steps, gaps, c, &ok) {
        return Ok(None);
    }
    let ladder: Vec<Rational> = idx.iter().map(|&k| pts[k].clone()).collect();
    match certify(ctx, pattern, &ladder, c) {
        Ok(cert) => Ok(Some(cert)),
        Err(CertifyError::Evaluation(e)) => Err(e),
        Err(e) => unreachable!("search produced an invalid ladder: {e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Problem;
    use crate::rational::{int, ratio};

    fn example() -> Problem {
        Problem::from_json(include_str!("../examples_data/example.json")).unwrap()
    }

    #[test]
    fn pattern_table() {
        for p in Pattern::ALL {
            assert_eq!(p.gaps().len() + 1, p.len());
            assert_eq!(p.to_string().parse::<Pattern>().unwrap(), p);
        }
        assert_eq!(Pattern::ALL.map(Pattern::len), [2, 2, 3, 3, 4, 4]);
        assert_eq!(Pattern::ALL.map(Pattern::min_solutions), [1, 1, 2, 2, 3, 3]);
        assert!("s7".parse::<Pattern>().is_err());
        assert_eq!("s3".parse::<Pattern>().unwrap(), Pattern::S3);
    }

    #[test]
    fn example_s3_certificate() {
        let p = example();
        let ctx = ConditionContext::for_problem(&p).unwrap();
        let ladder = [ratio(1, 8), int(1), int(11)];
        for (c, first_gap) in [(ratio(1, 4), ratio(1, 2)), (ratio(1, 7), ratio(7, 8))] {
            let cert = certify(&ctx, Pattern::S3, &ladder, &c).unwrap();
            assert_eq!(cert.min_solutions, 2);
            assert_eq!(cert.conclusion, "at least two positive solutions");
            assert_eq!(cert.gaps[0].lhs.0, first_gap);
            assert_eq!(cert.steps[0].used, ConditionKind::I0Star);
            assert_eq!(cert.steps[1].used, ConditionKind::I1);
            assert_eq!(cert.steps[2].used, ConditionKind::I0);
        }
    }

    #[test]
    fn certify_errors() {
        let p = example();
        let ctx = ConditionContext::for_problem(&p).unwrap();
        let c = ratio(1, 7);
        assert!(matches!(
            certify(&ctx, Pattern::S3, &[int(1), int(2)], &c),
            Err(CertifyError::WrongLength { expected: 3, got: 2, .. })
        ));
        assert!(matches!(certify(&ctx, Pattern::S1, &[int(1), int(7)], &c), Err(CertifyError::Gap(_))));
        // I1 fails at large radius
        assert!(matches!(
            certify(&ctx, Pattern::S1, &[ratio(1, 8), int(11)], &c),
            Err(CertifyError::Condition { position: 2, condition: "I1", .. })
        ));
    }

    #[test]
    fn example_search() {
        let p = example();
        let ctx = ConditionContext::for_problem(&p).unwrap();
        let grid: Vec<Rational> = (0..13).map(|k| ratio(1 << k, 32)).collect();
        let cert = search_ladder(&ctx, Pattern::S3, &grid, &ratio(1, 7)).unwrap().unwrap();
        assert_eq!(cert.rho.iter().map(|r| r.0.clone()).collect::<Vec<_>>(), vec![ratio(1, 32), int(1), int(16)]);
        assert!(search_ladder(&ctx, Pattern::S3, &[], &ratio(1, 7)).unwrap().is_none());
        // repeated searches agree
        let again = search_ladder(&ctx, Pattern::S3, &grid, &ratio(1, 7)).unwrap().unwrap();
        assert_eq!(cert, again);
    }
}
