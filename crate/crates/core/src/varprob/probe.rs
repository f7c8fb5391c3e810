//! Capacity of a basepoint against the outer shell of an exhaustion.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::space::{FiniteMetricSpace, PointId};

use super::capacity::{capacity, CapacityProblem};
use super::{VarError, DEFAULT_EPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    /// Largest distance from the basepoint.
    pub n: f64,
    pub points: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final relative gap of the solve.
    pub gap: f64,
    /// Every lower bound of the solve stayed below every upper bound.
    #[serde(rename = "weaklyDual")]
    pub weakly_dual: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ParabolicConsistent,
    NonParabolicConsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub nonincreasing: bool,
    #[serde(rename = "strictlyDecreasing")]
    pub strictly_decreasing: bool,
    /// `(max - min) / max` over the values.
    pub variation: f64,
    /// Least-squares slope of `log value` against `log n`.
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

/// Relative variation below which the values count as flat.
const FLAT: f64 = 0.1;

impl ProbeReport {
    /// Columns `n,value,lower,upper`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,lower,upper\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.value, r.lower, r.upper);
        }
        out
    }
}

/// Outermost shell `{x : d(o, x) = max}` around the basepoint.
pub fn outer_shell(space: &FiniteMetricSpace, o: PointId) -> Vec<PointId> {
    let far = space.points().map(|x| space.dist(o, x)).fold(0.0, f64::max);
    space.points().filter(|&x| x != o && space.dist(o, x) >= far - 1e-9).collect()
}

/// Runs capacity on each space of an increasing family. Each space needs a
/// basepoint; its boundary is the outer shell.
pub fn parabolicity_probe(
    family: &[FiniteMetricSpace],
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    eps: Option<f64>,
) -> Result<ProbeReport, VarError> {
    let mut rows = Vec::with_capacity(family.len());
    for space in family {
        let o = space.basepoint().ok_or_else(|| VarError::Invalid(format!("space {} has no basepoint", space.name())))?;
        let shell = outer_shell(space, o);
        let mut problem = CapacityProblem::new(vec![o], shell, p, l, r_min, r_max);
        problem.eps = eps.unwrap_or(DEFAULT_EPS);
        let res = capacity(space, &problem)?;
        rows.push(ProbeRow {
            n: space.points().map(|x| space.dist(o, x)).fold(0.0, f64::max),
            points: space.len(),
            value: res.value,
            lower: res.lower,
            upper: res.value,
            converged: res.trace.converged,
            iterations: res.trace.iterations,
            gap: res.trace.gap,
            weakly_dual: res.trace.weakly_dual(),
        });
    }
    Ok(summarise(rows))
}

pub(crate) fn summarise(rows: Vec<ProbeRow>) -> ProbeReport {
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0]);
    let strictly_decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.n > 0.0 && r.value > 0.0).map(|r| (r.n.ln(), r.value.ln())).collect();
    let slope = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let verdict = if rows.len() < 2 {
        Verdict::Inconclusive
    } else if strictly_decreasing && slope.is_some_and(|s| s < 0.0) {
        Verdict::ParabolicConsistent
    } else if variation < FLAT {
        Verdict::NonParabolicConsistent
    } else {
        Verdict::Inconclusive
    };
    ProbeReport { rows, nonincreasing, strictly_decreasing, variation, slope, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};

    fn paths(ns: &[usize]) -> Vec<FiniteMetricSpace> {
        ns.iter().map(|&n| gen_space(&SpaceSpec::Path { n: n + 1 }).unwrap().with_basepoint(0).unwrap()).collect()
    }

    #[test]
    fn single_space_is_inconclusive() {
        let r = parabolicity_probe(&paths(&[4]), 2.0, 2.0, 1.0, 1.0, None).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.rows[0].n, 4.0);
    }

    #[test]
    fn path_family_decreases_for_p2() {
        let r = parabolicity_probe(&paths(&[4, 8, 16]), 2.0, 2.0, 1.0, 1.0, None).unwrap();
        assert!(r.strictly_decreasing, "{r:?}");
        assert_eq!(r.verdict, Verdict::ParabolicConsistent);
        assert!(r.to_csv().starts_with("n,value,lower,upper\n4,"));
    }

    #[test]
    fn needs_basepoint() {
        let m = vec![0.0, 1.0, 1.0, 0.0];
        let s = vec![FiniteMetricSpace::from_matrix(2, m, crate::space::SpaceKind::ExplicitMatrix).unwrap()];
        assert!(parabolicity_probe(&s, 2.0, 2.0, 1.0, 1.0, None).is_err());
    }
}
