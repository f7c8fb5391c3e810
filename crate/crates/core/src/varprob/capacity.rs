use serde::{Deserialize, Serialize};

use crate::energy::ball_universe;
use crate::packing::PackingOracle;
use crate::space::{FiniteMetricSpace, PointId};

use super::master::Minimax;
use super::{SolveTrace, VarError, DEFAULT_EPS, MAX_ITERATIONS};

/// Minimise `E^p_{l,R,S}(u)` over `u: X -> [0, 1]` with `u = 1` on `target`
/// and `u = 0` on `boundary`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityProblem {
    pub target: Vec<PointId>,
    pub boundary: Vec<PointId>,
    pub p: f64,
    pub l: f64,
    #[serde(rename = "R")]
    pub r_min: f64,
    #[serde(rename = "S", with = "crate::packing::inf_as_null")]
    pub r_max: f64,
    pub eps: f64,
    #[serde(rename = "maxIterations")]
    pub max_iterations: usize,
}

impl CapacityProblem {
    /// Problem with the default tolerance and iteration cap.
    pub fn new(target: Vec<PointId>, boundary: Vec<PointId>, p: f64, l: f64, r_min: f64, r_max: f64) -> Self {
        CapacityProblem { target, boundary, p, l, r_min, r_max, eps: DEFAULT_EPS, max_iterations: MAX_ITERATIONS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Best upper bound: the exact energy of `u`.
    pub value: f64,
    pub lower: f64,
    pub u: Vec<f64>,
    pub trace: SolveTrace,
}

/// Capacity by constraint generation; `value` is the energy of the returned
/// `u` and lies within a relative `eps` of the lower bound on success.
pub fn capacity(space: &FiniteMetricSpace, problem: &CapacityProblem) -> Result<CapacityResult, VarError> {
    for &x in problem.target.iter().chain(&problem.boundary) {
        space.check(x).map_err(|_| VarError::OutOfRange(x))?;
    }
    if let Some(&x) = problem.target.iter().find(|x| problem.boundary.contains(x)) {
        return Err(VarError::Overlap(x));
    }
    if !(problem.p >= 1.0) {
        return Err(crate::energy::EnergyError::BadExponent(problem.p).into());
    }
    let n = space.len();
    if problem.boundary.is_empty() {
        // u = 1 everywhere is admissible
        let trace = SolveTrace { primal: vec![0.0], dual: vec![0.0], converged: true, ..Default::default() };
        return Ok(CapacityResult { value: 0.0, lower: 0.0, u: vec![1.0; n], trace });
    }
    let mut fixed = vec![None; n];
    for &x in &problem.target {
        fixed[x] = Some(1.0);
    }
    for &x in &problem.boundary {
        fixed[x] = Some(0.0);
    }
    let u0: Vec<f64> = if problem.target.is_empty() {
        vec![0.5; n]
    } else {
        space
            .points()
            .map(|x| {
                let dk = problem.target.iter().map(|&k| space.dist(x, k)).fold(f64::INFINITY, f64::min);
                let db = problem.boundary.iter().map(|&b| space.dist(x, b)).fold(f64::INFINITY, f64::min);
                (db / (dk + db)).clamp(1e-3, 1.0 - 1e-3)
            })
            .collect()
    };
    let universe = ball_universe(space, problem.r_min, problem.r_max);
    let oracle = PackingOracle::new(space, universe.clone(), problem.l, problem.r_min, problem.r_max)?;
    let mm = Minimax {
        space,
        universe: &universe,
        oracle: &oracle,
        p: problem.p,
        dim: 1,
        fixed,
        lo: 0.0,
        hi: 1.0,
        extra: Vec::new(),
        eps: problem.eps,
        max_iter: problem.max_iterations,
    };
    let out = mm.run(&u0)?;
    Ok(CapacityResult { value: out.upper, lower: out.lower, u: out.u, trace: out.trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};

    fn path(n: usize) -> FiniteMetricSpace {
        gen_space(&SpaceSpec::Path { n }).unwrap()
    }

    #[test]
    fn empty_boundary_is_free() {
        let r = capacity(&path(5), &CapacityProblem::new(vec![0], vec![], 2.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn overlap_is_an_error() {
        let r = capacity(&path(5), &CapacityProblem::new(vec![0, 4], vec![4], 2.0, 1.0, 1.0, 1.0));
        assert!(matches!(r, Err(VarError::Overlap(4))));
    }

    #[test]
    fn three_point_path() {
        let r = capacity(&path(3), &CapacityProblem::new(vec![0], vec![2], 2.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.trace.converged && r.trace.weakly_dual());
    }

    #[test]
    fn longer_path_converges() {
        for p in [1.0, 2.0] {
            let r = capacity(&path(12), &CapacityProblem::new(vec![0], vec![11], p, 2.0, 1.0, 1.0)).unwrap();
            assert!(r.trace.converged, "p={p} {:?}", r.trace);
            assert!(r.trace.weakly_dual());
            assert!(r.lower <= r.value);
        }
    }

    #[test]
    fn monotone_in_target() {
        let s = path(8);
        let a = capacity(&s, &CapacityProblem::new(vec![0], vec![7], 2.0, 1.0, 1.0, 2.0)).unwrap();
        let b = capacity(&s, &CapacityProblem::new(vec![0, 1], vec![7], 2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!(a.lower <= b.value * (1.0 + 1e-9));
        assert!(a.value <= b.value * (1.0 + 2e-6));
    }
}
