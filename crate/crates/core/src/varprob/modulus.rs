//! Modulus of a curve family: least energy of `u: X -> R^d` giving every
//! curve length at least 1.
//!
//! The length constraint is not convex. For a fixed choice of dual vector
//! `s_i` per curve step (`|s_i|_q <= 1`), `sum_i s_i . (u(x_{i+1}) - u(x_i)) >= 1`
//! is a linear constraint implying the length bound, and the admissible set
//! is the union of these over all choices. Small one-dimensional families
//! enumerate every sign pattern; otherwise a few starts are refined by
//! recomputing the dual vectors at the current solution.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{ball_universe, curve_length, MapValues};
use crate::packing::PackingOracle;
use crate::solver::{Linear, Program};
use crate::space::{Ball, FiniteMetricSpace, PointId};

use super::master::Minimax;
use super::{SolveTrace, VarError, DEFAULT_EPS, MAX_ITERATIONS};

/// Families with at most this many steps are solved over all sign patterns.
const EXHAUSTIVE_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<PointId>,
    /// Starts in the designated base set.
    #[serde(default)]
    pub based: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
}

impl CurveFamily {
    /// Free curves from point sequences.
    pub fn new(curves: Vec<Vec<PointId>>) -> Self {
        CurveFamily { curves: curves.into_iter().map(|points| Curve { points, based: false }).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusProblem {
    pub p: f64,
    pub l: f64,
    #[serde(rename = "R")]
    pub r_min: f64,
    #[serde(rename = "S", with = "crate::packing::inf_as_null")]
    pub r_max: f64,
    #[serde(rename = "targetDim")]
    pub dim: usize,
    pub eps: f64,
    #[serde(rename = "maxIterations")]
    pub max_iterations: usize,
    pub seed: u64,
    /// Random starting patterns besides the fixed ones.
    #[serde(rename = "randomStarts")]
    pub random_starts: usize,
    /// Refinement rounds per start.
    pub rounds: usize,
}

impl ModulusProblem {
    pub fn new(p: f64, l: f64, r_min: f64, r_max: f64) -> Self {
        ModulusProblem {
            p,
            l,
            r_min,
            r_max,
            dim: 1,
            eps: DEFAULT_EPS,
            max_iterations: MAX_ITERATIONS,
            seed: 0,
            random_starts: 4,
            rounds: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// Energy of the returned admissible `u`. Maps are restricted to `R^d`,
    /// so this bounds the modulus over all targets from above.
    pub value: f64,
    /// Point-major, `dim` coordinates per point.
    pub u: Vec<f64>,
    pub dim: usize,
    /// Lower bound for `R^d` targets; only when every sign pattern was solved.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lower: Option<f64>,
    /// Trace of the master solve behind `u`.
    pub trace: SolveTrace,
    pub patterns: usize,
    pub exhaustive: bool,
}

/// A proper step `(x, y)` of some curve, `x != y`.
struct Step {
    curve: usize,
    from: PointId,
    to: PointId,
}

struct Setup<'a> {
    space: &'a FiniteMetricSpace,
    universe: Vec<Ball>,
    members: Vec<Vec<PointId>>,
    oracle: PackingOracle,
    problem: &'a ModulusProblem,
    steps: Vec<Step>,
    curves: usize,
    bound: f64,
}

struct Candidate {
    u: Vec<f64>,
    value: f64,
    master: SolveTrace,
    lower: f64,
}

impl Setup<'_> {
    fn dim(&self) -> usize {
        self.problem.dim
    }

    /// `sum_i s_i . (u(y_i) - u(x_i)) >= 1` per curve, as `<=` rows.
    fn constraints(&self, signs: &[Vec<f64>]) -> Vec<Linear> {
        let d = self.dim();
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.curves];
        for (st, s) in self.steps.iter().zip(signs) {
            for k in 0..d {
                if s[k] != 0.0 {
                    *rows[st.curve].entry(st.to * d + k).or_default() -= s[k];
                    *rows[st.curve].entry(st.from * d + k).or_default() += s[k];
                }
            }
        }
        rows.into_iter()
            .map(|r| Linear { terms: r.into_iter().filter(|&(_, a)| a != 0.0).collect(), rhs: -1.0 })
            .collect()
    }

    /// Ball weights `diam(u(B))^p` for the `p`-product metric.
    fn weights(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let p = self.problem.p;
        self.members
            .iter()
            .map(|m| {
                if d == 1 {
                    let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(u[x]), hi.max(u[x])));
                    return (hi - lo).max(0.0).powf(p);
                }
                let mut best: f64 = 0.0;
                for (i, &x) in m.iter().enumerate() {
                    for &y in &m[i + 1..] {
                        best = best.max((0..d).map(|k| (u[x * d + k] - u[y * d + k]).abs().powf(p)).sum());
                    }
                }
                best
            })
            .collect()
    }

    fn values(&self, u: &[f64]) -> MapValues {
        if self.dim() == 1 {
            MapValues::Scalar(u.to_vec())
        } else {
            MapValues::Vector { dim: self.dim(), norm: self.problem.p, values: u.to_vec() }
        }
    }

    fn min_length(&self, u: &[f64]) -> f64 {
        let v = self.values(u);
        let mut lengths = vec![0.0; self.curves];
        for st in &self.steps {
            lengths[st.curve] += curve_length(&v, &[st.from, st.to]);
        }
        lengths.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Scales an admissible `u` so the shortest curve has length 1 and
    /// returns it with its exact energy.
    fn finish(&self, mut u: Vec<f64>) -> Result<(Vec<f64>, f64), VarError> {
        let len = self.min_length(&u);
        if len > 1.0 {
            for v in &mut u {
                *v /= len;
            }
        }
        let value = self.oracle.exact(&self.weights(&u))?.value;
        Ok((u, value))
    }

    /// Solves the convex problem for one dual-vector pattern; `None` when
    /// the pattern admits no map.
    fn solve_pattern(&self, signs: &[Vec<f64>], start: &[f64]) -> Result<Option<Candidate>, VarError> {
        let d = self.dim();
        let n = self.space.len() * d;
        let extra = self.constraints(signs);
        let mut feas = Program::new(n);
        for c in 0..n {
            feas.linear.push(Linear { terms: vec![(c, 1.0)], rhs: self.bound });
            feas.linear.push(Linear { terms: vec![(c, -1.0)], rhs: self.bound });
        }
        feas.linear.extend(extra.iter().cloned());
        let Some(u0) = feas.phase_one(start) else {
            return Ok(None);
        };
        let mm = Minimax {
            space: self.space,
            universe: &self.universe,
            oracle: &self.oracle,
            p: self.problem.p,
            dim: d,
            fixed: vec![None; n],
            lo: -self.bound,
            hi: self.bound,
            extra,
            eps: self.problem.eps,
            max_iter: self.problem.max_iterations,
        };
        let out = mm.run(&u0)?;
        let (u, value) = self.finish(out.u)?;
        Ok(Some(Candidate { u, value, master: out.trace, lower: out.lower }))
    }

    /// Dual vectors of the step differences of `u`; zero steps keep `old`.
    fn dual_vectors(&self, u: &[f64], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let p = self.problem.p;
        self.steps
            .iter()
            .zip(old)
            .map(|(st, prev)| {
                let delta: Vec<f64> = (0..d).map(|k| u[st.to * d + k] - u[st.from * d + k]).collect();
                let norm = delta.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
                if !(norm > 1e-12) {
                    return prev.clone();
                }
                delta.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() * (v.abs() / norm).powf(p - 1.0) }).collect()
            })
            .collect()
    }

    fn refine(&self, signs: Vec<Vec<f64>>, patterns: &mut usize) -> Result<Option<Candidate>, VarError> {
        let start = vec![0.0; self.space.len() * self.dim()];
        *patterns += 1;
        let Some(mut best) = self.solve_pattern(&signs, &start)? else {
            return Ok(None);
        };
        let mut current = signs;
        for _ in 0..self.problem.rounds {
            let next = self.dual_vectors(&best.u, &current);
            if next == current {
                break;
            }
            *patterns += 1;
            match self.solve_pattern(&next, &best.u)? {
                Some(c) if c.value < best.value * (1.0 - self.problem.eps) => {
                    best = c;
                    current = next;
                }
                _ => break,
            }
        }
        Ok(Some(best))
    }
}

/// Modulus of `family` by constraint generation over admissible maps into
/// `R^d` with the `p`-product metric.
pub fn modulus(space: &FiniteMetricSpace, family: &CurveFamily, problem: &ModulusProblem) -> Result<ModulusResult, VarError> {
    if !(problem.p >= 1.0) {
        return Err(crate::energy::EnergyError::BadExponent(problem.p).into());
    }
    if problem.dim == 0 {
        return Err(VarError::Invalid("target dimension must be at least 1".into()));
    }
    let d = problem.dim;
    if family.curves.is_empty() {
        let trace = SolveTrace { primal: vec![0.0], dual: vec![0.0], converged: true, ..Default::default() };
        return Ok(ModulusResult { value: 0.0, u: vec![0.0; space.len() * d], dim: d, lower: Some(0.0), trace, patterns: 0, exhaustive: true });
    }
    let universe = ball_universe(space, problem.r_min, problem.r_max);
    let members: Vec<Vec<PointId>> = universe.iter().map(|b| b.members(space)).collect();
    let mut steps = Vec::new();
    for (c, curve) in family.curves.iter().enumerate() {
        for &x in &curve.points {
            space.check(x).map_err(|_| VarError::OutOfRange(x))?;
        }
        for w in curve.points.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            if !members.iter().any(|m| m.binary_search(&w[0]).is_ok() && m.binary_search(&w[1]).is_ok()) {
                return Err(VarError::Invalid(format!("step {}-{} of curve {c} lies in no admissible ball", w[0], w[1])));
            }
            steps.push(Step { curve: c, from: w[0], to: w[1] });
        }
        if !steps.iter().any(|s| s.curve == c) {
            return Err(VarError::Invalid(format!("curve {c} is constant and has length 0 for every map")));
        }
    }
    let setup = Setup {
        space,
        oracle: PackingOracle::new(space, universe.clone(), problem.l, problem.r_min, problem.r_max)?,
        universe,
        members,
        problem,
        curves: family.curves.len(),
        bound: 1.0 + steps.len() as f64,
        steps,
    };
    let t = setup.steps.len();
    let axis = |sign: f64| {
        let mut v = vec![0.0; d];
        v[0] = sign;
        v
    };

    let mut patterns = 0;
    let mut best: Option<Candidate> = None;
    let keep = |c: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().is_none_or(|b| c.value < b.value) {
            *best = Some(c);
        }
    };
    let exhaustive = d == 1 && t <= EXHAUSTIVE_STEPS;
    let mut lower = f64::INFINITY;
    if exhaustive {
        // patterns s and -s are mirror images; fix the first sign
        let start = vec![0.0; space.len()];
        for mask in 0..(1usize << (t - 1)) {
            let signs: Vec<Vec<f64>> = (0..t).map(|i| axis(if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })).collect();
            patterns += 1;
            if let Some(c) = setup.solve_pattern(&signs, &start)? {
                lower = lower.min(c.lower);
                keep(c, &mut best);
            }
        }
    } else {
        let mut starts: Vec<Vec<Vec<f64>>> = vec![
            (0..t).map(|_| axis(1.0)).collect(),
            (0..t).map(|i| axis(if i % 2 == 0 { 1.0 } else { -1.0 })).collect(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
        for _ in 0..problem.random_starts {
            starts.push(
                (0..t)
                    .map(|_| {
                        if d == 1 {
                            axis(if rng.random::<bool>() { 1.0 } else { -1.0 })
                        } else {
                            random_dual_vector(&mut rng, d, problem.p)
                        }
                    })
                    .collect(),
            );
        }
        for signs in starts {
            if let Some(c) = setup.refine(signs, &mut patterns)? {
                keep(c, &mut best);
            }
        }
        if d > 1 {
            // any map into R embeds in R^d with the same energy
            let flat = modulus(space, family, &ModulusProblem { dim: 1, ..problem.clone() })?;
            patterns += flat.patterns;
            let mut u = vec![0.0; space.len() * d];
            for x in space.points() {
                u[x * d] = flat.u[x];
            }
            let value = setup.oracle.exact(&setup.weights(&u))?.value;
            keep(Candidate { u, value, master: flat.trace, lower: 0.0 }, &mut best);
        }
    }
    let best = best.ok_or_else(|| VarError::Invalid("no sign pattern admits a map".into()))?;
    Ok(ModulusResult {
        value: best.value,
        u: best.u,
        dim: d,
        lower: exhaustive.then_some(lower.min(best.value)),
        trace: best.master,
        patterns,
        exhaustive,
    })
}

/// Random `s` with `|s|_q = 1`, `q` conjugate to `p`.
fn random_dual_vector(rng: &mut ChaCha8Rng, d: usize, p: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = if p == 1.0 {
        raw.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        let q = p / (p - 1.0);
        raw.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    };
    raw.iter().map(|v| v / norm.max(1e-300)).collect()
}
