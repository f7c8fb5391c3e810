//! Search for the best Sobolev-type constant `||u||_q <= C E_p(u)^(1/p)` over
//! functions vanishing on the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{ball_universe, energy_upper_bound_covering, MapValues};
use crate::packing::{PackingError, PackingOracle};
use crate::space::{Ball, FiniteMetricSpace, PointId};

use super::VarError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    /// Lower bound on the best constant: the largest ratio found.
    pub constant: f64,
    /// `||u||_q` of the witness (a lower bound when not exact).
    pub numerator: f64,
    /// `E_p(u)^(1/p)` of the witness (an upper bound when not exact).
    pub denominator: f64,
    pub witness: Vec<f64>,
    pub evaluations: usize,
    /// Both norms were computed with the exact oracle.
    pub exact: bool,
}

struct Evaluator<'a> {
    space: &'a FiniteMetricSpace,
    members: Vec<Vec<PointId>>,
    oracle: PackingOracle,
    p: f64,
    q: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
}

impl Evaluator<'_> {
    fn solve(&self, weights: &[f64]) -> Result<(f64, bool), VarError> {
        match self.oracle.exact(weights) {
            Ok(s) => Ok((s.value, true)),
            Err(PackingError::OverCap { .. }) => Ok((self.oracle.greedy(weights).value, false)),
            Err(e) => Err(e.into()),
        }
    }

    /// `(numerator, denominator, exact)`.
    fn eval(&self, u: &[f64]) -> Result<(f64, f64, bool), VarError> {
        let sup: Vec<f64> = self.members.iter().map(|m| m.iter().map(|&x| u[x].abs()).fold(0.0, f64::max).powf(self.q)).collect();
        let (num, num_exact) = self.solve(&sup)?;
        let osc: Vec<f64> = self
            .members
            .iter()
            .map(|m| {
                let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(u[x]), hi.max(u[x])));
                (hi - lo).powf(self.p)
            })
            .collect();
        let (den, den_exact) = match self.oracle.exact(&osc) {
            Ok(s) => (s.value, true),
            Err(PackingError::OverCap { .. }) => {
                let uv = MapValues::scalar(u.to_vec());
                (energy_upper_bound_covering(self.space, &uv, self.p, self.l, self.r_min, self.r_max)?.bound, false)
            }
            Err(e) => return Err(e.into()),
        };
        Ok((num.powf(1.0 / self.q), den.powf(1.0 / self.p), num_exact && den_exact))
    }
}

/// Randomised search followed by coordinate ascent; `budget` caps the number
/// of evaluations. The boundary is the space's boundary set.
#[allow(clippy::too_many_arguments)]
pub fn sobolev_constant(
    space: &FiniteMetricSpace,
    p: f64,
    q: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    budget: usize,
    seed: u64,
) -> Result<SobolevEstimate, VarError> {
    if !(p >= 1.0) {
        return Err(crate::energy::EnergyError::BadExponent(p).into());
    }
    if !(q >= 1.0) {
        return Err(VarError::Invalid(format!("q = {q} must be at least 1")));
    }
    let boundary = space.boundary();
    if boundary.is_empty() {
        return Err(VarError::NoBoundary);
    }
    let n = space.len();
    let mut on_boundary = vec![false; n];
    for &b in boundary {
        on_boundary[b] = true;
    }
    let free: Vec<PointId> = space.points().filter(|&x| !on_boundary[x]).collect();
    let universe: Vec<Ball> = ball_universe(space, r_min, r_max);
    let ev = Evaluator {
        space,
        members: universe.iter().map(|b| b.members(space)).collect(),
        oracle: PackingOracle::new(space, universe, l, r_min, r_max)?,
        p,
        q,
        l,
        r_min,
        r_max,
    };

    let mut best: Option<SobolevEstimate> = None;
    let mut evaluations = 0;
    let consider = |u: Vec<f64>, best: &mut Option<SobolevEstimate>, evaluations: &mut usize| -> Result<bool, VarError> {
        *evaluations += 1;
        let (num, den, exact) = ev.eval(&u)?;
        if den <= 0.0 {
            return Ok(false);
        }
        let ratio = num / den;
        if best.as_ref().is_none_or(|b| ratio > b.constant) {
            *best = Some(SobolevEstimate { constant: ratio, numerator: num, denominator: den, witness: u, evaluations: 0, exact });
            return Ok(true);
        }
        Ok(false)
    };

    let budget = budget.max(2);
    let indicator: Vec<f64> = (0..n).map(|x| if on_boundary[x] { 0.0 } else { 1.0 }).collect();
    consider(indicator, &mut best, &mut evaluations)?;
    let to_boundary: Vec<f64> = (0..n).map(|x| boundary.iter().map(|&b| space.dist(x, b)).fold(f64::INFINITY, f64::min)).collect();
    consider(to_boundary, &mut best, &mut evaluations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_budget = budget / 2;
    while evaluations < random_budget {
        let u: Vec<f64> = (0..n).map(|x| if on_boundary[x] { 0.0 } else { rng.random::<f64>() }).collect();
        consider(u, &mut best, &mut evaluations)?;
    }

    // coordinate ascent on the best candidate
    let mut step = 0.5;
    while evaluations < budget && step > 1e-3 && best.is_some() {
        let mut improved = false;
        for &x in &free {
            for dir in [1.0, -1.0] {
                if evaluations >= budget {
                    break;
                }
                let mut u = best.as_ref().unwrap().witness.clone();
                let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                u[x] += dir * step * scale;
                improved |= consider(u, &mut best, &mut evaluations)?;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    let mut out = best.ok_or(VarError::ZeroEnergy)?;
    out.evaluations = evaluations;
    Ok(out)
}
