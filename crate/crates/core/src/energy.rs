//! Packing energies, cochains and curve lengths.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packing::{covering_packing, greedy_packing, CoveringPacking, PackingError, PackingOracle};
use crate::space::{Ball, FiniteMetricSpace, PointId, DIST_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("exponent p = {0} is below 1")]
    BadExponent(f64),
    #[error("map has {got} values, space has {expected} points")]
    Misaligned { expected: usize, got: usize },
    #[error("ball {0:?} is not connected by unit steps")]
    Disconnected(Ball),
    #[error("unit step ({0}, {1}) lies in no covering ball; covering radius too small")]
    UncoveredStep(PointId, PointId),
    #[error("radius window [{0}, {1}] is empty")]
    EmptyWindow(f64, f64),
    #[error(transparent)]
    Packing(#[from] PackingError),
}

/// Values of a map `u` on the points of a space.
#[derive(Clone, Debug)]
pub enum MapValues {
    Scalar(Vec<f64>),
    /// `R^dim` with the `norm`-product metric; row-major, `dim` values per point.
    Vector { dim: usize, norm: f64, values: Vec<f64> },
    /// Points of another finite metric space.
    Discrete { target: Arc<FiniteMetricSpace>, images: Vec<PointId> },
}

impl MapValues {
    pub fn scalar(values: Vec<f64>) -> Self {
        MapValues::Scalar(values)
    }

    pub fn len(&self) -> usize {
        match self {
            MapValues::Scalar(v) => v.len(),
            MapValues::Vector { dim, values, .. } => values.len() / (*dim).max(1),
            MapValues::Discrete { images, .. } => images.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Target distance between the images of `x` and `y`.
    pub fn dist(&self, x: PointId, y: PointId) -> f64 {
        match self {
            MapValues::Scalar(v) => (v[x] - v[y]).abs(),
            MapValues::Vector { dim, norm, values } => {
                let a = &values[x * dim..(x + 1) * dim];
                let b = &values[y * dim..(y + 1) * dim];
                if norm.is_infinite() {
                    a.iter().zip(b).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max)
                } else {
                    a.iter().zip(b).map(|(s, t)| (s - t).abs().powf(*norm)).sum::<f64>().powf(1.0 / norm)
                }
            }
            MapValues::Discrete { target, images } => target.dist(images[x], images[y]),
        }
    }

    /// Diameter of the image of `set`.
    pub fn diameter(&self, set: &[PointId]) -> f64 {
        match self {
            MapValues::Scalar(v) => {
                let (lo, hi) = set.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(v[x]), hi.max(v[x])));
                if set.is_empty() {
                    0.0
                } else {
                    hi - lo
                }
            }
            _ => {
                let mut d: f64 = 0.0;
                for (k, &x) in set.iter().enumerate() {
                    for &y in &set[k + 1..] {
                        d = d.max(self.dist(x, y));
                    }
                }
                d
            }
        }
    }

    /// `self` composed after a point map `f`: `(u o f)(x) = u(f(x))`.
    pub fn pull_back(&self, f: &[PointId]) -> MapValues {
        match self {
            MapValues::Scalar(v) => MapValues::Scalar(f.iter().map(|&y| v[y]).collect()),
            MapValues::Vector { dim, norm, values } => MapValues::Vector {
                dim: *dim,
                norm: *norm,
                values: f.iter().flat_map(|&y| values[y * dim..(y + 1) * dim].iter().copied()).collect(),
            },
            MapValues::Discrete { target, images } => {
                MapValues::Discrete { target: target.clone(), images: f.iter().map(|&y| images[y]).collect() }
            }
        }
    }
}

/// Diameter of `u` over the members of `ball`.
pub fn oscillation(space: &FiniteMetricSpace, u: &MapValues, ball: &Ball) -> f64 {
    u.diameter(&ball.members(space))
}

/// Radii `{R}` together with every distance value in `(R, S]`.
///
/// Every ball with radius in `[R, S]` has the member set of a ball with one
/// of these radii and a radius no larger, so packing suprema over this grid
/// equal the suprema over all radii.
pub fn radius_grid(space: &FiniteMetricSpace, r_min: f64, r_max: f64) -> Vec<f64> {
    let mut radii = vec![r_min];
    radii.extend(space.distinct_distances().iter().copied().filter(|&d| d > r_min + DIST_TOL && d <= r_max + DIST_TOL));
    radii
}

/// All balls with radii from [`radius_grid`], ordered by center then radius.
pub fn ball_universe(space: &FiniteMetricSpace, r_min: f64, r_max: f64) -> Vec<Ball> {
    let radii = radius_grid(space, r_min, r_max);
    space.points().flat_map(|c| radii.iter().map(move |&r| Ball::new(c, r))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    Exact,
    Greedy,
    /// Greedy lower bound, exact value when the oracle allows, covering upper bound.
    Bracket,
}

/// Energy value with bounds; all values are `p`-th power sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub p: f64,
    pub l: f64,
    #[serde(rename = "R")]
    pub r_min: f64,
    #[serde(rename = "S", with = "crate::packing::inf_as_null")]
    pub r_max: f64,
    pub lower: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upper: Option<f64>,
    /// Indices into the ball universe of the packing realising `lower`.
    pub witness: Vec<usize>,
    #[serde(rename = "witnessBalls")]
    pub witness_balls: Vec<Ball>,
}

impl EnergyResult {
    /// Best available point value: exact when known, else the lower bound.
    pub fn value(&self) -> f64 {
        self.exact.unwrap_or(self.lower)
    }

    /// `value()^(1/p)`.
    pub fn norm(&self) -> f64 {
        self.value().powf(1.0 / self.p)
    }
}

fn check_inputs(space: &FiniteMetricSpace, u: &MapValues, p: f64, r_min: f64, r_max: f64) -> Result<(), EnergyError> {
    if !(p >= 1.0) {
        return Err(EnergyError::BadExponent(p));
    }
    if u.len() != space.len() {
        return Err(EnergyError::Misaligned { expected: space.len(), got: u.len() });
    }
    if !(r_min <= r_max) {
        return Err(EnergyError::EmptyWindow(r_min, r_max));
    }
    Ok(())
}

/// Above this many balls, bracket mode skips the exact oracle.
const BRACKET_EXACT_LIMIT: usize = 2048;

/// `E^p_{l,R,S}(u)`: supremum over `(l, R, S)`-packings of the sum of
/// `oscillation^p`.
pub fn energy(
    space: &FiniteMetricSpace,
    u: &MapValues,
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    mode: EnergyMode,
) -> Result<EnergyResult, EnergyError> {
    check_inputs(space, u, p, r_min, r_max)?;
    let universe = ball_universe(space, r_min, r_max);
    energy_over(space, u, p, l, r_min, r_max, &universe, mode)
}

/// [`energy`] with a caller-supplied ball universe.
#[allow(clippy::too_many_arguments)]
pub fn energy_over(
    space: &FiniteMetricSpace,
    u: &MapValues,
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    universe: &[Ball],
    mode: EnergyMode,
) -> Result<EnergyResult, EnergyError> {
    check_inputs(space, u, p, r_min, r_max)?;
    let weights: Vec<f64> = universe.iter().map(|b| oscillation(space, u, b).powf(p)).collect();
    let mut result = EnergyResult {
        p,
        l,
        r_min,
        r_max,
        lower: 0.0,
        exact: None,
        upper: None,
        witness: Vec::new(),
        witness_balls: Vec::new(),
    };
    let exact = match mode {
        EnergyMode::Greedy => None,
        EnergyMode::Exact => Some(PackingOracle::new(space, universe.to_vec(), l, r_min, r_max)?.exact(&weights)?),
        EnergyMode::Bracket => {
            if universe.len() <= BRACKET_EXACT_LIMIT {
                match PackingOracle::new(space, universe.to_vec(), l, r_min, r_max)?.exact(&weights) {
                    Ok(s) => Some(s),
                    Err(PackingError::OverCap { .. }) => None,
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            }
        }
    };
    let best = match exact {
        Some(s) => {
            result.exact = Some(s.value);
            s
        }
        None => greedy_packing(space, universe, &weights, l),
    };
    result.lower = best.value;
    result.witness_balls = best.chosen.iter().map(|&i| universe[i]).collect();
    result.witness = best.chosen;
    if mode == EnergyMode::Bracket {
        result.upper = Some(energy_upper_bound_covering(space, u, p, l, r_min, r_max)?.bound);
    }
    Ok(result)
}

/// Covering upper bound and its constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub bound: f64,
    /// `max(n1, n2)`.
    #[serde(rename = "Np")]
    pub n_prime: usize,
    /// Most covering balls meeting one admissible ball.
    pub n1: usize,
    /// Most pairwise `l`-disjoint admissible balls meeting one covering ball.
    pub n2: usize,
    pub covering: CoveringPacking,
    #[serde(rename = "oscSum")]
    pub osc_sum: f64,
}

/// Upper bound `N'^p * sum_j osc(u, B_j)^p` over a covering by radius-`R` balls.
///
/// Every admissible ball must be connected by unit steps. The chain argument
/// then bounds the oscillation on an admissible ball by the sum over the
/// covering balls it meets (`n1` of them at most), and each covering ball
/// meets at most `n2` balls of any packing.
pub fn energy_upper_bound_covering(
    space: &FiniteMetricSpace,
    u: &MapValues,
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
) -> Result<CoveringBound, EnergyError> {
    check_inputs(space, u, p, r_min, r_max)?;
    let covering = covering_packing(space, l, r_min)?;
    let cover_balls = &covering.packing.balls;
    let cover_members: Vec<Vec<PointId>> = cover_balls.iter().map(|b| b.members(space)).collect();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
    for (k, m) in cover_members.iter().enumerate() {
        for &x in m {
            holders[x].push(k);
        }
    }
    for x in space.points() {
        for &y in space.step_neighbors(x) {
            if !holders[x].iter().any(|k| holders[y].contains(k)) {
                return Err(EnergyError::UncoveredStep(x.min(y), x.max(y)));
            }
        }
    }
    let universe = ball_universe(space, r_min, r_max);
    let mut n1 = 0;
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); cover_balls.len()];
    let mut mark = vec![usize::MAX; cover_balls.len()];
    for (i, b) in universe.iter().enumerate() {
        let m = b.members(space);
        if !space.is_step_connected(&m) {
            return Err(EnergyError::Disconnected(*b));
        }
        let mut count = 0;
        for &x in &m {
            for &k in &holders[x] {
                if mark[k] != i {
                    mark[k] = i;
                    count += 1;
                    touching[k].push(i);
                }
            }
        }
        n1 = n1.max(count);
    }
    let mut n2 = 0;
    for (k, m) in cover_members.iter().enumerate() {
        let mut local = m.len().min(touching[k].len());
        if local > n1 && touching[k].len() <= 128 {
            let balls: Vec<Ball> = touching[k].iter().map(|&i| universe[i]).collect();
            let ones = vec![1.0; balls.len()];
            if let Ok(s) = PackingOracle::new(space, balls, l, r_min, r_max)?.exact(&ones) {
                local = local.min(s.value.round() as usize);
            }
        }
        n2 = n2.max(local);
    }
    let osc_sum: f64 = cover_members.iter().map(|m| u.diameter(m).powf(p)).sum();
    let n_prime = n1.max(n2);
    Ok(CoveringBound { bound: (n_prime as f64).powf(p) * osc_sum, n_prime, n1, n2, covering, osc_sum })
}

/// `sum_i d(u(g_i), u(g_{i+1}))`.
pub fn curve_length(u: &MapValues, gamma: &[PointId]) -> f64 {
    gamma.windows(2).map(|w| u.dist(w[0], w[1])).sum()
}

/// Real-valued function on the `k`-simplices of size `S`: the
/// `(k+1)`-tuples of points lying in a common ball of radius `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cochain {
    pub degree: usize,
    pub size: f64,
    pub values: BTreeMap<Vec<PointId>, f64>,
}

/// Every `(k+1)`-tuple inside some ball of radius `size`.
pub fn simplices(space: &FiniteMetricSpace, degree: usize, size: f64) -> Vec<Vec<PointId>> {
    let mut out = std::collections::BTreeSet::new();
    for c in space.points() {
        let m = space.ball_members(c, size);
        let mut idx = vec![0usize; degree + 1];
        loop {
            out.insert(idx.iter().map(|&i| m[i]).collect::<Vec<_>>());
            let mut k = degree + 1;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < m.len() {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out.into_iter().collect()
}

impl Cochain {
    pub fn from_fn(space: &FiniteMetricSpace, degree: usize, size: f64, f: impl Fn(&[PointId]) -> f64) -> Self {
        let values = simplices(space, degree, size).into_iter().map(|s| {
            let v = f(&s);
            (s, v)
        });
        Cochain { degree, size, values: values.collect() }
    }

    /// 0-cochain of a scalar function.
    pub fn from_function(space: &FiniteMetricSpace, size: f64, u: &[f64]) -> Self {
        Self::from_fn(space, 0, size, |s| u[s[0]])
    }

    pub fn get(&self, simplex: &[PointId]) -> Option<f64> {
        self.values.get(simplex).copied()
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `d kappa (x_0..x_{k+1}) = sum_i (-1)^i kappa(x_0..^x_i..x_{k+1})`.
pub fn coboundary(space: &FiniteMetricSpace, kappa: &Cochain) -> Cochain {
    Cochain::from_fn(space, kappa.degree + 1, kappa.size, |s| {
        let mut face = Vec::with_capacity(s.len() - 1);
        let mut total = 0.0;
        for i in 0..s.len() {
            face.clear();
            face.extend(s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x));
            let v = kappa.get(&face).expect("faces of a size-S simplex have size S");
            if i % 2 == 0 {
                total += v;
            } else {
                total -= v;
            }
        }
        total
    })
}

/// `||kappa||^p`: supremum over packings of the sum over balls of
/// `(sup |kappa| on simplices inside the ball)^p`. Returned values are
/// `p`-th powers, like [`energy`].
#[allow(clippy::too_many_arguments)]
pub fn cochain_norm(
    space: &FiniteMetricSpace,
    kappa: &Cochain,
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    mode: EnergyMode,
) -> Result<EnergyResult, EnergyError> {
    if !(p >= 1.0) {
        return Err(EnergyError::BadExponent(p));
    }
    let universe = ball_universe(space, r_min, r_max.min(kappa.size));
    let weights: Vec<f64> = universe
        .iter()
        .map(|b| {
            let m = b.members(space);
            kappa
                .values
                .iter()
                .filter(|(s, _)| s.iter().all(|x| m.binary_search(x).is_ok()))
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max)
                .powf(p)
        })
        .collect();
    let oracle = PackingOracle::new(space, universe.clone(), l, r_min, r_max)?;
    let (sol, exact) = match mode {
        EnergyMode::Greedy => (greedy_packing(space, &universe, &weights, l), false),
        EnergyMode::Exact => (oracle.exact(&weights)?, true),
        EnergyMode::Bracket => match oracle.exact(&weights) {
            Ok(s) => (s, true),
            Err(PackingError::OverCap { .. }) => (greedy_packing(space, &universe, &weights, l), false),
            Err(e) => return Err(e.into()),
        },
    };
    Ok(EnergyResult {
        p,
        l,
        r_min,
        r_max,
        lower: sol.value,
        exact: exact.then_some(sol.value),
        upper: None,
        witness_balls: sol.chosen.iter().map(|&i| universe[i]).collect(),
        witness: sol.chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};
    use proptest::prelude::*;

    fn path(n: usize) -> FiniteMetricSpace {
        gen_space(&SpaceSpec::Path { n }).unwrap()
    }

    fn ident(n: usize) -> MapValues {
        MapValues::scalar((0..n).map(|i| i as f64).collect())
    }

    #[test]
    fn oscillation_examples() {
        let p = path(7);
        assert_eq!(oscillation(&p, &MapValues::scalar(vec![2.0; 7]), &Ball::new(3, 2.0)), 0.0);
        assert_eq!(oscillation(&p, &ident(7), &Ball::new(3, 1.0)), 2.0);
        let target = Arc::new(FiniteMetricSpace::from_matrix(2, vec![0.0, 5.0, 5.0, 0.0], crate::space::SpaceKind::ExplicitMatrix).unwrap());
        let u = MapValues::Discrete { target, images: vec![0, 0, 0, 1, 1, 1, 1] };
        assert_eq!(oscillation(&p, &u, &Ball::new(3, 1.0)), 5.0);
    }

    #[test]
    fn identity_energy_on_path7() {
        let p = path(7);
        for mode in [EnergyMode::Exact, EnergyMode::Bracket] {
            let e = energy(&p, &ident(7), 1.0, 1.0, 1.0, 1.0, mode).unwrap();
            assert_eq!(e.exact, Some(4.0));
        }
        let b = energy(&p, &ident(7), 1.0, 1.0, 1.0, 1.0, EnergyMode::Bracket).unwrap();
        assert!(b.upper.unwrap() >= 4.0);
    }

    #[test]
    fn constant_map_has_zero_energy() {
        let p = path(9);
        let u = MapValues::scalar(vec![3.0; 9]);
        for mode in [EnergyMode::Exact, EnergyMode::Greedy, EnergyMode::Bracket] {
            let e = energy(&p, &u, 2.0, 1.5, 1.0, 2.0, mode).unwrap();
            assert_eq!(e.lower, 0.0);
            assert_eq!(e.upper.unwrap_or(0.0), 0.0);
        }
    }

    #[test]
    fn bad_exponent() {
        let p = path(3);
        assert!(matches!(energy(&p, &ident(3), 0.5, 1.0, 1.0, 1.0, EnergyMode::Exact), Err(EnergyError::BadExponent(_))));
    }

    #[test]
    fn whole_space_covering_ball() {
        // B(0, 4) covers path(5), and every admissible ball is the whole space
        let p = path(5);
        let b = energy_upper_bound_covering(&p, &ident(5), 2.0, 1.0, 4.0, 4.0).unwrap();
        assert_eq!(b.covering.packing.balls.len(), 1);
        assert_eq!(b.n_prime, 1);
        assert_eq!(b.bound, 16.0);
    }

    #[test]
    fn coboundary_examples() {
        let p = path(5);
        let zero = coboundary(&p, &Cochain::from_function(&p, 1.0, &[7.0; 5]));
        assert!(zero.is_zero());
        let du = coboundary(&p, &Cochain::from_function(&p, 1.0, &[0.0, 1.0, 2.0, 3.0, 4.0]));
        for (s, v) in &du.values {
            assert_eq!(*v, s[1] as f64 - s[0] as f64);
        }
        let kappa = Cochain::from_fn(&p, 1, 1.0, |s| (s[0] * 3 + s[1] * 7) as f64 * 0.1);
        assert!(coboundary(&p, &coboundary(&p, &kappa)).max_abs() < 1e-12);
    }

    #[test]
    fn cochain_norm_examples() {
        let p = path(7);
        let du = coboundary(&p, &Cochain::from_function(&p, 1.0, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let n = cochain_norm(&p, &du, 1.0, 1.0, 1.0, 1.0, EnergyMode::Exact).unwrap();
        assert_eq!(n.exact, Some(4.0));
        let mut ind = vec![0.0; 7];
        ind[3] = 1.0;
        let n = cochain_norm(&p, &Cochain::from_function(&p, 1.0, &ind), 1.0, 1.0, 1.0, 1.0, EnergyMode::Exact).unwrap();
        assert_eq!(n.exact, Some(1.0));
        let zero = Cochain::from_function(&p, 1.0, &[0.0; 7]);
        assert_eq!(cochain_norm(&p, &zero, 2.0, 1.0, 1.0, 1.0, EnergyMode::Exact).unwrap().lower, 0.0);
    }

    #[test]
    fn curve_length_examples() {
        assert_eq!(curve_length(&MapValues::scalar(vec![1.0; 4]), &[0, 1, 2, 3]), 0.0);
        assert_eq!(curve_length(&ident(6), &[0, 1, 2, 3, 4, 5]), 5.0);
    }

    fn random_u(seed: &[f64], n: usize) -> MapValues {
        MapValues::scalar((0..n).map(|i| seed[i % seed.len()] * (1.0 + (i / seed.len()) as f64)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bracket_is_ordered(seed in prop::collection::vec(-3.0f64..3.0, 10), p in 1.0f64..3.0, l in 1.0f64..2.5) {
            let s = path(10);
            let u = random_u(&seed, 10);
            let e = energy(&s, &u, p, l, 1.0, 2.0, EnergyMode::Bracket).unwrap();
            let g = energy(&s, &u, p, l, 1.0, 2.0, EnergyMode::Greedy).unwrap();
            let x = e.exact.unwrap();
            prop_assert!(g.lower <= x + 1e-9 && x <= e.upper.unwrap() + 1e-9);
        }

        #[test]
        fn monotone_in_scale_and_window(seed in prop::collection::vec(-3.0f64..3.0, 9), l in 1.0f64..2.0, dl in 0.0f64..2.0) {
            let s = path(9);
            let u = random_u(&seed, 9);
            let small = energy(&s, &u, 1.5, l + dl, 1.0, 2.0, EnergyMode::Exact).unwrap().value();
            let big = energy(&s, &u, 1.5, l, 1.0, 2.0, EnergyMode::Exact).unwrap().value();
            prop_assert!(small <= big + 1e-9);
            let narrow = energy(&s, &u, 1.5, l, 1.0, 1.0, EnergyMode::Exact).unwrap().value();
            prop_assert!(narrow <= big + 1e-9);
        }

        #[test]
        fn seminorm(a in prop::collection::vec(-3.0f64..3.0, 8), b in prop::collection::vec(-3.0f64..3.0, 8), c in -3.0f64..3.0, p in 1.0f64..3.0) {
            let s = path(8);
            let e = |v: Vec<f64>| energy(&s, &MapValues::scalar(v), p, 1.0, 1.0, 2.0, EnergyMode::Exact).unwrap().value();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
            let (ea, eb) = (e(a.clone()), e(b));
            prop_assert!(e(sum).powf(1.0 / p) <= ea.powf(1.0 / p) + eb.powf(1.0 / p) + 1e-9);
            prop_assert!((e(scaled) - c.abs().powf(p) * ea).abs() <= 1e-9 * (1.0 + ea * c.abs().powf(p)));
        }

        #[test]
        fn energy_equals_norm_of_differential(u in prop::collection::vec(-3.0f64..3.0, 6), p in 1.0f64..3.0) {
            let s = path(6);
            let du = coboundary(&s, &Cochain::from_function(&s, 2.0, &u));
            let a = cochain_norm(&s, &du, p, 1.0, 1.0, 2.0, EnergyMode::Exact).unwrap().value();
            let b = energy(&s, &MapValues::scalar(u), p, 1.0, 1.0, 2.0, EnergyMode::Exact).unwrap().value();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b));
        }

        #[test]
        fn dd_vanishes_in_degree_one_and_two(vals in prop::collection::vec(-2.0f64..2.0, 64)) {
            let s = gen_space(&SpaceSpec::Cycle { n: 4 }).unwrap();
            let k1 = Cochain::from_fn(&s, 1, 1.0, |t| vals[(t[0] * 4 + t[1]) % 64]);
            prop_assert!(coboundary(&s, &coboundary(&s, &k1)).max_abs() < 1e-12);
            let k0 = Cochain::from_fn(&s, 0, 1.0, |t| vals[t[0]]);
            prop_assert!(coboundary(&s, &coboundary(&s, &k0)).max_abs() < 1e-12);
        }
    }
}
