//! Ball packings and the packing oracle.
//!
//! An `(l, R, S)`-packing is a family of balls with radii in `[R, S]` whose
//! `l`-times enlarged concentric balls have pairwise disjoint member sets.
//! [`PackingOracle`] finds maximum-weight packings among a fixed candidate
//! family, which is how every packing supremum in the crate is evaluated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Ball, FiniteMetricSpace, PointId, DIST_TOL};

/// Default size cap for exact branch-and-bound.
pub const EXACT_CAP: usize = 96;

/// Largest index-order bandwidth handled by the banded dynamic program.
pub const MAX_DP_BANDWIDTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("exact packing oracle limited to {cap} candidates (got {got}, index bandwidth {bandwidth})")]
    OverCap { cap: usize, got: usize, bandwidth: usize },
    #[error("weight {weight} of candidate {index} is negative or NaN")]
    BadWeight { index: usize, weight: f64 },
    #[error("{weights} weights for {candidates} candidates")]
    Misaligned { candidates: usize, weights: usize },
    #[error("candidate {index} has radius {radius} outside [{r_min}, {r_max}]")]
    RadiusOutOfRange { index: usize, radius: f64, r_min: f64, r_max: f64 },
    #[error("scaling factor {0} is below 1")]
    BadScale(f64),
    #[error("covering radius {0} must be positive")]
    BadRadius(f64),
}

/// Exact or greedy oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Exact,
    Greedy,
}

/// A family of balls with its packing parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub balls: Vec<Ball>,
    #[serde(rename = "l")]
    pub scale: f64,
    #[serde(rename = "R")]
    pub r_min: f64,
    #[serde(rename = "S", with = "crate::packing::inf_as_null")]
    pub r_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coloring: Option<Vec<Vec<usize>>>,
}

/// Serialises `+inf` as JSON `null`.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// First reason a ball family fails to be a packing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    RadiusBelow { ball: usize, radius: f64 },
    RadiusAbove { ball: usize, radius: f64 },
    Overlap { first: usize, second: usize, shared: PointId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violation: Option<Violation>,
}

fn in_window(r: f64, r_min: f64, r_max: f64) -> bool {
    r >= r_min - DIST_TOL && r <= r_max + DIST_TOL
}

fn scaled_members(space: &FiniteMetricSpace, balls: &[Ball], l: f64) -> Vec<Vec<PointId>> {
    balls.iter().map(|b| space.ball_members(b.center, b.radius * l)).collect()
}

/// Checks radius bounds and pairwise disjointness of the `l`-scaled balls.
pub fn is_packing(space: &FiniteMetricSpace, balls: &[Ball], l: f64, r_min: f64, r_max: f64) -> ValidityReport {
    for (i, b) in balls.iter().enumerate() {
        if b.radius < r_min - DIST_TOL {
            return ValidityReport { valid: false, violation: Some(Violation::RadiusBelow { ball: i, radius: b.radius }) };
        }
        if b.radius > r_max + DIST_TOL {
            return ValidityReport { valid: false, violation: Some(Violation::RadiusAbove { ball: i, radius: b.radius }) };
        }
    }
    let members = scaled_members(space, balls, l);
    let mut owner: Vec<Option<usize>> = vec![None; space.len()];
    let mut worst: Option<(usize, usize, PointId)> = None;
    for (j, m) in members.iter().enumerate() {
        for &x in m {
            match owner[x] {
                Some(i) => {
                    let cand = (i, j, x);
                    if worst.is_none_or(|w| cand < w) {
                        worst = Some(cand);
                    }
                }
                None => owner[x] = Some(j),
            }
        }
    }
    match worst {
        Some((first, second, shared)) => {
            ValidityReport { valid: false, violation: Some(Violation::Overlap { first, second, shared }) }
        }
        None => ValidityReport { valid: true, violation: None },
    }
}

/// Conflict graph of a ball family at scale `l`: an edge joins two balls
/// whose `l`-scaled member sets meet.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    adj: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn build(space: &FiniteMetricSpace, balls: &[Ball], l: f64) -> Self {
        let members = scaled_members(space, balls, l);
        let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
        for (i, m) in members.iter().enumerate() {
            for &x in m {
                by_point[x].push(i);
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); balls.len()];
        for list in &by_point {
            for (a, &i) in list.iter().enumerate() {
                for &j in &list[a + 1..] {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        ConflictGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Whether `set` is independent.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(k, &a)| set[k + 1..].iter().all(|&b| !self.adjacent(a, b)))
    }

    /// Largest index difference across an edge, restricted to `vertices`.
    fn bandwidth_on(&self, vertices: &[usize]) -> usize {
        let mut pos = vec![usize::MAX; self.len()];
        for (k, &v) in vertices.iter().enumerate() {
            pos[v] = k;
        }
        let mut bw = 0;
        for &v in vertices {
            for &w in &self.adj[v] {
                if pos[w] != usize::MAX {
                    bw = bw.max(pos[v].abs_diff(pos[w]));
                }
            }
        }
        bw
    }
}

/// Maximum-weight packing oracle over a fixed candidate family.
#[derive(Clone, Debug)]
pub struct PackingOracle {
    balls: Vec<Ball>,
    graph: ConflictGraph,
    exact_cap: usize,
}

/// Oracle answer: chosen candidate indices (ascending) and their total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub chosen: Vec<usize>,
    pub value: f64,
}

impl PackingOracle {
    /// Prepares the oracle. Candidates must have radii in `[r_min, r_max]`.
    pub fn new(space: &FiniteMetricSpace, balls: Vec<Ball>, l: f64, r_min: f64, r_max: f64) -> Result<Self, PackingError> {
        if !(l >= 1.0) {
            return Err(PackingError::BadScale(l));
        }
        for (index, b) in balls.iter().enumerate() {
            if !in_window(b.radius, r_min, r_max) {
                return Err(PackingError::RadiusOutOfRange { index, radius: b.radius, r_min, r_max });
            }
        }
        let graph = ConflictGraph::build(space, &balls, l);
        Ok(PackingOracle { balls, graph, exact_cap: EXACT_CAP })
    }

    pub fn with_exact_cap(mut self, cap: usize) -> Self {
        self.exact_cap = cap;
        self
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn graph(&self) -> &ConflictGraph {
        &self.graph
    }

    fn check_weights(&self, weights: &[f64]) -> Result<(), PackingError> {
        if weights.len() != self.balls.len() {
            return Err(PackingError::Misaligned { candidates: self.balls.len(), weights: weights.len() });
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight >= 0.0) {
                return Err(PackingError::BadWeight { index, weight });
            }
        }
        Ok(())
    }

    pub fn solve(&self, weights: &[f64], mode: OracleMode) -> Result<OracleSolution, PackingError> {
        self.check_weights(weights)?;
        match mode {
            OracleMode::Exact => self.exact(weights),
            OracleMode::Greedy => Ok(self.greedy(weights)),
        }
    }

    /// Greedy by decreasing weight (ties by index); a lower bound.
    pub fn greedy(&self, weights: &[f64]) -> OracleSolution {
        let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
        let mut blocked = vec![false; weights.len()];
        let mut chosen = Vec::new();
        for v in order {
            if blocked[v] {
                continue;
            }
            chosen.push(v);
            for &w in self.graph.neighbors(v) {
                blocked[w] = true;
            }
        }
        chosen.sort_unstable();
        let value = chosen.iter().map(|&i| weights[i]).sum();
        OracleSolution { chosen, value }
    }

    /// Exact maximum; among optimal sets returns the lexicographically
    /// smallest index set of positive-weight candidates.
    pub fn exact(&self, weights: &[f64]) -> Result<OracleSolution, PackingError> {
        let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if active.is_empty() {
            return Ok(OracleSolution { chosen: Vec::new(), value: 0.0 });
        }
        let bandwidth = self.graph.bandwidth_on(&active);
        let chosen = if bandwidth <= MAX_DP_BANDWIDTH && (active.len() > self.exact_cap || bandwidth <= 10) {
            banded_mwis(&self.graph, &active, weights, bandwidth)
        } else if active.len() <= self.exact_cap.min(128) {
            branch_and_bound(&self.graph, &active, weights)
        } else {
            return Err(PackingError::OverCap { cap: self.exact_cap, got: active.len(), bandwidth });
        };
        let value = chosen.iter().map(|&i| weights[i]).sum();
        Ok(OracleSolution { chosen, value })
    }
}

fn tolerance(weights: &[f64], active: &[usize]) -> f64 {
    let total: f64 = active.iter().map(|&i| weights[i]).sum();
    1e-12 * total.max(1e-300)
}

/// Include-first depth-first branch and bound on bitsets, pruned by a
/// greedy weighted clique cover.
fn branch_and_bound(graph: &ConflictGraph, active: &[usize], weights: &[f64]) -> Vec<usize> {
    let n = active.len();
    let mut local = vec![usize::MAX; graph.len()];
    for (k, &v) in active.iter().enumerate() {
        local[v] = k;
    }
    let adj: Vec<u128> = active
        .iter()
        .map(|&v| {
            graph.neighbors(v).iter().filter(|&&w| local[w] != usize::MAX).fold(0u128, |m, &w| m | (1u128 << local[w]))
        })
        .collect();
    let w: Vec<f64> = active.iter().map(|&v| weights[v]).collect();
    let tol = tolerance(weights, active);

    struct Search<'a> {
        adj: &'a [u128],
        w: &'a [f64],
        tol: f64,
        best: f64,
        best_set: u128,
        recorded: bool,
    }

    impl Search<'_> {
        fn cover_bound(&self, mut rest: u128) -> f64 {
            let mut bound = 0.0;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                let mut clique_max = self.w[v];
                let mut open = rest & self.adj[v];
                rest &= !(1u128 << v);
                while open != 0 {
                    let u = open.trailing_zeros() as usize;
                    clique_max = clique_max.max(self.w[u]);
                    rest &= !(1u128 << u);
                    open &= self.adj[u] & !(1u128 << u);
                }
                bound += clique_max;
            }
            bound
        }

        fn go(&mut self, cand: u128, set: u128, value: f64) {
            if cand == 0 {
                if !self.recorded || value > self.best + self.tol {
                    self.best = value;
                    self.best_set = set;
                    self.recorded = true;
                }
                return;
            }
            if self.recorded && value + self.cover_bound(cand) <= self.best + self.tol {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            let bit = 1u128 << v;
            self.go(cand & !bit & !self.adj[v], set | bit, value + self.w[v]);
            self.go(cand & !bit, set, value);
        }
    }

    let full = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut s = Search { adj: &adj, w: &w, tol, best: 0.0, best_set: 0, recorded: false };
    s.go(full, 0, 0.0);
    (0..n).filter(|&k| s.best_set >> k & 1 == 1).map(|k| active[k]).collect()
}

/// Dynamic program over the last `bandwidth` decisions, valid when every
/// conflict joins candidates at most `bandwidth` apart in `active` order.
fn banded_mwis(graph: &ConflictGraph, active: &[usize], weights: &[f64], bandwidth: usize) -> Vec<usize> {
    let n = active.len();
    let b = bandwidth.max(1);
    let states = 1usize << b;
    let mut pos = vec![usize::MAX; graph.len()];
    for (k, &v) in active.iter().enumerate() {
        pos[v] = k;
    }
    // back[k]: bit j set iff active[k] conflicts with active[k - 1 - j]
    let back: Vec<usize> = (0..n)
        .map(|k| {
            graph.neighbors(active[k]).iter().filter(|&&w| pos[w] != usize::MAX && pos[w] < k).fold(0usize, |m, &w| m | 1 << (k - 1 - pos[w]))
        })
        .collect();
    let tol = tolerance(weights, active);
    let mask = states - 1;
    // value[k][s]: best weight from position k on, given the choices s on k-1..k-b
    let mut value = vec![0.0f64; (n + 1) * states];
    for k in (0..n).rev() {
        for s in 0..states {
            let skip = value[(k + 1) * states + ((s << 1) & mask)];
            let take = if s & back[k] == 0 {
                weights[active[k]] + value[(k + 1) * states + (((s << 1) | 1) & mask)]
            } else {
                f64::NEG_INFINITY
            };
            value[k * states + s] = skip.max(take);
        }
    }
    let mut chosen = Vec::new();
    let mut s = 0usize;
    for k in 0..n {
        let skip = value[(k + 1) * states + ((s << 1) & mask)];
        let can_take = s & back[k] == 0;
        if can_take && weights[active[k]] + value[(k + 1) * states + (((s << 1) | 1) & mask)] >= skip - tol {
            chosen.push(active[k]);
            s = ((s << 1) | 1) & mask;
        } else {
            s = (s << 1) & mask;
        }
    }
    chosen
}

/// Greedy packing by decreasing weight (ties by index) using point
/// occupancy; never builds the conflict graph. Same answer as
/// [`PackingOracle::greedy`].
pub fn greedy_packing(space: &FiniteMetricSpace, candidates: &[Ball], weights: &[f64], l: f64) -> OracleSolution {
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    let mut occupied = vec![false; space.len()];
    let mut chosen = Vec::new();
    for v in order {
        let m = space.ball_members(candidates[v].center, candidates[v].radius * l);
        if m.iter().any(|&x| occupied[x]) {
            continue;
        }
        for x in m {
            occupied[x] = true;
        }
        chosen.push(v);
    }
    chosen.sort_unstable();
    let value = chosen.iter().map(|&i| weights[i]).sum();
    OracleSolution { chosen, value }
}

/// Maximum-weight valid packing among `candidates`.
pub fn max_weight_packing(
    space: &FiniteMetricSpace,
    candidates: &[Ball],
    weights: &[f64],
    l: f64,
    r_min: f64,
    r_max: f64,
    mode: OracleMode,
) -> Result<(Packing, f64), PackingError> {
    let oracle = PackingOracle::new(space, candidates.to_vec(), l, r_min, r_max)?;
    let sol = oracle.solve(weights, mode)?;
    let packing = Packing {
        balls: sol.chosen.iter().map(|&i| candidates[i]).collect(),
        scale: l,
        r_min,
        r_max,
        coloring: None,
    };
    Ok((packing, sol.value))
}

/// Point-cover count and chromatic decomposition of a ball family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    #[serde(rename = "maxCover")]
    pub max_cover: usize,
    pub coloring: Vec<Vec<usize>>,
    #[serde(rename = "N")]
    pub colors: usize,
}

/// Exact colouring up to this many balls; DSatur beyond.
pub const EXACT_COLORING_CAP: usize = 12;

pub fn packing_multiplicity(space: &FiniteMetricSpace, balls: &[Ball], l: f64) -> Multiplicity {
    let members = scaled_members(space, balls, l);
    let mut cover = vec![0usize; space.len()];
    for m in &members {
        for &x in m {
            cover[x] += 1;
        }
    }
    let max_cover = cover.into_iter().max().unwrap_or(0);
    let graph = ConflictGraph::build(space, balls, l);
    let colors = if balls.len() <= EXACT_COLORING_CAP { exact_coloring(&graph) } else { dsatur(&graph) };
    let count = colors.iter().copied().max().map_or(0, |c| c + 1);
    let mut coloring = vec![Vec::new(); count];
    for (i, &c) in colors.iter().enumerate() {
        coloring[c].push(i);
    }
    Multiplicity { max_cover, coloring, colors: count }
}

/// Optimal colouring by backtracking over `k = 1, 2, ...` colours.
pub fn exact_coloring(graph: &ConflictGraph) -> Vec<usize> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }
    fn assign(graph: &ConflictGraph, v: usize, k: usize, colors: &mut Vec<usize>) -> bool {
        if v == colors.len() {
            return true;
        }
        // colours are introduced in order to skip symmetric assignments
        let used = colors[..v].iter().copied().max().map_or(0, |c| c + 1);
        for c in 0..k.min(used + 1) {
            if graph.neighbors(v).iter().all(|&w| w >= v || colors[w] != c) {
                colors[v] = c;
                if assign(graph, v + 1, k, colors) {
                    return true;
                }
            }
        }
        false
    }
    let mut colors = vec![0; n];
    for k in 1..=n {
        if assign(graph, 0, k, &mut colors) {
            return colors;
        }
    }
    unreachable!("n colours always suffice")
}

/// DSatur greedy colouring; ties broken by degree, then index.
pub fn dsatur(graph: &ConflictGraph) -> Vec<usize> {
    let n = graph.len();
    let mut colors = vec![usize::MAX; n];
    let mut seen: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut saturation = vec![0usize; n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| colors[v] == usize::MAX)
            .max_by(|&a, &b| {
                saturation[a]
                    .cmp(&saturation[b])
                    .then(graph.neighbors(a).len().cmp(&graph.neighbors(b).len()))
                    .then(b.cmp(&a))
            })
            .expect("uncoloured vertex remains");
        let c = (0..).find(|&c| seen[v].get(c).is_none_or(|s| !s)).unwrap();
        colors[v] = c;
        for &w in graph.neighbors(v) {
            if seen[w].len() <= c {
                seen[w].resize(c + 1, false);
            }
            if !seen[w][c] {
                seen[w][c] = true;
                saturation[w] += 1;
            }
        }
    }
    colors
}

/// Covering family of radius-`r` balls and its colouring at scale `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringPacking {
    pub packing: Packing,
    #[serde(rename = "N")]
    pub colors: usize,
    #[serde(rename = "maxCover")]
    pub max_cover: usize,
}

/// Radius-`r` balls whose member sets cover the space and every unit step.
///
/// Centers form a greedy maximal `r`-separated set (pairwise distance
/// `> r`, scanned in index order). A ball `B(x, r)` is then added for every
/// unit step `(x, y)` not yet inside a single ball. The family is coloured
/// into valid `(l, r, r)`-packings.
pub fn covering_packing(space: &FiniteMetricSpace, l: f64, r: f64) -> Result<CoveringPacking, PackingError> {
    if !(r > 0.0) {
        return Err(PackingError::BadRadius(r));
    }
    if !(l >= 1.0) {
        return Err(PackingError::BadScale(l));
    }
    let mut centers: Vec<PointId> = Vec::new();
    let mut covered = vec![false; space.len()];
    for x in space.points() {
        if !covered[x] {
            centers.push(x);
            for y in space.ball_members(x, r) {
                covered[y] = true;
            }
        }
    }
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
    for (k, &c) in centers.iter().enumerate() {
        for y in space.ball_members(c, r) {
            holders[y].push(k);
        }
    }
    for x in space.points() {
        for &y in space.step_neighbors(x) {
            if y < x {
                continue;
            }
            let shared = holders[x].iter().any(|k| holders[y].contains(k));
            if !shared && space.dist(x, y) <= r + DIST_TOL {
                let k = centers.len();
                centers.push(x);
                for z in space.ball_members(x, r) {
                    holders[z].push(k);
                }
            }
        }
    }
    let balls: Vec<Ball> = centers.iter().map(|&c| Ball::new(c, r)).collect();
    let m = packing_multiplicity(space, &balls, l);
    Ok(CoveringPacking {
        packing: Packing { balls, scale: l, r_min: r, r_max: r, coloring: Some(m.coloring) },
        colors: m.colors,
        max_cover: m.max_cover,
    })
}

/// Packing report as written by the command line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    #[serde(flatten)]
    pub packing: Packing,
    pub valid: bool,
    #[serde(rename = "maxCover")]
    pub max_cover: usize,
    #[serde(rename = "N")]
    pub colors: usize,
}

impl PackingReport {
    pub fn new(space: &FiniteMetricSpace, mut packing: Packing) -> Self {
        let valid = is_packing(space, &packing.balls, packing.scale, packing.r_min, packing.r_max).valid;
        let m = packing_multiplicity(space, &packing.balls, packing.scale);
        packing.coloring = Some(m.coloring);
        PackingReport { packing, valid, max_cover: m.max_cover, colors: m.colors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};
    use proptest::prelude::*;

    fn path(n: usize) -> FiniteMetricSpace {
        gen_space(&SpaceSpec::Path { n }).unwrap()
    }

    #[test]
    fn validity_examples() {
        let p = path(20);
        let two = [Ball::new(0, 1.0), Ball::new(10, 1.0)];
        assert!(is_packing(&p, &two, 2.0, 1.0, 1.0).valid);
        let close = [Ball::new(0, 1.0), Ball::new(3, 1.0)];
        let rep = is_packing(&p, &close, 2.0, 1.0, 1.0);
        assert!(!rep.valid);
        assert_eq!(rep.violation, Some(Violation::Overlap { first: 0, second: 1, shared: 1 }));
        let big = is_packing(&p, &[Ball::new(0, 3.0)], 1.0, 1.0, 2.0);
        assert_eq!(big.violation, Some(Violation::RadiusAbove { ball: 0, radius: 3.0 }));
    }

    #[test]
    fn multiplicity_examples() {
        let p = path(5);
        let balls = [Ball::new(0, 1.0), Ball::new(1, 1.0), Ball::new(2, 1.0)];
        let m1 = packing_multiplicity(&p, &balls, 1.0);
        assert_eq!((m1.max_cover, m1.colors), (3, 3));
        let m2 = packing_multiplicity(&p, &balls, 2.0);
        assert_eq!((m2.max_cover, m2.colors), (3, 3));
        let far = packing_multiplicity(&path(20), &[Ball::new(0, 1.0), Ball::new(10, 1.0)], 2.0);
        assert_eq!((far.max_cover, far.colors), (1, 1));
    }

    #[test]
    fn zero_weights_give_empty_packing() {
        let p = path(7);
        let balls: Vec<Ball> = p.points().map(|c| Ball::new(c, 1.0)).collect();
        let (pk, v) = max_weight_packing(&p, &balls, &[0.0; 7], 1.0, 1.0, 1.0, OracleMode::Exact).unwrap();
        assert!(pk.balls.is_empty());
        assert_eq!(v, 0.0);
    }

    #[test]
    fn identity_oscillation_on_path7() {
        let p = path(7);
        let balls: Vec<Ball> = p.points().map(|c| Ball::new(c, 1.0)).collect();
        let w: Vec<f64> = balls
            .iter()
            .map(|b| {
                let m = b.members(&p);
                (m[m.len() - 1] - m[0]) as f64
            })
            .collect();
        let (_, v) = max_weight_packing(&p, &balls, &w, 1.0, 1.0, 1.0, OracleMode::Exact).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn bad_inputs() {
        let p = path(4);
        let balls = [Ball::new(0, 1.0)];
        assert!(matches!(
            max_weight_packing(&p, &balls, &[-1.0], 1.0, 1.0, 1.0, OracleMode::Exact),
            Err(PackingError::BadWeight { .. })
        ));
        assert!(matches!(
            max_weight_packing(&p, &balls, &[1.0], 1.0, 2.0, 3.0, OracleMode::Exact),
            Err(PackingError::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn over_cap_is_an_error() {
        // row-major grid(2,10): conflicts reach two rows ahead, bandwidth 20
        let g = gen_space(&SpaceSpec::Grid { d: 2, n: 10 }).unwrap();
        let balls: Vec<Ball> = g.points().map(|c| Ball::new(c, 1.0)).collect();
        let w = vec![1.0; balls.len()];
        let r = max_weight_packing(&g, &balls, &w, 1.0, 1.0, 1.0, OracleMode::Exact);
        assert!(matches!(r, Err(PackingError::OverCap { got: 100, bandwidth: 20, .. })));
    }

    #[test]
    fn banded_program_handles_long_paths() {
        let p = path(65);
        let balls: Vec<Ball> = p.points().map(|c| Ball::new(c, 1.0)).collect();
        let w = vec![1.0; 65];
        let (pk, v) = max_weight_packing(&p, &balls, &w, 2.0, 1.0, 1.0, OracleMode::Exact).unwrap();
        // centers 5 apart: 0, 5, ..., 60, 64 is impossible, so 13 balls
        assert_eq!(v, 13.0);
        assert_eq!(pk.balls[0].center, 0);
        assert!(is_packing(&p, &pk.balls, 2.0, 1.0, 1.0).valid);
    }

    #[test]
    fn covering_examples() {
        let single = gen_space(&SpaceSpec::Path { n: 1 }).unwrap();
        let c = covering_packing(&single, 1.0, 1.0).unwrap();
        assert_eq!((c.packing.balls.len(), c.colors), (1, 1));
        let c = covering_packing(&path(10), 1.0, 1.0).unwrap();
        let centers: Vec<_> = c.packing.balls.iter().map(|b| b.center).collect();
        assert_eq!(centers, vec![0, 2, 4, 6, 8]);
        assert_eq!(c.colors, 2);
        let g = gen_space(&SpaceSpec::Grid { d: 2, n: 6 }).unwrap();
        let c = covering_packing(&g, 2.0, 1.0).unwrap();
        assert!(c.colors >= c.max_cover);
        for class in c.packing.coloring.as_ref().unwrap() {
            let balls: Vec<Ball> = class.iter().map(|&i| c.packing.balls[i]).collect();
            assert!(is_packing(&g, &balls, 2.0, 1.0, 1.0).valid);
        }
    }

    fn brute_force(graph: &ConflictGraph, w: &[f64]) -> f64 {
        let n = graph.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if graph.is_independent(&set) {
                best = best.max(set.iter().map(|&i| w[i]).sum());
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_matches_brute_force_and_beats_greedy(
            balls in prop::collection::vec((0usize..15, 1usize..4), 1..12),
            weights in prop::collection::vec(0.0f64..5.0, 12),
            l in 1.0f64..3.0,
        ) {
            let p = path(15);
            let balls: Vec<Ball> = balls.into_iter().map(|(c, r)| Ball::new(c, r as f64)).collect();
            let w = &weights[..balls.len()];
            let oracle = PackingOracle::new(&p, balls.clone(), l, 1.0, 3.0).unwrap();
            let exact = oracle.exact(w).unwrap();
            let greedy = oracle.greedy(w);
            prop_assert!((exact.value - brute_force(oracle.graph(), w)).abs() < 1e-9);
            prop_assert!(greedy.value <= exact.value + 1e-9);
            prop_assert_eq!(&greedy, &greedy_packing(&p, &balls, w, l));
            let chosen: Vec<Ball> = exact.chosen.iter().map(|&i| balls[i]).collect();
            prop_assert!(is_packing(&p, &chosen, l, 1.0, 3.0).valid);
        }

        #[test]
        fn independence_matches_validity(balls in prop::collection::vec((0usize..10, 1usize..3), 1..8), l in 1.0f64..3.0) {
            let p = path(10);
            let balls: Vec<Ball> = balls.into_iter().map(|(c, r)| Ball::new(c, r as f64)).collect();
            let g = ConflictGraph::build(&p, &balls, l);
            for mask in 0u32..(1 << balls.len()) {
                let set: Vec<usize> = (0..balls.len()).filter(|&i| mask >> i & 1 == 1).collect();
                let sub: Vec<Ball> = set.iter().map(|&i| balls[i]).collect();
                prop_assert_eq!(g.is_independent(&set), is_packing(&p, &sub, l, 1.0, 2.0).valid);
            }
        }

        #[test]
        fn larger_scale_packings_stay_valid(centers in prop::collection::btree_set(0usize..30, 1..6), l in 1.0f64..2.0, dl in 0.0f64..2.0) {
            let p = path(30);
            let balls: Vec<Ball> = centers.into_iter().map(|c| Ball::new(c, 1.0)).collect();
            if is_packing(&p, &balls, l + dl, 1.0, 1.0).valid {
                prop_assert!(is_packing(&p, &balls, l, 1.0, 1.0).valid);
                prop_assert!(is_packing(&p, &balls[1..], l + dl, 1.0, 1.0).valid);
            }
        }

        #[test]
        fn cover_never_exceeds_colors(balls in prop::collection::vec((0usize..16, 1usize..3), 1..16), l in 1.0f64..3.0) {
            let g = gen_space(&SpaceSpec::Grid { d: 2, n: 4 }).unwrap();
            let balls: Vec<Ball> = balls.into_iter().map(|(c, r)| Ball::new(c, r as f64)).collect();
            let m = packing_multiplicity(&g, &balls, l);
            prop_assert!(m.max_cover <= m.colors);
        }
    }
}
