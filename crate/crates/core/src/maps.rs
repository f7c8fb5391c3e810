//! Maps between finite spaces and their conformality certificates.
//!
//! A [`SpaceMap`] sends every point of its domain to a point of its codomain.
//! Balls are transported by [`SpaceMap::canonical_image`]: the smallest ball
//! around the image of the center holding the image of the ball.
//! [`certify_conformal`] then looks for the least domain scale `l` at which
//! every `(l, R, S)`-packing is sent to a family whose `lp`-scaled images
//! have bounded overlap.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{ball_universe, energy, EnergyError, EnergyMode, MapValues};
use crate::packing::{is_packing, packing_multiplicity, PackingError};
use crate::space::{Ball, DInterval, FiniteMetricSpace, PointId, SpaceError, SpaceSpec, DIST_TOL};
use crate::varprob::{capacity, grotzsch_delta, ArcPool, CapacityProblem, VarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("incompatible spaces: {0}")]
    Incompatible(String),
    #[error("map is not bijective: {0}")]
    NotBijective(String),
    #[error("not a rooted tree: {0}")]
    NotATree(String),
    #[error("no lp values to test")]
    EmptyLpList,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Var(#[from] VarError),
}

/// How a map was built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MapKind {
    Identity,
    /// Identity onto the snowflake `(X, d^alpha)`.
    SnowflakeIdentity { alpha: f64 },
    /// `x -> x |x|^(k-1)` on integer samples.
    Power { k: u32 },
    /// Coordinate inclusion checked to satisfy
    /// `d/l - c <= d'(f x, f y) <= l d + c`.
    QiEmbedding { l: f64, c: f64 },
    /// Coordinate inclusion `Z^d -> Z^d'` padding with zeros.
    GridEmbedding,
    /// `i -> (i, 1)` from a path onto the lowest row of a half-plane sample.
    Horospherical,
    /// Built by [`poincare_model`].
    Poincare,
    User,
}

#[derive(Clone, Debug)]
pub struct SpaceMap {
    pub domain: Arc<FiniteMetricSpace>,
    pub codomain: Arc<FiniteMetricSpace>,
    pub images: Vec<PointId>,
    pub kind: MapKind,
}

impl SpaceMap {
    /// Checks that `images` is total and lands in the codomain.
    pub fn new(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        images: Vec<PointId>,
        kind: MapKind,
    ) -> Result<Self, MapError> {
        if images.len() != domain.len() {
            return Err(MapError::Incompatible(format!("{} images for {} domain points", images.len(), domain.len())));
        }
        if let Some(&y) = images.iter().find(|&&y| y >= codomain.len()) {
            return Err(MapError::Incompatible(format!("image {y} outside a codomain of {} points", codomain.len())));
        }
        Ok(SpaceMap { domain, codomain, images, kind })
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let images = space.points().collect();
        SpaceMap { domain: space.clone(), codomain: space, images, kind: MapKind::Identity }
    }

    /// Identity from `space` onto its snowflake.
    pub fn snowflake_identity(space: Arc<FiniteMetricSpace>, alpha: f64) -> Result<Self, MapError> {
        let codomain = Arc::new(space.snowflake(alpha)?);
        let images = space.points().collect();
        Ok(SpaceMap { domain: space, codomain, images, kind: MapKind::SnowflakeIdentity { alpha } })
    }

    pub fn apply(&self, x: PointId) -> PointId {
        self.images[x]
    }

    /// `next o self`.
    pub fn then(&self, next: &SpaceMap) -> Result<SpaceMap, MapError> {
        if next.domain.len() != self.codomain.len() {
            return Err(MapError::Incompatible("codomain and next domain differ in size".into()));
        }
        let images = self.images.iter().map(|&y| next.images[y]).collect();
        Ok(SpaceMap { domain: self.domain.clone(), codomain: next.codomain.clone(), images, kind: MapKind::User })
    }

    /// Inverse images, or an error naming a collision or a missed point.
    pub fn inverse(&self) -> Result<Vec<PointId>, MapError> {
        if self.domain.len() != self.codomain.len() {
            return Err(MapError::NotBijective(format!("{} points onto {}", self.domain.len(), self.codomain.len())));
        }
        let mut inv = vec![usize::MAX; self.codomain.len()];
        for (x, &y) in self.images.iter().enumerate() {
            if inv[y] != usize::MAX {
                return Err(MapError::NotBijective(format!("{} and {x} both map to {y}", inv[y])));
            }
            inv[y] = x;
        }
        Ok(inv)
    }

    /// Smallest ball centered at `f(center)` containing `f(ball)`, with its
    /// radius raised to `floor` if smaller.
    pub fn canonical_image(&self, ball: &Ball, floor: f64) -> Ball {
        let c = self.images[ball.center];
        let rho = ball.members(&self.domain).iter().map(|&y| self.codomain.dist(c, self.images[y])).fold(0.0, f64::max);
        Ball::new(c, rho.max(floor))
    }
}

/// Builds one of the built-in maps between two generated spaces.
pub fn builtin_map(kind: &MapKind, domain: Arc<FiniteMetricSpace>, codomain: Arc<FiniteMetricSpace>) -> Result<SpaceMap, MapError> {
    let coords_of = |s: &FiniteMetricSpace, what: &str| -> Result<Vec<Vec<i64>>, MapError> {
        s.coords().map(<[Vec<i64>]>::to_vec).ok_or_else(|| MapError::Incompatible(format!("{what} {} has no lattice coordinates", s.name())))
    };
    let lookup = |coord: &[i64]| -> Result<PointId, MapError> {
        codomain.point_at(coord).ok_or_else(|| MapError::Incompatible(format!("image {coord:?} is not a codomain point")))
    };
    let images: Vec<PointId> = match kind {
        MapKind::Identity | MapKind::SnowflakeIdentity { .. } => {
            if domain.len() != codomain.len() {
                return Err(MapError::Incompatible(format!("{} points onto {}", domain.len(), codomain.len())));
            }
            let alpha = match kind {
                MapKind::SnowflakeIdentity { alpha } => *alpha,
                _ => 1.0,
            };
            for x in domain.points() {
                for y in domain.points() {
                    let want = domain.dist(x, y).powf(alpha);
                    if (codomain.dist(x, y) - want).abs() > 1e-9 * want.max(1.0) {
                        return Err(MapError::Incompatible(format!("codomain distance d({x},{y}) is not d^{alpha}")));
                    }
                }
            }
            domain.points().collect()
        }
        MapKind::Power { k } => {
            if *k == 0 {
                return Err(MapError::Invalid("power exponent must be at least 1".into()));
            }
            let coords = coords_of(&domain, "domain")?;
            coords
                .iter()
                .map(|c| {
                    if c.len() != 1 {
                        return Err(MapError::Incompatible("power map needs a one-dimensional domain".into()));
                    }
                    let x = c[0];
                    let v = x.checked_abs().and_then(|a| a.checked_pow(k - 1)).and_then(|m| m.checked_mul(x));
                    lookup(&[v.ok_or_else(|| MapError::Invalid(format!("{x}^{k} overflows")))?])
                })
                .collect::<Result<_, _>>()?
        }
        MapKind::QiEmbedding { .. } | MapKind::GridEmbedding => {
            let dc = coords_of(&domain, "domain")?;
            let target_dim = coords_of(&codomain, "codomain")?.first().map_or(0, Vec::len);
            let images = dc
                .iter()
                .map(|c| {
                    if c.len() > target_dim {
                        return Err(MapError::Incompatible(format!("cannot include dimension {} into {target_dim}", c.len())));
                    }
                    let mut padded = c.clone();
                    padded.resize(target_dim, 0);
                    lookup(&padded)
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let MapKind::QiEmbedding { l, c } = kind {
                if !(*l >= 1.0 && *c >= 0.0) {
                    return Err(MapError::Invalid(format!("qi constants l = {l}, c = {c}")));
                }
                for x in domain.points() {
                    for y in x + 1..domain.len() {
                        let d = domain.dist(x, y);
                        let e = codomain.dist(images[x], images[y]);
                        if e > l * d + c + DIST_TOL || e < d / l - c - DIST_TOL {
                            return Err(MapError::Invalid(format!("pair ({x},{y}) breaks the ({l},{c}) bounds")));
                        }
                    }
                }
            }
            images
        }
        MapKind::Horospherical => {
            let dc = coords_of(&domain, "domain")?;
            dc.iter()
                .map(|c| {
                    if c.len() != 1 {
                        return Err(MapError::Incompatible("horospherical map needs a path domain".into()));
                    }
                    lookup(&[c[0], 0])
                })
                .collect::<Result<_, _>>()?
        }
        MapKind::Poincare => return Err(MapError::Invalid("the Poincare model is built by poincare_model".into())),
        MapKind::User => return Err(MapError::Invalid("user maps are built with SpaceMap::new".into())),
    };
    SpaceMap::new(domain, codomain, images, kind.clone())
}

/// Path of `n` points sent into a half-plane sample of `n` columns along
/// the horocycle at height 1.
pub fn horospherical_fixture(n: usize) -> Result<SpaceMap, MapError> {
    let layers = (usize::BITS - n.max(1).leading_zeros()) as usize + 1;
    let domain = Arc::new(crate::space::gen_space(&SpaceSpec::Path { n })?);
    let codomain = Arc::new(crate::space::gen_space(&SpaceSpec::HalfPlane { width: n, layers })?);
    builtin_map(&MapKind::Horospherical, domain, codomain)
}

/// `(B, B')` for every ball of the domain universe with radii in `[r_min, r_max]`.
pub fn canonical_correspondence(f: &SpaceMap, r_min: f64, r_max: f64, floor: f64) -> Vec<(Ball, Ball)> {
    ball_universe(&f.domain, r_min, r_max).into_iter().map(|b| (b, f.canonical_image(&b, floor))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConformalClass {
    Coarse,
    Uniform,
    Rough,
    LargeScale,
}

impl ConformalClass {
    /// Whether image radii must be at least `R'`.
    pub fn has_floor(self) -> bool {
        matches!(self, ConformalClass::Uniform | ConformalClass::LargeScale)
    }

    /// Whether domain windows extend to infinite radius.
    pub fn unbounded(self) -> bool {
        matches!(self, ConformalClass::Rough | ConformalClass::LargeScale)
    }
}

/// Search limits for [`certify_conformal`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    #[serde(rename = "lMax")]
    pub l_max: f64,
    /// Largest multiplicity accepted.
    #[serde(rename = "NpCap")]
    pub np_cap: usize,
    /// Random maximal packings tried per scale when the multiplicity may exceed 1.
    pub samples: usize,
    /// Balls per window above which the window is thinned.
    #[serde(rename = "universeCap")]
    pub universe_cap: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { l_max: 64.0, np_cap: 1, samples: 64, universe_cap: 2048, seed: 0 }
    }
}

/// A packing of the domain whose image family is too crowded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub balls: Vec<Ball>,
    pub images: Vec<Ball>,
    pub l: f64,
    pub lp: f64,
    /// Colours the `lp`-scaled images need.
    #[serde(rename = "Np")]
    pub n_prime: usize,
    /// A codomain point shared by two scaled images, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shared: Option<PointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertRow {
    pub lp: f64,
    /// Least passing `l`; on a failed row, the least `l` that multiplicity 1 would need.
    pub l: f64,
    #[serde(rename = "Np")]
    pub n_prime: usize,
    #[serde(rename = "R")]
    pub r_min: f64,
    #[serde(rename = "S", with = "crate::packing::inf_as_null")]
    pub r_max: f64,
    #[serde(rename = "Rp")]
    pub rp: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Every pair of the window was examined and the multiplicity is 1.
    pub exhaustive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CertVerdict {
    CertifiedAtRange,
    Falsified,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalCertificate {
    pub class: ConformalClass,
    pub rows: Vec<CertRow>,
    pub verdict: CertVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// The parameter ranges the verdict covers.
    pub scope: String,
}

fn bitset(members: &[PointId], words: usize) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    for &x in members {
        bits[x / 64] |= 1 << (x % 64);
    }
    bits
}

fn first_common(a: &[u64], b: &[u64]) -> Option<PointId> {
    a.iter().zip(b).enumerate().find_map(|(k, (s, t))| {
        let both = s & t;
        (both != 0).then(|| k * 64 + both.trailing_zeros() as usize)
    })
}

/// Least `l` at which the closed balls `l B1` and `l B2` share a point.
fn meeting_scale(space: &FiniteMetricSpace, b1: &Ball, b2: &Ball) -> f64 {
    space.points().map(|z| (space.dist(b1.center, z) / b1.radius).max(space.dist(b2.center, z) / b2.radius)).fold(f64::INFINITY, f64::min)
}

/// Checks the map on each `(lp, window)` pair.
///
/// For multiplicity 1 the least passing `l` is found exactly: a pair of
/// domain balls whose scaled images meet must not be a packing, which
/// happens precisely when `l` reaches the scale where the pair meets.
/// Larger multiplicities are tried on doubling scales over random maximal
/// packings, which makes the row non-exhaustive. A failed row carries a
/// packing valid at `l_max` whose images need more than `np_cap` colours.
///
/// Failing on `[R, S]` rules out every window `[R0, S0] ⊇ [R, S]`, since
/// such windows admit more packings.
pub fn certify_conformal(
    f: &SpaceMap,
    class: ConformalClass,
    lps: &[f64],
    rp: f64,
    windows: &[(f64, f64)],
    opts: &CertifyOptions,
) -> Result<ConformalCertificate, MapError> {
    if lps.is_empty() {
        return Err(MapError::EmptyLpList);
    }
    if windows.is_empty() {
        return Err(MapError::Invalid("no radius windows".into()));
    }
    if let Some(&lp) = lps.iter().find(|&&lp| !(lp >= 1.0)) {
        return Err(MapError::Invalid(format!("lp = {lp} is below 1")));
    }
    if !(opts.l_max >= 1.0) {
        return Err(MapError::Invalid(format!("l_max = {} is below 1", opts.l_max)));
    }
    for &(r, s) in windows {
        if !(r > 0.0 && s >= r) {
            return Err(MapError::Invalid(format!("window [{r}, {s}]")));
        }
    }
    let floor = if class.has_floor() { rp } else { 0.0 };
    let mut rows = Vec::new();
    for &lp in lps {
        for (k, &(r, s)) in windows.iter().enumerate() {
            let seed = opts.seed.wrapping_add((rows.len() as u64) << 32).wrapping_add(k as u64);
            rows.push(certify_row(f, lp, r, s, floor, opts, seed)?);
        }
    }
    let witness = rows.iter().find_map(|r| r.witness.clone());
    let verdict = if witness.is_some() {
        CertVerdict::Falsified
    } else if rows.iter().all(|r| r.pass && r.exhaustive) {
        CertVerdict::CertifiedAtRange
    } else {
        CertVerdict::Inconclusive
    };
    let fmt_s = |s: f64| if s.is_infinite() { "inf".to_string() } else { s.to_string() };
    let scope = format!(
        "tested lp in {:?}; windows {}; Rp = {floor}; l <= {}; Np <= {}; verdicts cover these ranges only",
        lps,
        windows.iter().map(|&(r, s)| format!("[{r}, {}]", fmt_s(s))).collect::<Vec<_>>().join(", "),
        opts.l_max,
        opts.np_cap
    );
    Ok(ConformalCertificate { class, rows, verdict, witness, scope })
}

fn certify_row(f: &SpaceMap, lp: f64, r: f64, s: f64, floor: f64, opts: &CertifyOptions, seed: u64) -> Result<CertRow, MapError> {
    let (dom, cod) = (&*f.domain, &*f.codomain);
    let mut universe = ball_universe(dom, r, s);
    let mut exhaustive = true;
    if universe.len() > opts.universe_cap.max(1) {
        let stride = universe.len().div_ceil(opts.universe_cap.max(1));
        universe = universe.into_iter().step_by(stride).collect();
        exhaustive = false;
    }
    let images: Vec<Ball> = universe.iter().map(|b| f.canonical_image(b, floor)).collect();
    let words = cod.len().div_ceil(64);
    let scaled: Vec<Vec<u64>> = images.iter().map(|b| bitset(&cod.ball_members(b.center, b.radius * lp), words)).collect();

    // least l separating every pair whose scaled images meet
    let mut need = 1.0;
    let mut worst: Option<(usize, usize, PointId)> = None;
    for i in 0..universe.len() {
        for j in i + 1..universe.len() {
            let (bi, bj) = (&universe[i], &universe[j]);
            let reach = dom.dist(bi.center, bj.center) / bi.radius.max(bj.radius);
            if reach <= need {
                continue;
            }
            let Some(shared) = first_common(&scaled[i], &scaled[j]) else { continue };
            let meet = meeting_scale(dom, bi, bj);
            if meet > need {
                need = meet;
                worst = Some((i, j, shared));
            }
        }
    }
    let mut row = CertRow { lp, l: need, n_prime: 1, r_min: r, r_max: s, rp: floor, pass: true, witness: None, exhaustive };
    if need <= opts.l_max {
        return Ok(row);
    }
    row.pass = false;
    row.exhaustive = false;
    if opts.np_cap > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scales: Vec<f64> = std::iter::successors(Some(1.0f64), |l| Some(l * 2.0)).take_while(|&l| l < opts.l_max).collect();
        scales.push(opts.l_max);
        for &l in &scales {
            let mut crowded: Option<(Vec<usize>, usize)> = None;
            let mut worst_np = 1;
            for _ in 0..opts.samples.max(1) {
                let chosen = random_maximal_packing(dom, &universe, l, &mut rng);
                let imgs: Vec<Ball> = chosen.iter().map(|&i| images[i]).collect();
                let np = packing_multiplicity(cod, &imgs, lp).colors;
                worst_np = worst_np.max(np);
                if np > opts.np_cap && crowded.as_ref().is_none_or(|c| np > c.1) {
                    crowded = Some((chosen, np));
                }
            }
            match crowded {
                None => {
                    row.l = l;
                    row.n_prime = worst_np;
                    row.pass = true;
                    return Ok(row);
                }
                Some((chosen, np)) if l == opts.l_max => {
                    row.n_prime = np;
                    row.witness = Some(Witness {
                        balls: chosen.iter().map(|&i| universe[i]).collect(),
                        images: chosen.iter().map(|&i| images[i]).collect(),
                        l,
                        lp,
                        n_prime: np,
                        shared: None,
                    });
                }
                Some(_) => {}
            }
        }
        return Ok(row);
    }
    let (i, j, shared) = worst.expect("a meeting pair sets need above 1");
    let balls = vec![universe[i], universe[j]];
    debug_assert!(is_packing(dom, &balls, opts.l_max, r, s).valid);
    row.n_prime = 2;
    row.witness = Some(Witness { balls, images: vec![images[i], images[j]], l: opts.l_max, lp, n_prime: 2, shared: Some(shared) });
    Ok(row)
}

fn random_maximal_packing(space: &FiniteMetricSpace, universe: &[Ball], l: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..universe.len()).collect();
    order.shuffle(rng);
    let mut occupied = vec![false; space.len()];
    let mut chosen = Vec::new();
    for i in order {
        let m = space.ball_members(universe[i].center, universe[i].radius * l);
        if m.iter().any(|&x| occupied[x]) {
            continue;
        }
        for x in m {
            occupied[x] = true;
        }
        chosen.push(i);
    }
    chosen.sort_unstable();
    chosen
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    /// `E_{l,R,S}(u o f)`.
    pub lhs: f64,
    /// `E_{lp,R'',S''}(u)` with `R''`, `S''` the least and largest image radii.
    pub rhs: f64,
    #[serde(rename = "Np")]
    pub n_prime: usize,
    pub holds: bool,
    /// Packing realising `lhs` when the inequality fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violating: Option<Vec<Ball>>,
}

/// Compares `E^p(u o f)` over the row's window with `Np` times `E^p(u)` over
/// the radii the images of that window take. Both sides use the exact oracle.
pub fn pullback_energy_check(f: &SpaceMap, row: &CertRow, u: &MapValues, p: f64) -> Result<PullbackReport, MapError> {
    if u.len() != f.codomain.len() {
        return Err(EnergyError::Misaligned { expected: f.codomain.len(), got: u.len() }.into());
    }
    let pulled = u.pull_back(&f.images);
    let left = energy(&f.domain, &pulled, p, row.l, row.r_min, row.r_max, EnergyMode::Exact)?;
    let radii: Vec<f64> = canonical_correspondence(f, row.r_min, row.r_max, row.rp).iter().map(|(_, b)| b.radius).collect();
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    let rhs = if radii.is_empty() { 0.0 } else { energy(&f.codomain, u, p, row.lp, lo, hi, EnergyMode::Exact)?.value() };
    let lhs = left.value();
    let bound = row.n_prime as f64 * rhs;
    let holds = lhs <= bound * (1.0 + 1e-12) + 1e-12;
    Ok(PullbackReport { lhs, rhs, n_prime: row.n_prime, holds, violating: (!holds).then_some(left.witness_balls) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPair {
    pub x1: PointId,
    pub x2: PointId,
    /// Least of the domain value and the capacity of the pulled-back arc.
    pub lhs: f64,
    /// Codomain value at `f(x1)`, `f(x2)` with unbounded radii; infinite
    /// when no arc avoids the boundary.
    pub rhs: f64,
    pub holds: bool,
    #[serde(rename = "pulledArc")]
    pub pulled_arc: Vec<PointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTransportReport {
    #[serde(rename = "Np")]
    pub n_prime: usize,
    pub pairs: Vec<DeltaPair>,
    pub holds: bool,
}

/// Relative slack for comparing two solver outputs.
const SOLVER_SLACK: f64 = 1e-5;

/// Compares `delta_{p,l,R,S}(x1, x2)` with `Np delta_{p,lp,Rp,inf}(f x1, f x2)`
/// for each sampled pair. The codomain's best arc is pulled back through the
/// inverse map and its capacity added to the domain's own arc pool; the
/// domain boundary is the preimage of `boundary`.
#[allow(clippy::too_many_arguments)]
pub fn delta_transport_check(
    f: &SpaceMap,
    row: &CertRow,
    p: f64,
    boundary: &[PointId],
    pairs: &[(PointId, PointId)],
    pool: ArcPool,
) -> Result<DeltaTransportReport, MapError> {
    let inv = f.inverse()?;
    let pre_boundary: Vec<PointId> = boundary.iter().map(|&y| inv[y]).collect();
    let mut out = Vec::with_capacity(pairs.len());
    for &(x1, x2) in pairs {
        f.domain.check(x1)?;
        f.domain.check(x2)?;
        let image = match grotzsch_delta(&f.codomain, f.images[x1], f.images[x2], boundary, p, row.lp, row.rp, f64::INFINITY, pool) {
            Ok(d) => Some(d),
            Err(VarError::NoArc(..)) => None,
            Err(e) => return Err(e.into()),
        };
        let pulled: Vec<PointId> = image.as_ref().map_or_else(Vec::new, |d| d.arc.iter().map(|&y| inv[y]).collect());
        let transported = if pulled.is_empty() {
            f64::INFINITY
        } else {
            let mut set = pulled.clone();
            set.sort_unstable();
            capacity(&f.domain, &CapacityProblem::new(set, pre_boundary.clone(), p, row.l, row.r_min, row.r_max))?.value
        };
        let own = match grotzsch_delta(&f.domain, x1, x2, &pre_boundary, p, row.l, row.r_min, row.r_max, pool) {
            Ok(d) => d.value,
            Err(VarError::NoArc(..)) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let lhs = own.min(transported);
        let rhs = image.map_or(f64::INFINITY, |d| d.value);
        let holds = lhs <= row.n_prime as f64 * rhs * (1.0 + SOLVER_SLACK) + 1e-9;
        out.push(DeltaPair { x1, x2, lhs, rhs, holds, pulled_arc: pulled });
    }
    let holds = out.iter().all(|d| d.holds);
    Ok(DeltaTransportReport { n_prime: row.n_prime, pairs: out, holds })
}

/// Radial and boundary coordinates of a rooted tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareImage {
    pub root: PointId,
    pub depth: Vec<usize>,
    /// `e^{-depth}`.
    pub chi: Vec<f64>,
    /// Least-index deepest leaf below each vertex.
    pub phi: Vec<PointId>,
    /// Deepest leaves, ascending.
    pub leaves: Vec<PointId>,
    parent: Vec<Option<PointId>>,
}

impl PoincareImage {
    /// Depth of the common ancestor of two vertices.
    pub fn meet_depth(&self, mut a: PointId, mut b: PointId) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        self.depth[a]
    }

    /// Boundary quasi-metric `e^{-1} e^{-(xi|eta)}` between two leaves, 0 on the diagonal.
    pub fn boundary_dist(&self, xi: PointId, eta: PointId) -> f64 {
        if xi == eta {
            0.0
        } else {
            (-1.0 - self.meet_depth(xi, eta) as f64).exp()
        }
    }

    /// Product ball attached to `B(x, r)`: the interval `[e^{-r-t}, min(1, e^{r-t})]`
    /// and the boundary ball around `phi(x)` of radius `e^{-t} sinh r`, `t` the depth of `x`.
    pub fn product_ball(&self, x: PointId, r: f64) -> (DInterval, PointId, f64) {
        let t = self.depth[x] as f64;
        (DInterval::from_radius_position(r, t), self.phi[x], (-t).exp() * r.sinh())
    }

    fn in_product_ball(&self, y: PointId, ball: &(DInterval, PointId, f64)) -> bool {
        let (iv, center, rad) = ball;
        iv.contains(self.chi[y]) && self.boundary_dist(*center, self.phi[y]) <= rad * (1.0 + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionKind {
    /// `y` in `B` but `pi(y)` outside `B'`.
    Forward,
    /// `pi(y)` in `B'` but `y` outside `3B`.
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionFailure {
    pub center: PointId,
    pub radius: f64,
    pub point: PointId,
    pub kind: InclusionKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// Balls with radius at least the requested threshold.
    pub checked: usize,
    pub passed: usize,
    #[serde(rename = "passRate")]
    pub pass_rate: f64,
    /// First failures, at most [`MAX_COUNTEREXAMPLES`].
    pub counterexamples: Vec<InclusionFailure>,
    /// Least integer radius from which every ball passes both inclusions.
    #[serde(rename = "smallestPassingThreshold")]
    pub smallest_passing_threshold: Option<f64>,
}

pub const MAX_COUNTEREXAMPLES: usize = 16;

fn tree_structure(tree: &FiniteMetricSpace) -> Result<(PointId, Vec<Option<PointId>>, Vec<usize>), MapError> {
    let n = tree.len();
    let root = tree.basepoint().ok_or_else(|| MapError::NotATree("no root".into()))?;
    let edges: usize = tree.points().map(|x| tree.step_neighbors(x).len()).sum::<usize>() / 2;
    if edges + 1 != n {
        return Err(MapError::NotATree(format!("{edges} unit edges on {n} vertices")));
    }
    let mut parent = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in tree.step_neighbors(x) {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    if depth.contains(&usize::MAX) {
        return Err(MapError::NotATree("unit steps do not connect the vertices".into()));
    }
    for x in tree.points() {
        if (tree.dist(root, x) - depth[x] as f64).abs() > DIST_TOL {
            return Err(MapError::NotATree(format!("distance to {x} is not its depth")));
        }
    }
    Ok((root, parent, depth))
}

/// Builds `pi = (chi, phi)` on a rooted tree and checks, for every ball
/// `B(x, r)` with integer `r >= threshold`, that `pi(B)` lies in the product
/// ball `B'` and that every vertex sent into `B'` lies in `3B`.
pub fn poincare_model(tree: &FiniteMetricSpace, threshold: f64) -> Result<(PoincareImage, PoincareReport), MapError> {
    let (root, parent, depth) = tree_structure(tree)?;
    let n = tree.len();
    let deepest = depth.iter().copied().max().unwrap_or(0);
    let leaves: Vec<PointId> = (0..n).filter(|&x| depth[x] == deepest).collect();
    let mut phi = vec![usize::MAX; n];
    for &leaf in &leaves {
        let mut v = Some(leaf);
        while let Some(x) = v {
            if phi[x] != usize::MAX {
                break;
            }
            phi[x] = leaf;
            v = parent[x];
        }
    }
    if let Some(x) = phi.iter().position(|&l| l == usize::MAX) {
        return Err(MapError::NotATree(format!("vertex {x} has no deepest leaf below it")));
    }
    let chi = depth.iter().map(|&d| (-(d as f64)).exp()).collect();
    let image = PoincareImage { root, depth, chi, phi, leaves, parent };

    let max_r = tree.diameter().ceil() as usize;
    // failing[r] records whether some ball of radius r fails
    let mut failing = vec![false; max_r + 1];
    let (mut checked, mut passed) = (0, 0);
    let mut counterexamples = Vec::new();
    for r in 1..=max_r {
        let rf = r as f64;
        for x in tree.points() {
            let b = image.product_ball(x, rf);
            let mut ok = true;
            for y in tree.points() {
                let d = tree.dist(x, y);
                let kind = if d <= rf + DIST_TOL && !image.in_product_ball(y, &b) {
                    Some(InclusionKind::Forward)
                } else if d > 3.0 * rf + DIST_TOL && image.in_product_ball(y, &b) {
                    Some(InclusionKind::Backward)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    ok = false;
                    if rf >= threshold && counterexamples.len() < MAX_COUNTEREXAMPLES {
                        counterexamples.push(InclusionFailure { center: x, radius: rf, point: y, kind });
                    }
                    break;
                }
            }
            failing[r] |= !ok;
            if rf >= threshold {
                checked += 1;
                passed += ok as usize;
            }
        }
    }
    let smallest = (1..=max_r).find(|&r0| failing[r0..].iter().all(|f| !f)).map(|r| r as f64);
    let pass_rate = if checked == 0 { 1.0 } else { passed as f64 / checked as f64 };
    Ok((image, PoincareReport { checked, passed, pass_rate, counterexamples, smallest_passing_threshold: smallest }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::gen_space;

    fn arc(spec: SpaceSpec) -> Arc<FiniteMetricSpace> {
        Arc::new(gen_space(&spec).unwrap())
    }

    #[test]
    fn power_maps() {
        let dom = arc(SpaceSpec::Interval { lo: -8, hi: 8 });
        let id = builtin_map(&MapKind::Power { k: 1 }, dom.clone(), dom.clone()).unwrap();
        assert_eq!(id.images, (0..17).collect::<Vec<_>>());
        let cod = arc(SpaceSpec::Interval { lo: -64, hi: 64 });
        let sq = builtin_map(&MapKind::Power { k: 2 }, dom.clone(), cod.clone()).unwrap();
        let three = dom.point_at(&[3]).unwrap();
        assert_eq!(cod.coord(sq.apply(three)).unwrap(), &[9]);
        let minus = dom.point_at(&[-3]).unwrap();
        assert_eq!(cod.coord(sq.apply(minus)).unwrap(), &[-9]);
        // B(4, 1) = {3, 4, 5} goes to {9, 16, 25}
        let four = dom.point_at(&[4]).unwrap();
        let img = sq.canonical_image(&Ball::new(four, 1.0), 0.0);
        assert_eq!(cod.coord(img.center).unwrap(), &[16]);
        assert_eq!(img.radius, 9.0);
        let small = arc(SpaceSpec::Interval { lo: -10, hi: 10 });
        assert!(matches!(builtin_map(&MapKind::Power { k: 2 }, dom, small), Err(MapError::Incompatible(_))));
    }

    #[test]
    fn embeddings() {
        let dom = arc(SpaceSpec::Path { n: 6 });
        let cod = arc(SpaceSpec::Box { ranges: vec![(0, 5), (-1, 1)] });
        let f = builtin_map(&MapKind::QiEmbedding { l: 1.0, c: 0.0 }, dom.clone(), cod.clone()).unwrap();
        for x in dom.points() {
            assert_eq!(cod.coord(f.apply(x)).unwrap(), &[x as i64, 0]);
            for y in dom.points() {
                assert_eq!(dom.dist(x, y), cod.dist(f.apply(x), f.apply(y)));
            }
        }
        let g = builtin_map(&MapKind::GridEmbedding, dom.clone(), cod.clone()).unwrap();
        assert_eq!(f.images, g.images);
        let wrong = arc(SpaceSpec::Path { n: 3 });
        assert!(builtin_map(&MapKind::Identity, dom.clone(), wrong).is_err());
        assert!(builtin_map(&MapKind::Poincare, dom.clone(), cod.clone()).is_err());
        assert!(builtin_map(&MapKind::QiEmbedding { l: 0.5, c: 0.0 }, dom, cod).is_err());
    }

    #[test]
    fn identity_correspondence_keeps_member_sets() {
        let f = SpaceMap::identity(arc(SpaceSpec::Grid { d: 2, n: 4 }));
        for (b, bp) in canonical_correspondence(&f, 1.0, 3.0, 0.0) {
            assert_eq!(b.members(&f.domain), bp.members(&f.codomain));
        }
    }

    #[test]
    fn snowflake_radii() {
        let f = SpaceMap::snowflake_identity(arc(SpaceSpec::Path { n: 12 }), 0.5).unwrap();
        for r in [1.0, 4.0, 9.0] {
            let b = f.canonical_image(&Ball::new(0, r), 0.0);
            assert!((b.radius - r.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_certifies_at_lp() {
        let f = SpaceMap::identity(arc(SpaceSpec::Path { n: 12 }));
        let cert =
            certify_conformal(&f, ConformalClass::LargeScale, &[1.0, 2.0, 3.0], 1.0, &[(1.0, f64::INFINITY)], &CertifyOptions::default())
                .unwrap();
        assert_eq!(cert.verdict, CertVerdict::CertifiedAtRange);
        for row in &cert.rows {
            assert!(row.pass && row.exhaustive);
            assert_eq!(row.n_prime, 1);
            assert!((row.l - row.lp).abs() < 1e-12, "{row:?}");
        }
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["class"], "largeScale");
        assert_eq!(json["verdict"], "certifiedAtRange");
        assert!(json["rows"][0]["S"].is_null());
    }

    #[test]
    fn snowflake_needs_lp_squared() {
        let f = SpaceMap::snowflake_identity(arc(SpaceSpec::Path { n: 20 }), 0.5).unwrap();
        let cert = certify_conformal(&f, ConformalClass::LargeScale, &[2.0, 3.0], 1.0, &[(1.0, 2.0)], &CertifyOptions::default()).unwrap();
        for row in &cert.rows {
            assert!((row.l - row.lp * row.lp).abs() < 1e-9, "{row:?}");
        }
        // on integer samples the breakpoint can sit below lp^2
        let odd = certify_conformal(&f, ConformalClass::LargeScale, &[1.5], 1.0, &[(1.0, 2.0)], &CertifyOptions::default()).unwrap();
        assert!(odd.rows[0].l <= 2.25);
    }

    #[test]
    fn failed_row_has_valid_witness() {
        let f = SpaceMap::snowflake_identity(arc(SpaceSpec::Path { n: 20 }), 0.5).unwrap();
        let opts = CertifyOptions { l_max: 2.0, ..Default::default() };
        let cert = certify_conformal(&f, ConformalClass::Coarse, &[2.0], 0.0, &[(1.0, 1.0)], &opts).unwrap();
        assert_eq!(cert.verdict, CertVerdict::Falsified);
        let w = cert.witness.unwrap();
        assert!(is_packing(&f.domain, &w.balls, w.l, 1.0, 1.0).valid);
        let shared = w.shared.unwrap();
        for b in &w.images {
            assert!(f.codomain.dist(b.center, shared) <= b.radius * w.lp + 1e-9);
        }
        assert!(matches!(certify_conformal(&f, ConformalClass::Coarse, &[], 0.0, &[(1.0, 1.0)], &opts), Err(MapError::EmptyLpList)));
    }

    #[test]
    fn pullback_identity_is_equality() {
        let s = arc(SpaceSpec::Path { n: 8 });
        let f = SpaceMap::identity(s);
        let cert = certify_conformal(&f, ConformalClass::LargeScale, &[2.0], 1.0, &[(1.0, 1.0)], &CertifyOptions::default()).unwrap();
        let u = MapValues::scalar(vec![0.0, 1.0, 3.0, 2.0, 5.0, 5.0, 1.0, 0.0]);
        let rep = pullback_energy_check(&f, &cert.rows[0], &u, 2.0).unwrap();
        assert!(rep.holds);
        assert!((rep.lhs - rep.rhs).abs() < 1e-12);
    }

    #[test]
    fn delta_under_reversal() {
        let s = arc(SpaceSpec::Path { n: 9 });
        let rev = SpaceMap::new(s.clone(), s.clone(), (0..9).rev().collect(), MapKind::User).unwrap();
        let cert = certify_conformal(&rev, ConformalClass::LargeScale, &[2.0], 1.0, &[(1.0, 1.0)], &CertifyOptions::default()).unwrap();
        assert_eq!(cert.rows[0].l, 2.0);
        let rep = delta_transport_check(&rev, &cert.rows[0], 2.0, &[0], &[(1, 3), (2, 5)], ArcPool::default()).unwrap();
        assert!(rep.holds, "{rep:?}");
        let collapse = SpaceMap::new(s.clone(), s, vec![0; 9], MapKind::User).unwrap();
        assert!(matches!(collapse.inverse(), Err(MapError::NotBijective(_))));
    }

    #[test]
    fn poincare_on_binary_tree() {
        let t = gen_space(&SpaceSpec::Tree { arity: 2, depth: 4 }).unwrap();
        let (img, rep) = poincare_model(&t, 1.0).unwrap();
        assert_eq!(img.chi[0], 1.0);
        for x in t.points() {
            assert!((img.chi[x] - (-t.dist(0, x)).exp()).abs() < 1e-15);
        }
        assert_eq!(img.phi[0], img.leaves[0]);
        assert!(rep.smallest_passing_threshold.is_some_and(|r| r <= 3.0), "{rep:?}");
        let cycle = gen_space(&SpaceSpec::Cycle { n: 5 }).unwrap();
        assert!(matches!(poincare_model(&cycle, 1.0), Err(MapError::NotATree(_))));
    }

    #[test]
    fn composition_multiplies_multiplicity() {
        let s = arc(SpaceSpec::Path { n: 16 });
        let f = SpaceMap::snowflake_identity(s.clone(), 0.5).unwrap();
        let g = SpaceMap::identity(f.codomain.clone());
        let h = f.then(&g).unwrap();
        let opts = CertifyOptions::default();
        let cf = certify_conformal(&f, ConformalClass::Coarse, &[2.0], 0.0, &[(1.0, 2.0)], &opts).unwrap();
        let ch = certify_conformal(&h, ConformalClass::Coarse, &[2.0], 0.0, &[(1.0, 2.0)], &opts).unwrap();
        assert!(ch.rows[0].n_prime <= cf.rows[0].n_prime);
        assert!(ch.rows[0].l <= cf.rows[0].l + 1e-12);
    }
}
