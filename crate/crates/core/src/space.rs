//! Finite metric spaces, their balls, and the interval structure on `(0,1]`.
//!
//! Every computation in this crate runs on a [`FiniteMetricSpace`]: a dense
//! set of points `0..n` together with exact pairwise distances. Lattice
//! spaces (paths, grids, boxes, lattice balls) keep integer coordinates and
//! evaluate their graph metric (the L1 distance) on demand, so large grids do
//! not pay for an `n x n` matrix.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense point index.
pub type PointId = usize;

/// Comparison slack used for every `distance <= radius` test.
pub const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("snowflake exponent {0} outside (0, 1]")]
    BadExponent(f64),
    #[error("scaling factor {0} is below 1")]
    BadScale(f64),
    #[error("distance matrix has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("distance matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(PointId, PointId),
    #[error("negative or NaN distance at ({0}, {1})")]
    NegativeDistance(PointId, PointId),
    #[error("nonzero diagonal entry at {0}")]
    NonzeroDiagonal(PointId),
    #[error("point {0} is out of range")]
    OutOfRange(PointId),
    #[error("interval [{0}, {1}] is not a sub-interval of [0, 1]")]
    BadInterval(f64, f64),
    #[error("invalid generator: {0}")]
    BadGenerator(String),
    #[error("space file: {0}")]
    Format(String),
}

/// How the distances of a space were produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceKind {
    GraphShortestPath,
    ExplicitMatrix,
    Snowflake { alpha: f64 },
    WarpedProduct { levels: usize, alpha: f64 },
}

impl SpaceKind {
    /// Tag written to the `kind` field of a space file.
    pub fn tag(&self) -> String {
        match self {
            SpaceKind::GraphShortestPath => "graph-shortest-path".to_string(),
            SpaceKind::ExplicitMatrix => "explicit-matrix".to_string(),
            SpaceKind::Snowflake { alpha } => format!("snowflake({alpha})"),
            SpaceKind::WarpedProduct { levels, alpha } => format!("warped-product({levels},{alpha})"),
        }
    }

    pub fn parse_tag(tag: &str) -> Result<Self, SpaceError> {
        let args = |s: &str| -> Vec<String> {
            s.trim_end_matches(')').split(',').map(|a| a.trim().to_string()).collect()
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| SpaceError::Format(format!("bad kind tag {tag}")));
        match tag {
            "graph-shortest-path" => Ok(SpaceKind::GraphShortestPath),
            "explicit-matrix" => Ok(SpaceKind::ExplicitMatrix),
            t if t.starts_with("snowflake(") => {
                let a = args(&t["snowflake(".len()..]);
                Ok(SpaceKind::Snowflake { alpha: num(&a[0])? })
            }
            t if t.starts_with("warped-product(") => {
                let a = args(&t["warped-product(".len()..]);
                if a.len() != 2 {
                    return Err(SpaceError::Format(format!("bad kind tag {tag}")));
                }
                let levels = a[0].parse::<usize>().map_err(|_| SpaceError::Format(format!("bad kind tag {tag}")))?;
                Ok(SpaceKind::WarpedProduct { levels, alpha: num(&a[1])? })
            }
            _ => Err(SpaceError::Format(format!("unknown kind tag {tag}"))),
        }
    }
}

#[derive(Clone, Debug)]
enum Distances {
    Dense(Vec<f64>),
    /// L1 distance on integer coordinates (the graph metric of a lattice box or ball).
    Lattice,
}

/// Layout of a warped product `D x Z^alpha`: point `level * z_len + z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductLayout {
    pub heights: Vec<f64>,
    pub z_len: usize,
    pub alpha: f64,
}

/// A finite metric (or quasi-metric) space on the points `0..n`.
#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Distances,
    coords: Option<Vec<Vec<i64>>>,
    coord_index: Option<HashMap<Vec<i64>, PointId>>,
    kind: SpaceKind,
    name: String,
    basepoint: Option<PointId>,
    boundary: Vec<PointId>,
    triangle_defect: f64,
    product: Option<ProductLayout>,
    step_graph: OnceLock<Vec<Vec<PointId>>>,
    distinct: OnceLock<Vec<f64>>,
}

impl PartialEq for FiniteMetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.kind == other.kind
            && self.basepoint == other.basepoint
            && self.boundary == other.boundary
            && (0..self.n).all(|i| (0..self.n).all(|j| self.dist(i, j).to_bits() == other.dist(i, j).to_bits()))
    }
}

impl FiniteMetricSpace {
    /// Builds a space from a row-major distance matrix.
    ///
    /// The matrix must be symmetric, nonnegative and vanish on the diagonal.
    /// A failing triangle inequality is not an error: the smallest `K` with
    /// `d(x,y) <= K (d(x,z) + d(z,y))` is recorded as the triangle defect.
    pub fn from_matrix(n: usize, dist: Vec<f64>, kind: SpaceKind) -> Result<Self, SpaceError> {
        if dist.len() != n * n {
            return Err(SpaceError::BadShape { expected: n * n, got: dist.len() });
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(SpaceError::NonzeroDiagonal(i));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if d.is_nan() || d < 0.0 {
                    return Err(SpaceError::NegativeDistance(i, j));
                }
                if d != dist[j * n + i] {
                    return Err(SpaceError::NotSymmetric(i, j));
                }
            }
        }
        let mut space = Self::raw(n, Distances::Dense(dist), kind, format!("explicit({n})"));
        space.triangle_defect = space.compute_triangle_defect();
        Ok(space)
    }

    /// Shortest-path metric of a weighted undirected graph.
    pub fn from_edges(n: usize, edges: &[(PointId, PointId, f64)]) -> Result<Self, SpaceError> {
        let mut adj = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(SpaceError::OutOfRange(i.max(j)));
            }
            if w.is_nan() || w < 0.0 {
                return Err(SpaceError::NegativeDistance(i, j));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let mut dist = vec![f64::INFINITY; n * n];
        for s in 0..n {
            dijkstra(&adj, s, &mut dist[s * n..(s + 1) * n]);
        }
        Ok(Self::raw(n, Distances::Dense(dist), SpaceKind::GraphShortestPath, format!("edges({n})")))
    }

    fn raw(n: usize, dist: Distances, kind: SpaceKind, name: String) -> Self {
        FiniteMetricSpace {
            n,
            dist,
            coords: None,
            coord_index: None,
            kind,
            name,
            basepoint: None,
            boundary: Vec::new(),
            triangle_defect: 1.0,
            product: None,
            step_graph: OnceLock::new(),
            distinct: OnceLock::new(),
        }
    }

    fn lattice(coords: Vec<Vec<i64>>, name: String) -> Self {
        let index = coords.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let mut s = Self::raw(coords.len(), Distances::Lattice, SpaceKind::GraphShortestPath, name);
        s.coords = Some(coords);
        s.coord_index = Some(index);
        s
    }

    fn with_coords(mut self, coords: Vec<Vec<i64>>) -> Self {
        self.coord_index = Some(coords.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect());
        self.coords = Some(coords);
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> std::ops::Range<PointId> {
        0..self.n
    }

    #[inline]
    pub fn dist(&self, x: PointId, y: PointId) -> f64 {
        match &self.dist {
            Distances::Dense(d) => d[x * self.n + y],
            Distances::Lattice => {
                let c = self.coords.as_ref().expect("lattice space has coordinates");
                c[x].iter().zip(&c[y]).map(|(a, b)| (a - b).abs()).sum::<i64>() as f64
            }
        }
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Short generator descriptor, e.g. `path(7)`.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basepoint(&self) -> Option<PointId> {
        self.basepoint
    }

    pub fn boundary(&self) -> &[PointId] {
        &self.boundary
    }

    pub fn triangle_defect(&self) -> f64 {
        self.triangle_defect
    }

    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    pub fn coord(&self, x: PointId) -> Option<&[i64]> {
        self.coords.as_ref().map(|c| c[x].as_slice())
    }

    /// Point with the given integer coordinates, if any.
    pub fn point_at(&self, coord: &[i64]) -> Option<PointId> {
        self.coord_index.as_ref().and_then(|m| m.get(coord).copied())
    }

    pub fn product_layout(&self) -> Option<&ProductLayout> {
        self.product.as_ref()
    }

    pub fn with_basepoint(mut self, o: PointId) -> Result<Self, SpaceError> {
        self.check(o)?;
        self.basepoint = Some(o);
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: Vec<PointId>) -> Result<Self, SpaceError> {
        for &b in &boundary {
            self.check(b)?;
        }
        let mut boundary = boundary;
        boundary.sort_unstable();
        boundary.dedup();
        self.boundary = boundary;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn check(&self, x: PointId) -> Result<(), SpaceError> {
        if x < self.n {
            Ok(())
        } else {
            Err(SpaceError::OutOfRange(x))
        }
    }

    pub fn diameter(&self) -> f64 {
        self.distinct_distances().last().copied().unwrap_or(0.0)
    }

    /// Sorted distinct positive distance values.
    pub fn distinct_distances(&self) -> &[f64] {
        self.distinct.get_or_init(|| {
            let mut v: Vec<f64> = match (&self.dist, &self.coords) {
                (Distances::Lattice, Some(c)) => {
                    // L1 distances on a lattice are integers up to the bounding-box span.
                    let dim = c.first().map_or(0, |p| p.len());
                    let span: i64 = (0..dim)
                        .map(|k| {
                            let lo = c.iter().map(|p| p[k]).min().unwrap_or(0);
                            let hi = c.iter().map(|p| p[k]).max().unwrap_or(0);
                            hi - lo
                        })
                        .sum();
                    let diam = if self.n > 4096 {
                        span
                    } else {
                        let mut m = 0;
                        for i in 0..self.n {
                            for j in i + 1..self.n {
                                m = m.max(self.dist(i, j) as i64);
                            }
                        }
                        m
                    };
                    (1..=diam).map(|d| d as f64).collect()
                }
                _ => {
                    let mut v = Vec::new();
                    for i in 0..self.n {
                        for j in i + 1..self.n {
                            let d = self.dist(i, j);
                            if d > 0.0 && d.is_finite() {
                                v.push(d);
                            }
                        }
                    }
                    v
                }
            };
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() <= DIST_TOL * b.abs().max(1.0));
            v
        })
    }

    /// Points within `radius` of `center`, ascending.
    pub fn ball_members(&self, center: PointId, radius: f64) -> Vec<PointId> {
        if let (Distances::Lattice, Some(coords), Some(index)) = (&self.dist, &self.coords, &self.coord_index) {
            let r = (radius + DIST_TOL).floor() as i64;
            let dim = coords[center].len();
            let stencil = lattice_ball_size(dim, r);
            if stencil < self.n as u128 {
                let mut out = Vec::new();
                let mut offset = vec![0i64; dim];
                let base = &coords[center];
                let mut probe = base.clone();
                enumerate_l1(&mut offset, 0, r, &mut |off| {
                    for k in 0..dim {
                        probe[k] = base[k] + off[k];
                    }
                    if let Some(&p) = index.get(&probe) {
                        out.push(p);
                    }
                });
                out.sort_unstable();
                return out;
            }
        }
        (0..self.n).filter(|&y| self.dist(center, y) <= radius + DIST_TOL).collect()
    }

    /// Neighbours in the unit-step graph: pairs at distance in `(0, 1]`.
    pub fn step_neighbors(&self, x: PointId) -> &[PointId] {
        &self.step_graph()[x]
    }

    pub fn step_graph(&self) -> &[Vec<PointId>] {
        self.step_graph.get_or_init(|| (0..self.n).map(|x| {
            let mut v: Vec<PointId> = self
                .ball_members(x, 1.0)
                .into_iter()
                .filter(|&y| y != x && self.dist(x, y) > 0.0)
                .collect();
            v.sort_unstable();
            v
        }).collect())
    }

    /// Whether the unit-step graph restricted to `set` is connected.
    pub fn is_step_connected(&self, set: &[PointId]) -> bool {
        if set.len() <= 1 {
            return true;
        }
        let inside: HashMap<PointId, usize> = set.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut seen = vec![false; set.len()];
        let mut queue = VecDeque::from([set[0]]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in self.step_neighbors(x) {
                if let Some(&k) = inside.get(&y) {
                    if !seen[k] {
                        seen[k] = true;
                        count += 1;
                        queue.push_back(y);
                    }
                }
            }
        }
        count == set.len()
    }

    /// Row-major copy of the full distance matrix.
    pub fn matrix(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.push(self.dist(i, j));
            }
        }
        m
    }

    fn compute_triangle_defect(&self) -> f64 {
        if self.n > 300 {
            return 1.0;
        }
        let mut k: f64 = 1.0;
        for x in 0..self.n {
            for y in x + 1..self.n {
                let dxy = self.dist(x, y);
                for z in 0..self.n {
                    if z == x || z == y {
                        continue;
                    }
                    let s = self.dist(x, z) + self.dist(z, y);
                    if s > 0.0 && dxy / s > k {
                        k = dxy / s;
                    }
                }
            }
        }
        k
    }

    /// Snowflake `(X, d^alpha)`.
    pub fn snowflake(&self, alpha: f64) -> Result<Self, SpaceError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SpaceError::BadExponent(alpha));
        }
        let dist: Vec<f64> = self.matrix().into_iter().map(|d| d.powf(alpha)).collect();
        let mut s = Self::raw(self.n, Distances::Dense(dist), SpaceKind::Snowflake { alpha }, format!("snowflake({},{alpha})", self.name));
        s.basepoint = self.basepoint;
        s.boundary = self.boundary.clone();
        if let Some(c) = &self.coords {
            s = s.with_coords(c.clone());
        }
        Ok(s)
    }
}

fn dijkstra(adj: &[Vec<(PointId, f64)>], s: PointId, out: &mut [f64]) {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;
    #[derive(PartialEq)]
    struct Item(f64, PointId);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then(o.1.cmp(&self.1))
        }
    }
    out[s] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, s)]);
    while let Some(Item(d, x)) = heap.pop() {
        if d > out[x] {
            continue;
        }
        for &(y, w) in &adj[x] {
            let nd = d + w;
            if nd < out[y] {
                out[y] = nd;
                heap.push(Item(nd, y));
            }
        }
    }
}

fn bfs_matrix(adj: &[Vec<PointId>]) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0.0;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if row[y].is_infinite() {
                    row[y] = row[x] + 1.0;
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}

fn lattice_ball_size(dim: usize, r: i64) -> u128 {
    // Crude upper bound on the number of lattice points with L1 norm <= r.
    let side = (2 * r.max(0) + 1) as u128;
    side.saturating_pow(dim as u32)
}

fn enumerate_l1(offset: &mut Vec<i64>, k: usize, budget: i64, visit: &mut dyn FnMut(&[i64])) {
    if k == offset.len() {
        visit(offset);
        return;
    }
    for v in -budget..=budget {
        offset[k] = v;
        enumerate_l1(offset, k + 1, budget - v.abs(), visit);
    }
    offset[k] = 0;
}

/// Generator descriptors accepted by [`gen_space`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpaceSpec {
    /// `n` points `0..n` on a line.
    Path { n: usize },
    /// The integers `lo..=hi` with their usual metric.
    Interval { lo: i64, hi: i64 },
    Cycle { n: usize },
    /// `[0, n)^d` with the grid graph metric.
    Grid { d: usize, n: usize },
    /// Product of integer ranges `lo..=hi` with the grid graph metric.
    Box { ranges: Vec<(i64, i64)> },
    /// Graph ball of the given radius around the origin of `Z^d`.
    GridBall { d: usize, radius: i64 },
    /// Complete `arity`-ary rooted tree of the given depth.
    Tree { arity: usize, depth: usize },
    Complete { n: usize },
    Snowflake { base: Box<SpaceSpec>, alpha: f64 },
    /// Sample `{e^{-k} : 0 <= k <= levels}` of D times `Z^alpha`, sup metric.
    WarpedProduct { levels: usize, z: Box<SpaceSpec>, alpha: f64 },
    /// Upper half-plane sample: columns `0..width`, heights `2^k`, hyperbolic metric.
    HalfPlane { width: usize, layers: usize },
    Explicit { n: usize, dist: Vec<f64> },
    Edges { n: usize, edges: Vec<(PointId, PointId, f64)> },
}

/// Builds the space described by `spec`. Deterministic.
pub fn gen_space(spec: &SpaceSpec) -> Result<FiniteMetricSpace, SpaceError> {
    match spec {
        SpaceSpec::Path { n } => {
            if *n == 0 {
                return Err(SpaceError::BadGenerator("path needs at least one point".into()));
            }
            FiniteMetricSpace::lattice((0..*n as i64).map(|i| vec![i]).collect(), format!("path({n})")).with_basepoint(0)
        }
        SpaceSpec::Interval { lo, hi } => {
            if hi < lo {
                return Err(SpaceError::BadGenerator(format!("empty interval {lo}..={hi}")));
            }
            let s = FiniteMetricSpace::lattice((*lo..=*hi).map(|i| vec![i]).collect(), format!("interval({lo},{hi})"));
            let o = s.point_at(&[0]).unwrap_or(0);
            s.with_basepoint(o)
        }
        SpaceSpec::Cycle { n } => {
            if *n < 3 {
                return Err(SpaceError::BadGenerator("cycle needs at least 3 points".into()));
            }
            let adj: Vec<Vec<PointId>> = (0..*n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
            Ok(FiniteMetricSpace::raw(*n, Distances::Dense(bfs_matrix(&adj)), SpaceKind::GraphShortestPath, format!("cycle({n})")).with_basepoint(0)?)
        }
        SpaceSpec::Grid { d, n } => {
            if *d == 0 || *n == 0 {
                return Err(SpaceError::BadGenerator("grid needs d >= 1 and n >= 1".into()));
            }
            let ranges = vec![(0, *n as i64 - 1); *d];
            let s = FiniteMetricSpace::lattice(box_coords(&ranges), format!("grid({d},{n})"));
            s.with_basepoint(0)
        }
        SpaceSpec::Box { ranges } => {
            if ranges.is_empty() || ranges.iter().any(|(lo, hi)| hi < lo) {
                return Err(SpaceError::BadGenerator("box needs nonempty ranges".into()));
            }
            let s = FiniteMetricSpace::lattice(box_coords(ranges), format!("box({ranges:?})"));
            let o = s.point_at(&vec![0; ranges.len()]).unwrap_or(0);
            s.with_basepoint(o)
        }
        SpaceSpec::GridBall { d, radius } => {
            if *d == 0 || *radius < 0 {
                return Err(SpaceError::BadGenerator("grid ball needs d >= 1 and radius >= 0".into()));
            }
            let ranges = vec![(-*radius, *radius); *d];
            let coords: Vec<Vec<i64>> =
                box_coords(&ranges).into_iter().filter(|c| c.iter().map(|v| v.abs()).sum::<i64>() <= *radius).collect();
            let s = FiniteMetricSpace::lattice(coords, format!("grid-ball({d},{radius})"));
            let o = s.point_at(&vec![0; *d]).expect("origin is in the ball");
            s.with_basepoint(o)
        }
        SpaceSpec::Tree { arity, depth } => {
            if *arity == 0 {
                return Err(SpaceError::BadGenerator("tree arity must be positive".into()));
            }
            let mut adj: Vec<Vec<PointId>> = vec![Vec::new()];
            let mut level = vec![0usize];
            for _ in 0..*depth {
                let mut next = Vec::new();
                for &v in &level {
                    for _ in 0..*arity {
                        let c = adj.len();
                        adj.push(vec![v]);
                        adj[v].push(c);
                        next.push(c);
                    }
                }
                level = next;
            }
            let n = adj.len();
            Ok(FiniteMetricSpace::raw(n, Distances::Dense(bfs_matrix(&adj)), SpaceKind::GraphShortestPath, format!("tree({arity},{depth})"))
                .with_basepoint(0)?)
        }
        SpaceSpec::Complete { n } => {
            if *n == 0 {
                return Err(SpaceError::BadGenerator("complete graph needs a point".into()));
            }
            let dist = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
            Ok(FiniteMetricSpace::raw(*n, Distances::Dense(dist), SpaceKind::GraphShortestPath, format!("complete({n})")))
        }
        SpaceSpec::Snowflake { base, alpha } => {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return Err(SpaceError::BadExponent(*alpha));
            }
            gen_space(base)?.snowflake(*alpha)
        }
        SpaceSpec::WarpedProduct { levels, z, alpha } => {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return Err(SpaceError::BadExponent(*alpha));
            }
            let z = gen_space(z)?;
            let heights: Vec<f64> = (0..=*levels).map(|k| (-(k as f64)).exp()).collect();
            let zn = z.len();
            let n = heights.len() * zn;
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let (ki, zi) = (i / zn, i % zn);
                    let (kj, zj) = (j / zn, j % zn);
                    let dy = (heights[ki] - heights[kj]).abs();
                    let dz = z.dist(zi, zj).powf(*alpha);
                    dist[i * n + j] = dy.max(dz);
                }
            }
            let mut s = FiniteMetricSpace::raw(
                n,
                Distances::Dense(dist),
                SpaceKind::WarpedProduct { levels: *levels, alpha: *alpha },
                format!("warped-product({levels},{},{alpha})", z.name()),
            );
            s.product = Some(ProductLayout { heights, z_len: zn, alpha: *alpha });
            Ok(s)
        }
        SpaceSpec::HalfPlane { width, layers } => {
            if *width == 0 || *layers == 0 {
                return Err(SpaceError::BadGenerator("half-plane sample needs width and layers".into()));
            }
            let pts: Vec<(f64, f64)> =
                (0..*layers).flat_map(|k| (0..*width).map(move |x| (x as f64, 2f64.powi(k as i32)))).collect();
            let n = pts.len();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (x1, y1) = pts[i];
                        let (x2, y2) = pts[j];
                        let arg = ((x1 - x2).powi(2) + (y1 - y2).powi(2)) / (2.0 * y1 * y2);
                        // acosh(1 + arg), written to stay accurate for small arg
                        dist[i * n + j] = (arg + (arg * (arg + 2.0)).sqrt()).ln_1p();
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    dist[i * n + j] = dist[j * n + i];
                }
            }
            let coords = (0..*layers).flat_map(|k| (0..*width as i64).map(move |x| vec![x, k as i64])).collect();
            Ok(FiniteMetricSpace::raw(n, Distances::Dense(dist), SpaceKind::ExplicitMatrix, format!("half-plane({width},{layers})"))
                .with_coords(coords))
        }
        SpaceSpec::Explicit { n, dist } => FiniteMetricSpace::from_matrix(*n, dist.clone(), SpaceKind::ExplicitMatrix),
        SpaceSpec::Edges { n, edges } => FiniteMetricSpace::from_edges(*n, edges),
    }
}

fn box_coords(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// A metric ball: a center and a radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(rename = "c")]
    pub center: PointId,
    #[serde(rename = "r")]
    pub radius: f64,
}

impl Ball {
    pub fn new(center: PointId, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn members(&self, space: &FiniteMetricSpace) -> Vec<PointId> {
        space.ball_members(self.center, self.radius)
    }

    /// `l B`: same center, radius multiplied by `l >= 1`.
    pub fn scaled(&self, l: f64) -> Result<Ball, SpaceError> {
        if !(l >= 1.0) {
            return Err(SpaceError::BadScale(l));
        }
        Ok(Ball { center: self.center, radius: self.radius * l })
    }
}

/// A closed interval of `[0, 1]` with the exponential scaling structure of D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DInterval {
    pub a: f64,
    pub b: f64,
}

impl DInterval {
    pub fn new(a: f64, b: f64) -> Result<Self, SpaceError> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(SpaceError::BadInterval(a, b));
        }
        Ok(DInterval { a, b })
    }

    /// Interval `[e^{-R-t}, e^{R-t}]`, capped at 1.
    pub fn from_radius_position(radius: f64, t: f64) -> Self {
        DInterval { a: (-radius - t).exp(), b: (radius - t).exp().min(1.0) }
    }

    /// `l I`. Intervals `[0, b]` are fixed; otherwise
    /// `[a^{(1+l)/2} b^{(1-l)/2}, min(1, a^{(1-l)/2} b^{(1+l)/2})]`.
    pub fn scaled(&self, l: f64) -> Result<DInterval, SpaceError> {
        if !(l >= 1.0) {
            return Err(SpaceError::BadScale(l));
        }
        if self.a == 0.0 {
            return Ok(*self);
        }
        // Log form of the closed formula: exact at l = 1 and free of overflow.
        let (la, lb) = (self.a.ln(), self.b.ln());
        let lo = 0.5 * (1.0 + l) * la + 0.5 * (1.0 - l) * lb;
        let hi = 0.5 * (1.0 - l) * la + 0.5 * (1.0 + l) * lb;
        if l == 1.0 {
            return Ok(*self);
        }
        Ok(DInterval { a: lo.exp(), b: hi.exp().min(1.0) })
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.a * (1.0 - DIST_TOL) && y <= self.b * (1.0 + DIST_TOL)
    }
}

/// Ball `I x beta` of the product `D x Z^alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsProductBall {
    pub interval: DInterval,
    pub ball: Ball,
}

impl QsProductBall {
    /// Componentwise scaling `l (I x beta) = l I x l beta`.
    pub fn scaled(&self, l: f64) -> Result<QsProductBall, SpaceError> {
        Ok(QsProductBall { interval: self.interval.scaled(l)?, ball: self.ball.scaled(l)? })
    }

    /// Members in a warped-product space; `ball` is read in `Z^alpha`.
    pub fn members(&self, space: &FiniteMetricSpace) -> Option<Vec<PointId>> {
        let layout = space.product_layout()?;
        let zn = layout.z_len;
        let mut out = Vec::new();
        for (k, &y) in layout.heights.iter().enumerate() {
            if !self.interval.contains(y) {
                continue;
            }
            for z in 0..zn {
                // distances inside level 0 are exactly the Z^alpha distances
                if space.dist(self.ball.center % zn, z) <= self.ball.radius + DIST_TOL {
                    out.push(k * zn + z);
                }
            }
        }
        Some(out)
    }
}

/// Any of the ball flavours handled by [`scale_ball`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AnyBall {
    Metric(Ball),
    Interval(DInterval),
    Product(QsProductBall),
}

pub fn scale_ball(ball: &AnyBall, l: f64) -> Result<AnyBall, SpaceError> {
    Ok(match ball {
        AnyBall::Metric(b) => AnyBall::Metric(b.scaled(l)?),
        AnyBall::Interval(i) => AnyBall::Interval(i.scaled(l)?),
        AnyBall::Product(p) => AnyBall::Product(p.scaled(l)?),
    })
}

/// On-disk representation of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(PointId, PointId, f64)>>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<PointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<PointId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<i64>>>,
}

impl FiniteMetricSpace {
    pub fn to_file(&self) -> SpaceFile {
        SpaceFile {
            n: self.n,
            dist: Some(self.matrix()),
            edges: None,
            kind: self.kind.tag(),
            basepoint: self.basepoint,
            boundary: if self.boundary.is_empty() { None } else { Some(self.boundary.clone()) },
            coords: self.coords.clone(),
        }
    }

    pub fn from_file(file: &SpaceFile) -> Result<Self, SpaceError> {
        let kind = SpaceKind::parse_tag(&file.kind)?;
        let mut space = match (&file.dist, &file.edges) {
            (Some(d), None) => {
                let mut s = FiniteMetricSpace::from_matrix(file.n, d.clone(), kind.clone())?;
                s.name = format!("file({})", file.kind);
                s
            }
            (None, Some(e)) => {
                let mut s = FiniteMetricSpace::from_edges(file.n, e)?;
                s.kind = kind;
                s
            }
            _ => return Err(SpaceError::Format("exactly one of `dist` and `edges` is required".into())),
        };
        if let Some(c) = &file.coords {
            if c.len() != file.n {
                return Err(SpaceError::Format("coords length differs from n".into()));
            }
            space = space.with_coords(c.clone());
        }
        if let Some(o) = file.basepoint {
            space = space.with_basepoint(o)?;
        }
        if let Some(b) = &file.boundary {
            space = space.with_boundary(b.clone())?;
        }
        Ok(space)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("space file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let file: SpaceFile = serde_json::from_str(text).map_err(|e| SpaceError::Format(e.to_string()))?;
        Self::from_file(&file)
    }
}
