//! Grötzsch-type quantity: least capacity of an arc joining two points.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::space::{FiniteMetricSpace, PointId};

use super::capacity::{capacity, CapacityProblem};
use super::VarError;

/// Limits on the arcs tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcPool {
    /// Extra hops allowed beyond the shortest unit-step path.
    pub detour: usize,
    #[serde(rename = "maxArcs")]
    pub max_arcs: usize,
}

impl Default for ArcPool {
    fn default() -> Self {
        ArcPool { detour: 2, max_arcs: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    /// Least capacity found over the pool; an upper bound on the infimum
    /// over all arcs.
    pub value: f64,
    /// Arc achieving `value`, from `x1` to `x2`.
    pub arc: Vec<PointId>,
    #[serde(rename = "arcsTried")]
    pub arcs_tried: usize,
    #[serde(rename = "capacitySolves")]
    pub capacity_solves: usize,
    pub converged: bool,
}

fn hops_to(space: &FiniteMetricSpace, target: PointId) -> Vec<usize> {
    let mut d = vec![usize::MAX; space.len()];
    d[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(x) = queue.pop_front() {
        for &y in space.step_neighbors(x) {
            if d[y] == usize::MAX {
                d[y] = d[x] + 1;
                queue.push_back(y);
            }
        }
    }
    d
}

/// Simple unit-step paths from `x1` to `x2` in depth-first neighbour order,
/// at most `detour` hops longer than a shortest one. The search runs from
/// the smaller endpoint so the pool does not depend on argument order.
pub fn arc_pool(space: &FiniteMetricSpace, x1: PointId, x2: PointId, pool: ArcPool) -> Result<Vec<Vec<PointId>>, VarError> {
    space.check(x1).map_err(|_| VarError::OutOfRange(x1))?;
    space.check(x2).map_err(|_| VarError::OutOfRange(x2))?;
    if x1 == x2 {
        return Ok(vec![vec![x1]]);
    }
    let (a, b) = (x1.min(x2), x1.max(x2));
    let hops = hops_to(space, b);
    if hops[a] == usize::MAX {
        return Err(VarError::NoArc(x1, x2));
    }
    let limit = hops[a] + pool.detour;
    let mut out = Vec::new();
    let mut on_path = vec![false; space.len()];
    let mut path = vec![a];
    on_path[a] = true;
    extend(space, &hops, b, limit, pool.max_arcs, &mut path, &mut on_path, &mut out);
    if x1 > x2 {
        for arc in &mut out {
            arc.reverse();
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    space: &FiniteMetricSpace,
    hops: &[usize],
    b: PointId,
    limit: usize,
    cap: usize,
    path: &mut Vec<PointId>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<PointId>>,
) {
    if out.len() >= cap {
        return;
    }
    let x = *path.last().unwrap();
    if x == b {
        out.push(path.clone());
        return;
    }
    let used = path.len() - 1;
    for &y in space.step_neighbors(x) {
        if on_path[y] || used + 1 + hops[y] > limit {
            continue;
        }
        on_path[y] = true;
        path.push(y);
        extend(space, hops, b, limit, cap, path, on_path, out);
        path.pop();
        on_path[y] = false;
    }
}

/// Minimises the capacity of an arc from `x1` to `x2` against `boundary`
/// over the arc pool. Arcs meeting the boundary are skipped.
#[allow(clippy::too_many_arguments)]
pub fn grotzsch_delta(
    space: &FiniteMetricSpace,
    x1: PointId,
    x2: PointId,
    boundary: &[PointId],
    p: f64,
    l: f64,
    r_min: f64,
    r_max: f64,
    pool: ArcPool,
) -> Result<DeltaResult, VarError> {
    let arcs = arc_pool(space, x1, x2, pool)?;
    let mut memo: HashMap<Vec<PointId>, (f64, bool)> = HashMap::new();
    let mut best: Option<DeltaResult> = None;
    for arc in &arcs {
        if arc.iter().any(|x| boundary.contains(x)) {
            continue;
        }
        let mut image = arc.clone();
        image.sort_unstable();
        let (value, converged) = match memo.get(&image) {
            Some(&v) => v,
            None => {
                let r = capacity(space, &CapacityProblem::new(image.clone(), boundary.to_vec(), p, l, r_min, r_max))?;
                let v = (r.value, r.trace.converged);
                memo.insert(image, v);
                v
            }
        };
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(DeltaResult { value, arc: arc.clone(), arcs_tried: 0, capacity_solves: 0, converged });
        }
    }
    let mut out = best.ok_or(VarError::NoArc(x1, x2))?;
    out.arcs_tried = arcs.len();
    out.capacity_solves = memo.len();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};

    #[test]
    fn pool_on_a_path_is_the_segment() {
        let s = gen_space(&SpaceSpec::Path { n: 6 }).unwrap();
        let arcs = arc_pool(&s, 4, 1, ArcPool::default()).unwrap();
        assert_eq!(arcs, vec![vec![4, 3, 2, 1]]);
        assert_eq!(arc_pool(&s, 2, 2, ArcPool::default()).unwrap(), vec![vec![2]]);
    }

    #[test]
    fn pool_respects_caps() {
        let g = gen_space(&SpaceSpec::Grid { d: 2, n: 4 }).unwrap();
        let arcs = arc_pool(&g, 0, 15, ArcPool { detour: 0, max_arcs: 5 }).unwrap();
        assert_eq!(arcs.len(), 5);
        assert!(arcs.iter().all(|a| a.len() == 7 && a[0] == 0 && a[6] == 15));
    }

    #[test]
    fn delta_on_a_path() {
        let s = gen_space(&SpaceSpec::Path { n: 8 }).unwrap();
        let d = grotzsch_delta(&s, 1, 3, &[7], 2.0, 1.0, 1.0, 1.0, ArcPool::default()).unwrap();
        assert_eq!(d.arc, vec![1, 2, 3]);
        let single = grotzsch_delta(&s, 3, 3, &[7], 2.0, 1.0, 1.0, 1.0, ArcPool::default()).unwrap();
        assert!(single.value <= d.value * (1.0 + 1e-6));
        assert!(matches!(grotzsch_delta(&s, 6, 7, &[7], 2.0, 1.0, 1.0, 1.0, ArcPool::default()), Err(VarError::NoArc(6, 7))));
    }
}
