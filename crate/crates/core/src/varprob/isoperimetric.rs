//! Edge isoperimetric profile of the unit-step graph.

use serde::{Deserialize, Serialize};

use crate::space::{FiniteMetricSpace, PointId};

use super::VarError;

/// Largest space for the exact profile.
const EXACT_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    /// Minimum over all subsets of the given size.
    Exact,
    /// Greedy growth from every start point; an upper bound.
    Greedy,
}

/// Number of unit-step edges with exactly one endpoint in `set`.
pub fn edge_boundary(space: &FiniteMetricSpace, set: &[PointId]) -> usize {
    let mut inside = vec![false; space.len()];
    for &x in set {
        inside[x] = true;
    }
    boundary_of(space, &inside)
}

fn boundary_of(space: &FiniteMetricSpace, inside: &[bool]) -> usize {
    space
        .points()
        .filter(|&x| inside[x])
        .map(|x| space.step_neighbors(x).iter().filter(|&&y| !inside[y]).count())
        .sum()
}

/// `I(v)`: the least edge boundary of a `v`-point set, for each requested volume.
pub fn isoperimetric_profile(
    space: &FiniteMetricSpace,
    volumes: &[usize],
    mode: ProfileMode,
) -> Result<Vec<(usize, usize)>, VarError> {
    let n = space.len();
    for &v in volumes {
        if v == 0 || v > n {
            return Err(VarError::BadVolume { v, max: n });
        }
    }
    match mode {
        ProfileMode::Exact => {
            if n > EXACT_LIMIT {
                return Err(VarError::TooLarge(n));
            }
            Ok(volumes.iter().map(|&v| (v, exact_profile(space, v))).collect())
        }
        ProfileMode::Greedy => {
            let best = greedy_profile(space);
            Ok(volumes.iter().map(|&v| (v, best[v])).collect())
        }
    }
}

fn exact_profile(space: &FiniteMetricSpace, v: usize) -> usize {
    let n = space.len();
    let nbr_masks: Vec<u32> = space.points().map(|x| space.step_neighbors(x).iter().fold(0u32, |m, &y| m | (1 << y))).collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut best = usize::MAX;
    // Gosper's hack over all v-subsets
    let mut set: u32 = (1u32 << v) - 1;
    while set <= full {
        let mut cut = 0;
        let mut rest = set;
        while rest != 0 {
            let x = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cut += (nbr_masks[x] & !set).count_ones() as usize;
        }
        best = best.min(cut);
        let c = set & set.wrapping_neg();
        let r = set + c;
        if r == 0 || r > full {
            break;
        }
        set = (((r ^ set) >> 2) / c) | r;
    }
    best
}

/// Best boundary at every volume `0..=n` over greedy growth from each start.
fn greedy_profile(space: &FiniteMetricSpace) -> Vec<usize> {
    let n = space.len();
    let mut best = vec![usize::MAX; n + 1];
    best[0] = 0;
    for start in space.points() {
        let mut inside = vec![false; n];
        inside[start] = true;
        let mut cut = space.step_neighbors(start).len();
        best[1] = best[1].min(cut);
        for size in 2..=n {
            // adding y changes the cut by deg(y) - 2 * (neighbors of y inside)
            let mut pick: Option<(i64, PointId)> = None;
            for y in space.points().filter(|&y| !inside[y]) {
                let nb = space.step_neighbors(y);
                let inner = nb.iter().filter(|&&z| inside[z]).count() as i64;
                let delta = nb.len() as i64 - 2 * inner;
                if pick.is_none_or(|(d, _)| delta < d) {
                    pick = Some((delta, y));
                }
            }
            let (delta, y) = pick.expect("points remain");
            inside[y] = true;
            cut = (cut as i64 + delta) as usize;
            best[size] = best[size].min(cut);
        }
    }
    debug_assert!(best.iter().all(|&b| b != usize::MAX));
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_space, SpaceSpec};

    #[test]
    fn known_profiles() {
        let k4 = gen_space(&SpaceSpec::Complete { n: 4 }).unwrap();
        assert_eq!(isoperimetric_profile(&k4, &[1], ProfileMode::Exact).unwrap(), vec![(1, 3)]);
        let c6 = gen_space(&SpaceSpec::Cycle { n: 6 }).unwrap();
        assert_eq!(isoperimetric_profile(&c6, &[2], ProfileMode::Exact).unwrap(), vec![(2, 2)]);
        let g = gen_space(&SpaceSpec::Grid { d: 2, n: 4 }).unwrap();
        assert_eq!(isoperimetric_profile(&g, &[4], ProfileMode::Exact).unwrap(), vec![(4, 4)]);
    }

    #[test]
    fn greedy_bounds_exact() {
        let g = gen_space(&SpaceSpec::Grid { d: 2, n: 4 }).unwrap();
        let vols: Vec<usize> = (1..=16).collect();
        let ex = isoperimetric_profile(&g, &vols, ProfileMode::Exact).unwrap();
        let gr = isoperimetric_profile(&g, &vols, ProfileMode::Greedy).unwrap();
        for (a, b) in ex.iter().zip(&gr) {
            assert!(b.1 >= a.1);
        }
        assert_eq!(ex[15].1, 0);
    }

    #[test]
    fn errors() {
        let big = gen_space(&SpaceSpec::Path { n: 30 }).unwrap();
        assert!(matches!(isoperimetric_profile(&big, &[3], ProfileMode::Exact), Err(VarError::TooLarge(30))));
        assert!(matches!(isoperimetric_profile(&big, &[0], ProfileMode::Greedy), Err(VarError::BadVolume { .. })));
        assert_eq!(edge_boundary(&big, &[3, 4, 5]), 2);
    }
}
