//! Constraint generation shared by capacity and modulus.

use std::collections::{BTreeSet, HashMap};

use crate::packing::PackingOracle;
use crate::solver::{Linear, Options, PowerSum, Program, SolverError};
use crate::space::{Ball, FiniteMetricSpace, PointId};

use super::{relative_gap, SolveTrace, VarError};

/// Coordinates of `u`, stored point-major: coordinate `x * dim + k`.
pub(crate) struct Minimax<'a> {
    pub space: &'a FiniteMetricSpace,
    pub universe: &'a [Ball],
    pub oracle: &'a PackingOracle,
    pub p: f64,
    pub dim: usize,
    /// `Some(v)` pins the coordinate to `v`.
    pub fixed: Vec<Option<f64>>,
    pub lo: f64,
    pub hi: f64,
    /// Extra constraints `sum a_c u_c <= rhs` over coordinates.
    pub extra: Vec<Linear>,
    pub eps: f64,
    pub max_iter: usize,
}

pub(crate) struct MinimaxOutcome {
    pub u: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
    pub trace: SolveTrace,
}

struct Layout {
    /// Program variable of each free coordinate.
    var: Vec<Option<usize>>,
    free: Vec<usize>,
    /// First program variable of each active ball (`h_k`, `l_k` pairs).
    ball_base: HashMap<usize, usize>,
    balls: Vec<usize>,
    vars: usize,
}

impl Minimax<'_> {
    /// Surrogate ball weights `sum_k osc_k(B)^p`; equal to `osc^p` when `dim = 1`.
    pub fn weights(&self, members: &[Vec<PointId>], u: &[f64]) -> Vec<f64> {
        members
            .iter()
            .map(|m| {
                (0..self.dim)
                    .map(|k| {
                        let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                            let v = u[x * self.dim + k];
                            (lo.min(v), hi.max(v))
                        });
                        (hi - lo).max(0.0).powf(self.p)
                    })
                    .sum()
            })
            .collect()
    }

    fn build(&self, layout: &Layout, members: &[Vec<PointId>], active: &[Vec<usize>]) -> Program {
        let mut prog = Program::new(layout.vars);
        prog.objective = vec![(0, 1.0)];
        for &c in &layout.free {
            let v = layout.var[c].unwrap();
            prog.linear.push(Linear { terms: vec![(v, 1.0)], rhs: self.hi });
            prog.linear.push(Linear { terms: vec![(v, -1.0)], rhs: -self.lo });
        }
        for &b in &layout.balls {
            let base = layout.ball_base[&b];
            for k in 0..self.dim {
                let (h, l) = (base + 2 * k, base + 2 * k + 1);
                let mut fixed_hi = f64::NEG_INFINITY;
                let mut fixed_lo = f64::INFINITY;
                for &x in &members[b] {
                    let c = x * self.dim + k;
                    match layout.var[c] {
                        Some(v) => {
                            prog.linear.push(Linear { terms: vec![(v, 1.0), (h, -1.0)], rhs: 0.0 });
                            prog.linear.push(Linear { terms: vec![(l, 1.0), (v, -1.0)], rhs: 0.0 });
                        }
                        None => {
                            let f = self.fixed[c].unwrap();
                            fixed_hi = fixed_hi.max(f);
                            fixed_lo = fixed_lo.min(f);
                        }
                    }
                }
                if fixed_hi.is_finite() {
                    prog.linear.push(Linear { terms: vec![(h, -1.0)], rhs: -fixed_hi });
                    prog.linear.push(Linear { terms: vec![(l, 1.0)], rhs: fixed_lo });
                }
            }
        }
        for c in &self.extra {
            let terms = c.terms.iter().map(|&(i, a)| (layout.var[i].expect("extra constraints use free coordinates"), a)).collect();
            prog.linear.push(Linear { terms, rhs: c.rhs });
        }
        for pk in active {
            let pairs = pk
                .iter()
                .flat_map(|b| {
                    let base = layout.ball_base[b];
                    (0..self.dim).map(move |k| (base + 2 * k, base + 2 * k + 1))
                })
                .collect();
            prog.power.push(PowerSum { pairs, p: self.p, t: 0 });
        }
        prog
    }

    fn coords(&self, layout: &Layout, x: &[f64]) -> Vec<f64> {
        (0..self.fixed.len()).map(|c| self.fixed[c].unwrap_or_else(|| x[layout.var[c].unwrap()])).collect()
    }

    /// Places the program variables well inside the feasible region. Free
    /// coordinates hugging the box are pulled in (unless that breaks an extra
    /// constraint); the ball and epigraph variables are reset with margins.
    fn interiorize(&self, layout: &Layout, members: &[Vec<PointId>], active: &[Vec<usize>], x: &mut [f64]) {
        let range = self.hi - self.lo;
        let pull = 1e-3 * range;
        let saved: Vec<f64> = layout.free.iter().map(|&c| x[layout.var[c].unwrap()]).collect();
        for &c in &layout.free {
            let v = &mut x[layout.var[c].unwrap()];
            *v = v.clamp(self.lo + pull, self.hi - pull);
        }
        let extra_ok = self.extra.iter().all(|c| c.terms.iter().map(|&(i, a)| a * x[layout.var[i].unwrap()]).sum::<f64>() < c.rhs);
        if !extra_ok {
            for (&c, &v) in layout.free.iter().zip(&saved) {
                x[layout.var[c].unwrap()] = v;
            }
        }
        let u = self.coords(layout, x);
        let margin = 1e-2 * range;
        for &b in &layout.balls {
            let base = layout.ball_base[&b];
            for k in 0..self.dim {
                let (lo, hi) = members[b].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                    let v = u[y * self.dim + k];
                    (lo.min(v), hi.max(v))
                });
                x[base + 2 * k] = hi + margin;
                x[base + 2 * k + 1] = lo - margin;
            }
        }
        let mut worst: f64 = 0.0;
        for pk in active {
            let mut total = 0.0;
            for b in pk {
                let base = layout.ball_base[b];
                for k in 0..self.dim {
                    total += (x[base + 2 * k] - x[base + 2 * k + 1]).powf(self.p);
                }
            }
            worst = worst.max(total);
        }
        x[0] = worst * 1.1 + margin.powf(self.p);
    }

    /// Runs constraint generation from `u0`.
    pub fn run(&self, u0: &[f64]) -> Result<MinimaxOutcome, VarError> {
        let members: Vec<Vec<PointId>> = self.universe.iter().map(|b| b.members(self.space)).collect();
        let mut layout = Layout { var: vec![None; self.fixed.len()], free: Vec::new(), ball_base: HashMap::new(), balls: Vec::new(), vars: 1 };
        for c in 0..self.fixed.len() {
            if self.fixed[c].is_none() {
                layout.var[c] = Some(layout.vars);
                layout.free.push(c);
                layout.vars += 1;
            }
        }
        let mut x = vec![0.0; layout.vars];
        for &c in &layout.free {
            x[layout.var[c].unwrap()] = u0[c];
        }
        let u = self.coords(&layout, &x);
        let first = self.oracle.exact(&self.weights(&members, &u))?;
        let mut trace = SolveTrace::default();
        let mut best_u = u;
        let mut upper = first.value;
        let mut lower: f64 = 0.0;
        trace.primal.push(upper);
        trace.dual.push(lower);
        if upper <= 0.0 {
            trace.converged = true;
            return Ok(MinimaxOutcome { u: best_u, upper, lower, trace });
        }
        let mut active: Vec<Vec<usize>> = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut pending = first.chosen;
        let mut floor = 0.1 * self.eps * upper;
        let mut tight = false;
        loop {
            if seen.insert(pending.clone()) {
                for &b in &pending {
                    if !layout.ball_base.contains_key(&b) {
                        layout.ball_base.insert(b, layout.vars);
                        layout.balls.push(b);
                        layout.vars += 2 * self.dim;
                        x.extend(std::iter::repeat_n(f64::NAN, 2 * self.dim));
                    }
                }
                active.push(pending.clone());
            } else {
                // the oracle's packing is already in the master: solve the master more tightly
                if tight {
                    floor *= 0.01;
                    if floor < 1e-15 * upper {
                        break;
                    }
                }
                tight = true;
            }
            self.interiorize(&layout, &members, &active, &mut x);
            let prog = self.build(&layout, &members, &active);
            let m = prog.constraints() as f64;
            // early masters only need to be accurate relative to the current gap
            let target = if tight { floor } else { (0.1 * (upper - lower)).max(floor) };
            let opts = Options { gap: target, tau: m / (x[0] - lower).max(target), ..Options::default() };
            let sol = match prog.solve(&x, opts) {
                Ok(s) => s,
                Err(SolverError::NoProgress) if trace.iterations > 0 => break,
                Err(e) => return Err(e.into()),
            };
            trace.newton_steps += sol.newton_steps;
            trace.iterations += 1;
            x = sol.x;
            lower = lower.max(sol.dual);
            let u = self.coords(&layout, &x);
            let next = self.oracle.exact(&self.weights(&members, &u))?;
            if next.value < upper {
                upper = next.value;
                best_u = u;
            }
            trace.primal.push(upper);
            trace.dual.push(lower);
            if relative_gap(lower, upper) <= self.eps || trace.iterations >= self.max_iter {
                break;
            }
            if !seen.contains(&next.chosen) {
                tight = false;
            }
            pending = next.chosen;
        }
        trace.active = active;
        trace.gap = relative_gap(lower, upper);
        trace.converged = trace.gap <= self.eps;
        Ok(MinimaxOutcome { u: best_u, upper, lower, trace })
    }
}
