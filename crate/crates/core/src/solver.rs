//! Log-barrier interior point method for the small convex programs behind
//! capacity and modulus.
//!
//! Programs minimise a linear objective subject to linear inequalities and
//! power-sum constraints `sum_j (x[h_j] - x[l_j])^p <= x[t]`. Each barrier
//! stage is solved by damped Newton steps on a dense Hessian.

use nalgebra::{Cholesky, DMatrix, DVector};

/// `sum_k a_k x[i_k] <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `sum_j (x[h_j] - x[l_j])^p <= x[t]`, with every difference kept positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSum {
    pub pairs: Vec<(usize, usize)>,
    pub p: f64,
    pub t: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub linear: Vec<Linear>,
    pub power: Vec<PowerSum>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Objective at `x`.
    pub primal: f64,
    /// `primal - m / tau`: the dual value on the central path.
    pub dual: f64,
    pub newton_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    /// Stop once `m / tau` is below this.
    pub gap: f64,
    /// Starting barrier weight.
    pub tau: f64,
    pub growth: f64,
    /// Newton steps per barrier stage.
    pub max_newton: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { gap: 1e-9, tau: 1.0, growth: 8.0, max_newton: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("starting point is not strictly feasible")]
    Infeasible,
    #[error("Newton iteration limit reached")]
    NoProgress,
}

impl Program {
    pub fn new(vars: usize) -> Self {
        Program { vars, ..Default::default() }
    }

    pub fn constraints(&self) -> usize {
        self.linear.len() + self.power.len()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * x[i]).sum()
    }

    /// Slacks `-f_i(x)`, or `None` outside the barrier domain.
    pub fn slacks(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.constraints());
        for c in &self.linear {
            let s = c.rhs - c.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>();
            if !(s > 0.0) {
                return None;
            }
            out.push(s);
        }
        for c in &self.power {
            let mut total = 0.0;
            for &(h, l) in &c.pairs {
                let w = x[h] - x[l];
                if !(w > 0.0) {
                    return None;
                }
                total += w.powf(c.p);
            }
            let s = x[c.t] - total;
            if !(s > 0.0) {
                return None;
            }
            out.push(s);
        }
        Some(out)
    }

    fn barrier(&self, x: &[f64], tau: f64) -> Option<f64> {
        let s = self.slacks(x)?;
        Some(tau * self.objective_at(x) - s.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn newton_system(&self, x: &[f64], slacks: &[f64], tau: f64) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.vars;
        let mut h = DMatrix::<f64>::zeros(n, n);
        let mut g = DVector::<f64>::zeros(n);
        for &(i, c) in &self.objective {
            g[i] += tau * c;
        }
        for (c, &s) in self.linear.iter().zip(slacks) {
            for &(i, a) in &c.terms {
                g[i] += a / s;
                for &(j, b) in &c.terms {
                    h[(i, j)] += a * b / (s * s);
                }
            }
        }
        let mut grad: Vec<(usize, f64)> = Vec::new();
        for (c, &s) in self.power.iter().zip(&slacks[self.linear.len()..]) {
            grad.clear();
            grad.push((c.t, -1.0));
            for &(hi, lo) in &c.pairs {
                let w = x[hi] - x[lo];
                let d1 = c.p * w.powf(c.p - 1.0);
                grad.push((hi, d1));
                grad.push((lo, -d1));
                if c.p != 1.0 {
                    let d2 = c.p * (c.p - 1.0) * w.powf(c.p - 2.0) / s;
                    h[(hi, hi)] += d2;
                    h[(lo, lo)] += d2;
                    h[(hi, lo)] -= d2;
                    h[(lo, hi)] -= d2;
                }
            }
            for &(i, a) in &grad {
                g[i] += a / s;
                for &(j, b) in &grad {
                    h[(i, j)] += a * b / (s * s);
                }
            }
        }
        (h, g)
    }

    fn newton_step(&self, x: &[f64], tau: f64) -> Option<(DVector<f64>, f64)> {
        let slacks = self.slacks(x)?;
        let (h, g) = self.newton_system(x, &slacks, tau);
        let scale = (0..self.vars).map(|i| h[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        let mut reg = 0.0;
        loop {
            let mut m = h.clone();
            if reg > 0.0 {
                for i in 0..self.vars {
                    m[(i, i)] += reg;
                }
            }
            if let Some(ch) = Cholesky::new(m) {
                let dx = ch.solve(&(-&g));
                let decrement = -g.dot(&dx);
                return Some((dx, decrement));
            }
            reg = if reg == 0.0 { scale * 1e-14 } else { reg * 100.0 };
            if reg > scale {
                return None;
            }
        }
    }

    /// Centres `x` for barrier weight `tau`; returns the Newton steps used.
    fn center(&self, x: &mut [f64], tau: f64, budget: usize) -> Result<usize, SolverError> {
        let mut steps = 0;
        let mut phi = self.barrier(x, tau).ok_or(SolverError::Infeasible)?;
        loop {
            let Some((dx, decrement)) = self.newton_step(x, tau) else {
                return Ok(steps);
            };
            if decrement / 2.0 <= 1e-12 || !decrement.is_finite() {
                return Ok(steps);
            }
            if steps >= budget {
                return Err(SolverError::NoProgress);
            }
            steps += 1;
            let mut alpha = 1.0;
            let mut trial = x.to_vec();
            loop {
                for i in 0..x.len() {
                    trial[i] = x[i] + alpha * dx[i];
                }
                if let Some(v) = self.barrier(&trial, tau) {
                    if v <= phi - 0.25 * alpha * decrement {
                        phi = v;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    // no further decrease representable in floating point
                    return Ok(steps);
                }
            }
            x.copy_from_slice(&trial);
        }
    }

    /// Follows the central path from a strictly feasible `x0`. If a later
    /// barrier stage runs out of Newton steps, the result keeps the dual
    /// bound of the last centred stage.
    pub fn solve(&self, x0: &[f64], opts: Options) -> Result<Solution, SolverError> {
        let mut x = x0.to_vec();
        if self.slacks(&x).is_none() {
            return Err(SolverError::Infeasible);
        }
        let m = self.constraints().max(1) as f64;
        let mut tau = opts.tau;
        let mut steps = 0;
        let mut dual = None;
        loop {
            match self.center(&mut x, tau, opts.max_newton) {
                Ok(s) => steps += s,
                Err(SolverError::NoProgress) if dual.is_some() => {
                    steps += opts.max_newton;
                    break;
                }
                Err(e) => return Err(e),
            }
            dual = Some(self.objective_at(&x) - m / tau);
            if m / tau <= opts.gap {
                break;
            }
            tau *= opts.growth;
        }
        let primal = self.objective_at(&x);
        Ok(Solution { dual: dual.unwrap(), primal, x, newton_steps: steps })
    }

    /// Finds a strictly feasible point near `x0`, whose power sums must
    /// already have positive differences. Returns `None` if the program
    /// looks infeasible.
    pub fn phase_one(&self, x0: &[f64]) -> Option<Vec<f64>> {
        if self.slacks(x0).is_some() {
            return Some(x0.to_vec());
        }
        let n = self.vars;
        let sigma = n;
        let mut aux = Program::new(n + 1);
        aux.objective = vec![(sigma, 1.0)];
        for c in &self.linear {
            let mut terms = c.terms.clone();
            terms.push((sigma, -1.0));
            aux.linear.push(Linear { terms, rhs: c.rhs });
        }
        // power sums are shifted through their epigraph variable
        for c in &self.power {
            aux.power.push(PowerSum { pairs: c.pairs.clone(), p: c.p, t: c.t });
        }
        aux.linear.push(Linear { terms: vec![(sigma, -1.0)], rhs: 1.0 });
        let mut x = x0.to_vec();
        let mut worst: f64 = 0.0;
        for c in &self.linear {
            worst = worst.max(c.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>() - c.rhs);
        }
        for c in &self.power {
            let mut total = 0.0;
            for &(h, l) in &c.pairs {
                let w = x[h] - x[l];
                if !(w > 0.0) {
                    return None;
                }
                total += w.powf(c.p);
            }
            x[c.t] = x[c.t].max(total + 1.0);
        }
        x.push(worst + 1.0);
        let mut tau = 1.0;
        for _ in 0..60 {
            if aux.center(&mut x, tau, 200).is_err() {
                return None;
            }
            if x[sigma] < 0.0 {
                x.pop();
                return self.slacks(&x).map(|_| x);
            }
            tau *= 4.0;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_program() {
        // min -x0 - x1 s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x >= 0: optimum -2.8 at (1.6, 1.2)
        let mut p = Program::new(2);
        p.objective = vec![(0, -1.0), (1, -1.0)];
        p.linear = vec![
            Linear { terms: vec![(0, 1.0), (1, 2.0)], rhs: 4.0 },
            Linear { terms: vec![(0, 3.0), (1, 1.0)], rhs: 6.0 },
            Linear { terms: vec![(0, -1.0)], rhs: 0.0 },
            Linear { terms: vec![(1, -1.0)], rhs: 0.0 },
        ];
        let s = p.solve(&[0.1, 0.1], Options::default()).unwrap();
        assert!((s.primal + 2.8).abs() < 1e-8);
        assert!(s.dual <= -2.8 + 1e-12 && s.dual >= -2.8 - 1e-8);
    }

    #[test]
    fn power_epigraph() {
        // min t s.t. (x1 - x0)^2 <= t, x1 - x0 >= 0.5: value 0.25
        let mut p = Program::new(3);
        p.objective = vec![(2, 1.0)];
        p.linear = vec![
            Linear { terms: vec![(0, 1.0), (1, -1.0)], rhs: -0.5 },
            Linear { terms: vec![(0, 1.0)], rhs: 1.0 },
            Linear { terms: vec![(0, -1.0)], rhs: 1.0 },
        ];
        p.power = vec![PowerSum { pairs: vec![(1, 0)], p: 2.0, t: 2 }];
        let s = p.solve(&[0.0, 1.0, 2.0], Options::default()).unwrap();
        assert!((s.primal - 0.25).abs() < 1e-8);
    }

    #[test]
    fn phase_one_finds_interior() {
        let mut p = Program::new(2);
        p.objective = vec![(0, 1.0)];
        p.linear = vec![
            Linear { terms: vec![(0, -1.0), (1, -1.0)], rhs: -3.0 },
            Linear { terms: vec![(0, 1.0)], rhs: 5.0 },
            Linear { terms: vec![(1, 1.0)], rhs: 5.0 },
        ];
        let x = p.phase_one(&[0.0, 0.0]).unwrap();
        assert!(p.slacks(&x).is_some());
        let mut q = p.clone();
        q.linear.push(Linear { terms: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 });
        assert!(q.phase_one(&[0.0, 0.0]).is_none());
    }
}
