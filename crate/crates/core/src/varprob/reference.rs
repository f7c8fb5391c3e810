//! Explicit test functions used in parabolicity arguments, and the
//! triple-logarithm inequality check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VarError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// `log log t` for `t >= m`, `log log m` below.
    Loglog,
    /// `sin(log log r)` for `r >= m^2`, the constant `log log(m^2)` below.
    SinLoglog,
    /// `log|log|log t||` for `0 < t <= r1`, its value at `r1` above.
    TripleLog,
}

/// `m = max((l + 1) / (l - 1), e)`.
pub fn m_constant(l: f64) -> f64 {
    ((l + 1.0) / (l - 1.0)).max(std::f64::consts::E)
}

/// `r1 = min((l - 1) / l, l^-2, e^(-e^2))`.
pub fn r1_constant(l: f64) -> f64 {
    let e = std::f64::consts::E;
    ((l - 1.0) / l).min(l.powi(-2)).min((-e * e).exp())
}

/// Evaluates a reference function; `cutoff` is `m` for the log-log kinds and
/// `r1` for the triple logarithm.
pub fn eval_reference_function(kind: ReferenceKind, cutoff: f64, t: f64) -> Result<f64, VarError> {
    if t.is_nan() || cutoff.is_nan() {
        return Err(VarError::Invalid("NaN argument".into()));
    }
    match kind {
        ReferenceKind::Loglog => {
            if !(cutoff > 1.0) {
                return Err(VarError::Invalid(format!("cutoff m = {cutoff} must exceed 1")));
            }
            Ok(if t >= cutoff { t.abs().ln().ln() } else { cutoff.ln().ln() })
        }
        ReferenceKind::SinLoglog => {
            if !(cutoff > 1.0) {
                return Err(VarError::Invalid(format!("cutoff m = {cutoff} must exceed 1")));
            }
            let m2 = cutoff * cutoff;
            Ok(if t >= m2 { t.ln().ln().sin() } else { m2.ln().ln() })
        }
        ReferenceKind::TripleLog => {
            if !(cutoff > 0.0 && cutoff < 1.0) {
                return Err(VarError::Invalid(format!("cutoff r1 = {cutoff} must lie in (0, 1)")));
            }
            if t <= 0.0 {
                return Err(VarError::Invalid(format!("triple logarithm needs t > 0, got {t}")));
            }
            let x = if t <= cutoff { t } else { cutoff };
            Ok(triple_log_of_neglog(-x.ln()))
        }
    }
}

/// `log|log|log t||` written in terms of `T = log(1/t)`.
fn triple_log_of_neglog(big_t: f64) -> f64 {
    big_t.ln().abs().ln()
}

/// Outcome of [`check_r1_inequality`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum R1Check {
    Holds { lhs: f64, rhs: f64 },
    NotApplicable { reason: String },
    Violated { lhs: f64, rhs: f64, ratio: f64 },
}

impl R1Check {
    pub fn holds(&self) -> bool {
        matches!(self, R1Check::Holds { .. })
    }

    pub fn violated(&self) -> bool {
        matches!(self, R1Check::Violated { .. })
    }
}

/// Checks `v(a) - v(l b) <= 16 (v(a) - v(b))` for the triple logarithm with
/// cutoff `r1(l)`. Applicable when `b <= r1` and `b / a >= l / (l - 1)`.
pub fn check_r1_inequality(a: f64, b: f64, l: f64) -> R1Check {
    if !(a > 0.0 && b > 0.0) {
        return R1Check::NotApplicable { reason: "a and b must be positive".into() };
    }
    check_r1_log(-a.ln(), -b.ln(), l)
}

/// [`check_r1_inequality`] with `a = exp(-ta)` and `b = exp(-tb)`, for
/// arguments far below the smallest positive double.
pub fn check_r1_log(ta: f64, tb: f64, l: f64) -> R1Check {
    if !(l > 1.0) {
        return R1Check::NotApplicable { reason: format!("l = {l} must exceed 1") };
    }
    let t1 = -r1_constant(l).ln();
    let s = (l / (l - 1.0)).ln();
    // relative slack for the rounding in computing the hypotheses
    if tb < t1 * (1.0 - 1e-12) {
        return R1Check::NotApplicable { reason: "b > r1".into() };
    }
    if ta - tb < s * (1.0 - 1e-12) {
        return R1Check::NotApplicable { reason: "b / a < l / (l - 1)".into() };
    }
    let v = |t: f64| triple_log_of_neglog(t.max(t1));
    let va = v(ta);
    let vb = v(tb);
    let vlb = v(tb - l.ln());
    let lhs = va - vlb;
    let rhs = 16.0 * (va - vb);
    if lhs <= rhs + 1e-12 * lhs.abs().max(rhs.abs()) {
        R1Check::Holds { lhs, rhs }
    } else {
        R1Check::Violated { lhs, rhs, ratio: lhs / (va - vb) }
    }
}

/// Seeded sampler of hypothesis-satisfying pairs for [`check_r1_log`].
///
/// `log(1/b)` is drawn log-uniformly from `[log(1/r1), 10^4 log(1/r1)]` and
/// `log(b/a)` log-uniformly from `[s, 10^4 s]` with `s = log(l/(l-1))`.
pub struct R1Sampler {
    l: f64,
    rng: ChaCha8Rng,
}

impl R1Sampler {
    pub fn new(l: f64, seed: u64) -> Self {
        R1Sampler { l, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Next `(ta, tb)` pair, `a = exp(-ta)`, `b = exp(-tb)`.
    pub fn sample(&mut self) -> (f64, f64) {
        let t1 = -r1_constant(self.l).ln();
        let s = (self.l / (self.l - 1.0)).ln();
        let spread = 1e4f64.ln();
        let tb = t1 * (self.rng.random::<f64>() * spread).exp();
        let gap = s * (self.rng.random::<f64>() * spread).exp();
        (tb + gap, tb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn reference_values() {
        let m = m_constant(2.0);
        assert_eq!(m, 3.0);
        assert!((eval_reference_function(ReferenceKind::Loglog, m, E.powf(E)).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_reference_function(ReferenceKind::SinLoglog, m, E.powf(E)).unwrap() - 1f64.sin()).abs() < 1e-15);
        let r1 = r1_constant(2.0);
        let t = (-E.powf(E)).exp();
        assert!((eval_reference_function(ReferenceKind::TripleLog, r1, t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plateaus() {
        let m = m_constant(3.0);
        assert_eq!(eval_reference_function(ReferenceKind::Loglog, m, 1.0).unwrap(), m.ln().ln());
        assert_eq!(eval_reference_function(ReferenceKind::SinLoglog, m, 2.0).unwrap(), (m * m).ln().ln());
        let r1 = r1_constant(3.0);
        let at = eval_reference_function(ReferenceKind::TripleLog, r1, r1).unwrap();
        assert_eq!(eval_reference_function(ReferenceKind::TripleLog, r1, 0.5).unwrap(), at);
        assert!(eval_reference_function(ReferenceKind::TripleLog, r1, 0.0).is_err());
    }

    #[test]
    fn r1_examples() {
        let b = (-E * E).exp() * 0.1;
        assert!(check_r1_inequality(b / 4.0, b, 2.0).holds());
        assert!(matches!(check_r1_inequality(0.001, 0.5, 2.0), R1Check::NotApplicable { .. }));
        let r1 = r1_constant(2.0);
        assert!(check_r1_inequality(r1 / 2.0, r1, 2.0).holds());
    }

    #[test]
    fn sampler_respects_hypotheses() {
        let mut s = R1Sampler::new(4.0, 7);
        for _ in 0..1000 {
            let (ta, tb) = s.sample();
            assert!(!matches!(check_r1_log(ta, tb, 4.0), R1Check::NotApplicable { .. }));
        }
    }
}
