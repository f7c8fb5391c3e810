//! Variational problems over packing energies.
//!
//! Capacity and modulus are minimax problems: minimise over `u` the maximum
//! over packings of `sum osc^p`. Both are solved by constraint generation. A
//! convex master problem over the packings found so far gives a lower bound,
//! the exact packing oracle at the master solution gives an upper bound and
//! the next packing to add.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyError;
use crate::packing::PackingError;
use crate::solver::SolverError;
use crate::space::PointId;

mod capacity;
mod delta;
mod isoperimetric;
mod master;
mod modulus;
mod probe;
mod reference;
mod sobolev;

pub use capacity::{capacity, CapacityProblem, CapacityResult};
pub use delta::{arc_pool, grotzsch_delta, ArcPool, DeltaResult};
pub use isoperimetric::{edge_boundary, isoperimetric_profile, ProfileMode};
pub use modulus::{modulus, CurveFamily, ModulusProblem, ModulusResult};
pub use probe::{parabolicity_probe, ProbeReport, ProbeRow, Verdict};
pub use reference::{check_r1_inequality, check_r1_log, eval_reference_function, r1_constant, m_constant, R1Check, ReferenceKind, R1Sampler};
pub use sobolev::{sobolev_constant, SobolevEstimate};

/// Default relative tolerance for constraint generation.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default iteration cap for constraint generation.
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarError {
    #[error("target set and boundary share point {0}")]
    Overlap(PointId),
    #[error("no unit-step arc joins {0} and {1}")]
    NoArc(PointId, PointId),
    #[error("volume {v} outside [1, {max}]")]
    BadVolume { v: usize, max: usize },
    #[error("exact isoperimetric profile limited to 24 points (got {0})")]
    TooLarge(usize),
    #[error("every candidate has zero energy")]
    ZeroEnergy,
    #[error("boundary set is empty")]
    NoBoundary,
    #[error("point {0} is out of range")]
    OutOfRange(PointId),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("no convergence within {iterations} iterations (gap {gap})")]
    NoConvergence { iterations: usize, gap: f64, trace: Box<SolveTrace> },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// History of a constraint-generation solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub iterations: usize,
    /// Packings in the master problem, as indices into the ball universe.
    pub active: Vec<Vec<usize>>,
    /// Best upper bound after each iteration (nonincreasing).
    pub primal: Vec<f64>,
    /// Best lower bound after each iteration (nondecreasing).
    pub dual: Vec<f64>,
    /// Final `(upper - lower) / upper`, 0 when both vanish.
    pub gap: f64,
    pub converged: bool,
    #[serde(rename = "newtonSteps")]
    pub newton_steps: usize,
}

impl SolveTrace {
    /// Every recorded lower bound is below every recorded upper bound.
    pub fn weakly_dual(&self) -> bool {
        let lo = self.dual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let hi = self.primal.iter().copied().fold(f64::INFINITY, f64::min);
        lo <= hi * (1.0 + 1e-12) + 1e-15
    }
}

pub(crate) fn relative_gap(lower: f64, upper: f64) -> f64 {
    if upper <= 0.0 {
        0.0
    } else {
        ((upper - lower) / upper).max(0.0)
    }
}
