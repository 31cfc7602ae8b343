//! Master-equation dynamics of a kicked SERF magnetometer atom.

pub mod doppler;
pub mod model;
pub mod params;
pub mod propagator;

use thiserror::Error;

use crate::angular::AngularError;
use crate::state::StateError;

pub use doppler::DopplerGrid;
pub use model::{thermal_state, zero_hyperfine_coherences, JumpOperators, SerfModel, StepReport};
pub use params::{
    LarmorModel, MagnetometerParams, PhysicalConstants, PulseIntegration, PulseSchedule,
};
pub use propagator::{
    evolve, DiagnosticLine, EvolveOptions, Evolution, LightSuperoperator, Propagator, RunStats,
};

/// Trace deviations at or below this are left alone by renormalization.
pub const RENORMALIZE_THRESHOLD: f64 = 0.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Angular(#[from] AngularError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("positivity violated at t = {time} s: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },
    #[error(transparent)]
    Metrology(#[from] crate::metrology::MetrologyError),
    #[error("non-finite state at t = {time} s")]
    NonFinite { time: f64 },
}

impl DynamicsError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, DynamicsError::PositivityViolation { .. } | DynamicsError::NonFinite { .. })
    }
}
