//! Error taxonomy shared by every module.
//!
//! Three broad classes map onto the CLI exit codes: configuration errors
//! (inconsistent dimensions, schema violations), numeric failures
//! (non-finite amplitudes, solver stagnation), and resource-cap errors
//! (dense-size cap, wavefront containment).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid inputs: dimension mismatches, bad parameter
    /// ranges, malformed tables.
    #[error("configuration error: {0}")]
    Config(String),

    /// Mathematical domain violations (e.g. energy outside the admissible
    /// interval, log of a nonpositive moment value, zero spectral distance).
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel produced non-finite values or an iteration failed to reach
    /// its tolerance.
    #[error("numeric failure in {what}: {details}")]
    Numeric { what: &'static str, details: String },

    /// The evolved state reached the boundary ring before the effective
    /// time horizon; the finite box no longer represents the infinite
    /// lattice at the requested tolerance.
    #[error(
        "wavefront containment violated at t = {t:.3}: boundary-ring mass {boundary_mass:.3e} \
         exceeds {tol:.3e}; minimal safe box radius for this run is L = {minimal_safe_radius}"
    )]
    Containment {
        t: f64,
        boundary_mass: f64,
        tol: f64,
        minimal_safe_radius: i64,
    },

    /// A dense route was requested (or fallen back to) beyond the dense-size cap.
    #[error("box with {size} sites exceeds the dense-size cap {cap}; use an iterative route")]
    DenseCap { size: usize, cap: usize },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Exit-code class used by the CLI: 1 config, 2 numeric, 3 resource cap.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 1,
            Error::Numeric { .. } => 2,
            Error::Containment { .. } | Error::DenseCap { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
