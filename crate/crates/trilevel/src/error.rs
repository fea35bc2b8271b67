//! Error type shared by all engine and analysis modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building, solving, or analysing an engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration field violates a type invariant.
    #[error("invalid {what}: {why}")]
    InvalidInput { what: &'static str, why: String },

    /// Bath ordering does not permit engine operation (beta_c < beta_h).
    #[error("not an engine configuration: beta_c = {beta_c} < beta_h = {beta_h}")]
    NotAnEngine { beta_c: f64, beta_h: f64 },

    /// exp(-beta*eps) left the finite range of f64.
    #[error("range error: exp({arg}) is not finite in detailed balance")]
    RangeOverflow { arg: f64 },

    /// The structural work-channel closure was asked to divide by a zero width.
    #[error("degenerate width: G = 0 with sin(theta) = {sin_theta}")]
    DegenerateWidth { sin_theta: f64 },

    /// Every rate of the kinetic network is zero, so no stationary state is selected.
    #[error("disconnected network: all channel rates are zero")]
    DisconnectedNetwork,

    /// The generator kernel has more than one direction.
    #[error("non-unique steady state: {null_dim} null vectors")]
    NonUniqueSteadyState { null_dim: usize },

    /// The solved state has an eigenvalue too negative to repair.
    #[error("unphysical steady state: min eigenvalue {min_eig:.3e}")]
    UnphysicalSteadyState { min_eig: f64 },

    /// Time integration did not settle before the horizon.
    #[error("no steady state within horizon t = {horizon}: residual {residual:.3e}")]
    RelaxTimeout { horizon: f64, residual: f64 },

    /// An algebraic identity that must hold failed beyond tolerance.
    #[error("internal consistency: {0}")]
    Inconsistent(String),

    /// Results fed to the analysis do not line up with the design.
    #[error("misaligned results: {0}")]
    Misaligned(String),

    /// Degrees of freedom outside the supported range.
    #[error("invalid degrees of freedom: d1 = {d1}, d2 = {d2}")]
    InvalidDof { d1: u32, d2: u32 },
}
