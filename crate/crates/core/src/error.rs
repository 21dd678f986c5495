//! Error types shared by the compute modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The eigenvalue branch is singular (a below the degeneracy tolerance)
    /// at the given parameter-space point or at a stencil point around it.
    #[error("singular eigenvalue branch at ({x}, {y}, {z}): a < degeneracy tolerance")]
    SampleOnSingularity { x: f64, y: f64, z: f64 },

    /// The fixed-gauge eigenvector norm fell below the nodal-line floor.
    #[error("eigenvector norm {norm:.3e} too close to the nodal line at ({x}, {y}, {z})")]
    StringProximity { x: f64, y: f64, z: f64, norm: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    /// Closed-form curvatures are only available for the + band.
    #[error("operation not available for the requested band")]
    UnsupportedBand,

    #[error("adiabaticity broken: minimum fidelity {min_fidelity:.6} below floor {floor}")]
    AdiabaticityBroken { min_fidelity: f64, floor: f64 },

    #[error("integration unstable at t = {t:.3}: state norm {norm:.3e}")]
    StepUnstable { t: f64, norm: f64 },

    #[error("phase unwrap ambiguous at t = {t:.3}: per-step increment {increment:.3} rad")]
    PhaseUnwrapAmbiguous { t: f64, increment: f64 },

    #[error("zero state vector")]
    ZeroState,

    #[error("soliton lost at t = {t:.3}: peak density below 10% of initial")]
    SolitonLost { t: f64 },

    #[error("split-step stability guard violated: {0}")]
    StabilityViolation(String),

    /// Invalid run configuration (precondition violated before any numerics).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors raised by configuration validation rather than by a
    /// numeric guard tripping mid-computation.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
