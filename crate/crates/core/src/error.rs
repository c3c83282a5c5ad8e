use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KclError {
    #[error("no jump in conserved density")]
    NoJump,
    #[error("time step underflow at t = {time}")]
    TimeStepUnderflow { time: f64 },
    #[error("invalid thermodynamic state")]
    InvalidThermodynamicState,
    #[error("invalid speed along ray: m = {speed} at ({x}, {y})")]
    InvalidSpeed { speed: f64, x: f64, y: f64 },
    #[error("front is singular, consistency undefined")]
    SingularFront,
    #[error("metric collapse in cell {cell}")]
    MetricCollapse { cell: usize },
    #[error("degenerate system")]
    DegenerateSystem,
    #[error("empty integration range")]
    EmptyRange,
    #[error("no kink")]
    NoKink,
    #[error("subsonic front: WNLRT closure undefined (cell {cell}, m = {m})")]
    SubsonicFront { cell: usize, m: f64 },
    #[error("closure inversion failed (g = {g}, invariant = {invariant})")]
    ClosureInversion { g: f64, invariant: f64 },
    #[error("degenerate tangent frame in cell {cell}")]
    DegenerateFrame { cell: usize },
    #[error("smooth regime exceeded at t = {time}: neighbouring normals differ by {angle} rad")]
    SmoothnessLost { time: f64, angle: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = KclError> = std::result::Result<T, E>;
