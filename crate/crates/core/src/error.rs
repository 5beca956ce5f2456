use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} um outside Sellmeier validity window [{min_um}, {max_um}] um")]
    OutOfValidityWindow {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("no collinear type-II phase matching in (0, pi/2) for a {pump_um} um pump")]
    NoPhaseMatching { pump_um: f64 },

    #[error("{what} must be positive, got {value}")]
    NonPositiveInput { what: &'static str, value: f64 },

    #[error("dispersion coefficients are missing")]
    MissingDispersion,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("traced-out block is not negative definite (unconfined direction {direction})")]
    DiscardedBlockNotDefinite { direction: String },

    #[error("reduced kernel is not trace class (unconfined direction {direction})")]
    NotTraceClass { direction: String },

    #[error("unnormalizable configuration in {context}: unconfined direction {direction}")]
    Unnormalizable { context: String, direction: String },

    #[error("quadrature grid too coarse: {coarse} vs {fine} after refinement")]
    GridTooCoarse { coarse: f64, fine: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("unit error at {pointer}: {message}")]
    Unit { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short variant name, used as the error marker in sweep output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutOfValidityWindow { .. } => "OutOfValidityWindow",
            Error::NoPhaseMatching { .. } => "NoPhaseMatching",
            Error::NonPositiveInput { .. } => "NonPositiveInput",
            Error::MissingDispersion => "MissingDispersion",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::DiscardedBlockNotDefinite { .. } => "DiscardedBlockNotDefinite",
            Error::NotTraceClass { .. } => "NotTraceClass",
            Error::Unnormalizable { .. } => "Unnormalizable",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::Schema { .. } => "SchemaError",
            Error::Unit { .. } => "UnitError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for errors that mean the Gaussian state (or one of its filtered
    /// variants) cannot be normalized.
    pub fn is_unnormalizable(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite
                | Error::DiscardedBlockNotDefinite { .. }
                | Error::NotTraceClass { .. }
                | Error::Unnormalizable { .. }
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_unnormalizable() || matches!(self, Error::MissingDispersion) {
            2
        } else {
            1
        }
    }
}
