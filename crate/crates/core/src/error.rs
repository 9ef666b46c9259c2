use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition or domain invariant was violated by the caller.
    #[error("validation error: {0}")]
    Validation(String),

    /// A malformed row or header in an event CSV stream.
    #[error("decode error at line {line}: {message}")]
    Decode { line: usize, message: String },

    /// An event failed validation during encoding.
    #[error("shot {shot_id}: {message}")]
    BadShot { shot_id: u64, message: String },

    /// Geometry with coincident points where a distance must be nonzero.
    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    /// The Poisson thinning envelope was exceeded by the true intensity.
    /// Indicates a broken envelope estimate, never silent clipping.
    #[error("thinning envelope violated: intensity {intensity:.6e} exceeds bound {envelope:.6e}")]
    EnvelopeViolation { intensity: f64, envelope: f64 },

    /// Normalization is undefined (e.g. zero mean intensity at a point).
    #[error("normalization undefined: {0}")]
    DegenerateNormalization(String),

    /// Two curves expected on identical bins disagree.
    #[error("bin mismatch: {0}")]
    BinMismatch(String),

    /// The discretized point-process kernel is not a valid DPP kernel.
    #[error("kernel spectrum outside [0, 1]: worst eigenvalue {worst:.6e} (tolerance {tolerance:.1e})")]
    KernelSpectrum { worst: f64, tolerance: f64 },

    /// A Fock-space operation would exceed the total particle cap.
    #[error("particle number {requested} exceeds cap {cap}")]
    ParticleCap { requested: usize, cap: usize },

    /// An operation referenced a mode label absent from the state.
    #[error("unknown mode '{0}'")]
    UnknownMode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
