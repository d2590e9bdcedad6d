use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not Hermitian (symmetry residual {residual:.3e} > {tolerance:.1e})")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("state vector is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reservoir length {reservoir_len} is not a multiple of the feature length {feature_len}")]
    EmbedLength {
        feature_len: usize,
        reservoir_len: usize,
    },

    #[error("ill-conditioned linear system: {0}")]
    IllConditioned(String),

    #[error("step size underflow at t = {t:.6e}; the problem may be stiff")]
    StepSizeUnderflow { t: f64 },

    #[error("trajectory separation lost at t = {t:.6e} (underflow/overflow between renormalizations)")]
    SeparationLost { t: f64 },

    #[error("component {component} has a flat spectrum (no dominant oscillation)")]
    FlatSpectrum { component: usize },

    #[error("component {component} is constant on the training segment (zero range)")]
    ConstantComponent { component: usize },

    #[error("component {component} has zero standard deviation on the reference segment")]
    ZeroSigma { component: usize },

    #[error("non-finite prediction at forecast step {step}")]
    NonFiniteForecast { step: usize },

    #[error("{context}: need at least {needed} samples, got {actual}")]
    TooShort {
        context: &'static str,
        needed: usize,
        actual: usize,
    },

    #[error("sweep produced no usable cells")]
    EmptySweep,

    #[error("unknown sweep axis {0:?} (expected gamma, J, h, dt1 or dt2)")]
    UnknownAxis(String),

    #[error("requested heatmap slice does not match any sweep cell")]
    MissingSlice,

    #[error("model serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
