use thiserror::Error;

/// Errors produced by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("parameter validation failed:\n{0}")]
    Validation(String),

    #[error("thermal occupation undefined for nonpositive frequency {omega} rad/s")]
    NonPositiveFrequency { omega: f64 },

    #[error("mean-field system singular")]
    MeanFieldSingular,

    #[error("mean-field iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unstable drift matrix (stability margin {margin:.6e} rad/s)")]
    UnstableDrift { margin: f64 },

    #[error("eigenvalue solver failed on {context}:\n{matrix_dump}")]
    EigenFailure {
        context: &'static str,
        matrix_dump: String,
    },

    #[error(
        "symplectic eigenvalue inconsistency: spectral {spectral:.12e} vs closed form {closed_form:.12e}"
    )]
    SymplecticInconsistency { spectral: f64, closed_form: f64 },

    #[error("unphysical reduced covariance: discriminant {discriminant:.3e} below tolerance")]
    UnphysicalCovariance { discriminant: f64 },

    #[error("unknown mode id `{0}` (valid: c1, c2, m1, m2, b1, b2)")]
    UnknownMode(String),

    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("invalid sweep spec: {0}")]
    InvalidSweep(String),

    #[error("override error: {0}")]
    Override(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
