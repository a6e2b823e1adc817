//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arm segment `{segment}` has length {length:.6} m, below the {min} m minimum")]
    DegenerateSegment {
        segment: &'static str,
        length: f64,
        min: f64,
    },
    #[error("wrist, elbow and shoulder are collinear (sin psi = {sin_psi:e})")]
    CollinearArm { sin_psi: f64 },
    #[error("elbow angle {psi} rad is outside the open interval (0, pi)")]
    DegenerateAngle { psi: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("abscissa is not strictly increasing at index {index}")]
    NonMonotonicAbscissa { index: usize },
    #[error("azimuth is not strictly decreasing at index {index}")]
    NonMonotonicAzimuth { index: usize },
    #[error("{arm}: retained azimuth span {span:.4} rad is below pi/2; the path never crosses the elbow")]
    NonTraversal { arm: &'static str, span: f64 },

    #[error("requested {k} clusters for {n} samples")]
    TooManyClusters { k: usize, n: usize },
    #[error("component {component} collapsed (responsibility mass {mass:e})")]
    EmptyComponent { component: usize, mass: f64 },
    #[error("no component count in [{k_min}, {k_max}] produced a usable mixture")]
    NoViableModel { k_min: usize, k_max: usize },
    #[error("input covariance block of component {component} is not positive definite")]
    SingularInputBlock { component: usize },
    #[error("matrix is not positive definite: {context}")]
    NotPositiveDefinite { context: String },

    #[error("need at least {needed} demonstrations, got {got}")]
    InsufficientDemonstrations { needed: usize, got: usize },

    #[error("armscye point list is empty")]
    EmptyArmscye,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("demonstration {index} has grid length {got}, expected {expected}")]
    GridMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation failed at {location}: {message}")]
    Validation { location: String, message: String },
    #[error("unsupported format version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Process exit code families used by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Validation = 1,
    Numerical = 2,
    Usage = 3,
}

impl Error {
    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DegenerateSegment { .. } => "DegenerateSegment",
            Error::CollinearArm { .. } => "CollinearArm",
            Error::DegenerateAngle { .. } => "DegenerateAngle",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::NonMonotonicAbscissa { .. } => "NonMonotonicAbscissa",
            Error::NonMonotonicAzimuth { .. } => "NonMonotonicAzimuth",
            Error::NonTraversal { .. } => "NonTraversal",
            Error::TooManyClusters { .. } => "TooManyClusters",
            Error::EmptyComponent { .. } => "EmptyComponent",
            Error::NoViableModel { .. } => "NoViableModel",
            Error::SingularInputBlock { .. } => "SingularInputBlock",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::InsufficientDemonstrations { .. } => "InsufficientDemonstrations",
            Error::EmptyArmscye => "EmptyArmscye",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroVariance => "ZeroVariance",
            Error::GridMismatch { .. } => "GridMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::Io { .. } => "IoError",
        }
    }

    pub fn exit_class(&self) -> ExitClass {
        match self {
            Error::EmptyComponent { .. }
            | Error::NoViableModel { .. }
            | Error::SingularInputBlock { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::ZeroVariance => ExitClass::Numerical,
            Error::InvalidArgument(_) => ExitClass::Usage,
            _ => ExitClass::Validation,
        }
    }

    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
