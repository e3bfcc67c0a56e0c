use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("invalid twist: {0}")]
    InvalidTwist(String),

    /// Rotation angle too close to pi for the principal logarithm.
    #[error("rotation angle {angle} is within {margin:e} of pi; logarithm branch is ambiguous")]
    BranchAmbiguity { angle: f64, margin: f64 },

    #[error("degenerate frame: |det| = {det:e} is too small to project onto SO(3)")]
    DegenerateFrame { det: f64 },

    #[error("degenerate frame on segment {segment} at t = {t}: |det| = {det:e}")]
    DegenerateSegmentFrame { segment: usize, t: f64, det: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("stencil of {nodes} nodes cannot resolve derivative order {order}")]
    InsufficientStencil { order: usize, nodes: usize },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("function is not monotone at sample {index}")]
    NonMonotone { index: usize },

    #[error("degenerate segment: interval length {dt:e}")]
    DegenerateSegment { dt: f64 },

    #[error("query {t} lies outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// The signal never moves, so every time warp is equally optimal.
    #[error("static signal: peak speed {peak:e} is below the floor {floor:e}")]
    StaticSignal { peak: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("degenerate skeleton: {0}")]
    DegenerateSkeleton(String),

    #[error("unknown joint label {0:?}")]
    UnknownJoint(String),
}

impl Error {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::BranchAmbiguity { .. }
                | Error::DegenerateFrame { .. }
                | Error::DegenerateSegmentFrame { .. }
                | Error::DegenerateSegment { .. }
                | Error::StaticSignal { .. }
                | Error::DegenerateSkeleton(_)
        )
    }
}
