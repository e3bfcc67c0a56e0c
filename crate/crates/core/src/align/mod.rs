//! Sequence comparison: the UST reparameterization, DTW baselines, and the
//! error and inefficiency metrics they are scored with.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::instrument::OpCounts;
use crate::liegroup::{pose_distance, Pose, WeightMatrix};
use crate::sequence::SkeletonSequence;

mod dtw;
#[cfg(feature = "std")]
mod pairwise;
mod ust;

pub use dtw::{dtw, dtw_windowed, fastdtw, Warping, Window};
#[cfg(feature = "std")]
pub use pairwise::{align_pair, dtw_align, fastdtw_align, pairwise_align_gora, prepare_pair};
pub use ust::{
    compute_g, evaluate_functional, ust_reparameterize, SpeedEstimate, UstConfig, UstResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Gora,
    Dtw,
    FastDtw { radius: usize },
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmId::Gora => f.write_str("gora"),
            AlgorithmId::Dtw => f.write_str("dtw"),
            AlgorithmId::FastDtw { radius } => write!(f, "fastdtw:{radius}"),
        }
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "gora" => return Ok(AlgorithmId::Gora),
            "dtw" => return Ok(AlgorithmId::Dtw),
            _ => {}
        }
        let radius = s
            .strip_prefix("fastdtw:")
            .or_else(|| s.strip_prefix("fastdtw(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))?;
        radius
            .parse()
            .map(|radius| AlgorithmId::FastDtw { radius })
            .map_err(|_| Error::InvalidParameter(format!("bad FastDTW radius {radius:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentOutcome {
    pub algorithm: AlgorithmId,
    /// `E₀`, the error of the unaligned pair.
    pub initial_error: f64,
    /// `E_f`, the error after alignment.
    pub final_error: f64,
    /// Seconds.
    pub run_time: f64,
    /// `None` when `E₀ = 0`.
    pub inefficiency: Option<f64>,
    /// Set when the inputs had different lengths and one was resampled.
    pub resampled: bool,
    /// Kernel operations performed inside the timed section.
    pub ops: OpCounts,
    /// Warping path for the DTW family, as `(i, j)` frame index pairs.
    pub path: Option<alloc::vec::Vec<(usize, usize)>>,
}

/// Skeleton distance between two frames: the joint-averaged pose distance.
pub fn frame_distance(a: &[Pose], b: &[Pose], w: &WeightMatrix) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "frames of {} and {} joints",
            a.len(),
            b.len()
        )));
    }
    let mut sum = 0.0;
    for (g, h) in a.iter().zip(b) {
        sum += pose_distance(g, h, w)?;
    }
    Ok(sum / a.len() as f64)
}

/// Mean frame distance between two sequences on the same grid.
pub fn sequence_error(a: &SkeletonSequence, b: &SkeletonSequence, w: &WeightMatrix) -> Result<f64> {
    if a.len() != b.len() || a.joint_count() != b.joint_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.len(),
            a.joint_count(),
            b.len(),
            b.joint_count()
        )));
    }
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += frame_distance(a.frame(i), b.frame(i), w)?;
    }
    Ok(sum / a.len() as f64)
}

/// `E_f · T_R / E₀`, or `None` when `E₀ = 0`.
pub fn alignment_inefficiency(initial_error: f64, final_error: f64, run_time: f64) -> Option<f64> {
    if initial_error > 0.0 {
        Some(final_error * run_time / initial_error)
    } else {
        None
    }
}

/// Human-readable name of an algorithm, for logs and reports.
pub fn algorithm_label(id: AlgorithmId) -> String {
    format!("{id}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::{build_weight_matrix, Pose};
    use crate::sequence::generate_synthetic;
    use nalgebra::Vector3;

    #[test]
    fn algorithm_ids_round_trip() {
        for id in [
            AlgorithmId::Gora,
            AlgorithmId::Dtw,
            AlgorithmId::FastDtw { radius: 5 },
        ] {
            assert_eq!(algorithm_label(id).parse::<AlgorithmId>().unwrap(), id);
        }
        assert_eq!(
            "fastdtw(20)".parse::<AlgorithmId>().unwrap(),
            AlgorithmId::FastDtw { radius: 20 }
        );
        assert!("fastdtw:x".parse::<AlgorithmId>().is_err());
        assert!("soft-dtw".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn error_examples() {
        let a = generate_synthetic(2, 12, 3, 2).unwrap();
        let w = WeightMatrix::unit_sphere();
        assert_eq!(sequence_error(&a, &a, &w).unwrap(), 0.0);

        let shift = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let frames = a.frames().iter().map(|p| shift.compose(p)).collect();
        let b = a.with_frames(frames);
        let w1 = build_weight_matrix(1.0, [0.4, 0.4, 0.4]).unwrap();
        approx::assert_abs_diff_eq!(sequence_error(&a, &b, &w1).unwrap(), 1.0, epsilon = 1e-9);

        let c = generate_synthetic(3, 12, 3, 2).unwrap();
        assert_eq!(
            sequence_error(&a, &c, &w).unwrap(),
            sequence_error(&c, &a, &w).unwrap()
        );
        let short = generate_synthetic(3, 11, 3, 2).unwrap();
        assert!(matches!(
            sequence_error(&a, &short, &w),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn inefficiency_examples() {
        approx::assert_abs_diff_eq!(
            alignment_inefficiency(2.0, 0.1, 0.5).unwrap(),
            0.025,
            epsilon = 1e-15
        );
        assert_eq!(alignment_inefficiency(2.0, 0.0, 0.5), Some(0.0));
        assert_eq!(alignment_inefficiency(0.0, 0.1, 0.5), None);
        assert_eq!(
            alignment_inefficiency(2.0, 0.1, 1.0).unwrap(),
            2.0 * alignment_inefficiency(2.0, 0.1, 0.5).unwrap()
        );
    }
}
