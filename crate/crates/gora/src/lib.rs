//! File formats, the benchmark harness and report emission for
//! [`gora_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod gsk;
pub mod harness;
pub mod ntu;
pub mod report;

/// Joint labels used to normalize Kinect v2 / NTU skeletons:
/// root, spine, left hip, right hip.
pub const NTU_NORMALIZATION_JOINTS: [&str; 4] = ["SpineBase", "SpineMid", "HipLeft", "HipRight"];
