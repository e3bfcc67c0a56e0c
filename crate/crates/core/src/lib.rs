//! Reparameterization of rigid-body skeleton sequences to a universal
//! standard timescale (UST).
//!
//! A skeleton sequence is a trajectory in SE(3)^n sampled on a normalized
//! `[0, 1]` clock. Each sequence is mapped, in closed form, to the unique
//! timescale along which its weighted body-velocity speed is constant. Two
//! sequences that differ only by a monotone time warp land on (nearly) the
//! same image, so they can be compared sample by sample in O(nT).
//!
//! Exact DTW and FastDTW baselines sharing the same SE(3)^n metric live in
//! [`align`], alongside the error and alignment-inefficiency metrics.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. The `std` feature adds wall-clock timed pairwise alignment and
//! per-thread operation counters.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > y)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod align;
pub mod error;
pub mod instrument;
pub mod interp;
pub mod liegroup;
pub mod numerics;
pub mod sequence;

pub use error::{Error, Result};
pub use liegroup::{Pose, Twist, WeightMatrix};
pub use sequence::{Reparameterization, SkeletonSequence};
