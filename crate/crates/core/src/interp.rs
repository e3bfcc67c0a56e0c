//! Piecewise minimum-acceleration cubic interpolation of SE(3)^n signals.
//!
//! Each joint is blended in the ambient 4x4 matrix space with a cubic that
//! matches poses and rates at both knots. The translation column is used as
//! is; the rotation block is pulled back onto SO(3) by the polar factor of
//! `M₃ₓ₃(t) J`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::liegroup::{project_to_so3, Pose, WeightMatrix};
use crate::numerics::DerivativeOperator;
use crate::sequence::SkeletonSequence;

/// Default finite-difference stencil for knot rates.
pub const DEFAULT_STENCIL: usize = 5;

/// Queries this far outside the knot range are snapped onto it.
const RANGE_SLACK: f64 = 1e-12;

/// Entrywise time derivative of every pose of a sequence, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonDerivative {
    joint_count: usize,
    rates: Vec<Matrix4<f64>>,
}

impl SkeletonDerivative {
    pub fn from_rates(joint_count: usize, rates: Vec<Matrix4<f64>>) -> Result<Self> {
        if joint_count == 0 || !rates.len().is_multiple_of(joint_count) {
            return Err(Error::ShapeMismatch(format!(
                "{} rates do not split into frames of {joint_count} joints",
                rates.len()
            )));
        }
        if let Some(k) = rates
            .iter()
            .position(|m| m.row(3).iter().any(|&x| x != 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "rate {k} has a nonzero bottom row"
            )));
        }
        Ok(SkeletonDerivative { joint_count, rates })
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    /// Number of frames.
    pub fn len(&self) -> usize {
        self.rates.len() / self.joint_count
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[Matrix4<f64>] {
        &self.rates[i * self.joint_count..(i + 1) * self.joint_count]
    }

    pub fn rate(&self, frame: usize, joint: usize) -> &Matrix4<f64> {
        &self.rates[frame * self.joint_count + joint]
    }
}

/// Knot-rate stencil and rotational weight shared by every interpolation
/// call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpOptions {
    pub stencil_size: usize,
    /// `J`, the rotational block of the weight matrix.
    pub rotational_weight: Matrix3<f64>,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            stencil_size: DEFAULT_STENCIL,
            rotational_weight: WeightMatrix::unit_sphere().rotational(),
        }
    }
}

pub fn differentiate_skeleton(
    seq: &SkeletonSequence,
    stencil_size: usize,
) -> Result<SkeletonDerivative> {
    let op = DerivativeOperator::new(seq.times(), stencil_size)?;
    Ok(differentiate_with(seq, &op))
}

/// Applies a precomputed derivative operator to every pose entry.
pub fn differentiate_with(seq: &SkeletonSequence, op: &DerivativeOperator) -> SkeletonDerivative {
    let n = seq.joint_count();
    let mut rates = Vec::with_capacity(seq.len() * n);
    for i in 0..seq.len() {
        let (start, weights) = op.stencil(i);
        for j in 0..n {
            let centre = seq.pose(i, j).matrix();
            let mut acc = Matrix4::zeros();
            for (k, &w) in weights.iter().enumerate() {
                acc += (seq.pose(start + k, j).matrix() - centre) * w;
            }
            acc.row_mut(3).fill(0.0);
            rates.push(acc);
        }
    }
    SkeletonDerivative {
        joint_count: n,
        rates,
    }
}

/// `M(t) = M₃t³/6 + M₂t²/2 + M₁t + M₀` on `[t_lo, t_hi]`, the cubic with
/// constant third derivative `M₃` that interpolates two poses and their
/// rates.
///
/// The absolute-time coefficients are kept for inspection; evaluation uses
/// the equivalent expansion about `t_lo`, which reproduces the left knot
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSegment {
    pub m3: Matrix4<f64>,
    pub m2: Matrix4<f64>,
    pub m1: Matrix4<f64>,
    pub m0: Matrix4<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    start: Matrix4<f64>,
    start_rate: Matrix4<f64>,
    start_accel: Matrix4<f64>,
}

pub fn build_segment(
    g_lo: &Pose,
    g_hi: &Pose,
    rate_lo: &Matrix4<f64>,
    rate_hi: &Matrix4<f64>,
    t_lo: f64,
    t_hi: f64,
) -> Result<CubicSegment> {
    let dt = t_hi - t_lo;
    if !(dt > 1e-12) {
        return Err(Error::DegenerateSegment { dt });
    }
    if rate_lo
        .row(3)
        .iter()
        .chain(rate_hi.row(3).iter())
        .any(|&x| x != 0.0)
    {
        return Err(Error::InvalidParameter(
            "pose rates must have a zero bottom row".into(),
        ));
    }
    if rate_lo.iter().chain(rate_hi.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("pose rates must be finite".into()));
    }
    let g0 = g_lo.matrix();
    let dx = g_hi.matrix() - g0;
    let dv = rate_hi - rate_lo;
    let dt2 = dt * dt;

    let m3 = (rate_lo + rate_hi) * (6.0 / dt2) - dx * (12.0 / (dt2 * dt));
    let m2 = dv / dt - m3 * (0.5 * (t_lo + t_hi));
    let m1 = rate_lo - m3 * (0.5 * t_lo * t_lo) - m2 * t_lo;
    let m0 = g0 - m3 * (t_lo * t_lo * t_lo / 6.0) - m2 * (0.5 * t_lo * t_lo) - m1 * t_lo;

    let start_accel = dx * (6.0 / dt2) - (rate_lo * 4.0 + rate_hi * 2.0) / dt;
    Ok(CubicSegment {
        m3,
        m2,
        m1,
        m0,
        t_lo,
        t_hi,
        start: *g0,
        start_rate: *rate_lo,
        start_accel,
    })
}

impl CubicSegment {
    /// The blended affine matrix `M(t)`.
    pub fn matrix_at(&self, t: f64) -> Matrix4<f64> {
        let s = t - self.t_lo;
        self.start + (self.start_rate + (self.start_accel * 0.5 + self.m3 * (s / 6.0)) * s) * s
    }

    /// `dM/dt`.
    pub fn rate_at(&self, t: f64) -> Matrix4<f64> {
        let s = t - self.t_lo;
        self.start_rate + (self.start_accel + self.m3 * (0.5 * s)) * s
    }
}

/// Evaluates the segment and projects its rotation block onto SO(3).
pub fn eval_segment(seg: &CubicSegment, t: f64, j: &Matrix3<f64>) -> Result<Pose> {
    if !(t >= seg.t_lo - RANGE_SLACK && t <= seg.t_hi + RANGE_SLACK) {
        return Err(Error::OutOfRange {
            t,
            lo: seg.t_lo,
            hi: seg.t_hi,
        });
    }
    let m = seg.matrix_at(t);
    let block: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let r = project_to_so3(&(block * j))?;
    Ok(Pose::from_parts_unchecked(
        r,
        m.fixed_view::<3, 1>(0, 3).into_owned(),
    ))
}

/// Index of the segment serving `t`: knots belong to the segment on their
/// right, except the final knot.
pub fn segment_index(times: &[f64], t: f64) -> usize {
    let k = times.partition_point(|&x| x <= t);
    k.saturating_sub(1).min(times.len() - 2)
}

/// Evaluates every joint at every query time, frame-major (`queries × n`).
pub fn interpolate_skeleton(
    seq: &SkeletonSequence,
    deriv: &SkeletonDerivative,
    query_times: &[f64],
    j: &Matrix3<f64>,
) -> Result<Vec<Pose>> {
    let n = seq.joint_count();
    if deriv.joint_count() != n || deriv.len() != seq.len() {
        return Err(Error::ShapeMismatch(format!(
            "derivative is {}x{}, sequence is {}x{}",
            deriv.len(),
            deriv.joint_count(),
            seq.len(),
            n
        )));
    }
    let times = seq.times();
    let (lo, hi) = (times[0], times[times.len() - 1]);
    let mut out = Vec::with_capacity(query_times.len() * n);
    for &q in query_times {
        if !(q >= lo - RANGE_SLACK && q <= hi + RANGE_SLACK) {
            return Err(Error::OutOfRange { t: q, lo, hi });
        }
        let t = q.clamp(lo, hi);
        let k = segment_index(times, t);
        for joint in 0..n {
            let seg = build_segment(
                seq.pose(k, joint),
                seq.pose(k + 1, joint),
                deriv.rate(k, joint),
                deriv.rate(k + 1, joint),
                times[k],
                times[k + 1],
            )?;
            let pose = eval_segment(&seg, t, j).map_err(|e| match e {
                Error::DegenerateFrame { det } => {
                    Error::DegenerateSegmentFrame { segment: k, t, det }
                }
                other => other,
            })?;
            out.push(pose);
        }
    }
    Ok(out)
}
