//! Skeleton sequences, the temporal reparameterization group, and synthetic
//! data.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::interp::{differentiate_skeleton, interpolate_skeleton, InterpOptions};
use crate::liegroup::{exp_se3, so3_exp, Pose, Twist};
use crate::numerics::{check_grid, interpolate_scalar, invert_monotone, SampledFunction};

/// Endpoints within this distance of 0 and 1 are snapped onto them.
const ENDPOINT_SLACK: f64 = 1e-12;

/// `n` joint trajectories in SE(3) sampled at `T` times on `[0, 1]`.
/// Poses are stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    name: String,
    joint_labels: Vec<String>,
    times: Vec<f64>,
    frames: Vec<Pose>,
}

impl SkeletonSequence {
    pub fn new<L, S>(
        name: impl Into<String>,
        joint_labels: L,
        times: Vec<f64>,
        frames: Vec<Pose>,
    ) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let joint_labels: Vec<String> = joint_labels.into_iter().map(Into::into).collect();
        let mut times = times;
        let n = joint_labels.len();
        if n == 0 {
            return Err(Error::InvalidSequence(
                "a sequence needs at least one joint".into(),
            ));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: times.len(),
            });
        }
        if frames.len() != times.len() * n {
            return Err(Error::ShapeMismatch(format!(
                "{} poses for {} frames of {n} joints",
                frames.len(),
                times.len()
            )));
        }
        check_grid(&times).map_err(|e| Error::InvalidSequence(e.to_string()))?;
        let last = times.len() - 1;
        if (times[0]).abs() > ENDPOINT_SLACK || (times[last] - 1.0).abs() > ENDPOINT_SLACK {
            return Err(Error::InvalidSequence(format!(
                "times must run from 0 to 1, got [{}, {}]",
                times[0], times[last]
            )));
        }
        times[0] = 0.0;
        times[last] = 1.0;
        Ok(SkeletonSequence {
            name: name.into(),
            joint_labels,
            times,
            frames,
        })
    }

    /// Like [`SkeletonSequence::new`], but first maps the time stamps affinely
    /// onto `[0, 1]`.
    pub fn with_normalized_times<L, S>(
        name: impl Into<String>,
        joint_labels: L,
        times: Vec<f64>,
        frames: Vec<Pose>,
    ) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: times.len(),
            });
        }
        check_grid(&times).map_err(|e| Error::InvalidSequence(e.to_string()))?;
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let span = t1 - t0;
        let mut times: Vec<f64> = times.iter().map(|t| (t - t0) / span).collect();
        let last = times.len() - 1;
        times[last] = 1.0;
        // Rescaling can merge samples that were nearly equal.
        check_grid(&times).map_err(|e| Error::InvalidSequence(e.to_string()))?;
        Self::new(name, joint_labels, times, frames)
    }

    pub(crate) fn from_parts_unchecked(
        name: String,
        joint_labels: Vec<String>,
        times: Vec<f64>,
        frames: Vec<Pose>,
    ) -> Self {
        SkeletonSequence {
            name,
            joint_labels,
            times,
            frames,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn joint_labels(&self) -> &[String] {
        &self.joint_labels
    }

    pub fn joint_count(&self) -> usize {
        self.joint_labels.len()
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &[Pose] {
        let n = self.joint_count();
        &self.frames[i * n..(i + 1) * n]
    }

    pub fn pose(&self, frame: usize, joint: usize) -> &Pose {
        &self.frames[frame * self.joint_count() + joint]
    }

    pub fn joint_index(&self, label: &str) -> Option<usize> {
        self.joint_labels.iter().position(|l| l == label)
    }

    /// Keeps only the named joints, in the order given.
    pub fn select_joints<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                self.joint_index(l.as_ref())
                    .ok_or_else(|| Error::UnknownJoint(l.as_ref().into()))
            })
            .collect::<Result<Vec<_>>>()?;
        if idx.is_empty() {
            return Err(Error::InvalidSequence("joint selection is empty".into()));
        }
        let frames = (0..self.len())
            .flat_map(|i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| *self.pose(i, j))
            .collect();
        let labels = idx.iter().map(|&j| self.joint_labels[j].clone()).collect();
        Ok(SkeletonSequence::from_parts_unchecked(
            self.name.clone(),
            labels,
            self.times.clone(),
            frames,
        ))
    }

    /// The same poses on a different set of `[0, 1]` time stamps.
    pub(crate) fn with_frames(&self, frames: Vec<Pose>) -> Self {
        SkeletonSequence::from_parts_unchecked(
            self.name.clone(),
            self.joint_labels.clone(),
            self.times.clone(),
            frames,
        )
    }
}

/// `T` evenly spaced samples from 0 to 1 inclusive.
pub fn uniform_grid(t: usize) -> Vec<f64> {
    match t {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..t).map(|i| i as f64 / (t - 1) as f64).collect(),
    }
}

/// A sampled element of the temporal reparameterization group: strictly
/// increasing on `[0, 1]` with `τ(0) = 0` and `τ(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterization {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Reparameterization {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: times.len(),
            });
        }
        check_grid(&times)?;
        let last = times.len() - 1;
        if times[0] != 0.0 || times[last] != 1.0 {
            return Err(Error::InvalidGrid(
                "reparameterization grid must run from 0 to 1".into(),
            ));
        }
        if values[0] != 0.0 || values[last] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "reparameterization must fix the endpoints, got τ(0) = {}, τ(1) = {}",
                values[0], values[last]
            )));
        }
        if let Some(i) = values.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        Ok(Reparameterization { times, values })
    }

    /// Pins the endpoints and nudges tied samples apart by the smallest
    /// representable steps. The flag reports whether any sample moved.
    pub fn restrictify(times: Vec<f64>, mut values: Vec<f64>) -> Result<(Self, bool)> {
        if values.len() < 2 || values.len() != times.len() {
            return Reparameterization::new(times, values).map(|r| (r, false));
        }
        let last = values.len() - 1;
        let mut moved = values[0] != 0.0 || values[last] != 1.0;
        values[0] = 0.0;
        values[last] = 1.0;
        for i in 1..last {
            let floor = next_up(values[i - 1]);
            if !(values[i] >= floor) {
                values[i] = floor;
                moved = true;
            }
        }
        // Walk back from the pinned right endpoint if the forward pass ran into it.
        for i in (1..last).rev() {
            let ceil = next_down(values[i + 1]);
            if !(values[i] <= ceil) {
                values[i] = ceil;
                moved = true;
            }
        }
        Reparameterization::new(times, values).map(|r| (r, moved))
    }

    pub fn identity(times: Vec<f64>) -> Result<Self> {
        let values = times.clone();
        Reparameterization::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn as_function(&self) -> SampledFunction {
        SampledFunction::new(self.times.clone(), self.values.clone())
            .expect("validated on construction")
    }

    /// Piecewise-linear evaluation at arbitrary times in `[0, 1]`.
    pub fn evaluate(&self, t: &[f64]) -> Vec<f64> {
        interpolate_scalar(&self.as_function(), t).values
    }

    /// Smallest gap between consecutive values.
    pub fn min_increment(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn next_up(x: f64) -> f64 {
    if x >= 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else if x == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn next_down(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        -next_up(-x)
    }
}

/// Random warp on the uniform `T`-grid: increments `exp(roughness · z)` with
/// `z ~ N(0, 1)`, normalized to sum to one and accumulated.
pub fn random_trg(seed: u64, t: usize, roughness: f64) -> Result<Reparameterization> {
    if t < 2 {
        return Err(Error::InsufficientData { needed: 2, got: t });
    }
    if !(0.0..1.0).contains(&roughness) {
        return Err(Error::InvalidParameter(format!(
            "roughness must lie in [0, 1), got {roughness}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let increments: Vec<f64> = (1..t)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            libm::exp(roughness * z)
        })
        .collect();
    let mut values = Vec::with_capacity(t);
    let mut acc = 0.0;
    values.push(0.0);
    for inc in &increments {
        acc += inc;
        values.push(acc);
    }
    for v in values.iter_mut() {
        *v /= acc;
    }
    values[t - 1] = 1.0;
    Reparameterization::restrictify(uniform_grid(t), values).map(|(r, _)| r)
}

/// Samples of `τ₁ ∘ τ₂` on `τ₂`'s grid. The flag reports a re-strictified
/// result.
pub fn compose_trg(
    outer: &Reparameterization,
    inner: &Reparameterization,
) -> Result<(Reparameterization, bool)> {
    let values = outer.evaluate(inner.values());
    Reparameterization::restrictify(inner.times.clone(), values)
}

/// Samples of `τ⁻¹` on `τ`'s own grid.
pub fn invert_trg(tau: &Reparameterization) -> Result<(Reparameterization, bool)> {
    let values = invert_monotone(&tau.as_function(), &tau.times)?.values;
    Reparameterization::restrictify(tau.times.clone(), values)
}

/// `X(τ(t_i))` for every sample time of `seq`, interpolated on SE(3)^n.
pub fn apply_reparameterization(
    seq: &SkeletonSequence,
    tau: &Reparameterization,
    opts: &InterpOptions,
) -> Result<SkeletonSequence> {
    let queries = if tau.times() == seq.times() {
        tau.values().to_vec()
    } else {
        tau.evaluate(seq.times())
    };
    let deriv = differentiate_skeleton(seq, opts.stencil_size)?;
    let frames = interpolate_skeleton(seq, &deriv, &queries, &opts.rotational_weight)?;
    Ok(seq.with_frames(frames))
}

/// Interpolates `seq` onto a new `[0, 1]` grid.
pub fn resample(
    seq: &SkeletonSequence,
    times: &[f64],
    opts: &InterpOptions,
) -> Result<SkeletonSequence> {
    let deriv = differentiate_skeleton(seq, opts.stencil_size)?;
    let frames = interpolate_skeleton(seq, &deriv, times, &opts.rotational_weight)?;
    SkeletonSequence::new(
        seq.name.clone(),
        seq.joint_labels.clone(),
        times.to_vec(),
        frames,
    )
}

/// Removes camera placement and body size, anchored on the first frame.
///
/// All joints are translated so `root` sits at the origin, rotated so that
/// root→spine points along +y and the hip-left→hip-right direction
/// (orthogonalized against y) along +x, and translations are divided by the
/// root→spine length. Joint orientations are carried into the new world
/// frame (`R ↦ G R`).
pub fn normalize_skeleton(
    seq: &SkeletonSequence,
    root: &str,
    spine: &str,
    hip_left: &str,
    hip_right: &str,
) -> Result<SkeletonSequence> {
    let find = |l: &str| {
        seq.joint_index(l)
            .ok_or_else(|| Error::UnknownJoint(l.into()))
    };
    let (r, s, hl, hr) = (find(root)?, find(spine)?, find(hip_left)?, find(hip_right)?);
    let p = |j: usize| seq.pose(0, j).translation();
    let origin = p(r);
    let up = p(s) - origin;
    let scale = up.norm();
    if !(scale > 1e-12) {
        return Err(Error::DegenerateSkeleton(format!(
            "{root}→{spine} has zero length"
        )));
    }
    let y = up / scale;
    let across = p(hr) - p(hl);
    let x = across - y * across.dot(&y);
    let x_len = x.norm();
    if !(x_len > 1e-12) {
        return Err(Error::DegenerateSkeleton(format!(
            "{hip_left}→{hip_right} is parallel to the spine"
        )));
    }
    let x = x / x_len;
    let z = x.cross(&y);
    let g = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let frames = seq
        .frames
        .iter()
        .map(|pose| {
            Pose::from_parts_unchecked(
                g * pose.rotation(),
                g * (pose.translation() - origin) / scale,
            )
        })
        .collect();
    Ok(seq.with_frames(frames))
}

/// Amplitude of the rotational (rad) and translational (m) harmonics.
const ANGULAR_AMPLITUDE: f64 = 0.35;
const LINEAR_AMPLITUDE: f64 = 0.15;

#[derive(Debug, Clone)]
struct JointCurve {
    base: Pose,
    /// Per harmonic k: (sine twist, cosine twist) coefficients.
    harmonics: Vec<([f64; 6], [f64; 6])>,
}

/// A random smooth skeleton defined for every `t ∈ [0, 1]`.
///
/// Joint `j` follows `base_j · exp(ξ_j(t))` where `ξ_j` is a band-limited
/// twist curve, `Σ_k (a_k sin(πkt) + b_k (1 − cos(πkt))) / k`, so every
/// sample is a valid pose and velocities stay bounded.
#[derive(Debug, Clone)]
pub struct SyntheticSkeleton {
    seed: u64,
    joints: Vec<JointCurve>,
}

impl SyntheticSkeleton {
    pub fn random(seed: u64, joint_count: usize, smoothness: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = move || -> f64 { rng.sample(StandardNormal) };
        let joints = (0..joint_count)
            .map(|_| {
                let axis = Vector3::new(normal(), normal(), normal()) * 0.5;
                let offset = Vector3::new(normal(), normal(), normal()) * 0.3;
                let base = Pose::from_parts_unchecked(so3_exp(&axis), offset);
                let mut coeff = |scale_rot: f64, scale_lin: f64| {
                    let mut c = [0.0; 6];
                    for (i, v) in c.iter_mut().enumerate() {
                        *v = normal() * if i < 3 { scale_rot } else { scale_lin };
                    }
                    c
                };
                let harmonics = (0..smoothness)
                    .map(|_| {
                        let a = coeff(ANGULAR_AMPLITUDE, LINEAR_AMPLITUDE);
                        let b = coeff(ANGULAR_AMPLITUDE, LINEAR_AMPLITUDE);
                        (a, b)
                    })
                    .collect();
                JointCurve { base, harmonics }
            })
            .collect();
        SyntheticSkeleton { seed, joints }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Body-frame displacement `ξ_j(t)` of joint `j`.
    pub fn twist(&self, joint: usize, t: f64) -> Twist {
        let mut xi = [0.0; 6];
        for (k, (a, b)) in self.joints[joint].harmonics.iter().enumerate() {
            let freq = core::f64::consts::PI * (k + 1) as f64;
            let (s, c) = (libm::sin(freq * t), 1.0 - libm::cos(freq * t));
            for i in 0..6 {
                xi[i] += (a[i] * s + b[i] * c) / (k + 1) as f64;
            }
        }
        Twist::new(
            Vector3::new(xi[0], xi[1], xi[2]),
            Vector3::new(xi[3], xi[4], xi[5]),
        )
    }

    pub fn pose(&self, joint: usize, t: f64) -> Pose {
        self.joints[joint]
            .base
            .compose(&exp_se3(&self.twist(joint, t)))
    }

    /// Samples the skeleton at the given `[0, 1]` time stamps.
    pub fn sample(&self, times: &[f64]) -> Result<SkeletonSequence> {
        self.sample_warped(times, times)
    }

    /// The skeleton evaluated at `warp[i]` but stamped with `times[i]`,
    /// i.e. `X(τ(t_i))` without interpolation error.
    pub fn sample_warped(&self, times: &[f64], warp: &[f64]) -> Result<SkeletonSequence> {
        if times.len() != warp.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} warp samples",
                times.len(),
                warp.len()
            )));
        }
        let n = self.joint_count();
        let frames = warp
            .iter()
            .flat_map(|&s| (0..n).map(move |j| (j, s)))
            .map(|(j, s)| self.pose(j, s))
            .collect();
        let labels = (0..n).map(|j| format!("joint{j:02}"));
        SkeletonSequence::new(
            format!("synthetic-{}", self.seed),
            labels,
            times.to_vec(),
            frames,
        )
    }
}

/// A deterministic smooth random skeleton on the uniform `T`-grid.
/// `smoothness` is the number of harmonics; zero gives a static sequence.
pub fn generate_synthetic(
    seed: u64,
    t: usize,
    joint_count: usize,
    smoothness: usize,
) -> Result<SkeletonSequence> {
    if joint_count == 0 {
        return Err(Error::InvalidParameter(
            "joint count must be positive".into(),
        ));
    }
    SyntheticSkeleton::random(seed, joint_count, smoothness).sample(&uniform_grid(t))
}
