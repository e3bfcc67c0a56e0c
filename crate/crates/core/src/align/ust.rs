//! Closed-form reparameterization to the universal standard timescale.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interp::{
    differentiate_skeleton, interpolate_skeleton, SkeletonDerivative, DEFAULT_STENCIL,
};
use crate::liegroup::{weighted_frobenius_norm, WeightMatrix};
use crate::numerics::{
    integrate_cumulative_with, interpolate_scalar, invert_monotone, DerivativeOperator, Quadrature,
    SampledFunction,
};
use crate::sequence::{Reparameterization, SkeletonSequence};

/// Speeds below this fraction of the peak `𝔤` are raised to it so the
/// arc-length map stays strictly increasing through pauses.
const RELATIVE_FLOOR: f64 = 1e-12;

/// How the kinetic profile `𝔤` feeding the arc-length map is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedEstimate {
    /// Forward-difference body velocities over each interval, summed with
    /// left-endpoint rectangles. The accumulated arc length is then the
    /// exact sum of per-interval chord lengths, so two differently warped
    /// samplings of one path agree on it to interval-length accuracy.
    #[default]
    Chord,
    /// Body velocities from the interpolation stencil, trapezoid-integrated.
    Stencil,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UstConfig {
    /// Stencil for the knot rates used by SE(3) interpolation (and by
    /// [`SpeedEstimate::Stencil`]).
    pub stencil_size: usize,
    pub weight: WeightMatrix,
    pub speed: SpeedEstimate,
    /// Inputs whose peak `𝔤` is below this are rejected as static.
    pub static_floor: f64,
}

impl Default for UstConfig {
    fn default() -> Self {
        UstConfig {
            stencil_size: DEFAULT_STENCIL,
            weight: WeightMatrix::unit_sphere(),
            speed: SpeedEstimate::Chord,
            static_floor: 1e-16,
        }
    }
}

impl UstConfig {
    pub fn interp_options(&self) -> crate::interp::InterpOptions {
        crate::interp::InterpOptions {
            stencil_size: self.stencil_size,
            rotational_weight: self.weight.rotational(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UstResult {
    pub tau_star: Reparameterization,
    /// The input resampled at `τ*`, on the input's own grid.
    pub reparameterized: SkeletonSequence,
    /// `∫₀¹ √𝔤`, the weighted arc length.
    pub c: f64,
    /// `𝔤` of the input, before flooring.
    pub g_profile: SampledFunction,
}

/// `𝔤(tᵢ) = Σⱼ ‖gⱼ⁻¹ ġⱼ‖²_W`, using `n` norm evaluations per sample.
pub fn compute_g(
    seq: &SkeletonSequence,
    deriv: &SkeletonDerivative,
    w: &WeightMatrix,
) -> Result<SampledFunction> {
    if deriv.joint_count() != seq.joint_count() || deriv.len() != seq.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "derivative is {}x{}, sequence is {}x{}",
            deriv.len(),
            deriv.joint_count(),
            seq.len(),
            seq.joint_count()
        )));
    }
    let values = (0..seq.len())
        .map(|i| {
            seq.frame(i)
                .iter()
                .zip(deriv.frame(i))
                .map(|(g, rate)| {
                    let body = g.inverse().matrix() * rate;
                    let norm = weighted_frobenius_norm(&body, w);
                    norm * norm
                })
                .sum()
        })
        .collect();
    SampledFunction::new(seq.times().to_vec(), values)
}

pub fn ust_reparameterize(seq: &SkeletonSequence, config: &UstConfig) -> Result<UstResult> {
    let t = seq.len();
    if t < config.stencil_size {
        return Err(Error::InsufficientData {
            needed: config.stencil_size,
            got: t,
        });
    }
    let deriv = differentiate_skeleton(seq, config.stencil_size)?;
    let (g, rule) = match config.speed {
        SpeedEstimate::Chord => (
            compute_g(seq, &differentiate_skeleton(seq, 2)?, &config.weight)?,
            Quadrature::LeftEndpoint,
        ),
        SpeedEstimate::Stencil => (
            compute_g(seq, &deriv, &config.weight)?,
            Quadrature::Trapezoid,
        ),
    };

    let peak = g.values().iter().copied().fold(0.0, f64::max);
    if !(peak >= config.static_floor) {
        return Err(Error::StaticSignal {
            peak,
            floor: config.static_floor,
        });
    }
    let floor = peak * RELATIVE_FLOOR;
    let speed: Vec<f64> = g
        .values()
        .iter()
        .map(|&v| libm::sqrt(v.max(floor)))
        .collect();
    let arc = integrate_cumulative_with(&SampledFunction::new(seq.times().to_vec(), speed)?, rule);
    let c = arc.values()[t - 1];
    let mut normalized: Vec<f64> = arc.values().iter().map(|v| v / c).collect();
    normalized[t - 1] = 1.0;
    let f = SampledFunction::new(seq.times().to_vec(), normalized)?;

    let inverse = invert_monotone(&f, seq.times())?;
    let (tau_star, _) = Reparameterization::restrictify(seq.times().to_vec(), inverse.values)?;
    let frames = interpolate_skeleton(seq, &deriv, tau_star.values(), &config.weight.rotational())?;
    let reparameterized = seq.with_frames(frames);
    Ok(UstResult {
        tau_star,
        reparameterized,
        c,
        g_profile: g,
    })
}

/// `J[τ] = ∫₀¹ τ̇² 𝔤(τ) dt`: `𝔤` from the given stencil, sampled at `τ(tᵢ)`
/// by linear interpolation, `τ̇` by finite differences, trapezoid rule.
pub fn evaluate_functional(
    seq: &SkeletonSequence,
    tau: &Reparameterization,
    w: &WeightMatrix,
    stencil_size: usize,
) -> Result<f64> {
    let g = compute_g(seq, &differentiate_skeleton(seq, stencil_size)?, w)?;
    let g_at = interpolate_scalar(&g, tau.values()).values;
    let rate = DerivativeOperator::new(tau.times(), stencil_size)?.apply(tau.values());
    let integrand: Vec<f64> = rate.iter().zip(&g_at).map(|(r, g)| r * r * g).collect();
    let j = integrate_cumulative_with(
        &SampledFunction::new(tau.times().to_vec(), integrand)?,
        Quadrature::Trapezoid,
    );
    Ok(j.values()[j.len() - 1])
}
