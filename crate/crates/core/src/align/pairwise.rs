//! Timed pairwise alignment of two sequences by each algorithm.

use std::borrow::Cow;
use std::time::Instant;

use crate::align::{
    alignment_inefficiency, dtw, fastdtw, sequence_error, ust_reparameterize, AlgorithmId,
    AlignmentOutcome, UstConfig,
};
use crate::error::{Error, Result};
use crate::instrument::measure;
use crate::interp::InterpOptions;
use crate::liegroup::WeightMatrix;
use crate::sequence::{resample, SkeletonSequence};

/// Shortest run time ever reported, so `T_R > 0` holds on coarse clocks.
const MIN_RUN_TIME: f64 = 1e-9;

/// Brings two sequences onto a common grid. When their lengths differ the
/// shorter one is resampled onto the longer one's time stamps and the flag
/// is set. The stencil shrinks to fit sequences shorter than it.
pub fn prepare_pair<'a>(
    a: &'a SkeletonSequence,
    b: &'a SkeletonSequence,
    opts: &InterpOptions,
) -> Result<(Cow<'a, SkeletonSequence>, Cow<'a, SkeletonSequence>, bool)> {
    if a.joint_count() != b.joint_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} joints vs {} joints",
            a.joint_count(),
            b.joint_count()
        )));
    }
    if a.times() == b.times() {
        return Ok((Cow::Borrowed(a), Cow::Borrowed(b), false));
    }
    let fit = |s: &SkeletonSequence| InterpOptions {
        stencil_size: opts.stencil_size.min(s.len()),
        ..*opts
    };
    if a.len() >= b.len() {
        Ok((
            Cow::Borrowed(a),
            Cow::Owned(resample(b, a.times(), &fit(b))?),
            true,
        ))
    } else {
        Ok((
            Cow::Owned(resample(a, b.times(), &fit(a))?),
            Cow::Borrowed(b),
            true,
        ))
    }
}

fn outcome(
    algorithm: AlgorithmId,
    e0: f64,
    ef: f64,
    elapsed: f64,
    resampled: bool,
) -> AlignmentOutcome {
    let run_time = elapsed.max(MIN_RUN_TIME);
    AlignmentOutcome {
        algorithm,
        initial_error: e0,
        final_error: ef,
        run_time,
        inefficiency: alignment_inefficiency(e0, ef, run_time),
        resampled,
        ops: Default::default(),
        path: None,
    }
}

/// Maps both sequences to their UST images and scores them sample by
/// sample. The timed section covers both reparameterizations and the final
/// error; `E₀` and any resampling happen before it.
pub fn pairwise_align_gora(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    config: &UstConfig,
) -> Result<AlignmentOutcome> {
    let (a, b, resampled) = prepare_pair(a, b, &config.interp_options())?;
    let e0 = sequence_error(&a, &b, &config.weight)?;
    let start = Instant::now();
    let (ef, ops) = measure(|| -> Result<f64> {
        let ua = ust_reparameterize(&a, config)?;
        let ub = ust_reparameterize(&b, config)?;
        sequence_error(&ua.reparameterized, &ub.reparameterized, &config.weight)
    });
    let elapsed = start.elapsed().as_secs_f64();
    let mut out = outcome(AlgorithmId::Gora, e0, ef?, elapsed, resampled);
    out.ops = ops;
    Ok(out)
}

fn dtw_family(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    w: &WeightMatrix,
    algorithm: AlgorithmId,
    opts: &InterpOptions,
) -> Result<AlignmentOutcome> {
    let (ra, rb, resampled) = prepare_pair(a, b, opts)?;
    let e0 = sequence_error(&ra, &rb, w)?;
    let start = Instant::now();
    let (warping, ops) = measure(|| match algorithm {
        AlgorithmId::FastDtw { radius } => fastdtw(a, b, w, radius),
        _ => dtw(a, b, w),
    });
    let elapsed = start.elapsed().as_secs_f64();
    let warping = warping?;
    let mut out = outcome(algorithm, e0, warping.normalized_cost, elapsed, resampled);
    out.ops = ops;
    out.path = Some(warping.path);
    Ok(out)
}

/// Exact DTW; `E_f` is the accumulated cost over the number of path nodes.
/// The warp runs on the original sequences, only `E₀` needs a common grid.
pub fn dtw_align(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    w: &WeightMatrix,
) -> Result<AlignmentOutcome> {
    let opts = InterpOptions {
        rotational_weight: w.rotational(),
        ..InterpOptions::default()
    };
    dtw_family(a, b, w, AlgorithmId::Dtw, &opts)
}

pub fn fastdtw_align(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    w: &WeightMatrix,
    radius: usize,
) -> Result<AlignmentOutcome> {
    let opts = InterpOptions {
        rotational_weight: w.rotational(),
        ..InterpOptions::default()
    };
    dtw_family(a, b, w, AlgorithmId::FastDtw { radius }, &opts)
}

/// Runs `algorithm` on the pair; the DTW family uses `config.weight`.
pub fn align_pair(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    algorithm: AlgorithmId,
    config: &UstConfig,
) -> Result<AlignmentOutcome> {
    match algorithm {
        AlgorithmId::Gora => pairwise_align_gora(a, b, config),
        _ => dtw_family(a, b, &config.weight, algorithm, &config.interp_options()),
    }
}
