use gora_core::align::{compute_g, ust_reparameterize, UstConfig};
use gora_core::interp::{differentiate_skeleton, interpolate_skeleton, InterpOptions};
use gora_core::liegroup::WeightMatrix;
use gora_core::sequence::{
    apply_reparameterization, compose_trg, invert_trg, random_trg, uniform_grid, SyntheticSkeleton,
};
use gora_core::Reparameterization;
use proptest::prelude::*;

fn j() -> nalgebra::Matrix3<f64> {
    WeightMatrix::unit_sphere().rotational()
}

#[test]
fn interpolant_rate_matches_knot_derivative() {
    let gen = SyntheticSkeleton::random(14, 3, 3);
    let seq = gen.sample(&uniform_grid(150)).unwrap();
    let d = differentiate_skeleton(&seq, 5).unwrap();
    let delta = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 1..149 {
        let t = seq.times()[i];
        let around = interpolate_skeleton(&seq, &d, &[t - delta, t + delta], &j()).unwrap();
        for jn in 0..3 {
            let fd = (around[3 + jn].matrix() - around[jn].matrix()) / (2.0 * delta);
            worst = worst.max((fd - d.rate(i, jn)).amax());
        }
    }
    assert!(worst < 1e-4, "worst {worst}");
}

fn held_out_translation_error(gen: &SyntheticSkeleton, t: usize) -> f64 {
    let grid = uniform_grid(t);
    let seq = gen.sample(&grid).unwrap();
    let d = differentiate_skeleton(&seq, 5).unwrap();
    let mids: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let out = interpolate_skeleton(&seq, &d, &mids, &j()).unwrap();
    let n = gen.joint_count();
    let mut worst: f64 = 0.0;
    for (k, &s) in mids.iter().enumerate() {
        for jn in 0..n {
            worst =
                worst.max((out[k * n + jn].translation() - gen.pose(jn, s).translation()).norm());
        }
    }
    worst
}

#[test]
fn refinement_converges_at_cubic_order() {
    for seed in 0..5 {
        let gen = SyntheticSkeleton::random(seed, 3, 3);
        let coarse = held_out_translation_error(&gen, 40);
        let fine = held_out_translation_error(&gen, 79);
        assert!(coarse >= 4.0 * fine, "seed {seed}: {coarse} vs {fine}");
    }
}

#[test]
fn every_interpolated_pose_is_valid() {
    let gen = SyntheticSkeleton::random(2, 4, 4);
    let seq = gen.sample(&uniform_grid(30)).unwrap();
    let d = differentiate_skeleton(&seq, 5).unwrap();
    let q: Vec<f64> = (0..=997).map(|k| k as f64 / 997.0).collect();
    for p in interpolate_skeleton(&seq, &d, &q, &j()).unwrap() {
        assert!(gora_core::Pose::new(*p.matrix()).is_ok());
    }
}

#[test]
fn reparameterization_preserves_shape() {
    let seq = SyntheticSkeleton::random(5, 4, 3)
        .sample(&uniform_grid(50))
        .unwrap();
    let tau = random_trg(3, 50, 0.4).unwrap();
    let out = apply_reparameterization(&seq, &tau, &InterpOptions::default()).unwrap();
    assert_eq!(out.len(), seq.len());
    assert_eq!(out.joint_count(), seq.joint_count());
    assert_eq!(out.joint_labels(), seq.joint_labels());
    assert_eq!(out.times(), seq.times());
}

#[test]
fn compose_with_identity_and_inverse() {
    let tau = random_trg(11, 90, 0.5).unwrap();
    let id = Reparameterization::identity(uniform_grid(90)).unwrap();
    let (c, _) = compose_trg(&tau, &id).unwrap();
    for (a, b) in c.values().iter().zip(tau.values()) {
        assert!((a - b).abs() <= 1e-12);
    }
    let (inv, _) = invert_trg(&tau).unwrap();
    let (round, _) = compose_trg(&tau, &inv).unwrap();
    for (v, t) in round.values().iter().zip(round.times()) {
        assert!((v - t).abs() <= 2.0 / 89.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ust_is_monotone(seed in any::<u64>(), t in 5usize..120) {
        let seq = SyntheticSkeleton::random(seed, 2, 3).sample(&uniform_grid(t)).unwrap();
        let r = ust_reparameterize(&seq, &UstConfig::default()).unwrap();
        let v = r.tau_star.values();
        prop_assert_eq!(v[0], 0.0);
        prop_assert_eq!(v[t - 1], 1.0);
        prop_assert!(r.tau_star.min_increment() > 0.0);
        prop_assert!(r.c > 0.0);
        let g = compute_g(&seq, &differentiate_skeleton(&seq, 2).unwrap(), &WeightMatrix::unit_sphere()).unwrap();
        prop_assert_eq!(g.values(), r.g_profile.values());
    }
}
