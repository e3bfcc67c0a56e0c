//! Benchmark sweeps: warped-pair generation, timed alignment by every
//! configured algorithm, and per-cell summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use gora_core::align::{align_pair, compute_g, AlgorithmId, UstConfig};
use gora_core::interp::{differentiate_skeleton, InterpOptions};
use gora_core::liegroup::build_weight_matrix;
use gora_core::sequence::{
    apply_reparameterization, random_trg, resample, uniform_grid, SyntheticSkeleton,
};
use gora_core::{SkeletonSequence, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gsk::read_gsk;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic {
        joints: usize,
        smoothness: usize,
    },
    /// Every `.gsk` file in the directory is a candidate template.
    Directory {
        path: PathBuf,
        #[serde(default)]
        joints: Vec<String>,
    },
}

/// Mass and principal inertia behind the weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub mass: f64,
    pub inertia: [f64; 3],
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            mass: 1.0,
            inertia: [0.4; 3],
        }
    }
}

impl WeightParams {
    pub fn build(&self) -> gora_core::Result<WeightMatrix> {
        build_weight_matrix(self.mass, self.inertia)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub t_values: Vec<usize>,
    pub trials_per_t: usize,
    #[serde(with = "algorithm_names")]
    pub algorithms: Vec<AlgorithmId>,
    pub seed: u64,
    pub roughness: f64,
    pub data_source: DataSource,
    pub stencil_size: usize,
    pub weight: WeightParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            t_values: vec![20, 40, 60, 80, 100, 120, 150],
            trials_per_t: 50,
            algorithms: vec![
                AlgorithmId::Gora,
                AlgorithmId::Dtw,
                AlgorithmId::FastDtw { radius: 1 },
                AlgorithmId::FastDtw { radius: 5 },
                AlgorithmId::FastDtw { radius: 20 },
            ],
            seed: 0,
            roughness: 0.3,
            data_source: DataSource::Synthetic {
                joints: 11,
                smoothness: 3,
            },
            stencil_size: gora_core::interp::DEFAULT_STENCIL,
            weight: WeightParams::default(),
        }
    }
}

mod algorithm_name {
    use gora_core::align::AlgorithmId;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(id: &AlgorithmId, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(id)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AlgorithmId, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod algorithm_names {
    use gora_core::align::AlgorithmId;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ids: &[AlgorithmId], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ids.iter().map(|id| id.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<AlgorithmId>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.t_values.is_empty(), "no sequence lengths to sweep");
        ensure!(self.trials_per_t >= 1, "trials_per_t must be at least 1");
        ensure!(!self.algorithms.is_empty(), "no algorithms selected");
        ensure!(self.stencil_size >= 2, "stencil size must be at least 2");
        if let Some(t) = self.t_values.iter().find(|&&t| t < self.stencil_size) {
            bail!(
                "sequence length {t} is shorter than the {}-point stencil",
                self.stencil_size
            );
        }
        ensure!(
            (0.0..1.0).contains(&self.roughness),
            "roughness must lie in [0, 1)"
        );
        if let DataSource::Synthetic { joints, .. } = self.data_source {
            ensure!(joints >= 1, "synthetic skeletons need at least one joint");
        }
        self.weight.build()?;
        Ok(())
    }

    pub fn ust_config(&self) -> anyhow::Result<UstConfig> {
        Ok(UstConfig {
            stencil_size: self.stencil_size,
            weight: self.weight.build()?,
            ..UstConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: usize,
    pub trial: usize,
    #[serde(with = "algorithm_name")]
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub e0: f64,
    pub ef: f64,
    pub runtime_s: f64,
    pub inefficiency: Option<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_049b_b133_111e);
    z ^ (z >> 31)
}

/// Seed of one trial, independent of the order cells are visited in.
pub fn trial_seed(seed: u64, t: usize, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((t as u64) << 32) | trial as u64))
}

/// The two warped sequences handed to every algorithm in a trial.
#[derive(Debug, Clone)]
pub struct TrialPair {
    pub template: SkeletonSequence,
    pub first: SkeletonSequence,
    pub second: SkeletonSequence,
}

enum Templates {
    Synthetic { joints: usize, smoothness: usize },
    Pool(Vec<SkeletonSequence>),
}

impl Templates {
    fn load(source: &DataSource) -> anyhow::Result<Self> {
        match source {
            DataSource::Synthetic { joints, smoothness } => Ok(Templates::Synthetic {
                joints: *joints,
                smoothness: *smoothness,
            }),
            DataSource::Directory { path, joints } => {
                let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                    .with_context(|| format!("reading template directory {}", path.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "gsk"))
                    .collect();
                files.sort();
                let mut pool = Vec::with_capacity(files.len());
                for f in &files {
                    let seq = read_gsk(f).with_context(|| format!("loading {}", f.display()))?;
                    pool.push(if joints.is_empty() {
                        seq
                    } else {
                        seq.select_joints(joints)?
                    });
                }
                ensure!(!pool.is_empty(), "no .gsk templates in {}", path.display());
                Ok(Templates::Pool(pool))
            }
        }
    }

    fn pair(
        &self,
        seed: u64,
        t: usize,
        roughness: f64,
        opts: &InterpOptions,
    ) -> anyhow::Result<TrialPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = uniform_grid(t);
        let tau_a = random_trg(rng.random(), t, roughness)?;
        let tau_b = random_trg(rng.random(), t, roughness)?;
        match self {
            // Sampled straight from the continuous template, so the pair
            // carries no interpolation error.
            Templates::Synthetic { joints, smoothness } => {
                let gen = SyntheticSkeleton::random(rng.random(), *joints, *smoothness);
                Ok(TrialPair {
                    template: gen.sample(&grid)?,
                    first: gen.sample_warped(&grid, tau_a.values())?,
                    second: gen.sample_warped(&grid, tau_b.values())?,
                })
            }
            Templates::Pool(pool) => {
                let source = &pool[rng.random_range(0..pool.len())];
                let template = resample(source, &grid, opts)?;
                Ok(TrialPair {
                    first: apply_reparameterization(&template, &tau_a, opts)?,
                    second: apply_reparameterization(&template, &tau_b, opts)?,
                    template,
                })
            }
        }
    }
}

/// Builds the warped pair of one trial exactly as [`run_experiment`] does.
pub fn trial_pair(config: &ExperimentConfig, t: usize, trial: usize) -> anyhow::Result<TrialPair> {
    let templates = Templates::load(&config.data_source)?;
    let opts = config.ust_config()?.interp_options();
    templates.pair(
        trial_seed(config.seed, t, trial),
        t,
        config.roughness,
        &opts,
    )
}

fn is_static(seq: &SkeletonSequence, cfg: &UstConfig) -> anyhow::Result<bool> {
    let g = compute_g(seq, &differentiate_skeleton(seq, 2)?, &cfg.weight)?;
    Ok(!(g.values().iter().copied().fold(0.0, f64::max) >= cfg.static_floor))
}

/// Runs the sweep. Records come out ordered by `T`, trial, then the
/// configured algorithm order; all alignment happens on the calling thread.
///
/// Execution is interleaved (every `T` for trial 0, then trial 1, ...) so
/// slow drift in machine load is spread across all lengths instead of
/// biasing the run-time trend.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<Vec<TrialRecord>> {
    config.validate()?;
    let templates = Templates::load(&config.data_source)?;
    let ust = config.ust_config()?;
    let opts = ust.interp_options();
    let mut records =
        Vec::with_capacity(config.t_values.len() * config.trials_per_t * config.algorithms.len());
    for trial in 0..config.trials_per_t {
        for &t in &config.t_values {
            let seed = trial_seed(config.seed, t, trial);
            let pair = templates.pair(seed, t, config.roughness, &opts)?;
            if is_static(&pair.template, &ust)? {
                log::warn!("T = {t}, trial {trial}: static template skipped");
                continue;
            }
            for &algorithm in &config.algorithms {
                let out = align_pair(&pair.first, &pair.second, algorithm, &ust)
                    .with_context(|| format!("T = {t}, trial {trial}, {algorithm}"))?;
                records.push(TrialRecord {
                    t,
                    trial,
                    algorithm,
                    seed,
                    e0: out.initial_error,
                    ef: out.final_error,
                    runtime_s: out.run_time,
                    inefficiency: out.inefficiency,
                });
            }
        }
        log::info!("trial {trial} done");
    }
    let position = |t: usize| config.t_values.iter().position(|&v| v == t);
    records.sort_by_key(|r| (position(r.t), r.trial));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub t: usize,
    #[serde(with = "algorithm_name")]
    pub algorithm: AlgorithmId,
    pub trials: usize,
    pub mean_runtime_s: f64,
    pub mean_e0: f64,
    pub mean_ef: f64,
    /// Mean of per-trial `E_f / E₀` over trials with `E₀ > 0`.
    pub mean_error_ratio: Option<f64>,
    pub mean_inefficiency: Option<f64>,
}

/// Least-squares fits over the `T` sweep; `None` with fewer than three
/// distinct `T` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmFit {
    #[serde(with = "algorithm_name")]
    pub algorithm: AlgorithmId,
    /// Slope of `log(mean T_R)` against `log T`.
    pub runtime_loglog_slope: Option<f64>,
    /// Slope of mean `ℐ` against `T`.
    pub inefficiency_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    pub fits: Vec<AlgorithmFit>,
}

impl Summary {
    pub fn algorithms(&self) -> Vec<AlgorithmId> {
        self.cells
            .iter()
            .map(|c| c.algorithm)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn cell(&self, t: usize, algorithm: AlgorithmId) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.t == t && c.algorithm == algorithm)
    }

    pub fn fit(&self, algorithm: AlgorithmId) -> Option<&AlgorithmFit> {
        self.fits.iter().find(|f| f.algorithm == algorithm)
    }

    /// `(T, value)` points of one algorithm, ordered by `T`.
    pub fn series(
        &self,
        algorithm: AlgorithmId,
        value: impl Fn(&CellSummary) -> Option<f64>,
    ) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .filter_map(|c| value(c).map(|v| (c.t as f64, v)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

/// Ordinary least-squares slope; `None` with fewer than three distinct `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let distinct = points
        .iter()
        .map(|p| p.0.to_bits())
        .collect::<BTreeSet<_>>()
        .len();
    if distinct < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn summarize(records: &[TrialRecord]) -> Summary {
    let mut groups: BTreeMap<(AlgorithmId, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.algorithm, r.t)).or_default().push(r);
    }
    let cells: Vec<CellSummary> = groups
        .iter()
        .map(|(&(algorithm, t), rs)| CellSummary {
            t,
            algorithm,
            trials: rs.len(),
            mean_runtime_s: mean(rs.iter().map(|r| r.runtime_s)).unwrap_or(f64::NAN),
            mean_e0: mean(rs.iter().map(|r| r.e0)).unwrap_or(f64::NAN),
            mean_ef: mean(rs.iter().map(|r| r.ef)).unwrap_or(f64::NAN),
            mean_error_ratio: mean(rs.iter().filter(|r| r.e0 > 0.0).map(|r| r.ef / r.e0)),
            mean_inefficiency: mean(rs.iter().filter_map(|r| r.inefficiency)),
        })
        .collect();
    let mut summary = Summary {
        cells,
        fits: Vec::new(),
    };
    summary.fits = summary
        .algorithms()
        .into_iter()
        .map(|algorithm| {
            let runtime: Vec<(f64, f64)> = summary
                .series(algorithm, |c| Some(c.mean_runtime_s))
                .into_iter()
                .filter(|p| p.1 > 0.0)
                .map(|(t, r)| (t.ln(), r.ln()))
                .collect();
            let ineff = summary.series(algorithm, |c| c.mean_inefficiency);
            AlgorithmFit {
                algorithm,
                runtime_loglog_slope: least_squares_slope(&runtime),
                inefficiency_slope: least_squares_slope(&ineff),
            }
        })
        .collect();
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(t: usize, algorithm: AlgorithmId, runtime: f64) -> TrialRecord {
        TrialRecord {
            t,
            trial: 0,
            algorithm,
            seed: 0,
            e0: 1.0,
            ef: 0.5,
            runtime_s: runtime,
            inefficiency: Some(0.5 * runtime),
        }
    }

    #[test]
    fn slopes_of_fake_runtimes() {
        let flat: Vec<_> = [20, 40, 80, 150]
            .iter()
            .map(|&t| fake(t, AlgorithmId::Gora, 0.01))
            .collect();
        let s = summarize(&flat);
        assert!(
            s.fit(AlgorithmId::Gora)
                .unwrap()
                .runtime_loglog_slope
                .unwrap()
                .abs()
                < 1e-9
        );

        let quad: Vec<_> = [20, 40, 80, 150]
            .iter()
            .map(|&t| fake(t, AlgorithmId::Dtw, (t * t) as f64))
            .collect();
        let s = summarize(&quad);
        assert!(
            (s.fit(AlgorithmId::Dtw)
                .unwrap()
                .runtime_loglog_slope
                .unwrap()
                - 2.0)
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn fit_needs_three_lengths() {
        let few: Vec<_> = [20, 40]
            .iter()
            .map(|&t| fake(t, AlgorithmId::Gora, 0.01))
            .collect();
        let s = summarize(&few);
        assert_eq!(s.fit(AlgorithmId::Gora).unwrap().runtime_loglog_slope, None);
        assert_eq!(s.cells.len(), 2);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"fastdtw:5\""));
        assert_eq!(
            serde_json::from_str::<ExperimentConfig>(&text).unwrap(),
            cfg
        );
        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"t_values": [30], "algorithms": ["gora"]}"#).unwrap();
        assert_eq!(partial.trials_per_t, 50);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"algorithms": ["nope"]}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig {
            t_values: vec![3],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.t_values = vec![];
        assert!(cfg.validate().is_err());
        cfg.t_values = vec![20];
        cfg.roughness = 1.5;
        assert!(cfg.validate().is_err());
        assert_eq!(
            WeightParams::default().build().unwrap(),
            WeightMatrix::unit_sphere()
        );
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: BTreeSet<u64> = (0..7)
            .flat_map(|t| (0..50).map(move |k| trial_seed(1, 20 * t, k)))
            .collect();
        assert_eq!(seeds.len(), 350);
    }
}
