use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gora::gsk::{read_gsk, write_gsk, FormatError};
use gora::harness::{run_experiment, summarize, DataSource, ExperimentConfig};
use gora::report::{emit_csv, emit_plots, format_summary};
use gora_core::align::{align_pair, ust_reparameterize, AlgorithmId, UstConfig};
use gora_core::sequence::{normalize_skeleton, random_trg, uniform_grid, SyntheticSkeleton};
use gora_core::SkeletonSequence;

/// Universal-standard-timescale alignment of skeleton sequences.
#[derive(Parser)]
#[command(name = "gora", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Shared {
    /// Finite-difference stencil size for knot rates.
    #[arg(long, default_value_t = gora_core::interp::DEFAULT_STENCIL)]
    stencil: usize,
    /// Keep only these joints, comma separated, in this order.
    #[arg(long, value_delimiter = ',')]
    joints: Vec<String>,
    /// Normalize position, heading and scale from the first frame. Takes
    /// root,spine,hip_left,hip_right labels; defaults to the Kinect names.
    #[arg(long, value_delimiter = ',', num_args = 0..=1, require_equals = true, default_missing_value = "SpineBase,SpineMid,HipLeft,HipRight")]
    normalize: Option<Vec<String>>,
}

impl Shared {
    fn prepare(&self, seq: SkeletonSequence) -> anyhow::Result<SkeletonSequence> {
        let seq = match &self.normalize {
            Some(l) if l.len() == 4 => normalize_skeleton(&seq, &l[0], &l[1], &l[2], &l[3])?,
            Some(l) => anyhow::bail!(Usage(format!(
                "--normalize needs 4 joint labels, got {}",
                l.len()
            ))),
            None => seq,
        };
        Ok(if self.joints.is_empty() {
            seq
        } else {
            seq.select_joints(&self.joints)?
        })
    }

    fn ust_config(&self) -> UstConfig {
        UstConfig {
            stencil_size: self.stencil,
            ..UstConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep and write records.csv, summary.json and SVG charts.
    Bench(BenchArgs),
    /// Align two .gsk sequences and print E0, Ef, run time and inefficiency.
    Align {
        a: PathBuf,
        b: PathBuf,
        /// gora, dtw or fastdtw:RADIUS.
        #[arg(long, default_value = "gora")]
        algo: AlgorithmId,
        #[command(flatten)]
        shared: Shared,
    },
    /// Reparameterize a .gsk sequence to its standard timescale; τ* goes to
    /// a CSV next to the output.
    Ust {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Write a random smooth synthetic skeleton, optionally time-warped.
    Gen {
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long = "joint-count", default_value_t = 11)]
        joint_count: usize,
        #[arg(long, default_value_t = 3)]
        smoothness: usize,
        /// Warp the clock by a random reparameterization of this roughness.
        #[arg(long)]
        roughness: Option<f64>,
    },
    /// Convert an NTU RGB+D .skeleton file to .gsk.
    ///
    /// Reads the frame count, then per frame a body count and per body a
    /// 10-field info line, a joint count (25) and 25 lines of
    /// `x y z depthX depthY colorX colorY qw qx qy qz state`. Only the first
    /// body is kept, bodiless frames are skipped, and joints without an
    /// orientation are dropped.
    ImportNtu {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stencil: Option<usize>,
    #[arg(long)]
    roughness: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Sequence lengths, comma separated.
    #[arg(long = "lengths", value_delimiter = ',')]
    lengths: Vec<usize>,
    /// Algorithms, comma separated.
    #[arg(long = "algos", value_delimiter = ',')]
    algos: Vec<AlgorithmId>,
    /// Use the .gsk files in this directory as templates.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Joint pruning for directory templates.
    #[arg(long, value_delimiter = ',')]
    joints: Vec<String>,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.stencil_size = args.stencil.unwrap_or(cfg.stencil_size);
    cfg.roughness = args.roughness.unwrap_or(cfg.roughness);
    cfg.trials_per_t = args.trials.unwrap_or(cfg.trials_per_t);
    if !args.lengths.is_empty() {
        cfg.t_values = args.lengths;
    }
    if !args.algos.is_empty() {
        cfg.algorithms = args.algos;
    }
    match args.data_dir {
        Some(path) => {
            cfg.data_source = DataSource::Directory {
                path,
                joints: args.joints,
            }
        }
        None if !args.joints.is_empty() => {
            anyhow::bail!(Usage("--joints only applies with --data-dir".into()))
        }
        None => {}
    }
    cfg.validate().map_err(|e| Usage(e.to_string()))?;

    let records = run_experiment(&cfg)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    emit_csv(&records, &args.out_dir.join("records.csv"))?;
    let summary = summarize(&records);
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    std::fs::write(
        args.out_dir.join("config.json"),
        serde_json::to_string_pretty(&cfg)?,
    )?;
    emit_plots(&summary, &args.out_dir)?;
    print!("{}", format_summary(&summary));
    Ok(())
}

fn load(path: &Path, shared: &Shared) -> anyhow::Result<SkeletonSequence> {
    let seq = read_gsk(path).with_context(|| format!("loading {}", path.display()))?;
    shared.prepare(seq)
}

fn tau_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ust".into());
    output.with_file_name(format!("{stem}.tau.csv"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Bench(args) => bench(args),
        Command::Align { a, b, algo, shared } => {
            let (a, b) = (load(&a, &shared)?, load(&b, &shared)?);
            let out = align_pair(&a, &b, algo, &shared.ust_config())?;
            println!("algorithm\t{}", out.algorithm);
            println!("E0\t{}", out.initial_error);
            println!("Ef\t{}", out.final_error);
            println!("runtime_s\t{}", out.run_time);
            println!(
                "inefficiency\t{}",
                out.inefficiency
                    .map_or_else(|| "NA".into(), |v| v.to_string())
            );
            if out.resampled {
                println!("resampled\ttrue");
            }
            Ok(())
        }
        Command::Ust {
            input,
            output,
            shared,
        } => {
            let seq = load(&input, &shared)?;
            let r = ust_reparameterize(&seq, &shared.ust_config())?;
            write_gsk(&r.reparameterized, &output)?;
            let sidecar = tau_path(&output);
            let mut w = csv::Writer::from_path(&sidecar)
                .with_context(|| format!("creating {}", sidecar.display()))?;
            w.write_record(["t", "tau"])?;
            for (t, v) in r.tau_star.times().iter().zip(r.tau_star.values()) {
                w.write_record([t.to_string(), v.to_string()])?;
            }
            w.flush()?;
            println!("c\t{}", r.c);
            println!("tau\t{}", sidecar.display());
            Ok(())
        }
        Command::Gen {
            output,
            seed,
            frames,
            joint_count,
            smoothness,
            roughness,
        } => {
            if joint_count == 0 || frames < 2 {
                anyhow::bail!(Usage("need at least one joint and two frames".into()));
            }
            let gen = SyntheticSkeleton::random(seed, joint_count, smoothness);
            let grid = uniform_grid(frames);
            let seq = match roughness {
                Some(r) => {
                    gen.sample_warped(&grid, random_trg(seed.wrapping_add(1), frames, r)?.values())?
                }
                None => gen.sample(&grid)?,
            };
            write_gsk(&seq, &output)?;
            Ok(())
        }
        Command::ImportNtu {
            input,
            output,
            shared,
        } => {
            let seq = gora::ntu::read_ntu(&input)?;
            let seq = shared.prepare(seq)?;
            write_gsk(&seq, &output)?;
            log::info!("{} frames, {} joints", seq.len(), seq.joint_count());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        let core = cause.downcast_ref::<gora_core::Error>().or_else(|| {
            match cause.downcast_ref::<FormatError>() {
                Some(FormatError::Sequence(e)) => Some(e),
                _ => None,
            }
        });
        if let Some(e) = core {
            return if e.is_numerical_degeneracy() { 3 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
