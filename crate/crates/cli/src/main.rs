use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cartoswarm_core::comms::CodecKind;
use cartoswarm_core::grid::write_pgm;
use cartoswarm_core::mapgen::{generate_map, MapGenConfig};
use cartoswarm_core::policy::Policy;
use cartoswarm_core::sim::{
    noise_sweep, run_episode_observed, sweep, write_csv, write_metadata, MessageLog, NoisePlan, ObserverSet, Profile,
    RunMetadata, SimConfig, SnapshotWriter, SweepPlan, SweepRow, TransitionRecorder,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cartoswarm", version, about = "Multi-agent exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one ground-truth map as a PGM plus a JSON sidecar.
    Genmap(GenmapArgs),
    /// Run a single episode.
    Run(RunArgs),
    /// Team size × difficulty sweep.
    Sweep(SweepArgs),
    /// Trust × channel-noise sweep.
    NoiseSweep(NoiseSweepArgs),
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[arg(long, default_value_t = 0.1)]
    difficulty: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clearing radius in pixels; defaults to 60 px scaled to the map size.
    #[arg(long)]
    crop_radius: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; omitted keys take the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base profile when no config file is given.
    #[arg(long, default_value = "full")]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Write a snapshot every this many steps (0 writes only the final one).
    #[arg(long, default_value_t = 0)]
    snapshot_interval: u64,
    /// Log every received message to messages.bin.
    #[arg(long)]
    log_messages: bool,
    /// Log navigation transitions to transitions.bin.
    #[arg(long)]
    record_transitions: bool,
}

#[derive(Args)]
struct Common {
    /// TOML configuration used as the template.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "full")]
    profile: Profile,
    /// Number of seeds per parameter cell.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Worker threads for independent episodes.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Output directory for the CSV and metadata.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,15,20")]
    agents: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    difficulties: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.001,0.002,0.003,0.004")]
    sigmas: Vec<f64>,
    /// Codec override, `identity` or `downsample:<factor>`.
    #[arg(long)]
    codec: Option<CodecKind>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    difficulty: Option<f64>,
    #[command(flatten)]
    common: Common,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load_config(path: Option<&PathBuf>, profile: Profile) -> Result<SimConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(SimConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => Ok(SimConfig::profile(profile)),
    }
}

fn baseline(c: &SimConfig) -> Box<dyn Policy> {
    Box::new(c.baseline_policy())
}

fn genmap(args: GenmapArgs) -> Result<()> {
    let mut config = MapGenConfig::new(args.size, args.difficulty, args.seed);
    if let Some(c) = args.crop_radius {
        config.crop_radius = c;
    }
    let map = generate_map(&config)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_pgm(&map.grid, BufWriter::new(File::create(&args.out)?))?;
    let sidecar = serde_json::json!({
        "size": config.size,
        "difficulty": config.difficulty,
        "seed": config.seed,
        "crop_radius": config.crop_radius,
        "density": map.grid.density(),
        "octaves": {
            "large_base": map.octaves.large_base,
            "large_mask": map.octaves.large_mask,
            "small_base": map.octaves.small_base,
            "small_mask": map.octaves.small_mask,
            "selector": map.octaves.selector,
        },
        "rng_algorithm": cartoswarm_core::rng::RNG_ALGORITHM,
        "noise_algorithm": cartoswarm_core::mapgen::NOISE_ALGORITHM,
    });
    let path = args.out.with_extension("json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &sidecar)?;
    println!("wrote {} (density {:.4})", args.out.display(), map.grid.density());
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = load_config(args.config.as_ref(), args.profile)?;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    fs::create_dir_all(&args.out)?;

    let mut policy = config.baseline_policy();
    let meta = RunMetadata::new(&config, policy.name(), vec![config.seed]);
    write_metadata(&meta, BufWriter::new(File::create(args.out.join("metadata.json"))?))?;
    fs::write(args.out.join("config.toml"), config.to_toml()?)?;

    let mut observers = ObserverSet::new();
    let interval = if args.snapshot_interval == 0 {
        u64::MAX
    } else {
        args.snapshot_interval
    };
    observers.push(SnapshotWriter::new(args.out.clone(), interval));
    if args.log_messages {
        observers.push(MessageLog::new(BufWriter::new(File::create(
            args.out.join("messages.bin"),
        )?)));
    }
    if args.record_transitions {
        observers.push(TransitionRecorder::new(BufWriter::new(File::create(
            args.out.join("transitions.bin"),
        )?)));
    }

    let metrics = run_episode_observed(&config, &mut policy, &mut observers)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(args.out.join("metrics.json"))?), &metrics)?;
    let mut rows = vec![SweepRow::episode(&config, &metrics)];
    rows.extend(cartoswarm_core::sim::aggregate(&rows));
    write_csv(&rows, BufWriter::new(File::create(args.out.join("metrics.csv"))?))?;

    println!(
        "{:?} after {} steps ({:.2} s), coverage {:.3}, accuracy {}, cumulative distance {:.1} px",
        metrics.cause,
        metrics.steps,
        metrics.completion_time,
        metrics.final_coverage,
        metrics.final_accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}")),
        metrics.cumulative_distance
    );
    Ok(())
}

fn seeds(common: &Common) -> Vec<u64> {
    (common.seed_base..common.seed_base + common.seeds).collect()
}

fn finish(common: &Common, template: &SimConfig, rows: &[SweepRow], name: &str) -> Result<()> {
    fs::create_dir_all(&common.out)?;
    let csv_path = common.out.join(format!("{name}.csv"));
    write_csv(rows, BufWriter::new(File::create(&csv_path)?))?;
    let meta = RunMetadata::new(template, "frontier-reactive", seeds(common));
    write_metadata(&meta, BufWriter::new(File::create(common.out.join("metadata.json"))?))?;
    for r in rows.iter().filter(|r| r.kind == "aggregate") {
        println!(
            "N={:<3} d={:.2} beta={:.2} sigma={:.4}  time {:8.2} s  distance {:10.1} px  accuracy {}  timeouts {}",
            r.agents,
            r.difficulty,
            r.beta,
            r.sigma,
            r.time_s,
            r.cumulative_distance,
            r.accuracy
                .map_or("n/a".into(), |a| format!("{a:.4}±{:.4}", r.accuracy_se.unwrap_or(0.0))),
            r.timeouts
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let template = load_config(args.common.config.as_ref(), args.common.profile)?;
    if args.agents.is_empty() || args.difficulties.is_empty() {
        bail!("--agents and --difficulties need at least one value");
    }
    let plan = SweepPlan {
        agents: args.agents,
        difficulties: args.difficulties,
        seeds: seeds(&args.common),
    };
    let rows = sweep(&template, &plan, args.common.workers, &baseline)?;
    finish(&args.common, &template, &rows, "sweep")
}

fn run_noise_sweep(args: NoiseSweepArgs) -> Result<()> {
    let mut template = load_config(args.common.config.as_ref(), args.common.profile)?;
    if let Some(c) = args.codec {
        template.codec = c;
    }
    if let Some(n) = args.agents {
        template.agents = n;
    }
    if let Some(d) = args.difficulty {
        template.difficulty = d;
    }
    template.validate()?;
    let plan = NoisePlan {
        betas: args.betas,
        sigmas: args.sigmas,
        seeds: seeds(&args.common),
    };
    let rows = noise_sweep(&template, &plan, args.common.workers, &baseline)?;
    finish(&args.common, &template, &rows, "noise_sweep")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Genmap(a) => genmap(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::NoiseSweep(a) => run_noise_sweep(a),
    }
}
