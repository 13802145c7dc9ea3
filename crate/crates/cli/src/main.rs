mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fput_core::estimators::EstimatorConfig;
use fput_core::experiment::{self, ExperimentConfig};
use fput_core::modes;
use fput_core::source::RowSource;
use fput_core::store::TrajectoryFile;
use fput_core::tsne::{self, Metric, TsneConfig, MAX_POINTS};
use fput_core::{Error, Standardization, TrajectoryMatrix};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "fput", version, about = "FPUT β-chain trajectories and their intrinsic dimension")]
struct Cli {
    /// TOML run file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory per β and write trajectory files and manifests.
    Simulate(SimulateArgs),
    /// PCA spectrum, reconstruction curve and dimension estimates of a trajectory file.
    Analyze(AnalyzeArgs),
    /// Consolidate per-trajectory estimates into one beta,k,method table.
    SweepReport(SweepReportArgs),
    /// Exact t-SNE embedding of the first rows of a trajectory file.
    Tsne(TsneArgs),
    /// Harmonic mode energies over time.
    ModeEnergies(ModeEnergiesArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory (must exist).
    #[arg(long, env = "FPUT_OUTPUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<f64>,
    /// `start:stop:step` or a comma list.
    #[arg(long)]
    beta_grid: Option<String>,
    /// Excited normal mode.
    #[arg(long)]
    k: Option<u32>,
    /// Mode amplitude.
    #[arg(long = "A")]
    amplitude: Option<f64>,
    #[arg(long)]
    n_samples: Option<u64>,
    /// Number of moving oscillators.
    #[arg(long)]
    n: Option<usize>,
    /// Time step.
    #[arg(long)]
    h: Option<f64>,
    /// Steps between recorded samples.
    #[arg(long)]
    stride: Option<u32>,
    /// Trajectories integrated concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    /// Run PCA and the estimators after each trajectory.
    #[arg(long)]
    analyze: bool,
    /// Skip the trajectory file; analyses replay the integrator instead.
    #[arg(long)]
    no_store: bool,
    #[arg(long)]
    standardize: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// `correlation` or `center-only`.
    #[arg(long)]
    standardize: Option<String>,
    #[arg(long)]
    kaiser_threshold: Option<f64>,
    /// Kneedle sensitivity.
    #[arg(long)]
    sensitivity: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepReportArgs {
    /// Directory holding manifests and estimate tables.
    dir: PathBuf,
    /// Report path (default `<dir>/sweep_report.csv`).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TsneArgs {
    file: PathBuf,
    /// Embed only the first N rows.
    #[arg(long)]
    take: Option<usize>,
    /// `euclidean` or `cosine`.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ModeEnergiesArgs {
    file: PathBuf,
    /// Modes as a list (`1,3,5`) or a range (`1-5`).
    #[arg(long)]
    modes: String,
    /// Keep every stride-th row.
    #[arg(long, default_value_t = 1)]
    stride: u64,
    #[command(flatten)]
    out: OutArg,
}

type CliResult<T> = std::result::Result<T, String>;

fn core<T>(r: fput_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| e.to_string())
}

fn with_file<T>(path: &Path, r: fput_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::Io { .. } => e.to_string(),
        other => format!("{}: {other}", path.display()),
    })
}

fn output_dir(flag: Option<PathBuf>, file: Option<PathBuf>, default: &Path) -> CliResult<PathBuf> {
    let dir = flag.or(file).unwrap_or_else(|| default.to_path_buf());
    if !dir.is_dir() {
        return Err(format!("{}: output directory does not exist", dir.display()));
    }
    Ok(dir)
}

fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn file_stem(file: &Path) -> String {
    file.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trajectory")
        .to_string()
}

fn parse_standardization(s: Option<String>) -> CliResult<Standardization> {
    s.map_or(Ok(Standardization::Correlation), |s| core(s.parse()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn close(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn simulate(args: SimulateArgs, file: FileConfig) -> CliResult<()> {
    let defaults = ExperimentConfig::default();
    let betas = match (args.beta, args.beta_grid) {
        (Some(b), _) => vec![b],
        (None, Some(g)) => core(experiment::parse_beta_grid(&g))?,
        (None, None) => match (file.run.beta, file.run.beta_grid) {
            (Some(b), _) => vec![b],
            (None, Some(g)) => core(experiment::parse_beta_grid(&g))?,
            (None, None) => return Err("give --beta or --beta-grid".into()),
        },
    };
    let cfg = ExperimentConfig {
        n: args.n.or(file.model.n).unwrap_or(defaults.n),
        h: args.h.or(file.model.h).unwrap_or(defaults.h),
        stride: args.stride.or(file.model.stride).unwrap_or(defaults.stride),
        k: args.k.or(file.initial.k).unwrap_or(defaults.k),
        amplitude: args
            .amplitude
            .or(file.initial.amplitude)
            .unwrap_or(defaults.amplitude),
        n_samples: args
            .n_samples
            .or(file.run.n_samples)
            .unwrap_or(defaults.n_samples),
        betas,
        output: output_dir(args.out.out, file.run.output, Path::new("."))?,
        store: !args.no_store && file.run.store.unwrap_or(true),
        analyze: args.analyze || file.run.analyze.unwrap_or(false),
        standardization: parse_standardization(args.standardize.or(file.analysis.standardize))?,
        estimators: EstimatorConfig {
            kaiser_threshold: file
                .analysis
                .kaiser_threshold
                .unwrap_or(defaults.estimators.kaiser_threshold),
            sensitivity: file
                .analysis
                .sensitivity
                .unwrap_or(defaults.estimators.sensitivity),
        },
        jobs: args.jobs.or(file.run.jobs).unwrap_or(defaults.jobs).max(1),
    };
    let manifests = core(experiment::run_sweep(&cfg))?;
    let mut failed = 0;
    for m in &manifests {
        match &m.error {
            None => {
                print!(
                    "beta={} k={} E={} drift={:.3e}",
                    m.beta,
                    m.k,
                    m.initial_energy.unwrap_or(f64::NAN),
                    m.max_relative_drift.unwrap_or(f64::NAN)
                );
                if let Some(a) = &m.analysis {
                    for e in &a.estimates {
                        match e.m_star {
                            Some(v) => print!(" {}={v}", e.method),
                            None => print!(" {}=NA", e.method),
                        }
                    }
                }
                println!();
            }
            Some(e) => {
                failed += 1;
                eprintln!("beta={} k={} failed: {e}", m.beta, m.k);
            }
        }
    }
    if failed > 0 {
        return Err(format!("{failed} of {} trajectories failed", manifests.len()));
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs, file: FileConfig) -> CliResult<()> {
    let mode = parse_standardization(args.standardize.or(file.analysis.standardize))?;
    let defaults = EstimatorConfig::default();
    let est = EstimatorConfig {
        kaiser_threshold: args
            .kaiser_threshold
            .or(file.analysis.kaiser_threshold)
            .unwrap_or(defaults.kaiser_threshold),
        sensitivity: args
            .sensitivity
            .or(file.analysis.sensitivity)
            .unwrap_or(defaults.sensitivity),
    };
    let dir = output_dir(args.out.out, file.run.output, &parent_dir(&args.file))?;
    let source = with_file(&args.file, TrajectoryFile::open(&args.file))?;
    let summary = with_file(
        &args.file,
        experiment::analyze_source(&source, mode, &est, &dir, &file_stem(&args.file)),
    )?;
    println!(
        "standardization={} explained_top2={:.6}",
        summary.standardization, summary.explained_top2
    );
    for e in &summary.estimates {
        let m = e.m_star.map_or("NA".to_string(), |v| v.to_string());
        let raw = e.raw.map_or("NA".to_string(), |v| format!("{v:.6}"));
        println!("{} m*={m} raw={raw}", e.method);
    }
    Ok(())
}

fn sweep_report(args: SweepReportArgs) -> CliResult<()> {
    let report = core(experiment::collect_sweep(&args.dir))?;
    let out = args
        .report
        .unwrap_or_else(|| args.dir.join(experiment::REPORT_FILE));
    core(experiment::write_report(&args.dir, &report, &out))?;
    if report.rows.is_empty() {
        eprintln!("warning: no estimates found in {}", args.dir.display());
    }
    for m in &report.missing {
        eprintln!("warning: missing analysis {m}");
    }
    println!("{} rows -> {}", report.rows.len(), out.display());
    Ok(())
}

fn tsne_cmd(args: TsneArgs, file: FileConfig) -> CliResult<()> {
    let source = with_file(&args.file, TrajectoryFile::open(&args.file))?;
    let total = source.n_rows() as usize;
    let take = args.take.or(file.tsne.take).unwrap_or(total);
    if take > MAX_POINTS {
        return Err(format!(
            "{take} rows exceed the exact t-SNE limit of {MAX_POINTS}; pass --take N with N <= {MAX_POINTS}"
        ));
    }
    let take = take.min(total);
    let defaults = TsneConfig::default();
    let metric: Metric = match args.metric.or(file.tsne.metric) {
        Some(m) => core(m.parse())?,
        None => defaults.metric,
    };
    let config = TsneConfig {
        perplexity: args
            .perplexity
            .or(file.tsne.perplexity)
            .unwrap_or(defaults.perplexity),
        metric,
        iterations: args
            .iterations
            .or(file.tsne.iterations)
            .unwrap_or(defaults.iterations),
        seed: args.seed.or(file.tsne.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    let dir = output_dir(args.out.out, file.run.output, &parent_dir(&args.file))?;
    let x = with_file(&args.file, TrajectoryMatrix::collect_prefix(&source, take))?;
    let out = core(tsne::embed(&x, &config))?;
    if out.unconverged() > 0 {
        eprintln!(
            "warning: perplexity calibration missed the tolerance on {} rows",
            out.unconverged()
        );
    }

    let meta = source.header().meta();
    let mut prov = experiment::trajectory_provenance("tsne", &meta, source.n_rows());
    prov.push("take", take);
    prov.push("metric", config.metric);
    prov.push("perplexity", config.perplexity);
    prov.push("iterations", config.iterations);
    prov.push("exaggeration", config.exaggeration);
    prov.push("exaggeration_iterations", config.exaggeration_iterations);
    prov.push("learning_rate", config.learning_rate_for(take));
    prov.push("seed", config.seed);
    let times: Vec<f64> = (0..take as u64).map(|i| source.time_of(i)).collect();

    let stem = file_stem(&args.file);
    let path = dir.join(format!("{stem}.tsne.csv"));
    let mut w = create(&path)?;
    core(out.embedding.write_csv(&mut w, &times, &prov))?;
    close(w, &path)?;
    let kl_path = dir.join(format!("{stem}.kl.csv"));
    let mut w = create(&kl_path)?;
    core(out.embedding.write_kl_csv(&mut w, &prov.for_table("kl")))?;
    close(w, &kl_path)?;
    if let Some((it, kl)) = out.embedding.kl_trace.last() {
        println!("iter={it} kl={kl:.6} -> {}", path.display());
    }
    Ok(())
}

fn parse_modes(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || format!("invalid mode list {spec:?} (use 1,3,5 or 1-5)");
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-').or_else(|| part.split_once("..")) {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('.').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn mode_energies(args: ModeEnergiesArgs, file: FileConfig) -> CliResult<()> {
    let modes = parse_modes(&args.modes)?;
    let dir = output_dir(args.out.out, file.run.output, &parent_dir(&args.file))?;
    let source = with_file(&args.file, TrajectoryFile::open(&args.file))?;
    let table = with_file(
        &args.file,
        modes::mode_energy_series(&source, &modes, args.stride),
    )?;
    let meta = source.header().meta();
    let mut prov = experiment::trajectory_provenance("mode_energies", &meta, source.n_rows());
    prov.push("modes", args.modes.trim());
    prov.push("row_stride", args.stride);
    let path = dir.join(format!("{}.modes.csv", file_stem(&args.file)));
    let mut w = create(&path)?;
    core(table.write_csv(&mut w, &prov))?;
    close(w, &path)?;
    println!("{} rows -> {}", table.times.len(), path.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(a, file),
        Command::Analyze(a) => analyze(a, file),
        Command::SweepReport(a) => sweep_report(a),
        Command::Tsne(a) => tsne_cmd(a, file),
        Command::ModeEnergies(a) => mode_energies(a, file),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
