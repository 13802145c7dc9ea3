//! β sweeps: simulate, store, analyze and report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{self, InitialCondition, IntegrationSummary, ModelParams};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorConfig, Method, SweepRow};
use crate::par;
use crate::pca::{self, PcaResult, Standardization};
use crate::report::{fmt_g17, Provenance, GENERATOR};
use crate::source::{RowSource, SimulatedTrajectory, TrajectoryMeta};
use crate::store::{TrajectoryFile, TrajectoryHeader, TrajectoryWriter};

pub const REPORT_FILE: &str = "sweep_report.csv";

/// Rounds to ten decimals so grid points print as typed (`0.3`, not
/// `0.30000000000000004`).
pub fn clean_decimal(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_beta_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::domain(format!("beta grid {spec:?}: {what}"));
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("{:?} is not a number", s.trim())))
    };
    let betas = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !step.is_finite() {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| clean_decimal(start + i as f64 * step))
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if betas.is_empty() {
        return Err(bad("empty"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
        return Err(bad(&format!("beta {b} is not positive")));
    }
    Ok(betas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub h: f64,
    pub stride: u32,
    pub k: u32,
    pub amplitude: f64,
    pub n_samples: u64,
    pub betas: Vec<f64>,
    pub output: PathBuf,
    /// Keep the binary trajectory; without it analyses replay the integrator.
    pub store: bool,
    pub analyze: bool,
    pub standardization: Standardization,
    pub estimators: EstimatorConfig,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 32,
            h: 0.05,
            stride: 1,
            k: 1,
            amplitude: 10.0,
            n_samples: 4_000_000,
            betas: vec![0.1],
            output: PathBuf::from("."),
            store: true,
            analyze: false,
            standardization: Standardization::Correlation,
            estimators: EstimatorConfig::default(),
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn meta(&self, beta: f64) -> TrajectoryMeta {
        TrajectoryMeta::new(
            ModelParams::new(self.n, beta, self.h).with_stride(self.stride),
            InitialCondition::new(self.k, self.amplitude),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::domain("beta grid is empty"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::domain(format!("beta {b} is not positive")));
        }
        if self.n_samples < 2 {
            return Err(Error::domain("n_samples must be at least 2"));
        }
        if self.stride == 0 {
            return Err(Error::domain("stride must be at least 1"));
        }
        for &b in &self.betas {
            let meta = self.meta(b);
            meta.params.validate()?;
            chain::build_initial_condition(&meta.ic, &meta.params)?;
        }
        Ok(())
    }
}

/// File stem shared by a trajectory and everything derived from it.
pub fn trajectory_stem(k: u32, beta: f64) -> String {
    format!("fput_k{k}_beta{beta}")
}

/// Provenance entries describing a trajectory.
pub fn trajectory_provenance(table: &str, meta: &TrajectoryMeta, n_samples: u64) -> Provenance {
    let p = &meta.params;
    Provenance::new(table)
        .with("n", p.n)
        .with("beta", p.beta)
        .with("alpha", p.alpha)
        .with("h", p.h)
        .with("stride", p.stride)
        .with("k", meta.ic.k)
        .with("A", meta.ic.amplitude)
        .with("n_samples", n_samples)
}

pub fn write_spectrum_csv<W: Write>(
    out: &mut W,
    result: &PcaResult,
    provenance: &Provenance,
) -> Result<()> {
    provenance.write_header(out)?;
    writeln!(out, "component,lambda,explained_cum")?;
    let spectrum = result.spectrum();
    for (i, (l, c)) in spectrum
        .lambda
        .iter()
        .zip(spectrum.explained_cumulative())
        .enumerate()
    {
        writeln!(out, "{},{},{}", i + 1, fmt_g17(*l), fmt_g17(c))?;
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(
    out: &mut W,
    result: &PcaResult,
    provenance: &Provenance,
) -> Result<()> {
    provenance.write_header(out)?;
    writeln!(out, "m,J_m_percent")?;
    for (m, v) in result.curve.to_percent().values.iter().enumerate() {
        writeln!(out, "{m},{}", fmt_g17(*v))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: String,
    pub m_star: Option<usize>,
    pub raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub standardization: String,
    pub explained_top2: f64,
    pub estimates: Vec<EstimateRecord>,
    pub spectrum_csv: String,
    pub curve_csv: String,
    pub estimates_csv: String,
}

fn analysis_stem(stem: &str, mode: Standardization) -> String {
    match mode {
        Standardization::Correlation => stem.to_string(),
        other => format!("{stem}.{other}"),
    }
}

/// PCA and estimators on one trajectory; writes the spectrum, curve and
/// estimate CSVs into `dir`.
pub fn analyze_source<S: RowSource + ?Sized>(
    source: &S,
    mode: Standardization,
    estimator_config: &EstimatorConfig,
    dir: &Path,
    stem: &str,
) -> Result<AnalysisSummary> {
    let meta = source
        .meta()
        .ok_or_else(|| Error::domain("trajectory has no model parameters"))?;
    let result = pca::analyze(source, mode)?;
    let report = estimators::estimate_all(result.spectrum(), &result.curve, estimator_config);
    let rows = SweepRow::from_report(meta.params.beta, meta.ic.k, &report);

    let mut prov = trajectory_provenance("spectrum", &meta, source.n_rows());
    prov.push("standardization", mode);
    prov.push("kaiser_threshold", estimator_config.kaiser_threshold);
    prov.push("sensitivity", estimator_config.sensitivity);

    let base = analysis_stem(stem, mode);
    let names = [
        format!("{base}.spectrum.csv"),
        format!("{base}.curve.csv"),
        format!("{base}.estimates.csv"),
    ];
    let path = dir.join(&names[0]);
    let mut out = create(&path)?;
    write_spectrum_csv(&mut out, &result, &prov)?;
    finish(out, &path)?;
    let path = dir.join(&names[1]);
    let mut out = create(&path)?;
    write_curve_csv(&mut out, &result, &prov.for_table("curve"))?;
    finish(out, &path)?;
    let path = dir.join(&names[2]);
    let mut out = create(&path)?;
    estimators::write_sweep_csv(&mut out, &rows, &prov.for_table("estimates"))?;
    finish(out, &path)?;

    let [spectrum_csv, curve_csv, estimates_csv] = names;
    Ok(AnalysisSummary {
        standardization: mode.to_string(),
        explained_top2: pca::explained_variance(result.spectrum(), 2.min(result.spectrum().n()))?,
        estimates: rows
            .iter()
            .map(|r| EstimateRecord {
                method: r.method.to_string(),
                m_star: r.m_star,
                raw: r.raw,
            })
            .collect(),
        spectrum_csv,
        curve_csv,
        estimates_csv,
    })
}

/// Per-β record written next to the trajectory as `<stem>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub generator: String,
    pub config_hash: String,
    pub beta: f64,
    pub k: u32,
    pub amplitude: f64,
    pub n: usize,
    pub h: f64,
    pub stride: u32,
    pub n_samples: u64,
    pub n_steps: u64,
    pub status: String,
    pub error: Option<String>,
    pub initial_energy: Option<f64>,
    pub energy_density: Option<f64>,
    pub final_energy: Option<f64>,
    pub max_relative_drift: Option<f64>,
    pub trajectory_file: Option<String>,
    pub checksum: Option<String>,
    pub analysis: Option<AnalysisSummary>,
}

impl RunManifest {
    fn new(cfg: &ExperimentConfig, meta: &TrajectoryMeta) -> Self {
        RunManifest {
            generator: GENERATOR.to_string(),
            config_hash: format!(
                "{:016x}",
                trajectory_provenance("manifest", meta, cfg.n_samples).config_hash()
            ),
            beta: meta.params.beta,
            k: meta.ic.k,
            amplitude: meta.ic.amplitude,
            n: meta.params.n,
            h: meta.params.h,
            stride: meta.params.stride,
            n_samples: cfg.n_samples,
            n_steps: cfg.n_samples * meta.params.stride as u64,
            status: "ok".into(),
            error: None,
            initial_energy: None,
            energy_density: None,
            final_energy: None,
            max_relative_drift: None,
            trajectory_file: None,
            checksum: None,
            analysis: None,
        }
    }

    fn record(&mut self, summary: &IntegrationSummary) {
        self.initial_energy = Some(summary.initial_energy);
        self.energy_density = Some(summary.initial_energy / self.n as f64);
        self.final_energy = Some(summary.final_energy);
        self.max_relative_drift = Some(summary.max_relative_drift);
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("manifest: {e}")))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

fn run_beta(cfg: &ExperimentConfig, beta: f64, manifest: &mut RunManifest) -> Result<()> {
    let meta = cfg.meta(beta);
    let stem = trajectory_stem(cfg.k, beta);
    let n_steps = cfg.n_samples * cfg.stride as u64;
    if cfg.store {
        let name = format!("{stem}.bin");
        let path = cfg.output.join(&name);
        let mut writer = TrajectoryWriter::create(&path, TrajectoryHeader::new(&meta, cfg.n_samples))?;
        let summary = chain::integrate(&meta.ic, &meta.params, n_steps, &mut writer)?;
        let file = writer.finalize()?;
        manifest.record(&summary);
        manifest.trajectory_file = Some(name);
        manifest.checksum = Some(format!("{:016x}", file.checksum));
        if cfg.analyze {
            let source = TrajectoryFile::open(&path)?;
            manifest.analysis = Some(analyze_source(
                &source,
                cfg.standardization,
                &cfg.estimators,
                &cfg.output,
                &stem,
            )?);
        }
    } else if cfg.analyze {
        let source = SimulatedTrajectory::new(meta.params, meta.ic, cfg.n_samples)?;
        let analysis = analyze_source(&source, cfg.standardization, &cfg.estimators, &cfg.output, &stem)?;
        if let Some(summary) = source.last_summary() {
            manifest.record(&summary);
        }
        manifest.analysis = Some(analysis);
    } else {
        let mut discard = |_t: f64, _row: &[f64]| -> Result<()> { Ok(()) };
        let summary = chain::integrate(&meta.ic, &meta.params, n_steps, &mut discard)?;
        manifest.record(&summary);
    }
    Ok(())
}

/// Runs every β of the grid, at most `cfg.jobs` at a time. A failing β is
/// recorded in its manifest and does not stop the others.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunManifest>> {
    cfg.validate()?;
    if !cfg.output.is_dir() {
        return Err(Error::io(
            &cfg.output,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let manifests = par::with_threads(cfg.jobs, || {
        par::map_items(&cfg.betas, |&beta| {
            let meta = cfg.meta(beta);
            let mut manifest = RunManifest::new(cfg, &meta);
            if let Err(e) = run_beta(cfg, beta, &mut manifest) {
                manifest.status = "error".into();
                manifest.error = Some(e.to_string());
            }
            manifest
        })
    });
    for m in &manifests {
        let path = cfg
            .output
            .join(format!("{}.json", trajectory_stem(m.k, m.beta)));
        m.write(&path)?;
    }
    Ok(manifests)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Manifests without a usable analysis, with the reason.
    pub missing: Vec<String>,
}

fn method_rank(m: Method) -> usize {
    match m {
        Method::PR => 0,
        Method::KC => 1,
        Method::KA => 2,
    }
}

/// Collects every correlation-matrix estimate table in `dir` into one
/// table sorted by k, β and method.
pub fn collect_sweep(dir: &Path) -> Result<SweepReport> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(name) = entry.file_name().to_str() {
            names.push(name.to_string());
        }
    }
    names.sort();
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for name in &names {
        if let Some(stem) = name.strip_suffix(".estimates.csv") {
            if stem.ends_with(&format!(".{}", Standardization::CenterOnly)) {
                continue;
            }
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            match estimators::parse_sweep_csv(&text) {
                Ok(r) => rows.extend(r),
                Err(e) => missing.push(format!("{name}: {e}")),
            }
        } else if let Some(stem) = name.strip_suffix(".json") {
            let manifest = match RunManifest::read(&dir.join(name)) {
                Ok(m) => m,
                Err(_) => continue,
            };
            if !manifest.is_ok() {
                missing.push(format!(
                    "{stem}: {}",
                    manifest.error.as_deref().unwrap_or("run failed")
                ));
            } else if !names.contains(&format!("{stem}.estimates.csv")) {
                missing.push(format!("{stem}: not analyzed"));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.k.cmp(&b.k)
            .then(a.beta.total_cmp(&b.beta))
            .then(method_rank(a.method).cmp(&method_rank(b.method)))
    });
    Ok(SweepReport { rows, missing })
}

pub fn write_report(dir: &Path, report: &SweepReport, out: &Path) -> Result<()> {
    let prov = Provenance::new("sweep")
        .with("source_dir", dir.display())
        .with("rows", report.rows.len())
        .with("missing", report.missing.len());
    let mut w = create(out)?;
    estimators::write_sweep_csv(&mut w, &report.rows, &prov)?;
    finish(w, out)
}
