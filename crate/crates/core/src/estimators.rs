//! Intrinsic-dimension estimators on a PCA spectrum.
//!
//! * participation ratio `(Σλ)² / Σλ²`
//! * Kaiser–Jolliffe count of eigenvalues at or above a threshold (0.7)
//! * Kneedle elbow of the reconstruction-error curve

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pca::{EigenSpectrum, ReconstructionCurve, SymMatrix};
use crate::report::{fmt_g17, Provenance};

pub const JOLLIFFE_THRESHOLD: f64 = 0.7;
pub const DEFAULT_SENSITIVITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Participation ratio.
    PR,
    /// Kaiser criterion with Jolliffe's threshold.
    KC,
    /// Kneedle algorithm.
    KA,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PR => "PR",
            Method::KC => "KC",
            Method::KA => "KA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PR" => Ok(Method::PR),
            "KC" => Ok(Method::KC),
            "KA" => Ok(Method::KA),
            other => Err(Error::domain(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub method: Method,
    pub m_star: usize,
    /// D_PR for PR, the smallest retained eigenvalue for KC, the knee
    /// abscissa for KA.
    pub raw: f64,
    /// Threshold (KC), sensitivity (KA), unused for PR.
    pub param: Option<f64>,
}

/// `(Σλ)² / Σλ²`, reported as `round_half_up(D_PR)`.
pub fn participation_ratio(spectrum: &EigenSpectrum) -> Result<IdEstimate> {
    let n = spectrum.n();
    if !spectrum.lambda.iter().any(|&l| l > 0.0) {
        return Err(Error::domain("participation ratio of an all-zero spectrum"));
    }
    let sum: f64 = spectrum.lambda.iter().sum();
    let sum_sq: f64 = spectrum.lambda.iter().map(|l| l * l).sum();
    let raw = sum * sum / sum_sq;
    let m_star = ((raw + 0.5).floor() as usize).clamp(1, n);
    Ok(IdEstimate {
        method: Method::PR,
        m_star,
        raw,
        param: None,
    })
}

/// Trace form `(Tr S)² / Tr(S²)`, equal to the eigenvalue form.
pub fn participation_ratio_of_matrix(s: &SymMatrix) -> f64 {
    let tr = s.trace();
    tr * tr / s.trace_of_square()
}

/// Number of eigenvalues `>= threshold`.
pub fn kaiser_count(spectrum: &EigenSpectrum, threshold: f64) -> Result<IdEstimate> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!("threshold must be > 0, got {threshold}")));
    }
    let retained: Vec<f64> = spectrum
        .lambda
        .iter()
        .copied()
        .filter(|&l| l >= threshold)
        .collect();
    if retained.is_empty() {
        return Err(Error::domain(format!(
            "no eigenvalue reaches the threshold {threshold}"
        )));
    }
    Ok(IdEstimate {
        method: Method::KC,
        m_star: retained.len(),
        raw: retained.iter().copied().fold(f64::INFINITY, f64::min),
        param: Some(threshold),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KneeOutcome {
    Knee(IdEstimate),
    /// The difference curve never fell below a threshold.
    NoKnee,
}

impl KneeOutcome {
    pub fn estimate(&self) -> Option<&IdEstimate> {
        match self {
            KneeOutcome::Knee(e) => Some(e),
            KneeOutcome::NoKnee => None,
        }
    }
}

/// Kneedle elbow of a decreasing, convex curve sampled at x = 1..len.
///
/// No smoothing is applied. Both axes are min-max normalized, the curve is
/// flipped to `1 - y` so the elbow becomes a knee, and the difference
/// `d = (1 - y) - x` is scanned. Each interior local maximum of `d` sets a
/// threshold `d_max - s · mean(Δx)`; the first maximum after which `d`
/// drops below its threshold before the next maximum is the knee.
pub fn kneedle_points(y: &[f64], sensitivity: f64) -> Result<KneeOutcome> {
    let len = y.len();
    if len < 3 {
        return Err(Error::domain(format!("kneedle needs at least 3 points, got {len}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("kneedle input contains non-finite values"));
    }
    if !(sensitivity >= 0.0) {
        return Err(Error::domain("sensitivity must be >= 0"));
    }
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi == lo {
        return Ok(KneeOutcome::NoKnee);
    }
    let span = (len - 1) as f64;
    let diff: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x_norm = i as f64 / span;
            let flipped = 1.0 - (v - lo) / (hi - lo);
            flipped - x_norm
        })
        .collect();
    // Consecutive normalized x values are evenly spaced.
    let step = sensitivity / span;

    let maxima: Vec<usize> = (1..len - 1)
        .filter(|&i| diff[i] >= diff[i - 1] && diff[i] >= diff[i + 1])
        .collect();
    for (idx, &i) in maxima.iter().enumerate() {
        let threshold = diff[i] - step;
        let stop = maxima.get(idx + 1).copied().unwrap_or(len - 1);
        if diff[i + 1..=stop].iter().any(|&d| d < threshold) {
            let m = i + 1;
            return Ok(KneeOutcome::Knee(IdEstimate {
                method: Method::KA,
                m_star: m,
                raw: m as f64,
                param: Some(sensitivity),
            }));
        }
    }
    Ok(KneeOutcome::NoKnee)
}

/// Kneedle on `J_m` for m = 1..n of a reconstruction curve.
pub fn kneedle(curve: &ReconstructionCurve, sensitivity: f64) -> Result<KneeOutcome> {
    if curve.values.len() < 4 {
        return Err(Error::domain("curve too short for elbow detection"));
    }
    let y = curve.from_m1();
    if y.windows(2).any(|w| w[1] > w[0] + 1e-9 * w[0].abs().max(1.0)) {
        return Err(Error::domain("reconstruction curve must be non-increasing"));
    }
    kneedle_points(y, sensitivity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kaiser_threshold: f64,
    pub sensitivity: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kaiser_threshold: JOLLIFFE_THRESHOLD,
            sensitivity: DEFAULT_SENSITIVITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Estimate(IdEstimate),
    NoKnee,
    Failed(String),
}

impl Outcome {
    pub fn m_star(&self) -> Option<usize> {
        match self {
            Outcome::Estimate(e) => Some(e.m_star),
            _ => None,
        }
    }

    pub fn raw(&self) -> Option<f64> {
        match self {
            Outcome::Estimate(e) => Some(e.raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdReport {
    pub entries: Vec<(Method, Outcome)>,
}

impl IdReport {
    pub fn get(&self, method: Method) -> Option<&Outcome> {
        self.entries
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, o)| o)
    }

    pub fn m_star(&self, method: Method) -> Option<usize> {
        self.get(method).and_then(Outcome::m_star)
    }
}

/// All three estimators; a failure of one does not prevent the others.
pub fn estimate_all(
    spectrum: &EigenSpectrum,
    curve: &ReconstructionCurve,
    config: &EstimatorConfig,
) -> IdReport {
    let pr = match participation_ratio(spectrum) {
        Ok(e) => Outcome::Estimate(e),
        Err(e) => Outcome::Failed(e.to_string()),
    };
    let kc = match kaiser_count(spectrum, config.kaiser_threshold) {
        Ok(e) => Outcome::Estimate(e),
        Err(e) => Outcome::Failed(e.to_string()),
    };
    let ka = match kneedle(&curve.to_percent(), config.sensitivity) {
        Ok(KneeOutcome::Knee(e)) => Outcome::Estimate(e),
        Ok(KneeOutcome::NoKnee) => Outcome::NoKnee,
        Err(e) => Outcome::Failed(e.to_string()),
    };
    IdReport {
        entries: vec![(Method::PR, pr), (Method::KC, kc), (Method::KA, ka)],
    }
}

/// One row of the `beta,k,method,m_star,raw` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub k: u32,
    pub method: Method,
    pub m_star: Option<usize>,
    pub raw: Option<f64>,
}

impl SweepRow {
    pub fn from_report(beta: f64, k: u32, report: &IdReport) -> Vec<SweepRow> {
        report
            .entries
            .iter()
            .map(|(method, o)| SweepRow {
                beta,
                k,
                method: *method,
                m_star: o.m_star(),
                raw: o.raw(),
            })
            .collect()
    }
}

pub const SWEEP_HEADER: &str = "beta,k,method,m_star,raw";

pub fn write_sweep_csv<W: Write>(
    out: &mut W,
    rows: &[SweepRow],
    provenance: &Provenance,
) -> Result<()> {
    provenance.write_header(out)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let m = r.m_star.map(|m| m.to_string()).unwrap_or_else(|| "NA".into());
        let raw = r.raw.map(fmt_g17).unwrap_or_else(|| "NA".into());
        writeln!(out, "{},{},{},{},{}", r.beta, r.k, r.method, m, raw)?;
    }
    Ok(())
}

/// Parse rows written by [`write_sweep_csv`], skipping comments and the header.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == SWEEP_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Csv(format!("expected 5 fields: {line:?}")));
        }
        let bad = |what: &str| Error::Csv(format!("bad {what} in {line:?}"));
        rows.push(SweepRow {
            beta: f[0].parse().map_err(|_| bad("beta"))?,
            k: f[1].parse().map_err(|_| bad("k"))?,
            method: f[2].parse()?,
            m_star: match f[3] {
                "NA" => None,
                s => Some(s.parse().map_err(|_| bad("m_star"))?),
            },
            raw: match f[4] {
                "NA" => None,
                s => Some(s.parse().map_err(|_| bad("raw"))?),
            },
        });
    }
    Ok(rows)
}
