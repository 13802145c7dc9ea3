//! Exact t-SNE with a dense all-pairs affinity matrix.
//!
//! Memory is one `n × n` matrix of `f64` (the distance matrix is turned into
//! conditionals and then joint probabilities in place), so the point count is
//! capped at [`MAX_POINTS`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::par;
use crate::pca::{self, Standardization};
use crate::report::{fmt_g17, Provenance};
use crate::source::TrajectoryMatrix;

pub const MAX_POINTS: usize = 20_000;
/// Required agreement between achieved and target perplexity, in log₂.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;
pub const MAX_BISECTIONS: usize = 64;
/// Floor on `q_ij` inside the KL divergence.
pub const Q_FLOOR: f64 = 1e-12;
pub const KL_EVERY: usize = 50;
pub const MIN_GAIN: f64 = 0.01;
pub const INIT_STD: f64 = 1e-4;

// Bisection stops at a tenth of the tolerance so a recomputed entropy
// still lands inside it.
const SEARCH_TOLERANCE: f64 = PERPLEXITY_TOLERANCE * 0.1;
const MAX_BRACKET_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::domain(format!(
                "unknown metric {other:?} (expected euclidean or cosine)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Pca,
    /// Row-major `n × 2` starting coordinates.
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub metric: Metric,
    pub init: Init,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    /// `None` picks `max(n / 12, 50)`.
    pub learning_rate: Option<f64>,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            metric: Metric::Euclidean,
            init: Init::Pca,
            iterations: 750,
            exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: None,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn learning_rate_for(&self, n: usize) -> f64 {
        self.learning_rate.unwrap_or((n as f64 / 12.0).max(50.0))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n > MAX_POINTS {
            return Err(Error::domain(format!(
                "{n} points exceed the exact t-SNE limit of {MAX_POINTS}"
            )));
        }
        if n < 3 {
            return Err(Error::domain("t-SNE needs at least three points"));
        }
        check_perplexity(self.perplexity, n)?;
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be at least 1"));
        }
        if !(self.exaggeration > 0.0) || !self.exaggeration.is_finite() {
            return Err(Error::domain("exaggeration must be positive"));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(Error::domain("learning rate must be positive"));
            }
        }
        for m in [self.momentum, self.final_momentum] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::domain("momentum must lie in [0, 1)"));
            }
        }
        if let Init::Provided(y) = &self.init {
            if y.len() != 2 * n {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n,
                    found: y.len(),
                });
            }
        }
        Ok(())
    }
}

fn check_perplexity(perplexity: f64, n: usize) -> Result<()> {
    if !(perplexity > 1.0) || perplexity >= n as f64 - 1.0 {
        return Err(Error::domain(format!(
            "perplexity {perplexity} is unreachable with {n} points (need 1 < perplexity < {})",
            n - 1
        )));
    }
    Ok(())
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    data: Vec<f64>,
}

impl PairMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(PairMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

fn norms(x: &TrajectoryMatrix) -> Vec<f64> {
    (0..x.rows())
        .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn distance(a: &[f64], b: &[f64], metric: Metric, na: f64, nb: f64) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            (1.0 - dot / (na * nb)).max(0.0)
        }
    }
}

/// All-pairs distances. Cosine distance is `1 - cos θ`, clamped at zero.
pub fn pairwise_distance(x: &TrajectoryMatrix, metric: Metric) -> Result<PairMatrix> {
    let n = x.rows();
    let norm = norms(x);
    if metric == Metric::Cosine {
        if let Some(row) = norm.iter().position(|&v| v == 0.0) {
            return Err(Error::domain(format!(
                "row {row} has zero norm, cosine distance undefined"
            )));
        }
    }
    let mut data = vec![0.0; n * n];
    par::for_each_chunk_mut(&mut data, n.max(1), |i, out| {
        let a = x.row(i);
        for (j, d) in out.iter_mut().enumerate() {
            *d = if i == j {
                0.0
            } else {
                distance(a, x.row(j), metric, norm[i], norm[j])
            };
        }
    });
    Ok(PairMatrix { n, data })
}

/// Per-row outcome of the bandwidth search.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowFit {
    /// Gaussian precision `1 / (2σ²)`.
    pub beta: f64,
    pub log2_perplexity: f64,
    pub converged: bool,
}

impl RowFit {
    pub fn sigma(&self) -> f64 {
        (0.5 / self.beta).sqrt()
    }
}

/// Conditional probabilities `p_{j|i}` (row `i` sums to one).
#[derive(Debug, Clone)]
pub struct Conditionals {
    pub p: PairMatrix,
    pub rows: Vec<RowFit>,
    pub perplexity: f64,
}

impl Conditionals {
    pub fn unconverged(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.converged)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Entropy in nats of the row distribution at precision `beta`, with
/// `shifted[j] = d²_ij - min_j d²_ij` and `skip = i`.
fn row_entropy(shifted: &[f64], skip: usize, beta: f64) -> f64 {
    let mut sum_w = 0.0;
    let mut sum_wd = 0.0;
    for (j, &d) in shifted.iter().enumerate() {
        if j != skip {
            let w = (-beta * d).exp();
            sum_w += w;
            sum_wd += w * d;
        }
    }
    sum_w.ln() + beta * sum_wd / sum_w
}

/// Overwrites `row` (distances) with `p_{j|i}`.
fn calibrate_row(row: &mut [f64], i: usize, target: f64) -> RowFit {
    let n = row.len();
    let mut dmin = f64::INFINITY;
    for (j, d) in row.iter_mut().enumerate() {
        if j != i {
            *d *= *d;
            dmin = dmin.min(*d);
        }
    }
    let mut mean_gap = 0.0;
    for (j, d) in row.iter_mut().enumerate() {
        if j != i {
            *d -= dmin;
            mean_gap += *d;
        }
    }
    mean_gap /= (n - 1) as f64;

    let ln2 = std::f64::consts::LN_2;
    let err = |log_beta: f64| row_entropy(row, i, log_beta.exp()) / ln2 - target;

    let start = if mean_gap > 0.0 { -mean_gap.ln() } else { 0.0 };
    let mut best = (start, err(start));
    let (mut lo, mut hi) = (start, start);
    // Entropy falls as beta grows: lo must sit above the target, hi below.
    let mut e_lo = best.1;
    let mut steps = 0;
    while e_lo < 0.0 && steps < MAX_BRACKET_STEPS {
        lo -= 2.0;
        e_lo = err(lo);
        steps += 1;
    }
    let mut e_hi = err(hi);
    steps = 0;
    while e_hi > 0.0 && steps < MAX_BRACKET_STEPS {
        hi += 2.0;
        e_hi = err(hi);
        steps += 1;
    }
    for (x, e) in [(lo, e_lo), (hi, e_hi)] {
        if e.abs() < best.1.abs() {
            best = (x, e);
        }
    }
    if e_lo >= 0.0 && e_hi <= 0.0 {
        for _ in 0..MAX_BISECTIONS {
            if best.1.abs() < SEARCH_TOLERANCE {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let e = err(mid);
            if e.abs() < best.1.abs() {
                best = (mid, e);
            }
            if e > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let beta = best.0.exp();
    let mut sum = 0.0;
    for (j, d) in row.iter_mut().enumerate() {
        *d = if j == i { 0.0 } else { (-beta * *d).exp() };
        sum += *d;
    }
    let mut h = 0.0;
    for d in row.iter_mut() {
        *d /= sum;
        if *d > 0.0 {
            h -= *d * d.ln();
        }
    }
    let log2_perplexity = h / ln2;
    RowFit {
        beta,
        log2_perplexity,
        converged: (log2_perplexity - target).abs() < PERPLEXITY_TOLERANCE,
    }
}

/// Turns a distance matrix into conditionals with a Gaussian kernel on the
/// squared distance, choosing each row's bandwidth so the row perplexity
/// `2^H` matches `perplexity`. Rows that miss the tolerance are flagged, not
/// rejected.
pub fn calibrate_conditionals(distances: PairMatrix, perplexity: f64) -> Result<Conditionals> {
    let n = distances.n;
    check_perplexity(perplexity, n)?;
    let target = perplexity.log2();
    let mut data = distances.data;
    let mut rows = vec![RowFit::default(); n];
    par::zip_chunks_mut(&mut data, n, &mut rows, |i, row, fit| {
        *fit = calibrate_row(row, i, target);
    });
    Ok(Conditionals {
        p: PairMatrix { n, data },
        rows,
        perplexity,
    })
}

/// Joint probabilities `p_ij = (p_{j|i} + p_{i|j}) / 2n`.
#[derive(Debug, Clone)]
pub struct JointProbabilities {
    pub p: PairMatrix,
}

pub fn symmetrize(conditionals: Conditionals) -> JointProbabilities {
    let mut p = conditionals.p;
    let n = p.n;
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        p.data[i * n + i] = 0.0;
        for j in i + 1..n {
            let v = (p.data[i * n + j] + p.data[j * n + i]) * scale;
            p.data[i * n + j] = v;
            p.data[j * n + i] = v;
        }
    }
    JointProbabilities { p }
}

fn check_embedding(p: &PairMatrix, y: &[f64]) -> Result<()> {
    if y.len() != 2 * p.n {
        return Err(Error::DimensionMismatch {
            expected: 2 * p.n,
            found: y.len(),
        });
    }
    Ok(())
}

fn kernel(y: &[f64], i: usize, j: usize) -> (f64, f64, f64) {
    let dx = y[2 * i] - y[2 * j];
    let dy = y[2 * i + 1] - y[2 * j + 1];
    (1.0 / (1.0 + dx * dx + dy * dy), dx, dy)
}

/// Per-row Student-t kernel sums, reduced in row order.
fn normalizer(y: &[f64], n: usize) -> f64 {
    par::map_range(n, |i| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| kernel(y, i, j).0)
            .sum::<f64>()
    })
    .iter()
    .sum()
}

/// Low-dimensional affinities `q_ij` and their normalizer `Z`.
pub fn low_dim_affinities(y: &[f64]) -> Result<(PairMatrix, f64)> {
    if y.len() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: y.len() + 1,
            found: y.len(),
        });
    }
    let n = y.len() / 2;
    let z = normalizer(y, n);
    let mut data = vec![0.0; n * n];
    par::for_each_chunk_mut(&mut data, n.max(1), |i, row| {
        for (j, q) in row.iter_mut().enumerate() {
            if j != i {
                *q = kernel(y, i, j).0 / z;
            }
        }
    });
    Ok((PairMatrix { n, data }, z))
}

/// `Σ p_ij log(p_ij / q_ij)`, skipping `p_ij = 0`, with `q` floored at
/// [`Q_FLOOR`].
pub fn kl_divergence(p: &PairMatrix, q: &PairMatrix) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            found: q.n,
        });
    }
    Ok(p.data
        .iter()
        .zip(&q.data)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b.max(Q_FLOOR)).ln())
        .sum())
}

/// KL divergence of `p` from the embedding's `q` without materializing `q`.
pub fn embedding_kl(p: &JointProbabilities, y: &[f64]) -> Result<f64> {
    let p = &p.p;
    check_embedding(p, y)?;
    let n = p.n;
    let z = normalizer(y, n);
    Ok(par::map_range(n, |i| {
        let row = p.row(i);
        let mut s = 0.0;
        for j in 0..n {
            if j != i && row[j] > 0.0 {
                let q = (kernel(y, i, j).0 / z).max(Q_FLOOR);
                s += row[j] * (row[j] / q).ln();
            }
        }
        s
    })
    .iter()
    .sum())
}

/// Objective whose gradient is the exaggerated update direction:
/// `α Σ p_ij log(p_ij / w_ij) + log Z` with `w_ij = (1 + ‖yᵢ − yⱼ‖²)⁻¹`.
/// At `α = 1` it equals the KL divergence (no floor).
pub fn objective(p: &JointProbabilities, y: &[f64], exaggeration: f64) -> Result<f64> {
    let p = &p.p;
    check_embedding(p, y)?;
    let n = p.n;
    let z = normalizer(y, n);
    let s: f64 = par::map_range(n, |i| {
        let row = p.row(i);
        let mut s = 0.0;
        for j in 0..n {
            if j != i && row[j] > 0.0 {
                s += row[j] * (row[j] / kernel(y, i, j).0).ln();
            }
        }
        s
    })
    .iter()
    .sum();
    Ok(exaggeration * s + z.ln())
}

/// `∂C/∂yᵢ = 4 Σⱼ (α p_ij − q_ij) w_ij (yᵢ − yⱼ)`, row-major `n × 2`.
pub fn gradient(p: &JointProbabilities, y: &[f64], exaggeration: f64) -> Result<Vec<f64>> {
    let p = &p.p;
    check_embedding(p, y)?;
    let n = p.n;
    let parts = par::map_range(n, |i| {
        let row = p.row(i);
        let mut part = [0.0; 5];
        for j in 0..n {
            if j == i {
                continue;
            }
            let (w, dx, dy) = kernel(y, i, j);
            let a = exaggeration * row[j] * w;
            part[0] += a * dx;
            part[1] += a * dy;
            let r = w * w;
            part[2] += r * dx;
            part[3] += r * dy;
            part[4] += w;
        }
        part
    });
    let z: f64 = parts.iter().map(|p| p[4]).sum();
    let mut grad = Vec::with_capacity(2 * n);
    for part in &parts {
        grad.push(4.0 * (part[0] - part[2] / z));
        grad.push(4.0 * (part[1] - part[3] / z));
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Row-major `n × 2`.
    pub y: Vec<f64>,
    /// `(iteration, KL)` pairs.
    pub kl_trace: Vec<(usize, f64)>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.y.len() / 2
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.y[2 * i], self.y[2 * i + 1]]
    }

    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        times: &[f64],
        provenance: &Provenance,
    ) -> Result<()> {
        if times.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: times.len(),
            });
        }
        provenance.write_header(out)?;
        writeln!(out, "index,t,y1,y2")?;
        for (i, t) in times.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{}",
                fmt_g17(*t),
                fmt_g17(self.y[2 * i]),
                fmt_g17(self.y[2 * i + 1])
            )?;
        }
        Ok(())
    }

    pub fn write_kl_csv<W: Write>(&self, out: &mut W, provenance: &Provenance) -> Result<()> {
        provenance.write_header(out)?;
        writeln!(out, "iter,kl")?;
        for (it, kl) in &self.kl_trace {
            writeln!(out, "{it},{}", fmt_g17(*kl))?;
        }
        Ok(())
    }
}

/// Gradient descent with momentum and per-coordinate gains.
pub fn optimize(p: &JointProbabilities, init: Vec<f64>, config: &TsneConfig) -> Result<Embedding> {
    let n = p.p.n;
    check_embedding(&p.p, &init)?;
    let lr = config.learning_rate_for(n);
    let mut y = init;
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut kl_trace = Vec::new();
    for it in 0..config.iterations {
        let alpha = if it < config.exaggeration_iterations {
            config.exaggeration
        } else {
            1.0
        };
        let momentum = if it < config.momentum_switch {
            config.momentum
        } else {
            config.final_momentum
        };
        let grad = gradient(p, &y, alpha)?;
        for k in 0..2 * n {
            if update[k] * grad[k] < 0.0 {
                gains[k] += 0.2;
            } else {
                gains[k] = (gains[k] * 0.8).max(MIN_GAIN);
            }
            update[k] = momentum * update[k] - lr * gains[k] * grad[k];
            y[k] += update[k];
        }
        let done = it + 1;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::OptimizationBlowup { iteration: done });
        }
        if done % KL_EVERY == 0 || done == config.iterations {
            kl_trace.push((done, embedding_kl(p, &y)?));
        }
    }
    Ok(Embedding { y, kl_trace })
}

/// Top-two center-only principal scores, scaled so the first column has
/// standard deviation [`INIT_STD`]. Falls back to seeded Gaussian noise of
/// the same scale when the data has no spread.
pub fn pca_init(x: &TrajectoryMatrix, seed: u64) -> Result<Vec<f64>> {
    let n = x.rows();
    let mode = Standardization::CenterOnly;
    let stats = pca::column_moments(x)?;
    let matrix = pca::correlation_matrix(x, &stats, mode)?;
    let decomposition = pca::eigendecompose(&matrix)?;
    if decomposition.spectrum.lambda[0] > 0.0 {
        let (vectors, m) = if x.cols() >= 2 {
            (decomposition.top(2), 2)
        } else {
            (decomposition.top(1), 1)
        };
        let scores = pca::project(x, &stats, mode, &vectors, m)?;
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            for l in 0..m {
                y[2 * i + l] = scores[i * m + l];
            }
        }
        let std = column_std(&y, 0);
        if std > 0.0 && std.is_finite() {
            let s = INIT_STD / std;
            y.iter_mut().for_each(|v| *v *= s);
            return Ok(y);
        }
    }
    random_init(n, seed)
}

pub fn random_init(n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).map_err(|e| Error::domain(e.to_string()))?;
    Ok((0..2 * n).map(|_| normal.sample(&mut rng)).collect())
}

fn column_std(y: &[f64], col: usize) -> f64 {
    let n = y.len() / 2;
    let mean = (0..n).map(|i| y[2 * i + col]).sum::<f64>() / n as f64;
    let ss: f64 = (0..n).map(|i| (y[2 * i + col] - mean).powi(2)).sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

/// Everything produced by [`embed`].
#[derive(Debug, Clone)]
pub struct TsneOutput {
    pub embedding: Embedding,
    pub rows: Vec<RowFit>,
}

impl TsneOutput {
    pub fn unconverged(&self) -> usize {
        self.rows.iter().filter(|r| !r.converged).count()
    }
}

/// Distances, calibration, symmetrization, initialization and descent.
pub fn embed(x: &TrajectoryMatrix, config: &TsneConfig) -> Result<TsneOutput> {
    let n = x.rows();
    config.validate(n)?;
    let init = match &config.init {
        Init::Pca => pca_init(x, config.seed)?,
        Init::Provided(y) => y.clone(),
    };
    let conditionals = calibrate_conditionals(pairwise_distance(x, config.metric)?, config.perplexity)?;
    let rows = conditionals.rows.clone();
    let joint = symmetrize(conditionals);
    let embedding = optimize(&joint, init, config)?;
    Ok(TsneOutput { embedding, rows })
}

/// Agreement between two cyclic orderings: with rank angles
/// `αᵢ = 2π rank(aᵢ)/n` and `βᵢ` likewise, the larger of
/// `|⟨e^{i(α−β)}⟩|²` and `|⟨e^{i(α+β)}⟩|²`. One for identical or mirrored
/// order up to rotation, near zero for unrelated orders.
pub fn circular_rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::domain("no angles"));
    }
    let ra = rank_angles(a);
    let rb = rank_angles(b);
    let mut best: f64 = 0.0;
    for sign in [-1.0, 1.0] {
        let (mut c, mut s) = (0.0, 0.0);
        for (x, y) in ra.iter().zip(&rb) {
            let d = x + sign * y;
            c += d.cos();
            s += d.sin();
        }
        best = best.max((c * c + s * s) / (n * n) as f64);
    }
    Ok(best)
}

fn rank_angles(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = std::f64::consts::TAU * r as f64 / n as f64;
    }
    out
}

/// Polar angle of each embedded point around the embedding centroid.
pub fn embedding_angles(embedding: &Embedding) -> Vec<f64> {
    let n = embedding.n();
    let cx = (0..n).map(|i| embedding.y[2 * i]).sum::<f64>() / n as f64;
    let cy = (0..n).map(|i| embedding.y[2 * i + 1]).sum::<f64>() / n as f64;
    (0..n)
        .map(|i| (embedding.y[2 * i + 1] - cy).atan2(embedding.y[2 * i] - cx))
        .collect()
}
