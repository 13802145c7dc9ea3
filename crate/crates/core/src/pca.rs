//! Streaming PCA of trajectory data.
//!
//! The `n_s x n` data matrix is never materialized. Column statistics and
//! the `n x n` correlation (or covariance) matrix are accumulated over
//! fixed-size row chunks; each chunk's partial sum is computed independently
//! (in parallel when enabled) and the partials are folded in chunk order with
//! compensated summation. Chunk boundaries depend only on the global row
//! index, so results are bit-identical for any worker count and any block
//! size the source happens to deliver.
//!
//! The eigenvalues of `S = X̃ᵀX̃ / (n_s - 1)` equal `s_i² / (n_s - 1)` for the
//! singular values `s_i` of the standardized matrix, so diagonalizing the
//! small matrix gives the same spectrum as an SVD of the tall one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, KahanVec};
use crate::source::{RowSource, DEFAULT_BLOCK_ROWS};

/// Rows per independently reduced partial sum.
pub const CHUNK_ROWS: usize = 1024;
/// Chunks buffered before a parallel reduction.
const BATCH_CHUNKS: usize = 32;

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Eigenvalues in (-CLAMP, 0) are set to 0.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Standardization {
    /// Center and scale each column: `S` is the correlation matrix.
    #[default]
    Correlation,
    /// Center only: `S` is the covariance matrix.
    CenterOnly,
}

impl fmt::Display for Standardization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Standardization::Correlation => "correlation",
            Standardization::CenterOnly => "center-only",
        })
    }
}

impl FromStr for Standardization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(Standardization::Correlation),
            "center-only" | "center" => Ok(Standardization::CenterOnly),
            other => Err(Error::domain(format!(
                "unknown standardization {other:?} (expected correlation or center-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub n_rows: u64,
    pub mean: Vec<f64>,
    /// Sample standard deviation (divisor `n_s - 1`).
    pub std: Vec<f64>,
}

impl ColumnStats {
    pub fn n_cols(&self) -> usize {
        self.mean.len()
    }

    /// Per-column multiplier applied after centering.
    fn scale(&self, mode: Standardization) -> Vec<f64> {
        match mode {
            Standardization::Correlation => self.std.iter().map(|s| 1.0 / s).collect(),
            Standardization::CenterOnly => vec![1.0; self.mean.len()],
        }
    }

    pub fn standardize_row(&self, row: &[f64], mode: Standardization, out: &mut [f64]) {
        for j in 0..row.len() {
            let c = row[j] - self.mean[j];
            out[j] = match mode {
                Standardization::Correlation => c / self.std[j],
                Standardization::CenterOnly => c,
            };
        }
    }
}

/// Re-slices arbitrary source blocks into batches made of whole
/// `CHUNK_ROWS`-row chunks (the final batch may be short).
struct Rechunker {
    batch_len: usize,
    buf: Vec<f64>,
}

impl Rechunker {
    fn new(n_cols: usize) -> Self {
        let batch_len = CHUNK_ROWS * BATCH_CHUNKS * n_cols;
        Rechunker {
            batch_len,
            buf: Vec::with_capacity(batch_len),
        }
    }

    fn feed(&mut self, mut block: &[f64], on_batch: &mut impl FnMut(&[f64])) {
        while !block.is_empty() {
            let take = (self.batch_len - self.buf.len()).min(block.len());
            self.buf.extend_from_slice(&block[..take]);
            block = &block[take..];
            if self.buf.len() == self.batch_len {
                on_batch(&self.buf);
                self.buf.clear();
            }
        }
    }

    fn finish(&mut self, on_batch: &mut impl FnMut(&[f64])) {
        if !self.buf.is_empty() {
            on_batch(&self.buf);
            self.buf.clear();
        }
    }
}

/// One pass over `source`: per-chunk partials from `chunk_fn`, folded in
/// chunk order. Returns the folded vector and the number of rows seen.
fn reduce_chunks<S, F>(source: &S, out_len: usize, chunk_fn: F) -> Result<(Vec<f64>, u64)>
where
    S: RowSource + ?Sized,
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let n_cols = source.n_cols();
    let mut acc = KahanVec::zeros(out_len);
    let mut rows = 0u64;
    let mut rechunker = Rechunker::new(n_cols);
    let mut on_batch = |batch: &[f64]| {
        for partial in par::map_chunks(batch, CHUNK_ROWS * n_cols, &chunk_fn) {
            acc.add(&partial);
        }
    };
    source.for_each_block(DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        if block.len() % n_cols != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                found: block.len() % n_cols,
            });
        }
        rows += (block.len() / n_cols) as u64;
        rechunker.feed(block, &mut on_batch);
        Ok(())
    })?;
    rechunker.finish(&mut on_batch);
    if rows != source.n_rows() {
        return Err(Error::Format(format!(
            "source declared {} rows but produced {rows}",
            source.n_rows()
        )));
    }
    Ok((acc.into_values(), rows))
}

/// Exact two-pass column means and standard deviations; rejects constant
/// columns.
pub fn column_stats<S: RowSource + ?Sized>(source: &S) -> Result<ColumnStats> {
    let stats = column_moments(source)?;
    if let Some(column) = stats.std.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::DegenerateColumn { column });
    }
    Ok(stats)
}

/// Like [`column_stats`] but accepts zero-variance columns, which are
/// harmless under [`Standardization::CenterOnly`].
pub fn column_moments<S: RowSource + ?Sized>(source: &S) -> Result<ColumnStats> {
    let n = source.n_cols();
    if source.n_rows() < 2 {
        return Err(Error::domain("column statistics need at least two rows"));
    }
    let (sums, rows) = reduce_chunks(source, n, |chunk| {
        let mut s = vec![0.0; n];
        for row in chunk.chunks_exact(n) {
            for (a, v) in s.iter_mut().zip(row) {
                *a += v;
            }
        }
        s
    })?;
    let mean: Vec<f64> = sums.iter().map(|s| s / rows as f64).collect();
    let (ss, _) = reduce_chunks(source, n, |chunk| {
        let mut s = vec![0.0; n];
        for row in chunk.chunks_exact(n) {
            for j in 0..n {
                let d = row[j] - mean[j];
                s[j] += d * d;
            }
        }
        s
    })?;
    let std: Vec<f64> = ss
        .iter()
        .map(|s| (s / (rows as f64 - 1.0)).sqrt())
        .collect();
    Ok(ColumnStats {
        n_rows: rows,
        mean,
        std,
    })
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(SymMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SymMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(S²) = Σ_ij S_ij²` for symmetric `S`.
    pub fn trace_of_square(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.trace_of_square().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.data[i * n + j] * self.data[i * n + j];
                }
            }
        }
        s.sqrt()
    }
}

/// `S = (n_s - 1)⁻¹ X̃ᵀX̃`, with `X̃` standardized per `mode`.
pub fn correlation_matrix<S: RowSource + ?Sized>(
    source: &S,
    stats: &ColumnStats,
    mode: Standardization,
) -> Result<SymMatrix> {
    let n = source.n_cols();
    if stats.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: stats.n_cols(),
            found: n,
        });
    }
    let scale = stats.scale(mode);
    let mean = &stats.mean;
    let (upper, rows) = reduce_chunks(source, n * n, |chunk| {
        let mut g = vec![0.0; n * n];
        let mut z = vec![0.0; n];
        for row in chunk.chunks_exact(n) {
            for j in 0..n {
                z[j] = (row[j] - mean[j]) * scale[j];
            }
            for a in 0..n {
                let za = z[a];
                let ga = &mut g[a * n + a..(a + 1) * n];
                for (gb, zb) in ga.iter_mut().zip(&z[a..]) {
                    *gb += za * zb;
                }
            }
        }
        g
    })?;
    if rows != stats.n_rows {
        return Err(Error::DimensionMismatch {
            expected: stats.n_rows as usize,
            found: rows as usize,
        });
    }
    let denom = rows as f64 - 1.0;
    let mut data = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = upper[a * n + b] / denom;
            data[a * n + b] = v;
            data[b * n + a] = v;
        }
    }
    Ok(SymMatrix { n, data })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// Eigenvalues, descending.
    pub lambda: Vec<f64>,
    pub n_samples: u64,
    pub standardization: Standardization,
}

impl EigenSpectrum {
    pub fn new(lambda: Vec<f64>) -> Self {
        EigenSpectrum {
            lambda,
            n_samples: 0,
            standardization: Standardization::Correlation,
        }
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// Cumulative explained-variance fractions for m = 1..n.
    pub fn explained_cumulative(&self) -> Vec<f64> {
        let total = self.total();
        let mut acc = 0.0;
        self.lambda
            .iter()
            .map(|l| {
                acc += l;
                acc / total
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub spectrum: EigenSpectrum,
    /// Row-major `n x n`; column `l` is the eigenvector of `lambda[l]`.
    pub vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    pub fn vector(&self, l: usize) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.vectors[i * n + l]).collect()
    }

    /// Leading `m` eigenvectors as a row-major `n x m` matrix.
    pub fn top(&self, m: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            out.extend_from_slice(&self.vectors[i * n..i * n + m]);
        }
        out
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += self.vectors[i * n + l] * self.spectrum.lambda[l] * self.vectors[j * n + l];
                }
                data[i * n + j] = s;
            }
        }
        SymMatrix { n, data }
    }
}

/// Cyclic Jacobi diagonalization of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `JACOBI_TOLERANCE · max(1, ‖S‖_F)`, at most `JACOBI_MAX_SWEEPS` sweeps.
pub fn eigendecompose(s: &SymMatrix) -> Result<EigenDecomposition> {
    let n = s.n;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (s.get(i, j), s.get(j, i));
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::domain(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let tol = JACOBI_TOLERANCE * s.frobenius().max(1.0);
    let mut a = s.clone();
    let mut v = SymMatrix::identity(n);
    let mut converged = a.off_diagonal_norm() < tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: a.off_diagonal_norm(),
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = a.off_diagonal_norm() < tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let lambda: Vec<f64> = order
        .iter()
        .map(|&i| {
            let l = a.get(i, i);
            if l < 0.0 && l > -NEGATIVE_CLAMP {
                0.0
            } else {
                l
            }
        })
        .collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v.data[row * n + src];
        }
    }
    Ok(EigenDecomposition {
        spectrum: EigenSpectrum::new(lambda),
        vectors,
    })
}

/// Zero `a[p][q]` with one Jacobi rotation, accumulating it into `v`.
fn rotate(a: &mut SymMatrix, v: &mut SymMatrix, p: usize, q: usize) {
    let n = a.n;
    let apq = a.data[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a.data[p * n + p];
    let aqq = a.data[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        a.data[k * n + p] = c * akp - s * akq;
        a.data[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a.data[p * n + k];
        let aqk = a.data[q * n + k];
        a.data[p * n + k] = c * apk - s * aqk;
        a.data[q * n + k] = s * apk + c * aqk;
    }
    a.data[p * n + q] = 0.0;
    a.data[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = c * vkp - s * vkq;
        v.data[k * n + q] = s * vkp + c * vkq;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveScale {
    Absolute,
    Percent,
}

/// Reconstruction error `J_m` for m = 0..n.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionCurve {
    pub values: Vec<f64>,
    pub scale: CurveScale,
}

impl ReconstructionCurve {
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `J_m` over m = 1..n, the range elbow detection looks at.
    pub fn from_m1(&self) -> &[f64] {
        &self.values[1..]
    }

    pub fn to_percent(&self) -> ReconstructionCurve {
        match self.scale {
            CurveScale::Percent => self.clone(),
            CurveScale::Absolute => {
                let total = self.values[0];
                ReconstructionCurve {
                    values: self.values.iter().map(|v| 100.0 * v / total).collect(),
                    scale: CurveScale::Percent,
                }
            }
        }
    }
}

/// `J_m = Σ_{l>m} λ_l`, accumulated from the tail so `J_n = 0` exactly.
pub fn reconstruction_curve(spectrum: &EigenSpectrum) -> ReconstructionCurve {
    let n = spectrum.n();
    let mut values = vec![0.0; n + 1];
    for m in (0..n).rev() {
        values[m] = values[m + 1] + spectrum.lambda[m];
    }
    ReconstructionCurve {
        values,
        scale: CurveScale::Absolute,
    }
}

/// Fraction of the total variance carried by the leading `m` components.
pub fn explained_variance(spectrum: &EigenSpectrum, m: usize) -> Result<f64> {
    if m > spectrum.n() {
        return Err(Error::domain(format!("m = {m} exceeds n = {}", spectrum.n())));
    }
    let total = spectrum.total();
    if total <= 0.0 {
        return Err(Error::domain("spectrum has no variance"));
    }
    if m == spectrum.n() {
        return Ok(1.0);
    }
    Ok(spectrum.lambda[..m].iter().sum::<f64>() / total)
}

/// Row-major `n_s x m` scores of the standardized rows on `vectors`
/// (row-major `n x m`, orthonormal columns).
pub fn project<S: RowSource + ?Sized>(
    source: &S,
    stats: &ColumnStats,
    mode: Standardization,
    vectors: &[f64],
    m: usize,
) -> Result<Vec<f64>> {
    let n = source.n_cols();
    if stats.n_cols() != n || vectors.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            found: vectors.len(),
        });
    }
    let mut scores = Vec::with_capacity(source.n_rows() as usize * m);
    let mut z = vec![0.0; n];
    source.for_each_block(DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        for row in block.chunks_exact(n) {
            stats.standardize_row(row, mode, &mut z);
            for l in 0..m {
                let mut s = 0.0;
                for i in 0..n {
                    s += z[i] * vectors[i * m + l];
                }
                scores.push(s);
            }
        }
        Ok(())
    })?;
    Ok(scores)
}

/// Summed squared residual `‖x̃ - x̃_proj‖²` over rows, divided by `n_s - 1`
/// (the same normalization as `S`), for projection on the top `m`
/// eigenvectors. Equals `J_m` up to rounding.
pub fn mean_squared_residual<S: RowSource + ?Sized>(
    source: &S,
    stats: &ColumnStats,
    mode: Standardization,
    decomposition: &EigenDecomposition,
    m: usize,
) -> Result<f64> {
    let n = source.n_cols();
    let basis: Vec<Vec<f64>> = (0..m).map(|l| decomposition.vector(l)).collect();
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut total = KahanVec::zeros(1);
    source.for_each_block(DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        for row in block.chunks_exact(n) {
            stats.standardize_row(row, mode, &mut z);
            r.copy_from_slice(&z);
            for v in &basis {
                let c: f64 = z.iter().zip(v).map(|(a, b)| a * b).sum();
                for (ri, vi) in r.iter_mut().zip(v) {
                    *ri -= c * vi;
                }
            }
            total.add(&[r.iter().map(|x| x * x).sum::<f64>()]);
        }
        Ok(())
    })?;
    Ok(total.into_values()[0] / (stats.n_rows as f64 - 1.0))
}

/// Everything the estimators need from one trajectory.
#[derive(Debug, Clone)]
pub struct PcaResult {
    pub stats: ColumnStats,
    pub matrix: SymMatrix,
    pub decomposition: EigenDecomposition,
    pub curve: ReconstructionCurve,
}

impl PcaResult {
    pub fn spectrum(&self) -> &EigenSpectrum {
        &self.decomposition.spectrum
    }
}

/// Stats, matrix, spectrum and curve in three streaming passes.
pub fn analyze<S: RowSource + ?Sized>(source: &S, mode: Standardization) -> Result<PcaResult> {
    let stats = match mode {
        Standardization::Correlation => column_stats(source)?,
        Standardization::CenterOnly => column_moments(source)?,
    };
    let matrix = correlation_matrix(source, &stats, mode)?;
    let mut decomposition = eigendecompose(&matrix)?;
    decomposition.spectrum.n_samples = stats.n_rows;
    decomposition.spectrum.standardization = mode;
    let curve = reconstruction_curve(&decomposition.spectrum);
    Ok(PcaResult {
        stats,
        matrix,
        decomposition,
        curve,
    })
}
