//! Replayable sources of trajectory rows.
//!
//! Every analysis pass walks the full row sequence in order, so a source
//! only needs to be able to replay its rows block by block. Stored files,
//! in-memory matrices and deterministic re-simulation all qualify.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::chain::{integrate, InitialCondition, IntegrationSummary, ModelParams};
use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

/// Physical provenance of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub params: ModelParams,
    pub ic: InitialCondition,
}

impl TrajectoryMeta {
    pub fn new(params: ModelParams, ic: InitialCondition) -> Self {
        TrajectoryMeta { params, ic }
    }

    /// Time between consecutive recorded rows.
    pub fn sample_interval(&self) -> f64 {
        self.params.h * self.params.stride as f64
    }
}

pub trait RowSource {
    fn n_cols(&self) -> usize;

    fn n_rows(&self) -> u64;

    /// Visit all rows in order as contiguous row-major blocks of at most
    /// `block_rows` rows.
    fn for_each_block(
        &self,
        block_rows: usize,
        f: &mut dyn FnMut(&[f64]) -> Result<()>,
    ) -> Result<()>;

    fn meta(&self) -> Option<TrajectoryMeta> {
        None
    }

    /// Time stamp of row `index`; the row index itself when no provenance is known.
    fn time_of(&self, index: u64) -> f64 {
        match self.meta() {
            Some(m) => index as f64 * m.sample_interval(),
            None => index as f64,
        }
    }
}

/// Row-major `n_rows x n_cols` matrix held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    meta: Option<TrajectoryMeta>,
}

impl TrajectoryMatrix {
    pub fn from_rows(n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::domain("matrix needs at least one column"));
        }
        if data.len() % n_cols != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                found: data.len() % n_cols,
            });
        }
        if data.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        Ok(TrajectoryMatrix {
            n_rows: data.len() / n_cols,
            n_cols,
            data,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// First `n` rows as a new matrix.
    pub fn take(&self, n: usize) -> Result<Self> {
        let n = n.min(self.n_rows);
        let mut m = Self::from_rows(self.n_cols, self.data[..n * self.n_cols].to_vec())?;
        m.meta = self.meta;
        Ok(m)
    }

    /// Load every row of a source into memory.
    pub fn collect<S: RowSource + ?Sized>(source: &S) -> Result<Self> {
        let mut data = Vec::with_capacity(source.n_rows() as usize * source.n_cols());
        source.for_each_block(DEFAULT_BLOCK_ROWS, &mut |b: &[f64]| {
            data.extend_from_slice(b);
            Ok(())
        })?;
        let mut m = Self::from_rows(source.n_cols(), data)?;
        m.meta = source.meta();
        Ok(m)
    }

    /// First `n` rows of a source, without reading the rest.
    pub fn collect_prefix<S: RowSource + ?Sized>(source: &S, n: usize) -> Result<Self> {
        let n_cols = source.n_cols();
        let want = n.min(source.n_rows() as usize) * n_cols;
        let mut data = Vec::with_capacity(want);
        let res = source.for_each_block(DEFAULT_BLOCK_ROWS, &mut |b: &[f64]| {
            let take = (want - data.len()).min(b.len());
            data.extend_from_slice(&b[..take]);
            if data.len() == want {
                Err(Error::Stop)
            } else {
                Ok(())
            }
        });
        match res {
            Ok(()) | Err(Error::Stop) => {}
            Err(e) => return Err(e),
        }
        let mut m = Self::from_rows(n_cols, data)?;
        m.meta = source.meta();
        Ok(m)
    }
}

impl RowSource for TrajectoryMatrix {
    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn n_rows(&self) -> u64 {
        self.n_rows as u64
    }

    fn for_each_block(
        &self,
        block_rows: usize,
        f: &mut dyn FnMut(&[f64]) -> Result<()>,
    ) -> Result<()> {
        for block in self.data.chunks(block_rows.max(1) * self.n_cols) {
            f(block)?;
        }
        Ok(())
    }

    fn meta(&self) -> Option<TrajectoryMeta> {
        self.meta
    }
}

/// A trajectory regenerated by integration on every pass.
///
/// Integration is bitwise deterministic, so replaying is equivalent to
/// reading a stored file and avoids keeping gigabytes on disk.
#[derive(Debug)]
pub struct SimulatedTrajectory {
    meta: TrajectoryMeta,
    n_samples: u64,
    last_summary: Mutex<Option<IntegrationSummary>>,
}

impl SimulatedTrajectory {
    pub fn new(params: ModelParams, ic: InitialCondition, n_samples: u64) -> Result<Self> {
        params.validate()?;
        if n_samples < 1 {
            return Err(Error::EmptyTrajectory);
        }
        Ok(SimulatedTrajectory {
            meta: TrajectoryMeta::new(params, ic),
            n_samples,
            last_summary: Mutex::new(None),
        })
    }

    /// Steps integrated per pass.
    pub fn n_steps(&self) -> u64 {
        self.n_samples * self.meta.params.stride as u64
    }

    /// Summary of the most recent completed pass.
    pub fn last_summary(&self) -> Option<IntegrationSummary> {
        self.last_summary.lock().unwrap().clone()
    }
}

impl RowSource for SimulatedTrajectory {
    fn n_cols(&self) -> usize {
        self.meta.params.phase_dim()
    }

    fn n_rows(&self) -> u64 {
        self.n_samples
    }

    fn for_each_block(
        &self,
        block_rows: usize,
        f: &mut dyn FnMut(&[f64]) -> Result<()>,
    ) -> Result<()> {
        let n_cols = self.n_cols();
        let cap = block_rows.max(1) * n_cols;
        let mut buf = Vec::with_capacity(cap);
        let mut sink = |_t: f64, row: &[f64]| -> Result<()> {
            buf.extend_from_slice(row);
            if buf.len() == cap {
                f(&buf)?;
                buf.clear();
            }
            Ok(())
        };
        let summary = integrate(&self.meta.ic, &self.meta.params, self.n_steps(), &mut sink)?;
        if !buf.is_empty() {
            f(&buf)?;
        }
        *self.last_summary.lock().unwrap() = Some(summary);
        Ok(())
    }

    fn meta(&self) -> Option<TrajectoryMeta> {
        Some(self.meta)
    }
}
