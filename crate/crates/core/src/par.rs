//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps run on the rayon pool; without it
//! they are plain iterators. Both return results in input order, and callers
//! reduce them sequentially, so numerical output does not depend on the
//! feature or on the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to each `chunk_len`-sized slice of `data`.
pub fn map_chunks<T, F>(data: &[f64], chunk_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks(chunk_len).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks(chunk_len).map(f).collect()
    }
}

/// Apply `f` to `0..n`.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Apply `f` to every item of a slice.
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Run `f` on each mutable `chunk_len`-sized slice of `data` with its index.
pub fn for_each_chunk_mut<F>(data: &mut [f64], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Run `f` on each `chunk_len`-sized slice of `data` together with its
/// index and the matching element of `meta`.
pub fn zip_chunks_mut<M, F>(data: &mut [f64], chunk_len: usize, meta: &mut [M], f: F)
where
    M: Send,
    F: Fn(usize, &mut [f64], &mut M) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .zip(meta.par_iter_mut())
            .enumerate()
            .for_each(|(i, (c, m))| f(i, c, m));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .zip(meta.iter_mut())
            .enumerate()
            .for_each(|(i, (c, m))| f(i, c, m));
    }
}

/// Whether this build uses worker threads.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Run `f` inside a pool of `threads` workers (a no-op wrapper without the
/// `parallel` feature).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Elementwise compensated (Kahan–Babuška/Neumaier) accumulator.
#[derive(Debug, Clone)]
pub struct KahanVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl KahanVec {
    pub fn zeros(len: usize) -> Self {
        KahanVec {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    pub fn add(&mut self, values: &[f64]) {
        for ((s, c), &v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(values) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.sum
            .into_iter()
            .zip(self.comp)
            .map(|(s, c)| s + c)
            .collect()
    }
}
