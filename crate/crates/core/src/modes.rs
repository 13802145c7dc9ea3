//! Normal-mode coordinates and linear mode energies.

use std::f64::consts::PI;
use std::io::Write;

use crate::chain::{ChainState, SampleSink};
use crate::error::{Error, Result};
use crate::report::{fmt_g17, Provenance};

/// `ω_k = 2 sin(kπ / (2(N+1)))`, 1-based `k`.
pub fn mode_frequency(k: usize, n: usize) -> f64 {
    2.0 * (k as f64 * PI / (2.0 * (n as f64 + 1.0))).sin()
}

/// `E_k = ½(ȧ_k² + ω_k² a_k²)`.
pub fn mode_energy(a: f64, a_dot: f64, omega: f64) -> f64 {
    0.5 * (a_dot * a_dot + omega * omega * a * a)
}

/// Precomputed sine transform for a chain of `n` oscillators.
///
/// The matrix `sqrt(2/(N+1)) sin(jkπ/(N+1))` is symmetric and its own
/// inverse, so the same table maps positions to modes and back.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    n: usize,
    /// Row-major `table[(k-1)*n + (j-1)]`.
    table: Vec<f64>,
    omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
    pub omega: Vec<f64>,
    pub energy: Vec<f64>,
    pub t: f64,
}

impl ModeSpectrum {
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }
}

impl ModeBasis {
    pub fn new(n: usize) -> Self {
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let mut table = Vec::with_capacity(n * n);
        for k in 1..=n {
            for j in 1..=n {
                table.push(norm * ((j * k) as f64 * PI / (n as f64 + 1.0)).sin());
            }
        }
        let omega = (1..=n).map(|k| mode_frequency(k, n)).collect();
        ModeBasis { n, table, omega }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Sine transform of interior values (the j = 0 and j = N+1 terms vanish).
    pub fn transform(&self, values: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (k, slot) in out.iter_mut().enumerate().take(n) {
            let row = &self.table[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * values[j];
            }
            *slot = acc;
        }
    }

    /// Mode amplitudes and velocities of a phase point `(q_1..q_N, p_1..p_N)`.
    pub fn coordinates_of_row(&self, row: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut a = vec![0.0; n];
        let mut a_dot = vec![0.0; n];
        self.transform(&row[..n], &mut a);
        self.transform(&row[n..2 * n], &mut a_dot);
        (a, a_dot)
    }

    pub fn mode_coordinates(&self, state: &ChainState) -> Result<(Vec<f64>, Vec<f64>)> {
        if state.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: state.n(),
            });
        }
        let mut a = vec![0.0; self.n];
        let mut a_dot = vec![0.0; self.n];
        self.transform(state.q_interior(), &mut a);
        self.transform(&state.p, &mut a_dot);
        Ok((a, a_dot))
    }

    /// Inverse transform back to a chain state.
    pub fn state_from_modes(&self, a: &[f64], a_dot: &[f64], t: f64) -> Result<ChainState> {
        if a.len() != self.n || a_dot.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.len().min(a_dot.len()),
            });
        }
        let mut q = vec![0.0; self.n];
        let mut p = vec![0.0; self.n];
        self.transform(a, &mut q);
        self.transform(a_dot, &mut p);
        ChainState::from_interior(&q, &p, t)
    }

    pub fn spectrum_of_row(&self, t: f64, row: &[f64]) -> ModeSpectrum {
        let (a, a_dot) = self.coordinates_of_row(row);
        let energy = a
            .iter()
            .zip(&a_dot)
            .zip(&self.omega)
            .map(|((&a, &ad), &w)| mode_energy(a, ad, w))
            .collect();
        ModeSpectrum {
            a,
            a_dot,
            omega: self.omega.clone(),
            energy,
            t,
        }
    }

    pub fn spectrum(&self, state: &ChainState) -> Result<ModeSpectrum> {
        if state.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: state.n(),
            });
        }
        Ok(self.spectrum_of_row(state.t, &state.phase_point()))
    }

    /// Energy of a single mode of a phase point.
    pub fn energy_of_mode(&self, row: &[f64], k: usize) -> f64 {
        let n = self.n;
        let coeff = &self.table[(k - 1) * n..k * n];
        let mut a = 0.0;
        let mut ad = 0.0;
        for j in 0..n {
            a += coeff[j] * row[j];
            ad += coeff[j] * row[n + j];
        }
        mode_energy(a, ad, self.omega[k - 1])
    }
}

/// Free-function form taking the chain state directly.
pub fn mode_coordinates(state: &ChainState) -> (Vec<f64>, Vec<f64>) {
    ModeBasis::new(state.n())
        .mode_coordinates(state)
        .expect("basis built for this state")
}

/// In-memory `(t, E_k1, E_k2, ...)` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeEnergyTable {
    pub modes: Vec<usize>,
    pub times: Vec<f64>,
    /// Row-major, `modes.len()` values per time.
    pub energies: Vec<f64>,
}

impl ModeEnergyTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Energy series of the `idx`-th tracked mode.
    pub fn column(&self, idx: usize) -> Vec<f64> {
        let w = self.modes.len();
        self.energies.iter().skip(idx).step_by(w).copied().collect()
    }

    pub fn column_for_mode(&self, k: usize) -> Option<Vec<f64>> {
        self.modes.iter().position(|&m| m == k).map(|i| self.column(i))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, provenance: &Provenance) -> Result<()> {
        provenance.write_header(out)?;
        write!(out, "t")?;
        for k in &self.modes {
            write!(out, ",E_{k}")?;
        }
        writeln!(out)?;
        let w = self.modes.len();
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{}", fmt_g17(*t))?;
            for e in &self.energies[i * w..(i + 1) * w] {
                write!(out, ",{}", fmt_g17(*e))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Sink recording selected mode energies every `stride`-th sample it sees.
#[derive(Debug, Clone)]
pub struct ModeEnergySeries {
    basis: ModeBasis,
    stride: u64,
    seen: u64,
    table: ModeEnergyTable,
}

impl ModeEnergySeries {
    pub fn new(n: usize, modes: &[usize], stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::domain("stride must be >= 1"));
        }
        if let Some(&bad) = modes.iter().find(|&&k| k < 1 || k > n) {
            return Err(Error::domain(format!("mode {bad} outside 1..={n}")));
        }
        Ok(ModeEnergySeries {
            basis: ModeBasis::new(n),
            stride,
            seen: 0,
            table: ModeEnergyTable {
                modes: modes.to_vec(),
                ..Default::default()
            },
        })
    }

    pub fn finish(self) -> ModeEnergyTable {
        self.table
    }
}

impl SampleSink for ModeEnergySeries {
    fn accept(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != 2 * self.basis.n {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.basis.n,
                found: row.len(),
            });
        }
        let keep = self.seen % self.stride == 0;
        self.seen += 1;
        if keep && !self.table.modes.is_empty() {
            self.table.times.push(t);
            for &k in &self.table.modes {
                self.table.energies.push(self.basis.energy_of_mode(row, k));
            }
        }
        Ok(())
    }
}

/// Mode energy time series of a stored or replayed trajectory.
pub fn mode_energy_series<S: crate::source::RowSource + ?Sized>(
    source: &S,
    modes: &[usize],
    stride: u64,
) -> Result<ModeEnergyTable> {
    let n_cols = source.n_cols();
    if n_cols % 2 != 0 {
        return Err(Error::domain("phase points must have even length"));
    }
    let mut series = ModeEnergySeries::new(n_cols / 2, modes, stride)?;
    let mut index = 0u64;
    source.for_each_block(crate::source::DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        for row in block.chunks_exact(n_cols) {
            series.accept(source.time_of(index), row)?;
            index += 1;
        }
        Ok(())
    })?;
    Ok(series.finish())
}
