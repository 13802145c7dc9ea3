//! FPUT β chain with fixed ends, integrated by velocity Verlet.
//!
//! Positions are stored with the two pinned boundary sites, so `q` has
//! `N + 2` entries and `q[0] = q[N + 1] = 0`. Momenta cover the interior
//! oscillators only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Any |q| or |p| above this aborts the integration.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of moving oscillators.
    pub n: usize,
    /// Quartic coupling.
    pub beta: f64,
    /// Cubic coupling. Only the β model is supported, so this must be 0.
    pub alpha: f64,
    /// Integration step.
    pub h: f64,
    /// Record every `stride`-th step.
    pub stride: u32,
}

impl ModelParams {
    pub fn new(n: usize, beta: f64, h: f64) -> Self {
        ModelParams {
            n,
            beta,
            alpha: 0.0,
            h,
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: u32) -> Self {
        self.stride = stride;
        self
    }

    /// Standard sweep defaults: 32 oscillators, h = 0.05.
    pub fn fput32(beta: f64) -> Self {
        Self::new(32, beta, 0.05)
    }

    /// Phase-space dimension, 2N.
    pub fn phase_dim(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!("N must be >= 2, got {}", self.n)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::domain(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.alpha != 0.0 {
            return Err(Error::domain("only the beta model (alpha = 0) is supported"));
        }
        // h may be negative for time-reversed runs, never zero.
        if self.h == 0.0 || !self.h.is_finite() {
            return Err(Error::domain(format!("step h must be nonzero, got {}", self.h)));
        }
        if self.stride == 0 {
            return Err(Error::domain("stride must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Excited normal mode, 1-based.
    pub k: u32,
    /// Amplitude of the excited mode.
    pub amplitude: f64,
}

impl InitialCondition {
    pub fn new(k: u32, amplitude: f64) -> Self {
        InitialCondition { k, amplitude }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Positions including the two boundary sites, length N + 2.
    pub q: Vec<f64>,
    /// Interior momenta, length N.
    pub p: Vec<f64>,
    pub t: f64,
}

impl ChainState {
    pub fn zeros(n: usize) -> Self {
        ChainState {
            q: vec![0.0; n + 2],
            p: vec![0.0; n],
            t: 0.0,
        }
    }

    /// Build a state from interior positions and momenta.
    pub fn from_interior(q_interior: &[f64], p: &[f64], t: f64) -> Result<Self> {
        if q_interior.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q_interior.len(),
                found: p.len(),
            });
        }
        let mut q = Vec::with_capacity(q_interior.len() + 2);
        q.push(0.0);
        q.extend_from_slice(q_interior);
        q.push(0.0);
        Ok(ChainState {
            q,
            p: p.to_vec(),
            t,
        })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn q_interior(&self) -> &[f64] {
        &self.q[1..self.q.len() - 1]
    }

    /// Writes the phase point `(q_1..q_N, p_1..p_N)` into `out`.
    pub fn write_phase_point(&self, out: &mut [f64]) {
        let n = self.n();
        out[..n].copy_from_slice(self.q_interior());
        out[n..2 * n].copy_from_slice(&self.p);
    }

    pub fn phase_point(&self) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n()];
        self.write_phase_point(&mut out);
        out
    }

    pub fn from_phase_point(row: &[f64], t: f64) -> Result<Self> {
        if row.len() % 2 != 0 {
            return Err(Error::domain("phase point must have even length"));
        }
        let n = row.len() / 2;
        Self::from_interior(&row[..n], &row[n..], t)
    }

    fn check_bounds(&self, step: u64) -> Result<()> {
        let bad = self
            .q
            .iter()
            .chain(self.p.iter())
            .position(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD);
        match bad {
            None => Ok(()),
            Some(idx) => {
                let n2 = self.q.len();
                let detail = if idx < n2 {
                    format!("q[{}] = {}", idx, self.q[idx])
                } else {
                    format!("p[{}] = {}", idx - n2 + 1, self.p[idx - n2])
                };
                Err(Error::IntegrationBlowup {
                    step,
                    time: self.t,
                    detail,
                })
            }
        }
    }
}

/// `q_i(0) = A sqrt(2/(N+1)) sin(i k π/(N+1))`, zero momenta.
pub fn build_initial_condition(ic: &InitialCondition, params: &ModelParams) -> Result<ChainState> {
    params.validate()?;
    let n = params.n;
    if ic.k < 1 || ic.k as usize > n {
        return Err(Error::domain(format!(
            "excited mode k = {} outside 1..={}",
            ic.k, n
        )));
    }
    if !ic.amplitude.is_finite() {
        return Err(Error::domain("amplitude must be finite"));
    }
    let mut state = ChainState::zeros(n);
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    let k = ic.k as f64;
    for i in 1..=n {
        let arg = i as f64 * k * PI / (n as f64 + 1.0);
        state.q[i] = ic.amplitude * norm * arg.sin();
    }
    Ok(state)
}

/// Force on each interior oscillator, written into `out` (length N).
pub fn acceleration_into(q: &[f64], beta: f64, out: &mut [f64]) {
    let n = out.len();
    debug_assert_eq!(q.len(), n + 2);
    // Bond stretch to the left neighbour, carried across iterations.
    let mut left = q[1] - q[0];
    for i in 1..=n {
        let right = q[i + 1] - q[i];
        out[i - 1] = (right - left) + beta * (right * right * right - left * left * left);
        left = right;
    }
}

pub fn acceleration(state: &ChainState, params: &ModelParams) -> Vec<f64> {
    let mut out = vec![0.0; state.n()];
    acceleration_into(&state.q, params.beta, &mut out);
    out
}

/// H = ½Σp² + ½Σ(Δq)² + (β/4)Σ(Δq)⁴ over all N + 1 bonds.
pub fn total_energy(state: &ChainState, params: &ModelParams) -> f64 {
    let kinetic: f64 = state.p.iter().map(|p| p * p).sum::<f64>() * 0.5;
    let mut harmonic = 0.0;
    let mut quartic = 0.0;
    for w in state.q.windows(2) {
        let d = w[1] - w[0];
        let d2 = d * d;
        harmonic += d2;
        quartic += d2 * d2;
    }
    kinetic + 0.5 * harmonic + 0.25 * params.beta * quartic
}

pub fn energy_density(energy: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("energy density needs N >= 1"));
    }
    Ok(energy / n as f64)
}

/// Half kick, drift, half kick, reusing `force` as the start-of-step force.
/// On return `force` holds the force at the new positions.
fn verlet_in_place(state: &mut ChainState, beta: f64, h: f64, force: &mut [f64]) {
    let n = state.p.len();
    let half = 0.5 * h;
    for i in 0..n {
        state.p[i] += half * force[i];
    }
    for i in 0..n {
        state.q[i + 1] += h * state.p[i];
    }
    acceleration_into(&state.q, beta, force);
    for i in 0..n {
        state.p[i] += half * force[i];
    }
    state.t += h;
}

/// One velocity Verlet step. `step_index` is only used for error reporting.
pub fn velocity_verlet_step(
    state: &ChainState,
    params: &ModelParams,
    step_index: u64,
) -> Result<ChainState> {
    let mut next = state.clone();
    let mut force = acceleration(state, params);
    verlet_in_place(&mut next, params.beta, params.h, &mut force);
    next.check_bounds(step_index)?;
    Ok(next)
}

/// Stateful integrator caching the force between steps.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: ModelParams,
    state: ChainState,
    force: Vec<f64>,
    steps_taken: u64,
}

impl Integrator {
    pub fn new(state: ChainState, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if state.n() != params.n || state.q.len() != params.n + 2 {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: state.n(),
            });
        }
        state.check_bounds(0)?;
        let force = acceleration(&state, &params);
        Ok(Integrator {
            params,
            state,
            force,
            steps_taken: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    pub fn step(&mut self) -> Result<()> {
        verlet_in_place(
            &mut self.state,
            self.params.beta,
            self.params.h,
            &mut self.force,
        );
        self.steps_taken += 1;
        self.state.check_bounds(self.steps_taken)
    }

    /// Flip the sign of the step for time-reversed integration.
    pub fn reverse(&mut self) {
        self.params.h = -self.params.h;
    }
}

/// Consumer of recorded phase points.
pub trait SampleSink {
    /// `row` is the phase point `(q_1..q_N, p_1..p_N)` at time `t`.
    fn accept(&mut self, t: f64, row: &[f64]) -> Result<()>;
}

impl<F> SampleSink for F
where
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    fn accept(&mut self, t: f64, row: &[f64]) -> Result<()> {
        self(t, row)
    }
}

/// Collects every recorded row in memory.
#[derive(Debug, Default, Clone)]
pub struct VecSink {
    pub times: Vec<f64>,
    pub rows: Vec<f64>,
}

impl SampleSink for VecSink {
    fn accept(&mut self, t: f64, row: &[f64]) -> Result<()> {
        self.times.push(t);
        self.rows.extend_from_slice(row);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationSummary {
    pub final_state: ChainState,
    pub samples_emitted: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// max |H(t) - H(0)| / |H(0)| over recorded samples and the final state
    /// (absolute deviation when H(0) = 0).
    pub max_relative_drift: f64,
}

/// Number of samples recorded for a run of `n_steps` steps at `stride`.
pub fn samples_for_steps(n_steps: u64, stride: u32) -> u64 {
    n_steps.div_ceil(stride as u64)
}

/// Integrate `n_steps` steps from the initial condition.
///
/// The initial phase point is always emitted; after that the state at step
/// index `s` is emitted when `s % stride == 0` and `s < n_steps`. The state
/// after the last step is returned in the summary but not emitted, so a
/// stride-1 run yields exactly `n_steps` samples.
pub fn integrate<S: SampleSink + ?Sized>(
    ic: &InitialCondition,
    params: &ModelParams,
    n_steps: u64,
    sink: &mut S,
) -> Result<IntegrationSummary> {
    if n_steps < 1 {
        return Err(Error::domain("n_steps must be >= 1"));
    }
    let state = build_initial_condition(ic, params)?;
    let mut integrator = Integrator::new(state, *params)?;
    let initial_energy = total_energy(integrator.state(), params);
    let drift = |e: f64| {
        if initial_energy != 0.0 {
            ((e - initial_energy) / initial_energy).abs()
        } else {
            (e - initial_energy).abs()
        }
    };
    let stride = params.stride as u64;
    let mut row = vec![0.0; params.phase_dim()];
    let mut emitted = 0u64;
    let mut max_drift = 0.0f64;

    integrator.state().write_phase_point(&mut row);
    sink.accept(integrator.state().t, &row)?;
    emitted += 1;

    for s in 1..=n_steps {
        integrator.step()?;
        if s < n_steps && s % stride == 0 {
            let st = integrator.state();
            max_drift = max_drift.max(drift(total_energy(st, params)));
            st.write_phase_point(&mut row);
            sink.accept(st.t, &row)?;
            emitted += 1;
        }
    }
    let final_state = integrator.into_state();
    let final_energy = total_energy(&final_state, params);
    max_drift = max_drift.max(drift(final_energy));
    Ok(IntegrationSummary {
        final_state,
        samples_emitted: emitted,
        initial_energy,
        final_energy,
        max_relative_drift: max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain32(beta: f64) -> ModelParams {
        ModelParams::fput32(beta)
    }

    #[test]
    fn initial_condition_shape() {
        let p = chain32(0.3);
        let s = build_initial_condition(&InitialCondition::new(1, 10.0), &p).unwrap();
        assert_eq!(s.q.len(), 34);
        assert_eq!(s.q[0], 0.0);
        assert_eq!(s.q[33], 0.0);
        assert!(s.p.iter().all(|&v| v == 0.0));
        assert_eq!(s.t, 0.0);
        let expected = 10.0 * (2.0f64 / 33.0).sqrt() * (5.0 * PI / 33.0).sin();
        assert_eq!(s.q[5], expected);
    }

    #[test]
    fn initial_condition_rejects_bad_mode() {
        let p = chain32(0.3);
        for k in [0, 33] {
            let err = build_initial_condition(&InitialCondition::new(k, 10.0), &p).unwrap_err();
            assert!(matches!(err, Error::Domain(_)));
        }
    }

    #[test]
    fn zero_amplitude_has_zero_energy() {
        let p = chain32(1.0);
        let s = build_initial_condition(&InitialCondition::new(1, 0.0), &p).unwrap();
        assert!(s.q.iter().all(|&v| v == 0.0));
        assert_eq!(total_energy(&s, &p), 0.0);
    }

    #[test]
    fn linear_energies_of_first_two_modes() {
        let p = chain32(0.0);
        let e1 = total_energy(
            &build_initial_condition(&InitialCondition::new(1, 10.0), &p).unwrap(),
            &p,
        );
        let e2 = total_energy(
            &build_initial_condition(&InitialCondition::new(2, 10.0), &p).unwrap(),
            &p,
        );
        // ½ A² ω_k² with ω_k = 2 sin(kπ/66)
        let w1 = 2.0 * (PI / 66.0).sin();
        let w2 = 2.0 * (PI / 33.0).sin();
        assert!((e1 - 50.0 * w1 * w1).abs() < 1e-12);
        assert!((e2 - 50.0 * w2 * w2).abs() < 1e-12);
        assert!((e1 - 0.4528).abs() < 1e-3);
        assert!((e2 - 1.807).abs() < 1e-3);
        let eps1 = energy_density(e1, 32).unwrap();
        let eps2 = energy_density(e2, 32).unwrap();
        assert!((eps1 - 0.01415).abs() < 1e-4);
        assert!((eps2 - 0.0565).abs() < 1e-4);
        assert!((eps2 / eps1 - 4.0).abs() < 0.04);
    }

    #[test]
    fn energy_density_basics() {
        assert_eq!(energy_density(0.0, 32).unwrap(), 0.0);
        assert!(energy_density(1.0, 0).is_err());
    }

    #[test]
    fn equilibrium_has_no_force() {
        let p = chain32(2.0);
        let s = ChainState::zeros(32);
        assert!(acceleration(&s, &p).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn two_site_stencil() {
        let s = ChainState::from_interior(&[1.0, 0.0], &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(acceleration(&s, &ModelParams::new(2, 0.0, 0.05)), vec![-2.0, 1.0]);
        assert_eq!(acceleration(&s, &ModelParams::new(2, 1.0, 0.05)), vec![-4.0, 2.0]);
    }

    #[test]
    fn two_site_force_matches_energy_gradient() {
        // Central differences of H with step 1e-6.
        let params = ModelParams::new(2, 1.0, 0.05);
        let base = [1.0, 0.0];
        let eps = 1e-6;
        let mut fd = [0.0; 2];
        for i in 0..2 {
            let mut plus = base;
            let mut minus = base;
            plus[i] += eps;
            minus[i] -= eps;
            let hp = total_energy(&ChainState::from_interior(&plus, &[0.0; 2], 0.0).unwrap(), &params);
            let hm = total_energy(&ChainState::from_interior(&minus, &[0.0; 2], 0.0).unwrap(), &params);
            fd[i] = -(hp - hm) / (2.0 * eps);
        }
        assert!((fd[0] + 4.0).abs() < 1e-6, "{fd:?}");
        assert!((fd[1] - 2.0).abs() < 1e-6, "{fd:?}");
    }

    #[test]
    fn fixed_point_only_advances_time() {
        let p = chain32(0.7);
        let s = ChainState::zeros(32);
        let next = velocity_verlet_step(&s, &p, 1).unwrap();
        assert_eq!(next.q, s.q);
        assert_eq!(next.p, s.p);
        assert_eq!(next.t, 0.05);
    }

    #[test]
    fn harmonic_step_local_error_is_third_order() {
        // A single linear normal mode is an exact harmonic oscillator with
        // frequency ω_k; compare one step against the closed form.
        let n = 8;
        let k = 3;
        let omega = 2.0 * (k as f64 * PI / (2.0 * (n as f64 + 1.0))).sin();
        let ic = InitialCondition::new(k, 1.0);
        let mut errors = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let params = ModelParams::new(n, 0.0, h);
            let s0 = build_initial_condition(&ic, &params).unwrap();
            let s1 = velocity_verlet_step(&s0, &params, 1).unwrap();
            let scale = (omega * h).cos();
            let err = (1..=n)
                .map(|i| (s1.q[i] - s0.q[i] * scale).abs())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        // Halving h should cut the error by ~8 (local O(h^3)) or better.
        assert!(errors[0] / errors[1] > 7.0, "{errors:?}");
        assert!(errors[1] / errors[2] > 7.0, "{errors:?}");
    }

    #[test]
    fn reversibility_thousand_steps() {
        let params = chain32(0.3);
        let s0 = build_initial_condition(&InitialCondition::new(1, 10.0), &params).unwrap();
        let mut it = Integrator::new(s0.clone(), params).unwrap();
        for _ in 0..1000 {
            it.step().unwrap();
        }
        it.reverse();
        for _ in 0..1000 {
            it.step().unwrap();
        }
        let back = it.state();
        for (a, b) in back.q.iter().zip(&s0.q) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in back.p.iter().zip(&s0.p) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(back.q[0], 0.0);
        assert_eq!(back.q[33], 0.0);
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let params = ModelParams::new(4, 1.0, 0.5);
        let s0 = ChainState::from_interior(&[1e5, -1e5, 1e5, -1e5], &[0.0; 4], 0.0).unwrap();
        let mut it = Integrator::new(s0, params).unwrap();
        let err = (0..100).find_map(|_| it.step().err()).expect("should blow up");
        match err {
            Error::IntegrationBlowup { step, .. } => assert!(step >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_run_emits_initial_condition_only() {
        let params = chain32(0.3);
        let mut sink = VecSink::default();
        let summary = integrate(&InitialCondition::new(1, 10.0), &params, 1, &mut sink).unwrap();
        assert_eq!(summary.samples_emitted, 1);
        assert_eq!(sink.times, vec![0.0]);
        assert_eq!(summary.final_state.t, 0.05);
        assert!(integrate(&InitialCondition::new(1, 10.0), &params, 0, &mut sink).is_err());
    }

    #[test]
    fn stride_accounting() {
        let params = chain32(0.3).with_stride(4);
        let mut sink = VecSink::default();
        let summary = integrate(&InitialCondition::new(1, 10.0), &params, 10, &mut sink).unwrap();
        assert_eq!(summary.samples_emitted, 3);
        assert_eq!(samples_for_steps(10, 4), 3);
        assert_eq!(sink.rows.len(), 3 * 64);
        assert!((sink.times[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn short_run_energy_drift() {
        let params = chain32(0.3);
        let mut sink = |_t: f64, _r: &[f64]| Ok(());
        let summary =
            integrate(&InitialCondition::new(1, 10.0), &params, 20_000, &mut sink).unwrap();
        assert!(summary.max_relative_drift < 1e-3);
        assert!((summary.final_state.t - 1000.0).abs() < 1e-8);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(-2.0f64..2.0, n),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
    }

    proptest! {
        #[test]
        fn force_is_negative_energy_gradient((q, p) in arb_state(6), beta in 0.0f64..3.0) {
            let params = ModelParams::new(6, beta, 0.05);
            let state = ChainState::from_interior(&q, &p, 0.0).unwrap();
            let force = acceleration(&state, &params);
            let eps = 1e-5;
            for i in 0..6 {
                let mut plus = state.clone();
                let mut minus = state.clone();
                plus.q[i + 1] += eps;
                minus.q[i + 1] -= eps;
                let fd = -(total_energy(&plus, &params) - total_energy(&minus, &params)) / (2.0 * eps);
                let scale = force[i].abs().max(1.0);
                prop_assert!((fd - force[i]).abs() / scale < 1e-6, "i={} fd={} f={}", i, fd, force[i]);
            }
        }

        #[test]
        fn boundaries_stay_pinned((q, p) in arb_state(5), beta in 0.0f64..3.0, steps in 1usize..200) {
            let params = ModelParams::new(5, beta, 0.02);
            let mut it = Integrator::new(ChainState::from_interior(&q, &p, 0.0).unwrap(), params).unwrap();
            for _ in 0..steps {
                it.step().unwrap();
            }
            prop_assert_eq!(it.state().q[0], 0.0);
            prop_assert_eq!(it.state().q[6], 0.0);
        }
    }
}
