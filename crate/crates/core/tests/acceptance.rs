//! End-to-end acceptance run at full scale (N = 32, h = 0.05, A = 10,
//! 4M samples per β). Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1–7 run twice: once on the default worker pool and once on a
//! single worker. Their CSV outputs must match byte for byte (criterion 10),
//! and the single-worker results are the ones judged.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fput_core::chain::{self, InitialCondition, ModelParams};
use fput_core::estimators::{self, KneeOutcome, Method, SweepRow};
use fput_core::experiment::{self, ExperimentConfig, RunManifest};
use fput_core::modes::ModeBasis;
use fput_core::par;
use fput_core::pca::{self, EigenSpectrum, Standardization};
use fput_core::source::TrajectoryMatrix;
use fput_core::tsne::{self, Metric, TsneConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const N: usize = 32;
const AMPLITUDE: f64 = 10.0;
const N_SAMPLES: u64 = 4_000_000;
const RECURRENCE_TIME: f64 = 2e5;
const LARGE_BETA: f64 = 2.1;
/// Integrator stride for the mode-energy time series (every 0.5 time units).
const SERIES_STRIDE: u32 = 10;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(id: u32, title: &'static str) -> Self {
        Verdict {
            id,
            title,
            pass: true,
            detail: String::new(),
        }
    }

    /// Records one sub-check; all must hold for the criterion to pass.
    fn check(&mut self, ok: bool, text: impl AsRef<str>) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(text.as_ref());
        if !ok {
            self.detail.push_str(" [x]");
        }
    }

    fn print(&self) {
        println!(
            "{} criterion {:>2} ({}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn same_beta(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn write_file(path: &Path, text: &str) {
    fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

// ---------------------------------------------------------------- 1

fn initial_energies(dir: &Path) -> Verdict {
    let mut v = Verdict::new(1, "initial energies");
    let basis = ModeBasis::new(N);
    let mut csv = String::from("k,E_k,total_energy,epsilon\n");
    let mut eps = [0.0; 2];
    for (i, (k, e_ref, eps_ref)) in [(1u32, 0.45, 0.01415), (2, 1.8, 0.0565)].into_iter().enumerate() {
        let params = ModelParams::fput32(0.0);
        let state = chain::build_initial_condition(&InitialCondition::new(k, AMPLITUDE), &params).unwrap();
        let e_k = basis.spectrum(&state).unwrap().energy[k as usize - 1];
        let total = chain::total_energy(&state, &ModelParams::fput32(1.0));
        let epsilon = chain::energy_density(e_k, N).unwrap();
        eps[i] = epsilon;
        writeln!(csv, "{k},{e_k:.17e},{total:.17e},{epsilon:.17e}").unwrap();
        v.check(rel(e_k, e_ref) < 0.01, format!("E_{k}={e_k:.5} (ref {e_ref})"));
        v.check(rel(epsilon, eps_ref) < 0.01, format!("eps_{k}={epsilon:.5} (ref {eps_ref})"));
    }
    let ratio = eps[1] / eps[0];
    v.check(rel(ratio, 4.0) < 0.01, format!("eps_2/eps_1={ratio:.4}"));
    write_file(&dir.join("initial_energies.csv"), &csv);
    v
}

// ---------------------------------------------------------------- 2-4

/// Tracked energies of one k = 1 run sampled every `SERIES_STRIDE` steps.
struct Series {
    times: Vec<f64>,
    e1: Vec<f64>,
    /// Largest single even-mode energy in each sample.
    even_max: Vec<f64>,
    /// Summed even-mode energy in each sample.
    even_sum: Vec<f64>,
    drift: f64,
}

fn k1_series(beta: f64) -> Series {
    let params = ModelParams::fput32(beta).with_stride(SERIES_STRIDE);
    let basis = ModeBasis::new(N);
    let mut s = Series {
        times: Vec::new(),
        e1: Vec::new(),
        even_max: Vec::new(),
        even_sum: Vec::new(),
        drift: 0.0,
    };
    let mut sink = |t: f64, row: &[f64]| -> fput_core::Result<()> {
        let spec = basis.spectrum_of_row(t, row);
        s.times.push(t);
        s.e1.push(spec.energy[0]);
        let even = spec.energy.iter().skip(1).step_by(2);
        s.even_max.push(even.clone().copied().fold(0.0, f64::max));
        s.even_sum.push(even.sum());
        Ok(())
    };
    let summary = chain::integrate(&InitialCondition::new(1, AMPLITUDE), &params, N_SAMPLES, &mut sink).unwrap();
    s.drift = summary.max_relative_drift;
    s
}

fn write_series(path: &Path, s: &Series) {
    let mut csv = String::from("t,E_1,E_even_max,E_even_sum\n");
    for i in (0..s.times.len()).step_by(100) {
        writeln!(
            csv,
            "{},{:.17e},{:.17e},{:.17e}",
            s.times[i], s.e1[i], s.even_max[i], s.even_sum[i]
        )
        .unwrap();
    }
    write_file(path, &csv);
}

fn recurrence_and_parity(dir: &Path) -> (Verdict, Verdict) {
    let s = k1_series(0.3);
    write_series(&dir.join("modes_k1_beta0.3.csv"), &s);
    let e0 = s.e1[0];
    let t_end = *s.times.last().unwrap();

    let mut rec = Verdict::new(2, "recurrence at beta=0.3");
    let lo = 0.9 * RECURRENCE_TIME;
    let hi = (1.1 * RECURRENCE_TIME).min(t_end);
    let dip = s.e1.iter().copied().fold(f64::INFINITY, f64::min) / e0;
    let (mut t_peak, mut peak) = (f64::NAN, 0.0);
    for (t, e) in s.times.iter().zip(&s.e1) {
        if *t >= lo && *t <= hi && *e > peak {
            (t_peak, peak) = (*t, *e);
        }
    }
    rec.check(dip < 0.9, format!("min E_1/E_1(0)={dip:.3}"));
    rec.check(
        peak >= 0.9 * e0,
        format!("max E_1/E_1(0)={:.4} at t={t_peak:.0} in [{lo:.0},{hi:.0}]", peak / e0),
    );
    rec.check(s.drift < 1e-3, format!("drift={:.2e}", s.drift));

    let mut parity = Verdict::new(3, "parity conservation");
    let worst = s.even_max.iter().copied().fold(0.0, f64::max);
    parity.check(worst < 1e-6 * e0, format!("max even-mode E/E_1(0)={:.2e}", worst / e0));
    (rec, parity)
}

fn thermalization(dir: &Path) -> Verdict {
    let s = k1_series(3.0);
    write_series(&dir.join("modes_k1_beta3.csv"), &s);
    let e0 = s.e1[0];
    let last = s.e1.len() - 1;
    let tail = s.e1.len() / 20;
    let tail_mean = s.e1[last + 1 - tail..].iter().sum::<f64>() / tail as f64;
    let mut v = Verdict::new(4, "thermalization at beta=3");
    v.check(
        s.e1[last] <= 0.5 * e0,
        format!("E_1(T)/E_1(0)={:.3} (last-5% mean {:.3})", s.e1[last] / e0, tail_mean / e0),
    );
    v.check(
        s.even_sum[last] > 1e-6 * e0,
        format!("even-mode E(T)/E_1(0)={:.3}", s.even_sum[last] / e0),
    );
    v
}

// ---------------------------------------------------------------- 5-7

fn sweep(dir: &Path, k: u32, jobs: usize) -> (Vec<RunManifest>, Vec<SweepRow>) {
    let cfg = ExperimentConfig {
        k,
        n: N,
        amplitude: AMPLITUDE,
        n_samples: N_SAMPLES,
        betas: experiment::parse_beta_grid("0.1:3:0.1").unwrap(),
        output: dir.to_path_buf(),
        store: false,
        analyze: true,
        standardization: Standardization::Correlation,
        jobs,
        ..ExperimentConfig::default()
    };
    let manifests = experiment::run_sweep(&cfg).unwrap();
    let report = experiment::collect_sweep(dir).unwrap();
    assert!(report.missing.is_empty(), "{:?}", report.missing);
    let label = Path::new(dir.file_name().unwrap());
    experiment::write_report(label, &report, &dir.join(experiment::REPORT_FILE)).unwrap();
    (manifests, report.rows)
}

fn m_star(rows: &[SweepRow], beta: f64, method: Method) -> Option<usize> {
    rows.iter()
        .find(|r| same_beta(r.beta, beta) && r.method == method)
        .and_then(|r| r.m_star)
}

fn fmt_m(m: Option<usize>) -> String {
    m.map_or("none".into(), |m| m.to_string())
}

/// Checks that `method` lies in `range` for every β satisfying `select`,
/// listing the β values where it does not.
fn range_check(
    v: &mut Verdict,
    rows: &[SweepRow],
    method: Method,
    select: impl Fn(f64) -> bool,
    range: std::ops::RangeInclusive<usize>,
    label: &str,
) {
    let mut seen: Vec<usize> = Vec::new();
    let mut bad = String::new();
    for r in rows.iter().filter(|r| r.method == method && select(r.beta)) {
        match r.m_star {
            Some(m) if range.contains(&m) => seen.push(m),
            other => {
                write!(bad, " beta={}:{}", r.beta, fmt_m(other)).unwrap();
                seen.extend(other);
            }
        }
    }
    let lo = seen.iter().min().copied();
    let hi = seen.iter().max().copied();
    let mut text = format!(
        "{method} {label} in {}..={} (seen {}..={})",
        range.start(),
        range.end(),
        fmt_m(lo),
        fmt_m(hi)
    );
    if !bad.is_empty() {
        write!(text, ", off at{bad}").unwrap();
    }
    v.check(bad.is_empty() && !seen.is_empty(), text);
}

fn explained_variance(manifests: &[RunManifest]) -> Verdict {
    let mut v = Verdict::new(5, "explained variance");
    let top2 = |beta: f64| {
        manifests
            .iter()
            .find(|m| same_beta(m.beta, beta))
            .and_then(|m| m.analysis.as_ref())
            .map(|a| a.explained_top2)
            .unwrap_or(f64::NAN)
    };
    let e01 = top2(0.1);
    v.check((e01 - 0.99).abs() <= 0.01, format!("PC1+PC2 at beta=0.1 = {:.2}%", 100.0 * e01));
    let low: Vec<f64> = manifests
        .iter()
        .filter(|m| m.beta <= 1.1 + 1e-9)
        .map(|m| top2(m.beta))
        .collect();
    let min = low.iter().copied().fold(f64::INFINITY, f64::min);
    let max = low.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.check(
        low.len() == 11 && min >= 0.70 && max <= 1.0,
        format!("beta<=1.1 range {:.2}%..{:.2}%", 100.0 * min, 100.0 * max),
    );
    v
}

fn k1_estimators(rows: &[SweepRow]) -> Verdict {
    let mut v = Verdict::new(6, "estimators, k=1 sweep");
    range_check(&mut v, rows, Method::PR, |b| b <= 1.1 + 1e-9, 2..=3, "beta<=1.1");
    let pr3 = m_star(rows, 3.0, Method::PR);
    v.check(pr3.is_some_and(|m| (9..=11).contains(&m)), format!("PR(3)={}", fmt_m(pr3)));
    range_check(&mut v, rows, Method::KA, |b| b >= LARGE_BETA - 1e-9, 35..=38, "beta>=2.1");
    range_check(&mut v, rows, Method::KC, |b| b >= LARGE_BETA - 1e-9, 35..=38, "beta>=2.1");
    let ka02 = m_star(rows, 0.2, Method::KA);
    v.check(ka02 == Some(3), format!("KA(0.2)={}", fmt_m(ka02)));
    let ka26 = m_star(rows, 2.6, Method::KA);
    v.check(ka26.is_some_and(|m| (36..=38).contains(&m)), format!("KA(2.6)={}", fmt_m(ka26)));
    v
}

/// E_k dropped below half its start and later, in the last quarter of the
/// run, came back above 0.9 of it.
struct Recurrence {
    beta: f64,
    min_ratio: f64,
    late_max_ratio: f64,
}

impl Recurrence {
    fn recurs(&self) -> bool {
        self.min_ratio < 0.5 && self.late_max_ratio >= 0.9
    }
}

fn recurrence_scan(k: u32, betas: &[f64]) -> Vec<Recurrence> {
    par::map_items(betas, |&beta| {
        let params = ModelParams::fput32(beta).with_stride(SERIES_STRIDE);
        let basis = ModeBasis::new(N);
        let mut e = Vec::new();
        let mut sink = |_t: f64, row: &[f64]| -> fput_core::Result<()> {
            e.push(basis.energy_of_mode(row, k as usize));
            Ok(())
        };
        chain::integrate(&InitialCondition::new(k, AMPLITUDE), &params, N_SAMPLES, &mut sink).unwrap();
        let e0 = e[0];
        let late = e.len() * 3 / 4;
        Recurrence {
            beta,
            min_ratio: e.iter().copied().fold(f64::INFINITY, f64::min) / e0,
            late_max_ratio: e[late..].iter().copied().fold(0.0, f64::max) / e0,
        }
    })
}

fn k2_estimators(dir: &Path, rows: &[SweepRow]) -> Verdict {
    let mut v = Verdict::new(7, "estimators, k=2 sweep");
    let betas = experiment::parse_beta_grid("0.1:3:0.1").unwrap();
    let scan = recurrence_scan(2, &betas);
    let mut csv = String::from("beta,min_ratio,late_max_ratio,recurrent\n");
    for r in &scan {
        writeln!(csv, "{},{:.17e},{:.17e},{}", r.beta, r.min_ratio, r.late_max_ratio, r.recurs()).unwrap();
    }
    write_file(&dir.join("recurrence_k2.csv"), &csv);
    let recurrent: Vec<f64> = scan.iter().filter(|r| r.recurs()).map(|r| r.beta).collect();
    v.check(
        recurrent.len() == 1 && same_beta(recurrent[0], 0.1),
        format!("recurrent at beta={recurrent:?}"),
    );
    range_check(&mut v, rows, Method::PR, |b| b >= LARGE_BETA - 1e-9, 10..=13, "beta>=2.1");
    range_check(&mut v, rows, Method::KA, |b| b >= LARGE_BETA - 1e-9, 36..=39, "beta>=2.1");
    range_check(&mut v, rows, Method::KC, |b| b >= LARGE_BETA - 1e-9, 36..=39, "beta>=2.1");
    let pr01 = m_star(rows, 0.1, Method::PR);
    v.check(pr01.is_some_and(|m| (2..=4).contains(&m)), format!("PR(0.1)={}", fmt_m(pr01)));
    v
}

fn physics(root: &Path, jobs: usize) -> Vec<Verdict> {
    par::with_threads(jobs, || {
        let mut out = Vec::new();
        let dir = root.join("dynamics");
        fs::create_dir_all(&dir).unwrap();
        out.push(initial_energies(&dir));
        let (rec, parity) = recurrence_and_parity(&dir);
        out.push(rec);
        out.push(parity);
        out.push(thermalization(&dir));

        let k1 = root.join("k1");
        fs::create_dir_all(&k1).unwrap();
        let (manifests, rows) = sweep(&k1, 1, jobs);
        out.push(explained_variance(&manifests));
        out.push(k1_estimators(&rows));

        let k2 = root.join("k2");
        fs::create_dir_all(&k2).unwrap();
        let (_, rows) = sweep(&k2, 2, jobs);
        out.push(k2_estimators(&k2, &rows));
        out
    })
}

// ---------------------------------------------------------------- 8

fn mixed_gaussian(rows: usize, cols: usize, seed: u64) -> TrajectoryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<f64> = (0..cols * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let g: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        for j in 0..cols {
            let s: f64 = g.iter().enumerate().map(|(i, gi)| gi * mix[i * cols + j]).sum();
            data.push(s + j as f64);
        }
    }
    TrajectoryMatrix::from_rows(cols, data).unwrap()
}

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize) -> EigenSpectrum {
    let mut l: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            g.exp()
        })
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    EigenSpectrum::new(l)
}

fn spectral_suite() -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new(8, "spectral properties");
    let mut trace_err: f64 = 0.0;
    let mut residual_err: f64 = 0.0;
    let mut recon_err: f64 = 0.0;
    let mut monotone = true;
    for seed in 0..5 {
        let x = mixed_gaussian(4000, 24, seed);
        for mode in [Standardization::Correlation, Standardization::CenterOnly] {
            let r = pca::analyze(&x, mode).unwrap();
            if mode == Standardization::Correlation {
                trace_err = trace_err.max((r.spectrum().total() - 24.0).abs());
            }
            let diff: f64 = r
                .decomposition
                .reconstruct()
                .as_slice()
                .iter()
                .zip(r.matrix.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            recon_err = recon_err.max(diff);
            let c = &r.curve.values;
            monotone &= c.windows(2).all(|w| w[1] <= w[0]) && c[24] == 0.0;
            for m in [0, 1, 5, 12, 23, 24] {
                let direct = pca::mean_squared_residual(&x, &r.stats, mode, &r.decomposition, m).unwrap();
                residual_err = residual_err.max((direct - c[m]).abs() / c[0]);
            }
        }
    }
    v.check(trace_err < 1e-9, format!("|sum lambda - n|={trace_err:.1e}"));
    v.check(residual_err < 1e-6, format!("residual vs eigen tail {residual_err:.1e}"));
    v.check(recon_err < 1e-10, format!("reconstruction {recon_err:.1e}"));
    v.check(monotone, "J_m monotone, J_n=0");

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut pr_ok, mut kc_ok, mut knee_ok) = (true, true, true);
    for _ in 0..500 {
        let n = 3 + (rng.next_u32() % 40) as usize;
        let s = random_spectrum(&mut rng, n);
        let pr = estimators::participation_ratio(&s).unwrap();
        let scaled = EigenSpectrum::new(s.lambda.iter().map(|l| l * 37.5).collect());
        let pr2 = estimators::participation_ratio(&scaled).unwrap();
        pr_ok &= pr.raw >= 1.0 - 1e-12 && pr.raw <= n as f64 + 1e-12 && (pr.raw - pr2.raw).abs() < 1e-12 * pr.raw;
        let counts: Vec<usize> = [0.1, 0.5, 0.7, 1.0, 2.0, 5.0]
            .iter()
            .map(|&t| estimators::kaiser_count(&s, t).map(|e| e.m_star).unwrap_or(0))
            .collect();
        kc_ok &= counts.windows(2).all(|w| w[0] >= w[1]);
        let y = pca::reconstruction_curve(&s).from_m1().to_vec();
        let mapped: Vec<f64> = y.iter().map(|v| 3.7 * v - 12.0).collect();
        let a = estimators::kneedle_points(&y, 1.0).unwrap();
        let b = estimators::kneedle_points(&mapped, 1.0).unwrap();
        knee_ok &= a.estimate().map(|e| e.m_star) == b.estimate().map(|e| e.m_star);
    }
    let line: Vec<f64> = (0..50).map(|m| 50.0 - m as f64).collect();
    let straight = estimators::kneedle_points(&line, 1.0).unwrap() == KneeOutcome::NoKnee;
    v.check(pr_ok, "PR bounds and scale invariance");
    v.check(kc_ok, "KC threshold monotone");
    v.check(knee_ok, "Kneedle affine invariant");
    v.check(straight, "straight line has no knee");
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 10.0, format!("{secs:.1} s"));
    v
}

// ---------------------------------------------------------------- 9

fn tsne_suite() -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new(9, "t-SNE correctness");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gauss = |rng: &mut ChaCha8Rng, n: usize, d: usize| {
        let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
        TrajectoryMatrix::from_rows(d, data).unwrap()
    };

    let (mut perp_err, mut norm_err): (f64, f64) = (0.0, 0.0);
    for metric in [Metric::Euclidean, Metric::Cosine] {
        let x = gauss(&mut rng, 400, 12);
        let c = tsne::calibrate_conditionals(tsne::pairwise_distance(&x, metric).unwrap(), 30.0).unwrap();
        for i in 0..400 {
            let row = c.p.row(i);
            let h: f64 = row.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum();
            perp_err = perp_err.max((h - 30f64.log2()).abs());
            norm_err = norm_err.max((row.iter().sum::<f64>() - 1.0).abs());
        }
        let joint = tsne::symmetrize(c);
        norm_err = norm_err.max((joint.p.total() - 1.0).abs());
        let y = tsne::random_init(400, 1).unwrap();
        let (q, _) = tsne::low_dim_affinities(&y).unwrap();
        norm_err = norm_err.max((q.total() - 1.0).abs());
    }
    v.check(perp_err < 1e-5, format!("perplexity err {perp_err:.1e} bits"));
    v.check(norm_err < 1e-12, format!("normalization err {norm_err:.1e}"));

    let mut grad_err: f64 = 0.0;
    for metric in [Metric::Euclidean, Metric::Cosine] {
        let x = gauss(&mut rng, 20, 6);
        let p = tsne::symmetrize(
            tsne::calibrate_conditionals(tsne::pairwise_distance(&x, metric).unwrap(), 5.0).unwrap(),
        );
        let y: Vec<f64> = tsne::random_init(20, 3).unwrap().iter().map(|v| v * 1e4).collect();
        for alpha in [1.0, 12.0] {
            let g = tsne::gradient(&p, &y, alpha).unwrap();
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 0..y.len() {
                let (mut a, mut b) = (y.clone(), y.clone());
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let fd = (tsne::objective(&p, &a, alpha).unwrap() - tsne::objective(&p, &b, alpha).unwrap()) / 2e-6;
                grad_err = grad_err.max((fd - g[k]).abs() / scale);
            }
        }
    }
    v.check(grad_err < 1e-5, format!("gradient rel err {grad_err:.1e}"));

    let mut kl_min = f64::INFINITY;
    for seed in 0..50 {
        let x = gauss(&mut rng, 30, 4);
        let p = tsne::symmetrize(
            tsne::calibrate_conditionals(tsne::pairwise_distance(&x, Metric::Euclidean).unwrap(), 8.0).unwrap(),
        );
        kl_min = kl_min.min(tsne::embedding_kl(&p, &tsne::random_init(30, seed).unwrap()).unwrap());
    }
    v.check(kl_min >= 0.0, format!("min KL {kl_min:.3}"));

    let n = 1000;
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut data = Vec::with_capacity(n * 64);
    let mut angles = Vec::with_capacity(n);
    for i in 0..n {
        let th = std::f64::consts::TAU * i as f64 / n as f64;
        angles.push(th);
        for d in 0..64 {
            let base = [th.cos(), th.sin()].get(d).copied().unwrap_or(0.0);
            data.push(base + noise.sample(&mut rng));
        }
    }
    let x = TrajectoryMatrix::from_rows(64, data).unwrap();
    let out = tsne::embed(&x, &TsneConfig::default()).unwrap();
    let rho = tsne::circular_rank_correlation(&angles, &tsne::embedding_angles(&out.embedding)).unwrap();
    v.check(rho > 0.95, format!("circle rank correlation {rho:.4}"));
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 120.0, format!("{secs:.1} s"));
    v
}

// ---------------------------------------------------------------- 10

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(csv_files(&path));
        } else if path.extension().is_some_and(|e| e == "csv" || e == "json") {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn determinism(a: &Path, b: &Path) -> Verdict {
    let mut v = Verdict::new(10, "determinism");
    let fa = csv_files(a);
    let fb: Vec<PathBuf> = csv_files(b);
    let rel_a: Vec<&Path> = fa.iter().map(|p| p.strip_prefix(a).unwrap()).collect();
    let rel_b: Vec<&Path> = fb.iter().map(|p| p.strip_prefix(b).unwrap()).collect();
    v.check(rel_a == rel_b, format!("{} vs {} files", fa.len(), fb.len()));
    let differing: Vec<String> = rel_a
        .iter()
        .filter(|r| fs::read(a.join(r)).ok() != fs::read(b.join(r)).ok())
        .map(|r| r.display().to_string())
        .collect();
    v.check(
        differing.is_empty(),
        format!("{} files identical, differing: {differing:?}", fa.len() - differing.len()),
    );
    v
}

fn main() -> ExitCode {
    let wall = Instant::now();
    let pool = tempfile::tempdir().unwrap();
    let single = tempfile::tempdir().unwrap();
    let default_threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);

    let mut verdicts = Vec::new();
    let t = Instant::now();
    physics(pool.path(), default_threads);
    eprintln!("criteria 1-7 on {default_threads} workers: {:.0} s", t.elapsed().as_secs_f64());
    let t = Instant::now();
    verdicts.extend(physics(single.path(), 1));
    eprintln!("criteria 1-7 on 1 worker: {:.0} s", t.elapsed().as_secs_f64());
    verdicts.push(spectral_suite());
    verdicts.push(tsne_suite());
    verdicts.push(determinism(pool.path(), single.path()));

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    for v in &verdicts {
        v.print();
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0} s)",
        verdicts.len() - failed,
        wall.elapsed().as_secs_f64()
    );
    std::io::stdout().flush().ok();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
