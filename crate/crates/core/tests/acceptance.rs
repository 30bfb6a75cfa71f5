//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qkmeans-core --test acceptance`. Set
//! `QKM_ACCEPTANCE=1,4` to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qkmeans::analysis::{beta_curve, fit_power_law, mle_id, CurveConfig};
use qkmeans::ann::{AnnBackend, AnnIndex};
use qkmeans::dataset::{
    gen_gaussian_mixture, gen_manifold, preprocess, Dataset, ManifoldKind, MixtureSpec, SyntheticSpec,
};
use qkmeans::par;
use qkmeans::sampler_tree::SamplerTree;
use qkmeans::seeding::{
    kmeanspp_exact, kmeanspp_exact_observed, qkmeans_with, rho_delta_reference_observed, Budget, NormIndex,
    RejectionConfig, SeedingObserver, StepEvent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "rejection exactness", Duration::from_secs(10), c1_rejection_exactness),
    (2, "oversampling bound", Duration::from_secs(60), c2_oversampling),
    (3, "fallback probability", Duration::from_secs(60), c3_fallback_probability),
    (4, "scaling law", Duration::from_secs(600), c4_scaling_law),
    (5, "eta log-linearity", Duration::from_secs(600), c5_eta_log_linear),
    (6, "MLE intrinsic dimension", Duration::from_secs(120), c6_mle_id),
    (7, "seeding quality parity", Duration::from_secs(300), c7_quality_parity),
    (8, "near-linear k growth", Duration::from_secs(900), c8_k_growth),
    (9, "sampler fidelity", Duration::from_secs(60), c9_sampler),
    (10, "ANN sandwich", Duration::from_secs(120), c10_ann_sandwich),
    (11, "rho-delta reference consistency", Duration::from_secs(60), c11_rho_delta),
];

fn main() -> ExitCode {
    let only: Option<Vec<u32>> =
        std::env::var("QKM_ACCEPTANCE").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for &(id, name, budget, run) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= budget;
        let passed = out.passed && in_time;
        if !passed {
            failed += 1;
        }
        let timing = if in_time { String::new() } else { format!(" [over budget {budget:?}]") };
        println!(
            "{} [{id}] {name}: {} ({:.1}s){timing}",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if only.as_ref().is_none_or(|o| o.contains(&12)) {
        println!("SKIP [12] real-data scaling reproduction: optional, needs a user-supplied dataset");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

// ---------------------------------------------------------------- oracles

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force `min_c ‖x − c‖²` for every row.
fn brute_costs(ds: &Dataset, centers: &[usize]) -> Vec<f64> {
    (0..ds.n()).map(|i| centers.iter().map(|&c| sq(ds.row(i), ds.row(c))).fold(f64::INFINITY, f64::min)).collect()
}

/// `κ(x|c₁)` straight from its definition.
fn kappa(ds: &Dataset, c1: usize) -> Vec<f64> {
    let norms: Vec<f64> = ds.rows().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let c1n = norms[c1];
    let denom: f64 = norms.iter().sum::<f64>() + ds.n() as f64 * c1n;
    norms.iter().map(|x| (x + c1n) / denom).collect()
}

fn centered(raw: Dataset) -> Dataset {
    preprocess(&raw, None).unwrap()
}

fn mixture(components: usize, n: usize, dim: usize, center_scale: f64, seed: u64) -> Dataset {
    centered(gen_gaussian_mixture(&MixtureSpec { components, n, dim, center_scale, seed }).unwrap())
}

fn cube(d: usize, big_d: usize, n: usize, seed: u64) -> Dataset {
    let spec = SyntheticSpec { intrinsic_dim: d, ambient_dim: big_d, n, kind: ManifoldKind::UnitCube, seed };
    centered(gen_manifold(&spec).unwrap())
}

#[derive(Default)]
struct Prefixes(Vec<Vec<usize>>);

impl SeedingObserver for Prefixes {
    fn on_step(&mut self, e: &StepEvent<'_>) {
        self.0.push(e.centers[..e.step].to_vec());
    }
}

#[derive(Default)]
struct Masses(Vec<Vec<f64>>);

impl SeedingObserver for Masses {
    fn on_step(&mut self, e: &StepEvent<'_>) {
        self.0.push(e.masses.expect("masses requested").to_vec());
    }
    fn wants_masses(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------- criteria

fn c1_rejection_exactness() -> Outcome {
    let pts = [
        [0.0, 0.0],
        [1.0, 0.5],
        [2.0, -1.0],
        [-1.5, 2.0],
        [3.0, 3.0],
        [-2.0, -2.5],
        [0.5, 4.0],
        [4.0, -0.5],
        [-3.0, 1.0],
        [1.5, 1.5],
    ];
    let ds = centered(Dataset::from_rows(&pts).unwrap());
    let norms = NormIndex::build(&ds).unwrap();
    let c1 = 3;
    let costs = brute_costs(&ds, &[c1]);
    let total: f64 = costs.iter().sum();
    let runs = 100_000u64;
    let mut counts = [0u64; 10];
    for s in 0..runs {
        let cfg = RejectionConfig { m: Budget::Infinite, rho: 1.0, seed: s, ann: AnnBackend::Exact };
        let res = qkmeans_with(&ds, &norms, 2, &cfg, Some(c1), &mut ()).unwrap();
        counts[res.center_indices[1]] += 1;
    }
    let tv = counts.iter().zip(&costs).map(|(&c, p)| (c as f64 / runs as f64 - p / total).abs()).sum::<f64>() / 2.0;
    outcome(tv <= 0.02, format!("TV = {tv:.4} over {runs} runs (limit 0.02)"))
}

fn c2_oversampling() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for inst in 0..200u64 {
        let n = r.random_range(20..=1000);
        let dim = r.random_range(1..=12);
        let ds = match inst % 4 {
            0 => mixture(r.random_range(1..=12), n, dim, r.random_range(0.5..20.0), inst),
            1 => cube(dim.min(3), dim.max(3), n, inst),
            2 => {
                // heavy tail: a few far outliers
                let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect();
                for row in rows.iter_mut().take(3) {
                    row.iter_mut().for_each(|v| *v *= 1e3);
                }
                centered(Dataset::from_rows(&rows).unwrap())
            }
            _ => mixture(3, n, dim, 0.0, inst),
        };
        let k = r.random_range(2..=25.min(n));
        let norms = NormIndex::build(&ds).unwrap();
        let cfg = RejectionConfig { m: Budget::Finite(5), rho: 1.0, seed: inst, ann: AnnBackend::Exact };
        let mut steps = Prefixes::default();
        qkmeans_with(&ds, &norms, k, &cfg, None, &mut steps).unwrap();
        let nf = ds.n() as f64;
        let frob: f64 = ds.rows().map(|x| x.iter().map(|v| v * v).sum::<f64>()).sum();
        for prefix in &steps.0 {
            let costs = brute_costs(&ds, prefix);
            let total: f64 = costs.iter().sum();
            if total == 0.0 {
                continue;
            }
            let kap = kappa(&ds, prefix[0]);
            let c1n: f64 = ds.row(prefix[0]).iter().map(|v| v * v).sum();
            let tau = 2.0 * (frob + nf * c1n) / total;
            for (c, k) in costs.iter().zip(&kap) {
                pairs += 1;
                let ratio = (c / total) / (tau * k);
                worst = worst.max(ratio);
                if ratio > 1.0 + 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {pairs} (row, step) pairs; max pi/(tau*kappa) = {worst:.4}"),
    )
}

fn c3_fallback_probability() -> Outcome {
    let ds = mixture(12, 2000, 6, 6.0, 33);
    let norms = NormIndex::build(&ds).unwrap();
    let nf = ds.n() as f64;
    let frob: f64 = norms.frob_sq();
    let cases =
        [(1u32, 20usize, AnnBackend::Exact, 1.0), (3, 20, AnnBackend::Exact, 1.0), (5, 100, AnnBackend::Lsh, 0.5)];
    let mut lines = Vec::new();
    let mut ok = true;
    for (m, k, ann, rho) in cases {
        let target_steps = 10_000usize;
        let runs = target_steps.div_ceil(k - 1);
        let (mut steps, mut fallbacks) = (0usize, 0usize);
        let (mut bound_sum, mut var_sum) = (0.0, 0.0);
        for s in 0..runs as u64 {
            struct Track<'a> {
                ds: &'a Dataset,
                mind: Vec<f64>,
                taus: Vec<f64>,
                fell: Vec<bool>,
                scale: f64,
            }
            impl SeedingObserver for Track<'_> {
                fn on_step(&mut self, e: &StepEvent<'_>) {
                    if self.mind.is_empty() {
                        let c1 = e.centers[0];
                        self.mind = (0..self.ds.n()).map(|i| sq(self.ds.row(i), self.ds.row(c1))).collect();
                    }
                    let total: f64 = self.mind.iter().sum();
                    self.taus.push(self.scale / total);
                    self.fell.push(e.fell_back);
                    for (i, m) in self.mind.iter_mut().enumerate() {
                        *m = m.min(sq(self.ds.row(i), self.ds.row(e.chosen)));
                    }
                }
            }
            let cfg = RejectionConfig { m: Budget::Finite(m), rho, seed: 1000 + s, ann };
            // τ numerator 2ρ⁻¹(‖X‖²_F + n‖c₁‖²) depends on c₁; fix c₁ per run to know it up front
            let c1 = (s as usize * 7919) % ds.n();
            let c1n: f64 = ds.row(c1).iter().map(|v| v * v).sum();
            let mut t = Track {
                ds: &ds,
                mind: Vec::new(),
                taus: Vec::new(),
                fell: Vec::new(),
                scale: 2.0 / rho * (frob + nf * c1n),
            };
            qkmeans_with(&ds, &norms, k, &cfg, Some(c1), &mut t).unwrap();
            for (tau, fell) in t.taus.iter().zip(&t.fell) {
                let b = (-(m as f64) * (k as f64).ln() / tau).exp().min(1.0);
                bound_sum += b;
                var_sum += b * (1.0 - b);
                steps += 1;
                fallbacks += *fell as usize;
            }
        }
        let freq = fallbacks as f64 / steps as f64;
        let bound = bound_sum / steps as f64;
        let sigma = var_sum.sqrt() / steps as f64;
        let pass = freq <= bound + 3.0 * sigma;
        ok &= pass;
        lines.push(format!("(m={m},k={k}) freq {freq:.4} <= bound {bound:.4} + 3σ {:.4}: {pass}", 3.0 * sigma));
    }
    outcome(ok, lines.join("; "))
}

struct Sweep {
    d: usize,
    eps_hat: f64,
    r2_beta: f64,
    eta_slope: f64,
    r2_eta: f64,
}

fn scaling_sweep() -> &'static Vec<Sweep> {
    static SWEEP: std::sync::OnceLock<Vec<Sweep>> = std::sync::OnceLock::new();
    SWEEP.get_or_init(|| {
        let ks = vec![4, 8, 16, 32, 64, 128, 256];
        [2usize, 4, 8]
            .iter()
            .map(|&d| {
                let ds = cube(d, 50, 20_000, 400 + d as u64);
                let cfg = CurveConfig { ks: ks.clone(), runs: 5, lloyd_iters: 20, lloyd_tol: 1e-4, seed: d as u64 };
                let pts = beta_curve(&ds, &cfg).unwrap();
                let kf: Vec<f64> = pts.iter().map(|p| p.k as f64).collect();
                let beta = fit_power_law(&kf, &pts.iter().map(|p| p.mean_beta).collect::<Vec<_>>()).unwrap();
                let eta = fit_power_law(&kf, &pts.iter().map(|p| p.mean_eta).collect::<Vec<_>>()).unwrap();
                Sweep { d, eps_hat: beta.slope, r2_beta: beta.r_squared, eta_slope: eta.slope, r2_eta: eta.r_squared }
            })
            .collect()
    })
}

fn c4_scaling_law() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for s in scaling_sweep() {
        let want = 2.0 / s.d as f64;
        let pass = (s.eps_hat - want).abs() <= 0.25 * want && s.r2_beta >= 0.9;
        ok &= pass;
        lines.push(format!("d={}: eps_hat {:.3} (2/d {want:.3}), R² {:.4}", s.d, s.eps_hat, s.r2_beta));
    }
    outcome(ok, lines.join("; "))
}

fn c5_eta_log_linear() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for s in scaling_sweep() {
        let pass = s.r2_eta >= 0.8 && s.eta_slope > 0.0;
        ok &= pass;
        lines.push(format!("d={}: slope {:.3}, R² {:.4}", s.d, s.eta_slope, s.r2_eta));
    }
    outcome(ok, lines.join("; "))
}

fn c6_mle_id() -> Outcome {
    let hand = Dataset::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
    let hand_est = mle_id(&hand, 2, None, 0).unwrap();
    let mut ok = (hand_est - 1.6064).abs() <= 1e-4;
    let mut lines = vec![format!("hand example {hand_est:.5}")];
    for d in [2usize, 5, 10] {
        let ds = cube(d, 20, 10_000, 600 + d as u64);
        let est = mle_id(&ds, 20, None, 0).unwrap();
        let pass = (est - d as f64).abs() <= 0.2 * d as f64;
        ok &= pass;
        lines.push(format!("d={d}: {est:.3}"));
    }
    outcome(ok, lines.join("; "))
}

fn c7_quality_parity() -> Outcome {
    let ds = mixture(50, 50_000, 32, 1.0, 7);
    let norms = NormIndex::build(&ds).unwrap();
    let k = 50;
    let seeds = 20u64;
    let (mut q, mut e) = (0.0, 0.0);
    for s in 0..seeds {
        let cfg = RejectionConfig { m: Budget::Finite(10), rho: 0.5, seed: s, ann: AnnBackend::Lsh };
        q += qkmeans_with(&ds, &norms, k, &cfg, None, &mut ()).unwrap().final_cost;
        e += kmeanspp_exact(&ds, k, s).unwrap().final_cost;
    }
    let ratio = q / e;
    outcome(
        ratio <= 1.2,
        format!("mean qkmeans cost / mean k-means++ cost = {ratio:.4} over {seeds} seeds (limit 1.2)"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

fn c8_k_growth() -> Outcome {
    let spec = SyntheticSpec { intrinsic_dim: 4, ambient_dim: 32, n: 100_000, kind: ManifoldKind::UnitCube, seed: 8 };
    let ds = centered(gen_manifold(&spec).unwrap());
    let norms = NormIndex::build(&ds).unwrap();
    let ks = [64usize, 128, 256, 512, 1024];
    let reps = 3u64;
    let (mut tq, mut te) = (Vec::new(), Vec::new());
    par::run_sequential(|| {
        for &k in &ks {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for s in 0..reps {
                let cfg = RejectionConfig { m: Budget::Finite(10), rho: 0.5, seed: s, ann: AnnBackend::Lsh };
                a.push(qkmeans_with(&ds, &norms, k, &cfg, None, &mut ()).unwrap().elapsed.as_secs_f64());
                b.push(kmeanspp_exact(&ds, k, s).unwrap().elapsed.as_secs_f64());
            }
            tq.push(median(a));
            te.push(median(b));
        }
    });
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let fq = fit_power_law(&kf, &tq).unwrap();
    let fe = fit_power_law(&kf, &te).unwrap();
    let ratio = te[4] / tq[4];
    outcome(
        fq.slope <= 1.5 && fe.slope >= 0.9 && ratio >= 5.0,
        format!(
            "qkmeans exponent {:.3} (limit 1.5), k-means++ exponent {:.3} (min 0.9), time ratio at k=1024 {ratio:.1}x (min 5x); qkmeans {:.0} ms, k-means++ {:.0} ms",
            fq.slope,
            fe.slope,
            tq[4] * 1e3,
            te[4] * 1e3
        ),
    )
}

fn c9_sampler() -> Outcome {
    let tree = SamplerTree::build(&[9.0, 16.0]).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let draws = 100_000;
    let ones = (0..draws).filter(|_| tree.sample(&mut r).unwrap() == 1).count() as f64;
    let zeros = draws as f64 - ones;
    let chi2 = (zeros - 0.36 * draws as f64).powi(2) / (0.36 * draws as f64)
        + (ones - 0.64 * draws as f64).powi(2) / (0.64 * draws as f64);

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(1..300);
        let mut w: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 5.0 + 1e-3).collect();
        let mut t = SamplerTree::build(&w).unwrap();
        for _ in 0..r.random_range(1..200) {
            let i = r.random_range(0..n);
            w[i] = if r.random::<f64>() < 0.1 { 0.0 } else { r.random::<f64>() * 5.0 };
            t.update(i, w[i]).unwrap();
        }
        if w.iter().all(|&x| x == 0.0) {
            continue;
        }
        let fresh = SamplerTree::build(&w).unwrap();
        for (a, b) in t.nodes().iter().zip(fresh.nodes()).skip(1) {
            if *b != 0.0 {
                worst = worst.max((a - b).abs() / b.abs());
            } else {
                worst = worst.max(a.abs());
            }
        }
    }
    outcome(
        chi2 < 6.635 && worst <= 1e-9,
        format!("chi2 {chi2:.3} (critical 6.635 at 0.01); max update/rebuild relative error {worst:.2e}"),
    )
}

fn c10_ann_sandwich() -> Outcome {
    let rho = 0.5;
    let mut violations = 0usize;
    let mut probes = 0usize;
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + inst);
        let dim = r.random_range(2..=24);
        let ds = mixture(r.random_range(1..=20), 2000, dim, r.random_range(0.5..10.0), inst);
        let mut idx = AnnIndex::new(AnnBackend::Lsh, rho, inst).unwrap();
        let n_centers = r.random_range(1..=1000);
        let centers: Vec<usize> = (0..n_centers).map(|_| r.random_range(0..ds.n())).collect();
        for &c in &centers {
            idx.insert(ds.row(c)).unwrap();
        }
        for _ in 0..1000 {
            let p = r.random_range(0..ds.n());
            let truth = centers.iter().map(|&c| sq(ds.row(p), ds.row(c))).fold(f64::INFINITY, f64::min);
            let got = idx.query(ds.row(p)).unwrap();
            let recomputed = sq(ds.row(p), idx.center(got.ordinal));
            probes += 1;
            if truth > 0.0 {
                worst = worst.max(got.dist_sq / truth);
            }
            // the index and this oracle sum coordinates in different orders
            let tol = 1e-12 * truth.max(f64::MIN_POSITIVE);
            let off = (recomputed - got.dist_sq).abs() > 1e-12 * recomputed.max(f64::MIN_POSITIVE);
            if got.dist_sq < truth - tol || got.dist_sq > truth / rho + tol || off {
                violations += 1;
            }
        }
    }

    // monotone under insertions, repeated probes of fixed rows
    let ds = mixture(10, 3000, 16, 3.0, 99);
    let mut idx = AnnIndex::new(AnnBackend::Lsh, 0.25, 5).unwrap().with_row_cache(ds.n());
    let mut increases = 0;
    let mut last = [f64::INFINITY; 5];
    for c in (0..ds.n()).step_by(11) {
        idx.insert(ds.row(c)).unwrap();
        for (slot, probe) in [1usize, 500, 1234, 2000, 2999].into_iter().enumerate() {
            let d = idx.query_row(probe, ds.row(probe)).unwrap().dist_sq;
            if d > last[slot] {
                increases += 1;
            }
            last[slot] = d;
        }
    }
    outcome(
        violations == 0 && increases == 0,
        format!(
            "{violations} sandwich violations over {probes} probes (max ratio {worst:.3}, limit {:.1}); {increases} monotonicity breaks",
            1.0 / rho
        ),
    )
}

fn c11_rho_delta() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    let mut structural = 0usize;
    for inst in 0..30u64 {
        let n = 10 + (inst as usize * 13) % 60;
        let ds = mixture(4, n, 3, 2.0, 1100 + inst);
        let k = 2 + inst as usize % 8;
        let (mut a, mut b) = (Masses::default(), Masses::default());
        let ra = kmeanspp_exact_observed(&ds, k, inst, &mut a).unwrap();
        let rb = rho_delta_reference_observed(&ds, k, 1.0, 0.0, inst, &mut b).unwrap();
        if ra.center_indices != rb.center_indices || a.0.len() != b.0.len() {
            structural += 1;
            continue;
        }
        for (x, y) in a.0.iter().zip(&b.0) {
            for (p, q) in x.iter().zip(y) {
                worst = worst.max((p - q).abs());
                compared += 1;
            }
        }
    }
    outcome(
        structural == 0 && worst <= 1e-12,
        format!("max |mass difference| {worst:.2e} over {compared} masses; {structural} runs diverged"),
    )
}
