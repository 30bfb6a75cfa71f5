//! Self-check suite run by the `validate` command: each check builds a small
//! generated instance and tests one invariant against a brute-force oracle.

use rand::Rng;
use serde::Serialize;

use crate::analysis::{cost, lloyd};
use crate::ann::{AnnBackend, AnnIndex};
use crate::dataset::{gen_gaussian_mixture, preprocess, Dataset, MixtureSpec};
use crate::error::Result;
use crate::linalg::sq_dist;
use crate::rng;
use crate::sampler_tree::SamplerTree;
use crate::seeding::{
    kmeanspp_exact_observed, qkmeans_with, rho_delta_reference_observed, uniform_seeding, Budget, NormIndex, Proposal,
    RejectionConfig, SeedingObserver, StepEvent,
};

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Fault injection: shrink the oversampling constant so the check must fail.
    pub break_oversampling: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(&ValidateOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("sampler_chi_square", sampler_chi_square),
    ("sampler_update_rebuild", sampler_update_rebuild),
    ("ann_sandwich", ann_sandwich),
    ("ann_monotone", ann_monotone),
    ("rejection_tv_distance", rejection_tv),
    ("oversampling", oversampling),
    ("uniform_chi_square", uniform_chi_square),
    ("rho_delta_consistency", rho_delta_consistency),
    ("centering", centering),
    ("lloyd_monotone", lloyd_monotone),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_all(opts: &ValidateOptions) -> Vec<CheckReport> {
    CHECKS
        .iter()
        .map(|(name, f)| match f(opts) {
            Ok((passed, detail)) => CheckReport { name, passed, detail },
            Err(e) => CheckReport { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}

fn mixture(n: usize, dim: usize, components: usize, seed: u64) -> Result<Dataset> {
    let raw = gen_gaussian_mixture(&MixtureSpec { components, n, dim, center_scale: 4.0, seed })?;
    preprocess(&raw, None)
}

fn chi_square(counts: &[f64], probs: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    counts.iter().zip(probs).map(|(c, p)| (c - total * p).powi(2) / (total * p)).sum()
}

fn sampler_chi_square(o: &ValidateOptions) -> Result<(bool, String)> {
    let tree = SamplerTree::build(&[9.0, 16.0])?;
    let mut r = rng::from_seed(rng::derive(o.seed, 1));
    let mut counts = [0.0; 2];
    for _ in 0..100_000 {
        counts[tree.sample(&mut r)?] += 1.0;
    }
    let chi2 = chi_square(&counts, &[0.36, 0.64]);
    // 99th percentile, 1 degree of freedom
    Ok((chi2 < 6.635, format!("chi2 = {chi2:.3} (critical 6.635)")))
}

fn sampler_update_rebuild(o: &ValidateOptions) -> Result<(bool, String)> {
    let mut r = rng::from_seed(rng::derive(o.seed, 2));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(1..200);
        let mut w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 0.01).collect();
        let mut tree = SamplerTree::build(&w)?;
        for _ in 0..50 {
            let i = r.random_range(0..n);
            w[i] = r.random::<f64>() * 10.0;
            tree.update(i, w[i])?;
        }
        w[0] += 1.0;
        tree.update(0, w[0])?;
        let fresh = SamplerTree::build(&w)?;
        for (a, b) in tree.nodes().iter().zip(fresh.nodes()).skip(1) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    Ok((worst <= 1e-9, format!("max relative node error {worst:.3e}")))
}

fn ann_sandwich(o: &ValidateOptions) -> Result<(bool, String)> {
    let rho = 0.5;
    let ds = mixture(1200, 8, 12, rng::derive(o.seed, 3))?;
    let mut idx = AnnIndex::new(AnnBackend::Lsh, rho, rng::derive(o.seed, 4))?;
    let centers: Vec<usize> = (0..200).map(|i| i * 6).collect();
    for &c in &centers {
        idx.insert(ds.row(c))?;
    }
    let mut violations = 0;
    for p in 0..ds.n() {
        let probe = ds.row(p);
        let truth = centers.iter().map(|&c| sq_dist(probe, ds.row(c))).fold(f64::INFINITY, f64::min);
        let got = idx.query(probe)?.dist_sq;
        if got < truth || got > truth / rho * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations over {} probes", ds.n())))
}

fn ann_monotone(o: &ValidateOptions) -> Result<(bool, String)> {
    let ds = mixture(600, 6, 8, rng::derive(o.seed, 5))?;
    let mut idx = AnnIndex::new(AnnBackend::Lsh, 0.25, rng::derive(o.seed, 6))?.with_row_cache(ds.n());
    let mut bad = 0;
    for probe in [0usize, 17, 333] {
        let mut last = f64::INFINITY;
        for c in (1..ds.n()).step_by(7) {
            idx.insert(ds.row(c))?;
            let d = idx.query_row(probe, ds.row(probe))?.dist_sq;
            if d > last {
                bad += 1;
            }
            last = d;
        }
    }
    Ok((bad == 0, format!("{bad} increases")))
}

fn rejection_tv(o: &ValidateOptions) -> Result<(bool, String)> {
    let raw: Vec<[f64; 2]> = (0..10).map(|i| [(i * i % 7) as f64, (3 * i % 5) as f64 - i as f64 * 0.5]).collect();
    let ds = preprocess(&Dataset::from_rows(&raw)?, None)?;
    let norms = NormIndex::build(&ds)?;
    let c1 = 0;
    let d2: Vec<f64> = (0..10).map(|i| sq_dist(ds.row(i), ds.row(c1))).collect();
    let total: f64 = d2.iter().sum();
    let runs = 20_000;
    let mut counts = [0.0; 10];
    for s in 0..runs {
        let cfg = RejectionConfig {
            m: Budget::Infinite,
            rho: 1.0,
            seed: rng::derive(o.seed, 1000 + s),
            ann: AnnBackend::Exact,
        };
        let res = qkmeans_with(&ds, &norms, 2, &cfg, Some(c1), &mut ())?;
        counts[res.center_indices[1]] += 1.0;
    }
    let tv: f64 = counts.iter().zip(&d2).map(|(c, d)| (c / runs as f64 - d / total).abs()).sum::<f64>() / 2.0;
    Ok((tv <= 0.03, format!("total variation {tv:.4} over {runs} runs (limit 0.03)")))
}

/// Records the center prefix before every step.
#[derive(Default)]
struct Prefixes(Vec<Vec<usize>>);

impl SeedingObserver for Prefixes {
    fn on_step(&mut self, e: &StepEvent<'_>) {
        self.0.push(e.centers[..e.step].to_vec());
    }
}

fn oversampling(o: &ValidateOptions) -> Result<(bool, String)> {
    let shrink = if o.break_oversampling { 0.25 } else { 1.0 };
    let mut violations = 0usize;
    let mut checked = 0usize;
    for inst in 0..10u64 {
        let ds = mixture(300, 5, 6, rng::derive(o.seed, 7000 + inst))?;
        let norms = NormIndex::build(&ds)?;
        let cfg = RejectionConfig {
            m: Budget::Finite(10),
            rho: 1.0,
            seed: rng::derive(o.seed, 8000 + inst),
            ann: AnnBackend::Exact,
        };
        let mut steps = Prefixes::default();
        qkmeans_with(&ds, &norms, 15, &cfg, None, &mut steps)?;
        let n = ds.n() as f64;
        for prefix in &steps.0 {
            let flat = ds.gather(prefix);
            let total = cost(&ds, &flat)?;
            if total == 0.0 {
                continue;
            }
            let kappa = norms.mixture(prefix[0])?;
            let tau = 2.0 * (norms.frob_sq() + n * kappa.c1_norm_sq()) / total * shrink;
            for x in 0..ds.n() {
                let d = prefix.iter().map(|&c| sq_dist(ds.row(x), ds.row(c))).fold(f64::INFINITY, f64::min);
                checked += 1;
                if d / total > tau * kappa.probability(x) * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations over {checked} (row, step) pairs")))
}

fn uniform_chi_square(o: &ValidateOptions) -> Result<(bool, String)> {
    let ds = Dataset::from_rows(&(0..10).map(|i| [i as f64]).collect::<Vec<_>>())?;
    let mut counts = [0.0; 10];
    for s in 0..50_000 {
        counts[uniform_seeding(&ds, 1, rng::derive(o.seed, s))?.center_indices[0]] += 1.0;
    }
    let chi2 = chi_square(&counts, &[0.1; 10]);
    Ok((chi2 < 21.666, format!("chi2 = {chi2:.3} (critical 21.666)")))
}

#[derive(Default)]
struct Masses(Vec<Vec<f64>>);

impl SeedingObserver for Masses {
    fn on_step(&mut self, e: &StepEvent<'_>) {
        if let Some(m) = e.masses {
            self.0.push(m.to_vec());
        }
    }
    fn wants_masses(&self) -> bool {
        true
    }
}

fn rho_delta_consistency(o: &ValidateOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    for inst in 0..10 {
        let ds = mixture(80, 3, 5, rng::derive(o.seed, 9000 + inst))?;
        let seed = rng::derive(o.seed, 9100 + inst);
        let (mut a, mut b) = (Masses::default(), Masses::default());
        kmeanspp_exact_observed(&ds, 10, seed, &mut a)?;
        rho_delta_reference_observed(&ds, 10, 1.0, 0.0, seed, &mut b)?;
        if a.0.len() != b.0.len() {
            mismatched += 1;
            continue;
        }
        for (x, y) in a.0.iter().zip(&b.0) {
            for (p, q) in x.iter().zip(y) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    Ok((mismatched == 0 && worst <= 1e-12, format!("max mass difference {worst:.3e}")))
}

fn centering(o: &ValidateOptions) -> Result<(bool, String)> {
    let raw = gen_gaussian_mixture(&MixtureSpec { components: 4, n: 2000, dim: 7, center_scale: 50.0, seed: o.seed })?;
    let ds = preprocess(&raw, None)?;
    let scale = raw.scale().max(1.0);
    let mean_err = ds.mean().iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    let frob_err = (cost(&ds, &vec![0.0; ds.dim()])? - ds.frob_sq()).abs() / ds.frob_sq();
    Ok((mean_err <= 1e-9 && frob_err <= 1e-9, format!("mean {mean_err:.3e}, frob {frob_err:.3e}")))
}

fn lloyd_monotone(o: &ValidateOptions) -> Result<(bool, String)> {
    let mut bad = 0;
    for inst in 0..20 {
        let ds = mixture(400, 4, 6, rng::derive(o.seed, 9500 + inst))?;
        let mut r = rng::from_seed(rng::derive(o.seed, 9600 + inst));
        let idx = rand::seq::index::sample(&mut r, ds.n(), 6).into_vec();
        let out = lloyd(&ds, &ds.gather(&idx), 50, 0.0)?;
        if out.cost_trace.windows(2).any(|w| w[1] > w[0]) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} non-monotone traces over 20 instances")))
}
