use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qkmeans::analysis::{beta_curve, fit_power_law, mle_id, CurveConfig, PowerLawFit};
use qkmeans::dataset::{
    gen_gaussian_mixture, gen_manifold, inject_noise, preprocess, read_bin, read_csv, save, Dataset, Format, JlConfig,
    ManifoldKind, MixtureSpec, SyntheticSpec,
};
use qkmeans::seeding::{
    kmeanspp_exact, qkmeans_with, rho_delta_reference, uniform_seeding, Diagnostics, NormIndex, RejectionConfig,
    SeedingResult,
};
use qkmeans::validate::{run_all, ValidateOptions};
use qkmeans::{par, rng};
use serde::Serialize;

use crate::args::{
    Algo, BenchArgs, DataArgs, GenArgs, GenKind, IdArgs, RejectArgs, ScalingArgs, SeedArgs, ValidateArgs,
};
use crate::manifest::RunManifest;

const JL_STREAM: u64 = 0x4a4c;
const NOISE_STREAM: u64 = 0x4e53;

struct Loaded {
    ds: Dataset,
    raw: Vec<u8>,
    name: String,
}

/// Read, hash, project and center the input, then inject noise if asked.
fn load(data: &DataArgs, jl_k: usize, seed: u64) -> Result<Loaded> {
    let raw = fs::read(&data.input).with_context(|| format!("reading {}", data.input.display()))?;
    let format = data.format.unwrap_or_else(|| Format::from_path(&data.input));
    let parsed = match format {
        Format::Csv => read_csv(&raw[..]),
        Format::Bin => read_bin(&raw[..]),
    }
    .with_context(|| format!("parsing {}", data.input.display()))?;
    let jl = data.jl_eps.map(|eps| JlConfig { eps, k: jl_k, seed: rng::derive(seed, JL_STREAM) });
    let mut ds = preprocess(&parsed, jl.as_ref())?;
    if data.nsr != 0.0 {
        ds = inject_noise(&ds, data.nsr, rng::derive(seed, NOISE_STREAM))?;
    }
    let name = data.input.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(Loaded { ds, raw, name })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn run_algo(
    ds: &Dataset,
    norms: Option<&NormIndex>,
    algo: Algo,
    k: usize,
    r: &RejectArgs,
    seed: u64,
) -> Result<SeedingResult> {
    Ok(match algo {
        Algo::Qkmeans => {
            let cfg = RejectionConfig { m: r.m, rho: r.rho, seed, ann: r.ann };
            let owned;
            let norms = match norms {
                Some(n) => n,
                None => {
                    owned = NormIndex::build(ds)?;
                    &owned
                }
            };
            qkmeans_with(ds, norms, k, &cfg, None, &mut ())?
        }
        Algo::Kmeanspp => kmeanspp_exact(ds, k, seed)?,
        Algo::Uniform => uniform_seeding(ds, k, seed)?,
        Algo::RhoDelta => rho_delta_reference(ds, k, r.rho, r.delta, seed)?,
    })
}

#[derive(Serialize)]
struct SeedReport<'a> {
    manifest: RunManifest,
    algo: Algo,
    k: usize,
    center_indices: &'a [usize],
    center_coords: &'a [Vec<f64>],
    final_cost: f64,
    per_step_proposals: &'a [u64],
    fallback_count: usize,
    elapsed_ns: u128,
    diagnostics: &'a Diagnostics,
}

pub fn seed(a: &SeedArgs, threads: Option<usize>) -> Result<()> {
    if a.k == 0 {
        bail!(qkmeans::Error::InvalidArgument("k must be at least 1".into()));
    }
    let data = load(&a.data, a.k, a.seed)?;
    let res = run_algo(&data.ds, None, a.algo, a.k, &a.reject, a.seed)?;
    let report = SeedReport {
        manifest: RunManifest::new("seed", a, threads, Some(&data.raw)),
        algo: a.algo,
        k: a.k,
        center_indices: &res.center_indices,
        center_coords: &res.center_coords,
        final_cost: res.final_cost,
        per_step_proposals: &res.per_step_proposals,
        fallback_count: res.fallback_count,
        elapsed_ns: res.elapsed.as_nanos(),
        diagnostics: &res.diagnostics,
    };
    write_json(&a.out, &report)
}

#[derive(Debug, Clone, Serialize)]
struct BenchRow {
    dataset: String,
    algo: Algo,
    k: usize,
    seed: u64,
    time_ms: f64,
    cost: f64,
}

#[derive(Serialize)]
struct BenchCell {
    algo: Algo,
    k: usize,
    runs: usize,
    mean_time_ms: f64,
    median_time_ms: f64,
    mean_cost: f64,
}

#[derive(Serialize)]
struct TimeFit {
    algo: Algo,
    fit: PowerLawFit,
}

#[derive(Serialize)]
struct BenchSummary {
    manifest: RunManifest,
    cells: Vec<BenchCell>,
    /// Median time against k, per algorithm, when at least three k are given.
    time_vs_k: Vec<TimeFit>,
}

pub fn bench(a: &BenchArgs, threads: Option<usize>) -> Result<()> {
    if a.runs == 0 {
        bail!(qkmeans::Error::InvalidArgument("runs must be at least 1".into()));
    }
    let kmax = a.ks.iter().copied().max().unwrap_or(1);
    let data = load(&a.data, kmax, a.seed)?;
    let norms = if a.algo.contains(&Algo::Qkmeans) { Some(NormIndex::build(&data.ds)?) } else { None };
    let cells: Vec<(Algo, usize, u64)> = a
        .algo
        .iter()
        .flat_map(|&algo| a.ks.iter().flat_map(move |&k| (0..a.runs).map(move |r| (algo, k, a.seed + r))))
        .collect();
    let rows = par::map_indices(cells.len(), |i| -> Result<BenchRow> {
        let (algo, k, seed) = cells[i];
        let res = run_algo(&data.ds, norms.as_ref(), algo, k, &a.reject, seed)?;
        Ok(BenchRow {
            dataset: data.name.clone(),
            algo,
            k,
            seed,
            time_ms: res.elapsed.as_secs_f64() * 1e3,
            cost: res.final_cost,
        })
    });
    let rows: Vec<BenchRow> = rows.into_iter().collect::<Result<_>>()?;
    let manifest = RunManifest::new("bench", a, threads, Some(&data.raw));

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# {}", serde_json::to_string(&manifest)?)?;
    let mut csv = csv::Writer::from_writer(w);
    for row in &rows {
        csv.serialize(row)?;
    }
    csv.flush()?;

    let mut out_cells = Vec::new();
    let mut time_vs_k = Vec::new();
    for &algo in &a.algo {
        let mut medians = Vec::new();
        for &k in &a.ks {
            let group: Vec<&BenchRow> = rows.iter().filter(|r| r.algo == algo && r.k == k).collect();
            let mut times: Vec<f64> = group.iter().map(|r| r.time_ms).collect();
            times.sort_by(f64::total_cmp);
            let m = times.len();
            let median = if m % 2 == 1 { times[m / 2] } else { (times[m / 2 - 1] + times[m / 2]) / 2.0 };
            medians.push(median);
            out_cells.push(BenchCell {
                algo,
                k,
                runs: m,
                mean_time_ms: times.iter().sum::<f64>() / m as f64,
                median_time_ms: median,
                mean_cost: group.iter().map(|r| r.cost).sum::<f64>() / m as f64,
            });
        }
        let ks: Vec<f64> = a.ks.iter().map(|&k| k as f64).collect();
        if let Ok(fit) = fit_power_law(&ks, &medians) {
            time_vs_k.push(TimeFit { algo, fit });
        }
    }
    write_json(&summary_path(&a.out), &BenchSummary { manifest, cells: out_cells, time_vs_k })
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct ScalingReport {
    manifest: RunManifest,
    /// Fitted β exponent (mean over runs).
    eps_hat: f64,
    r2_beta: f64,
    ci_beta: (f64, f64),
    beta_fit: PowerLawFit,
    /// Same fit using the best-cost run per k.
    beta_fit_best: PowerLawFit,
    eta_slope: f64,
    r2_eta: f64,
    eta_fit: PowerLawFit,
    eta_seeded_fit: PowerLawFit,
    points: Vec<qkmeans::analysis::BetaCurvePoint>,
}

pub fn scaling(a: &ScalingArgs, threads: Option<usize>) -> Result<()> {
    let usable = a.ks.iter().filter(|&&k| k >= 2).count();
    if usable < 3 {
        bail!(qkmeans::Error::InvalidArgument(format!("scaling needs at least 3 values of k >= 2, got {usable}")));
    }
    let kmax = a.ks.iter().copied().max().unwrap_or(2);
    let data = load(&a.data, kmax, a.seed)?;
    let cfg = CurveConfig {
        ks: a.ks.clone(),
        runs: a.runs,
        lloyd_iters: a.lloyd_iters,
        lloyd_tol: a.lloyd_tol,
        seed: a.seed,
    };
    let points = beta_curve(&data.ds, &cfg)?;
    let ks: Vec<f64> = points.iter().map(|p| p.k as f64).collect();
    let col = |f: fn(&qkmeans::analysis::BetaCurvePoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    let beta_fit = fit_power_law(&ks, &col(|p| p.mean_beta)).context("fitting beta")?;
    let beta_fit_best = fit_power_law(&ks, &col(|p| p.best_beta)).context("fitting best-of beta")?;
    let eta_fit = fit_power_law(&ks, &col(|p| p.mean_eta)).context("fitting eta")?;
    let eta_seeded_fit = fit_power_law(&ks, &col(|p| p.mean_eta_seeded)).context("fitting seeded eta")?;
    let report = ScalingReport {
        manifest: RunManifest::new("scaling", a, threads, Some(&data.raw)),
        eps_hat: beta_fit.slope,
        r2_beta: beta_fit.r_squared,
        ci_beta: beta_fit.ci95_slope,
        beta_fit,
        beta_fit_best,
        eta_slope: eta_fit.slope,
        r2_eta: eta_fit.r_squared,
        eta_fit,
        eta_seeded_fit,
        points,
    };
    write_json(&a.out, &report)
}

#[derive(Serialize)]
struct IdRow {
    k_nn: usize,
    estimates: Vec<f64>,
    mean: f64,
}

#[derive(Serialize)]
struct IdReport {
    manifest: RunManifest,
    per_k: Vec<IdRow>,
    grand_mean: f64,
}

pub fn id(a: &IdArgs, threads: Option<usize>) -> Result<()> {
    if a.repeats == 0 {
        bail!(qkmeans::Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if let Some(&k) = a.k_nn.iter().find(|&&k| k < 2) {
        bail!(qkmeans::Error::InvalidArgument(format!("k_nn must be at least 2, got {k}")));
    }
    let data = load(&a.data, 2, a.seed)?;
    let mut per_k = Vec::new();
    for &k in &a.k_nn {
        let estimates = (0..a.repeats)
            .map(|r| mle_id(&data.ds, k, a.subsample, rng::derive(a.seed, r as u64)))
            .collect::<qkmeans::Result<Vec<_>>>()?;
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        per_k.push(IdRow { k_nn: k, estimates, mean });
    }
    let grand_mean = per_k.iter().map(|r| r.mean).sum::<f64>() / per_k.len() as f64;
    write_json(&a.out, &IdReport { manifest: RunManifest::new("id", a, threads, Some(&data.raw)), per_k, grand_mean })
}

#[derive(Serialize)]
struct ValidateReport {
    manifest: RunManifest,
    passed: bool,
    checks: Vec<qkmeans::validate::CheckReport>,
}

pub fn validate(a: &ValidateArgs, threads: Option<usize>) -> Result<bool> {
    let checks = run_all(&ValidateOptions { seed: a.seed, break_oversampling: a.break_oversampling });
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}", c.name);
    }
    if let Some(out) = &a.out {
        write_json(out, &ValidateReport { manifest: RunManifest::new("validate", a, threads, None), passed, checks })?;
    }
    Ok(passed)
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let ds = match a.kind {
        GenKind::Cube | GenKind::Sphere => gen_manifold(&SyntheticSpec {
            intrinsic_dim: a.d,
            ambient_dim: a.dim,
            n: a.n,
            kind: if a.kind == GenKind::Cube { ManifoldKind::UnitCube } else { ManifoldKind::UnitSphere },
            seed: a.seed,
        })?,
        GenKind::Mixture => gen_gaussian_mixture(&MixtureSpec {
            components: a.components,
            n: a.n,
            dim: a.dim,
            center_scale: a.center_scale,
            seed: a.seed,
        })?,
    };
    let format = a.format.unwrap_or_else(|| Format::from_path(&a.out));
    save(&ds, &a.out, format).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}
