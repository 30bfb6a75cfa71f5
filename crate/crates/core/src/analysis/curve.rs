use serde::Serialize;

use super::{aspect_ratio, lloyd, one_means_cost};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seeding::kmeanspp_exact;
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveConfig {
    pub ks: Vec<usize>,
    pub runs: usize,
    pub lloyd_iters: usize,
    /// Relative-improvement stopping threshold for Lloyd.
    pub lloyd_tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaCurvePoint {
    pub k: usize,
    /// Mean over runs of `cost(X, μ) / cost(X, C)` after Lloyd.
    pub mean_beta: f64,
    /// β of the lowest-cost run.
    pub best_beta: f64,
    /// Mean center aspect ratio after Lloyd.
    pub mean_eta: f64,
    /// Mean center aspect ratio of the seeded (pre-Lloyd) centers.
    pub mean_eta_seeded: f64,
    pub mean_cost: f64,
    pub runs: usize,
}

struct Cell {
    cost: f64,
    eta: f64,
    eta_seeded: f64,
}

/// For each `k`: `runs` independent k-means++ seedings refined by Lloyd,
/// summarized into β and η statistics. `k = 1` has no η and is dropped.
pub fn beta_curve(ds: &Dataset, cfg: &CurveConfig) -> Result<Vec<BetaCurvePoint>> {
    if cfg.runs == 0 {
        return Err(Error::arg("runs must be at least 1"));
    }
    let mut ks = Vec::new();
    for &k in &cfg.ks {
        if k == 1 {
            log::warn!("k = 1 has no center aspect ratio; skipped");
            continue;
        }
        if k == 0 || k > ds.n() {
            return Err(Error::arg(format!("k = {k} must lie in 1..={}", ds.n())));
        }
        ks.push(k);
    }
    let opt1 = one_means_cost(ds);
    let cells: Vec<(usize, usize)> = ks.iter().flat_map(|&k| (0..cfg.runs).map(move |r| (k, r))).collect();
    let results = par::map_indices(cells.len(), |c| -> Result<Cell> {
        let (k, run) = cells[c];
        let seed = rng::derive(rng::derive(cfg.seed, k as u64), run as u64);
        let seeded = kmeanspp_exact(ds, k, seed)?;
        let flat = ds.gather(&seeded.center_indices);
        let eta_seeded = aspect_ratio(&flat, ds.dim())?;
        let refined = lloyd(ds, &flat, cfg.lloyd_iters, cfg.lloyd_tol)?;
        Ok(Cell {
            cost: *refined.cost_trace.last().expect("non-empty trace"),
            eta: aspect_ratio(&refined.centers, ds.dim())?,
            eta_seeded,
        })
    });
    let results: Vec<Cell> = results.into_iter().collect::<Result<_>>()?;
    let beta = |c: f64| if c > 0.0 { opt1 / c } else { f64::INFINITY };
    Ok(ks
        .iter()
        .zip(results.chunks(cfg.runs))
        .map(|(&k, cells)| {
            let m = cells.len() as f64;
            let best = cells.iter().min_by(|a, b| a.cost.total_cmp(&b.cost)).expect("runs >= 1");
            BetaCurvePoint {
                k,
                mean_beta: cells.iter().map(|c| beta(c.cost)).sum::<f64>() / m,
                best_beta: beta(best.cost),
                mean_eta: cells.iter().map(|c| c.eta).sum::<f64>() / m,
                mean_eta_seeded: cells.iter().map(|c| c.eta_seeded).sum::<f64>() / m,
                mean_cost: cells.iter().map(|c| c.cost).sum::<f64>() / m,
                runs: cfg.runs,
            }
        })
        .collect())
}
