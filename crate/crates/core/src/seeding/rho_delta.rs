use std::time::Instant;

use rand::Rng;

use super::{check_k, draw_unchosen, finish, select_by_mass, Diagnostics, SeedingObserver, SeedingResult, StepEvent};
use crate::ann::{AnnBackend, AnnIndex};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par::{self, CHUNK};
use crate::rng;

/// Seeding by explicit enumeration of `(1−δ)·π^L(·|C) + δ/n` at every step,
/// where `π^L` uses the index-reported nearest-center distances. With
/// `rho = 1` the exact backend is used and `delta = 0` reproduces
/// [`kmeanspp_exact`](super::kmeanspp_exact) draw for draw.
pub fn rho_delta_reference(ds: &Dataset, k: usize, rho: f64, delta: f64, seed: u64) -> Result<SeedingResult> {
    rho_delta_reference_observed(ds, k, rho, delta, seed, &mut ())
}

pub fn rho_delta_reference_observed<O: SeedingObserver + ?Sized>(
    ds: &Dataset,
    k: usize,
    rho: f64,
    delta: f64,
    seed: u64,
    observer: &mut O,
) -> Result<SeedingResult> {
    check_k(ds, k)?;
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::arg(format!("delta must lie in [0, 0.5), got {delta}")));
    }
    let backend = if rho == 1.0 { AnnBackend::Exact } else { AnnBackend::Lsh };
    let n = ds.n();
    let start = Instant::now();
    let mut r = rng::from_seed(seed);
    let mut ann = AnnIndex::new(backend, rho, rng::derive(seed, 1))?.with_row_cache(n);
    let mut diagnostics = Diagnostics::default();

    let first = r.random_range(0..n);
    let mut centers = vec![first];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    ann.insert(ds.row(first))?;
    let mut costs = vec![0.0; n];

    for step in 1..k {
        for (i, c) in costs.iter_mut().enumerate() {
            *c = ann.query_row(i, ds.row(i))?.dist_sq;
        }
        let total = par::sum_chunks(n, CHUNK, |rg| costs[rg].iter().sum());
        let u = r.random::<f64>();
        let (next, masses) = if total > 0.0 {
            let uniform = 1.0 / n as f64;
            let masses: Vec<f64> = costs.iter().map(|c| (1.0 - delta) * (c / total) + delta * uniform).collect();
            let next = if delta == 0.0 { select_by_mass(&costs, total, u) } else { select_by_mass(&masses, 1.0, u) };
            (next, observer.wants_masses().then_some(masses))
        } else {
            diagnostics.zero_cost_steps += 1;
            (draw_unchosen(&mut r, &chosen), None)
        };
        centers.push(next);
        chosen[next] = true;
        ann.insert(ds.row(next))?;
        observer.on_step(&StepEvent {
            step,
            centers: &centers,
            chosen: next,
            proposals: 0,
            fell_back: false,
            masses: masses.as_deref(),
        });
    }
    let elapsed = start.elapsed();
    diagnostics.ann_distance_evals = ann.distance_evals();
    finish(ds, centers, vec![0; k - 1], 0, elapsed, diagnostics)
}
