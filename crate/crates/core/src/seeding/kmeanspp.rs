use std::time::Instant;

use rand::Rng;

use super::{check_k, draw_unchosen, finish, select_by_mass, Diagnostics, SeedingObserver, SeedingResult, StepEvent};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::linalg::sq_dist;
use crate::par::{self, CHUNK};
use crate::rng;

/// Exact D² seeding: the first center is uniform, each later one is drawn
/// from `cost(x, C) / cost(X, C)`.
pub fn kmeanspp_exact(ds: &Dataset, k: usize, seed: u64) -> Result<SeedingResult> {
    kmeanspp_exact_observed(ds, k, seed, &mut ())
}

pub fn kmeanspp_exact_observed<O: SeedingObserver + ?Sized>(
    ds: &Dataset,
    k: usize,
    seed: u64,
    observer: &mut O,
) -> Result<SeedingResult> {
    check_k(ds, k)?;
    let n = ds.n();
    let start = Instant::now();
    let mut r = rng::from_seed(seed);
    let mut diagnostics = Diagnostics::default();

    let first = r.random_range(0..n);
    let mut centers = vec![first];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut mind = vec![f64::INFINITY; n];
    relax(ds, &mut mind, ds.row(first));

    for step in 1..k {
        let total = par::sum_chunks(n, CHUNK, |rg| mind[rg].iter().sum());
        let u = r.random::<f64>();
        let (next, masses) = if total > 0.0 {
            let masses = observer.wants_masses().then(|| mind.iter().map(|d| d / total).collect::<Vec<_>>());
            (select_by_mass(&mind, total, u), masses)
        } else {
            diagnostics.zero_cost_steps += 1;
            (draw_unchosen(&mut r, &chosen), None)
        };
        centers.push(next);
        chosen[next] = true;
        relax(ds, &mut mind, ds.row(next));
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
    diagnostics.ann_distance_evals = (n * k) as u64;
    finish(ds, centers, vec![0; k - 1], 0, elapsed, diagnostics)
}

/// `mind[i] = min(mind[i], ‖x_i − c‖²)`.
fn relax(ds: &Dataset, mind: &mut [f64], c: &[f64]) {
    par::for_each_chunk_mut(mind, CHUNK, |start, slice| {
        for (j, m) in slice.iter_mut().enumerate() {
            let d = sq_dist(ds.row(start + j), c);
            if d < *m {
                *m = d;
            }
        }
    });
}
