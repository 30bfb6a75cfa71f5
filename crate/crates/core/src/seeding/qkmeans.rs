use std::time::Instant;

use rand::Rng;

use super::proposal::{NormIndex, Proposal};
use super::{check_k, draw_unchosen, finish, Diagnostics, RejectionConfig, SeedingObserver, SeedingResult, StepEvent};
use crate::ann::AnnIndex;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Proposal count at which an unbounded step first checks whether the
/// current centers already have zero cost; doubled after each check.
const ZERO_COST_PROBE: u64 = 1 << 16;

/// Rejection-sampled D² seeding over a centered dataset.
///
/// Builds the norm index internally; use [`qkmeans_with`] to reuse one
/// across runs.
pub fn qkmeans(ds: &Dataset, k: usize, cfg: &RejectionConfig) -> Result<SeedingResult> {
    let norms = NormIndex::build(ds)?;
    qkmeans_with(ds, &norms, k, cfg, None, &mut ())
}

/// [`qkmeans`] with a prebuilt norm index, an optional forced first center,
/// and a per-step observer.
pub fn qkmeans_with<O: SeedingObserver + ?Sized>(
    ds: &Dataset,
    norms: &NormIndex,
    k: usize,
    cfg: &RejectionConfig,
    first: Option<usize>,
    observer: &mut O,
) -> Result<SeedingResult> {
    cfg.validate()?;
    check_k(ds, k)?;
    let n = ds.n();
    if norms.norms().len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: norms.norms().len() });
    }
    if let Some(f) = first {
        if f >= n {
            return Err(Error::OutOfBounds { index: f, len: n });
        }
    }
    let start = Instant::now();
    let mut r = rng::from_seed(cfg.seed);
    let mut ann = AnnIndex::new(cfg.ann, cfg.rho, rng::derive(cfg.seed, 1))?.with_row_cache(n);
    let cap = cfg.m.cap(k);
    let mut diagnostics = Diagnostics::default();

    let c1 = first.unwrap_or_else(|| r.random_range(0..n));
    let c1_norm_sq = norms.norms()[c1];
    let mut centers = vec![c1];
    let mut chosen = vec![false; n];
    chosen[c1] = true;
    ann.insert(ds.row(c1))?;

    // every row at the origin: nothing to sample, any completion costs zero
    let mixture = match norms.mixture(c1) {
        Ok(m) => Some(m),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let scale = 2.0 / ann.rho();
    let mut per_step = Vec::with_capacity(k - 1);
    let mut fallback_count = 0;
    let mut zero_cost = mixture.is_none();

    for step in 1..k {
        let mut iters = 0u64;
        let mut accepted = None;
        let mut next_probe = ZERO_COST_PROBE;
        if let (Some(kappa), false) = (&mixture, zero_cost) {
            while cap.is_none_or(|c| iters < c) {
                iters += 1;
                let x = kappa.sample(&mut r);
                let u = r.random::<f64>();
                let d = ann.query_row(x, ds.row(x))?.dist_sq;
                let bound = scale * (norms.norms()[x] + c1_norm_sq);
                let ratio = if bound > 0.0 { d / bound } else { 0.0 };
                if ratio > 1.0 {
                    diagnostics.ratio_clamps += 1;
                }
                if u < ratio {
                    accepted = Some(x);
                    break;
                }
                if cap.is_none() && iters == next_probe {
                    next_probe *= 2;
                    let flat = ds.gather(&centers);
                    if crate::analysis::cost(ds, &flat)? == 0.0 {
                        zero_cost = true;
                        break;
                    }
                }
            }
        }
        let (next, fell_back) = match accepted {
            Some(x) => (x, false),
            None if zero_cost => {
                diagnostics.zero_cost_steps += 1;
                (draw_unchosen(&mut r, &chosen), false)
            }
            None => {
                fallback_count += 1;
                (draw_unchosen(&mut r, &chosen), true)
            }
        };
        per_step.push(iters);
        centers.push(next);
        chosen[next] = true;
        ann.insert(ds.row(next))?;
        observer.on_step(&StepEvent {
            step,
            centers: &centers,
            chosen: next,
            proposals: iters,
            fell_back,
            masses: None,
        });
    }
    let elapsed = start.elapsed();
    diagnostics.ann_distance_evals = ann.distance_evals();
    finish(ds, centers, per_step, fallback_count, elapsed, diagnostics)
}
