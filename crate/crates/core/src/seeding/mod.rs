//! Seeding algorithms.
//!
//! * [`qkmeans`]: rejection-sampled D² seeding with an approximate
//!   nearest-center index and a bounded proposal budget.
//! * [`kmeanspp_exact`]: exact D² sampling (k-means++).
//! * [`rho_delta_reference`]: explicit enumeration of the perturbed D²
//!   mixture `(1−δ)·π^L + δ·uniform`, for checking the fast seeder.
//! * [`uniform_seeding`]: `k` distinct uniform rows.
//! * [`reject_sample`]: the generic bounded rejection sampler.

mod kmeanspp;
mod proposal;
mod qkmeans;
mod rejection;
mod rho_delta;

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ann::AnnBackend;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

pub use kmeanspp::{kmeanspp_exact, kmeanspp_exact_observed};
pub use proposal::{sample_proposal, NormIndex, NormMixture, Proposal};
pub use qkmeans::{qkmeans, qkmeans_with};
pub use rejection::{reject_sample, RejectOutcome};
pub use rho_delta::{rho_delta_reference, rho_delta_reference_observed};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedingResult {
    pub center_indices: Vec<usize>,
    pub center_coords: Vec<Vec<f64>>,
    /// Proposals consumed while choosing centers `2..=k` (length `k − 1`).
    pub per_step_proposals: Vec<u64>,
    /// Steps that exhausted the proposal cap and fell back to a uniform row.
    pub fallback_count: usize,
    /// Wall-clock time of the seeding loop only.
    #[serde(skip)]
    pub elapsed: Duration,
    /// Exact `cost(X, C)`.
    pub final_cost: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Proposals whose acceptance ratio exceeded 1 and was clamped.
    pub ratio_clamps: u64,
    /// Steps taken while the current centers already had zero cost.
    pub zero_cost_steps: usize,
    /// Nearest-center distance evaluations spent in the index.
    pub ann_distance_evals: u64,
}

/// Proposal budget multiplier `m`: a step gives up after
/// `ceil(m · ln(max(k, 2)))` proposals, or never when infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Finite(u32),
    Infinite,
}

impl Budget {
    pub fn cap(self, k: usize) -> Option<u64> {
        match self {
            Budget::Finite(m) => Some((m as f64 * (k.max(2) as f64).ln()).ceil() as u64),
            Budget::Infinite => None,
        }
    }
}

impl std::str::FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Budget::Infinite);
        }
        match s.parse::<u32>() {
            Ok(m) if m >= 1 => Ok(Budget::Finite(m)),
            _ => Err(Error::arg(format!("m must be a positive integer or \"inf\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Budget::Finite(m) => write!(f, "{m}"),
            Budget::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    pub m: Budget,
    pub rho: f64,
    pub seed: u64,
    pub ann: AnnBackend,
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::arg(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if self.m == Budget::Finite(0) {
            return Err(Error::arg("m must be at least 1"));
        }
        Ok(())
    }
}

/// What a seeder reports after choosing each center beyond the first.
#[derive(Debug)]
pub struct StepEvent<'a> {
    /// Number of centers already chosen (the new center gets this position).
    pub step: usize,
    /// Rows chosen so far, first center first.
    pub centers: &'a [usize],
    pub chosen: usize,
    pub proposals: u64,
    pub fell_back: bool,
    /// The sampling distribution used at this step, when the seeder
    /// enumerates it and the observer asked for it.
    pub masses: Option<&'a [f64]>,
}

pub trait SeedingObserver {
    fn on_step(&mut self, event: &StepEvent<'_>);

    /// Enumerating seeders only materialize `masses` when this returns true.
    fn wants_masses(&self) -> bool {
        false
    }
}

impl SeedingObserver for () {
    fn on_step(&mut self, _: &StepEvent<'_>) {}
}

impl<F: FnMut(&StepEvent<'_>)> SeedingObserver for F {
    fn on_step(&mut self, event: &StepEvent<'_>) {
        self(event)
    }
}

/// `k` distinct rows drawn uniformly.
pub fn uniform_seeding(ds: &Dataset, k: usize, seed: u64) -> Result<SeedingResult> {
    check_k(ds, k)?;
    let start = std::time::Instant::now();
    let mut r = rng::from_seed(seed);
    let indices = rand::seq::index::sample(&mut r, ds.n(), k).into_vec();
    let elapsed = start.elapsed();
    finish(ds, indices, vec![0; k - 1], 0, elapsed, Diagnostics::default())
}

pub(crate) fn check_k(ds: &Dataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if k > ds.n() {
        return Err(Error::arg(format!("k = {k} exceeds the number of points {}", ds.n())));
    }
    Ok(())
}

pub(crate) fn finish(
    ds: &Dataset,
    center_indices: Vec<usize>,
    per_step_proposals: Vec<u64>,
    fallback_count: usize,
    elapsed: Duration,
    diagnostics: Diagnostics,
) -> Result<SeedingResult> {
    let flat = ds.gather(&center_indices);
    let final_cost = crate::analysis::cost(ds, &flat)?;
    Ok(SeedingResult {
        center_coords: flat.chunks_exact(ds.dim()).map(<[f64]>::to_vec).collect(),
        center_indices,
        per_step_proposals,
        fallback_count,
        elapsed,
        final_cost,
        diagnostics,
    })
}

/// Index `i` such that `u·total` falls in the `i`-th cumulative interval,
/// skipping zero-mass entries.
pub(crate) fn select_by_mass(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = Some(i);
        if target < acc {
            return i;
        }
    }
    last_positive.expect("at least one positive mass")
}

/// Uniform draw among rows not yet chosen.
pub(crate) fn draw_unchosen<R: Rng + ?Sized>(rng: &mut R, chosen: &[bool]) -> usize {
    let n = chosen.len();
    for _ in 0..n {
        let i = rng.random_range(0..n);
        if !chosen[i] {
            return i;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
    free[rng.random_range(0..free.len())]
}
