use rand::Rng;

use super::proposal::Proposal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RejectOutcome {
    /// The accepted index, or `None` when the iteration budget ran out.
    pub index: Option<usize>,
    pub iters: u64,
}

impl RejectOutcome {
    pub fn accepted(&self) -> bool {
        self.index.is_some()
    }
}

/// Draw from the distribution proportional to `target` using samples from
/// `proposal`, accepting `x` with probability `μ(x) / (M·ν(x))`.
///
/// `bound` is `M`; it must dominate `μ/ν` pointwise (checked in debug builds).
/// Conditioned on acceptance the result is an exact draw from `μ`, and each
/// iteration accepts with probability `1/M`. With `max_iters = None` the loop
/// runs until it accepts.
pub fn reject_sample<P: Proposal, R: Rng + ?Sized>(
    target: &[f64],
    proposal: &P,
    bound: f64,
    max_iters: Option<u64>,
    rng: &mut R,
) -> Result<RejectOutcome> {
    if !(bound >= 1.0) {
        return Err(Error::arg(format!("rejection bound must be >= 1, got {bound}")));
    }
    if target.len() != proposal.len() {
        return Err(Error::DimensionMismatch { expected: proposal.len(), got: target.len() });
    }
    if target.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::arg("target weights must be nonnegative and finite"));
    }
    let total: f64 = target.iter().sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("target has zero mass"));
    }
    let mut iters = 0;
    while max_iters.is_none_or(|cap| iters < cap) {
        iters += 1;
        let x = proposal.sample(rng);
        let ratio = target[x] / total / (bound * proposal.probability(x));
        debug_assert!(ratio <= 1.0 + 1e-9, "bound {bound} does not dominate at {x}: ratio {ratio}");
        if rng.random::<f64>() < ratio {
            return Ok(RejectOutcome { index: Some(x), iters });
        }
    }
    Ok(RejectOutcome { index: None, iters })
}
