//! Cost evaluation, Lloyd refinement, the geometric parameters β and η, max
//! Rényi divergence, power-law regression and intrinsic-dimension estimation.

mod curve;
mod fit;
mod lloyd;
mod mle;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::par::{self, CHUNK};
use crate::rng;

pub use curve::{beta_curve, BetaCurvePoint, CurveConfig};
pub use fit::{fit_power_law, PowerLawFit};
pub use lloyd::{lloyd, LloydOutcome};
pub use mle::mle_id;

/// Rows above which [`eta_data`] works on a fixed-seed subsample.
pub const ETA_DATA_CAP: usize = 20_000;

fn check_centers(ds: &Dataset, centers: &[f64]) -> Result<usize> {
    let dim = ds.dim();
    if centers.is_empty() {
        return Err(Error::arg("center set is empty"));
    }
    if !centers.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: centers.len() % dim });
    }
    Ok(centers.len() / dim)
}

/// Nearest center for one point; ties go to the lowest ordinal.
#[inline]
pub(crate) fn nearest(x: &[f64], centers: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(x.len()).enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// `Σ_x min_c ‖x − c‖²` over flat row-major `centers`.
pub fn cost(ds: &Dataset, centers: &[f64]) -> Result<f64> {
    check_centers(ds, centers)?;
    Ok(par::sum_chunks(ds.n(), CHUNK, |r| r.map(|i| nearest(ds.row(i), centers).1).sum()))
}

/// Nearest-center label and squared distance for every row.
pub fn assign(ds: &Dataset, centers: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    check_centers(ds, centers)?;
    let parts = par::map_chunks(ds.n(), CHUNK, |r| r.map(|i| nearest(ds.row(i), centers)).collect::<Vec<_>>());
    Ok(parts.into_iter().flatten().unzip())
}

/// `cost(X, μ)`: the squared Frobenius norm when centered.
pub fn one_means_cost(ds: &Dataset) -> f64 {
    if ds.is_centered() {
        ds.frob_sq()
    } else {
        let mu = ds.mean();
        par::sum_chunks(ds.n(), CHUNK, |r| r.map(|i| sq_dist(ds.row(i), &mu)).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeomParams {
    /// `cost(X, μ) / cost(X, C)`; infinite when `cost(X, C) = 0`.
    pub beta: f64,
    /// Largest over smallest pairwise center distance; infinite on duplicates.
    pub eta_centers: f64,
}

pub fn geom_params(ds: &Dataset, centers: &[f64]) -> Result<GeomParams> {
    let c = cost(ds, centers)?;
    let beta = if c > 0.0 { one_means_cost(ds) / c } else { f64::INFINITY };
    Ok(GeomParams { beta, eta_centers: aspect_ratio(centers, ds.dim())? })
}

/// Max over min pairwise Euclidean distance among `points` (flat, `dim` wide).
pub fn aspect_ratio(points: &[f64], dim: usize) -> Result<f64> {
    let m = points.len() / dim;
    if m < 2 {
        return Err(Error::arg("aspect ratio needs at least two points"));
    }
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let parts = par::map_chunks(m, 64, |r| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in r {
            for j in i + 1..m {
                let d = sq_dist(rows[i], rows[j]);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    });
    let (lo, hi) = parts.into_iter().fold((f64::INFINITY, 0.0f64), |(a, b), (c, d)| (a.min(c), b.max(d)));
    Ok(if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY })
}

/// `η(X)` over all rows, or over a fixed-seed subsample of [`ETA_DATA_CAP`]
/// rows for larger datasets. The flag reports whether subsampling happened.
pub fn eta_data(ds: &Dataset, seed: u64) -> Result<(f64, bool)> {
    if ds.n() <= ETA_DATA_CAP {
        return Ok((aspect_ratio(ds.as_flat(), ds.dim())?, false));
    }
    let mut r = rng::from_seed(seed);
    let mut idx = rand::seq::index::sample(&mut r, ds.n(), ETA_DATA_CAP).into_vec();
    idx.sort_unstable();
    Ok((aspect_ratio(&ds.gather(&idx), ds.dim())?, true))
}

/// `max_x ln(μ(x)/ν(x))` over the support of `μ`; infinite when `μ` puts
/// mass where `ν` has none.
pub fn max_renyi(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() || mu.is_empty() {
        return Err(Error::DimensionMismatch { expected: mu.len(), got: nu.len() });
    }
    for (name, p) in [("mu", mu), ("nu", nu)] {
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg(format!("{name} has negative or non-finite entries")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("{name} sums to {s}, not 1")));
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for (&a, &b) in mu.iter().zip(nu) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max((a / b).ln());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::preprocess;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&x| [x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cost_examples() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(cost(&ds, &[0.5, 10.5]).unwrap(), 1.0);
        assert_eq!(cost(&ds, &[0.0, 1.0, 10.0, 11.0]).unwrap(), 0.0);
        assert!(cost(&ds, &[]).is_err());
        let c = preprocess(&ds, None).unwrap();
        assert_eq!(cost(&c, &[0.0]).unwrap(), c.frob_sq());
        assert_eq!(c.frob_sq(), 101.0);
    }

    #[test]
    fn assign_ties_low() {
        let ds = line(&[5.0]);
        let (l, d) = assign(&ds, &[4.0, 6.0]).unwrap();
        assert_eq!(l, vec![0]);
        assert_eq!(d, vec![1.0]);
    }

    #[test]
    fn geom_examples() {
        let ds = preprocess(&line(&[0.0, 1.0, 10.0, 11.0]), None).unwrap();
        let g = geom_params(&ds, &[-5.0, 5.0]).unwrap();
        assert_eq!(g.beta, 101.0);
        assert_eq!(aspect_ratio(&[0.0, 3.0, 9.0], 1).unwrap(), 3.0);
        assert_eq!(aspect_ratio(&[1.0, 1.0], 1).unwrap(), f64::INFINITY);
        assert!(aspect_ratio(&[1.0], 1).is_err());
        let g = geom_params(&ds, &[-5.5, -4.5, 4.5, 5.5]).unwrap();
        assert_eq!(g.beta, f64::INFINITY);
        assert_eq!(eta_data(&ds, 0).unwrap(), (11.0, false));
    }

    #[test]
    fn renyi_examples() {
        assert_eq!(max_renyi(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((max_renyi(&[0.5, 0.5], &[0.25, 0.75]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(max_renyi(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(max_renyi(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 2f64.ln());
        assert!(max_renyi(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }
}
