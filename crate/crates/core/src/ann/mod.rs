//! Approximate nearest-center index over a growing set of centers.
//!
//! Contract: for a probe `p`, [`AnnIndex::query`] returns a stored center `q`
//! with `‖p−q‖² ≤ ρ⁻¹ · min_r ‖p−r‖²` (distance within a factor `1/√ρ`).
//!
//! * [`AnnBackend::Exact`] scans every center (`ρ` is fixed to 1).
//! * [`AnnBackend::Lsh`] looks the probe up in `L` random-hyperplane tables,
//!   collecting at most `3L` distinct candidates. When every bucket is empty
//!   it scans all centers. Otherwise the best candidate is certified against a
//!   vantage-point tree over all centers, which only descends into shells that
//!   could hold a center closer than `√ρ` times the current best distance. The
//!   contract therefore holds for every query, not just with high probability.
//!
//! [`AnnIndex::query_row`] adds a per-row best-so-far cache so the reported
//! distance for a dataset row never increases as centers are inserted. The
//! cached center also seeds the certification search.

mod lsh;
mod vptree;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sq_dist;

pub use lsh::{lsh_bits, lsh_tables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnBackend {
    Exact,
    Lsh,
}

impl std::str::FromStr for AnnBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(AnnBackend::Exact),
            "lsh" => Ok(AnnBackend::Lsh),
            other => Err(Error::arg(format!("unknown ANN backend {other:?}"))),
        }
    }
}

impl std::fmt::Display for AnnBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnnBackend::Exact => "exact",
            AnnBackend::Lsh => "lsh",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Insertion ordinal of the returned center.
    pub ordinal: usize,
    pub dist_sq: f64,
}

const NO_CENTER: u32 = u32::MAX;

/// LSH lookups stop after this many candidates per table.
const CANDIDATE_FACTOR: usize = 3;

#[derive(Debug)]
pub struct AnnIndex {
    backend: AnnBackend,
    rho: f64,
    seed: u64,
    dim: Option<usize>,
    coords: Vec<f64>,
    lsh: Option<lsh::LshTables>,
    metric: Option<vptree::VpIndex>,
    row_cache: Vec<(u32, f64)>,
    dist_evals: AtomicU64,
}

impl AnnIndex {
    pub fn new(backend: AnnBackend, rho: f64, seed: u64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::arg(format!("rho must lie in (0, 1], got {rho}")));
        }
        let rho = match backend {
            AnnBackend::Exact => 1.0,
            AnnBackend::Lsh => rho,
        };
        Ok(AnnIndex {
            backend,
            rho,
            seed,
            dim: None,
            coords: Vec::new(),
            lsh: None,
            metric: None,
            row_cache: Vec::new(),
            dist_evals: AtomicU64::new(0),
        })
    }

    /// Enable the monotone per-row cache for probes `0..rows`.
    pub fn with_row_cache(mut self, rows: usize) -> Self {
        self.row_cache = vec![(NO_CENTER, f64::INFINITY); rows];
        self
    }

    pub fn backend(&self) -> AnnBackend {
        self.backend
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        match self.dim {
            Some(d) => self.coords.len() / d,
            None => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn center(&self, ordinal: usize) -> &[f64] {
        let d = self.dim.expect("index has centers");
        &self.coords[ordinal * d..(ordinal + 1) * d]
    }

    /// Number of probe-to-center distance evaluations performed so far.
    pub fn distance_evals(&self) -> u64 {
        self.dist_evals.load(Ordering::Relaxed)
    }

    /// Number of hash tables (0 for the exact backend).
    pub fn table_count(&self) -> usize {
        match self.backend {
            AnnBackend::Exact => 0,
            AnnBackend::Lsh => lsh_tables(self.rho),
        }
    }

    /// Hyperplane normals of the LSH backend, once the dimension is known.
    pub fn hyperplanes(&self) -> Option<&[f64]> {
        self.lsh.as_ref().map(|t| t.planes())
    }

    /// Store a center; returns its ordinal.
    pub fn insert(&mut self, center: &[f64]) -> Result<usize> {
        let dim = *self.dim.get_or_insert(center.len());
        if center.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
        }
        if dim == 0 {
            return Err(Error::arg("centers must have at least one coordinate"));
        }
        let ordinal = self.len();
        if ordinal >= NO_CENTER as usize {
            return Err(Error::arg("too many centers"));
        }
        self.coords.extend_from_slice(center);
        if self.backend == AnnBackend::Lsh {
            let (rho, seed) = (self.rho, self.seed);
            self.lsh
                .get_or_insert_with(|| lsh::LshTables::new(dim, lsh_tables(rho), lsh_bits(), seed))
                .insert(ordinal as u32, center);
            self.metric.get_or_insert_with(|| vptree::VpIndex::new(dim)).insert(ordinal as u32, &self.coords);
        }
        Ok(ordinal)
    }

    pub fn query(&self, probe: &[f64]) -> Result<Neighbor> {
        self.query_from(probe, None)
    }

    /// Query with an optional known stored center `start` (e.g. an earlier
    /// answer for the same probe), used as the initial best candidate.
    fn query_from(&self, probe: &[f64], start: Option<Neighbor>) -> Result<Neighbor> {
        let dim = self.dim.ok_or(Error::EmptyIndex)?;
        if probe.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: probe.len() });
        }
        let mut evals = 0u64;
        let hit = match self.backend {
            AnnBackend::Exact => self.scan(probe, &mut evals),
            AnnBackend::Lsh => {
                let tables = self.lsh.as_ref().expect("lsh tables exist after first insert");
                let candidates = tables.candidates(probe, CANDIDATE_FACTOR * lsh_tables(self.rho));
                if candidates.is_empty() && start.is_none() {
                    self.scan(probe, &mut evals)
                } else {
                    let mut best = start.unwrap_or(Neighbor { ordinal: usize::MAX, dist_sq: f64::INFINITY });
                    for &c in &candidates {
                        let c = c as usize;
                        let d = sq_dist(probe, self.center(c));
                        evals += 1;
                        if d < best.dist_sq || (d == best.dist_sq && c < best.ordinal) {
                            best = Neighbor { ordinal: c, dist_sq: d };
                        }
                    }
                    let metric = self.metric.as_ref().expect("metric index exists after first insert");
                    metric.certify(probe, &self.coords, self.rho, &mut best, &mut evals);
                    best
                }
            }
        };
        self.dist_evals.fetch_add(evals, Ordering::Relaxed);
        Ok(hit)
    }

    /// Query on behalf of dataset row `row`, never reporting a larger distance
    /// than an earlier answer for the same row.
    pub fn query_row(&mut self, row: usize, probe: &[f64]) -> Result<Neighbor> {
        if row >= self.row_cache.len() {
            return self.query(probe);
        }
        let (cached_ord, cached_d) = self.row_cache[row];
        let cached = (cached_ord != NO_CENTER).then_some(Neighbor { ordinal: cached_ord as usize, dist_sq: cached_d });
        if let Some(c) = cached.filter(|c| c.dist_sq == 0.0) {
            return Ok(c);
        }
        let fresh = self.query_from(probe, cached)?;
        if let Some(c) = cached.filter(|c| c.dist_sq <= fresh.dist_sq) {
            return Ok(c);
        }
        self.row_cache[row] = (fresh.ordinal as u32, fresh.dist_sq);
        Ok(fresh)
    }

    /// Exhaustive scan; ties go to the lowest ordinal.
    fn scan(&self, probe: &[f64], evals: &mut u64) -> Neighbor {
        let dim = probe.len();
        let mut best = Neighbor { ordinal: 0, dist_sq: f64::INFINITY };
        for (i, c) in self.coords.chunks_exact(dim).enumerate() {
            let d = sq_dist(probe, c);
            if d < best.dist_sq {
                best = Neighbor { ordinal: i, dist_sq: d };
            }
        }
        *evals += self.len() as u64;
        best
    }
}
