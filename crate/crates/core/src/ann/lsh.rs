use rand_distr::{Distribution, StandardNormal};

use crate::linalg::dot;
use crate::rng;

/// Table count `ceil(ρ⁻¹ ln 1000)`.
pub fn lsh_tables(rho: f64) -> usize {
    (1000f64.ln() / rho).ceil() as usize
}

/// Signature width `ceil(log2 1000)` bits, sized for up to ~10⁴ centers.
pub fn lsh_bits() -> usize {
    1000f64.log2().ceil() as usize
}

/// Random-hyperplane signatures: bit `b` of table `t` is the sign of
/// `⟨a_{t,b}, x⟩` for a Gaussian normal `a_{t,b}`.
#[derive(Debug)]
pub(super) struct LshTables {
    dim: usize,
    tables: usize,
    bits: usize,
    planes: Vec<f64>,
    buckets: Vec<Vec<Vec<u32>>>,
}

impl LshTables {
    pub fn new(dim: usize, tables: usize, bits: usize, seed: u64) -> Self {
        let mut r = rng::from_seed(seed);
        let planes = (0..tables * bits * dim).map(|_| StandardNormal.sample(&mut r)).collect();
        LshTables { dim, tables, bits, planes, buckets: vec![vec![Vec::new(); 1 << bits]; tables] }
    }

    pub fn planes(&self) -> &[f64] {
        &self.planes
    }

    fn signature(&self, table: usize, x: &[f64]) -> usize {
        let start = table * self.bits * self.dim;
        let mut sig = 0usize;
        for (b, a) in self.planes[start..start + self.bits * self.dim].chunks_exact(self.dim).enumerate() {
            if dot(a, x) >= 0.0 {
                sig |= 1 << b;
            }
        }
        sig
    }

    pub fn insert(&mut self, ordinal: u32, x: &[f64]) {
        for t in 0..self.tables {
            let s = self.signature(t, x);
            self.buckets[t][s].push(ordinal);
        }
    }

    /// Distinct ordinals sharing at least one bucket with `x`, in table
    /// order, stopping once `cap` have been collected.
    pub fn candidates(&self, x: &[f64], cap: usize) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for t in 0..self.tables {
            for &c in &self.buckets[t][self.signature(t, x)] {
                if out.len() >= cap {
                    return out;
                }
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}
