use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sampler_tree::SamplerTree;

/// A distribution over rows that can be sampled and evaluated pointwise.
pub trait Proposal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
    fn probability(&self, index: usize) -> f64;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Proposal for SamplerTree {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sample_with_uniform(rng.random::<f64>())
    }

    fn probability(&self, index: usize) -> f64 {
        SamplerTree::probability(self, index)
    }

    fn len(&self) -> usize {
        SamplerTree::len(self)
    }
}

/// Squared row norms of a centered dataset and the tree that samples them.
/// Built once per dataset; seeding runs only read it.
#[derive(Debug, Clone)]
pub struct NormIndex {
    norms: Vec<f64>,
    /// `None` when every row sits at the origin.
    tree: Option<SamplerTree>,
}

impl NormIndex {
    pub fn build(ds: &Dataset) -> Result<Self> {
        if !ds.is_centered() {
            return Err(Error::arg("the norm proposal needs a centered dataset"));
        }
        let norms = ds.norms_sq();
        let tree = match SamplerTree::build(&norms) {
            Ok(t) => Some(t),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(NormIndex { norms, tree })
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn tree(&self) -> Option<&SamplerTree> {
        self.tree.as_ref()
    }

    /// `Σ ‖x‖²` as held by the tree.
    pub fn frob_sq(&self) -> f64 {
        self.tree.as_ref().map_or(0.0, SamplerTree::total)
    }

    /// The proposal for a run whose first center is `first`.
    pub fn mixture(&self, first: usize) -> Result<NormMixture<'_>> {
        NormMixture::new(self.tree.as_ref(), &self.norms, self.norms[first])
    }
}

/// `κ(x) = (‖x‖² + ‖c₁‖²) / (‖X‖²_F + n‖c₁‖²)`, sampled as a two-component
/// mixture: the norm tree with probability `‖X‖²_F / (‖X‖²_F + n‖c₁‖²)`,
/// otherwise a uniform row.
#[derive(Debug, Clone, Copy)]
pub struct NormMixture<'a> {
    tree: Option<&'a SamplerTree>,
    norms: &'a [f64],
    frob_sq: f64,
    c1_norm_sq: f64,
    tree_share: f64,
    denom: f64,
}

impl<'a> NormMixture<'a> {
    pub fn new(tree: Option<&'a SamplerTree>, norms: &'a [f64], c1_norm_sq: f64) -> Result<Self> {
        let n = norms.len();
        let frob_sq = tree.map_or(0.0, SamplerTree::total);
        if let Some(t) = tree {
            if t.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.len() });
            }
        }
        let denom = frob_sq + n as f64 * c1_norm_sq;
        if !(denom > 0.0) {
            return Err(Error::degenerate("both mixture components have zero mass"));
        }
        Ok(NormMixture { tree, norms, frob_sq, c1_norm_sq, tree_share: frob_sq / denom, denom })
    }

    pub fn tree_share(&self) -> f64 {
        self.tree_share
    }

    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    pub fn c1_norm_sq(&self) -> f64 {
        self.c1_norm_sq
    }
}

impl Proposal for NormMixture<'_> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r = rng.random::<f64>();
        match self.tree {
            Some(t) if r < self.tree_share => t.sample_with_uniform(rng.random::<f64>()),
            _ => rng.random_range(0..self.norms.len()),
        }
    }

    fn probability(&self, index: usize) -> f64 {
        (self.norms[index] + self.c1_norm_sq) / self.denom
    }

    fn len(&self) -> usize {
        self.norms.len()
    }
}

/// One draw from the norm mixture; see [`NormMixture`].
pub fn sample_proposal<R: Rng + ?Sized>(
    tree: Option<&SamplerTree>,
    norms: &[f64],
    c1_norm_sq: f64,
    rng: &mut R,
) -> Result<usize> {
    Ok(NormMixture::new(tree, norms, c1_norm_sq)?.sample(rng))
}
