//! Complete binary tree over nonnegative weights: O(log n) weighted sampling
//! and point updates, O(1) total.
//!
//! Callers store whatever mass they want to sample by; the seeder passes the
//! squared row norms, giving the norm distribution `‖x‖² / ‖X‖²_F`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTree {
    n: usize,
    capacity: usize,
    /// Heap layout: root at 1, children of `i` at `2i` and `2i+1`, leaves at
    /// `capacity..2*capacity`. Slot 0 is unused.
    nodes: Vec<f64>,
}

impl SamplerTree {
    /// Build from `n >= 1` nonnegative finite weights with a positive sum.
    /// Capacity is rounded up to a power of two and the padding leaves hold zero.
    pub fn build(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::arg("sampler tree needs at least one weight"));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::arg(format!("weight {i} is negative or non-finite: {}", weights[i])));
        }
        let capacity = n.next_power_of_two();
        let mut nodes = vec![0.0; 2 * capacity];
        nodes[capacity..capacity + n].copy_from_slice(weights);
        for i in (1..capacity).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        let tree = SamplerTree { n, capacity, nodes };
        if !(tree.total() > 0.0) {
            return Err(Error::degenerate("all weights are zero"));
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.nodes[self.capacity + index]
    }

    /// Probability that [`sample`](Self::sample) returns `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.weight(index) / self.total()
    }

    /// Internal node sums in heap order (`nodes()[1]` is the root).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Replace one weight and re-sum its ancestors.
    pub fn update(&mut self, index: usize, weight: f64) -> Result<()> {
        if index >= self.n {
            return Err(Error::OutOfBounds { index, len: self.n });
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::arg(format!("weight must be nonnegative and finite, got {weight}")));
        }
        let mut i = self.capacity + index;
        self.nodes[i] = weight;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if !(self.total() > 0.0) {
            return Err(Error::degenerate("all weights are zero"));
        }
        Ok(self.sample_with_uniform(rng.random::<f64>()))
    }

    /// Deterministic descent driven by `u ∈ [0,1)`: the leaf whose cumulative
    /// interval contains `u·total`. Boundary values go to the left child, and
    /// zero-mass subtrees are never entered.
    pub fn sample_with_uniform(&self, u: f64) -> usize {
        debug_assert!((0.0..1.0).contains(&u));
        let mut target = u * self.total();
        let mut i = 1;
        while i < self.capacity {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            let go_left = if left <= 0.0 {
                false
            } else if right <= 0.0 {
                true
            } else {
                target <= left
            };
            if go_left {
                i *= 2;
            } else {
                target -= left;
                i = 2 * i + 1;
            }
        }
        i - self.capacity
    }
}
