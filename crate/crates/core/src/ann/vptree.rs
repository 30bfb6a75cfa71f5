//! Insert-only metric index used to certify LSH answers: one vantage-point
//! tree over most centers plus a short buffer of recent insertions that is
//! scanned exhaustively. The tree is rebuilt from scratch when the buffer
//! reaches `max(MIN_BUFFER, 2√tree)`.
//!
//! Pruning uses triangle-inequality bounds only, so it adapts to the
//! intrinsic dimension of the centers regardless of how they are rotated.

use crate::ann::Neighbor;
use crate::linalg::sq_dist;

const MIN_BUFFER: usize = 32;

/// Slack on pruning decisions; bounds come from differences of rounded
/// square roots.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug)]
pub(super) struct VpIndex {
    dim: usize,
    tree: VpTree,
    buffer: Vec<u32>,
}

/// Implicit tree: the node of range `[lo, hi)` has vantage point `ids[lo]`,
/// an inner child `[lo+1, mid)` and an outer child `[mid, hi)`, where every
/// inner point is at most as far from the vantage point as every outer one.
#[derive(Debug, Default)]
struct VpTree {
    ids: Vec<u32>,
    /// Per node (indexed by `lo`): distance ranges of the inner and outer
    /// children from the vantage point.
    shells: Vec<Shells>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Shells {
    inner: (f64, f64),
    outer: (f64, f64),
    mid: u32,
}

impl VpIndex {
    pub fn new(dim: usize) -> Self {
        VpIndex { dim, tree: VpTree::default(), buffer: Vec::new() }
    }

    #[cfg(test)]
    fn sizes(&self) -> (usize, usize) {
        (self.tree.ids.len(), self.buffer.len())
    }

    pub fn insert(&mut self, id: u32, coords: &[f64]) {
        self.buffer.push(id);
        let limit = MIN_BUFFER.max(2 * (self.tree.ids.len() as f64).sqrt() as usize);
        if self.buffer.len() >= limit {
            let mut ids = std::mem::take(&mut self.tree.ids);
            ids.append(&mut self.buffer);
            self.tree = VpTree::build(ids, coords, self.dim);
        }
    }

    /// Improve `best` until no stored center is closer than `ρ · best.dist_sq`.
    pub fn certify(&self, probe: &[f64], coords: &[f64], rho: f64, best: &mut Neighbor, evals: &mut u64) {
        let mut search = Search { probe, coords, dim: self.dim, rho, best, evals };
        for &id in &self.buffer {
            search.visit(id as usize);
        }
        search.descend(&self.tree, 0, self.tree.ids.len(), 0.0);
    }
}

impl VpTree {
    fn build(mut ids: Vec<u32>, coords: &[f64], dim: usize) -> Self {
        let mut shells = vec![Shells::default(); ids.len()];
        let mut scratch = Vec::with_capacity(ids.len());
        let len = ids.len();
        build_range(&mut ids, &mut shells, &mut scratch, 0, len, coords, dim);
        VpTree { ids, shells }
    }
}

fn point(coords: &[f64], dim: usize, id: u32) -> &[f64] {
    &coords[id as usize * dim..(id as usize + 1) * dim]
}

fn build_range(
    ids: &mut [u32],
    shells: &mut [Shells],
    scratch: &mut Vec<(f64, u32)>,
    lo: usize,
    hi: usize,
    coords: &[f64],
    dim: usize,
) {
    if hi - lo <= 1 {
        return;
    }
    // vantage point: the member farthest from the first one, a cheap corner pick
    let anchor = point(coords, dim, ids[lo]);
    let far = (lo..hi)
        .max_by(|&a, &b| {
            sq_dist(anchor, point(coords, dim, ids[a])).total_cmp(&sq_dist(anchor, point(coords, dim, ids[b])))
        })
        .expect("non-empty range");
    ids.swap(lo, far);
    let v = point(coords, dim, ids[lo]);
    scratch.clear();
    scratch.extend(ids[lo + 1..hi].iter().map(|&id| (sq_dist(v, point(coords, dim, id)).sqrt(), id)));
    let half = scratch.len() / 2;
    scratch.select_nth_unstable_by(half, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let range =
        |s: &[(f64, u32)]| s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(d, _)| (a.min(d), b.max(d)));
    let inner = range(&scratch[..half]);
    let outer = range(&scratch[half..]);
    for (slot, &(_, id)) in ids[lo + 1..hi].iter_mut().zip(scratch.iter()) {
        *slot = id;
    }
    let mid = lo + 1 + half;
    shells[lo] = Shells { inner, outer, mid: mid as u32 };
    build_range(ids, shells, scratch, lo + 1, mid, coords, dim);
    build_range(ids, shells, scratch, mid, hi, coords, dim);
}

struct Search<'a> {
    probe: &'a [f64],
    coords: &'a [f64],
    dim: usize,
    rho: f64,
    best: &'a mut Neighbor,
    evals: &'a mut u64,
}

impl Search<'_> {
    /// A subtree whose points are all at least `lb` away is skipped once
    /// `lb² ≥ ρ·best`.
    fn prunes(&self, lb: f64) -> bool {
        lb * lb * (1.0 - PRUNE_SLACK) >= self.rho * self.best.dist_sq
    }

    fn visit(&mut self, id: usize) -> f64 {
        let d = sq_dist(self.probe, &self.coords[id * self.dim..(id + 1) * self.dim]);
        *self.evals += 1;
        if d < self.best.dist_sq || (d == self.best.dist_sq && id < self.best.ordinal) {
            *self.best = Neighbor { ordinal: id, dist_sq: d };
        }
        d
    }

    fn descend(&mut self, tree: &VpTree, lo: usize, hi: usize, lb: f64) {
        if hi <= lo || self.prunes(lb) {
            return;
        }
        let d = self.visit(tree.ids[lo] as usize).sqrt();
        if hi - lo == 1 {
            return;
        }
        let s = tree.shells[lo];
        let mid = s.mid as usize;
        let gap = |(a, b): (f64, f64)| (a - d).max(d - b).max(0.0);
        let (lb_in, lb_out) = (gap(s.inner).max(lb), gap(s.outer).max(lb));
        if lb_in <= lb_out {
            self.descend(tree, lo + 1, mid, lb_in);
            self.descend(tree, mid, hi, lb_out);
        } else {
            self.descend(tree, mid, hi, lb_out);
            self.descend(tree, lo + 1, mid, lb_in);
        }
    }
}
