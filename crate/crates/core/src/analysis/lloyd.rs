use super::{assign, check_centers};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::par::{self, CHUNK};

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    /// Final centers, flat row-major.
    pub centers: Vec<f64>,
    /// Cost before the first step and after every accepted step; non-increasing.
    pub cost_trace: Vec<f64>,
}

/// Lloyd iterations from `centers`. Stops at a fixed point, after `max_iters`
/// steps, when the relative improvement drops below `tol`, or when a step
/// would raise the cost (rounding), in which case that step is discarded.
/// A cluster that loses all its points is moved onto the point with the
/// largest current cost contribution.
pub fn lloyd(ds: &Dataset, centers: &[f64], max_iters: usize, tol: f64) -> Result<LloydOutcome> {
    let k = check_centers(ds, centers)?;
    let mut current = centers.to_vec();
    let (mut labels, mut dists) = assign(ds, &current)?;
    let mut trace = vec![dists.iter().sum::<f64>()];

    for _ in 0..max_iters {
        let next = centroids(ds, &labels, &dists, &current, k);
        if next == current {
            break;
        }
        let (l, d) = assign(ds, &next)?;
        let c: f64 = d.iter().sum();
        let prev = *trace.last().expect("trace starts non-empty");
        if c > prev {
            break;
        }
        current = next;
        labels = l;
        dists = d;
        trace.push(c);
        if prev == 0.0 || (prev - c) / prev < tol {
            break;
        }
    }
    Ok(LloydOutcome { centers: current, cost_trace: trace })
}

fn centroids(ds: &Dataset, labels: &[usize], dists: &[f64], current: &[f64], k: usize) -> Vec<f64> {
    let dim = ds.dim();
    let parts = par::map_chunks(ds.n(), CHUNK, |r| {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in r {
            let l = labels[i];
            counts[l] += 1;
            for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(ds.row(i)) {
                *s += x;
            }
        }
        (sums, counts)
    });
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (s, c) in parts {
        sums.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    let mut out = current.to_vec();
    let mut empties = Vec::new();
    for j in 0..k {
        if counts[j] == 0 {
            empties.push(j);
            continue;
        }
        let inv = 1.0 / counts[j] as f64;
        for (o, s) in out[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
            *o = s * inv;
        }
    }
    if !empties.is_empty() {
        // largest contributions first, ties to the lower row
        let mut order: Vec<usize> = (0..ds.n()).collect();
        order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        for (j, &row) in empties.iter().zip(&order) {
            out[j * dim..(j + 1) * dim].copy_from_slice(ds.row(row));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::cost;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&x| [x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn one_step_example() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0]);
        let out = lloyd(&ds, &[1.0, 10.0], 10, 0.0).unwrap();
        assert_eq!(out.centers, vec![0.5, 10.5]);
        assert_eq!(out.cost_trace, vec![2.0, 1.0]);
    }

    #[test]
    fn fixed_point() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0]);
        let out = lloyd(&ds, &[0.5, 10.5], 10, 0.0).unwrap();
        assert_eq!(out.cost_trace, vec![1.0]);
        assert_eq!(out.centers, vec![0.5, 10.5]);
    }

    #[test]
    fn empty_cluster_reseeded() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0]);
        // the center at 100 owns nothing; it jumps onto the worst-served point
        let out = lloyd(&ds, &[0.0, 100.0], 1, 0.0).unwrap();
        assert_eq!(out.centers, vec![5.5, 11.0]);
        assert_eq!(*out.cost_trace.last().unwrap(), cost(&ds, &out.centers).unwrap());
    }
}
