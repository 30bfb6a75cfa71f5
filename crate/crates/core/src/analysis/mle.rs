use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::{par, rng};

/// Maximum-likelihood intrinsic dimension from `k_nn`-nearest-neighbor
/// distances `T_1 ≤ … ≤ T_k`:
/// `mean_i [ (1/(k−1)) Σ_{j<k} ln(T_k/T_j) ]⁻¹`.
///
/// With `subsample = Some(m)`, `m` rows are drawn without replacement and
/// neighbors are searched within that sample. Points whose window contains a
/// zero distance, or whose log sum is zero, are skipped.
pub fn mle_id(ds: &Dataset, k_nn: usize, subsample: Option<usize>, seed: u64) -> Result<f64> {
    if k_nn < 2 {
        return Err(Error::arg(format!("k_nn must be at least 2, got {k_nn}")));
    }
    let owned;
    let sample = match subsample {
        Some(m) if m < ds.n() => {
            let mut r = rng::from_seed(seed);
            let mut idx = rand::seq::index::sample(&mut r, ds.n(), m).into_vec();
            idx.sort_unstable();
            owned = Dataset::from_flat(ds.gather(&idx), ds.dim())?;
            &owned
        }
        _ => ds,
    };
    let n = sample.n();
    if n <= k_nn {
        return Err(Error::arg(format!("need more than k_nn = {k_nn} points, got {n}")));
    }
    let inverses = par::map_indices(n, |i| {
        let x = sample.row(i);
        let mut window = vec![f64::INFINITY; k_nn];
        for j in (0..n).filter(|&j| j != i) {
            let d = sq_dist(x, sample.row(j));
            if d < window[k_nn - 1] {
                let mut p = k_nn - 1;
                while p > 0 && window[p - 1] > d {
                    window[p] = window[p - 1];
                    p -= 1;
                }
                window[p] = d;
            }
        }
        if window[0] <= 0.0 {
            return None;
        }
        let tk = window[k_nn - 1].sqrt();
        let s: f64 = window[..k_nn - 1].iter().map(|d| (tk / d.sqrt()).ln()).sum::<f64>() / (k_nn - 1) as f64;
        (s > 0.0).then(|| 1.0 / s)
    });
    let (sum, used) = inverses.iter().flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if used == 0 {
        return Err(Error::degenerate("every point has a zero neighbor distance in its window"));
    }
    Ok(sum / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let ds = Dataset::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let want = (1.0 / 3f64.ln() + 1.0 / 2f64.ln() + 1.0 / 1.5f64.ln()) / 3.0;
        assert!((mle_id(&ds, 2, None, 0).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.6064).abs() < 1e-4);
    }

    #[test]
    fn degenerate_and_errors() {
        let dup = Dataset::from_rows(&[[1.0, 1.0]; 5]).unwrap();
        assert!(matches!(mle_id(&dup, 2, None, 0), Err(Error::Degenerate(_))));
        let ds = Dataset::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        assert!(mle_id(&ds, 1, None, 0).is_err());
        assert!(mle_id(&ds, 3, None, 0).is_err());
    }
}
