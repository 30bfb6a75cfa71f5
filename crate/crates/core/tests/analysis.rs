use qkmeans::analysis::{cost, eta_data, fit_power_law, geom_params, lloyd, mle_id, one_means_cost, ETA_DATA_CAP};
use qkmeans::dataset::{gen_gaussian_mixture, preprocess, Dataset, MixtureSpec};
use qkmeans::rng;
use qkmeans::seeding::kmeanspp_exact;
use rand::Rng;

fn random_points(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut r = rng::from_seed(seed);
    let pts: Vec<f64> = (0..n * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    preprocess(&Dataset::from_flat(pts, dim).unwrap(), None).unwrap()
}

/// Optimal 2-means cost by enumerating every split into two nonempty groups.
fn brute_two_means(ds: &Dataset) -> f64 {
    let n = ds.n();
    let dim = ds.dim();
    let group_cost = |members: &[usize]| {
        let mut mean = vec![0.0; dim];
        for &i in members {
            for (m, v) in mean.iter_mut().zip(ds.row(i)) {
                *m += v / members.len() as f64;
            }
        }
        members.iter().map(|&i| ds.row(i).iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>()
    };
    (1..(1u32 << (n - 1)))
        .map(|mask| {
            let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mask >> i & 1 == 1);
            group_cost(&a) + group_cost(&b)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn optimal_beta_dominates_seeded_beta() {
    for seed in 0..20 {
        let ds = random_points(9, 2, seed);
        let opt = brute_two_means(&ds);
        let beta_opt = one_means_cost(&ds) / opt;
        let seeded = kmeanspp_exact(&ds, 2, seed).unwrap();
        let g = geom_params(&ds, &ds.gather(&seeded.center_indices)).unwrap();
        assert!(g.beta <= beta_opt * (1.0 + 1e-12), "seed {seed}: {} > {beta_opt}", g.beta);
    }
}

#[test]
fn lloyd_never_increases_cost() {
    for seed in 0..100 {
        let ds = random_points(60, 3, 100 + seed);
        let init = kmeanspp_exact(&ds, 5, seed).unwrap();
        let out = lloyd(&ds, &ds.gather(&init.center_indices), 25, 0.0).unwrap();
        assert!(out.cost_trace.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {:?}", out.cost_trace);
        let last = *out.cost_trace.last().unwrap();
        assert!((cost(&ds, &out.centers).unwrap() - last).abs() <= 1e-9 * last.max(1.0));
    }
}

#[test]
fn center_aspect_ratio_is_bounded_by_data() {
    let spec = MixtureSpec { components: 5, n: 1500, dim: 4, center_scale: 4.0, seed: 2 };
    let ds = preprocess(&gen_gaussian_mixture(&spec).unwrap(), None).unwrap();
    assert!(ds.n() <= ETA_DATA_CAP);
    let (eta, subsampled) = eta_data(&ds, 0).unwrap();
    assert!(!subsampled);
    for seed in 0..5 {
        let s = kmeanspp_exact(&ds, 30, seed).unwrap();
        let g = geom_params(&ds, &ds.gather(&s.center_indices)).unwrap();
        assert!(g.eta_centers <= eta, "{} > {eta}", g.eta_centers);
    }
}

#[test]
fn mle_finds_a_segment_is_one_dimensional() {
    let mut r = rng::from_seed(7);
    let dir: Vec<f64> = (0..20).map(|_| r.random_range(-1.0..1.0)).collect();
    let pts: Vec<f64> = (0..3000)
        .flat_map(|_| {
            let t: f64 = r.random();
            dir.iter().map(move |d| t * d).collect::<Vec<_>>()
        })
        .collect();
    let ds = Dataset::from_flat(pts, 20).unwrap();
    let est = mle_id(&ds, 10, None, 0).unwrap();
    assert!((est - 1.0).abs() < 0.15, "estimate {est}");
}

#[test]
fn power_law_fit_recovers_exponent() {
    let ks = [2.0, 4.0, 8.0, 16.0, 32.0];
    let ys: Vec<f64> = ks.iter().map(|k: &f64| 3.0 * k.powf(0.75)).collect();
    let fit = fit_power_law(&ks, &ys).unwrap();
    assert!((fit.slope - 0.75).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}
