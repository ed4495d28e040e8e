use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ellid_core::clustering::{dbscan_baseline, fit_vigmm, VigmmConfig};
use ellid_core::geometry::Point;

fn blobs(centers: &[Point], per: usize, sigma: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    centers
        .iter()
        .flat_map(|c| (0..per).map(|_| c + Point::new(d.sample(&mut rng), d.sample(&mut rng))).collect::<Vec<_>>())
        .collect()
}

fn blob_cloud() -> impl Strategy<Value = Vec<Point>> {
    (vec((-10.0..10.0f64, -10.0..10.0f64), 1..6), 10usize..40, 0.1..1.5f64, any::<u64>()).prop_map(
        |(centers, per, sigma, seed)| {
            let centers: Vec<Point> = centers.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            blobs(&centers, per, sigma, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn elbo_never_decreases(pts in blob_cloud(), seed in 0u64..1000) {
        let res = fit_vigmm(&pts, &VigmmConfig { seed, ..VigmmConfig::default() }).unwrap();
        for w in res.elbo_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-7, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical(pts in blob_cloud(), seed in 0u64..1000) {
        let cfg = VigmmConfig { seed, ..VigmmConfig::default() };
        prop_assert_eq!(fit_vigmm(&pts, &cfg).unwrap(), fit_vigmm(&pts, &cfg).unwrap());
    }

    #[test]
    fn covariances_are_spd(pts in blob_cloud(), seed in 0u64..1000) {
        let res = fit_vigmm(&pts, &VigmmConfig { seed, ..VigmmConfig::default() }).unwrap();
        prop_assert!(!res.is_empty());
        for c in &res.components {
            let cov = c.covariance;
            prop_assert!((cov - cov.transpose()).amax() <= 1e-12 * cov.amax());
            prop_assert!(cov.symmetric_eigenvalues().min() > 0.0, "{cov}");
        }
        let total: f64 = res.components.iter().map(|c| c.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(res.assignments.iter().all(|&a| a < res.len()));
    }
}

#[test]
fn separated_components_are_recovered() {
    let grid: Vec<Point> = (0..6).map(|i| Point::new(9.0 * (i % 3) as f64, 9.0 * (i / 3) as f64)).collect();
    let mut hits = 0;
    let mut log = Vec::new();
    for run in 0..30u64 {
        let j = 1 + (run % 6) as usize;
        let pts = blobs(&grid[..j], 80, 0.5, 500 + run);
        let res = fit_vigmm(&pts, &VigmmConfig { n_max: 30, seed: run, ..VigmmConfig::default() }).unwrap();
        hits += usize::from(res.len() == j);
        log.push((j, res.len()));
    }
    assert!(hits * 10 >= 30 * 9, "{hits}/30 recovered: {log:?}");
}

/// Connected components of the core points under the ε-neighbor relation.
fn core_components(pts: &[Point], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = pts.len();
    let near = |i: usize, j: usize| (pts[i] - pts[j]).norm() <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    let mut comp = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || comp[s].is_some() {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = Some(next);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if core[j] && comp[j].is_none() && near(i, j) {
                    comp[j] = Some(next);
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dbscan_core_partition_matches_brute_force(
        raw in vec((-4.0..4.0f64, -4.0..4.0f64), 1..120),
        eps in 0.2..1.5f64,
        min_pts in 1usize..6,
    ) {
        let pts: Vec<Point> = raw.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let res = dbscan_baseline(&pts, eps, min_pts).unwrap();
        prop_assert_eq!(res.assignments.len(), pts.len());
        let comp = core_components(&pts, eps, min_pts);
        let n_comp = comp.iter().flatten().max().map_or(0, |m| m + 1);
        prop_assert_eq!(res.len(), n_comp.max(1));
        let core: Vec<usize> = (0..pts.len()).filter(|&i| comp[i].is_some()).collect();
        for &i in &core {
            for &j in &core {
                prop_assert_eq!(comp[i] == comp[j], res.assignments[i] == res.assignments[j]);
            }
        }
    }
}
