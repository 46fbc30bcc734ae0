//! Packing and covering relations on random clouds.

use dirl::geometry::{estimate_dimension, max_packing, min_covering, Metric, Mode, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng) -> PointCloud {
    let size = rng.random_range(1..=20);
    let dim = rng.random_range(1..=4);
    let pts = (0..size)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    PointCloud::new(pts, Metric::Euclidean, "random").unwrap()
}

#[test]
fn covering_packing_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let cloud = random_cloud(&mut rng);
        let delta = rng.random_range(0.05..0.6);
        let pack = max_packing(&cloud, delta, Mode::Exact).unwrap();
        let cover2 = min_covering(&cloud, 2.0 * delta, Mode::Exact).unwrap();
        assert!(cover2.count <= pack.count);

        let gp = max_packing(&cloud, delta, Mode::Greedy).unwrap();
        let gc = min_covering(&cloud, delta, Mode::Greedy).unwrap();
        let ec = min_covering(&cloud, delta, Mode::Exact).unwrap();
        assert!(gp.count <= pack.count);
        assert!(gc.count >= ec.count);

        // greedy packing centers cover at radius 2δ
        for i in 0..cloud.len() {
            assert!(gp.center_indices.iter().any(|&c| cloud.distance(i, c) <= 2.0 * delta + 1e-12));
        }
        let bigger = max_packing(&cloud, delta * 1.5, Mode::Exact).unwrap();
        assert!(bigger.count <= pack.count);
    }
}

#[test]
fn interval_dimension_is_one() {
    let pts = (0..=1000).map(|i| vec![i as f64 / 1000.0]).collect();
    let cloud = PointCloud::new(pts, Metric::Euclidean, "interval").unwrap();
    let radii: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
    let est = estimate_dimension(&cloud, &radii, Mode::Greedy).unwrap();
    assert!((est.slope - 1.0).abs() <= 0.1, "slope {}", est.slope);
}
