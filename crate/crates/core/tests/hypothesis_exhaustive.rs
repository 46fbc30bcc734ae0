//! Neyman-Pearson optimum against an exhaustive search over tests.

use dirl::infodist::hypothesis_testing_divergence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest Q-acceptance over every set plus one fractionally accepted outcome.
fn exhaustive(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let m = p.len();
    let target = 1.0 - eps;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        let (ps, qs) = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .fold((0.0, 0.0), |(a, b), i| (a + p[i], b + q[i]));
        if ps >= target - 1e-15 {
            best = best.min(qs);
            continue;
        }
        for z in (0..m).filter(|&z| mask >> z & 1 == 0 && p[z] > 0.0) {
            let g = (target - ps) / p[z];
            if g <= 1.0 {
                best = best.min(qs + g * q[z]);
            }
        }
    }
    -best.log2()
}

fn random_dist(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

#[test]
fn matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..60 {
        let m = rng.random_range(2..=12);
        let p = random_dist(&mut rng, m);
        let q = random_dist(&mut rng, m);
        let eps = rng.random_range(0.0..0.95);
        let got = hypothesis_testing_divergence(&p, &q, eps).unwrap().randomized;
        let want = exhaustive(&p, &q, eps);
        if want.is_infinite() {
            assert!(got.is_infinite() || got > 40.0, "{got} vs inf");
        } else {
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn deterministic_prefix_dominates() {
    let p = [0.5, 0.3, 0.2];
    let q = [0.2, 0.3, 0.5];
    let r = hypothesis_testing_divergence(&p, &q, 0.35).unwrap();
    assert!(r.deterministic_prefix <= r.randomized);
}
