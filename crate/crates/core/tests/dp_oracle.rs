//! Certified DP intervals against brute-force enumeration.

use dirl::channel::ChannelModel;
use dirl::codebook::{construct, CodeOptions};
use dirl::evaluator::{
    enumerate_typical_prob, exact_errors, monte_carlo_errors, typical_set_prob, DpConfig,
    DEFAULT_PAIR_BUDGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rounding slack of the enumeration sum itself.
const ORACLE_TOL: f64 = 1e-12;

fn random_channel(rng: &mut ChaCha8Rng, inputs: usize) -> ChannelModel {
    let matrix = (0..inputs)
        .map(|_| {
            // occasionally a deterministic row, to exercise the -inf atom
            if rng.random_bool(0.1) {
                if rng.random_bool(0.5) { vec![1.0, 0.0] } else { vec![0.0, 1.0] }
            } else {
                let p: f64 = rng.random_range(0.02..0.98);
                vec![1.0 - p, p]
            }
        })
        .collect();
    let labels = (0..inputs).map(|i| i.to_string()).collect();
    ChannelModel::new(labels, matrix, None).unwrap()
}

#[test]
fn hundred_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = DpConfig::default();
    let mut max_width: f64 = 0.0;
    for case in 0..100 {
        let inputs = rng.random_range(2..=4);
        let w = random_channel(&mut rng, inputs);
        let n = rng.random_range(1..=12);
        let source: Vec<usize> = (0..n).map(|_| rng.random_range(0..inputs)).collect();
        let owner: Vec<usize> = if rng.random_bool(0.3) {
            source.clone()
        } else {
            (0..n).map(|_| rng.random_range(0..inputs)).collect()
        };
        let delta = rng.random_range(0.0..2.0);
        let exact = enumerate_typical_prob(&source, &owner, &w, delta).unwrap();
        let iv = typical_set_prob(&source, &owner, &w, delta, cfg).unwrap();
        assert!(iv.lo - ORACLE_TOL <= exact && exact <= iv.hi + ORACLE_TOL, "case {case}: {exact} not in {iv:?}");
        max_width = max_width.max(iv.width());
    }
    assert!(max_width <= 1e-6, "widest interval {max_width}");
}

#[test]
fn finer_steps_nest() {
    let w = ChannelModel::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.9, 0.1], vec![0.3, 0.7]],
        None,
    )
    .unwrap();
    let src = [0, 1, 0, 0, 1, 1, 0, 1];
    let own = [0, 0, 1, 0, 1, 0, 0, 1];
    let mut prev: Option<dirl::evaluator::Interval> = None;
    for k in [4, 8, 12, 20] {
        let cfg = DpConfig {
            step: 1.0 / (1u64 << k) as f64,
            ..DpConfig::default()
        };
        let iv = typical_set_prob(&src, &own, &w, 0.7, cfg).unwrap();
        if let Some(p) = prev {
            assert!(p.lo <= iv.lo + 1e-12 && iv.hi <= p.hi + 1e-12, "{p:?} then {iv:?}");
        }
        prev = Some(iv);
    }
}

#[test]
fn monte_carlo_overlaps_exact() {
    let w = dirl::channel::bernoulli_family(2.0, 6).unwrap();
    let code = construct(&w, 8, 5e-6, 0.5, CodeOptions::default()).unwrap();
    let exact = exact_errors(&code, &w, DEFAULT_PAIR_BUDGET, DpConfig::default()).unwrap();
    let mc = monte_carlo_errors(&code, &w, 100_000, 3).unwrap();
    assert!(mc.lambda1.lo <= exact.lambda1.hi && exact.lambda1.lo <= mc.lambda1.hi);
    assert!(mc.lambda2.lo <= exact.lambda2.hi && exact.lambda2.lo <= mc.lambda2.hi);
}
