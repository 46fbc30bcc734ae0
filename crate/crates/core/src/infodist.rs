//! Distances, divergences and entropies on finite distributions.
//!
//! Everything is returned in bits. `0 log 0 = 0` and `log 0 = -inf`.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{invalid, DirlError, Result};

/// Largest product alphabet the exact hypothesis test will enumerate.
pub const MAX_OUTCOMES: usize = 10_000_000;

/// Tolerance on the unit norm of a square-root embedded point.
pub const SQRT_NORM_TOL: f64 = 1e-10;

/// Half the L1 distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Bhattacharyya coefficient `sum sqrt(p q)`.
pub fn fidelity(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().min(1.0)
}

/// A distribution mapped onto the nonnegative orthant of the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtPoint {
    pub coords: Vec<f64>,
}

impl SqrtPoint {
    pub fn distance(&self, other: &SqrtPoint) -> f64 {
        euclidean(&self.coords, &other.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

pub fn sqrt_embed(p: &[f64]) -> SqrtPoint {
    SqrtPoint {
        coords: p.iter().map(|v| v.sqrt()).collect(),
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// `H(t, 1-t)` in bits.
pub fn binary_entropy(t: f64) -> f64 {
    entropy(&[t, 1.0 - t])
}

/// Entropy of the product output distribution of a word.
pub fn word_entropy(w: &ChannelModel, word: &[usize]) -> f64 {
    word.iter().map(|&x| entropy(w.row(x))).sum()
}

/// Renyi divergence of order `alpha > 1`, `+inf` if `p` is not dominated by `q`.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(invalid(format!("renyi order must exceed 1, got {alpha}")));
    }
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        s += a.powf(alpha) * b.powf(1.0 - alpha);
    }
    Ok((s.log2() / (alpha - 1.0)).max(0.0))
}

/// Optimal test for `D_h^eps(p || q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTest {
    /// `-log Q(T)` of the Neyman-Pearson test with a fractional boundary outcome.
    pub randomized: f64,
    /// Same, with the boundary outcome accepted in full.
    pub deterministic_prefix: f64,
    /// Q-mass accepted by the randomized test.
    pub q_accept: f64,
}

/// Hypothesis-testing relative entropy with rejection budget `eps` in `[0, 1)`.
pub fn hypothesis_testing_divergence(p: &[f64], q: &[f64], eps: f64) -> Result<HypothesisTest> {
    if p.len() != q.len() {
        return Err(invalid("hypothesis test needs equal alphabets"));
    }
    if p.len() > MAX_OUTCOMES {
        return Err(DirlError::SizeGuard {
            what: "hypothesis test outcomes",
            requested: p.len() as u128,
            limit: MAX_OUTCOMES as u128,
        });
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("epsilon must lie in [0,1), got {eps}")));
    }
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let ratio = |i: usize| if q[i] == 0.0 { f64::INFINITY } else { p[i] / q[i] };
    order.sort_by(|&i, &j| ratio(j).total_cmp(&ratio(i)));

    let target = 1.0 - eps;
    let (mut p_acc, mut q_acc, mut q_prefix) = (0.0, 0.0, 0.0);
    for &i in &order {
        if p_acc >= target {
            break;
        }
        let need = target - p_acc;
        if p[i] <= need {
            p_acc += p[i];
            q_acc += q[i];
            q_prefix = q_acc;
        } else {
            q_prefix = q_acc + q[i];
            q_acc += q[i] * need / p[i];
            p_acc = target;
        }
    }
    Ok(HypothesisTest {
        randomized: -q_acc.min(1.0).log2(),
        deterministic_prefix: -q_prefix.min(1.0).log2(),
        q_accept: q_acc,
    })
}

/// Product distribution of per-position rows, first position slowest.
pub fn product_distribution(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let size = rows
        .iter()
        .try_fold(1usize, |acc, r| acc.checked_mul(r.len()))
        .filter(|&s| s <= MAX_OUTCOMES)
        .ok_or(DirlError::SizeGuard {
            what: "product alphabet",
            requested: rows.iter().map(|r| r.len() as u128).product(),
            limit: MAX_OUTCOMES as u128,
        })?;
    let mut out = Vec::with_capacity(size);
    out.push(1.0);
    for r in rows {
        out = out
            .iter()
            .flat_map(|&a| r.iter().map(move |&b| a * b))
            .collect();
    }
    Ok(out)
}

/// Output distribution `W_{x^n}` of a word on `Y^n`.
pub fn word_distribution(w: &ChannelModel, word: &[usize]) -> Result<Vec<f64>> {
    let rows: Vec<&[f64]> = word.iter().map(|&x| w.row(x)).collect();
    product_distribution(&rows)
}

/// `K(d) = (log max(d, 3))^2`.
pub fn k_constant(y_size: usize) -> f64 {
    (y_size.max(3) as f64).log2().powi(2)
}

/// `c = 1 / (36 K(|Y|))`.
pub fn c_constant(y_size: usize) -> f64 {
    1.0 / (36.0 * k_constant(y_size))
}

/// Bound `2 exp(-delta^2 / (36 K))` on the first-kind error of a typical set.
pub fn lemma21_bound(delta: f64, y_size: usize) -> f64 {
    2.0 * (-delta * delta * c_constant(y_size)).exp()
}

/// Decoder parameters for one codeword's entropy-typical set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalSetSpec {
    pub owner_word: Vec<usize>,
    /// The set keeps `y^n` with `|log W(y^n) + H| <= delta sqrt(n)`.
    pub delta: f64,
    pub owner_entropy: f64,
}

impl TypicalSetSpec {
    pub fn new(w: &ChannelModel, owner_word: Vec<usize>, delta: f64) -> Self {
        let owner_entropy = word_entropy(w, &owner_word);
        TypicalSetSpec {
            owner_word,
            delta,
            owner_entropy,
        }
    }

    /// Whether `delta` lies in the range where the concentration bound applies.
    pub fn delta_in_range(&self, y_size: usize) -> bool {
        let n = self.owner_word.len() as f64;
        self.delta <= n.sqrt() * (y_size as f64).log2()
    }
}

/// Second-kind bound for one ordered pair of words.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    /// Fidelity product over positions.
    pub epsilon: f64,
    pub bound: f64,
}

/// Bound on `W_{x^n}(T_{x'^n})` from the fidelity product of the two words.
pub fn lemma31_bound(
    source: &[usize],
    owner: &[usize],
    w: &ChannelModel,
    delta: f64,
) -> PairBound {
    let n = source.len() as f64;
    let epsilon: f64 = source
        .iter()
        .zip(owner)
        .map(|(&x, &xp)| fidelity(w.row(x), w.row(xp)))
        .product();
    let dh = word_entropy(w, source) - word_entropy(w, owner);
    let bound = lemma21_bound(delta, w.output_size())
        + epsilon * (1.0 + (2.0 * delta * n.sqrt() + dh).exp2());
    PairBound { epsilon, bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(total_variation(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert!(close(total_variation(&[0.7, 0.3], &[0.4, 0.6]), 0.3, 1e-15));
    }

    #[test]
    fn fidelity_examples() {
        assert!(close(fidelity(&[0.2, 0.8], &[0.2, 0.8]), 1.0, 1e-15));
        assert_eq!(fidelity(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!(close(fidelity(&[0.5, 0.5], &[0.9, 0.1]), 0.894427190999916, 1e-14));
    }

    #[test]
    fn sqrt_embed_examples() {
        assert_eq!(sqrt_embed(&[1.0, 0.0]).coords, vec![1.0, 0.0]);
        let s = sqrt_embed(&[0.25, 0.75]);
        assert!(close(s.coords[0], 0.5, 1e-15));
        assert!(close(s.coords[1], 0.866025403784439, 1e-14));
        assert!(close(s.norm(), 1.0, SQRT_NORM_TOL));
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&[0.5, 0.5]), 1.0, 1e-15));
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert!(close(entropy(&[0.9, 0.1]), 0.468995593589281, 1e-14));
    }

    #[test]
    fn renyi_examples() {
        assert!(close(renyi_divergence(&[0.3, 0.7], &[0.3, 0.7], 3.0).unwrap(), 0.0, 1e-14));
        assert!(close(renyi_divergence(&[1.0, 0.0], &[0.5, 0.5], 2.0).unwrap(), 1.0, 1e-15));
        assert_eq!(renyi_divergence(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap(), f64::INFINITY);
        assert!(renyi_divergence(&[1.0, 0.0], &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn dh_examples() {
        let t = hypothesis_testing_divergence(&[0.3, 0.7], &[0.3, 0.7], 0.5).unwrap();
        assert!(close(t.randomized, 1.0, 1e-14));
        let t = hypothesis_testing_divergence(&[1.0, 0.0], &[0.5, 0.5], 0.1).unwrap();
        assert!(close(t.randomized, 1.15200309344505, 1e-13));
        assert!(close(t.deterministic_prefix, 1.0, 1e-15));
        let t = hypothesis_testing_divergence(&[0.5, 0.5], &[0.0, 1.0], 0.5).unwrap();
        assert_eq!(t.randomized, f64::INFINITY);
        assert!(hypothesis_testing_divergence(&[1.0, 0.0], &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn constants() {
        assert!(close(k_constant(2), 2.51210612869226, 1e-13));
        assert!(close(c_constant(2), 0.0110575653872705558, 1e-15));
        assert!(close(k_constant(8), 9.0, 1e-14));
        assert!(close(c_constant(8), 1.0 / 324.0, 1e-16));
        assert_eq!(lemma21_bound(0.0, 2), 2.0);
    }

    #[test]
    fn lemma31_examples() {
        let w = ChannelModel::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            None,
        )
        .unwrap();
        let b = lemma31_bound(&[0, 0, 0, 0], &[1, 1, 1, 1], &w, 1.0);
        assert!(close(b.epsilon, 0.1296, 1e-14));
        assert!(close(b.bound, 4.18120668955223, 1e-12));

        let b = lemma31_bound(&[0, 1, 0], &[0, 1, 0], &w, 1.0);
        assert!(close(b.epsilon, 1.0, 1e-14));
        assert!(b.bound > 1.0);

        let id = ChannelModel::identity(2).unwrap();
        let b = lemma31_bound(&[0, 1, 1], &[1, 1, 0], &id, 2.0);
        assert_eq!(b.epsilon, 0.0);
        assert_eq!(b.bound, lemma21_bound(2.0, 2));
    }

    #[test]
    fn product_guard() {
        let r = [0.5, 0.5];
        let rows: Vec<&[f64]> = vec![&r; 24];
        assert!(product_distribution(&rows).unwrap_err().is_size_guard());
        let rows: Vec<&[f64]> = vec![&r; 3];
        assert_eq!(product_distribution(&rows).unwrap(), vec![0.125; 8]);
    }

    fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..6).prop_flat_map(|k| (dist(k), dist(k)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fuchs_van_de_graaf((p, q) in pair()) {
            let f = fidelity(&p, &q);
            let tv = total_variation(&p, &q);
            prop_assert!(1.0 - f <= tv + 1e-12);
            prop_assert!(tv <= (1.0 - f * f).max(0.0).sqrt() + 1e-12);
        }

        #[test]
        fn sqrt_sandwich((p, q) in pair()) {
            let f = fidelity(&p, &q);
            let d2 = sqrt_embed(&p).distance(&sqrt_embed(&q)).powi(2);
            prop_assert!(1.0 - f * f <= d2 + 1e-12);
            prop_assert!(d2 <= 2.0 * (1.0 - f * f) + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn renyi_additive((p1, q1) in pair(), (p2, q2) in pair(), alpha in 1.1f64..4.0) {
            let joint_p = product_distribution(&[&p1, &p2]).unwrap();
            let joint_q = product_distribution(&[&q1, &q2]).unwrap();
            let lhs = renyi_divergence(&joint_p, &joint_q, alpha).unwrap();
            let rhs = renyi_divergence(&p1, &q1, alpha).unwrap()
                + renyi_divergence(&p2, &q2, alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn dh_below_renyi((p, q) in pair(), eps in 0.01f64..0.99, alpha in 1.1f64..4.0) {
            let dh = hypothesis_testing_divergence(&p, &q, eps).unwrap().randomized;
            let da = renyi_divergence(&p, &q, alpha).unwrap();
            let rhs = da - alpha / (alpha - 1.0) * (1.0 - eps).log2();
            prop_assert!(dh <= rhs + 1e-9);
        }

        #[test]
        fn dh_monotone_in_eps((p, q) in pair(), e1 in 0.0f64..0.98, gap in 0.0f64..0.5) {
            let e2 = (e1 + gap).min(0.99);
            let d1 = hypothesis_testing_divergence(&p, &q, e1).unwrap().randomized;
            let d2 = hypothesis_testing_divergence(&p, &q, e2).unwrap().randomized;
            prop_assert!(d1 <= d2 + 1e-12);
        }
    }
}
