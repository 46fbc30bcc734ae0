//! DI code construction: packing alphabet, minimum-distance outer code,
//! entropy binning and typical-set decoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{invalid, DirlError, Result};
use crate::geometry::{max_packing, Mode, PointCloud, DIST_TOL};
use crate::infodist::{binary_entropy, c_constant, word_entropy, TypicalSetSpec};

/// Largest `q^n` the lexicographic scan will enumerate.
pub const GREEDY_WORD_LIMIT: u128 = 1 << 22;

/// Largest linear code `p^k` the linear mode will build.
pub const LINEAR_CODE_LIMIT: u128 = 1 << 20;

/// Consecutive rejected generator rows before the linear mode stops.
const LINEAR_MAX_REJECTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub t: f64,
    pub e_target: f64,
    pub beta: f64,
    pub tau: f64,
    pub delta: f64,
    pub c: f64,
    pub y_size: usize,
    /// `β >= √2`: the packing alphabet has one letter and the rate bound is trivial.
    pub remark1_trivial: bool,
    /// `c t β² > 1`: outside the regime where the error guarantee is proven.
    pub guarantee_void: bool,
    /// `δ > √n log|Y|`.
    pub delta_out_of_range: bool,
    pub predicted_lambda1: f64,
    pub predicted_lambda2: f64,
    pub predicted_e1: f64,
    pub predicted_e2: f64,
}

impl CodeParams {
    /// Whether the construction's error guarantees apply.
    pub fn proven_regime(&self) -> bool {
        !self.remark1_trivial && !self.guarantee_void
    }
}

/// Couples the target exponent to the packing radius and typicality slope.
pub fn derive_params(e: f64, t: f64, y_size: usize, n: usize) -> Result<CodeParams> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(invalid(format!("exponent must be positive, got {e}")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("t must lie in (0,1), got {t}")));
    }
    if n == 0 {
        return Err(invalid("blocklength must be at least 1"));
    }
    if y_size < 2 {
        return Err(invalid("output alphabet needs at least 2 symbols"));
    }
    let c = c_constant(y_size);
    let beta = (6.0 * e / (c * t * t)).powf(0.25);
    let tau = (2f64.sqrt() - 1.0) * t * beta * beta;
    let nf = n as f64;
    let delta = tau * nf.sqrt();
    let tail = (-c * tau * tau * nf).exp();
    Ok(CodeParams {
        n,
        t,
        e_target: e,
        beta,
        tau,
        delta,
        c,
        y_size,
        remark1_trivial: beta >= 2f64.sqrt(),
        guarantee_void: c * t * beta * beta > 1.0,
        delta_out_of_range: delta > nf.sqrt() * (y_size as f64).log2(),
        predicted_lambda1: 2.0 * tail,
        predicted_lambda2: 5.0 * tail,
        predicted_e1: e - 1.0 / nf,
        predicted_e2: e - 3.0 / nf,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterAlphabet {
    /// Channel input indices, ascending.
    pub indices: Vec<usize>,
    /// True when the packing is a proven maximum.
    pub exact: bool,
}

/// Input letters whose square-root embeddings are pairwise at least `2β` apart.
pub fn build_letter_alphabet(w: &ChannelModel, beta: f64) -> Result<LetterAlphabet> {
    let p = max_packing(&PointCloud::sqrt_embedding(w), beta, Mode::Auto)?;
    Ok(LetterAlphabet {
        indices: p.center_indices,
        exact: p.exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeMode {
    /// Lexicographic greedy scan of `[q]^n`.
    Greedy,
    /// Random linear code over the largest prime field not exceeding `q`.
    Linear,
    /// Greedy when `q^n` fits, linear otherwise.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceCode {
    /// Words over `0..q`.
    pub codewords: Vec<Vec<usize>>,
    /// Every pair differs in at least this many positions.
    pub required_distance: usize,
    /// Smallest pairwise distance; `n` when there is a single word.
    pub min_distance: usize,
    pub linear: bool,
    /// Only one word: `q = 1` with a nontrivial distance requirement.
    pub single_codeword: bool,
}

/// `⌊tn⌋ + 1`, the least distance exceeding `tn`.
pub fn required_distance(n: usize, t: f64) -> usize {
    (t * n as f64).floor() as usize + 1
}

/// Code over `[q]^n` with pairwise Hamming distance strictly above `tn`.
pub fn distance_code(q: usize, n: usize, t: f64, mode: CodeMode, seed: u64) -> Result<DistanceCode> {
    if q == 0 || n == 0 {
        return Err(invalid("distance code needs q >= 1 and n >= 1"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("t must lie in (0,1), got {t}")));
    }
    let d = required_distance(n, t);
    if q == 1 {
        return Ok(DistanceCode {
            codewords: vec![vec![0; n]],
            required_distance: d,
            min_distance: n,
            linear: false,
            single_codeword: true,
        });
    }
    let words = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let linear = match mode {
        CodeMode::Greedy if words > GREEDY_WORD_LIMIT => {
            return Err(DirlError::SizeGuard {
                what: "greedy code words",
                requested: words,
                limit: GREEDY_WORD_LIMIT,
            })
        }
        CodeMode::Greedy => false,
        CodeMode::Linear => true,
        CodeMode::Auto => words > GREEDY_WORD_LIMIT,
    };
    let codewords = if linear {
        linear_code(q, n, d, seed)
    } else {
        greedy_code(q, n, d)
    };
    let min_distance = min_pairwise_distance(&codewords).unwrap_or(n);
    Ok(DistanceCode {
        single_codeword: codewords.len() == 1,
        codewords,
        required_distance: d,
        min_distance,
        linear,
    })
}

fn far_enough(a: &[u16], b: &[u16], d: usize) -> bool {
    let mut diff = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            diff += 1;
            if diff >= d {
                return true;
            }
        }
    }
    false
}

fn greedy_code(q: usize, n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut accepted: Vec<Vec<u16>> = Vec::new();
    let mut word = vec![0u16; n];
    loop {
        if accepted.iter().all(|c| far_enough(c, &word, d)) {
            accepted.push(word.clone());
        }
        // increment, last position fastest
        let mut i = n;
        loop {
            if i == 0 {
                return accepted
                    .into_iter()
                    .map(|w| w.into_iter().map(usize::from).collect())
                    .collect();
            }
            i -= 1;
            word[i] += 1;
            if (word[i] as usize) < q {
                break;
            }
            word[i] = 0;
        }
    }
}

fn largest_prime_at_most(q: usize) -> usize {
    (2..=q)
        .rev()
        .find(|&p| (2..p).take_while(|k| k * k <= p).all(|k| p % k != 0))
        .unwrap_or(2)
}

fn linear_code(q: usize, n: usize, d: usize, seed: u64) -> Vec<Vec<usize>> {
    let p = largest_prime_at_most(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut span: Vec<Vec<u16>> = vec![vec![0; n]];
    let mut rejects = 0;
    while rejects < LINEAR_MAX_REJECTS && (span.len() as u128) * (p as u128) <= LINEAR_CODE_LIMIT {
        let g: Vec<u16> = (0..n).map(|_| rng.random_range(0..p) as u16).collect();
        let mut fresh = Vec::with_capacity(span.len() * (p - 1));
        let ok = (1..p).all(|a| {
            span.iter().all(|s| {
                let v: Vec<u16> = s
                    .iter()
                    .zip(&g)
                    .map(|(&x, &y)| ((x as usize + a * y as usize) % p) as u16)
                    .collect();
                let weight = v.iter().filter(|&&c| c != 0).count();
                fresh.push(v);
                weight >= d
            })
        });
        if ok {
            span.extend(fresh);
            rejects = 0;
        } else {
            rejects += 1;
        }
    }
    span.sort();
    span.into_iter()
        .map(|w| w.into_iter().map(usize::from).collect())
        .collect()
}

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn min_pairwise_distance(words: &[Vec<usize>]) -> Option<usize> {
    let mut best = None;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            let d = hamming(a, b);
            best = Some(best.map_or(d, |m: usize| m.min(d)));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    /// Surviving codewords, in their original order.
    pub kept: Vec<Vec<usize>>,
    /// The kept bin covers entropies in `[s-1, s]`.
    pub bin: usize,
    /// Number of bins, `⌈n log|Y|⌉`.
    pub bins: usize,
    /// Entropies of the kept codewords, bits.
    pub entropies: Vec<f64>,
}

/// Keeps the most populated unit-width entropy bin; ties go to the lowest bin.
///
/// Codewords are channel input sequences.
pub fn entropy_binning(codewords: &[Vec<usize>], w: &ChannelModel) -> Binning {
    let n = codewords.first().map_or(1, Vec::len);
    let bins = ((n as f64 * (w.output_size() as f64).log2()).ceil() as usize).max(1);
    let hs: Vec<f64> = codewords.iter().map(|c| word_entropy(w, c)).collect();
    let bin_of = |h: f64| (h.ceil() as usize).clamp(1, bins);
    let mut counts = vec![0usize; bins + 1];
    for &h in &hs {
        counts[bin_of(h)] += 1;
    }
    let bin = (1..=bins).fold(1, |b, s| if counts[s] > counts[b] { s } else { b });
    let (kept, entropies) = codewords
        .iter()
        .zip(&hs)
        .filter(|(_, &h)| bin_of(h) == bin)
        .map(|(c, &h)| (c.clone(), h))
        .unzip();
    Binning {
        kept,
        bin,
        bins,
        entropies,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeOptions {
    pub code_mode: CodeMode,
    pub seed: u64,
}

impl Default for CodeOptions {
    fn default() -> Self {
        CodeOptions {
            code_mode: CodeMode::Auto,
            seed: 0,
        }
    }
}

/// A DI code with entropy-typical decoding sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DICode {
    pub params: CodeParams,
    /// Channel input indices used as letters.
    pub letter_alphabet: Vec<usize>,
    pub alphabet_exact: bool,
    /// Codewords as channel input sequences.
    pub codewords: Vec<Vec<usize>>,
    /// Shared typicality parameter of every decoding set.
    pub delta: f64,
    /// `H(W_{u_j})` in bits, one per codeword.
    pub entropies: Vec<f64>,
    pub min_hamming: usize,
    pub required_distance: usize,
    pub entropy_bin: [f64; 2],
    /// Size of the outer code before binning.
    pub outer_size: usize,
    pub linear: bool,
    pub single_codeword: bool,
    /// `log N / n`.
    pub rate: f64,
    /// `(1-t) log |X0| - H(t) - log⌈n log|Y|⌉ / n`.
    pub rate_lower_bound: f64,
}

impl DICode {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn decoder(&self, j: usize) -> TypicalSetSpec {
        TypicalSetSpec {
            owner_word: self.codewords[j].clone(),
            delta: self.delta,
            owner_entropy: self.entropies[j],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks the distance, entropy-bin and letter-separation invariants.
    pub fn check_invariants(&self, w: &ChannelModel) -> Result<()> {
        let tn = self.params.t * self.n() as f64;
        if self.codewords.iter().any(|c| c.len() != self.n() || c.iter().any(|&x| x >= w.num_inputs())) {
            return Err(invalid("codeword does not match the channel or blocklength"));
        }
        for (i, a) in self.codewords.iter().enumerate() {
            for b in &self.codewords[i + 1..] {
                if (hamming(a, b) as f64) <= tn {
                    return Err(invalid("codewords closer than tn"));
                }
            }
        }
        let lo = self.entropies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 1.0 + 1e-12 {
            return Err(invalid("codeword entropies spread over more than one bit"));
        }
        let cloud = PointCloud::sqrt_embedding(w);
        for (i, &a) in self.letter_alphabet.iter().enumerate() {
            for &b in &self.letter_alphabet[i + 1..] {
                if cloud.distance(a, b) < 2.0 * self.params.beta - DIST_TOL {
                    return Err(invalid("letters closer than 2 beta"));
                }
            }
        }
        Ok(())
    }
}

/// Finite-n rate guarantee for a given alphabet size.
pub fn rate_lower_bound(alphabet: usize, n: usize, t: f64, y_size: usize) -> f64 {
    let nf = n as f64;
    (1.0 - t) * (alphabet as f64).log2()
        - binary_entropy(t)
        - (nf * (y_size as f64).log2()).ceil().log2() / nf
}

/// Runs the full pipeline: parameters, letters, outer code, binning, decoders.
pub fn construct(w: &ChannelModel, n: usize, e: f64, t: f64, opts: CodeOptions) -> Result<DICode> {
    let params = derive_params(e, t, w.output_size(), n)?;
    let alphabet = build_letter_alphabet(w, params.beta)?;
    let outer = distance_code(alphabet.indices.len(), n, t, opts.code_mode, opts.seed)?;
    let words: Vec<Vec<usize>> = outer
        .codewords
        .iter()
        .map(|c| c.iter().map(|&l| alphabet.indices[l]).collect())
        .collect();
    let binning = entropy_binning(&words, w);
    let size = binning.kept.len();
    let min_hamming = min_pairwise_distance(&binning.kept).unwrap_or(n);
    Ok(DICode {
        delta: params.delta,
        rate: (size as f64).log2() / n as f64,
        rate_lower_bound: rate_lower_bound(alphabet.indices.len(), n, t, w.output_size()),
        letter_alphabet: alphabet.indices,
        alphabet_exact: alphabet.exact,
        codewords: binning.kept,
        entropies: binning.entropies,
        min_hamming,
        required_distance: outer.required_distance,
        entropy_bin: [binning.bin as f64 - 1.0, binning.bin as f64],
        outer_size: outer.codewords.len(),
        linear: outer.linear,
        single_codeword: size == 1,
        params,
    })
}

/// Builds a code for each `t` and keeps the highest rate, first grid point on ties.
pub fn construct_best(w: &ChannelModel, n: usize, e: f64, ts: &[f64], opts: CodeOptions) -> Result<DICode> {
    let mut best: Option<DICode> = None;
    for &t in ts {
        let code = construct(w, n, e, t, opts)?;
        if best.as_ref().is_none_or(|b| code.rate > b.rate) {
            best = Some(code);
        }
    }
    best.ok_or_else(|| invalid("empty t grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bernoulli_family;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn params_oracle() {
        let p = derive_params(1e-5, 0.5, 2, 100).unwrap();
        assert!(close(p.c, 0.0110575653872705558, 1e-15));
        assert!(close(p.beta, 0.383829129785314, 1e-12));
        assert!(close(p.tau, 0.0305119652974975, 1e-13));
        assert!(close(p.delta, p.tau * 10.0, 1e-15));
        assert!(!p.remark1_trivial && !p.guarantee_void);
    }

    #[test]
    fn params_round_trip() {
        let c = c_constant(2);
        for beta in [0.1f64, 0.5, 1.0, 1.3] {
            let e = c * 0.25 * beta.powi(4) / 6.0;
            let p = derive_params(e, 0.5, 2, 10).unwrap();
            assert!(close(p.beta, beta, 1e-12));
        }
    }

    #[test]
    fn remark1_threshold() {
        let p = derive_params(1e-3, 0.5, 2, 10).unwrap();
        assert!(close(p.beta, 1.21377428244197, 1e-11));
        assert!(!p.remark1_trivial);
        assert!(derive_params(2e-3, 0.5, 2, 10).unwrap().remark1_trivial);
        assert!(derive_params(1e-2, 0.5, 2, 10).unwrap().remark1_trivial);
        let edge = 2.0 * c_constant(2) * 0.25 / 3.0;
        assert!(derive_params(edge * (1.0 + 1e-9), 0.5, 2, 10).unwrap().remark1_trivial);
        assert!(!derive_params(edge * (1.0 - 1e-9), 0.5, 2, 10).unwrap().remark1_trivial);
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(derive_params(0.0, 0.5, 2, 10).is_err());
        assert!(derive_params(1e-3, 1.0, 2, 10).is_err());
        assert!(derive_params(1e-3, 0.5, 2, 0).is_err());
    }

    #[test]
    fn letter_alphabet_examples() {
        let id = ChannelModel::identity(2).unwrap();
        assert_eq!(build_letter_alphabet(&id, 0.5).unwrap().indices, vec![0, 1]);
        let flat = ChannelModel::new(vec!["a".into(), "b".into()], vec![vec![0.5, 0.5]; 2], None).unwrap();
        assert_eq!(build_letter_alphabet(&flat, 0.01).unwrap().indices.len(), 1);
        let w = bernoulli_family(2.0, 8).unwrap();
        let a = build_letter_alphabet(&w, 0.1).unwrap();
        assert!(a.exact);
        let g = max_packing(&PointCloud::sqrt_embedding(&w), 0.1, Mode::Greedy).unwrap();
        assert!(g.count <= a.indices.len());
    }

    #[test]
    fn distance_code_examples() {
        let c = distance_code(2, 3, 1.0 / 3.0, CodeMode::Greedy, 0).unwrap();
        assert_eq!(c.codewords, vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        assert_eq!(c.min_distance, 2);
        assert_eq!(distance_code(3, 1, 0.5, CodeMode::Greedy, 0).unwrap().codewords.len(), 3);
        let c = distance_code(1, 5, 0.5, CodeMode::Auto, 0).unwrap();
        assert!(c.single_codeword);
        assert_eq!(c.codewords.len(), 1);
    }

    #[test]
    fn greedy_guard_and_linear_mode() {
        assert!(distance_code(2, 23, 0.3, CodeMode::Greedy, 0).unwrap_err().is_size_guard());
        let c = distance_code(3, 16, 0.3, CodeMode::Auto, 7).unwrap();
        assert!(c.linear);
        assert!(c.min_distance >= c.required_distance);
        assert_eq!(largest_prime_at_most(10), 7);
        assert_eq!(largest_prime_at_most(2), 2);
        let again = distance_code(3, 16, 0.3, CodeMode::Auto, 7).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn binning_examples() {
        let id = ChannelModel::identity(2).unwrap();
        let words = vec![vec![0, 1, 1], vec![1, 1, 0], vec![0, 0, 0]];
        let b = entropy_binning(&words, &id);
        assert_eq!(b.kept.len(), 3);
        assert_eq!(b.bin, 1);

        let w = bernoulli_family(2.0, 2).unwrap();
        let words = vec![vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]];
        assert_eq!(entropy_binning(&words, &w).kept.len(), 3);
    }

    #[test]
    fn binning_pigeonhole_on_bernoulli() {
        let w = bernoulli_family(2.0, 6).unwrap();
        let letters = build_letter_alphabet(&w, 0.2).unwrap().indices;
        let outer = distance_code(letters.len(), 6, 0.3, CodeMode::Greedy, 0).unwrap();
        let words: Vec<Vec<usize>> = outer
            .codewords
            .iter()
            .map(|c| c.iter().map(|&l| letters[l]).collect())
            .collect();
        let b = entropy_binning(&words, &w);
        assert_eq!(b.bins, 6);
        assert!(b.kept.len() * 6 >= words.len());
    }

    #[test]
    fn construct_identity() {
        let id = ChannelModel::identity(2).unwrap();
        let code = construct(&id, 6, 2e-5, 1.0 / 3.0, CodeOptions::default()).unwrap();
        assert_eq!(code.letter_alphabet, vec![0, 1]);
        assert!(code.rate >= code.rate_lower_bound);
        code.check_invariants(&id).unwrap();
        let round = DICode::from_json(&code.to_json().unwrap()).unwrap();
        assert_eq!(round, code);
    }

    #[test]
    fn construct_flat_channel() {
        let flat = ChannelModel::new(vec!["a".into(), "b".into()], vec![vec![0.3, 0.7]; 2], None).unwrap();
        let code = construct(&flat, 5, 1e-4, 0.5, CodeOptions::default()).unwrap();
        assert_eq!(code.len(), 1);
        assert_eq!(code.rate, 0.0);
    }

    #[test]
    fn construct_bernoulli() {
        let w = bernoulli_family(2.0, 6).unwrap();
        let code = construct(&w, 8, 1e-5, 0.5, CodeOptions::default()).unwrap();
        code.check_invariants(&w).unwrap();
        assert!(code.rate >= code.rate_lower_bound);
        assert!(code.params.proven_regime());
    }

    #[test]
    fn best_t_picks_max_rate() {
        let id = ChannelModel::identity(2).unwrap();
        let ts = [0.2, 0.4, 0.6];
        let best = construct_best(&id, 8, 1e-4, &ts, CodeOptions::default()).unwrap();
        for &t in &ts {
            let c = construct(&id, 8, 1e-4, t, CodeOptions::default()).unwrap();
            assert!(c.rate <= best.rate);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn greedy_code_meets_gv(q in 2usize..5, n in 1usize..9, t in 0.05f64..0.95) {
            prop_assume!((q as u128).pow(n as u32) <= 1 << 16);
            let c = distance_code(q, n, t, CodeMode::Greedy, 0).unwrap();
            let nf = n as f64;
            let gv = (nf * (1.0 - t) * (q as f64).log2() - nf * binary_entropy(t)).exp2();
            prop_assert!(c.codewords.len() as f64 >= gv * (1.0 - 1e-12));
            prop_assert!(c.codewords.len() == 1 || c.min_distance as f64 > t * nf);
        }
    }
}
