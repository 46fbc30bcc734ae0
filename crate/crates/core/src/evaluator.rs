//! Error probabilities of DI codes with entropy-typical decoding sets.
//!
//! The membership statistic `log W_{x'^n}(Y^n)` is a sum of per-letter
//! log-probabilities. [`typical_set_prob`] convolves their distributions on
//! a quantized grid while tracking the exact extreme sums in every cell, so
//! each cell is classified as certainly inside, certainly outside, or
//! straddling the typicality band. This yields a certified interval.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::codebook::DICode;
use crate::error::{invalid, DirlError, Result};
use crate::infodist::{entropy, lemma31_bound, MAX_OUTCOMES};

/// Default grid step for the summed log-probabilities, in bits.
pub const DEFAULT_STEP: f64 = 1.0 / (1u64 << 20) as f64;

/// Default cap on the number of grid cells alive at once.
pub const DEFAULT_STATE_LIMIT: usize = 1 << 22;

/// Sums this close to the band edge are treated as ambiguous.
pub const BAND_SLACK: f64 = 1e-9;

/// Outward rounding applied to certified probability masses.
pub const MASS_SLACK: f64 = 1e-13;

/// Default number of ordered pairs evaluated exactly.
pub const DEFAULT_PAIR_BUDGET: usize = 1_000_000;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `[1 - hi, 1 - lo]`.
    pub fn complement(&self) -> Self {
        Interval {
            lo: 1.0 - self.hi,
            hi: 1.0 - self.lo,
        }
    }

    fn max(self, other: Interval) -> Self {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub step: f64,
    pub state_limit: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            step: DEFAULT_STEP,
            state_limit: DEFAULT_STATE_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    mass: f64,
    min: f64,
    max: f64,
}

/// One letter position: `(log W_{x'}(y), W_x(y))` pairs, support mismatch split off.
#[derive(Clone, Debug, PartialEq)]
pub struct LogProbSpectrum {
    pub atoms: Vec<(f64, f64)>,
    /// Mass placed on outcomes the owner letter cannot produce.
    pub neg_inf_mass: f64,
}

impl LogProbSpectrum {
    pub fn new(source_row: &[f64], owner_row: &[f64]) -> Self {
        let mut atoms = Vec::new();
        let mut neg_inf_mass = 0.0;
        for (&m, &q) in source_row.iter().zip(owner_row) {
            if m == 0.0 {
                continue;
            }
            if q == 0.0 {
                neg_inf_mass += m;
            } else {
                atoms.push((q.log2(), m));
            }
        }
        LogProbSpectrum { atoms, neg_inf_mass }
    }
}

/// `P_{Y^n ~ W_{x^n}}[|log W_{x'^n}(Y^n) + H(W_{x'^n})| <= δ √n]` as a certified interval.
pub fn typical_set_prob(
    source: &[usize],
    owner: &[usize],
    w: &ChannelModel,
    delta: f64,
    cfg: DpConfig,
) -> Result<Interval> {
    let h: f64 = owner.iter().map(|&x| entropy(w.row(x))).sum();
    typical_set_prob_cross(source, w, owner, w, h, delta, cfg)
}

/// As [`typical_set_prob`], drawing outputs from `source_ch` while the decoding
/// set is defined by `owner_ch` and `owner_entropy`.
pub fn typical_set_prob_cross(
    source: &[usize],
    source_ch: &ChannelModel,
    owner: &[usize],
    owner_ch: &ChannelModel,
    owner_entropy: f64,
    delta: f64,
    cfg: DpConfig,
) -> Result<Interval> {
    if source.len() != owner.len() || source.is_empty() {
        return Err(invalid("words must have equal positive length"));
    }
    if source_ch.output_size() != owner_ch.output_size() {
        return Err(invalid("channels must share an output alphabet"));
    }
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(invalid("quantization step must be positive"));
    }
    if !(delta >= 0.0) {
        return Err(invalid("typicality delta must be nonnegative"));
    }
    let band = delta * (source.len() as f64).sqrt();
    let mut cells: BTreeMap<i64, Cell> = BTreeMap::new();
    cells.insert(0, Cell { mass: 1.0, min: 0.0, max: 0.0 });
    let mut dropped = false;
    for (&x, &xp) in source.iter().zip(owner) {
        let spec = LogProbSpectrum::new(source_ch.row(x), owner_ch.row(xp));
        dropped |= spec.neg_inf_mass > 0.0;
        let atoms: Vec<(i64, f64, f64)> = spec
            .atoms
            .iter()
            .map(|&(v, m)| ((v / cfg.step).round() as i64, v, m))
            .collect();
        let mut next: BTreeMap<i64, Cell> = BTreeMap::new();
        for (&k, c) in &cells {
            for &(ka, v, m) in &atoms {
                let e = next.entry(k + ka).or_insert(Cell {
                    mass: 0.0,
                    min: f64::INFINITY,
                    max: f64::NEG_INFINITY,
                });
                e.mass += c.mass * m;
                e.min = e.min.min(c.min + v);
                e.max = e.max.max(c.max + v);
            }
        }
        if next.len() > cfg.state_limit {
            return Err(DirlError::SizeGuard {
                what: "typical-set grid cells",
                requested: next.len() as u128,
                limit: cfg.state_limit as u128,
            });
        }
        cells = next;
    }
    let (mut inside, mut ambiguous) = (0.0, 0.0);
    let mut any_outside = dropped;
    for c in cells.values() {
        let (a, b) = (c.min + owner_entropy, c.max + owner_entropy);
        if a >= -band + BAND_SLACK && b <= band - BAND_SLACK {
            inside += c.mass;
        } else if b < -band - BAND_SLACK || a > band + BAND_SLACK {
            any_outside = true;
        } else {
            ambiguous += c.mass;
        }
    }
    let lo = if !any_outside && ambiguous == 0.0 {
        1.0
    } else {
        (inside - MASS_SLACK).max(0.0)
    };
    let hi = if inside == 0.0 && ambiguous == 0.0 {
        0.0
    } else {
        (inside + ambiguous + MASS_SLACK).min(1.0)
    };
    Ok(Interval { lo, hi })
}

/// Exact probability by enumerating all of `Y^n`; the reference for small cases.
pub fn enumerate_typical_prob(
    source: &[usize],
    owner: &[usize],
    w: &ChannelModel,
    delta: f64,
) -> Result<f64> {
    let n = source.len();
    let y = w.output_size();
    let total = (y as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_OUTCOMES as u128 {
        return Err(DirlError::SizeGuard {
            what: "enumerated outcomes",
            requested: total,
            limit: MAX_OUTCOMES as u128,
        });
    }
    let h: f64 = owner.iter().map(|&x| entropy(w.row(x))).sum();
    let band = delta * (n as f64).sqrt();
    let mut acc = 0.0;
    let mut outcome = vec![0usize; n];
    for _ in 0..total {
        let p: f64 = source.iter().zip(&outcome).map(|(&x, &o)| w.row(x)[o]).product();
        let q: f64 = owner.iter().zip(&outcome).map(|(&x, &o)| w.row(x)[o]).product();
        if p > 0.0 && q > 0.0 && (q.log2() + h).abs() <= band {
            acc += p;
        }
        for digit in outcome.iter_mut().rev() {
            *digit += 1;
            if *digit < y {
                break;
            }
            *digit = 0;
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactDp,
    MonteCarlo,
    PairBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Coverage {
    /// Every ordered pair was evaluated.
    Exhaustive,
    /// Only the pairs with the largest analytic bound were evaluated.
    Partial { evaluated: usize, total: usize },
    NoPairs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda2 {
    pub interval: Interval,
    pub coverage: Coverage,
    /// Largest analytic pair bound among pairs that were not evaluated.
    pub analytic_ceiling: Option<f64>,
}

/// Errors of a code; `λ1` and `λ2` are maxima over codewords and ordered pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: Method,
    pub n: usize,
    pub codewords: usize,
    pub lambda1: Interval,
    pub lambda2: Interval,
    /// `-(1/n) ln λ1.hi`.
    #[serde(with = "crate::fmt::json_float")]
    pub e1_measured: f64,
    /// `-(1/n) ln λ2.hi`.
    #[serde(with = "crate::fmt::json_float")]
    pub e2_measured: f64,
    pub coverage: Coverage,
    pub analytic_ceiling: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub convention: String,
}

fn exponent(hi: f64, n: usize) -> f64 {
    -hi.ln() / n as f64
}

/// `λ1 = max_j W_{u_j}(T_{u_j}^c)`.
pub fn measure_lambda1(code: &DICode, w: &ChannelModel, cfg: DpConfig) -> Result<Interval> {
    measure_lambda1_cross(code, w, w, cfg)
}

/// `λ1` with outputs drawn from `source_ch` and decoding sets from `owner_ch`.
pub fn measure_lambda1_cross(
    code: &DICode,
    source_ch: &ChannelModel,
    owner_ch: &ChannelModel,
    cfg: DpConfig,
) -> Result<Interval> {
    let per: Vec<Interval> = (0..code.len())
        .into_par_iter()
        .map(|j| {
            let u = &code.codewords[j];
            typical_set_prob_cross(u, source_ch, u, owner_ch, code.entropies[j], code.delta, cfg)
                .map(|p| p.complement())
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold(Interval::point(0.0), Interval::max))
}

/// `λ2 = max_{j != k} W_{u_j}(T_{u_k})`.
pub fn measure_lambda2(code: &DICode, w: &ChannelModel, pair_budget: usize, cfg: DpConfig) -> Result<Lambda2> {
    measure_lambda2_cross(code, w, w, pair_budget, cfg)
}

pub fn measure_lambda2_cross(
    code: &DICode,
    source_ch: &ChannelModel,
    owner_ch: &ChannelModel,
    pair_budget: usize,
    cfg: DpConfig,
) -> Result<Lambda2> {
    let n_words = code.len();
    let total = n_words * n_words.saturating_sub(1);
    if total == 0 {
        return Ok(Lambda2 {
            interval: Interval::point(0.0),
            coverage: Coverage::NoPairs,
            analytic_ceiling: None,
        });
    }
    let all: Vec<(usize, usize)> = (0..n_words)
        .flat_map(|j| (0..n_words).filter(move |&k| k != j).map(move |k| (j, k)))
        .collect();
    let (pairs, coverage, ceiling) = if total <= pair_budget {
        (all, Coverage::Exhaustive, None)
    } else {
        let mut scored: Vec<((usize, usize), f64)> = all
            .par_iter()
            .map(|&(j, k)| {
                let b = lemma31_bound(&code.codewords[j], &code.codewords[k], owner_ch, code.delta);
                ((j, k), b.bound)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let ceiling = scored.get(pair_budget).map(|s| s.1.min(1.0));
        scored.truncate(pair_budget);
        let pairs = scored.into_iter().map(|s| s.0).collect();
        (
            pairs,
            Coverage::Partial {
                evaluated: pair_budget,
                total,
            },
            ceiling,
        )
    };
    let per: Vec<Interval> = pairs
        .par_iter()
        .map(|&(j, k)| {
            typical_set_prob_cross(
                &code.codewords[j],
                source_ch,
                &code.codewords[k],
                owner_ch,
                code.entropies[k],
                code.delta,
                cfg,
            )
        })
        .collect::<Result<_>>()?;
    let mut interval = per.into_iter().fold(Interval::point(0.0), Interval::max);
    if let Some(c) = ceiling {
        interval.hi = interval.hi.max(c);
    }
    Ok(Lambda2 {
        interval,
        coverage,
        analytic_ceiling: ceiling,
    })
}

const CONVENTION: &str = "max over codewords and ordered pairs";

/// Exact-DP report for both error kinds.
pub fn exact_errors(code: &DICode, w: &ChannelModel, pair_budget: usize, cfg: DpConfig) -> Result<ErrorReport> {
    let lambda1 = measure_lambda1(code, w, cfg)?;
    let l2 = measure_lambda2(code, w, pair_budget, cfg)?;
    let n = code.n();
    Ok(ErrorReport {
        method: Method::ExactDp,
        n,
        codewords: code.len(),
        e1_measured: exponent(lambda1.hi, n),
        e2_measured: exponent(l2.interval.hi, n),
        lambda1,
        lambda2: l2.interval,
        coverage: l2.coverage,
        analytic_ceiling: l2.analytic_ceiling,
        trials: None,
        seed: None,
        convention: CONVENTION.into(),
    })
}

/// Analytic-only report: `λ2` from the fidelity-product pair bound, `λ1` from concentration.
pub fn pair_bound_errors(code: &DICode, w: &ChannelModel) -> ErrorReport {
    let n = code.n();
    let lambda1 = Interval {
        lo: 0.0,
        hi: crate::infodist::lemma21_bound(code.delta, w.output_size()).min(1.0),
    };
    let (coverage, hi) = if code.len() < 2 {
        (Coverage::NoPairs, 0.0)
    } else {
        let hi = (0..code.len())
            .into_par_iter()
            .map(|j| {
                (0..code.len())
                    .filter(|&k| k != j)
                    .map(|k| lemma31_bound(&code.codewords[j], &code.codewords[k], w, code.delta).bound)
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        (Coverage::Exhaustive, hi.min(1.0))
    };
    let lambda2 = Interval { lo: 0.0, hi };
    ErrorReport {
        method: Method::PairBound,
        n,
        codewords: code.len(),
        e1_measured: exponent(lambda1.hi, n),
        e2_measured: exponent(lambda2.hi, n),
        lambda1,
        lambda2,
        coverage,
        analytic_ceiling: Some(hi),
        trials: None,
        seed: None,
        convention: CONVENTION.into(),
    }
}

/// Wilson score interval at 95% for `k` successes in `m` trials.
pub fn wilson(k: u64, m: u64) -> Interval {
    let mf = m as f64;
    let p = k as f64 / mf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / mf;
    let center = (p + z2 / (2.0 * mf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / mf + z2 / (4.0 * mf * mf)).sqrt();
    Interval {
        lo: if k == 0 { 0.0 } else { (center - half).max(0.0) },
        hi: if k == m { 1.0 } else { (center + half).min(1.0) },
    }
}

/// Sampled errors. Source codeword `j` draws from stream `j` of the seeded generator,
/// so the report does not depend on how work is scheduled.
pub fn monte_carlo_errors(code: &DICode, w: &ChannelModel, trials: u64, seed: u64) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(invalid("monte carlo needs at least one trial"));
    }
    let n = code.n();
    let band = code.delta * (n as f64).sqrt();
    let logs: Vec<Vec<f64>> = w.rows().iter().map(|r| r.iter().map(|p| p.log2()).collect()).collect();
    let cdfs: Vec<Vec<f64>> = w
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .scan(0.0, |s, p| {
                    *s += p;
                    Some(*s)
                })
                .collect()
        })
        .collect();
    let n_words = code.len();
    // counts[j][k]: samples from u_j landing in T_{u_k}
    let counts: Vec<Vec<u64>> = (0..n_words)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut hits = vec![0u64; n_words];
            let mut y = vec![0usize; n];
            for _ in 0..trials {
                for (i, &x) in code.codewords[j].iter().enumerate() {
                    let u: f64 = rng.random();
                    let cdf = &cdfs[x];
                    y[i] = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
                }
                for (k, owner) in code.codewords.iter().enumerate() {
                    let s: f64 = owner.iter().zip(&y).map(|(&x, &o)| logs[x][o]).sum();
                    if (s + code.entropies[k]).abs() <= band {
                        hits[k] += 1;
                    }
                }
            }
            hits
        })
        .collect();
    let mut lambda1 = Interval::point(0.0);
    let mut lambda2 = Interval::point(0.0);
    for (j, row) in counts.iter().enumerate() {
        lambda1 = lambda1.max(wilson(trials - row[j], trials));
        for (k, &c) in row.iter().enumerate() {
            if k != j {
                lambda2 = lambda2.max(wilson(c, trials));
            }
        }
    }
    Ok(ErrorReport {
        method: Method::MonteCarlo,
        n,
        codewords: n_words,
        e1_measured: exponent(lambda1.hi, n),
        e2_measured: exponent(lambda2.hi, n),
        lambda1,
        lambda2,
        coverage: if n_words < 2 { Coverage::NoPairs } else { Coverage::Exhaustive },
        analytic_ceiling: None,
        trials: Some(trials),
        seed: Some(seed),
        convention: CONVENTION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bernoulli_family;
    use crate::codebook::{construct, CodeOptions};

    fn bsc() -> ChannelModel {
        ChannelModel::new(
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn identity_self_is_certain() {
        let id = ChannelModel::identity(2).unwrap();
        let p = typical_set_prob(&[0, 1, 1], &[0, 1, 1], &id, 0.5, DpConfig::default()).unwrap();
        assert_eq!(p, Interval::point(1.0));
    }

    #[test]
    fn disjoint_owner_is_zero() {
        let id = ChannelModel::identity(2).unwrap();
        let p = typical_set_prob(&[0, 0], &[1, 1], &id, 5.0, DpConfig::default()).unwrap();
        assert_eq!(p, Interval::point(0.0));
    }

    #[test]
    fn bsc_matches_enumeration() {
        let w = bsc();
        let u = [0, 1, 0, 0, 1, 1];
        let truth = enumerate_typical_prob(&u, &u, &w, 1.0).unwrap();
        let p = typical_set_prob(&u, &u, &w, 1.0, DpConfig::default()).unwrap();
        assert!(p.contains(truth), "{p:?} vs {truth}");
        assert!(p.width() <= 1e-6);
    }

    #[test]
    fn finer_step_does_not_widen() {
        let w = bernoulli_family(2.0, 4).unwrap();
        let a = [1, 2, 3, 4, 5, 2, 3, 4];
        let b = [2, 3, 4, 5, 1, 1, 3, 5];
        let mut last = f64::INFINITY;
        for k in [4, 8, 12, 16, 20] {
            let cfg = DpConfig { step: 0.5f64.powi(k), ..DpConfig::default() };
            let p = typical_set_prob(&a, &b, &w, 0.8, cfg).unwrap();
            let truth = enumerate_typical_prob(&a, &b, &w, 0.8).unwrap();
            assert!(p.contains(truth));
            assert!(p.width() <= last + 1e-15);
            last = p.width();
        }
    }

    #[test]
    fn state_guard() {
        let w = bernoulli_family(3.0, 6).unwrap();
        let word: Vec<usize> = (0..12).map(|i| 1 + i % 7).collect();
        let owner: Vec<usize> = (0..12).map(|i| 1 + (i * 3) % 7).collect();
        let cfg = DpConfig { state_limit: 8, ..DpConfig::default() };
        assert!(typical_set_prob(&word, &owner, &w, 1.0, cfg).unwrap_err().is_size_guard());
    }

    #[test]
    fn identity_code_errors() {
        let id = ChannelModel::identity(2).unwrap();
        let code = construct(&id, 6, 2e-5, 1.0 / 3.0, CodeOptions::default()).unwrap();
        let r = exact_errors(&code, &id, DEFAULT_PAIR_BUDGET, DpConfig::default()).unwrap();
        assert_eq!(r.lambda1, Interval::point(0.0));
        assert_eq!(r.coverage, Coverage::Exhaustive);
        let mc = monte_carlo_errors(&code, &id, 200, 3).unwrap();
        assert_eq!(mc.lambda1.lo, 0.0);
        assert!(mc.lambda1.hi > 0.0);
    }

    #[test]
    fn single_word_has_no_pairs() {
        let flat = ChannelModel::new(vec!["a".into(), "b".into()], vec![vec![0.3, 0.7]; 2], None).unwrap();
        let code = construct(&flat, 4, 1e-4, 0.5, CodeOptions::default()).unwrap();
        let l2 = measure_lambda2(&code, &flat, 10, DpConfig::default()).unwrap();
        assert_eq!(l2.coverage, Coverage::NoPairs);
        assert_eq!(l2.interval, Interval::point(0.0));
    }

    #[test]
    fn partial_coverage_reports_ceiling() {
        let id = ChannelModel::identity(2).unwrap();
        let code = construct(&id, 6, 2e-5, 1.0 / 3.0, CodeOptions::default()).unwrap();
        let l2 = measure_lambda2(&code, &id, 3, DpConfig::default()).unwrap();
        assert!(matches!(l2.coverage, Coverage::Partial { evaluated: 3, .. }));
        assert!(l2.analytic_ceiling.is_some());
        assert!(l2.interval.hi >= l2.analytic_ceiling.unwrap());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let w = bernoulli_family(2.0, 6).unwrap();
        let code = construct(&w, 8, 1e-5, 0.5, CodeOptions::default()).unwrap();
        let a = monte_carlo_errors(&code, &w, 500, 11).unwrap();
        let b = monte_carlo_errors(&code, &w, 500, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_edges() {
        let i = wilson(0, 100);
        assert_eq!(i.lo, 0.0);
        assert!(i.hi > 0.0 && i.hi < 0.05);
        let i = wilson(50, 100);
        assert!(i.contains(0.5));
    }
}
