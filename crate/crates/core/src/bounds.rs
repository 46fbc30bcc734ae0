//! Closed-form rate bounds, evaluated at finite parameters.
//!
//! Every evaluator returns the raw formula value in bits, even when it is
//! negative, vacuous or undefined (`NaN`). Validity is reported through
//! flags, and clamping is left to the caller.

use std::io::Write;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dedupe_and_purge, ChannelModel};
use crate::error::{invalid, DirlError, Result};
use crate::fmt::{float, opt_float};
use crate::geometry::{max_packing, min_covering, Mode, PointCloud};
use crate::infodist::{binary_entropy, c_constant, entropy, fidelity};

/// Stopping tolerance of the power-constraint bisection.
pub const POWER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Thm1Lower,
    Cor1Lower,
    Thm2Upper,
    Cor2Upper,
    ImprovedGoodLower,
    ImprovedBadUpper,
    Ex1BernLower,
    Ex1BernUpper,
    Ex2DmcLower,
    Ex2DmcUpper,
    Thm5Stein,
    Thm6Stein,
    PowerCapacity,
}

impl FormulaId {
    pub const ALL: [FormulaId; 13] = [
        FormulaId::Thm1Lower,
        FormulaId::Cor1Lower,
        FormulaId::Thm2Upper,
        FormulaId::Cor2Upper,
        FormulaId::ImprovedGoodLower,
        FormulaId::ImprovedBadUpper,
        FormulaId::Ex1BernLower,
        FormulaId::Ex1BernUpper,
        FormulaId::Ex2DmcLower,
        FormulaId::Ex2DmcUpper,
        FormulaId::Thm5Stein,
        FormulaId::Thm6Stein,
        FormulaId::PowerCapacity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::Thm1Lower => "thm1_lower",
            FormulaId::Cor1Lower => "cor1_lower",
            FormulaId::Thm2Upper => "thm2_upper",
            FormulaId::Cor2Upper => "cor2_upper",
            FormulaId::ImprovedGoodLower => "improved_good_lower",
            FormulaId::ImprovedBadUpper => "improved_bad_upper",
            FormulaId::Ex1BernLower => "ex1_bern_lower",
            FormulaId::Ex1BernUpper => "ex1_bern_upper",
            FormulaId::Ex2DmcLower => "ex2_dmc_lower",
            FormulaId::Ex2DmcUpper => "ex2_dmc_upper",
            FormulaId::Thm5Stein => "thm5_stein",
            FormulaId::Thm6Stein => "thm6_stein",
            FormulaId::PowerCapacity => "power_capacity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FormulaId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown formula {s:?}")))
    }

    pub fn needs_channel(self) -> bool {
        matches!(
            self,
            FormulaId::Thm1Lower
                | FormulaId::Thm2Upper
                | FormulaId::Ex2DmcLower
                | FormulaId::Ex2DmcUpper
                | FormulaId::PowerCapacity
        )
    }

    fn default_normalization(self) -> Normalization {
        match self {
            FormulaId::Cor1Lower
            | FormulaId::Cor2Upper
            | FormulaId::ImprovedGoodLower
            | FormulaId::ImprovedBadUpper => Normalization::PerLogN,
            FormulaId::Ex1BernLower | FormulaId::Ex1BernUpper => Normalization::MinusLogLogInvE,
            _ => Normalization::None,
        }
    }
}

/// How the count behind a value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    LowerBound,
    UpperBound,
    NotApplicable,
}

impl Exactness {
    pub fn as_str(self) -> &'static str {
        match self {
            Exactness::Exact => "exact",
            Exactness::LowerBound => "lower_bound",
            Exactness::UpperBound => "upper_bound",
            Exactness::NotApplicable => "n/a",
        }
    }
}

pub mod flags {
    /// Packing radius at least `√2`: the alphabet collapses to one letter.
    pub const REMARK1_TRIVIAL: &str = "remark1_trivial";
    /// `c t β² > 1`.
    pub const GUARANTEE_VOID: &str = "guarantee_void";
    /// `nE/2 < ln 4`.
    pub const PRECONDITION_NE: &str = "precondition_nE_lt_ln4";
    /// `t` outside `(0,1)`.
    pub const T_OUT_OF_RANGE: &str = "t_out_of_range";
    /// An inner logarithm has a nonpositive argument.
    pub const UNDEFINED: &str = "undefined";
    /// Value is at most zero, so the bound says nothing.
    pub const TRIVIAL: &str = "trivial";
    /// The dimension-based form holds only below an unspecified threshold.
    pub const ASYMPTOTIC: &str = "asymptotic";
    /// Membership of `E` in the designated subset cannot be certified.
    pub const SUBSET_UNCERTIFIED: &str = "subset_uncertified";
    /// The support enumeration factor `2^{|Y|}` is included.
    pub const SUPPORT_OVERCOUNT: &str = "support_overcount";
    /// Some channel entry is below `ω`.
    pub const OMEGA_VIOLATED: &str = "omega_violated";
    /// Only one distinct output distribution.
    pub const SINGLE_ROW: &str = "single_row";
    /// The power constraint is inactive.
    pub const CONSTRAINT_INACTIVE: &str = "constraint_inactive";
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub formula_id: FormulaId,
    pub n: Option<usize>,
    pub e: Option<f64>,
    pub t: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub value_bits: f64,
    pub normalized_value: Option<f64>,
    /// Exact remainder dropped by an expansion, reported beside the value.
    pub remainder_bits: Option<f64>,
    pub flags: Vec<String>,
    pub count_exactness: Exactness,
}

impl BoundPoint {
    fn new(formula_id: FormulaId, value_bits: f64) -> Self {
        BoundPoint {
            formula_id,
            n: None,
            e: None,
            t: None,
            eta: None,
            alpha: None,
            value_bits,
            normalized_value: None,
            remainder_bits: None,
            flags: Vec::new(),
            count_exactness: Exactness::NotApplicable,
        }
    }

    fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|g| g == f) {
            self.flags.push(f.to_string());
        }
    }

    pub fn has_flag(&self, f: &str) -> bool {
        self.flags.iter().any(|g| g == f)
    }

    /// No flag that voids the formula at this point.
    pub fn is_valid(&self) -> bool {
        !self.flags.iter().any(|f| {
            matches!(
                f.as_str(),
                flags::REMARK1_TRIVIAL
                    | flags::GUARANTEE_VOID
                    | flags::PRECONDITION_NE
                    | flags::T_OUT_OF_RANGE
                    | flags::UNDEFINED
                    | flags::OMEGA_VIOLATED
            )
        }) && !self.value_bits.is_nan()
    }
}

fn log_penalty(n: usize, y_size: usize) -> f64 {
    let nf = n as f64;
    (nf * (y_size as f64).log2()).ceil().max(1.0).log2() / nf
}

/// `H(t, 1-t)`, `NaN` outside `[0, 1]`.
fn h2(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        binary_entropy(t)
    } else {
        f64::NAN
    }
}

fn count_mode(w: &ChannelModel) -> Mode {
    if w.num_inputs() <= crate::geometry::EXACT_LIMIT {
        Mode::Exact
    } else {
        Mode::Greedy
    }
}

/// Packing radius `(6E/(ct²))^{1/4}`.
pub fn packing_radius(e: f64, t: f64, y_size: usize) -> f64 {
    (6.0 * e / (c_constant(y_size) * t * t)).powf(0.25)
}

/// Covering radius `½ √(1 - e^{-E/2})`.
pub fn covering_radius(e: f64) -> f64 {
    0.5 * (-(-e / 2.0).exp_m1()).sqrt()
}

fn check_e(e: f64) -> Result<()> {
    if e > 0.0 && e.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("exponent must be positive, got {e}")))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(invalid("blocklength must be at least 1"))
    } else {
        Ok(())
    }
}

/// Achievability from the packing number of the square-root set.
pub fn thm1_lower(w: &ChannelModel, n: usize, e: f64, t: f64) -> Result<BoundPoint> {
    check_e(e)?;
    check_n(n)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("t must lie in (0,1), got {t}")));
    }
    let y = w.output_size();
    let beta = packing_radius(e, t, y);
    let p = max_packing(&PointCloud::sqrt_embedding(w), beta, count_mode(w))?;
    let value = (1.0 - t) * (p.count as f64).log2() - binary_entropy(t) - log_penalty(n, y);
    let mut pt = BoundPoint::new(FormulaId::Thm1Lower, value);
    pt.n = Some(n);
    pt.e = Some(e);
    pt.t = Some(t);
    pt.count_exactness = if p.exact { Exactness::Exact } else { Exactness::LowerBound };
    if beta >= 2f64.sqrt() {
        pt.flag(flags::REMARK1_TRIVIAL);
    }
    if c_constant(y) * t * beta * beta > 1.0 {
        pt.flag(flags::GUARANTEE_VOID);
    }
    if value <= 0.0 {
        pt.flag(flags::TRIVIAL);
    }
    Ok(pt)
}

/// Converse from the covering number of the square-root set.
pub fn thm2_upper(w: &ChannelModel, n: usize, e: f64) -> Result<BoundPoint> {
    check_e(e)?;
    check_n(n)?;
    let r = covering_radius(e);
    let c = min_covering(&PointCloud::sqrt_embedding(w), r, count_mode(w))?;
    let mut pt = BoundPoint::new(FormulaId::Thm2Upper, (c.count as f64).log2());
    pt.n = Some(n);
    pt.e = Some(e);
    pt.count_exactness = if c.exact { Exactness::Exact } else { Exactness::UpperBound };
    if (n as f64) * e / 2.0 < 4f64.ln() {
        pt.flag(flags::PRECONDITION_NE);
    }
    Ok(pt)
}

fn dimension_lower(id: FormulaId, d: f64, eta: f64, e: f64, t: f64, n: usize, y_size: usize) -> Result<BoundPoint> {
    check_e(e)?;
    check_n(n)?;
    let c = c_constant(y_size);
    let value = (1.0 - t) / 4.0 * (d - eta) * (c * t * t / (6.0 * e)).log2() - h2(t) - log_penalty(n, y_size);
    let mut pt = BoundPoint::new(id, value);
    pt.n = Some(n);
    pt.e = Some(e);
    pt.t = Some(t);
    pt.eta = Some(eta);
    pt.flag(flags::ASYMPTOTIC);
    if !(t > 0.0 && t < 1.0) {
        pt.flag(flags::T_OUT_OF_RANGE);
    }
    Ok(pt)
}

/// `((1-t)/4)(d-η) log(ct²/(6E)) - H(t) - log⌈n log|Y|⌉/n` with a lower dimension `d`.
pub fn cor1_lower(d_lower: f64, eta: f64, e: f64, t: f64, n: usize, y_size: usize) -> Result<BoundPoint> {
    dimension_lower(FormulaId::Cor1Lower, d_lower, eta, e, t, n, y_size)
}

/// Exact remainder `log(2/√(1-e^{-E/2})) - ½ log(8/E)` per unit of `d + η`.
pub fn cor2_e_term(e: f64) -> f64 {
    (2.0 / (-(-e / 2.0).exp_m1()).sqrt()).log2() - 0.5 * (8.0 / e).log2()
}

fn dimension_upper(id: FormulaId, d: f64, eta: f64, e: f64) -> Result<BoundPoint> {
    check_e(e)?;
    let mut pt = BoundPoint::new(id, 0.5 * (d + eta) * (8.0 / e).log2());
    pt.e = Some(e);
    pt.eta = Some(eta);
    pt.remainder_bits = Some((d + eta) * cor2_e_term(e));
    pt.flag(flags::ASYMPTOTIC);
    Ok(pt)
}

/// `½(d+η) log(8/E)` with an upper dimension `d`; the dropped `O(E)` term is the remainder.
pub fn cor2_upper(d_upper: f64, eta: f64, e: f64) -> Result<BoundPoint> {
    dimension_upper(FormulaId::Cor2Upper, d_upper, eta, e)
}

/// Lower bound for a designated good exponent subset, using the upper dimension.
pub fn improved_good_lower(d_upper: f64, eta: f64, e: f64, t: f64, n: usize, y_size: usize) -> Result<BoundPoint> {
    let mut pt = dimension_lower(FormulaId::ImprovedGoodLower, d_upper, eta, e, t, n, y_size)?;
    pt.flag(flags::SUBSET_UNCERTIFIED);
    Ok(pt)
}

/// Upper bound for a designated bad exponent subset, using the lower dimension.
pub fn improved_bad_upper(d_lower: f64, eta: f64, e: f64) -> Result<BoundPoint> {
    let mut pt = dimension_upper(FormulaId::ImprovedBadUpper, d_lower, eta, e)?;
    pt.flag(flags::SUBSET_UNCERTIFIED);
    Ok(pt)
}

/// `log log(1/E)`.
pub fn loglog_inv(e: f64) -> f64 {
    (1.0 / e).log2().log2()
}

/// Bernoulli channel on the geometric input set with base `a`.
pub fn ex1_bernoulli(a: f64, e: f64, n: usize, t: Option<f64>) -> Result<(BoundPoint, BoundPoint)> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(invalid(format!("base must exceed 1, got {a}")));
    }
    check_e(e)?;
    check_n(n)?;
    let t = t.unwrap_or_else(|| e.powf(0.25));
    let c = c_constant(2);
    let inner = t * c.sqrt() * (a.sqrt() - 1.0).powi(2) / (36.0 * (6.0 * e).sqrt());
    let log_a = inner.ln() / a.ln();
    let lower_v = if log_a > 0.0 {
        (1.0 - t) * log_a.log2() - h2(t) - log_penalty(n, 2)
    } else {
        f64::NAN
    };
    let mut lower = BoundPoint::new(FormulaId::Ex1BernLower, lower_v);
    lower.n = Some(n);
    lower.e = Some(e);
    lower.t = Some(t);
    if log_a <= 0.0 {
        lower.flag(flags::UNDEFINED);
    }
    if !(t > 0.0 && t < 1.0) {
        lower.flag(flags::T_OUT_OF_RANGE);
    }

    let upper_v = ((a / (-(-e / 2.0).exp_m1()).sqrt()).ln() / a.sqrt().ln()).log2();
    let mut upper = BoundPoint::new(FormulaId::Ex1BernUpper, upper_v);
    upper.n = Some(n);
    upper.e = Some(e);
    let norm = loglog_inv(e);
    lower.normalized_value = Some(lower_v - norm);
    upper.normalized_value = Some(upper_v - norm);
    Ok((lower, upper))
}

/// `log2` of a big integer without overflow.
pub fn biguint_log2(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        let x: f64 = v.to_string().parse().unwrap_or(f64::INFINITY);
        return x.log2();
    }
    let shift = bits - 64;
    let top: BigUint = v >> shift;
    let top = top.to_u64_digits().first().copied().unwrap_or(0) as f64;
    top.log2() + shift as f64
}

/// Number of words within Hamming distance `r` of a fixed word in `[q]^n`.
pub fn hamming_ball_volume(n: usize, q: usize, r: usize) -> BigUint {
    let mut total = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    let mut power = BigUint::from(1u32);
    let qm1 = BigUint::from(q.saturating_sub(1));
    for i in 0..=r.min(n) {
        if i > 0 {
            binom = binom * BigUint::from(n - i + 1) / BigUint::from(i);
            power *= &qm1;
        }
        total += &binom * &power;
    }
    total
}

/// Details behind the finite-alphabet bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ex2Details {
    pub distinct_rows: usize,
    pub beta: f64,
    pub max_fidelity: f64,
    pub d_min: usize,
}

/// Finite-alphabet DMC bounds on the purged channel.
pub fn ex2_dmc(w: &ChannelModel, e: f64, n: usize) -> Result<(BoundPoint, BoundPoint, Ex2Details)> {
    if !(e >= 0.0 && e.is_finite()) {
        return Err(invalid(format!("exponent must be nonnegative, got {e}")));
    }
    check_n(n)?;
    let purged = dedupe_and_purge(w).channel;
    let q = purged.num_inputs();
    let y = purged.output_size();
    let nf = n as f64;
    let mut lower_pt = BoundPoint::new(FormulaId::Ex2DmcLower, 0.0);
    let mut upper_pt = BoundPoint::new(FormulaId::Ex2DmcUpper, 0.0);
    for p in [&mut lower_pt, &mut upper_pt] {
        p.n = Some(n);
        p.e = Some(e);
        p.count_exactness = Exactness::Exact;
    }
    if q == 1 {
        lower_pt.flag(flags::SINGLE_ROW);
        upper_pt.flag(flags::SINGLE_ROW);
        let det = Ex2Details {
            distinct_rows: 1,
            beta: f64::NAN,
            max_fidelity: 1.0,
            d_min: 0,
        };
        return Ok((lower_pt, upper_pt, det));
    }
    let cloud = PointCloud::sqrt_embedding(&purged);
    let mut min_dist = f64::INFINITY;
    let mut max_f: f64 = 0.0;
    for i in 0..q {
        for j in i + 1..q {
            min_dist = min_dist.min(cloud.distance(i, j));
            max_f = max_f.max(fidelity(purged.row(i), purged.row(j)));
        }
    }
    let beta = min_dist / 2.0;
    let c = c_constant(y);
    let t = (6.0 * e / (c * beta.powi(4))).sqrt();
    let logq = (q as f64).log2();
    lower_pt.t = Some(t);
    lower_pt.value_bits = (1.0 - t) * logq - h2(t) - log_penalty(n, y);
    if t >= 1.0 {
        lower_pt.flag(flags::T_OUT_OF_RANGE);
    }

    let d_min = if max_f > 0.0 {
        let ln_alpha = -max_f.ln();
        ((nf * e - 4f64.ln()) / ln_alpha).ceil().max(0.0) as usize
    } else {
        0
    };
    let r = d_min.saturating_sub(1) / 2;
    let vol = hamming_ball_volume(n, q, r);
    upper_pt.value_bits = logq - biguint_log2(&vol) / nf;
    if nf * e / 2.0 < 4f64.ln() {
        upper_pt.flag(flags::PRECONDITION_NE);
    }
    let det = Ex2Details {
        distinct_rows: q,
        beta,
        max_fidelity: max_f,
        d_min,
    };
    Ok((lower_pt, upper_pt, det))
}

/// `max H(p)` over input distributions on the purged channel with `E φ <= A`.
pub fn power_capacity(w: &ChannelModel, a: f64) -> Result<BoundPoint> {
    let purged = dedupe_and_purge(w).channel;
    let phi = purged.costs();
    let q = phi.len();
    let min_phi = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pt = BoundPoint::new(FormulaId::PowerCapacity, 0.0);
    if !(a.is_finite()) || a < min_phi - POWER_TOL {
        return Err(DirlError::Infeasible(format!(
            "power constraint {a} below the cheapest input cost {min_phi}"
        )));
    }
    let mean_uniform = phi.iter().sum::<f64>() / q as f64;
    if mean_uniform <= a {
        pt.value_bits = (q as f64).log2();
        pt.flag(flags::CONSTRAINT_INACTIVE);
        return Ok(pt);
    }
    let argmin = phi.iter().filter(|&&p| p <= min_phi + POWER_TOL).count();
    if a <= min_phi + POWER_TOL {
        pt.value_bits = (argmin as f64).log2();
        return Ok(pt);
    }
    let tilt = |mu: f64| -> Vec<f64> {
        let wts: Vec<f64> = phi.iter().map(|p| (-mu * (p - min_phi)).exp()).collect();
        let z: f64 = wts.iter().sum();
        wts.into_iter().map(|v| v / z).collect()
    };
    let mean = |p: &[f64]| p.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
    let mut hi = 1.0;
    while mean(&tilt(hi)) > a {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut p = tilt(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        p = tilt(mid);
        let m = mean(&p);
        if (m - a).abs() <= POWER_TOL {
            break;
        }
        if m > a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    pt.value_bits = entropy(&p);
    Ok(pt)
}

/// Partition resolution with `(α/(α-1)) log(1+δ) = E/2`.
pub fn stein_partition_delta(e: f64, alpha: f64) -> f64 {
    (e * (alpha - 1.0) / (2.0 * alpha)).exp2() - 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm5 {
    pub delta_part: f64,
    pub l_max: u64,
    pub rate_bound: f64,
    pub n0: f64,
}

fn stein_args(e: f64, alpha: f64, lambda: f64) -> Result<()> {
    check_e(e)?;
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(invalid(format!("bounded error must lie in [0,1), got {lambda}")));
    }
    Ok(())
}

/// Stein-regime bound for channels with every entry at least `ω`.
///
/// `delta_part` overrides the resolution derived from `E` and `α`.
pub fn thm5_stein(omega: f64, e: f64, alpha: f64, lambda: f64, delta_part: Option<f64>) -> Result<Thm5> {
    stein_args(e, alpha, lambda)?;
    if !(omega > 0.0 && omega < 1.0) {
        return Err(invalid(format!("omega must lie in (0,1), got {omega}")));
    }
    let d = delta_part.unwrap_or_else(|| stein_partition_delta(e, alpha));
    if !(d > 0.0) {
        return Err(invalid("partition resolution must be positive"));
    }
    let l_max = (-omega.log2() / (1.0 + d).log2()).floor() as u64;
    Ok(Thm5 {
        delta_part: d,
        l_max,
        rate_bound: (l_max.max(1) as f64).log2(),
        n0: -2.0 * alpha * (1.0 - lambda).log2() / (e * (alpha - 1.0)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm6 {
    pub delta_part: f64,
    pub omega_n: f64,
    pub l: u64,
    pub rate_bound: f64,
    /// `e^{2δ} λ`.
    pub inflation_multiplicative: f64,
    /// `λ + δ/2`.
    pub inflation_additive: f64,
}

/// Stein-regime bound for unrestricted channels via truncation at `δ/(n|Y|)`.
pub fn thm6_stein(
    y_size: usize,
    n: usize,
    e: f64,
    alpha: f64,
    delta_trunc: f64,
    lambda: f64,
    delta_part: Option<f64>,
) -> Result<Thm6> {
    stein_args(e, alpha, lambda)?;
    check_n(n)?;
    if !(delta_trunc > 0.0 && delta_trunc < 1.0) {
        return Err(invalid(format!("truncation delta must lie in (0,1), got {delta_trunc}")));
    }
    let d = delta_part.unwrap_or_else(|| stein_partition_delta(e, alpha));
    if !(d > 0.0) {
        return Err(invalid("partition resolution must be positive"));
    }
    let y = y_size as f64;
    let l = (((n as f64).log2() - (delta_trunc / y).log2()) / (1.0 + d).log2()).floor() as u64;
    Ok(Thm6 {
        delta_part: d,
        omega_n: delta_trunc / (n as f64 * y),
        l,
        rate_bound: y + (l.max(1) as f64).log2(),
        inflation_multiplicative: (2.0 * delta_trunc).exp() * lambda,
        inflation_additive: lambda + delta_trunc / 2.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ERecipe {
    Fixed(Vec<f64>),
    /// `E = 1/n`.
    InvN,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TRecipe {
    Fixed(f64),
    /// `t² = 3/(c log n)`.
    Fig2,
    /// `t = 1/log n`.
    InvLog,
    /// `t = E^{1/4}`.
    QuarterRoot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EtaRecipe {
    Fixed(f64),
    InvN,
    InvLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// `value / log n`.
    PerLogN,
    /// `value - log log(1/E)`.
    MinusLogLogInvE,
}

/// Parameters of a sweep. Points are `ns x es`, or one point per `n` with `E = 1/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ns: Vec<usize>,
    pub es: ERecipe,
    pub t: TRecipe,
    pub eta: EtaRecipe,
    pub alpha: f64,
    /// Dimension used by the dimension-based formulas.
    pub d: f64,
    pub y_size: usize,
    pub a: f64,
    pub omega: f64,
    pub lambda: f64,
    pub delta_trunc: f64,
    pub delta_part: Option<f64>,
    pub power: f64,
    pub normalization: Option<Normalization>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            ns: Vec::new(),
            es: ERecipe::InvN,
            t: TRecipe::Fixed(0.5),
            eta: EtaRecipe::Fixed(0.0),
            alpha: 2.0,
            d: 1.0,
            y_size: 2,
            a: 2.0,
            omega: 0.1,
            lambda: 0.5,
            delta_trunc: 0.5,
            delta_part: None,
            power: 0.0,
            normalization: None,
        }
    }
}

impl Grid {
    pub fn points(&self) -> Vec<(usize, f64)> {
        match &self.es {
            ERecipe::InvN => self.ns.iter().map(|&n| (n, 1.0 / n as f64)).collect(),
            ERecipe::Fixed(es) => self
                .ns
                .iter()
                .flat_map(|&n| es.iter().map(move |&e| (n, e)))
                .collect(),
        }
    }

    fn t_at(&self, n: usize, e: f64) -> f64 {
        let logn = (n as f64).log2();
        match self.t {
            TRecipe::Fixed(t) => t,
            TRecipe::Fig2 => (3.0 / (c_constant(self.y_size) * logn)).sqrt(),
            TRecipe::InvLog => 1.0 / logn,
            TRecipe::QuarterRoot => e.powf(0.25),
        }
    }

    fn eta_at(&self, n: usize) -> f64 {
        match self.eta {
            EtaRecipe::Fixed(v) => v,
            EtaRecipe::InvN => 1.0 / n as f64,
            EtaRecipe::InvLog => 1.0 / (n as f64).log2(),
        }
    }
}

/// A tabulated bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub formula_id: FormulaId,
    pub points: Vec<BoundPoint>,
}

pub const CSV_HEADER: &str = "formula_id,n,E,t,eta,alpha,value_bits,normalized_value,validity_flags,count_exactness,remainder_bits";

impl BoundCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.formula_id.as_str(),
                p.n.map(|n| n.to_string()).unwrap_or_default(),
                opt_float(p.e),
                opt_float(p.t),
                opt_float(p.eta),
                opt_float(p.alpha),
                float(p.value_bits),
                opt_float(p.normalized_value),
                p.flags.join(";"),
                p.count_exactness.as_str(),
                opt_float(p.remainder_bits),
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

fn eval_point(id: FormulaId, grid: &Grid, w: Option<&ChannelModel>, n: usize, e: f64) -> Result<BoundPoint> {
    let channel = || w.ok_or_else(|| invalid(format!("{} needs a channel", id.as_str())));
    let t = grid.t_at(n, e);
    let eta = grid.eta_at(n);
    let mut pt = match id {
        FormulaId::Thm1Lower => thm1_lower(channel()?, n, e, t)?,
        FormulaId::Thm2Upper => thm2_upper(channel()?, n, e)?,
        FormulaId::Cor1Lower => cor1_lower(grid.d, eta, e, t, n, grid.y_size)?,
        FormulaId::Cor2Upper => cor2_upper(grid.d, eta, e)?,
        FormulaId::ImprovedGoodLower => improved_good_lower(grid.d, eta, e, t, n, grid.y_size)?,
        FormulaId::ImprovedBadUpper => improved_bad_upper(grid.d, eta, e)?,
        FormulaId::Ex1BernLower | FormulaId::Ex1BernUpper => {
            let t = match grid.t {
                TRecipe::QuarterRoot => None,
                _ => Some(t),
            };
            let (lo, up) = ex1_bernoulli(grid.a, e, n, t)?;
            if id == FormulaId::Ex1BernLower { lo } else { up }
        }
        FormulaId::Ex2DmcLower | FormulaId::Ex2DmcUpper => {
            let (lo, up, _) = ex2_dmc(channel()?, e, n)?;
            if id == FormulaId::Ex2DmcLower { lo } else { up }
        }
        FormulaId::Thm5Stein => {
            let r = thm5_stein(grid.omega, e, grid.alpha, grid.lambda, grid.delta_part)?;
            let mut pt = BoundPoint::new(id, r.rate_bound);
            if let Some(w) = w {
                if w.min_entry() < grid.omega {
                    pt.flag(flags::OMEGA_VIOLATED);
                }
            }
            pt
        }
        FormulaId::Thm6Stein => {
            let y = w.map_or(grid.y_size, ChannelModel::output_size);
            let r = thm6_stein(y, n, e, grid.alpha, grid.delta_trunc, grid.lambda, grid.delta_part)?;
            let mut pt = BoundPoint::new(id, r.rate_bound);
            pt.flag(flags::SUPPORT_OVERCOUNT);
            pt
        }
        FormulaId::PowerCapacity => power_capacity(channel()?, grid.power)?,
    };
    pt.n = Some(n);
    pt.e = Some(e);
    if matches!(id, FormulaId::Thm5Stein | FormulaId::Thm6Stein) {
        pt.alpha = Some(grid.alpha);
    }
    let norm = grid.normalization.unwrap_or_else(|| id.default_normalization());
    pt.normalized_value = match norm {
        Normalization::None => pt.normalized_value,
        Normalization::PerLogN => Some(pt.value_bits / (n as f64).log2()),
        Normalization::MinusLogLogInvE => Some(pt.value_bits - loglog_inv(e)),
    };
    Ok(pt)
}

/// Evaluates one formula over the grid; output order follows the grid.
pub fn sweep(id: FormulaId, grid: &Grid, w: Option<&ChannelModel>) -> Result<BoundCurve> {
    if id.needs_channel() && w.is_none() && !grid.points().is_empty() {
        return Err(invalid(format!("{} needs a channel", id.as_str())));
    }
    let points = grid
        .points()
        .into_par_iter()
        .map(|(n, e)| eval_point(id, grid, w, n, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        formula_id: id,
        points,
    })
}

/// `count` log-spaced integers from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<usize> {
    match count {
        0 => Vec::new(),
        1 => vec![lo.round() as usize],
        _ => (0..count)
            .map(|i| {
                let f = i as f64 / (count - 1) as f64;
                (lo.ln() + f * (hi.ln() - lo.ln())).exp().round() as usize
            })
            .collect(),
    }
}
