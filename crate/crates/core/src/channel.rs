//! Finite memoryless channels.
//!
//! A [`ChannelModel`] is an `|X| x |Y|` row-stochastic matrix with input
//! labels and an optional per-input cost. Channels are immutable once
//! built; every transformation returns a fresh model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DirlError, Result};

/// Rows must sum to one within this tolerance once ingestion has renormalized them.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Ingestion rejects rows whose sum deviates from one by more than this.
pub const ROW_SUM_REJECT: f64 = 1e-9;

/// Two rows are the same output distribution when they agree entrywise within this.
pub const ROW_EQ_TOL: f64 = 1e-12;

/// A probability vector on a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("empty distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("distribution entries must be finite and nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_REJECT {
            return Err(invalid(format!("distribution sums to {sum}, expected 1")));
        }
        Ok(Distribution(probs.into_iter().map(|p| p / sum).collect()))
    }

    pub fn uniform(size: usize) -> Self {
        Distribution(vec![1.0 / size as f64; size])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product distribution on the concatenated alphabet, last factor fastest.
    pub fn tensor(&self, other: &Distribution) -> Distribution {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for p in &self.0 {
            for q in &other.0 {
                out.push(p * q);
            }
        }
        Distribution(out)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The Bernoulli channel restricted to `{0} ∪ {a^-k : 0 <= k <= k_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliFamilySpec {
    pub a: f64,
    pub k_max: u32,
}

impl BernoulliFamilySpec {
    pub fn new(a: f64, k_max: u32) -> Result<Self> {
        if !(a.is_finite() && a > 1.0) {
            return Err(invalid(format!("bernoulli family needs a > 1, got {a}")));
        }
        Ok(BernoulliFamilySpec { a, k_max })
    }

    /// Input parameters in channel order: `0` first, then `a^0, a^-1, ...`.
    pub fn inputs(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain((0..=self.k_max).map(|k| self.a.powi(-(k as i32))))
            .collect()
    }

    /// Smallest nonzero input; radii below this see the truncation.
    pub fn truncation_scale(&self) -> f64 {
        self.a.powi(-(self.k_max as i32))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    Bernoulli(BernoulliFamilySpec),
}

/// A finite channel `W(y|x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    input_labels: Vec<String>,
    output_size: usize,
    matrix: Vec<Vec<f64>>,
    cost: Option<Vec<f64>>,
    family: Option<FamilyDescriptor>,
    row_residual: f64,
}

impl ChannelModel {
    /// Validates and renormalizes an explicit matrix.
    pub fn new(
        input_labels: Vec<String>,
        matrix: Vec<Vec<f64>>,
        cost: Option<Vec<f64>>,
    ) -> Result<Self> {
        if matrix.is_empty() {
            return Err(DirlError::InvalidChannel("channel needs at least one input".into()));
        }
        if input_labels.len() != matrix.len() {
            return Err(DirlError::InvalidChannel(format!(
                "{} labels for {} rows",
                input_labels.len(),
                matrix.len()
            )));
        }
        let output_size = matrix[0].len();
        if output_size < 2 {
            return Err(DirlError::InvalidChannel("output alphabet needs at least 2 symbols".into()));
        }
        let mut residual = 0.0f64;
        let mut rows = Vec::with_capacity(matrix.len());
        for (x, row) in matrix.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(DirlError::InvalidChannel(format!(
                    "row {x} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
                return Err(DirlError::InvalidChannel(format!(
                    "row {x} has entry {p} outside [0,1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            let dev = (sum - 1.0).abs();
            if dev > ROW_SUM_REJECT {
                return Err(DirlError::InvalidChannel(format!(
                    "row {x} sums to {sum} (deviation {dev:e})"
                )));
            }
            residual = residual.max(dev);
            rows.push(row.into_iter().map(|p| p / sum).collect::<Vec<_>>());
        }
        if let Some(c) = &cost {
            if c.len() != rows.len() {
                return Err(DirlError::InvalidChannel(format!(
                    "{} costs for {} inputs",
                    c.len(),
                    rows.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(DirlError::InvalidChannel("costs must be finite and nonnegative".into()));
            }
        }
        Ok(ChannelModel {
            input_labels,
            output_size,
            matrix: rows,
            cost,
            family: None,
            row_residual: residual,
        })
    }

    /// `|Y| x |Y|` identity channel.
    pub fn identity(size: usize) -> Result<Self> {
        let matrix = (0..size)
            .map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        ChannelModel::new((0..size).map(|x| x.to_string()).collect(), matrix, None)
    }

    pub fn num_inputs(&self) -> usize {
        self.matrix.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn distribution(&self, x: usize) -> Distribution {
        Distribution(self.matrix[x].clone())
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    /// Per-input cost; `0` everywhere when the channel carries none.
    pub fn cost(&self, x: usize) -> f64 {
        self.cost.as_ref().map_or(0.0, |c| c[x])
    }

    pub fn costs(&self) -> Vec<f64> {
        (0..self.num_inputs()).map(|x| self.cost(x)).collect()
    }

    pub fn has_cost(&self) -> bool {
        self.cost.is_some()
    }

    pub fn family(&self) -> Option<&FamilyDescriptor> {
        self.family.as_ref()
    }

    /// Largest row-sum deviation seen before renormalization.
    pub fn row_residual(&self) -> f64 {
        self.row_residual
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Output distribution of a word, as per-position rows.
    pub fn word_rows<'a>(&'a self, word: &'a [usize]) -> impl Iterator<Item = &'a [f64]> + 'a {
        word.iter().map(move |&x| self.row(x))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelSpecFile {
    Family {
        family: String,
        a: f64,
        k_max: u32,
    },
    Explicit {
        inputs: Vec<String>,
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        cost: Option<Vec<f64>>,
    },
}

/// Parses a channel file from JSON text.
pub fn parse_channel(text: &str) -> Result<ChannelModel> {
    let spec: ChannelSpecFile = serde_json::from_str(text)?;
    match spec {
        ChannelSpecFile::Family { family, a, k_max } => match family.as_str() {
            "bernoulli" => bernoulli_family(a, k_max),
            other => Err(DirlError::InvalidChannel(format!("unknown family {other:?}"))),
        },
        ChannelSpecFile::Explicit {
            inputs,
            matrix,
            cost,
        } => ChannelModel::new(inputs, matrix, cost),
    }
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelModel> {
    let text = std::fs::read_to_string(path)?;
    parse_channel(&text)
}

/// Binary-output channel with `B_x(1) = x` on the truncated geometric input set.
pub fn bernoulli_family(a: f64, k_max: u32) -> Result<ChannelModel> {
    let spec = BernoulliFamilySpec::new(a, k_max)?;
    let xs = spec.inputs();
    let labels = xs.iter().map(|x| format!("{x}")).collect();
    let matrix = xs.iter().map(|&x| vec![1.0 - x, x]).collect();
    let mut ch = ChannelModel::new(labels, matrix, None)?;
    ch.family = Some(FamilyDescriptor::Bernoulli(spec));
    Ok(ch)
}

/// The channel `V` obtained by zeroing entries below `delta / (n |Y|)` and renormalizing.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub channel: ChannelModel,
    pub threshold: f64,
    /// Surviving mass `K` of each row before renormalization.
    pub normalizers: Vec<f64>,
}

pub fn truncate_channel(w: &ChannelModel, delta: f64, n: usize) -> Result<Truncation> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("truncation delta must lie in (0,1), got {delta}")));
    }
    if n == 0 {
        return Err(invalid("blocklength must be at least 1"));
    }
    let threshold = delta / (n as f64 * w.output_size() as f64);
    let mut normalizers = Vec::with_capacity(w.num_inputs());
    let matrix = w
        .rows()
        .iter()
        .map(|row| {
            let k: f64 = row.iter().filter(|&&p| p >= threshold).sum();
            normalizers.push(k);
            row.iter()
                .map(|&p| if p >= threshold { p / k } else { 0.0 })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut channel = ChannelModel::new(w.input_labels.clone(), matrix, w.cost.clone())?;
    channel.row_residual = w.row_residual;
    Ok(Truncation {
        channel,
        threshold,
        normalizers,
    })
}

/// Result of removing inputs with duplicate output distributions.
#[derive(Clone, Debug)]
pub struct Purge {
    pub channel: ChannelModel,
    /// Original indices of the surviving inputs, ascending.
    pub kept: Vec<usize>,
    /// `|W(X)|`.
    pub distinct_rows: usize,
}

pub fn rows_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= ROW_EQ_TOL)
}

/// Keeps one input per distinct row: the cheapest, lowest index on ties.
pub fn dedupe_and_purge(w: &ChannelModel) -> Purge {
    let mut reps: Vec<usize> = Vec::new();
    for x in 0..w.num_inputs() {
        match reps.iter_mut().find(|r| rows_equal(w.row(**r), w.row(x))) {
            Some(r) => {
                if w.cost(x) < w.cost(*r) {
                    *r = x;
                }
            }
            None => reps.push(x),
        }
    }
    reps.sort_unstable();
    let distinct_rows = reps.len();
    if distinct_rows == w.num_inputs() {
        return Purge {
            channel: w.clone(),
            kept: reps,
            distinct_rows,
        };
    }
    let channel = ChannelModel {
        input_labels: reps.iter().map(|&x| w.input_labels[x].clone()).collect(),
        output_size: w.output_size,
        matrix: reps.iter().map(|&x| w.matrix[x].clone()).collect(),
        cost: w.cost.as_ref().map(|c| reps.iter().map(|&x| c[x]).collect()),
        family: None,
        row_residual: w.row_residual,
    };
    Purge {
        channel,
        kept: reps,
        distinct_rows,
    }
}
