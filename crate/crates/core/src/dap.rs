//! Per-attribute logistic classifiers and direct attribute prediction.
//!
//! A class `y` is scored by
//! `sum_m ln p(a_m^y | x) - ln p(a_m^y)`, where `a_m^y` is the binarized
//! signature bit and the posterior/prior is flipped for zero bits.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::attrspace::AttributeMatrix;
use crate::datagen::{Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::io::{create, open_reader, parse_f64};

pub const PRIOR_FLOOR: f64 = 1e-3;
pub const POSTERIOR_FLOOR: f64 = 1e-6;
const CONSTANT_ROW_TOL: f64 = 1e-12;

/// Binary class signatures derived from a continuous signature matrix by
/// thresholding each row at its mean over the seen classes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedSignatures {
    bits: Array2<u8>,
    thresholds: Vec<f64>,
    attribute_names: Vec<String>,
    class_names: Vec<String>,
    dropped: Vec<String>,
}

impl BinarizedSignatures {
    /// `N_a x C` matrix of kept rows.
    pub fn bits(&self) -> &Array2<u8> {
        &self.bits
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Attributes whose row was constant over the seen classes.
    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    pub fn class_bits(&self, class: &str) -> Result<ArrayView1<'_, u8>> {
        let j = self
            .class_names
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        Ok(self.bits.column(j))
    }
}

/// Thresholds each row of a normalized or expanded matrix at its mean over
/// `seen_classes`. Rows with zero spread over the seen classes are dropped.
pub fn binarize_signatures(
    s: &AttributeMatrix,
    seen_classes: &[String],
) -> Result<BinarizedSignatures> {
    if !s.is_signature_matrix() {
        return Err(Error::NotNormalized);
    }
    if seen_classes.is_empty() {
        return Err(Error::InvalidSplit("no seen classes".into()));
    }
    let seen_idx = seen_classes
        .iter()
        .map(|c| s.class_index(c).ok_or_else(|| Error::UnknownClass(c.clone())))
        .collect::<Result<Vec<_>>>()?;

    let mut kept = Vec::new();
    let mut thresholds = Vec::new();
    let mut dropped = Vec::new();
    for (i, row) in s.values().rows().into_iter().enumerate() {
        let seen_vals: Vec<f64> = seen_idx.iter().map(|&j| row[j]).collect();
        let lo = seen_vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = seen_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= CONSTANT_ROW_TOL {
            dropped.push(s.attribute_names()[i].clone());
            continue;
        }
        kept.push(i);
        thresholds.push(seen_vals.iter().sum::<f64>() / seen_vals.len() as f64);
    }
    if kept.is_empty() {
        return Err(Error::NoUsableAttributes);
    }
    let bits = Array2::from_shape_fn((kept.len(), s.n_classes()), |(r, j)| {
        u8::from(s.values()[[kept[r], j]] > thresholds[r])
    });
    Ok(BinarizedSignatures {
        bits,
        thresholds,
        attribute_names: kept.iter().map(|&i| s.attribute_names()[i].clone()).collect(),
        class_names: s.class_names().to_vec(),
        dropped,
    })
}

/// Full-batch gradient descent settings for the attribute classifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for BankHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 300,
            l2: 1e-3,
        }
    }
}

/// One logistic classifier per kept attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeClassifierBank {
    weights: Array2<f64>,
    bias: Array1<f64>,
    priors: Array1<f64>,
    thresholds: Vec<f64>,
    attribute_names: Vec<String>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_posterior(p: f64) -> f64 {
    if p.is_nan() {
        return 0.5;
    }
    p.clamp(POSTERIOR_FLOOR, 1.0 - POSTERIOR_FLOOR)
}

impl AttributeClassifierBank {
    /// Assembles a bank from explicit parameters.
    pub fn from_parts(
        weights: Array2<f64>,
        bias: Array1<f64>,
        priors: Array1<f64>,
        thresholds: Vec<f64>,
        attribute_names: Vec<String>,
    ) -> Result<Self> {
        let n_a = weights.nrows();
        if n_a == 0 || weights.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for len in [bias.len(), priors.len(), thresholds.len(), attribute_names.len()] {
            if len != n_a {
                return Err(Error::DimensionMismatch {
                    expected: n_a,
                    got: len,
                });
            }
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidHyper("non-finite classifier weight".into()));
        }
        if priors.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidHyper("non-finite prior".into()));
        }
        let priors = priors.mapv(|p| p.clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR));
        Ok(Self {
            weights,
            bias,
            priors,
            thresholds,
            attribute_names,
        })
    }

    /// `N_a x d` weights.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn priors(&self) -> &Array1<f64> {
        &self.priors
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn n_attributes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `p(a_m | x)` for every attribute, clamped to `[1e-6, 1 - 1e-6]`.
    pub fn posteriors(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let z = self.weights.dot(&x) + &self.bias;
        Ok(z.mapv(|z| clamp_posterior(sigmoid(z))))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(open_reader(path)?, &path.display().to_string())
    }

    /// Reads `attribute,prior,threshold,bias,w1,...,wd`.
    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| Error::parse(source, 1, e.to_string()))?,
            None => return Err(Error::parse(source, 1, "empty file")),
        };
        let expected = ["attribute", "prior", "threshold", "bias"];
        if header.len() < 5 || header.iter().take(4).ne(expected) {
            return Err(Error::parse(
                source,
                1,
                "header must be `attribute,prior,threshold,bias,w1,...,wd`",
            ));
        }
        let d = header.len() - 4;
        let (mut names, mut priors, mut thresholds, mut bias, mut flat) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if rec.len() != d + 4 {
                return Err(Error::parse(
                    source,
                    line,
                    format!("expected {} fields, found {}", d + 4, rec.len()),
                ));
            }
            names.push(rec[0].to_string());
            priors.push(parse_f64(&rec[1], source, line, 2)?);
            thresholds.push(parse_f64(&rec[2], source, line, 3)?);
            bias.push(parse_f64(&rec[3], source, line, 4)?);
            for (col, cell) in rec.iter().enumerate().skip(4) {
                flat.push(parse_f64(cell, source, line, col + 1)?);
            }
        }
        let weights = Array2::from_shape_vec((names.len(), d), flat)
            .map_err(|e| Error::parse(source, 1, e.to_string()))?;
        Self::from_parts(
            weights,
            Array1::from(bias),
            Array1::from(priors),
            thresholds,
            names,
        )
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_writer(create(path)?).map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "attribute,prior,threshold,bias")?;
        for k in 1..=self.dim() {
            write!(w, ",w{k}")?;
        }
        writeln!(w)?;
        for (m, row) in self.weights.rows().into_iter().enumerate() {
            write!(
                w,
                "{},{},{},{}",
                self.attribute_names[m], self.priors[m], self.thresholds[m], self.bias[m]
            )?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }
}

/// Trains one logistic classifier per attribute of `signatures` on the
/// training pool. Weights start at zero, so training is deterministic.
pub fn train_bank(
    dataset: &Dataset,
    split: &SplitSpec,
    signatures: &BinarizedSignatures,
    hyper: &BankHyper,
) -> Result<AttributeClassifierBank> {
    if !(hyper.learning_rate.is_finite() && hyper.learning_rate >= 0.0) {
        return Err(Error::InvalidHyper(format!(
            "learning rate {} must be >= 0",
            hyper.learning_rate
        )));
    }
    if !(hyper.l2.is_finite() && hyper.l2 >= 0.0) {
        return Err(Error::InvalidHyper(format!("l2 {} must be >= 0", hyper.l2)));
    }
    if split.train().is_empty() {
        return Err(Error::NoTrainingData);
    }
    let (x, labels) = dataset.select(split.train())?;
    let n = x.nrows() as f64;
    let n_a = signatures.bits.nrows();

    // targets: N x N_a
    let mut targets = Array2::<f64>::zeros((x.nrows(), n_a));
    for (mut t, label) in targets.rows_mut().into_iter().zip(&labels) {
        let bits = signatures.class_bits(label)?;
        t.iter_mut().zip(bits).for_each(|(t, b)| *t = f64::from(*b));
    }

    let priors = split
        .seen_classes()
        .iter()
        .map(|c| signatures.class_bits(c).map(|b| b.mapv(f64::from)))
        .try_fold(Array1::<f64>::zeros(n_a), |acc, b| b.map(|b| acc + b))?
        / split.seen_classes().len() as f64;

    let mut weights = Array2::<f64>::zeros((n_a, x.ncols()));
    let mut bias = Array1::<f64>::zeros(n_a);
    for _ in 0..hyper.epochs {
        let mut err = x.dot(&weights.t()) + &bias;
        err.mapv_inplace(sigmoid);
        err -= &targets;
        let grad_w = err.t().dot(&x) / n + &weights * (2.0 * hyper.l2);
        let grad_b = err.sum_axis(Axis(0)) / n;
        weights.scaled_add(-hyper.learning_rate, &grad_w);
        bias.scaled_add(-hyper.learning_rate, &grad_b);
    }

    AttributeClassifierBank::from_parts(
        weights,
        bias,
        priors,
        signatures.thresholds.clone(),
        signatures.attribute_names.clone(),
    )
}

/// A class with its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub class: String,
    pub score: f64,
}

/// Sorts by descending score; equal scores keep candidate order.
pub(crate) fn rank_scores(classes: &[String], scores: &[f64]) -> Vec<Scored> {
    let mut out: Vec<Scored> = classes
        .iter()
        .zip(scores)
        .map(|(c, &s)| Scored {
            class: c.clone(),
            score: s,
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out
}

/// Log-space DAP score of one class signature.
pub fn dap_log_score(
    posteriors: ArrayView1<'_, f64>,
    priors: ArrayView1<'_, f64>,
    bits: ArrayView1<'_, u8>,
) -> f64 {
    posteriors
        .iter()
        .zip(priors)
        .zip(bits)
        .map(|((&p, &q), &b)| {
            if b == 1 {
                p.ln() - q.ln()
            } else {
                (1.0 - p).ln() - (1.0 - q).ln()
            }
        })
        .sum()
}

/// Ranks `candidates` for feature vector `x`.
pub fn dap_predict(
    bank: &AttributeClassifierBank,
    x: ArrayView1<'_, f64>,
    candidates: &[String],
    signatures: &BinarizedSignatures,
) -> Result<Vec<Scored>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if bank.attribute_names != signatures.attribute_names {
        return Err(Error::DimensionMismatch {
            expected: bank.n_attributes(),
            got: signatures.attribute_names.len(),
        });
    }
    let post = bank.posteriors(x)?;
    dap_rank(&post, bank.priors(), candidates, signatures)
}

/// DAP ranking from precomputed posteriors.
pub fn dap_rank(
    posteriors: &Array1<f64>,
    priors: &Array1<f64>,
    candidates: &[String],
    signatures: &BinarizedSignatures,
) -> Result<Vec<Scored>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let scores = candidates
        .iter()
        .map(|c| {
            signatures
                .class_bits(c)
                .map(|b| dap_log_score(posteriors.view(), priors.view(), b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_scores(candidates, &scores))
}
