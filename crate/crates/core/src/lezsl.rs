//! Bilinear label embedding: `F(x, y) = x^T W phi(y)` trained with a
//! structured ranking hinge loss over the seen classes.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attrspace::{AttributeForm, AttributeMatrix};
use crate::dap::{rank_scores, Scored};
use crate::datagen::{Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::io::{create, open_reader, parse_f64};

/// Which attribute representation serves as the class embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    /// Normalized `A`, `M` rows.
    Original,
    /// `S = [A; 1 - A]`, `2M` rows.
    Expanded,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Original => "original",
            EmbeddingKind::Expanded => "expanded",
        }
    }

    pub fn of(m: &AttributeMatrix) -> Result<Self> {
        match m.form() {
            AttributeForm::Normalized => Ok(EmbeddingKind::Original),
            AttributeForm::Expanded => Ok(EmbeddingKind::Expanded),
            _ => Err(Error::NotNormalized),
        }
    }
}

impl std::str::FromStr for EmbeddingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(EmbeddingKind::Original),
            "expanded" => Ok(EmbeddingKind::Expanded),
            other => Err(format!("unknown embedding `{other}`")),
        }
    }
}

/// Per-violator weighting in the ranking loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Uniform,
    /// The k-th largest violation is weighted `1/k`.
    RankBased,
}

impl std::str::FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(WeightMode::Uniform),
            "rank_based" | "rank-based" => Ok(WeightMode::RankBased),
            other => Err(format!("unknown weight mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_mode: WeightMode,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 30,
            weight_mode: WeightMode::Uniform,
            seed: 42,
            l2: 1e-4,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=10.0).contains(&self.learning_rate) {
            return Err(Error::InvalidHyper(format!(
                "learning rate {} outside [0, 10]",
                self.learning_rate
            )));
        }
        if self.epochs > 1_000_000 {
            return Err(Error::InvalidHyper(format!("{} epochs exceeds 1e6", self.epochs)));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidHyper(format!("l2 {} must be >= 0", self.l2)));
        }
        Ok(())
    }
}

/// Compatibility matrix `W` (`d x N_a`) with the embedding it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearModel {
    w: Array2<f64>,
    embedding: AttributeMatrix,
    kind: EmbeddingKind,
}

impl BilinearModel {
    pub fn new(w: Array2<f64>, embedding: AttributeMatrix) -> Result<Self> {
        let kind = EmbeddingKind::of(&embedding)?;
        if w.ncols() != embedding.n_attributes() {
            return Err(Error::DimensionMismatch {
                expected: embedding.n_attributes(),
                got: w.ncols(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHyper("non-finite compatibility weight".into()));
        }
        Ok(Self { w, embedding, kind })
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn embedding(&self) -> &AttributeMatrix {
        &self.embedding
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    fn check_x(&self, x: ArrayView1<'_, f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `x^T W phi(y)`.
    pub fn compatibility(&self, x: ArrayView1<'_, f64>, class: &str) -> Result<f64> {
        self.check_x(x)?;
        Ok(x.dot(&self.w).dot(&self.embedding.column(class)?))
    }

    fn scores_for(&self, xw: &Array1<f64>, classes: &[String]) -> Result<Vec<f64>> {
        classes
            .iter()
            .map(|c| Ok(xw.dot(&self.embedding.column(c)?)))
            .collect()
    }

    /// Writes `d,N_a,embedding_id` followed by the rows of `W`.
    pub fn to_writer<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},{},{}", self.w.nrows(), self.w.ncols(), self.kind.as_str())?;
        for row in self.w.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_writer(create(path)?).map_err(|e| Error::io(path, e))
    }

    /// Reads a saved `W` and binds it to `embedding`, which must be of the
    /// kind and width the model was trained with.
    pub fn from_reader<R: Read>(reader: R, source: &str, embedding: AttributeMatrix) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| Error::parse(source, 1, e.to_string()))?,
            None => return Err(Error::parse(source, 1, "empty file")),
        };
        if header.len() != 3 {
            return Err(Error::parse(source, 1, "header must be `d,N_a,embedding_id`"));
        }
        let d: usize = header[0]
            .parse()
            .map_err(|_| Error::parse(source, 1, "d is not an integer"))?;
        let n_a: usize = header[1]
            .parse()
            .map_err(|_| Error::parse(source, 1, "N_a is not an integer"))?;
        let kind: EmbeddingKind = header[2]
            .parse()
            .map_err(|e: String| Error::parse(source, 1, e))?;
        let mut flat = Vec::with_capacity(d * n_a);
        let mut rows = 0;
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if rec.len() != n_a {
                return Err(Error::parse(
                    source,
                    line,
                    format!("expected {n_a} fields, found {}", rec.len()),
                ));
            }
            for (col, cell) in rec.iter().enumerate() {
                flat.push(parse_f64(cell, source, line, col + 1)?);
            }
            rows += 1;
        }
        if rows != d {
            return Err(Error::parse(source, rows + 1, format!("expected {d} rows of W, found {rows}")));
        }
        if EmbeddingKind::of(&embedding)? != kind {
            return Err(Error::DimensionMismatch {
                expected: n_a,
                got: embedding.n_attributes(),
            });
        }
        let w = Array2::from_shape_vec((d, n_a), flat).expect("row lengths checked");
        Self::new(w, embedding)
    }

    pub fn read_csv(path: impl AsRef<Path>, embedding: AttributeMatrix) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(open_reader(path)?, &path.display().to_string(), embedding)
    }
}

/// Ranking hinge loss of one sample and its gradient with respect to `W`:
///
/// `sum_y r_y [delta(y_n, y) + F(x, y) - F(x, y_n)]_+ + l2 |W|^2`
///
/// with `delta = 0` for the true class and 1 otherwise. A margin of exactly
/// zero counts as inactive.
pub fn sample_loss(
    model: &BilinearModel,
    x: ArrayView1<'_, f64>,
    y_n: &str,
    seen_classes: &[String],
    weight_mode: WeightMode,
    l2: f64,
) -> Result<(f64, Array2<f64>)> {
    model.check_x(x)?;
    if !seen_classes.iter().any(|c| c == y_n) {
        return Err(Error::UnknownClass(y_n.to_string()));
    }
    let xw = x.dot(&model.w);
    let (hinge, direction) = hinge_terms(model, &xw, y_n, seen_classes, weight_mode)?;
    let loss = hinge + l2 * model.w.iter().map(|v| v * v).sum::<f64>();
    let mut grad = outer(x, direction.view());
    if l2 > 0.0 {
        grad.scaled_add(2.0 * l2, &model.w);
    }
    Ok((loss, grad))
}

fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

/// Hinge part of the loss and `v` such that the hinge gradient is `x v^T`.
fn hinge_terms(
    model: &BilinearModel,
    xw: &Array1<f64>,
    y_n: &str,
    seen_classes: &[String],
    weight_mode: WeightMode,
) -> Result<(f64, Array1<f64>)> {
    let phi_true = model.embedding.column(y_n)?;
    let f_true = xw.dot(&phi_true);
    let mut active: Vec<(usize, f64)> = Vec::new();
    for (k, y) in seen_classes.iter().enumerate() {
        if y == y_n {
            continue;
        }
        let margin = 1.0 + xw.dot(&model.embedding.column(y)?) - f_true;
        if margin > 0.0 {
            active.push((k, margin));
        }
    }
    if weight_mode == WeightMode::RankBased {
        // largest violation first; ties keep class order
        active.sort_by(|a, b| b.1.total_cmp(&a.1));
    }
    let mut loss = 0.0;
    let mut v = Array1::zeros(xw.len());
    for (rank, &(k, margin)) in active.iter().enumerate() {
        let weight = match weight_mode {
            WeightMode::Uniform => 1.0,
            WeightMode::RankBased => 1.0 / (rank + 1) as f64,
        };
        loss += weight * margin;
        v.scaled_add(weight, &model.embedding.column(&seen_classes[k])?);
        v.scaled_add(-weight, &phi_true);
    }
    Ok((loss, v))
}

/// A trained model and its loss after each epoch; entry 0 is the loss at
/// initialization.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: BilinearModel,
    pub loss_trace: Vec<f64>,
}

/// Mean per-sample loss over a set of samples.
pub fn mean_loss(
    model: &BilinearModel,
    x: &Array2<f64>,
    labels: &[String],
    seen_classes: &[String],
    hyper: &TrainHyper,
) -> Result<f64> {
    let mut total = 0.0;
    for (row, y) in x.rows().into_iter().zip(labels) {
        let xw = row.dot(&model.w);
        total += hinge_terms(model, &xw, y, seen_classes, hyper.weight_mode)?.0;
    }
    let reg = hyper.l2 * model.w.iter().map(|v| v * v).sum::<f64>();
    Ok(total / labels.len() as f64 + reg)
}

/// Per-sample SGD over the training pool in a seeded shuffled order.
pub fn train(
    dataset: &Dataset,
    split: &SplitSpec,
    embedding: &AttributeMatrix,
    hyper: &TrainHyper,
) -> Result<Trained> {
    hyper.validate()?;
    if split.train().is_empty() {
        return Err(Error::NoTrainingData);
    }
    let seen = split.seen_classes();
    for c in seen {
        embedding.column(c)?;
    }
    let (x, labels) = dataset.select(split.train())?;
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let bound = 1.0 / (d as f64).sqrt();
    let w = Array2::from_shape_simple_fn((d, embedding.n_attributes()), || {
        rng.random_range(-bound..=bound)
    });
    let mut model = BilinearModel::new(w, embedding.clone())?;

    let mut trace = Vec::with_capacity(hyper.epochs + 1);
    trace.push(mean_loss(&model, &x, &labels, seen, hyper)?);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let shrink = 1.0 - 2.0 * hyper.learning_rate * hyper.l2;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let row = x.row(i);
            let xw = row.dot(&model.w);
            let (_, v) = hinge_terms(&model, &xw, &labels[i], seen, hyper.weight_mode)?;
            if shrink != 1.0 {
                model.w *= shrink;
            }
            // W -= lr * x v^T
            for (mut w_row, &xi) in model.w.rows_mut().into_iter().zip(row) {
                w_row.scaled_add(-hyper.learning_rate * xi, &v);
            }
        }
        trace.push(mean_loss(&model, &x, &labels, seen, hyper)?);
    }
    if model.w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidHyper(
            "training diverged; lower the learning rate".into(),
        ));
    }
    Ok(Trained {
        model,
        loss_trace: trace,
    })
}

/// Ranking of candidates by compatibility.
#[derive(Debug, Clone, PartialEq)]
pub struct LePrediction {
    pub ranking: Vec<Scored>,
    /// The top score is shared by another candidate.
    pub degenerate_tie: bool,
}

impl LePrediction {
    pub fn predicted(&self) -> &str {
        &self.ranking[0].class
    }
}

pub fn le_predict(
    model: &BilinearModel,
    x: ArrayView1<'_, f64>,
    candidates: &[String],
) -> Result<LePrediction> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    model.check_x(x)?;
    let xw = x.dot(&model.w);
    let scores = model.scores_for(&xw, candidates)?;
    let ranking = rank_scores(candidates, &scores);
    let degenerate_tie = ranking.len() > 1 && ranking[1].score == ranking[0].score;
    Ok(LePrediction {
        ranking,
        degenerate_tie,
    })
}

pub fn write_loss_trace<W: Write>(trace: &[f64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,loss")?;
    for (e, l) in trace.iter().enumerate() {
        writeln!(w, "{e},{l}")?;
    }
    w.flush()
}
