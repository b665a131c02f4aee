//! Conventional and generalized zero-shot evaluation.
//!
//! Accuracy is averaged per class, so a class with many test samples does not
//! dominate one with few. In the generalized setting the summary is the
//! harmonic mean of the unseen-class and seen-class accuracies.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;

use crate::attrspace::AttributeMatrix;
use crate::datagen::{Dataset, SplitSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Unseen test samples, unseen candidates.
    Zsl,
    /// Seen and unseen test samples, all classes as candidates.
    Gzsl,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Zsl => "zsl",
            Mode::Gzsl => "gzsl",
        }
    }

    /// Candidate classes for every test sample.
    pub fn candidates(self, split: &SplitSpec) -> Vec<String> {
        match self {
            Mode::Zsl => split.unseen_classes().to_vec(),
            Mode::Gzsl => split.all_classes(),
        }
    }

    /// Test samples, unseen pool first.
    pub fn test_pool(self, split: &SplitSpec) -> Vec<String> {
        match self {
            Mode::Zsl => split.test_unseen().to_vec(),
            Mode::Gzsl => split
                .test_unseen()
                .iter()
                .chain(split.test_seen())
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zsl" => Ok(Mode::Zsl),
            "gzsl" => Ok(Mode::Gzsl),
            _ => Err(format!("unknown mode `{s}` (expected zsl or gzsl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccuracy {
    pub class: String,
    pub correct: u64,
    pub total: u64,
}

impl ClassAccuracy {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GzslSummary {
    /// Per-class accuracy over unseen classes.
    pub acc_ts: f64,
    /// Per-class accuracy over seen classes.
    pub acc_tr: f64,
    pub harmonic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    /// Classes with at least one test sample, in split order.
    pub per_class: Vec<ClassAccuracy>,
    pub mean_class_acc: f64,
    /// Axis labels of `confusion`.
    pub classes: Vec<String>,
    /// Rows are true classes, columns predictions.
    pub confusion: Array2<u64>,
    pub gzsl: Option<GzslSummary>,
}

impl EvalReport {
    pub fn n_samples(&self) -> u64 {
        self.confusion.sum()
    }

    pub fn class_accuracy(&self, class: &str) -> Option<f64> {
        self.per_class
            .iter()
            .find(|c| c.class == class)
            .map(ClassAccuracy::accuracy)
    }

    /// `metric,value` table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "metric,value")?;
        writeln!(w, "mode,{}", self.mode)?;
        writeln!(w, "n_samples,{}", self.n_samples())?;
        writeln!(w, "mean_class_acc,{}", self.mean_class_acc)?;
        if let Some(g) = self.gzsl {
            writeln!(w, "acc_ts,{}", g.acc_ts)?;
            writeln!(w, "acc_tr,{}", g.acc_tr)?;
            writeln!(w, "H,{}", g.harmonic)?;
        }
        w.flush()
    }

    pub fn write_per_class_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "class,correct,total,accuracy")?;
        for c in &self.per_class {
            writeln!(w, "{},{},{},{}", c.class, c.correct, c.total, c.accuracy())?;
        }
        w.flush()
    }

    /// Confusion counts with class names on both axes.
    pub fn write_confusion_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "true\\predicted")?;
        for c in &self.classes {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (c, row) in self.classes.iter().zip(self.confusion.rows()) {
            write!(w, "{c}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!(
            "mode: {}\nsamples: {}\nmean per-class accuracy: {:.4}\n",
            self.mode,
            self.n_samples(),
            self.mean_class_acc
        );
        if let Some(g) = self.gzsl {
            s += &format!(
                "acc_ts (unseen): {:.4}\nacc_tr (seen): {:.4}\nH: {:.4}\n",
                g.acc_ts, g.acc_tr, g.harmonic
            );
        }
        s += "\nper class:\n";
        let width = self.per_class.iter().map(|c| c.class.len()).max().unwrap_or(0);
        for c in &self.per_class {
            s += &format!(
                "  {:width$}  {:>4}/{:<4}  {:.4}\n",
                c.class,
                c.correct,
                c.total,
                c.accuracy()
            );
        }
        s
    }
}

/// `2ab / (a + b)`, 0 when both are 0.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn mean_over(per_class: &[ClassAccuracy], keep: impl Fn(&str) -> bool) -> f64 {
    let rates: Vec<f64> = per_class
        .iter()
        .filter(|c| keep(&c.class))
        .map(ClassAccuracy::accuracy)
        .collect();
    if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    }
}

/// Tallies a confusion matrix over `classes` for exactly the samples in `pool`.
fn tally(
    predictions: &HashMap<String, String>,
    dataset: &Dataset,
    pool: &[String],
    classes: &[String],
) -> Result<(Vec<ClassAccuracy>, Array2<u64>)> {
    let index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    if predictions.len() != pool.len() {
        let extra = predictions
            .keys()
            .find(|k| !pool.contains(k))
            .map(|k| format!("sample `{k}` is not in the test pool"))
            .unwrap_or_else(|| "wrong number of predictions".into());
        // a missing sample is the more useful message when both happen
        if let Some(missing) = pool.iter().find(|s| !predictions.contains_key(*s)) {
            return Err(Error::MissingPrediction(missing.clone()));
        }
        return Err(Error::CoverageMismatch(extra));
    }
    let mut confusion = Array2::zeros((classes.len(), classes.len()));
    for id in pool {
        let predicted = predictions
            .get(id)
            .ok_or_else(|| Error::MissingPrediction(id.clone()))?;
        let truth = dataset.label(id)?;
        let t = *index.get(truth).ok_or_else(|| {
            Error::CoverageMismatch(format!("sample `{id}` has label `{truth}` outside the evaluated classes"))
        })?;
        let p = *index.get(predicted.as_str()).ok_or_else(|| {
            Error::CoverageMismatch(format!("prediction `{predicted}` for `{id}` is not a candidate class"))
        })?;
        confusion[[t, p]] += 1;
    }
    let per_class = classes
        .iter()
        .enumerate()
        .map(|(i, c)| ClassAccuracy {
            class: c.clone(),
            correct: confusion[[i, i]],
            total: confusion.row(i).sum(),
        })
        .filter(|c| c.total > 0)
        .collect();
    Ok((per_class, confusion))
}

/// Conventional evaluation over the unseen test pool.
pub fn evaluate_zsl(
    predictions: &HashMap<String, String>,
    dataset: &Dataset,
    split: &SplitSpec,
) -> Result<EvalReport> {
    let classes = split.unseen_classes().to_vec();
    let (per_class, confusion) = tally(predictions, dataset, split.test_unseen(), &classes)?;
    Ok(EvalReport {
        mode: Mode::Zsl,
        mean_class_acc: mean_over(&per_class, |_| true),
        per_class,
        classes,
        confusion,
        gzsl: None,
    })
}

/// Generalized evaluation over both test pools with all classes as candidates.
pub fn evaluate_gzsl(
    predictions: &HashMap<String, String>,
    dataset: &Dataset,
    split: &SplitSpec,
) -> Result<EvalReport> {
    if split.test_unseen().is_empty() {
        return Err(Error::EmptyPool("test_unseen"));
    }
    if split.test_seen().is_empty() {
        return Err(Error::EmptyPool("test_seen"));
    }
    let classes = split.all_classes();
    let pool = Mode::Gzsl.test_pool(split);
    let (per_class, confusion) = tally(predictions, dataset, &pool, &classes)?;
    let acc_ts = mean_over(&per_class, |c| split.is_unseen(c));
    let acc_tr = mean_over(&per_class, |c| split.is_seen(c));
    Ok(EvalReport {
        mode: Mode::Gzsl,
        mean_class_acc: mean_over(&per_class, |_| true),
        per_class,
        classes,
        confusion,
        gzsl: Some(GzslSummary {
            acc_ts,
            acc_tr,
            harmonic: harmonic_mean(acc_ts, acc_tr),
        }),
    })
}

pub fn evaluate(
    mode: Mode,
    predictions: &HashMap<String, String>,
    dataset: &Dataset,
    split: &SplitSpec,
) -> Result<EvalReport> {
    match mode {
        Mode::Zsl => evaluate_zsl(predictions, dataset, split),
        Mode::Gzsl => evaluate_gzsl(predictions, dataset, split),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    /// Bits are set where a value exceeds its row mean over the candidates.
    HammingOnBinarized,
    Euclidean,
}

impl FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hamming" | "hamming_on_binarized" => Ok(Self::HammingOnBinarized),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(format!("unknown metric `{s}` (expected hamming or euclidean)")),
        }
    }
}

/// All pairwise distances between candidate signature columns, ascending.
pub fn sample_attribute_distances(
    s: &AttributeMatrix,
    candidates: &[String],
    metric: DistanceMetric,
) -> Result<Vec<f64>> {
    if candidates.len() < 2 {
        return Err(Error::TooFewCandidates(candidates.len()));
    }
    let cols = candidates
        .iter()
        .map(|c| s.class_index(c).ok_or_else(|| Error::UnknownClass(c.clone())))
        .collect::<Result<Vec<_>>>()?;
    let sub = s.values().select(ndarray::Axis(1), &cols);
    let sub = match metric {
        DistanceMetric::Euclidean => sub,
        DistanceMetric::HammingOnBinarized => {
            let mut bits = sub.clone();
            for mut row in bits.rows_mut() {
                let mean = row.mean().unwrap_or(0.0);
                row.mapv_inplace(|v| if v > mean { 1.0 } else { 0.0 });
            }
            bits
        }
    };
    let l = cols.len();
    let mut out = Vec::with_capacity(l * (l - 1) / 2);
    for i in 0..l {
        for j in i + 1..l {
            let (a, b) = (sub.column(i), sub.column(j));
            let d = match metric {
                DistanceMetric::HammingOnBinarized => {
                    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
                }
                DistanceMetric::Euclidean => {
                    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
                }
            };
            out.push(d);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    /// Two unseen classes `u0` (2 samples) and `u1` (8 samples), one seen
    /// class `s0` with 4 test samples.
    fn fixture() -> (Dataset, SplitSpec) {
        let mut labels = vec!["u0".to_string(); 2];
        labels.extend(vec!["u1".to_string(); 8]);
        labels.extend(vec!["s0".to_string(); 6]);
        let ids: Vec<String> = (0..labels.len()).map(|i| format!("x{i:02}")).collect();
        let ds = Dataset::new(Array2::zeros((labels.len(), 1)), labels, ids.clone()).unwrap();
        let split = SplitSpec::new(
            vec!["s0".into()],
            vec!["u0".into(), "u1".into()],
            ids[10..12].to_vec(),
            ids[12..].to_vec(),
            ids[..10].to_vec(),
        )
        .unwrap();
        (ds, split)
    }

    fn preds(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn per_class_not_per_sample() {
        let (ds, split) = fixture();
        // u0 both right, u1 all predicted u0
        let p: HashMap<_, _> = split
            .test_unseen()
            .iter()
            .map(|id| (id.clone(), "u0".to_string()))
            .collect();
        let r = evaluate_zsl(&p, &ds, &split).unwrap();
        assert_eq!(r.mean_class_acc, 0.5);
        assert_eq!(r.confusion, array![[2, 0], [8, 0]]);
        let per_sample = r.confusion.diag().sum() as f64 / r.n_samples() as f64;
        assert_eq!(per_sample, 0.2);
    }

    #[test]
    fn all_correct_is_one() {
        let (ds, split) = fixture();
        let p: HashMap<_, _> = split
            .test_unseen()
            .iter()
            .map(|id| (id.clone(), ds.label(id).unwrap().to_string()))
            .collect();
        let r = evaluate_zsl(&p, &ds, &split).unwrap();
        assert_eq!(r.mean_class_acc, 1.0);
        assert_eq!(r.confusion, array![[2, 0], [0, 8]]);
    }

    #[test]
    fn three_class_hand_count() {
        let labels: Vec<String> = ["a", "a", "a", "b", "b", "c", "c", "c", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let ids: Vec<String> = (0..9).map(|i| format!("t{i}")).collect();
        let ds = Dataset::new(Array2::zeros((9, 1)), labels, ids.clone()).unwrap();
        let split = SplitSpec::new(
            vec!["z".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![],
            vec![],
            ids.clone(),
        )
        .unwrap();
        let guesses = ["a", "b", "a", "b", "c", "c", "c", "a", "b"];
        let p: HashMap<_, _> = ids.iter().cloned().zip(guesses.iter().map(|s| s.to_string())).collect();
        let r = evaluate_zsl(&p, &ds, &split).unwrap();
        assert_eq!(r.confusion, array![[2, 1, 0], [0, 1, 1], [1, 1, 2]]);
        let want = (2.0 / 3.0 + 0.5 + 0.5) / 3.0;
        assert!((r.mean_class_acc - want).abs() < 1e-15);
    }

    #[test]
    fn coverage_errors() {
        let (ds, split) = fixture();
        let mut p: HashMap<_, _> = split
            .test_unseen()
            .iter()
            .map(|id| (id.clone(), "u0".to_string()))
            .collect();
        p.remove("x03");
        assert!(matches!(evaluate_zsl(&p, &ds, &split), Err(Error::MissingPrediction(s)) if s == "x03"));
        p.insert("x03".into(), "s0".into());
        assert!(matches!(evaluate_zsl(&p, &ds, &split), Err(Error::CoverageMismatch(_))));
        p.insert("x03".into(), "u1".into());
        p.insert("x11".into(), "u1".into());
        assert!(matches!(evaluate_zsl(&p, &ds, &split), Err(Error::CoverageMismatch(_))));
        assert!(evaluate_zsl(&preds(&[]), &ds, &split).is_err());
    }

    #[test]
    fn gzsl_summary() {
        let (ds, split) = fixture();
        let mut p: HashMap<_, _> = Mode::Gzsl
            .test_pool(&split)
            .into_iter()
            .map(|id| {
                let l = ds.label(&id).unwrap().to_string();
                (id, l)
            })
            .collect();
        // every seen sample misread as unseen
        for id in split.test_seen() {
            p.insert(id.clone(), "u1".into());
        }
        let r = evaluate_gzsl(&p, &ds, &split).unwrap();
        let g = r.gzsl.unwrap();
        assert_eq!((g.acc_ts, g.acc_tr, g.harmonic), (1.0, 0.0, 0.0));
        assert_eq!(r.n_samples(), 14);
        // s0 has two samples in train, four in test
        assert_eq!(r.classes[0], "s0");
        assert_eq!(r.confusion.row(0).sum(), 4);
    }

    #[test]
    fn gzsl_empty_pool() {
        let labels = vec!["u".to_string(), "s".to_string()];
        let ids = vec!["a".to_string(), "b".to_string()];
        let ds = Dataset::new(Array2::zeros((2, 1)), labels, ids).unwrap();
        let split = SplitSpec::new(vec!["s".into()], vec!["u".into()], vec!["b".into()], vec![], vec!["a".into()]).unwrap();
        assert!(matches!(evaluate_gzsl(&preds(&[("a", "u")]), &ds, &split), Err(Error::EmptyPool("test_seen"))));
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_mean(0.5, 0.5), 0.5);
        assert!((harmonic_mean(56.3, 67.8) - 61.5).abs() < 0.1);
        assert_eq!(harmonic_mean(0.0, 88.7), 0.0);
        assert_eq!(harmonic_mean(0.0, 0.0), 0.0);
    }

    #[test]
    fn harmonic_below_arithmetic() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let h = harmonic_mean(a, b);
                assert!(h <= (a + b) / 2.0 + 1e-15);
                if i == j {
                    assert!((h - a).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn imbalance_invariance() {
        let (ds, split) = fixture();
        let p: HashMap<_, _> = split
            .test_unseen()
            .iter()
            .map(|id| (id.clone(), "u0".to_string()))
            .collect();
        let base = evaluate_zsl(&p, &ds, &split).unwrap().mean_class_acc;

        // duplicate every u1 sample
        let mut labels = ds.labels().to_vec();
        let mut ids = ds.sample_ids().to_vec();
        let mut unseen = split.test_unseen().to_vec();
        let mut p2 = p.clone();
        for i in 2..10 {
            let id = format!("dup{i}");
            labels.push("u1".into());
            ids.push(id.clone());
            unseen.push(id.clone());
            p2.insert(id, "u0".into());
        }
        let ds2 = Dataset::new(Array2::zeros((labels.len(), 1)), labels, ids).unwrap();
        let split2 = SplitSpec::new(
            split.seen_classes().to_vec(),
            split.unseen_classes().to_vec(),
            split.train().to_vec(),
            split.test_seen().to_vec(),
            unseen,
        )
        .unwrap();
        assert_eq!(evaluate_zsl(&p2, &ds2, &split2).unwrap().mean_class_acc, base);
    }

    fn attrs(values: Array2<f64>) -> AttributeMatrix {
        let names = (0..values.nrows()).map(|i| format!("a{i}")).collect();
        let classes = (0..values.ncols()).map(|i| format!("c{i}")).collect();
        AttributeMatrix::new(values, names, classes).unwrap()
    }

    #[test]
    fn distance_examples() {
        let same = attrs(array![[0.3, 0.3], [0.7, 0.7]]);
        let c: Vec<String> = vec!["c0".into(), "c1".into()];
        assert_eq!(sample_attribute_distances(&same, &c, DistanceMetric::HammingOnBinarized).unwrap(), vec![0.0]);
        assert_eq!(sample_attribute_distances(&same, &c, DistanceMetric::Euclidean).unwrap(), vec![0.0]);

        let flip = attrs(array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(sample_attribute_distances(&flip, &c, DistanceMetric::HammingOnBinarized).unwrap(), vec![2.0]);
        assert!(matches!(
            sample_attribute_distances(&flip, &c[..1], DistanceMetric::Euclidean),
            Err(Error::TooFewCandidates(1))
        ));
    }

    #[test]
    fn distances_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let v = Array2::from_shape_fn((6, 10), |_| rng.random_range(0..3) as f64);
        let m = attrs(v.clone());
        let c: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let got = sample_attribute_distances(&m, &c, DistanceMetric::HammingOnBinarized).unwrap();
        let means: Vec<f64> = v.rows().into_iter().map(|r| r.sum() / 10.0).collect();
        let mut want = Vec::new();
        for i in 0..10 {
            for j in 0..i {
                let d = (0..6)
                    .filter(|&r| (v[[r, i]] > means[r]) != (v[[r, j]] > means[r]))
                    .count();
                want.push(d as f64);
            }
        }
        want.sort_by(f64::total_cmp);
        assert_eq!(got, want);
    }

    #[test]
    fn csv_outputs() {
        let (ds, split) = fixture();
        let p: HashMap<_, _> = Mode::Gzsl
            .test_pool(&split)
            .into_iter()
            .map(|id| (id, "u0".to_string()))
            .collect();
        let r = evaluate_gzsl(&p, &ds, &split).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for key in ["mean_class_acc,", "acc_ts,", "acc_tr,", "H,"] {
            assert!(text.contains(key), "{key} missing");
        }
        let mut buf = Vec::new();
        r.write_confusion_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("true\\predicted,s0,u0,u1\n"));
        assert!(r.summary_text().contains("H: 0.0000"));
    }
}
