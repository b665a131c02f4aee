//! End-to-end composition: signature matrix, training, per-sample inference.
//!
//! Six methods are supported. `dap` scores classes with the product rule over
//! the original attributes, `dap-ca` does the same over `[A; 1 - A]`, and the
//! `-ra` variants replace the product rule with rank aggregation. `le` and
//! `le-ca` are the bilinear learner over the two embeddings.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::attrspace::{AttributeForm, AttributeMatrix};
use crate::dap::{binarize_signatures, dap_predict, train_bank, AttributeClassifierBank, BankHyper, BinarizedSignatures};
use crate::datagen::DataBundle;
use crate::error::{Error, Result};
use crate::evalkit::Mode;
use crate::lezsl::{self, le_predict, BilinearModel, TrainHyper};
use crate::rankagg::{bank_profile, AggregateOptions, RankAggregator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dap,
    DapCa,
    DapRa,
    DapCaRa,
    Le,
    LeCa,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dap,
        Method::DapCa,
        Method::DapRa,
        Method::DapCaRa,
        Method::Le,
        Method::LeCa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dap => "dap",
            Method::DapCa => "dap-ca",
            Method::DapRa => "dap-ra",
            Method::DapCaRa => "dap-ca-ra",
            Method::Le => "le",
            Method::LeCa => "le-ca",
        }
    }

    pub fn uses_complement(self) -> bool {
        matches!(self, Method::DapCa | Method::DapCaRa | Method::LeCa)
    }

    pub fn uses_rank_aggregation(self) -> bool {
        matches!(self, Method::DapRa | Method::DapCaRa)
    }

    pub fn is_label_embedding(self) -> bool {
        matches!(self, Method::Le | Method::LeCa)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected dap, dap-ca, dap-ra, dap-ca-ra, le or le-ca)"))
    }
}

/// Normalized `A`, or `[A; 1 - A]` when `complement` is set. Raw input is
/// normalized first; an already expanded matrix is only accepted for `complement`.
pub fn signature_matrix(attributes: &AttributeMatrix, complement: bool) -> Result<AttributeMatrix> {
    let normalized = match attributes.form() {
        AttributeForm::Expanded => {
            return if complement {
                Ok(attributes.clone())
            } else {
                Err(Error::AlreadyExpanded)
            };
        }
        AttributeForm::Normalized => attributes.clone(),
        AttributeForm::Raw if attributes.looks_expanded() => {
            // stacked matrix read back from a file
            return if complement {
                Ok(crate::attrspace::ExpandedAttributeMatrix::from_stacked(attributes.clone())?
                    .matrix()
                    .clone())
            } else {
                Err(Error::AlreadyExpanded)
            };
        }
        _ => attributes.normalize_columns()?,
    };
    if complement {
        Ok(normalized.expand()?.matrix().clone())
    } else {
        Ok(normalized)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineHyper {
    pub bank: BankHyper,
    pub le: TrainHyper,
    pub aggregate: AggregateOptions,
}

/// A trained model plus the signature matrix it was trained against.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Dap {
        bank: AttributeClassifierBank,
        binarized: BinarizedSignatures,
        signatures: AttributeMatrix,
    },
    Le {
        model: BilinearModel,
        loss_trace: Vec<f64>,
    },
}

/// Trains the model family of `method` on the training pool.
pub fn train_model(method: Method, bundle: &DataBundle, hyper: &PipelineHyper) -> Result<TrainedModel> {
    let s = signature_matrix(&bundle.attributes, method.uses_complement())?;
    if method.is_label_embedding() {
        let trained = lezsl::train(&bundle.dataset, &bundle.split, &s, &hyper.le)?;
        Ok(TrainedModel::Le {
            model: trained.model,
            loss_trace: trained.loss_trace,
        })
    } else {
        let binarized = binarize_signatures(&s, bundle.split.seen_classes())?;
        let bank = train_bank(&bundle.dataset, &bundle.split, &binarized, &hyper.bank)?;
        Ok(TrainedModel::Dap {
            bank,
            binarized,
            signatures: s,
        })
    }
}

/// Wraps a bank loaded from disk, re-deriving the binarized signatures it
/// was trained against.
pub fn dap_model_from_bank(
    bank: AttributeClassifierBank,
    attributes: &AttributeMatrix,
    split: &crate::datagen::SplitSpec,
    complement: bool,
) -> Result<TrainedModel> {
    let signatures = signature_matrix(attributes, complement)?;
    let binarized = binarize_signatures(&signatures, split.seen_classes())?;
    if bank.attribute_names() != binarized.attribute_names() {
        return Err(Error::InvalidMatrix(
            "classifier bank attributes do not match the binarized signatures".into(),
        ));
    }
    Ok(TrainedModel::Dap {
        bank,
        binarized,
        signatures,
    })
}

/// Result of predicting one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePrediction {
    pub sample_id: String,
    pub predicted: String,
    /// Top score: the DAP log score, the compatibility, or the aggregation
    /// objective at the proximal rank.
    pub score: f64,
    /// Mean-shift iterations; 0 for methods without aggregation.
    pub iterations: usize,
    pub converged: bool,
    /// The top score is shared with another candidate.
    pub degenerate_tie: bool,
}

enum Engine<'a> {
    Dap {
        bank: &'a AttributeClassifierBank,
        binarized: &'a BinarizedSignatures,
    },
    Ra {
        bank: &'a AttributeClassifierBank,
        aggregator: RankAggregator,
    },
    Le(&'a BilinearModel),
}

/// Immutable inference state; safe to share across threads.
pub struct Predictor<'a> {
    bundle: &'a DataBundle,
    candidates: Vec<String>,
    engine: Engine<'a>,
}

impl<'a> Predictor<'a> {
    pub fn new(
        method: Method,
        mode: Mode,
        model: &'a TrainedModel,
        bundle: &'a DataBundle,
        opts: &AggregateOptions,
    ) -> Result<Self> {
        let candidates = mode.candidates(&bundle.split);
        let engine = match (model, method.is_label_embedding()) {
            (TrainedModel::Le { model, .. }, true) => {
                if lezsl::EmbeddingKind::of(model.embedding())?
                    != embedding_kind(method)
                {
                    return Err(Error::InvalidHyper(format!(
                        "model embedding does not match method {method}"
                    )));
                }
                Engine::Le(model)
            }
            (
                TrainedModel::Dap {
                    bank,
                    binarized,
                    signatures,
                },
                false,
            ) => {
                let expanded = signatures.form() == AttributeForm::Expanded;
                if expanded != method.uses_complement() {
                    return Err(Error::InvalidHyper(format!(
                        "attribute classifiers do not match method {method}"
                    )));
                }
                if method.uses_rank_aggregation() {
                    let profile = bank_profile(bank, signatures, &candidates)?;
                    Engine::Ra {
                        bank,
                        aggregator: RankAggregator::new(profile, *opts)?,
                    }
                } else {
                    Engine::Dap { bank, binarized }
                }
            }
            _ => {
                return Err(Error::InvalidHyper(format!(
                    "model family does not match method {method}"
                )))
            }
        };
        Ok(Self {
            bundle,
            candidates,
            engine,
        })
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    /// Kernel bandwidth in use, for aggregation methods.
    pub fn sigma(&self) -> Option<f64> {
        match &self.engine {
            Engine::Ra { aggregator, .. } => Some(aggregator.sigma()),
            _ => None,
        }
    }

    pub fn predict(&self, sample_id: &str) -> Result<SamplePrediction> {
        let x = self.bundle.dataset.row(sample_id)?;
        let sample_id = sample_id.to_string();
        match &self.engine {
            Engine::Dap { bank, binarized } => {
                let ranking = dap_predict(bank, x, &self.candidates, binarized)?;
                Ok(SamplePrediction {
                    sample_id,
                    predicted: ranking[0].class.clone(),
                    score: ranking[0].score,
                    iterations: 0,
                    converged: true,
                    degenerate_tie: ranking.len() > 1 && ranking[1].score == ranking[0].score,
                })
            }
            Engine::Ra { bank, aggregator } => {
                let weights = bank.posteriors(x)?;
                let r = aggregator.aggregate(weights.view())?;
                let top = r.r_star[r.predicted_index];
                let ties = r.r_star.iter().filter(|&&v| v == top).count();
                Ok(SamplePrediction {
                    sample_id,
                    predicted: r.predicted_class,
                    score: r.objective,
                    iterations: r.iterations,
                    converged: r.converged,
                    degenerate_tie: ties > 1,
                })
            }
            Engine::Le(model) => {
                let p = le_predict(model, x, &self.candidates)?;
                Ok(SamplePrediction {
                    sample_id,
                    predicted: p.predicted().to_string(),
                    score: p.ranking[0].score,
                    iterations: 0,
                    converged: true,
                    degenerate_tie: p.degenerate_tie,
                })
            }
        }
    }

    /// Sequential prediction over `ids`, in order.
    pub fn predict_all(&self, ids: &[String]) -> Result<Vec<SamplePrediction>> {
        ids.iter().map(|id| self.predict(id)).collect()
    }
}

pub fn embedding_kind(method: Method) -> lezsl::EmbeddingKind {
    if method.uses_complement() {
        lezsl::EmbeddingKind::Expanded
    } else {
        lezsl::EmbeddingKind::Original
    }
}

/// `sample_id,predicted`
pub fn write_predictions<W: Write>(preds: &[SamplePrediction], mut w: W) -> std::io::Result<()> {
    writeln!(w, "sample_id,predicted")?;
    for p in preds {
        writeln!(w, "{},{}", p.sample_id, p.predicted)?;
    }
    w.flush()
}

/// `sample_id,predicted,objective,iterations,converged,degenerate_tie`
pub fn write_diagnostics<W: Write>(preds: &[SamplePrediction], mut w: W) -> std::io::Result<()> {
    writeln!(w, "sample_id,predicted,objective,iterations,converged,degenerate_tie")?;
    for p in preds {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.sample_id, p.predicted, p.score, p.iterations, p.converged, p.degenerate_tie
        )?;
    }
    w.flush()
}

/// Reads `sample_id,predicted` back into a map.
pub fn read_predictions<R: std::io::Read>(
    reader: R,
    source: &str,
) -> Result<std::collections::HashMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    if headers.len() < 2 || &headers[0] != "sample_id" || &headers[1] != "predicted" {
        return Err(Error::parse(source, 1, "header must start with `sample_id,predicted`"));
    }
    let mut out = std::collections::HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
        if out.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
            return Err(Error::parse(source, line, format!("duplicate sample `{}`", &rec[0])));
        }
    }
    Ok(out)
}

/// Trains, predicts the mode's test pool and evaluates, in one call.
pub fn run(
    method: Method,
    mode: Mode,
    bundle: &DataBundle,
    hyper: &PipelineHyper,
) -> Result<(Vec<SamplePrediction>, crate::evalkit::EvalReport)> {
    let model = train_model(method, bundle, hyper)?;
    let predictor = Predictor::new(method, mode, &model, bundle, &hyper.aggregate)?;
    let preds = predictor.predict_all(&mode.test_pool(&bundle.split))?;
    let map = preds
        .iter()
        .map(|p| (p.sample_id.clone(), p.predicted.clone()))
        .collect();
    let report = crate::evalkit::evaluate(mode, &map, &bundle.dataset, &bundle.split)?;
    Ok((preds, report))
}
