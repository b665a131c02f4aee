//! Rank aggregation over per-attribute class rankings.
//!
//! Every attribute `m` induces a score vector `r^(m)` over the candidate
//! classes (its row of the signature matrix). The proximal rank maximizes
//!
//! ```text
//! J(r) = sum_m w_m exp(-|r - r^(m)|^2 / sigma)
//! ```
//!
//! where `w_m = p(a_m | x)`. `J` is a weighted Gaussian kernel density over
//! the rows, so it is maximized by mean-shift fixed-point iteration started
//! at the weighted mean. The predicted class is the argmax of the proximal
//! rank.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::attrspace::AttributeMatrix;
use crate::dap::AttributeClassifierBank;
use crate::error::{Error, Result};

/// Per-attribute score vectors over an ordered candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankProfile {
    rows: Array2<f64>,
    candidate_classes: Vec<String>,
}

impl RankProfile {
    pub fn new(rows: Array2<f64>, candidate_classes: Vec<String>) -> Result<Self> {
        if rows.nrows() == 0 || candidate_classes.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if rows.ncols() != candidate_classes.len() {
            return Err(Error::DimensionMismatch {
                expected: candidate_classes.len(),
                got: rows.ncols(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite rank entry".into()));
        }
        Ok(Self {
            rows,
            candidate_classes,
        })
    }

    /// `N_a x L`; row `m` is `r^(m)`.
    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn candidate_classes(&self) -> &[String] {
        &self.candidate_classes
    }

    pub fn n_attributes(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_candidates(&self) -> usize {
        self.rows.ncols()
    }

    /// Squared distances between all pairs of rows, `m < m'`.
    pub fn pairwise_sq_distances(&self) -> Vec<f64> {
        let n = self.rows.nrows();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                out.push(sq_dist(self.rows.row(a), self.rows.row(b)));
            }
        }
        out
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Restricts the signature matrix to `candidates`, one row per attribute.
pub fn induce_ranks(s: &AttributeMatrix, candidates: &[String]) -> Result<RankProfile> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut idx = Vec::with_capacity(candidates.len());
    for (k, c) in candidates.iter().enumerate() {
        if candidates[..k].contains(c) {
            return Err(Error::DuplicateCandidate(c.clone()));
        }
        idx.push(s.class_index(c).ok_or_else(|| Error::UnknownClass(c.clone()))?);
    }
    RankProfile::new(s.values().select(Axis(1), &idx), candidates.to_vec())
}

/// `exp(-|r - r_m|^2 / sigma)`.
pub fn kernel_similarity(r: ArrayView1<'_, f64>, r_m: ArrayView1<'_, f64>, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if r.len() != r_m.len() {
        return Err(Error::DimensionMismatch {
            expected: r_m.len(),
            got: r.len(),
        });
    }
    Ok((-sq_dist(r, r_m) / sigma).exp())
}

/// How the kernel bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPolicy {
    /// Median of the pairwise squared row distances.
    Median,
    Fixed(f64),
}

impl std::str::FromStr for SigmaPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "median" {
            return Ok(SigmaPolicy::Median);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaPolicy::Fixed(v)),
            _ => Err(format!("sigma must be `median` or a positive number, got `{s}`")),
        }
    }
}

impl std::fmt::Display for SigmaPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaPolicy::Median => write!(f, "median"),
            SigmaPolicy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Resolves the bandwidth for a profile.
///
/// A zero median (more than half the rows coincide) falls back to the mean
/// of the positive distances, and to 1 when all rows are identical.
pub fn resolve_sigma(profile: &RankProfile, policy: SigmaPolicy) -> Result<f64> {
    match policy {
        SigmaPolicy::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
        SigmaPolicy::Fixed(s) => Err(Error::NonPositiveSigma(s)),
        SigmaPolicy::Median => {
            let d = profile.pairwise_sq_distances();
            match median(d.clone()) {
                Some(m) if m > 0.0 => Ok(m),
                _ => {
                    let pos: Vec<f64> = d.into_iter().filter(|&x| x > 0.0).collect();
                    if pos.is_empty() {
                        Ok(1.0)
                    } else {
                        Ok(pos.iter().sum::<f64>() / pos.len() as f64)
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOptions {
    pub sigma: SigmaPolicy,
    pub max_iters: usize,
    pub tol: f64,
    /// Also restart from every row and report the best mode found.
    pub restarts: bool,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            sigma: SigmaPolicy::Median,
            max_iters: 500,
            tol: 1e-10,
            restarts: false,
        }
    }
}

/// Best mode over the per-row restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub r_star: Array1<f64>,
    pub objective: f64,
    pub predicted_class: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    /// The proximal rank.
    pub r_star: Array1<f64>,
    pub objective: f64,
    /// Objective at the weighted-mean initializer.
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sigma: f64,
    pub predicted_index: usize,
    pub predicted_class: String,
    pub restart: Option<RestartSummary>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean-shift solver bound to one profile and bandwidth.
#[derive(Debug, Clone)]
pub struct RankAggregator {
    profile: RankProfile,
    sigma: f64,
    opts: AggregateOptions,
}

impl RankAggregator {
    /// Resolves `sigma` once for the profile.
    pub fn new(profile: RankProfile, opts: AggregateOptions) -> Result<Self> {
        let sigma = resolve_sigma(&profile, opts.sigma)?;
        Ok(Self {
            profile,
            sigma,
            opts,
        })
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn check_weights(&self, weights: ArrayView1<'_, f64>) -> Result<()> {
        if weights.len() != self.profile.n_attributes() {
            return Err(Error::DimensionMismatch {
                expected: self.profile.n_attributes(),
                got: weights.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFiniteWeight { index });
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::AllZeroWeights);
        }
        Ok(())
    }

    /// `J(r)` for the bound profile.
    pub fn objective(&self, weights: ArrayView1<'_, f64>, r: ArrayView1<'_, f64>) -> f64 {
        self.profile
            .rows
            .rows()
            .into_iter()
            .zip(weights)
            .map(|(row, w)| w * (-sq_dist(r, row) / self.sigma).exp())
            .sum()
    }

    /// One mean-shift step. Kernel weights are computed in log space and
    /// shifted by their maximum so they cannot all underflow.
    fn step(&self, weights: ArrayView1<'_, f64>, r: ArrayView1<'_, f64>, log_k: &mut [f64]) -> Array1<f64> {
        let mut max = f64::NEG_INFINITY;
        for ((lk, row), &w) in log_k.iter_mut().zip(self.profile.rows.rows()).zip(weights) {
            *lk = if w > 0.0 {
                w.ln() - sq_dist(r, row) / self.sigma
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(*lk);
        }
        let mut next = Array1::zeros(r.len());
        let mut total = 0.0;
        for (lk, row) in log_k.iter().zip(self.profile.rows.rows()) {
            if *lk == f64::NEG_INFINITY {
                continue;
            }
            let k = (lk - max).exp();
            next.scaled_add(k, &row);
            total += k;
        }
        next / total
    }

    fn weighted_mean(&self, weights: ArrayView1<'_, f64>) -> Array1<f64> {
        let total: f64 = weights.sum();
        let mut mean = Array1::zeros(self.profile.n_candidates());
        for (row, &w) in self.profile.rows.rows().into_iter().zip(weights) {
            if w > 0.0 {
                mean.scaled_add(w / total, &row);
            }
        }
        mean
    }

    fn ascend(
        &self,
        weights: ArrayView1<'_, f64>,
        start: Array1<f64>,
        mut trace: Option<&mut Vec<Array1<f64>>>,
    ) -> (Array1<f64>, usize, bool) {
        let mut r = start;
        let mut log_k = vec![0.0; self.profile.n_attributes()];
        if let Some(t) = trace.as_deref_mut() {
            t.push(r.clone());
        }
        for it in 1..=self.opts.max_iters {
            let next = self.step(weights, r.view(), &mut log_k);
            let delta = next
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            r = next;
            if let Some(t) = trace.as_deref_mut() {
                t.push(r.clone());
            }
            if delta < self.opts.tol {
                return (r, it, true);
            }
        }
        (r, self.opts.max_iters, false)
    }

    /// Finds the proximal rank for posterior weights `weights`.
    pub fn aggregate(&self, weights: ArrayView1<'_, f64>) -> Result<AggregationResult> {
        self.aggregate_inner(weights, None)
    }

    /// Like [`aggregate`](Self::aggregate), also returning every iterate
    /// starting with the initializer.
    pub fn aggregate_traced(
        &self,
        weights: ArrayView1<'_, f64>,
    ) -> Result<(AggregationResult, Vec<Array1<f64>>)> {
        let mut trace = Vec::new();
        let res = self.aggregate_inner(weights, Some(&mut trace))?;
        Ok((res, trace))
    }

    fn aggregate_inner(
        &self,
        weights: ArrayView1<'_, f64>,
        trace: Option<&mut Vec<Array1<f64>>>,
    ) -> Result<AggregationResult> {
        self.check_weights(weights)?;
        let start = self.weighted_mean(weights);
        let initial_objective = self.objective(weights, start.view());
        let (r_star, iterations, converged) = self.ascend(weights, start, trace);
        let objective = self.objective(weights, r_star.view());
        let predicted_index = argmax(r_star.view());

        let restart = if self.opts.restarts {
            let mut best: Option<(Array1<f64>, f64)> = None;
            for (row, &w) in self.profile.rows.rows().into_iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                let (mode, _, _) = self.ascend(weights, row.to_owned(), None);
                let j = self.objective(weights, mode.view());
                if best.as_ref().is_none_or(|(_, b)| j > *b) {
                    best = Some((mode, j));
                }
            }
            best.map(|(mode, j)| RestartSummary {
                predicted_class: self.profile.candidate_classes[argmax(mode.view())].clone(),
                r_star: mode,
                objective: j,
            })
        } else {
            None
        };

        Ok(AggregationResult {
            predicted_class: self.profile.candidate_classes[predicted_index].clone(),
            r_star,
            objective,
            initial_objective,
            iterations,
            converged,
            sigma: self.sigma,
            predicted_index,
            restart,
        })
    }
}

/// One-shot aggregation; resolves sigma for this call.
pub fn aggregate(
    profile: &RankProfile,
    weights: ArrayView1<'_, f64>,
    opts: &AggregateOptions,
) -> Result<AggregationResult> {
    RankAggregator::new(profile.clone(), *opts)?.aggregate(weights)
}

/// Posterior-weighted rank aggregation prediction for one sample.
///
/// `s` is the signature matrix the bank was trained against; its rows are
/// matched to the bank by attribute name so dropped attributes are skipped.
pub fn ppzsl_predict(
    bank: &AttributeClassifierBank,
    x: ArrayView1<'_, f64>,
    s: &AttributeMatrix,
    candidates: &[String],
    opts: &AggregateOptions,
) -> Result<AggregationResult> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let aggregator = RankAggregator::new(bank_profile(bank, s, candidates)?, *opts)?;
    let weights = bank.posteriors(x)?;
    aggregator.aggregate(weights.view())
}

/// Rank profile over the rows of `s` that the bank has classifiers for.
pub fn bank_profile(
    bank: &AttributeClassifierBank,
    s: &AttributeMatrix,
    candidates: &[String],
) -> Result<RankProfile> {
    let rows = bank
        .attribute_names()
        .iter()
        .map(|name| {
            s.attribute_names()
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::InvalidMatrix(format!("attribute `{name}` missing from signatures")))
        })
        .collect::<Result<Vec<_>>>()?;
    induce_ranks(&s.select_rows(&rows)?, candidates)
}
