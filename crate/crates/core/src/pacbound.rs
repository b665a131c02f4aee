//! PAC-style recognition bounds for attribute-based zero-shot models, with
//! and without complementary attributes.
//!
//! The label stage is a nearest-neighbour search in attribute space. From the
//! distribution `R_p` of distances to label points and the number of label
//! points `n`, the nearest-neighbour distance has CDF
//! `G_p(z) = 1 - (1 - R_p(z))^n`. `G_p^-1(gamma)` is the number of attribute
//! errors that can be tolerated; dividing by `M` gives the per-classifier
//! error `eps`. The sample count needed by each classifier follows the VC
//! bound, and the recognition probability is
//! `(1 - delta)^M * P_att * (1 - gamma)` with `P_att` a binomial tail.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{open_reader, parse_f64};

/// Piecewise-constant CDF over a finite support grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl EmpiricalCdf {
    /// Empirical CDF of a distance sample. The grid is the distinct sample
    /// values plus the origin.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCdf);
        }
        if samples.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidCdf("distances must be finite and >= 0".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut grid = Vec::new();
        let mut cdf = Vec::new();
        if sorted[0] > 0.0 {
            grid.push(0.0);
            cdf.push(0.0);
        }
        let mut i = 0;
        while i < sorted.len() {
            let z = sorted[i];
            while i < sorted.len() && sorted[i] == z {
                i += 1;
            }
            grid.push(z);
            cdf.push(i as f64 / n);
        }
        Ok(Self { grid, cdf })
    }

    /// An explicit table of `(z, R_p(z))` points.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCdf);
        }
        for (k, &(z, f)) in points.iter().enumerate() {
            if !z.is_finite() || !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidCdf(format!("point {k} = ({z}, {f}) out of range")));
            }
            if k > 0 {
                let (pz, pf) = points[k - 1];
                if z <= pz || f < pf {
                    return Err(Error::InvalidCdf(format!(
                        "points must be strictly increasing in z and non-decreasing in R_p (at {k})"
                    )));
                }
            }
        }
        Ok(Self {
            grid: points.iter().map(|p| p.0).collect(),
            cdf: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `R_p(z)`: the value at the largest grid point `<= z`, 0 below the grid.
    pub fn eval(&self, z: f64) -> f64 {
        match self.grid.partition_point(|&g| g <= z) {
            0 => 0.0,
            k => self.cdf[k - 1],
        }
    }

    /// Reads either a distance sample (header `distance`) or a table (header
    /// `z,cdf`).
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
        let table = match (header.len(), header.get(0)) {
            (1, Some("distance")) => false,
            (2, Some("z")) if &header[1] == "cdf" => true,
            _ => return Err(Error::parse(source, 1, "header must be `distance` or `z,cdf`")),
        };
        let width = if table { 2 } else { 1 };
        let mut values = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if rec.len() != width {
                return Err(Error::parse(source, line, format!("expected {width} fields")));
            }
            for (col, cell) in rec.iter().enumerate() {
                values.push(parse_f64(cell, source, line, col + 1)?);
            }
        }
        if table {
            let pts: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
            Self::from_table(&pts)
        } else {
            Self::from_samples(&values)
        }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(open_reader(path)?, &path.display().to_string())
    }
}

/// `G_p(z) = 1 - (1 - R_p(z))^n`.
pub fn gp_from_rp(rp: &EmpiricalCdf, n_unseen: u32, z: f64) -> f64 {
    let r = rp.eval(z);
    1.0 - (1.0 - r).powi(n_unseen as i32)
}

/// Result of inverting `G_p` on the support grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GInverse {
    pub value: f64,
    /// No grid point satisfied `G_p(z) <= gamma`; `value` is 0.
    pub below_grid: bool,
}

/// Largest grid point `z` with `G_p(z) <= gamma`.
pub fn gp_inverse(rp: &EmpiricalCdf, n_unseen: u32, gamma: f64) -> Result<GInverse> {
    if rp.grid.is_empty() {
        return Err(Error::EmptyCdf);
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidBoundInput(format!("gamma {gamma} outside (0, 1)")));
    }
    // G_p is non-decreasing on the grid, so the qualifying points are a prefix.
    let k = rp
        .grid
        .partition_point(|&z| gp_from_rp(rp, n_unseen, z) <= gamma);
    Ok(match k {
        0 => GInverse {
            value: 0.0,
            below_grid: true,
        },
        k => GInverse {
            value: rp.grid[k - 1],
            below_grid: false,
        },
    })
}

/// Binomial CDF `P(X <= floor(k))` for `X ~ B(n, p)`, summing pmf terms that
/// are each evaluated in log space.
pub fn binocdf(k: f64, n_trials: u64, p: f64) -> f64 {
    if k.is_nan() || k < 0.0 {
        return 0.0;
    }
    if k >= n_trials as f64 {
        return 1.0;
    }
    let kf = k.floor() as u64;
    binomial_terms(n_trials, p, 0..=kf)
}

/// Upper tail `P(X > floor(k))`, summed independently of [`binocdf`].
pub fn binosf(k: f64, n_trials: u64, p: f64) -> f64 {
    if k.is_nan() || k < 0.0 {
        return 1.0;
    }
    if k >= n_trials as f64 {
        return 0.0;
    }
    let kf = k.floor() as u64;
    binomial_terms(n_trials, p, kf + 1..=n_trials)
}

fn binomial_terms(n: u64, p: f64, range: std::ops::RangeInclusive<u64>) -> f64 {
    if p <= 0.0 {
        return if range.contains(&0) { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if range.contains(&n) { 1.0 } else { 0.0 };
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lnc = ln_choose_table(n);
    range
        .map(|j| (lnc[j as usize] + j as f64 * lp + (n - j) as f64 * lq).exp())
        .sum::<f64>()
        .min(1.0)
}

/// `ln C(n, j)` for `j = 0..=n`, built symmetrically from both ends.
fn ln_choose_table(n: u64) -> Vec<f64> {
    let n = n as usize;
    let mut t = vec![0.0; n + 1];
    for j in 1..=n / 2 {
        t[j] = t[j - 1] + ((n - j + 1) as f64).ln() - (j as f64).ln();
        t[n - j] = t[j];
    }
    t
}

/// Where the attribute-error tolerance `G_p^-1(gamma)` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ToleranceSource {
    /// Invert `G_p` built from this `R_p`.
    Cdf(EmpiricalCdf),
    /// Use this value directly.
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInput {
    /// Number of attributes `M`.
    pub m: u32,
    /// Feature dimension `d`.
    pub d: u32,
    /// Number of label points in attribute space.
    pub n_unseen: u32,
    pub gamma: f64,
    pub delta: f64,
    pub tolerance: ToleranceSource,
    /// Use `(1 - delta)^(2M)` for the complementary model.
    pub strict_2m: bool,
}

impl BoundInput {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidBoundInput(m));
        if self.m == 0 || self.d == 0 || self.n_unseen == 0 {
            return bad("M, d and n must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta {} outside (0, 1)", self.delta));
        }
        if let ToleranceSource::Explicit(g) = self.tolerance {
            if !(g.is_finite() && g >= 0.0) {
                return bad(format!("G_p^-1 {g} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub g_inv_gamma: f64,
    pub epsilon: f64,
    pub n_delta: f64,
    pub p_att: f64,
    pub p_zsl: f64,
    pub n_delta_ca: f64,
    pub p_att_ca: f64,
    pub p_zsl_ca: f64,
    /// `G_p` exceeded gamma on the whole grid.
    pub below_grid: bool,
    pub strict_2m: bool,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "g_inv_gamma,epsilon,n_delta,p_att,p_zsl,n_delta_ca,p_att_ca,p_zsl_ca,strict_2m";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.g_inv_gamma,
            self.epsilon,
            self.n_delta,
            self.p_att,
            self.p_zsl,
            self.n_delta_ca,
            self.p_att_ca,
            self.p_zsl_ca,
            self.strict_2m
        )
    }
}

/// Required samples per classifier: `(a/g) [4 ln(2/delta) + 8(d+1) ln(13 a/g)]`
/// with `a` attributes and `g` tolerated errors.
fn sample_bound(attributes: f64, g: f64, d: u32, delta: f64) -> f64 {
    (attributes / g) * (4.0 * (2.0 / delta).ln() + 8.0 * (d as f64 + 1.0) * (13.0 * attributes / g).ln())
}

/// Snaps `x` to the nearest integer when within rounding noise, then floors.
fn floor_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// `1 - BinoCDF(trials (1 - eps), trials, 1 - eps)`.
pub fn attribute_success_probability(trials: u64, epsilon: f64) -> f64 {
    let p = 1.0 - epsilon;
    let k = floor_snapped(trials as f64 * p);
    binosf(k, trials, p)
}

pub fn bound_report(input: &BoundInput) -> Result<BoundReport> {
    input.validate()?;
    let (g, below_grid) = match &input.tolerance {
        ToleranceSource::Explicit(g) => (*g, false),
        ToleranceSource::Cdf(rp) => {
            let inv = gp_inverse(rp, input.n_unseen, input.gamma)?;
            (inv.value, inv.below_grid)
        }
    };
    if g == 0.0 {
        return Err(Error::ZeroTolerance);
    }
    let m = f64::from(input.m);
    let epsilon = (g / m).min(1.0);

    let n_delta = sample_bound(m, g, input.d, input.delta);
    let n_delta_ca = sample_bound(2.0 * m, 2.0 * g, input.d, input.delta);

    let p_att = attribute_success_probability(u64::from(input.m), epsilon);
    let p_att_ca = attribute_success_probability(2 * u64::from(input.m), epsilon);
    let keep = (1.0 - input.delta).powi(input.m as i32);
    let keep_ca = if input.strict_2m {
        (1.0 - input.delta).powi(2 * input.m as i32)
    } else {
        keep
    };
    Ok(BoundReport {
        g_inv_gamma: g,
        epsilon,
        n_delta,
        p_att,
        p_zsl: keep * p_att * (1.0 - input.gamma),
        n_delta_ca,
        p_att_ca,
        p_zsl_ca: keep_ca * p_att_ca * (1.0 - input.gamma),
        below_grid,
        strict_2m: input.strict_2m,
    })
}
