//! Attribute matrices: column normalization, complementary attributes, the
//! expanded matrix `S = [A; 1 - A]`, and per-class entropy.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::io::{open_reader, parse_f64};

/// Prefix given to complementary attribute names.
pub const COMPLEMENT_PREFIX: &str = "not_";

const UNIT_NORM_TOL: f64 = 1e-9;
const ROW_PAIR_TOL: f64 = 1e-12;

/// Which transformation produced the values of an [`AttributeMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeForm {
    /// Raw presence/correlation scores as read from a file.
    Raw,
    /// Every column has unit L2 norm.
    Normalized,
    /// `1 - A` for a normalized `A`.
    Complementary,
    /// `[A; 1 - A]` stacked vertically.
    Expanded,
}

/// Class-attribute matrix. Rows are attributes, columns are classes.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    values: Array2<f64>,
    attribute_names: Vec<String>,
    class_names: Vec<String>,
    form: AttributeForm,
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidMatrix(format!("duplicate {what} name `{n}`")));
        }
    }
    Ok(())
}

impl AttributeMatrix {
    /// Builds a raw matrix, checking shapes, names and non-negativity.
    pub fn new(
        values: Array2<f64>,
        attribute_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        Self::with_form(values, attribute_names, class_names, AttributeForm::Raw)
    }

    fn with_form(
        values: Array2<f64>,
        attribute_names: Vec<String>,
        class_names: Vec<String>,
        form: AttributeForm,
    ) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if attribute_names.len() != rows {
            return Err(Error::InvalidMatrix(format!(
                "{} attribute names for {rows} rows",
                attribute_names.len()
            )));
        }
        if class_names.len() != cols {
            return Err(Error::InvalidMatrix(format!(
                "{} class names for {cols} columns",
                class_names.len()
            )));
        }
        check_unique(&attribute_names, "attribute")?;
        check_unique(&class_names, "class")?;
        if let Some(((i, j), v)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) = {v} is not a finite non-negative number",
                attribute_names[i], class_names[j]
            )));
        }
        Ok(Self {
            values,
            attribute_names,
            class_names,
            form,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn form(&self) -> AttributeForm {
        self.form
    }

    pub fn is_normalized(&self) -> bool {
        self.form == AttributeForm::Normalized
    }

    /// Number of attributes (rows).
    pub fn n_attributes(&self) -> usize {
        self.values.nrows()
    }

    /// Number of classes (columns).
    pub fn n_classes(&self) -> usize {
        self.values.ncols()
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == class)
    }

    /// Signature column of a class.
    pub fn column(&self, class: &str) -> Result<ArrayView1<'_, f64>> {
        let j = self
            .class_index(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        Ok(self.values.column(j))
    }

    /// True when the values can serve as class signatures (normalized or expanded).
    pub fn is_signature_matrix(&self) -> bool {
        matches!(self.form, AttributeForm::Normalized | AttributeForm::Expanded)
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_attributes()) {
            return Err(Error::InvalidMatrix(format!("row index {bad} out of range")));
        }
        let values = self.values.select(Axis(0), rows);
        let names = rows.iter().map(|&r| self.attribute_names[r].clone()).collect();
        Self::with_form(values, names, self.class_names.clone(), self.form)
    }

    /// Divides every column by its L2 norm. Idempotent.
    pub fn normalize_columns(&self) -> Result<Self> {
        let mut values = self.values.clone();
        for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if norm == 0.0 {
                return Err(Error::AllZeroColumn(self.class_names[j].clone()));
            }
            col.mapv_inplace(|v| v / norm);
        }
        Self::with_form(
            values,
            self.attribute_names.clone(),
            self.class_names.clone(),
            AttributeForm::Normalized,
        )
    }

    /// `1 - A` with attribute names prefixed by `not_`. Applying it to a
    /// complementary matrix recovers the normalized original.
    pub fn complement(&self) -> Result<Self> {
        let (form, names) = match self.form {
            AttributeForm::Normalized => (
                AttributeForm::Complementary,
                self.attribute_names
                    .iter()
                    .map(|n| format!("{COMPLEMENT_PREFIX}{n}"))
                    .collect(),
            ),
            AttributeForm::Complementary => (
                AttributeForm::Normalized,
                self.attribute_names
                    .iter()
                    .map(|n| n.strip_prefix(COMPLEMENT_PREFIX).unwrap_or(n).to_string())
                    .collect(),
            ),
            _ => return Err(Error::NotNormalized),
        };
        let values = self.values.mapv(|v| (1.0 - v).max(0.0));
        Self::with_form(values, names, self.class_names.clone(), form)
    }

    /// Stacks the normalized matrix on top of its complement.
    pub fn expand(&self) -> Result<ExpandedAttributeMatrix> {
        if !self.is_normalized() {
            return Err(Error::NotNormalized);
        }
        let comp = self.complement()?;
        let values = ndarray::concatenate(Axis(0), &[self.values.view(), comp.values.view()])
            .expect("blocks share the column count");
        let mut names = self.attribute_names.clone();
        names.extend(comp.attribute_names);
        let stacked = Self::with_form(
            values,
            names,
            self.class_names.clone(),
            AttributeForm::Expanded,
        )?;
        Ok(ExpandedAttributeMatrix {
            stacked,
            source: self.clone(),
        })
    }

    /// Reads the attribute CSV format: header `attribute,<class_1>,...`, then
    /// one row per attribute.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = open_reader(path)?;
        Self::from_reader(reader, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(|e| Error::parse(source, 1, e.to_string()))?,
            None => return Err(Error::parse(source, 1, "empty file")),
        };
        if header.get(0) != Some("attribute") {
            return Err(Error::parse(source, 1, "header must start with `attribute`"));
        }
        let class_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        if class_names.is_empty() {
            return Err(Error::parse(source, 1, "header names no classes"));
        }
        let mut attribute_names = Vec::new();
        let mut flat = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if rec.len() != class_names.len() + 1 {
                return Err(Error::parse(
                    source,
                    line,
                    format!("expected {} fields, found {}", class_names.len() + 1, rec.len()),
                ));
            }
            attribute_names.push(rec[0].to_string());
            for (col, cell) in rec.iter().enumerate().skip(1) {
                flat.push(parse_f64(cell, source, line, col + 1)?);
            }
        }
        let rows = attribute_names.len();
        if rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        let values = Array2::from_shape_vec((rows, class_names.len()), flat)
            .expect("row lengths checked above");
        Self::new(values, attribute_names, class_names)
            .map_err(|e| Error::parse(source, 1, e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "attribute")?;
        for c in &self.class_names {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (name, row) in self.attribute_names.iter().zip(self.values.rows()) {
            write!(w, "{name}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    /// True when the matrix has an even number of rows and row `i` plus row
    /// `i + M` sums to one in every column, i.e. it already is `[A; 1 - A]`.
    pub fn looks_expanded(&self) -> bool {
        let rows = self.n_attributes();
        if rows % 2 != 0 {
            return false;
        }
        let m = rows / 2;
        let top = self.values.slice(s![..m, ..]);
        let bottom = self.values.slice(s![m.., ..]);
        top.iter()
            .zip(bottom.iter())
            .all(|(a, b)| (a + b - 1.0).abs() <= ROW_PAIR_TOL)
    }
}

/// The expanded matrix `S`, shape `2M x C`, with the normalized matrix it was
/// built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedAttributeMatrix {
    stacked: AttributeMatrix,
    source: AttributeMatrix,
}

impl ExpandedAttributeMatrix {
    /// The stacked `2M x C` matrix.
    pub fn matrix(&self) -> &AttributeMatrix {
        &self.stacked
    }

    /// The normalized original `A`.
    pub fn source(&self) -> &AttributeMatrix {
        &self.source
    }

    /// Number of original attributes `M`.
    pub fn n_original(&self) -> usize {
        self.source.n_attributes()
    }

    /// Recovers an expanded matrix from its stacked values (e.g. re-read from
    /// a file), checking the row-pair and unit-norm laws.
    pub fn from_stacked(m: AttributeMatrix) -> Result<Self> {
        if !m.looks_expanded() {
            return Err(Error::InvalidMatrix(
                "rows i and i + M do not sum to one".into(),
            ));
        }
        let half = m.n_attributes() / 2;
        let top: Vec<usize> = (0..half).collect();
        let top = m.select_rows(&top)?;
        for (j, col) in top.values.axis_iter(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "top block column `{}` has norm {norm}, expected 1",
                    top.class_names[j]
                )));
            }
        }
        let source = AttributeMatrix::with_form(
            top.values,
            top.attribute_names,
            top.class_names,
            AttributeForm::Normalized,
        )?;
        let stacked = AttributeMatrix::with_form(
            m.values,
            m.attribute_names,
            m.class_names,
            AttributeForm::Expanded,
        )?;
        Ok(Self { stacked, source })
    }
}

/// Shannon entropy in nats of a column after L1 normalization; `0 ln 0 = 0`.
pub fn class_entropy(column: ArrayView1<'_, f64>) -> Result<f64> {
    if column.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidMatrix(
            "entropy needs finite non-negative values".into(),
        ));
    }
    let total: f64 = column.sum();
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    let h = column
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| {
            let p = v / total;
            -p * p.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Entropy of one class under the original and expanded representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEntropy {
    pub class: String,
    pub entropy_oa: f64,
    pub entropy_ca: f64,
}

/// Per-class entropy of `A` versus `S`.
pub fn entropy_report(
    a: &AttributeMatrix,
    s: &ExpandedAttributeMatrix,
) -> Result<Vec<ClassEntropy>> {
    let s = s.matrix();
    if a.class_names.is_empty() || a.class_names != s.class_names {
        return Err(Error::ClassMismatch(
            "original and expanded matrices must list the same classes".into(),
        ));
    }
    a.class_names
        .iter()
        .enumerate()
        .map(|(j, class)| {
            Ok(ClassEntropy {
                class: class.clone(),
                entropy_oa: class_entropy(a.values.column(j))?,
                entropy_ca: class_entropy(s.values.column(j))?,
            })
        })
        .collect()
}

/// Maximum deviation of any column norm from one.
pub fn max_column_norm_error(m: &AttributeMatrix) -> f64 {
    m.values
        .axis_iter(Axis(1))
        .map(|c| (c.dot(&c).sqrt() - 1.0).abs())
        .fold(0.0, f64::max)
}
