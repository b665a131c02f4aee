//! Datasets, class/sample splits, file loading and the seeded synthetic
//! generator.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::attrspace::AttributeMatrix;
use crate::error::{Error, Result};
use crate::io::{create, open_reader, parse_f64};

/// Sample features with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<String>,
    sample_ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<String>, sample_ids: Vec<String>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one sample and one feature, got {n} x {d}"
            )));
        }
        if labels.len() != n || sample_ids.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{n} feature rows, {} labels, {} sample ids",
                labels.len(),
                sample_ids.len()
            )));
        }
        if let Some(((i, _), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "sample `{}` has a non-finite feature",
                sample_ids[i]
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in sample_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        Ok(Self {
            features,
            labels,
            sample_ids,
            index,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn index_of(&self, sample_id: &str) -> Result<usize> {
        self.index
            .get(sample_id)
            .copied()
            .ok_or_else(|| Error::UnknownSample(sample_id.to_string()))
    }

    pub fn label(&self, sample_id: &str) -> Result<&str> {
        Ok(&self.labels[self.index_of(sample_id)?])
    }

    pub fn row(&self, sample_id: &str) -> Result<ArrayView1<'_, f64>> {
        Ok(self.features.row(self.index_of(sample_id)?))
    }

    /// Feature rows and labels of the given samples, in order.
    pub fn select(&self, sample_ids: &[String]) -> Result<(Array2<f64>, Vec<String>)> {
        let idx = sample_ids
            .iter()
            .map(|id| self.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        Ok((self.features.select(Axis(0), &idx), labels))
    }

    /// Reads `sample_id,label,f1,...,fd`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(open_reader(path)?, &path.display().to_string())
    }

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
        if header.len() < 3 || &header[0] != "sample_id" || &header[1] != "label" {
            return Err(Error::parse(
                source,
                1,
                "header must be `sample_id,label,f1,...,fd`",
            ));
        }
        let d = header.len() - 2;
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut flat = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if rec.len() != d + 2 {
                return Err(Error::parse(
                    source,
                    line,
                    format!("expected {} fields, found {}", d + 2, rec.len()),
                ));
            }
            ids.push(rec[0].to_string());
            labels.push(rec[1].to_string());
            for (col, cell) in rec.iter().enumerate().skip(2) {
                flat.push(parse_f64(cell, source, line, col + 1)?);
            }
        }
        if ids.is_empty() {
            return Err(Error::parse(source, 2, "no samples"));
        }
        let features = Array2::from_shape_vec((ids.len(), d), flat).expect("row lengths checked");
        Self::new(features, labels, ids)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_writer(create(path)?).map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "sample_id,label")?;
        for k in 1..=self.dim() {
            write!(w, ",f{k}")?;
        }
        writeln!(w)?;
        for ((id, label), row) in self
            .sample_ids
            .iter()
            .zip(&self.labels)
            .zip(self.features.rows())
        {
            write!(w, "{id},{label}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }
}

/// Sample pool a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Train,
    TestSeen,
    TestUnseen,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::TestSeen => "test_seen",
            Partition::TestUnseen => "test_unseen",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Partition::Train),
            "test_seen" => Some(Partition::TestSeen),
            "test_unseen" => Some(Partition::TestUnseen),
            _ => None,
        }
    }
}

/// Seen/unseen class partition plus the three sample pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    seen_classes: Vec<String>,
    unseen_classes: Vec<String>,
    train: Vec<String>,
    test_seen: Vec<String>,
    test_unseen: Vec<String>,
}

impl SplitSpec {
    pub fn new(
        seen_classes: Vec<String>,
        unseen_classes: Vec<String>,
        train: Vec<String>,
        test_seen: Vec<String>,
        test_unseen: Vec<String>,
    ) -> Result<Self> {
        let mut classes = HashSet::new();
        for c in seen_classes.iter().chain(&unseen_classes) {
            if !classes.insert(c.as_str()) {
                return Err(Error::InvalidSplit(format!(
                    "class `{c}` listed twice or in both seen and unseen"
                )));
            }
        }
        if seen_classes.is_empty() || unseen_classes.is_empty() {
            return Err(Error::InvalidSplit(
                "need at least one seen and one unseen class".into(),
            ));
        }
        let mut samples = HashSet::new();
        for id in train.iter().chain(&test_seen).chain(&test_unseen) {
            if !samples.insert(id.as_str()) {
                return Err(Error::SplitOverlap(id.clone()));
            }
        }
        Ok(Self {
            seen_classes,
            unseen_classes,
            train,
            test_seen,
            test_unseen,
        })
    }

    pub fn seen_classes(&self) -> &[String] {
        &self.seen_classes
    }

    pub fn unseen_classes(&self) -> &[String] {
        &self.unseen_classes
    }

    /// Seen classes followed by unseen classes.
    pub fn all_classes(&self) -> Vec<String> {
        self.seen_classes
            .iter()
            .chain(&self.unseen_classes)
            .cloned()
            .collect()
    }

    pub fn is_seen(&self, class: &str) -> bool {
        self.seen_classes.iter().any(|c| c == class)
    }

    pub fn is_unseen(&self, class: &str) -> bool {
        self.unseen_classes.iter().any(|c| c == class)
    }

    pub fn train(&self) -> &[String] {
        &self.train
    }

    pub fn test_seen(&self) -> &[String] {
        &self.test_seen
    }

    pub fn test_unseen(&self) -> &[String] {
        &self.test_unseen
    }

    pub fn pool(&self, p: Partition) -> &[String] {
        match p {
            Partition::Train => &self.train,
            Partition::TestSeen => &self.test_seen,
            Partition::TestUnseen => &self.test_unseen,
        }
    }

    /// Checks that every referenced sample exists with a label of the right
    /// role, and every class has a signature column.
    pub fn validate(&self, dataset: &Dataset, attributes: &AttributeMatrix) -> Result<()> {
        for c in self.seen_classes.iter().chain(&self.unseen_classes) {
            if attributes.class_index(c).is_none() {
                return Err(Error::UnknownClass(c.clone()));
            }
        }
        for label in dataset.labels() {
            if !self.is_seen(label) && !self.is_unseen(label) {
                return Err(Error::UnknownClass(label.clone()));
            }
        }
        for p in [Partition::Train, Partition::TestSeen, Partition::TestUnseen] {
            let want_seen = p != Partition::TestUnseen;
            for id in self.pool(p) {
                let label = dataset.label(id)?;
                if self.is_seen(label) != want_seen {
                    return Err(Error::InvalidSplit(format!(
                        "sample `{id}` of class `{label}` cannot be in the {} pool",
                        p.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(open_reader(path)?, &path.display().to_string())
    }

    /// Reads `sample_id,partition` records plus `class,<name>,<seen|unseen>`
    /// role records.
    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let (mut seen, mut unseen) = (Vec::new(), Vec::new());
        let (mut train, mut test_seen, mut test_unseen) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 1;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            if line == 1 && rec.len() == 2 && &rec[0] == "sample_id" && &rec[1] == "partition" {
                continue;
            }
            match rec.len() {
                3 if &rec[0] == "class" => match &rec[2] {
                    "seen" => seen.push(rec[1].to_string()),
                    "unseen" => unseen.push(rec[1].to_string()),
                    other => {
                        return Err(Error::parse(
                            source,
                            line,
                            format!("class role `{other}` is not seen/unseen"),
                        ))
                    }
                },
                2 => {
                    let id = rec[0].to_string();
                    match Partition::parse(&rec[1]) {
                        Some(Partition::Train) => train.push(id),
                        Some(Partition::TestSeen) => test_seen.push(id),
                        Some(Partition::TestUnseen) => test_unseen.push(id),
                        None => {
                            return Err(Error::parse(
                                source,
                                line,
                                format!("unknown partition `{}`", &rec[1]),
                            ))
                        }
                    }
                }
                n => {
                    return Err(Error::parse(
                        source,
                        line,
                        format!("unexpected record with {n} fields"),
                    ))
                }
            }
        }
        Self::new(seen, unseen, train, test_seen, test_unseen)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_writer(create(path)?).map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample_id,partition")?;
        for c in &self.seen_classes {
            writeln!(w, "class,{c},seen")?;
        }
        for c in &self.unseen_classes {
            writeln!(w, "class,{c},unseen")?;
        }
        for p in [Partition::Train, Partition::TestSeen, Partition::TestUnseen] {
            for id in self.pool(p) {
                writeln!(w, "{id},{}", p.as_str())?;
            }
        }
        w.flush()
    }
}

/// A cross-validated dataset, split and attribute matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBundle {
    pub dataset: Dataset,
    pub split: SplitSpec,
    pub attributes: AttributeMatrix,
}

impl DataBundle {
    pub fn new(dataset: Dataset, split: SplitSpec, attributes: AttributeMatrix) -> Result<Self> {
        split.validate(&dataset, &attributes)?;
        Ok(Self {
            dataset,
            split,
            attributes,
        })
    }

    pub fn write(
        &self,
        features_path: impl AsRef<Path>,
        splits_path: impl AsRef<Path>,
        attributes_path: impl AsRef<Path>,
    ) -> Result<()> {
        self.dataset.write_csv(features_path)?;
        self.split.write_csv(splits_path)?;
        self.attributes.write_csv(attributes_path)
    }
}

/// Loads and cross-validates the three dataset files.
pub fn load_dataset(
    features_path: impl AsRef<Path>,
    splits_path: impl AsRef<Path>,
    attributes_path: impl AsRef<Path>,
) -> Result<DataBundle> {
    let dataset = Dataset::read_csv(features_path)?;
    let split = SplitSpec::read_csv(splits_path)?;
    let attributes = AttributeMatrix::read_csv(attributes_path)?;
    DataBundle::new(dataset, split, attributes)
}

/// Parameters of the synthetic problem generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Seen classes.
    pub k: usize,
    /// Unseen classes.
    pub l: usize,
    /// Attributes.
    pub m: usize,
    /// Feature dimension.
    pub d: usize,
    pub samples_per_class: usize,
    pub noise_sigma: f64,
    /// Probability that a signature entry is 1.
    pub signature_sparsity: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            k: 8,
            l: 4,
            m: 16,
            d: 32,
            samples_per_class: 50,
            noise_sigma: 0.3,
            signature_sparsity: 0.4,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleConfig(m));
        if self.k < 2 || self.l < 2 {
            return bad(format!("need K >= 2 and L >= 2, got {} and {}", self.k, self.l));
        }
        if self.m == 0 || self.d < self.m {
            return bad(format!("need 1 <= M <= d, got M={} d={}", self.m, self.d));
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be positive".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} is not >= 0", self.noise_sigma));
        }
        if !(self.signature_sparsity > 0.0 && self.signature_sparsity < 1.0) {
            return bad(format!(
                "signature_sparsity {} is outside (0, 1)",
                self.signature_sparsity
            ));
        }
        Ok(())
    }
}

/// Output of [`generate_synthetic`]: the data plus the ground-truth
/// projection used to produce features.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub data: DataBundle,
    /// `M x d` projection from signatures to features.
    pub projection: Array2<f64>,
}

const MAX_SIGNATURE_DRAWS: usize = 1000;

// independent ChaCha streams per purpose
const STREAM_SIGNATURES: u64 = 1;
const STREAM_PROJECTION: u64 = 2;
const STREAM_NOISE: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn class_name(j: usize) -> String {
    format!("class_{j:02}")
}

/// Generates a seeded synthetic problem. Class signatures are distinct binary
/// vectors; features are `signature . P + noise`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticProblem> {
    cfg.validate()?;
    let n_classes = cfg.k + cfg.l;

    let mut rng = stream(cfg.seed, STREAM_SIGNATURES);
    let mut signatures: Vec<Vec<u8>> = Vec::with_capacity(n_classes);
    let mut draws = 0;
    while signatures.len() < n_classes {
        if draws == MAX_SIGNATURE_DRAWS {
            return Err(Error::InfeasibleConfig(format!(
                "could not draw {n_classes} distinct non-zero signatures of length {} in {MAX_SIGNATURE_DRAWS} attempts",
                cfg.m
            )));
        }
        draws += 1;
        let sig: Vec<u8> = (0..cfg.m)
            .map(|_| u8::from(rng.random_bool(cfg.signature_sparsity)))
            .collect();
        if sig.iter().all(|&b| b == 0) || signatures.contains(&sig) {
            continue;
        }
        signatures.push(sig);
    }

    let mut rng = stream(cfg.seed, STREAM_PROJECTION);
    let projection = Array2::from_shape_simple_fn((cfg.m, cfg.d), || {
        StandardNormal.sample(&mut rng)
    });

    let mut rng = stream(cfg.seed, STREAM_NOISE);
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated");
    let n = n_classes * cfg.samples_per_class;
    let mut features = Array2::zeros((n, cfg.d));
    let mut labels = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    let (mut train, mut test_seen, mut test_unseen) = (Vec::new(), Vec::new(), Vec::new());
    let n_train = (cfg.samples_per_class * 4).div_ceil(5);
    for (j, sig) in signatures.iter().enumerate() {
        let sig = ndarray::Array1::from_iter(sig.iter().map(|&b| f64::from(b)));
        let center = sig.dot(&projection);
        for s in 0..cfg.samples_per_class {
            let row = j * cfg.samples_per_class + s;
            let mut out = features.row_mut(row);
            for (o, c) in out.iter_mut().zip(&center) {
                *o = c + noise.sample(&mut rng);
            }
            let id = format!("s{j:02}_{s:04}");
            labels.push(class_name(j));
            if j >= cfg.k {
                test_unseen.push(id.clone());
            } else if s < n_train {
                train.push(id.clone());
            } else {
                test_seen.push(id.clone());
            }
            ids.push(id);
        }
    }

    let attr_values = Array2::from_shape_fn((cfg.m, n_classes), |(i, j)| {
        f64::from(signatures[j][i])
    });
    let attributes = AttributeMatrix::new(
        attr_values,
        (0..cfg.m).map(|i| format!("attr_{i:02}")).collect(),
        (0..n_classes).map(class_name).collect(),
    )?;
    let split = SplitSpec::new(
        (0..cfg.k).map(class_name).collect(),
        (cfg.k..n_classes).map(class_name).collect(),
        train,
        test_seen,
        test_unseen,
    )?;
    let dataset = Dataset::new(features, labels, ids)?;
    Ok(SyntheticProblem {
        data: DataBundle::new(dataset, split, attributes)?,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes(bundle: &DataBundle) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let mut f = Vec::new();
        let mut s = Vec::new();
        let mut a = Vec::new();
        bundle.dataset.to_writer(&mut f).unwrap();
        bundle.split.to_writer(&mut s).unwrap();
        bundle.attributes.to_writer(&mut a).unwrap();
        (f, s, a)
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(bytes(&a.data), bytes(&b.data));
        let c = generate_synthetic(&SynthConfig::with_seed(7)).unwrap();
        assert_ne!(bytes(&a.data).0, bytes(&c.data).0);
    }

    #[test]
    fn zero_noise_gives_identical_class_features() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let p = generate_synthetic(&cfg).unwrap();
        let ds = &p.data.dataset;
        for j in 0..cfg.k + cfg.l {
            let first = ds.features().row(j * cfg.samples_per_class);
            for s in 1..cfg.samples_per_class {
                assert_eq!(ds.features().row(j * cfg.samples_per_class + s), first);
            }
        }
    }

    #[test]
    fn pools_partition_samples() {
        let p = generate_synthetic(&SynthConfig::default()).unwrap();
        let split = &p.data.split;
        let total = split.train().len() + split.test_seen().len() + split.test_unseen().len();
        assert_eq!(total, p.data.dataset.n_samples());
        assert_eq!(split.train().len(), 8 * 40);
        assert_eq!(split.test_seen().len(), 8 * 10);
        assert_eq!(split.test_unseen().len(), 4 * 50);
        let seen: HashSet<_> = split.seen_classes().iter().collect();
        assert!(split.unseen_classes().iter().all(|c| !seen.contains(c)));
    }

    #[test]
    fn signatures_are_distinct_and_non_zero() {
        let p = generate_synthetic(&SynthConfig::default()).unwrap();
        let a = p.data.attributes.values();
        let cols: Vec<Vec<u64>> = a
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|v| *v as u64).collect())
            .collect();
        for (i, c) in cols.iter().enumerate() {
            assert!(c.iter().any(|&v| v == 1));
            assert!(cols[..i].iter().all(|o| o != c));
        }
    }

    #[test]
    fn infeasible_config_detected() {
        // two attributes admit only three non-zero signatures
        let cfg = SynthConfig {
            k: 2,
            l: 2,
            m: 2,
            d: 2,
            ..SynthConfig::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InfeasibleConfig(_))));
        let cfg = SynthConfig {
            // 3 attributes admit 7 signatures, 12 are needed
            m: 3,
            ..SynthConfig::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InfeasibleConfig(_))));
    }

    const TOY_FEATURES: &str = "sample_id,label,f1,f2\n\
        a1,cat,1,0\na2,cat,0.9,0.1\nb1,dog,0,1\nb2,dog,0.1,0.8\nc1,cow,1,1\n";
    const TOY_ATTRS: &str = "attribute,cat,dog,cow\nstriped,1,0,1\nfurry,0,1,1\n";
    const TOY_SPLITS: &str = "sample_id,partition\nclass,cat,seen\nclass,dog,seen\n\
        class,cow,unseen\na1,train\nb1,train\na2,test_seen\nb2,test_seen\nc1,test_unseen\n";

    fn toy(splits: &str) -> Result<DataBundle> {
        DataBundle::new(
            Dataset::from_reader(TOY_FEATURES.as_bytes(), "features")?,
            SplitSpec::from_reader(splits.as_bytes(), "splits")?,
            AttributeMatrix::from_reader(TOY_ATTRS.as_bytes(), "attributes")?,
        )
    }

    #[test]
    fn toy_fixture_loads() {
        let b = toy(TOY_SPLITS).unwrap();
        assert_eq!(b.split.seen_classes().len(), 2);
        assert_eq!(b.split.unseen_classes().len(), 1);
        assert_eq!(b.dataset.dim(), 2);
    }

    #[test]
    fn unknown_class_in_splits() {
        let splits = TOY_SPLITS.replace("class,cow,unseen", "class,cow,unseen\nclass,emu,unseen");
        assert!(matches!(toy(&splits), Err(Error::UnknownClass(c)) if c == "emu"));
    }

    #[test]
    fn split_overlap_detected() {
        let splits = format!("{TOY_SPLITS}a1,test_unseen\n");
        assert!(matches!(toy(&splits), Err(Error::SplitOverlap(id)) if id == "a1"));
    }

    #[test]
    fn duplicate_sample_id_detected() {
        let f = format!("{TOY_FEATURES}a1,cat,0,0\n");
        assert!(matches!(
            Dataset::from_reader(f.as_bytes(), "f"),
            Err(Error::DuplicateSampleId(id)) if id == "a1"
        ));
    }

    #[test]
    fn train_sample_of_unseen_class_rejected() {
        let splits = TOY_SPLITS.replace("c1,test_unseen", "c1,train");
        assert!(matches!(toy(&splits), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn parse_error_has_line() {
        let f = "sample_id,label,f1\na,cat,x\n";
        match Dataset::from_reader(f.as_bytes(), "f.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
