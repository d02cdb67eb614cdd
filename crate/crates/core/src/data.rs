//! Dataset ingestion, binary simplification, min-max scaling and stratified
//! splitting.
//!
//! The canonical Iris (150 × 4, 3 classes) and Wine (178 × 13, 3 classes)
//! tables are compiled in from `data/*.csv`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::Sample;
use crate::error::{Error, Result};

const IRIS_CSV: &str = include_str!("../data/iris.csv");
const WINE_CSV: &str = include_str!("../data/wine.csv");

/// Default train share of the stratified split.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Default feature range for the angle embedding.
pub const EMBEDDING_RANGE: (f64, f64) = (0.0, std::f64::consts::PI);

/// Labelled feature matrix, rows stored contiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    class_count: usize,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking shapes and that every class occurs.
    pub fn new(
        name: impl Into<String>,
        n_features: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        let ds = Self {
            name: name.into(),
            n_features,
            features,
            labels,
            class_count,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.features.len() != self.labels.len() * self.n_features {
            return Err(Error::Schema(format!(
                "{} feature values for {} rows of width {}",
                self.features.len(),
                self.labels.len(),
                self.n_features
            )));
        }
        if let Some(v) = self.features.iter().find(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("non-finite feature value {v}")));
        }
        let counts = self.class_counts();
        if let Some(l) = self.labels.iter().find(|&&l| l >= self.class_count) {
            return Err(Error::Schema(format!("label {l} with {} classes", self.class_count)));
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Schema(format!("class {c} has no rows")));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| (self.row(i), self.labels[i]))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            if l < self.class_count {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Rows at `indices`, in that order. Classes may end up empty.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            name: name.into(),
            n_features: self.n_features,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            class_names: self.class_names.clone(),
        }
    }

    pub fn iris() -> Self {
        load_str(IRIS_CSV, "iris", &CsvSchema::default()).expect("bundled iris.csv parses")
    }

    pub fn wine() -> Self {
        load_str(WINE_CSV, "wine", &CsvSchema::default()).expect("bundled wine.csv parses")
    }
}

/// The four bundled dataset variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinDataset {
    Iris,
    /// Iris without its third class.
    Iris2,
    Wine,
    /// Wine without its third class.
    Wine2,
}

impl BuiltinDataset {
    pub const ALL: [BuiltinDataset; 4] = [Self::Iris, Self::Iris2, Self::Wine, Self::Wine2];

    pub fn name(self) -> &'static str {
        match self {
            Self::Iris => "iris",
            Self::Iris2 => "iris2",
            Self::Wine => "wine",
            Self::Wine2 => "wine2",
        }
    }

    pub fn load(self) -> Dataset {
        let simplified = |d: Dataset| simplify(&d).expect("three-class source");
        match self {
            Self::Iris => Dataset::iris(),
            Self::Iris2 => simplified(Dataset::iris()),
            Self::Wine => Dataset::wine(),
            Self::Wine2 => simplified(Dataset::wine()),
        }
    }
}

impl fmt::Display for BuiltinDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown dataset `{s}` (expected iris, iris2, wine or wine2)")))
    }
}

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelColumn {
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            delimiter: b',',
            has_header: true,
        }
    }
}

/// Reads a CSV of numeric features plus one label column. Labels are mapped
/// to `0..c` in ascending order (numeric if every label parses as a number,
/// lexicographic otherwise).
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    load_from(&text, &name, schema, path)
}

/// As [`load_csv`], from in-memory text.
pub fn load_str(text: &str, name: &str, schema: &CsvSchema) -> Result<Dataset> {
    load_from(text, name, schema, Path::new(name))
}

fn load_from(text: &str, name: &str, schema: &CsvSchema, path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Option<Vec<String>> = if schema.has_header {
        let h = reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?;
        Some(h.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut width: Option<usize> = header.as_ref().map(Vec::len).filter(|&w| w > 0);
    let mut label_idx: Option<usize> = None;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Schema(format!(
                "{}:{line}: {} columns, expected {w}",
                path.display(),
                record.len()
            )));
        }
        let li = match label_idx {
            Some(li) => li,
            None => {
                let li = resolve_label_column(&schema.label_column, header.as_deref(), w)?;
                label_idx = Some(li);
                li
            }
        };
        for (j, field) in record.iter().enumerate() {
            if j == li {
                raw_labels.push(field.to_owned());
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("column {j}: `{field}` is not a number")))?;
                features.push(v);
            }
        }
    }

    let width = match (width, label_idx) {
        (Some(w), Some(_)) if !raw_labels.is_empty() => w,
        _ => return Err(Error::Schema(format!("{}: no data rows", path.display()))),
    };
    if width < 2 {
        return Err(Error::Schema(format!("{}: need features and a label column", path.display())));
    }

    let numeric: Option<Vec<f64>> = raw_labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    let mut class_names: Vec<String> = raw_labels.clone();
    match &numeric {
        Some(_) => class_names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap())),
        None => class_names.sort(),
    }
    class_names.dedup();
    let index: BTreeMap<&str, usize> = class_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels = raw_labels.iter().map(|l| index[l.as_str()]).collect();

    let mut ds = Dataset::new(name, width - 1, features, labels, class_names.len())?;
    ds.class_names = class_names;
    Ok(ds)
}

fn resolve_label_column(col: &LabelColumn, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match col {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => header
            .ok_or_else(|| Error::Schema(format!("label column `{name}` named but the file has no header")))?
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))?,
    };
    if idx >= width {
        return Err(Error::Schema(format!("label column {idx} with {width} columns")));
    }
    Ok(idx)
}

fn parse_error(path: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

/// Binary variant: drops every row outside the first two classes.
pub fn simplify(dataset: &Dataset) -> Result<Dataset> {
    if dataset.class_count < 3 {
        return Err(Error::Contract(format!(
            "`{}` has {} classes; simplification needs at least 3",
            dataset.name, dataset.class_count
        )));
    }
    let keep: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] < 2).collect();
    let mut out = dataset.subset(&keep, format!("{}2", dataset.name));
    out.class_count = 2;
    out.class_names.truncate(2);
    Ok(out)
}

/// Per-column min-max statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    lo: f64,
    hi: f64,
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset, range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = range;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Contract(format!("scaling range [{lo}, {hi}]")));
        }
        if data.is_empty() {
            return Err(Error::Contract("fitting a scaler on no rows".into()));
        }
        let mut mins = vec![f64::INFINITY; data.n_features];
        let mut maxs = vec![f64::NEG_INFINITY; data.n_features];
        for (x, _) in data.samples() {
            for j in 0..x.len() {
                mins[j] = mins[j].min(x[j]);
                maxs[j] = maxs[j].max(x[j]);
            }
        }
        for j in 0..data.n_features {
            if mins[j] == maxs[j] {
                log::warn!("{}: column {j} is constant, mapping it to the range midpoint", data.name);
            }
        }
        Ok(Self { lo, hi, mins, maxs })
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features != self.mins.len() {
            return Err(Error::Contract(format!(
                "scaler fitted on {} columns, data has {}",
                self.mins.len(),
                data.n_features
            )));
        }
        let mut out = data.clone();
        let width = self.hi - self.lo;
        for row in out.features.chunks_exact_mut(data.n_features) {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.maxs[j] - self.mins[j];
                *v = if span == 0.0 {
                    0.5 * (self.lo + self.hi)
                } else {
                    self.lo + width * ((*v - self.mins[j]) / span)
                };
            }
        }
        Ok(out)
    }
}

/// Min-max scales every column of `dataset` into `range` using its own statistics.
pub fn scale_features(dataset: &Dataset, range: (f64, f64)) -> Result<Dataset> {
    MinMaxScaler::fit(dataset, range)?.transform(dataset)
}

/// Disjoint train/validation row indices, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub seed: u64,
}

/// Stratified seeded split; each class contributes `round(fraction · n_c)`
/// rows to training, clamped so both sides get at least one.
pub fn split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Contract(format!("train fraction {fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in 0..dataset.class_count {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} of `{}` has {} rows, need 2",
                dataset.name,
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        validation.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split { train, validation, seed })
}

/// Scaled train and validation sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: Dataset,
    pub validation: Dataset,
}

impl PreparedData {
    /// Splits, then min-max scales both sides with training-row statistics.
    pub fn new(dataset: &Dataset, fraction: f64, seed: u64, range: (f64, f64)) -> Result<Self> {
        let s = split(dataset, fraction, seed)?;
        let train = dataset.subset(&s.train, format!("{}/train", dataset.name));
        let validation = dataset.subset(&s.validation, format!("{}/validation", dataset.name));
        let scaler = MinMaxScaler::fit(&train, range)?;
        Ok(Self {
            train: scaler.transform(&train)?,
            validation: scaler.transform(&validation)?,
        })
    }

    /// Default split fraction and embedding range.
    pub fn standard(dataset: &Dataset, seed: u64) -> Result<Self> {
        Self::new(dataset, DEFAULT_TRAIN_FRACTION, seed, EMBEDDING_RANGE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn canonical_shapes() {
        let iris = Dataset::iris();
        assert_eq!((iris.len(), iris.n_features(), iris.class_count()), (150, 4, 3));
        assert_eq!(iris.class_counts(), [50, 50, 50]);
        assert_eq!(iris.class_names(), ["setosa", "versicolor", "virginica"]);
        let wine = Dataset::wine();
        assert_eq!((wine.len(), wine.n_features(), wine.class_count()), (178, 13, 3));
        assert_eq!(wine.class_counts(), [59, 71, 48]);
    }

    #[test]
    fn simplify_cases() {
        let iris2 = simplify(&Dataset::iris()).unwrap();
        assert_eq!((iris2.len(), iris2.class_count()), (100, 2));
        let wine2 = simplify(&Dataset::wine()).unwrap();
        assert_eq!((wine2.len(), wine2.class_count()), (130, 2));
        assert!(matches!(simplify(&iris2), Err(Error::Contract(_))));
    }

    #[test]
    fn simplify_keeps_row_order() {
        let wine = Dataset::wine();
        let wine2 = simplify(&wine).unwrap();
        let kept: Vec<&[f64]> = wine.samples().filter(|(_, l)| *l < 2).map(|(x, _)| x).collect();
        let got: Vec<&[f64]> = wine2.samples().map(|(x, _)| x).collect();
        assert_eq!(kept, got);
    }

    #[test]
    fn scaling_cases() {
        let ds = Dataset::new("t", 2, vec![0.0, 3.0, 5.0, 3.0, 10.0, 3.0], vec![0, 1, 1], 2).unwrap();
        let scaled = scale_features(&ds, (0.0, PI)).unwrap();
        assert_eq!(scaled.row(0)[0], 0.0);
        assert!((scaled.row(1)[0] - PI / 2.0).abs() < 1e-15);
        assert!((scaled.row(2)[0] - PI).abs() < 1e-15);
        for i in 0..3 {
            assert!((scaled.row(i)[1] - PI / 2.0).abs() < 1e-15);
        }

        let unit = Dataset::new("u", 1, vec![0.0, 0.25, 1.0], vec![0, 1, 0], 2).unwrap();
        assert_eq!(scale_features(&unit, (0.0, 1.0)).unwrap(), unit);
        assert!(scale_features(&unit, (1.0, 1.0)).is_err());
    }

    #[test]
    fn split_cases() {
        let iris = Dataset::iris();
        let s = split(&iris, 0.8, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (120, 30));
        let train = iris.subset(&s.train, "t");
        assert_eq!(train.class_counts(), [40, 40, 40]);
        assert_eq!(split(&iris, 0.8, 7).unwrap(), s);
        assert_ne!(split(&iris, 0.8, 8).unwrap(), s);

        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());

        let toy = Dataset::new("toy", 1, vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1, 1], 2).unwrap();
        let s = split(&toy, 0.5, 0).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (2, 2));
        assert_eq!(toy.subset(&s.train, "t").class_counts(), [1, 1]);

        let lonely = Dataset::new("l", 1, vec![0.0, 1.0, 2.0], vec![0, 0, 1], 2).unwrap();
        assert!(matches!(split(&lonely, 0.5, 0), Err(Error::Stratification(_))));
        assert!(split(&toy, 1.0, 0).is_err());
    }

    #[test]
    fn validation_rows_do_not_move_scaling() {
        let wine = Dataset::wine();
        let base = PreparedData::standard(&wine, 3).unwrap();
        let s = split(&wine, DEFAULT_TRAIN_FRACTION, 3).unwrap();
        // blow up one validation row; the training side must be unchanged
        let mut tampered = wine.clone();
        let v = s.validation[0];
        for j in 0..tampered.n_features {
            tampered.features[v * tampered.n_features + j] = 1e6;
        }
        let other = PreparedData::standard(&tampered, 3).unwrap();
        assert_eq!(base.train, other.train);
        for (x, _) in base.train.samples() {
            assert!(x.iter().all(|&v| (0.0..=PI).contains(&v)));
        }
    }

    #[test]
    fn csv_errors() {
        let schema = CsvSchema::default();
        assert!(matches!(load_str("", "e", &schema), Err(Error::Schema(_))));
        assert!(matches!(load_str("a,b\n", "e", &schema), Err(Error::Schema(_))));
        let bad = "a,b,c\n1,2,x\n1,oops,y\n";
        match load_str(bad, "bad", &schema) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let ragged = "a,b,c\n1,2,x\n1,2\n";
        assert!(matches!(load_str(ragged, "r", &schema), Err(Error::Schema(_))));
    }

    #[test]
    fn csv_schema_options() {
        let text = "7;0.5;1.5\n3;0.1;2.5\n7;0.2;0.5\n";
        let schema = CsvSchema {
            label_column: LabelColumn::Index(0),
            delimiter: b';',
            has_header: false,
        };
        let ds = load_str(text, "semi", &schema).unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), [1, 0, 1]);
        assert_eq!(ds.row(1), [0.1, 2.5]);

        let named = "f1,kind,f2\n1,b,2\n3,a,4\n";
        let schema = CsvSchema {
            label_column: LabelColumn::Name("kind".into()),
            ..CsvSchema::default()
        };
        let ds = load_str(named, "n", &schema).unwrap();
        assert_eq!(ds.labels(), [1, 0]);
        assert_eq!(ds.row(0), [1.0, 2.0]);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let text = "x,y\n1,10\n2,9\n3,10\n";
        let ds = load_str(text, "n", &CsvSchema::default()).unwrap();
        assert_eq!(ds.class_names(), ["9", "10"]);
        assert_eq!(ds.labels(), [1, 0, 1]);
    }

    #[test]
    fn load_from_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("iris.csv");
        std::fs::write(&p, IRIS_CSV).unwrap();
        let ds = load_csv(&p, &CsvSchema::default()).unwrap();
        assert_eq!(ds, Dataset::iris());
    }

    #[test]
    fn builtins_roundtrip_through_json() {
        for id in BuiltinDataset::ALL {
            let ds = id.load();
            let json = serde_json::to_string(&ds).unwrap();
            let back: Dataset = serde_json::from_str(&json).unwrap();
            assert_eq!(back, ds, "{id}");
        }
        assert!("iris3".parse::<BuiltinDataset>().is_err());
    }
}
