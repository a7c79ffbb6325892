//! Tabular ingestion and binarization.
//!
//! A [`RawDataset`] is a typed CSV table. Numeric columns can be quantized
//! into equal-width intervals with a [`Quantizer`], and a fitted
//! [`OneHotEncoder`] maps every column to binary features, yielding a
//! [`BinDataset`]. Fitting and application are separate so that
//! cross-validation can fit interval boundaries on the training rows only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("empty file: no header row")]
    Empty,
    #[error("no data rows after the header")]
    NoRows,
    #[error("row {row} has {found} cells but the header has {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown class column `{0}`")]
    UnknownClassColumn(String),
    #[error("NaN value in column `{column}` at row {row}")]
    NotANumber { column: String, row: usize },
    #[error("quantization needs at least 2 intervals, got {0}")]
    BadIntervals(usize),
    #[error("single-class dataset: column `{0}` has only one distinct value")]
    SingleClass(String),
    #[error("class value `{value}` at row {row} was not seen when the encoder was fitted")]
    UnseenClass { value: String, row: usize },
    #[error("column layout differs from the one the transform was fitted on")]
    LayoutMismatch,
    #[error("{folds} folds requested for {rows} instances (need 2 <= k <= M)")]
    BadFoldCount { folds: usize, rows: usize },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Selects the class column either by header name or by 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for ClassColumn {
    type Err = std::convert::Infallible;

    /// `last`, digits select by index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "last" {
            return Ok(ClassColumn::Last);
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ClassColumn::Index(i),
            Err(_) => ClassColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }
}

/// A typed table before binarization. The class column is always categorical.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub column_names: Vec<String>,
    pub columns: Vec<Column>,
    pub class_column: usize,
}

impl RawDataset {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn class_name(&self) -> &str {
        &self.column_names[self.class_column]
    }

    /// Restricts the table to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> RawDataset {
        RawDataset {
            column_names: self.column_names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            class_column: self.class_column,
        }
    }
}

/// Reads a CSV file with a header row. Cells are trimmed; a column is
/// numeric when every one of its cells parses as a number.
pub fn load_csv(path: impl AsRef<Path>, class_column: &ClassColumn) -> Result<RawDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text, class_column)
}

pub fn parse_csv(text: &str, class_column: &ClassColumn) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(DatasetError::Empty),
        Some(r) => r.map_err(csv_error)?,
    };
    let column_names: Vec<String> = header.iter().map(str::to_string).collect();
    if column_names.is_empty() || (column_names.len() == 1 && column_names[0].is_empty()) {
        return Err(DatasetError::Empty);
    }
    let width = column_names.len();

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    for (row, record) in records.enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != width {
            return Err(DatasetError::Ragged {
                row: row + 1,
                expected: width,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            cells[col].push(cell.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(DatasetError::NoRows);
    }

    let class_index = match class_column {
        ClassColumn::Last => width - 1,
        ClassColumn::Index(i) if *i < width => *i,
        ClassColumn::Index(i) => return Err(DatasetError::UnknownClassColumn(i.to_string())),
        ClassColumn::Name(name) => column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DatasetError::UnknownClassColumn(name.clone()))?,
    };

    let columns = cells
        .into_iter()
        .enumerate()
        .map(|(col, values)| {
            if col == class_index {
                return Column::Categorical(values);
            }
            let parsed: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
            match parsed {
                Some(nums) => Column::Numeric(nums),
                None => Column::Categorical(values),
            }
        })
        .collect();

    Ok(RawDataset {
        column_names,
        columns,
        class_column: class_index,
    })
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line());
    DatasetError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Equal-width interval boundaries per numeric column.
///
/// Bins are right-closed: with inner edges `e_1 < .. < e_{k-1}` a value `x`
/// lands in the bin counting the edges strictly below it, so values outside
/// the fitted range clamp to the first or last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    /// `None` for categorical columns, `Some(edges)` for numeric ones.
    /// A constant column has no edges and maps to a single category.
    edges: Vec<Option<Vec<f64>>>,
}

impl Quantizer {
    pub fn fit(raw: &RawDataset, intervals: usize) -> Result<Quantizer> {
        if intervals < 2 {
            return Err(DatasetError::BadIntervals(intervals));
        }
        let mut edges = Vec::with_capacity(raw.columns.len());
        for (name, column) in raw.column_names.iter().zip(&raw.columns) {
            match column {
                Column::Categorical(_) => edges.push(None),
                Column::Numeric(values) => {
                    check_finite(name, values)?;
                    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if lo == hi {
                        edges.push(Some(Vec::new()));
                    } else {
                        let width = (hi - lo) / intervals as f64;
                        edges.push(Some((1..intervals).map(|i| lo + width * i as f64).collect()));
                    }
                }
            }
        }
        Ok(Quantizer { edges })
    }

    pub fn apply(&self, raw: &RawDataset) -> Result<RawDataset> {
        if raw.columns.len() != self.edges.len() {
            return Err(DatasetError::LayoutMismatch);
        }
        let mut columns = Vec::with_capacity(raw.columns.len());
        for ((name, column), edges) in raw.column_names.iter().zip(&raw.columns).zip(&self.edges) {
            match (column, edges) {
                (Column::Numeric(values), Some(edges)) => {
                    check_finite(name, values)?;
                    let labels = values.iter().map(|&x| bin_label(edges, x)).collect();
                    columns.push(Column::Categorical(labels));
                }
                (Column::Categorical(_), None) => columns.push(column.clone()),
                _ => return Err(DatasetError::LayoutMismatch),
            }
        }
        Ok(RawDataset {
            column_names: raw.column_names.clone(),
            columns,
            class_column: raw.class_column,
        })
    }

    /// Index of the bin `x` falls into.
    pub fn bin_of(edges: &[f64], x: f64) -> usize {
        edges.iter().filter(|&&e| e < x).count()
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| v.is_nan()) {
        Some(row) => Err(DatasetError::NotANumber {
            column: name.to_string(),
            row: row + 1,
        }),
        None => Ok(()),
    }
}

fn bin_label(edges: &[f64], x: f64) -> String {
    let bin = Quantizer::bin_of(edges, x);
    if edges.is_empty() {
        "all".to_string()
    } else if bin == 0 {
        format!("<={}", fmt_num(edges[0]))
    } else if bin == edges.len() {
        format!(">{}", fmt_num(edges[bin - 1]))
    } else {
        format!("({},{}]", fmt_num(edges[bin - 1]), fmt_num(edges[bin]))
    }
}

fn fmt_num(x: f64) -> String {
    let rounded = (x * 1e4).round() / 1e4;
    format!("{rounded}")
}

/// Equal-width quantization of every numeric column into `intervals` bins.
pub fn quantize(raw: &RawDataset, intervals: usize) -> Result<RawDataset> {
    Quantizer::fit(raw, intervals)?.apply(raw)
}

/// One training instance: the feature bits and the class id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    pub features: Vec<bool>,
    pub class_id: usize,
}

/// A fully binarized dataset with `class_count >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDataset {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Header of the class column.
    pub target: String,
    pub instances: Vec<Instance>,
}

impl BinDataset {
    /// Builds a dataset from raw bit rows, checking shape invariants.
    pub fn new(
        feature_names: Vec<String>,
        class_names: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<BinDataset> {
        if class_names.len() < 2 {
            return Err(DatasetError::SingleClass(
                class_names.first().cloned().unwrap_or_default(),
            ));
        }
        let k = feature_names.len();
        if instances
            .iter()
            .any(|inst| inst.features.len() != k || inst.class_id >= class_names.len())
        {
            return Err(DatasetError::LayoutMismatch);
        }
        Ok(BinDataset {
            feature_names,
            class_names,
            target: "class".to_string(),
            instances,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for inst in &self.instances {
            counts[inst.class_id] += 1;
        }
        counts
    }

    /// The same dataset restricted to the given instance indices.
    pub fn subset(&self, rows: &[usize]) -> BinDataset {
        BinDataset {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            target: self.target.clone(),
            instances: rows.iter().map(|&r| self.instances[r].clone()).collect(),
        }
    }

    pub fn majority_class(&self) -> usize {
        let counts = self.class_counts();
        (0..counts.len())
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnEncoding {
    /// One feature, set when the value equals `positive`.
    Single { positive: String, name: String },
    /// One feature per level.
    Levels(Vec<String>),
}

/// Category levels fitted per column.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotEncoder {
    column_names: Vec<String>,
    class_column: usize,
    encodings: Vec<Option<ColumnEncoding>>,
    class_names: Vec<String>,
}

fn column_levels(column: &Column) -> Vec<String> {
    match column {
        Column::Categorical(values) => {
            let set: BTreeSet<&String> = values.iter().collect();
            set.into_iter().cloned().collect()
        }
        Column::Numeric(values) => {
            let mut distinct: Vec<f64> = values.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            distinct.into_iter().map(fmt_num).collect()
        }
    }
}

fn cell_text(column: &Column, row: usize) -> String {
    match column {
        Column::Categorical(v) => v[row].clone(),
        Column::Numeric(v) => fmt_num(v[row]),
    }
}

impl OneHotEncoder {
    /// Numeric columns that were not quantized are treated as categorical,
    /// with one level per distinct value.
    pub fn fit(raw: &RawDataset) -> Result<OneHotEncoder> {
        let class_names = column_levels(&raw.columns[raw.class_column]);
        if class_names.len() < 2 {
            return Err(DatasetError::SingleClass(raw.class_name().to_string()));
        }
        let encodings = raw
            .columns
            .iter()
            .enumerate()
            .map(|(col, column)| {
                if col == raw.class_column {
                    return None;
                }
                let name = &raw.column_names[col];
                let levels = column_levels(column);
                match levels.len() {
                    0 | 1 => Some(ColumnEncoding::Levels(Vec::new())),
                    2 => {
                        let positive = levels[1].clone();
                        let name = if levels[0] == "0" && levels[1] == "1" {
                            name.clone()
                        } else {
                            format!("{name}={positive}")
                        };
                        Some(ColumnEncoding::Single { positive, name })
                    }
                    _ => Some(ColumnEncoding::Levels(levels)),
                }
            })
            .collect();
        Ok(OneHotEncoder {
            column_names: raw.column_names.clone(),
            class_column: raw.class_column,
            encodings,
            class_names,
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (col, enc) in self.encodings.iter().enumerate() {
            match enc {
                None => {}
                Some(ColumnEncoding::Single { name, .. }) => names.push(name.clone()),
                Some(ColumnEncoding::Levels(levels)) => {
                    for level in levels {
                        names.push(format!("{}={}", self.column_names[col], level));
                    }
                }
            }
        }
        names
    }

    /// Categories unseen at fit time map to all-zero bits; unseen class
    /// values are an error.
    pub fn transform(&self, raw: &RawDataset) -> Result<BinDataset> {
        if raw.column_names != self.column_names || raw.class_column != self.class_column {
            return Err(DatasetError::LayoutMismatch);
        }
        let class_index: HashMap<&str, usize> = self
            .class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut instances = Vec::with_capacity(raw.rows());
        for row in 0..raw.rows() {
            let value = cell_text(&raw.columns[raw.class_column], row);
            let class_id = *class_index
                .get(value.as_str())
                .ok_or(DatasetError::UnseenClass { value: value.clone(), row: row + 1 })?;
            let mut features = Vec::new();
            for (col, enc) in self.encodings.iter().enumerate() {
                let cell = || cell_text(&raw.columns[col], row);
                match enc {
                    None => {}
                    Some(ColumnEncoding::Single { positive, .. }) => features.push(cell() == *positive),
                    Some(ColumnEncoding::Levels(levels)) => {
                        let cell = cell();
                        features.extend(levels.iter().map(|l| *l == cell));
                    }
                }
            }
            instances.push(Instance { features, class_id });
        }
        Ok(BinDataset {
            feature_names: self.feature_names(),
            class_names: self.class_names.clone(),
            target: self.column_names[self.class_column].clone(),
            instances,
        })
    }
}

/// One-hot encodes every non-class column. Two-level columns collapse to a
/// single feature; columns with `d >= 3` levels become `d` features.
pub fn one_hot(raw: &RawDataset) -> Result<BinDataset> {
    OneHotEncoder::fit(raw)?.transform(raw)
}

/// Assignment of instances to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldSplit {
    /// `(train, test)` instance indices for fold `fold`.
    pub fn fold(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments.len()).partition(|&i| self.assignments[i] == fold);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by round-robin assignment.
pub fn kfold_split(rows: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || k > rows {
        return Err(DatasetError::BadFoldCount { folds: k, rows });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; rows];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldSplit { k, seed, assignments })
}

/// Groups of instances sharing a feature vector but carrying at least two
/// distinct classes. No perfect list exists while any group is present.
pub fn check_consistency(ds: &BinDataset) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<&[bool], Vec<usize>> = BTreeMap::new();
    for (i, inst) in ds.instances.iter().enumerate() {
        groups.entry(inst.features.as_slice()).or_default().push(i);
    }
    let mut conflicts: Vec<Vec<usize>> = groups
        .into_values()
        .filter(|g| {
            let first = ds.instances[g[0]].class_id;
            g.iter().any(|&i| ds.instances[i].class_id != first)
        })
        .collect();
    conflicts.sort();
    conflicts
}
