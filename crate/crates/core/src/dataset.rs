//! Schema-typed tabular data with partial outlier labels.
//!
//! A [`Dataset`] is the universe scored by the detector. Every attribute is
//! either nominal (dense category codes) or numeric (raw values plus their
//! min-max normalization over the whole universe). Labels only mark known
//! outliers; everything else is unlabeled.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CodError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Nominal,
    Numeric,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: AttributeKind,
}

/// Declared layout of an input CSV. The label column, when present, must also
/// appear in `columns`; its declared kind is ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub label_column: Option<String>,
}

impl DatasetSchema {
    pub fn new(columns: Vec<ColumnSpec>, label_column: Option<String>) -> Result<Self> {
        let schema = Self {
            columns,
            label_column,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CodError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(CodError::InvalidSchema(format!(
                    "duplicate column name `{}`",
                    col.name
                )));
            }
        }
        if let Some(label) = &self.label_column {
            if !seen.contains(label.as_str()) {
                return Err(CodError::InvalidSchema(format!(
                    "label column `{label}` is not a declared column"
                )));
            }
        }
        Ok(())
    }

    fn is_label(&self, name: &str) -> bool {
        self.label_column.as_deref() == Some(name)
    }
}

/// Options for [`load_csv_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Replace empty numeric cells with the column mean and give empty
    /// nominal cells their own category. Off by default: empty cells error.
    pub impute_missing: bool,
}

/// Min-max normalization into `[0, 1]`. A constant column maps to all zeros.
pub fn normalize_minmax(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl NumericColumn {
    pub fn new(raw: Vec<f64>) -> Self {
        let normalized = normalize_minmax(&raw);
        Self { raw, normalized }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Values in `[0, 1]`; these are the `f` values every relation uses.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }
}

/// Categories are coded densely in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NominalColumn {
    codes: Vec<u32>,
    categories: Vec<String>,
}

impl NominalColumn {
    pub fn from_strings<S: AsRef<str>>(values: &[S]) -> Self {
        let mut index: HashMap<&str, u32> = HashMap::new();
        let mut categories = Vec::new();
        let codes = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                *index.entry(v).or_insert_with(|| {
                    categories.push(v.to_string());
                    (categories.len() - 1) as u32
                })
            })
            .collect();
        Self { codes, categories }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn value(&self, i: usize) -> &str {
        &self.categories[self.codes[i] as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(NumericColumn),
    Nominal(NominalColumn),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(c) => c.raw.len(),
            Column::Nominal(c) => c.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            Column::Numeric(_) => AttributeKind::Numeric,
            Column::Nominal(_) => AttributeKind::Nominal,
        }
    }

    /// Per-attribute distance: `|f_i - f_j|` on normalized numeric values,
    /// 0/1 mismatch on nominal codes.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self {
            Column::Numeric(c) => (c.normalized[i] - c.normalized[j]).abs(),
            Column::Nominal(c) => {
                if c.codes[i] == c.codes[j] {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub column: Column,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>, raw: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            column: Column::Numeric(NumericColumn::new(raw)),
        }
    }

    pub fn nominal<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        Self {
            name: name.into(),
            column: Column::Nominal(NominalColumn::from_strings(values)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    PositiveOutlier,
    Unlabeled,
}

/// The universe `U`: `n` objects described by typed attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    attributes: Vec<Attribute>,
    labels: Vec<Label>,
    label_name: Option<String>,
}

impl Dataset {
    /// `positives` lists the indices of labeled outliers.
    pub fn new(attributes: Vec<Attribute>, positives: &[usize]) -> Result<Self> {
        let n = attributes.first().map(|a| a.column.len()).unwrap_or(0);
        if n == 0 {
            return Err(CodError::EmptyDataset);
        }
        for a in &attributes {
            if a.column.len() != n {
                return Err(CodError::DimensionMismatch {
                    expected: n,
                    found: a.column.len(),
                });
            }
        }
        let mut labels = vec![Label::Unlabeled; n];
        for &p in positives {
            if p >= n {
                return Err(CodError::IndexOutOfRange { index: p, n });
            }
            labels[p] = Label::PositiveOutlier;
        }
        Ok(Self {
            n,
            attributes,
            labels,
            label_name: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Indices of labeled outliers, ascending.
    pub fn positives(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Label::PositiveOutlier)
            .map(|(i, _)| i)
            .collect()
    }

    /// Same data, different label set.
    pub fn with_positives(&self, positives: &[usize]) -> Result<Self> {
        let mut out = Self::new(self.attributes.clone(), positives)?;
        out.label_name = self.label_name.clone();
        Ok(out)
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    /// Schema describing this dataset as written by [`Dataset::write_csv`].
    pub fn schema(&self) -> DatasetSchema {
        let mut columns: Vec<ColumnSpec> = self
            .attributes
            .iter()
            .map(|a| ColumnSpec {
                name: a.name.clone(),
                kind: a.column.kind(),
            })
            .collect();
        let label = self.label_name.clone().unwrap_or_else(|| "label".into());
        columns.push(ColumnSpec {
            name: label.clone(),
            kind: AttributeKind::Ignore,
        });
        DatasetSchema {
            columns,
            label_column: Some(label),
        }
    }

    /// Writes raw values (not normalized) plus a trailing label column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let schema = self.schema();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.attributes.len() + 1);
        for i in 0..self.n {
            record.clear();
            for a in &self.attributes {
                record.push(match &a.column {
                    Column::Numeric(c) => format!("{}", c.raw[i]),
                    Column::Nominal(c) => c.value(i).to_string(),
                });
            }
            record.push(match self.labels[i] {
                Label::PositiveOutlier => "1".into(),
                Label::Unlabeled => "0".into(),
            });
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| CodError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    load_csv_with(path, schema, LoadOptions::default())
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    options: LoadOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CodError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema, options)
}

enum Pending {
    Numeric(Vec<Option<f64>>),
    Nominal(Vec<Option<String>>),
}

/// Parses CSV text from any reader. Rows are reported 1-based, counting data
/// rows only.
pub fn read_csv<R: Read>(
    reader: R,
    schema: &DatasetSchema,
    options: LoadOptions,
) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let position = |name: &str| header.iter().position(|h| h.trim() == name);

    let mut plan = Vec::new();
    let mut label_pos = None;
    for spec in &schema.columns {
        let pos = position(&spec.name).ok_or_else(|| CodError::MissingColumn(spec.name.clone()))?;
        if schema.is_label(&spec.name) {
            label_pos = Some(pos);
            continue;
        }
        let pending = match spec.kind {
            AttributeKind::Ignore => continue,
            AttributeKind::Numeric => Pending::Numeric(Vec::new()),
            AttributeKind::Nominal => Pending::Nominal(Vec::new()),
        };
        plan.push((spec.name.clone(), pos, pending));
    }
    if plan.is_empty() {
        return Err(CodError::NoAttributes);
    }

    let mut positives = Vec::new();
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        rows += 1;
        for (name, pos, pending) in plan.iter_mut() {
            let cell = record.get(*pos).unwrap_or("").trim();
            let missing = cell.is_empty();
            if missing && !options.impute_missing {
                return Err(CodError::MissingValue {
                    row,
                    column: name.clone(),
                });
            }
            match pending {
                Pending::Numeric(vals) => {
                    if missing {
                        vals.push(None);
                    } else {
                        let v: f64 = cell
                            .parse()
                            .ok()
                            .filter(|v: &f64| v.is_finite())
                            .ok_or_else(|| CodError::TypeMismatch {
                                row,
                                column: name.clone(),
                                value: cell.to_string(),
                            })?;
                        vals.push(Some(v));
                    }
                }
                Pending::Nominal(vals) => {
                    vals.push(if missing {
                        None
                    } else {
                        Some(cell.to_string())
                    });
                }
            }
        }
        if let Some(lp) = label_pos {
            let cell = record.get(lp).unwrap_or("").trim();
            match cell {
                "1" => positives.push(r),
                "0" | "" => {}
                other => {
                    return Err(CodError::InvalidLabel {
                        row,
                        column: schema.label_column.clone().unwrap_or_default(),
                        value: other.to_string(),
                    })
                }
            }
        }
    }
    if rows == 0 {
        return Err(CodError::EmptyDataset);
    }

    let mut attributes = Vec::with_capacity(plan.len());
    for (name, _, pending) in plan {
        let column = match pending {
            Pending::Numeric(vals) => {
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                if present.is_empty() {
                    return Err(CodError::MissingValue {
                        row: 1,
                        column: name,
                    });
                }
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                Column::Numeric(NumericColumn::new(
                    vals.into_iter().map(|v| v.unwrap_or(mean)).collect(),
                ))
            }
            Pending::Nominal(vals) => {
                // Missing nominal cells share the empty-string category.
                let strings: Vec<String> =
                    vals.into_iter().map(|v| v.unwrap_or_default()).collect();
                Column::Nominal(NominalColumn::from_strings(&strings))
            }
        };
        attributes.push(Attribute { name, column });
    }
    let mut ds = Dataset::new(attributes, &positives)?;
    ds.label_name = schema.label_column.clone();
    Ok(ds)
}
