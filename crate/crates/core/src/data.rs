//! Tabular datasets with numeric and factor columns.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty file: no header row")]
    NoHeader,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("type hint names unknown column `{0}`")]
    UnknownHint(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not a factor")]
    NotFactor(String),
    #[error("column `{0}` is not numeric")]
    NotNumericColumn(String),
    #[error("column `{name}` has {found} rows, dataset has {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("factor code {code} out of range for {levels} levels")]
    BadCode { code: usize, levels: usize },
    #[error("factor levels must be distinct; `{0}` repeats")]
    DuplicateLevel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Factor,
}

/// A column of a [`Dataset`]. Factor codes are zero-based indices into
/// `levels`.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Factor { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    /// Builds a factor from labels, with levels sorted lexicographically.
    pub fn factor_from_labels<S: AsRef<str>>(labels: &[S]) -> Column {
        let mut levels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        levels.sort();
        levels.dedup();
        let index: HashMap<&str, usize> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let codes = labels.iter().map(|s| index[s.as_ref()]).collect();
        Column::Factor { levels, codes }
    }

    /// Builds a factor with an explicit level order.
    pub fn factor_with_levels(levels: Vec<String>, codes: Vec<usize>) -> Result<Column, DataError> {
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(DataError::DuplicateLevel(l.clone()));
            }
        }
        if let Some(&code) = codes.iter().find(|&&c| c >= levels.len()) {
            return Err(DataError::BadCode {
                code,
                levels: levels.len(),
            });
        }
        Ok(Column::Factor { levels, codes })
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Factor { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Factor { .. } => ColumnKind::Factor,
        }
    }

    pub fn is_factor(&self) -> bool {
        self.kind() == ColumnKind::Factor
    }

    /// Number of levels; `None` for numeric columns.
    pub fn n_levels(&self) -> Option<usize> {
        match self {
            Column::Numeric(_) => None,
            Column::Factor { levels, .. } => Some(levels.len()),
        }
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) => Some(v),
            _ => None,
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => format!("{}", v[row]),
            Column::Factor { levels, codes } => levels[codes[row]].clone(),
        }
    }
}

/// Named, equal-length columns. Column order is insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    columns: IndexMap<String, Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new() -> Dataset {
        Dataset::default()
    }

    /// Adds a column. The first column fixes the row count.
    pub fn push(&mut self, name: impl Into<String>, col: Column) -> Result<(), DataError> {
        let name = name.into();
        if self.columns.contains_key(&name) {
            return Err(DataError::DuplicateColumn(name));
        }
        if self.columns.is_empty() {
            self.n_rows = col.len();
        } else if col.len() != self.n_rows {
            return Err(DataError::LengthMismatch {
                name,
                expected: self.n_rows,
                found: col.len(),
            });
        }
        self.columns.insert(name, col);
        Ok(())
    }

    pub fn with_column(mut self, name: impl Into<String>, col: Column) -> Result<Dataset, DataError> {
        self.push(name, col)?;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn column(&self, name: &str) -> Result<&Column, DataError> {
        self.get(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], DataError> {
        self.column(name)?
            .as_numeric()
            .ok_or_else(|| DataError::NotNumericColumn(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|(name, col)| {
                let col = match col {
                    Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                    Column::Factor { levels, codes } => Column::Factor {
                        levels: levels.clone(),
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                    },
                };
                (name.clone(), col)
            })
            .collect();
        Dataset {
            columns,
            n_rows: rows.len(),
        }
    }

    pub fn read_csv(
        path: impl AsRef<Path>,
        hints: Option<&HashMap<String, ColumnKind>>,
    ) -> Result<Dataset, DataError> {
        let file = std::fs::File::open(path)?;
        Dataset::from_reader(file, hints)
    }

    /// Reads CSV text. Unhinted columns are numeric iff every cell parses
    /// as a decimal number; otherwise they become factors with
    /// lexicographically sorted levels. Empty cells and `NA` are errors.
    pub fn from_reader<R: Read>(
        reader: R,
        hints: Option<&HashMap<String, ColumnKind>>,
    ) -> Result<Dataset, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(DataError::NoHeader),
        };
        let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(DataError::DuplicateColumn(n.clone()));
            }
        }
        if let Some(hints) = hints {
            if let Some(bad) = hints.keys().find(|k| !names.contains(k)) {
                return Err(DataError::UnknownHint(bad.clone()));
            }
        }

        let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            // data rows are numbered from 1, header excluded
            let row = i + 1;
            if rec.len() != names.len() {
                return Err(DataError::Ragged {
                    row,
                    expected: names.len(),
                    found: rec.len(),
                });
            }
            for (j, cell) in rec.iter().enumerate() {
                let cell = cell.trim();
                if is_missing(cell) {
                    return Err(DataError::MissingValue {
                        row,
                        column: names[j].clone(),
                    });
                }
                cells[j].push(cell.to_string());
            }
        }

        let mut ds = Dataset::new();
        for (name, values) in names.into_iter().zip(cells) {
            let hint = hints.and_then(|h| h.get(&name)).copied();
            let col = match hint {
                Some(ColumnKind::Factor) => Column::factor_from_labels(&values),
                Some(ColumnKind::Numeric) => {
                    let mut out = Vec::with_capacity(values.len());
                    for (i, v) in values.iter().enumerate() {
                        match parse_number(v) {
                            Some(x) => out.push(x),
                            None => {
                                return Err(DataError::NotNumeric {
                                    row: i + 1,
                                    column: name,
                                    value: v.clone(),
                                })
                            }
                        }
                    }
                    Column::Numeric(out)
                }
                None => {
                    let parsed: Option<Vec<f64>> = values.iter().map(|v| parse_number(v)).collect();
                    match parsed {
                        Some(nums) => Column::Numeric(nums),
                        None => Column::factor_from_labels(&values),
                    }
                }
            };
            ds.push(name, col)?;
        }
        Ok(ds)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        self.to_writer(file)
    }

    /// Writes CSV with `\n` line endings and minimal quoting. Numbers use
    /// the shortest representation that reads back to the same `f64`.
    pub fn to_writer<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(writer);
        w.write_record(self.columns.keys())?;
        for row in 0..self.n_rows {
            w.write_record(self.columns.values().map(|c| c.cell(row)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean of `response` within every combination of levels of `factors`.
    pub fn factor_cell_means(&self, response: &str, factors: &[&str]) -> Result<CellMeans, DataError> {
        let y = self.numeric(response)?;
        let mut facs: Vec<(&[String], &[usize])> = Vec::with_capacity(factors.len());
        for &f in factors {
            match self.column(f)? {
                Column::Factor { levels, codes } => facs.push((levels, codes)),
                Column::Numeric(_) => return Err(DataError::NotFactor(f.to_string())),
            }
        }
        let shape: Vec<usize> = facs.iter().map(|(l, _)| l.len()).collect();
        let n_cells: usize = shape.iter().product();
        let mut sums = vec![0.0; n_cells];
        let mut counts = vec![0usize; n_cells];
        for (row, &yi) in y.iter().enumerate() {
            // row-major: first factor varies slowest
            let cell = facs.iter().fold(0, |acc, (l, c)| acc * l.len() + c[row]);
            sums[cell] += yi;
            counts[cell] += 1;
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &n)| if n == 0 { None } else { Some(s / n as f64) })
            .collect();
        Ok(CellMeans {
            factors: factors.iter().map(|s| s.to_string()).collect(),
            levels: facs.iter().map(|(l, _)| l.to_vec()).collect(),
            shape,
            means,
            counts,
        })
    }
}

/// Per-cell means from [`Dataset::factor_cell_means`], stored row-major
/// with the first factor varying slowest. Empty cells hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeans {
    pub factors: Vec<String>,
    pub levels: Vec<Vec<String>>,
    pub shape: Vec<usize>,
    pub means: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl CellMeans {
    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &k)| {
                assert!(i < k, "cell index out of range");
                acc * k + i
            })
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.means[self.offset(index)]
    }

    pub fn count(&self, index: &[usize]) -> usize {
        self.counts[self.offset(index)]
    }

    pub fn has_empty_cells(&self) -> bool {
        self.counts.contains(&0)
    }

    /// Every cell has the same number of observations.
    pub fn is_balanced(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "N/A" | "NaN" | "nan" | "null" | "NULL")
}

/// Decimal number with optional sign, fraction and exponent. Rejects
/// `inf`, `nan` and hex forms that `f64::from_str` would otherwise take.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}
