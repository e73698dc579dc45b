//! Design-matrix construction from a formula and a dataset.
//!
//! Each factor inside a term is contrast coded (`K - 1` columns) when the
//! term's margin without that factor is already in the model, and dummy
//! coded (`K` columns) otherwise. The empty margin is the intercept. A
//! term's columns are the products of one coded column per variable, with
//! the first variable varying fastest. Numeric variables contribute their
//! values.
//!
//! Without an intercept, the first term containing a factor is dummy coded
//! and later terms behave as if the intercept were present.

use std::io::Write;

use thiserror::Error;

use crate::contrasts::{contrast_matrix, ContrastScheme};
use crate::data::{Column, Dataset};
use crate::formula::{Formula, Term};
use crate::linalg::{l2_norm, Qr, DEFAULT_ALIAS_TOL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("factor `{0}` has only one level")]
    SingleLevelFactor(String),
    #[error("dataset has no rows")]
    NoRows,
}

/// How one variable of a term is expanded into columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coding {
    Numeric,
    Contrast,
    Dummy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
    /// Per column: 0 for the intercept, `t + 1` for the formula's term `t`.
    assign: Vec<usize>,
    term_labels: Vec<String>,
    codings: Vec<Vec<Coding>>,
}

impl DesignMatrix {
    /// Builds a matrix from raw columns; used for ad-hoc designs and tests.
    /// Every column is assigned to term 1.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: Vec<String>) -> DesignMatrix {
        assert_eq!(columns.len(), labels.len(), "one label per column");
        let n_rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == n_rows), "ragged columns");
        DesignMatrix {
            n_rows,
            assign: vec![1; columns.len()],
            columns,
            labels,
            term_labels: vec!["(Intercept)".into(), "(columns)".into()],
            codings: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    /// `"(Intercept)"` followed by one label per formula term.
    pub fn term_labels(&self) -> &[String] {
        &self.term_labels
    }

    /// Coding used for each variable of each formula term.
    pub fn codings(&self) -> &[Vec<Coding>] {
        &self.codings
    }

    /// Keeps the columns whose term index satisfies `keep`.
    pub fn select_terms(&self, keep: impl Fn(usize) -> bool) -> DesignMatrix {
        let idx: Vec<usize> = (0..self.n_cols()).filter(|&j| keep(self.assign[j])).collect();
        DesignMatrix {
            n_rows: self.n_rows,
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            labels: idx.iter().map(|&j| self.labels[j].clone()).collect(),
            assign: idx.iter().map(|&j| self.assign[j]).collect(),
            term_labels: self.term_labels.clone(),
            codings: self.codings.clone(),
        }
    }

    /// CSV dump with a header of column labels.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let quote = |s: &str| {
            if s.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let header: Vec<String> = self.labels.iter().map(|l| quote(l)).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n_rows {
            let row: Vec<String> = self.columns.iter().map(|c| format!("{}", c[i] + 0.0)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Coded {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn code_variable(
    name: &str,
    col: &Column,
    coding: Coding,
    scheme: ContrastScheme,
) -> Coded {
    match (col, coding) {
        (Column::Numeric(v), _) => Coded {
            labels: vec![name.to_string()],
            columns: vec![v.clone()],
        },
        (Column::Factor { levels, codes }, Coding::Dummy) => Coded {
            labels: levels.iter().map(|l| format!("{name}{l}")).collect(),
            columns: (0..levels.len())
                .map(|l| codes.iter().map(|&c| if c == l { 1.0 } else { 0.0 }).collect())
                .collect(),
        },
        (Column::Factor { levels, codes }, _) => {
            let cm = contrast_matrix(scheme, levels.len()).expect("levels checked above");
            Coded {
                labels: (0..cm.n_columns())
                    .map(|j| format!("{name}{}", cm.column_suffix(j, levels)))
                    .collect(),
                columns: (0..cm.n_columns())
                    .map(|j| codes.iter().map(|&c| cm.get(c, j)).collect())
                    .collect(),
            }
        }
    }
}

pub fn build_design(
    formula: &Formula,
    ds: &Dataset,
    scheme: ContrastScheme,
) -> Result<DesignMatrix, DesignError> {
    let n = ds.n_rows();
    if n == 0 {
        return Err(DesignError::NoRows);
    }
    for v in formula.variables() {
        match ds.get(v) {
            None => return Err(DesignError::UnknownVariable(v.to_string())),
            Some(c) if c.n_levels().is_some_and(|k| k < 2) => {
                return Err(DesignError::SingleLevelFactor(v.to_string()))
            }
            Some(_) => {}
        }
    }

    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut assign = Vec::new();
    let mut term_labels = vec!["(Intercept)".to_string()];
    let mut codings = Vec::new();

    let mut intercept_present = formula.has_intercept();
    if intercept_present {
        columns.push(vec![1.0; n]);
        labels.push("(Intercept)".to_string());
        assign.push(0);
    }

    let mut earlier: Vec<&Term> = Vec::new();
    for (t, term) in formula.terms().iter().enumerate() {
        term_labels.push(term.label());
        let mut term_codings = Vec::with_capacity(term.order());
        let mut coded = Vec::with_capacity(term.order());
        let mut has_factor = false;
        for var in term.variables() {
            let col = ds.get(var).expect("checked above");
            let coding = if col.is_factor() {
                has_factor = true;
                let margin = term.without(var);
                let margin_present = if margin.order() == 0 {
                    intercept_present
                } else {
                    earlier.iter().any(|e| **e == margin)
                };
                if margin_present {
                    Coding::Contrast
                } else {
                    Coding::Dummy
                }
            } else {
                Coding::Numeric
            };
            term_codings.push(coding);
            coded.push(code_variable(var, col, coding, scheme));
        }

        // all products, first variable fastest
        let sizes: Vec<usize> = coded.iter().map(|c| c.columns.len()).collect();
        let total: usize = sizes.iter().product();
        for combo in 0..total {
            let mut rem = combo;
            let mut values = vec![1.0; n];
            let mut parts = Vec::with_capacity(coded.len());
            for (c, &size) in coded.iter().zip(&sizes) {
                let pick = rem % size;
                rem /= size;
                for (v, x) in values.iter_mut().zip(&c.columns[pick]) {
                    *v *= x;
                }
                parts.push(c.labels[pick].as_str());
            }
            columns.push(values);
            labels.push(parts.join(":"));
            assign.push(t + 1);
        }

        codings.push(term_codings);
        earlier.push(term);
        if has_factor {
            intercept_present = true;
        }
    }

    Ok(DesignMatrix {
        n_rows: n,
        columns,
        labels,
        assign,
        term_labels,
        codings,
    })
}

/// True iff each matrix's columns lie in the other's column space: the
/// residual of projecting each column onto the other span is below
/// `tol` times the column's norm.
pub fn column_span_equal(a: &DesignMatrix, b: &DesignMatrix, tol: f64) -> bool {
    if a.n_rows() != b.n_rows() {
        return false;
    }
    contained_in(a, b, tol) && contained_in(b, a, tol)
}

fn contained_in(a: &DesignMatrix, b: &DesignMatrix, tol: f64) -> bool {
    let qr = Qr::new(b.columns(), b.n_rows(), DEFAULT_ALIAS_TOL);
    a.columns()
        .iter()
        .all(|c| qr.residual_norm(c) <= tol * l2_norm(c))
}

/// Numerical rank of the design, using the default alias threshold.
pub fn rank(dm: &DesignMatrix) -> usize {
    Qr::new(dm.columns(), dm.n_rows(), DEFAULT_ALIAS_TOL).rank()
}
