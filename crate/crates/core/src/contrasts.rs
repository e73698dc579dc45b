//! Contrast coding for factors.
//!
//! A `K`-level factor is represented by `K - 1` columns given by the rows of
//! a `K × (K-1)` contrast matrix. Sum and Helmert codings are "true"
//! contrasts: each column sums to zero over the levels, so the coded
//! value zero corresponds to the unweighted average across levels.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::data::Column;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContrastError {
    #[error("a contrast needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("{0} coding is not a sum-to-zero contrast; use sum or helmert")]
    NotTrueContrast(ContrastScheme),
    #[error("column is not a factor")]
    NotFactor,
    #[error("unknown contrast scheme `{0}` (expected treatment, sum or helmert)")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ContrastScheme {
    /// Baseline-reference dummies; first level is the reference.
    Treatment,
    /// Deviation coding: last level is `-1` in every column.
    #[default]
    Sum,
    /// Each level against the mean of the preceding ones; orthogonal.
    Helmert,
}

impl ContrastScheme {
    /// Whether every column of the coding sums to zero over levels.
    pub fn is_true_contrast(self) -> bool {
        !matches!(self, ContrastScheme::Treatment)
    }

    pub fn name(self) -> &'static str {
        match self {
            ContrastScheme::Treatment => "treatment",
            ContrastScheme::Sum => "sum",
            ContrastScheme::Helmert => "helmert",
        }
    }
}

impl fmt::Display for ContrastScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContrastScheme {
    type Err = ContrastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "treatment" => Ok(ContrastScheme::Treatment),
            "sum" | "deviation" => Ok(ContrastScheme::Sum),
            "helmert" => Ok(ContrastScheme::Helmert),
            _ => Err(ContrastError::UnknownScheme(s.to_string())),
        }
    }
}

/// A `levels × (levels-1)` coding matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    scheme: ContrastScheme,
    levels: usize,
    entries: Vec<f64>,
}

impl ContrastMatrix {
    pub fn scheme(&self) -> ContrastScheme {
        self.scheme
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn n_columns(&self) -> usize {
        self.levels - 1
    }

    pub fn get(&self, level: usize, col: usize) -> f64 {
        self.entries[level * self.n_columns() + col]
    }

    /// Codes for one level.
    pub fn row(&self, level: usize) -> &[f64] {
        let p = self.n_columns();
        &self.entries[level * p..(level + 1) * p]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.levels).map(|l| self.get(l, col)).collect()
    }

    /// Label suffix for column `col`. Treatment columns are named after the
    /// level they indicate; sum and Helmert columns are numbered from 1.
    pub fn column_suffix(&self, col: usize, level_names: &[String]) -> String {
        match self.scheme {
            ContrastScheme::Treatment => level_names[col + 1].clone(),
            _ => (col + 1).to_string(),
        }
    }
}

pub fn contrast_matrix(scheme: ContrastScheme, levels: usize) -> Result<ContrastMatrix, ContrastError> {
    if levels < 2 {
        return Err(ContrastError::TooFewLevels(levels));
    }
    let p = levels - 1;
    let mut entries = vec![0.0; levels * p];
    match scheme {
        ContrastScheme::Treatment => {
            for j in 0..p {
                entries[(j + 1) * p + j] = 1.0;
            }
        }
        ContrastScheme::Sum => {
            for j in 0..p {
                entries[j * p + j] = 1.0;
                entries[p * p + j] = -1.0;
            }
        }
        ContrastScheme::Helmert => {
            for j in 0..p {
                for i in 0..=j {
                    entries[i * p + j] = -1.0;
                }
                entries[(j + 1) * p + j] = (j + 1) as f64;
            }
        }
    }
    Ok(ContrastMatrix {
        scheme,
        levels,
        entries,
    })
}

/// Converts a factor column into `K - 1` numeric columns under a true
/// contrast, named `<name>1`, …, `<name><K-1>`.
pub fn sum_code_factor(
    name: &str,
    col: &Column,
    scheme: ContrastScheme,
) -> Result<Vec<(String, Vec<f64>)>, ContrastError> {
    if !scheme.is_true_contrast() {
        return Err(ContrastError::NotTrueContrast(scheme));
    }
    let (levels, codes) = match col {
        Column::Factor { levels, codes } => (levels, codes),
        Column::Numeric(_) => return Err(ContrastError::NotFactor),
    };
    let cm = contrast_matrix(scheme, levels.len())?;
    Ok((0..cm.n_columns())
        .map(|j| {
            let values = codes.iter().map(|&c| cm.get(c, j)).collect();
            (format!("{name}{}", j + 1), values)
        })
        .collect())
}
