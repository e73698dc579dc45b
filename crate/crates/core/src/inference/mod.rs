//! Nested-model F tests, likelihood-ratio tests and sequential ANOVA.

pub mod special;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::contrasts::ContrastScheme;
use crate::data::Dataset;
use crate::design::build_design;
use crate::fit::{fit_ols, FitResult};
use crate::formula::Formula;

pub use special::{chisq_upper_tail, f_upper_tail, SpecialError};

/// Relative slack allowed when a nested pair's RSS or log-likelihood goes
/// the wrong way through rounding.
pub const NESTING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("models were fitted to different numbers of rows ({0} vs {1})")]
    DifferentN(usize, usize),
    #[error("models have the same degrees of freedom; nothing to test")]
    NoParametersTested,
    #[error("models are not nested: {0}")]
    NotNested(String),
    #[error("full model fits exactly (rss = 0); F is undefined (SS increment {ss_increment})")]
    Saturated { ss_increment: f64, df_num: usize },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestKind {
    F,
    #[serde(rename = "chisq")]
    ChiSq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub kind: TestKind,
    pub statistic: f64,
    /// Numerator df for F; df for χ².
    pub df_num: usize,
    /// Denominator df, F only.
    pub df_den: Option<usize>,
    pub p_value: f64,
    /// RSS drop for F tests.
    pub sum_of_squares: Option<f64>,
    /// A slightly negative statistic was clamped to zero.
    pub clamped: bool,
}

pub fn f_test(reduced: &FitResult, full: &FitResult) -> Result<ComparisonResult, InferenceError> {
    if reduced.n != full.n {
        return Err(InferenceError::DifferentN(reduced.n, full.n));
    }
    if reduced.df_residual == full.df_residual {
        return Err(InferenceError::NoParametersTested);
    }
    if reduced.df_residual < full.df_residual {
        return Err(InferenceError::NotNested(format!(
            "reduced model has fewer residual df ({}) than the full model ({})",
            reduced.df_residual, full.df_residual
        )));
    }
    let df_num = reduced.df_residual - full.df_residual;
    let mut ss = reduced.rss - full.rss;
    let mut clamped = false;
    if ss < 0.0 {
        // rounding slack: relative to the rss, plus an absolute floor for
        // near-exact fits
        let slack = NESTING_TOL * reduced.rss.max(full.rss) + 1e-20 * full.y_sumsq;
        if -ss > slack {
            return Err(InferenceError::NotNested(format!(
                "reduced rss {} is below full rss {}",
                reduced.rss, full.rss
            )));
        }
        ss = 0.0;
        clamped = true;
    }
    if full.is_saturated() {
        return Err(InferenceError::Saturated {
            ss_increment: ss,
            df_num,
        });
    }
    let df_den = full.df_residual;
    let statistic = (ss / df_num as f64) / (full.rss / df_den as f64);
    let p_value = f_upper_tail(statistic, df_num as f64, df_den as f64)?;
    Ok(ComparisonResult {
        kind: TestKind::F,
        statistic,
        df_num,
        df_den: Some(df_den),
        p_value,
        sum_of_squares: Some(ss),
        clamped,
    })
}

/// Likelihood-ratio χ² test between a restricted model (`loglik0`, `df0`)
/// and a larger one (`loglik1`, `df1`). `df` counts all parameters.
pub fn lr_test(
    loglik0: f64,
    df0: usize,
    loglik1: f64,
    df1: usize,
) -> Result<ComparisonResult, InferenceError> {
    if df1 <= df0 {
        return Err(if df1 == df0 {
            InferenceError::NoParametersTested
        } else {
            InferenceError::NotNested(format!("df1 ({df1}) must exceed df0 ({df0})"))
        });
    }
    let mut statistic = 2.0 * (loglik1 - loglik0);
    let mut clamped = false;
    if statistic < 0.0 {
        let scale = loglik0.abs().max(loglik1.abs()).max(1.0);
        if -statistic > NESTING_TOL * scale {
            return Err(InferenceError::NotNested(format!(
                "larger model has lower log-likelihood ({loglik1} < {loglik0})"
            )));
        }
        statistic = 0.0;
        clamped = true;
    }
    let df = df1 - df0;
    let p_value = chisq_upper_tail(statistic, df as f64)?;
    Ok(ComparisonResult {
        kind: TestKind::ChiSq,
        statistic,
        df_num: df,
        df_den: None,
        p_value,
        sum_of_squares: None,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub sum_sq: f64,
    pub mean_sq: Option<f64>,
    pub f_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub residual_df: usize,
    pub residual_ss: f64,
    pub residual_ms: Option<f64>,
    /// Corrected total SS with an intercept, uncorrected otherwise.
    pub total_ss: f64,
}

impl AnovaTable {
    pub fn row(&self, term: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.term == term)
    }
}

/// Type-I table: terms enter in canonical order and each row's SS is the
/// RSS drop when that term is added, computed from the sequential effects
/// of one QR factorization of the full design.
pub fn sequential_anova(
    formula: &Formula,
    ds: &Dataset,
    scheme: ContrastScheme,
) -> Result<AnovaTable, crate::Error> {
    if formula.terms().is_empty() {
        return Err(crate::Error::NoTerms);
    }
    let dm = build_design(formula, ds, scheme)?;
    let y = ds.numeric(formula.response())?;
    let fit = fit_ols(&dm, y)?;

    let n_terms = formula.terms().len();
    let mut df = vec![0usize; n_terms + 1];
    let mut ss = vec![0.0; n_terms + 1];
    for (k, &col) in fit.pivot[..fit.rank].iter().enumerate() {
        let t = dm.assign()[col];
        df[t] += 1;
        ss[t] += fit.effects[k] * fit.effects[k];
    }

    let residual_df = fit.df_residual;
    let residual_ss = fit.rss;
    let residual_ms = (residual_df > 0).then(|| residual_ss / residual_df as f64);
    let testable = residual_ms.filter(|_| !fit.is_saturated());

    let mut rows = Vec::with_capacity(n_terms);
    for t in 1..=n_terms {
        let mean_sq = (df[t] > 0).then(|| ss[t] / df[t] as f64);
        let f_value = match (mean_sq, testable) {
            (Some(m), Some(r)) => Some(m / r),
            _ => None,
        };
        let p_value = match f_value {
            Some(f) => Some(f_upper_tail(f, df[t] as f64, residual_df as f64).map_err(InferenceError::from)?),
            None => None,
        };
        rows.push(AnovaRow {
            term: dm.term_labels()[t].clone(),
            df: df[t],
            sum_sq: ss[t],
            mean_sq,
            f_value,
            p_value,
        });
    }

    let total_ss = if formula.has_intercept() {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };

    Ok(AnovaTable {
        rows,
        residual_df,
        residual_ss,
        residual_ms,
        total_ss,
    })
}

fn fmt_opt(v: Option<f64>, width: usize, f: impl Fn(f64) -> String) -> String {
    match v {
        Some(x) => format!("{:>width$}", f(x)),
        None => format!("{:>width$}", ""),
    }
}

/// Formats a p-value the way statistical tables usually do.
pub fn format_p(p: f64) -> String {
    if p < 2.2e-16 {
        "<2e-16".to_string()
    } else if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

impl fmt::Display for AnovaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self
            .rows
            .iter()
            .map(|r| r.term.len())
            .chain(std::iter::once("Residuals".len()))
            .max()
            .unwrap_or(9);
        writeln!(
            f,
            "{:<w$} {:>4} {:>12} {:>12} {:>10} {:>8}",
            "", "Df", "Sum Sq", "Mean Sq", "F value", "Pr(>F)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<w$} {:>4} {:>12.6} {} {} {}",
                r.term,
                r.df,
                r.sum_sq,
                fmt_opt(r.mean_sq, 12, |x| format!("{x:.6}")),
                fmt_opt(r.f_value, 10, |x| format!("{x:.4}")),
                fmt_opt(r.p_value, 8, format_p),
            )?;
        }
        writeln!(
            f,
            "{:<w$} {:>4} {:>12.6} {}",
            "Residuals",
            self.residual_df,
            self.residual_ss,
            fmt_opt(self.residual_ms, 12, |x| format!("{x:.6}")),
        )
    }
}
