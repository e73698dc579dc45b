//! Ordinary least squares with alias detection, Gaussian log-likelihood
//! and information criteria.

use serde::Serialize;
use thiserror::Error;

use crate::design::DesignMatrix;
use crate::linalg::{Qr, DEFAULT_ALIAS_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("design has no rows")]
    NoRows,
    #[error("response has {found} values, design has {expected} rows")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("log-likelihood needs rss >= 0 and n >= 1 (rss = {rss}, n = {n})")]
    LogLikDomain { rss: f64, n: usize },
}

/// Gaussian log-likelihood at the ML variance estimate. A perfect fit
/// (`rss == 0`) has no finite maximum and is reported as `Unbounded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum LogLikelihood {
    Finite(f64),
    Unbounded,
}

impl LogLikelihood {
    /// `+inf` when unbounded.
    pub fn value(self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => v,
            LogLikelihood::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogLikelihood::Finite(_))
    }
}

/// `-(n/2) (ln 2π + ln(rss/n) + 1)`.
pub fn gaussian_loglik(rss: f64, n: usize) -> Result<LogLikelihood, FitError> {
    if n == 0 || !rss.is_finite() || rss < 0.0 {
        return Err(FitError::LogLikDomain { rss, n });
    }
    if rss == 0.0 {
        return Ok(LogLikelihood::Unbounded);
    }
    let n = n as f64;
    Ok(LogLikelihood::Finite(
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0),
    ))
}

pub fn aic(loglik: f64, df: usize) -> f64 {
    -2.0 * loglik + 2.0 * df as f64
}

pub fn bic(loglik: f64, df: usize, n: usize) -> f64 {
    -2.0 * loglik + df as f64 * (n as f64).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub labels: Vec<String>,
    /// `None` for aliased columns.
    pub coefficients: Vec<Option<f64>>,
    pub rss: f64,
    pub df_residual: usize,
    pub rank: usize,
    pub n: usize,
    pub loglik: LogLikelihood,
    #[serde(skip)]
    pub fitted: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    /// `Qᵀ y`; the first `rank` entries are the sequential effects.
    #[serde(skip)]
    pub effects: Vec<f64>,
    /// Original column indices, accepted columns first.
    #[serde(skip)]
    pub pivot: Vec<usize>,
    /// Uncorrected `Σ y²`, kept as a scale for degeneracy checks.
    #[serde(skip)]
    pub y_sumsq: f64,
}

impl FitResult {
    /// Number of estimated parameters including the residual variance.
    pub fn n_params(&self) -> usize {
        self.rank + 1
    }

    pub fn aic(&self) -> f64 {
        aic(self.loglik.value(), self.n_params())
    }

    pub fn bic(&self) -> f64 {
        bic(self.loglik.value(), self.n_params(), self.n)
    }

    pub fn aliased(&self) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| c.is_none())
            .map(|(l, _)| l.as_str())
    }

    /// Residual sum of squares is zero up to rounding relative to `Σ y²`.
    pub fn is_saturated(&self) -> bool {
        self.df_residual == 0 || self.rss <= 1e-20 * self.y_sumsq
    }
}

pub fn fit_ols(dm: &DesignMatrix, y: &[f64]) -> Result<FitResult, FitError> {
    fit_ols_with_tol(dm, y, DEFAULT_ALIAS_TOL)
}

/// Least squares via Householder QR; a column is aliased when its part
/// outside the span of earlier columns is below `tol` times its norm.
pub fn fit_ols_with_tol(dm: &DesignMatrix, y: &[f64], tol: f64) -> Result<FitResult, FitError> {
    let n = dm.n_rows();
    if n == 0 || y.is_empty() {
        return Err(FitError::NoRows);
    }
    if y.len() != n {
        return Err(FitError::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite("response"));
    }
    if dm.columns().iter().flatten().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite("design matrix"));
    }

    let qr = Qr::new(dm.columns(), n, tol);
    let rank = qr.rank();
    let effects = qr.qty(y);
    let coefficients = qr.coefficients(&effects);
    let rss: f64 = effects[rank..].iter().map(|e| e * e).sum();
    let residuals = qr.residual(y);
    let fitted = y.iter().zip(&residuals).map(|(a, b)| a - b).collect();
    let loglik = gaussian_loglik(rss, n)?;

    Ok(FitResult {
        labels: dm.labels().to_vec(),
        coefficients,
        rss,
        df_residual: n - rank,
        rank,
        n,
        loglik,
        fitted,
        residuals,
        effects,
        pivot: qr.pivot().to_vec(),
        y_sumsq: y.iter().map(|v| v * v).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(cols: Vec<Vec<f64>>) -> DesignMatrix {
        let labels = (0..cols.len()).map(|i| format!("c{i}")).collect();
        DesignMatrix::from_columns(cols, labels)
    }

    #[test]
    fn exact_interpolation() {
        let x1 = vec![1.0; 5];
        let x2 = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let x3 = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        let beta = [2.0, -0.5, 3.0];
        let y: Vec<f64> = (0..5)
            .map(|i| beta[0] * x1[i] + beta[1] * x2[i] + beta[2] * x3[i])
            .collect();
        let fit = fit_ols(&dm(vec![x1, x2, x3]), &y).unwrap();
        for (b, t) in fit.coefficients.iter().zip(beta) {
            assert!((b.unwrap() - t).abs() < 1e-12);
        }
        let yy: f64 = y.iter().map(|v| v * v).sum();
        assert!(fit.rss <= 1e-18 * yy);
        assert_eq!(fit.df_residual, 2);
        assert!(fit.is_saturated());
    }

    #[test]
    fn intercept_only_gives_mean() {
        let y = [1.0, 4.0, 2.0, 7.0];
        let fit = fit_ols(&dm(vec![vec![1.0; 4]]), &y).unwrap();
        assert!((fit.coefficients[0].unwrap() - 3.5).abs() < 1e-14);
        let ss: f64 = y.iter().map(|v| (v - 3.5).powi(2)).sum();
        assert!((fit.rss - ss).abs() < 1e-12);
        assert_eq!(fit.df_residual, 3);
    }

    #[test]
    fn duplicated_column_is_aliased() {
        let a = vec![1.0; 6];
        let b = vec![0.3, 1.2, -0.7, 2.2, 0.1, 1.0];
        let y = vec![1.0, 2.5, 0.2, 3.9, 1.1, 2.0];
        let base = fit_ols(&dm(vec![a.clone(), b.clone()]), &y).unwrap();
        let dup = fit_ols(&dm(vec![a, b.clone(), b]), &y).unwrap();
        assert_eq!(dup.rank, 2);
        assert_eq!(dup.aliased().collect::<Vec<_>>(), vec!["c2"]);
        assert!((dup.rss - base.rss).abs() <= 1e-12 * base.rss);
        for (f, g) in dup.fitted.iter().zip(&base.fitted) {
            assert!((f - g).abs() < 1e-12);
        }
    }

    #[test]
    fn rss_matches_residual_norm() {
        let x = vec![vec![1.0; 7], vec![1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0]];
        let y = vec![2.0, 3.5, 2.2, 6.1, 4.4, 8.0, 5.9];
        let fit = fit_ols(&dm(x), &y).unwrap();
        let direct: f64 = fit.residuals.iter().map(|r| r * r).sum();
        assert!((fit.rss - direct).abs() <= 1e-10 * fit.rss);
    }

    #[test]
    fn errors() {
        let d = dm(vec![vec![1.0, 2.0]]);
        assert_eq!(
            fit_ols(&d, &[1.0]).unwrap_err(),
            FitError::LengthMismatch { expected: 2, found: 1 }
        );
        assert_eq!(
            fit_ols(&d, &[1.0, f64::NAN]).unwrap_err(),
            FitError::NonFinite("response")
        );
        let bad = dm(vec![vec![1.0, f64::INFINITY]]);
        assert_eq!(
            fit_ols(&bad, &[1.0, 2.0]).unwrap_err(),
            FitError::NonFinite("design matrix")
        );
        assert_eq!(fit_ols(&dm(vec![vec![]]), &[]).unwrap_err(), FitError::NoRows);
    }

    #[test]
    fn loglik_values() {
        let ll = gaussian_loglik(1.0 / (2.0 * std::f64::consts::PI), 1).unwrap();
        assert!((ll.value() + 0.5).abs() < 1e-15);
        assert_eq!(gaussian_loglik(0.0, 3).unwrap(), LogLikelihood::Unbounded);
        assert!(gaussian_loglik(-1.0, 3).is_err());
        assert!(gaussian_loglik(1.0, 0).is_err());
    }

    #[test]
    fn loglik_scaling_shift() {
        for &(rss, n) in &[(0.24372, 30usize), (5.0, 7), (1e-3, 100)] {
            for &c in &[0.5, 2.0, 10.0] {
                let a = gaussian_loglik(rss, n).unwrap().value();
                let b = gaussian_loglik(c * rss, n).unwrap().value();
                let expect = -(n as f64) / 2.0 * f64::ln(c);
                assert!((b - a - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn loglik_matches_summed_density() {
        // residuals with rss = 0.24372 over n = 30
        let raw: Vec<f64> = (0..30).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let s: f64 = raw.iter().map(|r| r * r).sum();
        let scale = (0.24372 / s).sqrt();
        let res: Vec<f64> = raw.iter().map(|r| r * scale).collect();
        let rss: f64 = res.iter().map(|r| r * r).sum();
        let sigma2 = rss / 30.0;
        let summed: f64 = res
            .iter()
            .map(|r| {
                let dens = (-r * r / (2.0 * sigma2)).exp()
                    / (2.0 * std::f64::consts::PI * sigma2).sqrt();
                dens.ln()
            })
            .sum();
        let ll = gaussian_loglik(0.24372, 30).unwrap().value();
        assert!((ll - summed).abs() < 1e-9, "{ll} vs {summed}");
    }

    #[test]
    fn information_criteria() {
        assert!((aic(568.20, 48) - -1040.4).abs() < 1e-9);
        assert!((bic(568.20, 48, 864) - -811.85).abs() < 0.02);
        assert_eq!(aic(0.0, 1), 2.0);
    }
}
