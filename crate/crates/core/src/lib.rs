//! Model formulas, design matrices, least-squares fits and nested-model
//! tests, built around one question: how to test the main effect of `X`
//! when the model also contains the `X:Y` interaction.
//!
//! ```
//! use mefit_core::{datagen, maineffect, ContrastScheme};
//!
//! let spec = datagen::FactorialSpec::two_by_three(0.1, 1);
//! let ds = datagen::generate(&spec).unwrap();
//! let test = maineffect::test_main_effect(&ds, "Response", "X", "Y", ContrastScheme::Sum).unwrap();
//! assert_eq!(test.outcome.df_num(), 1);
//! ```
//!
//! Modules:
//! - [`formula`]: parsing and canonicalizing `R ~ X*Y - X` style formulas
//! - [`data`]: numeric/factor columns and CSV ingestion
//! - [`contrasts`]: treatment, sum and Helmert codings
//! - [`design`]: formula + dataset → design matrix
//! - [`fit`]: OLS, log-likelihood, AIC/BIC
//! - [`inference`]: F tests, likelihood-ratio tests, sequential ANOVA
//! - [`maineffect`]: the reduced-model construction and comparison
//! - [`datagen`]: reproducible factorial test data

pub mod contrasts;
pub mod data;
pub mod datagen;
pub mod design;
pub mod fit;
pub mod formula;
pub mod inference;
mod linalg;
pub mod maineffect;

pub use contrasts::{contrast_matrix, sum_code_factor, ContrastMatrix, ContrastScheme};
pub use data::{Column, ColumnKind, Dataset};
pub use design::{build_design, column_span_equal, DesignMatrix};
pub use fit::{aic, bic, fit_ols, gaussian_loglik, FitResult, LogLikelihood};
pub use formula::{formulas_equal, parse, Formula, Term};
pub use inference::{
    chisq_upper_tail, f_test, f_upper_tail, lr_test, sequential_anova, AnovaTable,
    ComparisonResult,
};
pub use linalg::DEFAULT_ALIAS_TOL;
pub use maineffect::{reduced_formula, test_main_effect, MainEffectTest};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Formula(#[from] formula::FormulaError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Contrast(#[from] contrasts::ContrastError),
    #[error(transparent)]
    Design(#[from] design::DesignError),
    #[error(transparent)]
    Fit(#[from] fit::FitError),
    #[error(transparent)]
    Inference(#[from] inference::InferenceError),
    #[error(transparent)]
    MainEffect(#[from] maineffect::MainEffectError),
    #[error(transparent)]
    Spec(#[from] datagen::SpecError),
    #[error("formula has no terms to test")]
    NoTerms,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Parses `formula`, builds its design on `ds` and fits it by OLS.
pub fn fit_formula(formula: &Formula, ds: &Dataset, scheme: ContrastScheme) -> Result<(DesignMatrix, FitResult)> {
    let dm = build_design(formula, ds, scheme)?;
    let y = ds.numeric(formula.response())?;
    let fit = fit_ols(&dm, y)?;
    Ok((dm, fit))
}
