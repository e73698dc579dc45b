//! Testing the main effect of `X` when the model also contains `X:Y`.
//!
//! The main effect of `X` is the effect of `X` with `Y` held at zero. For a
//! numeric `Y` the reduced model is simply `R ~ Y + X:Y`. For a factor `Y`
//! that spelling spans the same space as `R ~ X*Y`, so `Y` is first
//! replaced by its `K - 1` true-contrast codes `Y1 … Y(K-1)`, putting the
//! unweighted average over `Y` levels at zero, and the reduced model is
//! `R ~ Y1 + X:Y1 + … + Y(K-1) + X:Y(K-1)`. The full model `R ~ X*Y` and the
//! reduced model are then compared with a nested F test.

use serde::Serialize;
use thiserror::Error;

use crate::contrasts::{sum_code_factor, ContrastError, ContrastScheme};
use crate::data::{Column, Dataset};
use crate::design::{build_design, column_span_equal, DesignMatrix};
use crate::fit::{fit_ols, FitResult};
use crate::formula::{Formula, Term};
use crate::inference::{f_test, ComparisonResult, InferenceError};
use crate::Error as CrateError;

/// Tolerance for the full-model span self-check.
const SPAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MainEffectError {
    #[error("effect and across variables must differ (both `{0}`)")]
    SameVariable(String),
    #[error("only two-way structures are supported; `{0}` also interacts with the tested effect")]
    HigherOrder(String),
    #[error("formula is not of the form `R ~ X*Y`: {0}")]
    NotTwoWay(String),
    #[error("generated column `{0}` already exists in the dataset")]
    NameCollision(String),
    #[error("full model does not span the same space as `X*Y`")]
    SpanCheckFailed,
    #[error("reduced model has {reduced} parameters, expected {expected}")]
    ParameterCount { reduced: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// Some `X × Y` cells have no data; the main effect may not be estimable.
    EmptyCells(usize),
    /// Cells differ in size. The main effect is still the unweighted
    /// average across `Y` levels.
    Unbalanced,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::EmptyCells(n) => write!(f, "{n} empty cell(s); the main effect may not be estimable"),
            Warning::Unbalanced => f.write_str(
                "unbalanced cells; the main effect is the unweighted average across levels",
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub rss: f64,
    pub df_residual: usize,
    pub rank: usize,
    pub n_columns: usize,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            rss: f.rss,
            df_residual: f.df_residual,
            rank: f.rank,
            n_columns: f.coefficients.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Tested(ComparisonResult),
    /// The full model fits exactly, so F is undefined.
    Saturated { ss_increment: f64, df_num: usize },
    /// Dropping the main effect did not reduce the rank, typically because
    /// of empty cells; there is nothing to test.
    NotEstimable { ss_increment: f64 },
}

impl Outcome {
    pub fn comparison(&self) -> Option<&ComparisonResult> {
        match self {
            Outcome::Tested(c) => Some(c),
            _ => None,
        }
    }

    pub fn df_num(&self) -> usize {
        match self {
            Outcome::Tested(c) => c.df_num,
            Outcome::Saturated { df_num, .. } => *df_num,
            Outcome::NotEstimable { .. } => 0,
        }
    }

    pub fn ss_increment(&self) -> f64 {
        match self {
            Outcome::Tested(c) => c.sum_of_squares.unwrap_or(0.0),
            Outcome::Saturated { ss_increment, .. } | Outcome::NotEstimable { ss_increment } => {
                *ss_increment
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MainEffectTest {
    pub effect: String,
    pub across: String,
    pub scheme: ContrastScheme,
    pub full_formula: Formula,
    pub reduced_formula: Formula,
    pub generated_columns: Vec<String>,
    pub full: FitSummary,
    pub reduced: FitSummary,
    pub outcome: Outcome,
    pub warnings: Vec<Warning>,
}

/// `response ~ X*Y`.
pub fn full_formula(response: &str, x: &str, y: &str) -> Formula {
    Formula::from_parts(
        response,
        vec![Term::new([x]), Term::new([y]), Term::new([x, y])],
        true,
    )
    .expect("non-empty")
}

/// Builds the reduced model lacking the main effect of `x`. For a factor
/// `y` the returned dataset carries the appended contrast columns.
pub fn reduced_formula(
    response: &str,
    x: &str,
    y: &str,
    ds: &Dataset,
    scheme: ContrastScheme,
) -> Result<(Formula, Dataset, Vec<String>), CrateError> {
    if x == y {
        return Err(MainEffectError::SameVariable(x.to_string()).into());
    }
    ds.numeric(response)?;
    ds.column(x)?;
    let ycol = ds.column(y)?;
    match ycol {
        Column::Numeric(_) => {
            let f = Formula::from_parts(response, vec![Term::new([y]), Term::new([x, y])], true)?;
            Ok((f, ds.clone(), Vec::new()))
        }
        Column::Factor { .. } => {
            let coded = sum_code_factor(y, ycol, scheme).map_err(|e| match e {
                ContrastError::TooFewLevels(_) => {
                    CrateError::Design(crate::design::DesignError::SingleLevelFactor(y.to_string()))
                }
                other => other.into(),
            })?;
            let mut out = ds.clone();
            let mut names = Vec::with_capacity(coded.len());
            let mut terms = Vec::with_capacity(2 * coded.len());
            for (name, values) in coded {
                if out.contains(&name) {
                    return Err(MainEffectError::NameCollision(name).into());
                }
                out.push(name.clone(), Column::Numeric(values))?;
                terms.push(Term::new([name.as_str()]));
                terms.push(Term::new([x, name.as_str()]));
                names.push(name);
            }
            let f = Formula::from_parts(response, terms, true)?;
            Ok((f, out, names))
        }
    }
}

/// Extracts `(response, X, Y)` from a full formula `R ~ X*Y` and the name
/// of the tested effect. Anything beyond a two-way structure is rejected.
pub fn split_two_way(formula: &Formula, effect: &str) -> Result<(String, String, String), MainEffectError> {
    if !formula.has_intercept() {
        return Err(MainEffectError::NotTwoWay("model has no intercept".into()));
    }
    let vars = formula.variables();
    if !vars.contains(&effect) {
        return Err(MainEffectError::NotTwoWay(format!("`{effect}` is not in the model")));
    }
    if let Some(t) = formula.terms().iter().find(|t| t.order() > 2 && t.contains(effect)) {
        return Err(MainEffectError::HigherOrder(t.label()));
    }
    let partners: Vec<&str> = vars.iter().copied().filter(|v| *v != effect).collect();
    let [across] = partners.as_slice() else {
        return Err(MainEffectError::NotTwoWay(format!(
            "expected exactly one variable besides `{effect}`, found {}",
            partners.len()
        )));
    };
    let expect = full_formula(formula.response(), effect, across);
    if *formula != expect {
        return Err(MainEffectError::NotTwoWay(format!(
            "expected `{}`, got `{}`",
            expect.render(),
            formula.render()
        )));
    }
    Ok((formula.response().to_string(), effect.to_string(), across.to_string()))
}

fn cell_warnings(ds: &Dataset, x: &str, y: &str) -> Vec<Warning> {
    let (Some(xc), Some(yc)) = (ds.get(x), ds.get(y)) else {
        return Vec::new();
    };
    let (Column::Factor { levels: xl, codes: xs }, Column::Factor { levels: yl, codes: ys }) = (xc, yc)
    else {
        return Vec::new();
    };
    let mut counts = vec![0usize; xl.len() * yl.len()];
    for (&a, &b) in xs.iter().zip(ys) {
        counts[a * yl.len() + b] += 1;
    }
    let mut out = Vec::new();
    let empty = counts.iter().filter(|&&c| c == 0).count();
    if empty > 0 {
        out.push(Warning::EmptyCells(empty));
    }
    if counts.windows(2).any(|w| w[0] != w[1]) {
        out.push(Warning::Unbalanced);
    }
    out
}

fn expected_df(ds: &Dataset, x: &str) -> usize {
    ds.get(x).and_then(Column::n_levels).map_or(1, |k| k - 1)
}

pub fn test_main_effect(
    ds: &Dataset,
    response: &str,
    x: &str,
    y: &str,
    scheme: ContrastScheme,
) -> Result<MainEffectTest, CrateError> {
    let (reduced_f, augmented, generated) = reduced_formula(response, x, y, ds, scheme)?;
    let full_f = full_formula(response, x, y);
    let yv = ds.numeric(response)?;

    let full_dm = build_design(&full_f, ds, scheme)?;
    // self-check against the default parameterization of X*Y
    let reference = build_design(&full_f, ds, ContrastScheme::Treatment)?;
    if !column_span_equal(&full_dm, &reference, SPAN_TOL) {
        return Err(MainEffectError::SpanCheckFailed.into());
    }
    let reduced_dm: DesignMatrix = build_design(&reduced_f, &augmented, scheme)?;

    let expected = full_dm.n_cols() - expected_df(ds, x);
    if reduced_dm.n_cols() != expected {
        return Err(MainEffectError::ParameterCount {
            reduced: reduced_dm.n_cols(),
            expected,
        }
        .into());
    }

    let full_fit = fit_ols(&full_dm, yv)?;
    let reduced_fit = fit_ols(&reduced_dm, yv)?;

    let outcome = match f_test(&reduced_fit, &full_fit) {
        Ok(c) => Outcome::Tested(c),
        Err(InferenceError::Saturated {
            ss_increment,
            df_num,
        }) => Outcome::Saturated {
            ss_increment,
            df_num,
        },
        Err(InferenceError::NoParametersTested) => Outcome::NotEstimable {
            ss_increment: (reduced_fit.rss - full_fit.rss).max(0.0),
        },
        Err(e) => return Err(e.into()),
    };

    Ok(MainEffectTest {
        effect: x.to_string(),
        across: y.to_string(),
        scheme,
        full_formula: full_f,
        reduced_formula: reduced_f,
        generated_columns: generated,
        full: (&full_fit).into(),
        reduced: (&reduced_fit).into(),
        outcome,
        warnings: cell_warnings(ds, x, y),
    })
}

impl MainEffectTest {
    /// A methods paragraph describing the test, for reports.
    pub fn methods_summary(&self) -> String {
        let coding = match self.scheme {
            ContrastScheme::Helmert => "Helmert-coding",
            _ => "sum-coding",
        };
        let conversion = if self.generated_columns.is_empty() {
            format!(
                "Because {y} is numeric, the main effect of {x} is its effect at {y} = 0.",
                x = self.effect,
                y = self.across
            )
        } else {
            format!(
                "{y} was converted to a {coding} numeric representation ({cols}) so that {y} = 0 \
                 corresponds to the unweighted average across its levels.",
                y = self.across,
                cols = self.generated_columns.join(", ")
            )
        };
        let result = match &self.outcome {
            Outcome::Tested(c) => format!(
                "The F test gave F({}, {}) = {:.4}, p = {:.3}.",
                c.df_num,
                c.df_den.unwrap_or(0),
                c.statistic,
                c.p_value
            ),
            Outcome::Saturated { ss_increment, .. } => format!(
                "The full model fits the data exactly, so no F test is possible \
                 (sum-of-squares increment {ss_increment:.6})."
            ),
            Outcome::NotEstimable { .. } => format!(
                "Removing the main effect of {} did not change the model's rank, so the main \
                 effect is not estimable from these data.",
                self.effect
            ),
        };
        format!(
            "We tested for a main effect of {x} by comparing linear models differing only in the \
             presence or absence of a main effect of {x}. {conversion} Both models included an \
             intercept, a main effect of {y}, and an interaction between {x} and {y} \
             (full: {full}; reduced: {reduced}). {result}",
            x = self.effect,
            y = self.across,
            full = self.full_formula.render(),
            reduced = self.reduced_formula.render(),
        )
    }
}
