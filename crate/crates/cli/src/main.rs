use std::collections::HashMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use mefit_core::datagen::{generate, FactorialSpec};
use mefit_core::inference::format_p;
use mefit_core::maineffect::Outcome;
use mefit_core::{
    build_design, f_test, fit_formula, lr_test, parse, sequential_anova, test_main_effect, ColumnKind,
    ContrastScheme, Dataset, FitResult,
};

#[derive(Parser)]
#[command(name = "mefit", version, about = "Test main effects in the presence of interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Input {
    /// CSV file with a header row.
    csv: PathBuf,
    /// Read these columns as factors even if they look numeric.
    #[arg(long = "factor", value_name = "COLUMN")]
    factors: Vec<String>,
    /// Contrast coding for factors: treatment, sum or helmert.
    #[arg(long, default_value = "sum")]
    contrasts: ContrastScheme,
}

impl Input {
    fn load(&self) -> Result<Dataset> {
        let hints: HashMap<String, ColumnKind> =
            self.factors.iter().map(|c| (c.clone(), ColumnKind::Factor)).collect();
        Dataset::read_csv(&self.csv, Some(&hints)).with_context(|| format!("reading {}", self.csv.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a linear model and print coefficients and fit statistics.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        formula: String,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Dump the design matrix as CSV.
    Matrix {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        formula: String,
    },
    /// Sequential (Type I) ANOVA table.
    Anova {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        formula: String,
    },
    /// F test between two nested models.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        reduced: String,
        #[arg(long)]
        full: String,
    },
    /// Test the main effect of one variable across another it interacts with.
    TestMainEffect {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        response: String,
        #[arg(long)]
        effect: String,
        #[arg(long)]
        across: String,
        #[arg(long)]
        json: bool,
    },
    /// Likelihood-ratio test from externally computed log-likelihoods.
    Lrt {
        #[arg(long, allow_hyphen_values = true)]
        loglik0: f64,
        #[arg(long)]
        df0: usize,
        #[arg(long, allow_hyphen_values = true)]
        loglik1: f64,
        #[arg(long)]
        df1: usize,
    },
    /// Generate a two-factor dataset with normal noise.
    Simulate {
        #[arg(long)]
        x_levels: usize,
        #[arg(long)]
        y_levels: usize,
        #[arg(long)]
        reps: usize,
        /// Cell means listed column-major (all X levels for y1, then y2, ...).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        sd: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fit(input: &Input, formula: &str) -> Result<FitResult> {
    let ds = input.load()?;
    Ok(fit_formula(&parse(formula)?, &ds, input.contrasts)?.1)
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "Inf" } else { "-Inf" }.to_string()
    } else {
        format!("{v:.6}")
    }
}

fn print_fit(out: &mut impl Write, formula: &str, fit: &FitResult) -> io::Result<()> {
    writeln!(out, "Formula: {formula}")?;
    let w = fit.labels.iter().map(String::len).max().unwrap_or(0).max(11);
    writeln!(out, "{:<w$} {:>14}", "Coefficient", "Estimate")?;
    for (label, c) in fit.labels.iter().zip(&fit.coefficients) {
        match c {
            Some(v) => writeln!(out, "{label:<w$} {v:>14.6}")?,
            None => writeln!(out, "{label:<w$} {:>14}", "aliased")?,
        }
    }
    writeln!(out)?;
    writeln!(out, "n = {}, rank = {}, residual df = {}", fit.n, fit.rank, fit.df_residual)?;
    writeln!(out, "RSS = {:.6}", fit.rss)?;
    writeln!(
        out,
        "logLik = {}, AIC = {}, BIC = {} (df = {})",
        fmt_num(fit.loglik.value()),
        fmt_num(fit.aic()),
        fmt_num(fit.bic()),
        fit.n_params()
    )
}

fn fit_json(fit: &FitResult) -> serde_json::Value {
    let finite = |v: f64| if v.is_finite() { json!(v) } else { json!(null) };
    json!({
        "coefficients": fit.labels.iter().zip(&fit.coefficients)
            .map(|(l, c)| json!({"label": l, "estimate": c}))
            .collect::<Vec<_>>(),
        "n": fit.n,
        "rank": fit.rank,
        "df_residual": fit.df_residual,
        "rss": fit.rss,
        "loglik": finite(fit.loglik.value()),
        "df": fit.n_params(),
        "aic": finite(fit.aic()),
        "bic": finite(fit.bic()),
    })
}

fn print_comparison(
    out: &mut impl Write,
    reduced: (usize, f64),
    full: (usize, f64),
    outcome: Option<&mefit_core::ComparisonResult>,
) -> io::Result<()> {
    writeln!(out, "  {:>6} {:>12} {:>3} {:>12} {:>10} {:>8}", "Res.Df", "RSS", "Df", "Sum of Sq", "F", "Pr(>F)")?;
    writeln!(out, "1 {:>6} {:>12.6}", reduced.0, reduced.1)?;
    match outcome {
        Some(c) => writeln!(
            out,
            "2 {:>6} {:>12.6} {:>3} {:>12.7} {:>10.4} {:>8}",
            full.0,
            full.1,
            c.df_num,
            c.sum_of_squares.unwrap_or(0.0),
            c.statistic,
            format_p(c.p_value)
        ),
        None => writeln!(out, "2 {:>6} {:>12.6}", full.0, full.1),
    }
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Fit { input, formula, json } => {
            let fit = fit(&input, &formula)?;
            if json {
                let mut v = fit_json(&fit);
                v["formula"] = json!(parse(&formula)?.render());
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                print_fit(&mut out, &parse(&formula)?.render(), &fit)?;
            }
        }
        Command::Matrix { input, formula } => {
            let ds = input.load()?;
            let dm = build_design(&parse(&formula)?, &ds, input.contrasts)?;
            dm.write_csv(&mut out)?;
        }
        Command::Anova { input, formula } => {
            let ds = input.load()?;
            let table = sequential_anova(&parse(&formula)?, &ds, input.contrasts)?;
            write!(out, "{table}")?;
        }
        Command::Compare { input, reduced, full } => {
            let ds = input.load()?;
            let (rf, ff) = (parse(&reduced)?, parse(&full)?);
            let (_, r) = fit_formula(&rf, &ds, input.contrasts)?;
            let (_, f) = fit_formula(&ff, &ds, input.contrasts)?;
            let c = f_test(&r, &f)?;
            writeln!(out, "Model 1: {}", rf.render())?;
            writeln!(out, "Model 2: {}", ff.render())?;
            print_comparison(&mut out, (r.df_residual, r.rss), (f.df_residual, f.rss), Some(&c))?;
        }
        Command::TestMainEffect {
            input,
            response,
            effect,
            across,
            json,
        } => {
            let ds = input.load()?;
            let t = test_main_effect(&ds, &response, &effect, &across, input.contrasts)?;
            if json {
                let mut v = serde_json::to_value(&t)?;
                v["full_formula"] = json!(t.full_formula.render());
                v["reduced_formula"] = json!(t.reduced_formula.render());
                v["methods"] = json!(t.methods_summary());
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
                return Ok(());
            }
            writeln!(out, "Full model:    {}", t.full_formula.render())?;
            writeln!(out, "Reduced model: {}", t.reduced_formula.render())?;
            if !t.generated_columns.is_empty() {
                writeln!(
                    out,
                    "Generated {} columns from {}: {}",
                    t.scheme,
                    t.across,
                    t.generated_columns.join(", ")
                )?;
            }
            writeln!(out, "Full fit:    RSS = {:.6}, residual df = {}", t.full.rss, t.full.df_residual)?;
            writeln!(out, "Reduced fit: RSS = {:.6}, residual df = {}", t.reduced.rss, t.reduced.df_residual)?;
            writeln!(out)?;
            let reduced = (t.reduced.df_residual, t.reduced.rss);
            let full = (t.full.df_residual, t.full.rss);
            print_comparison(&mut out, reduced, full, t.outcome.comparison())?;
            match &t.outcome {
                Outcome::Tested(_) => {}
                Outcome::Saturated { ss_increment, .. } => writeln!(
                    out,
                    "saturated: full model fits exactly, F undefined (SS increment {ss_increment:.6})"
                )?,
                Outcome::NotEstimable { .. } => {
                    writeln!(out, "not estimable: removing {} did not reduce the model rank", t.effect)?
                }
            }
            for w in &t.warnings {
                writeln!(out, "warning: {w}")?;
            }
            writeln!(out)?;
            writeln!(out, "{}", t.methods_summary())?;
        }
        Command::Lrt {
            loglik0,
            df0,
            loglik1,
            df1,
        } => {
            let r = lr_test(loglik0, df0, loglik1, df1)?;
            writeln!(out, "{:>4} {:>12} {:>6} {:>8} {:>10}", "npar", "logLik", "Chisq", "Chi Df", "Pr(>Chisq)")?;
            writeln!(out, "{df0:>4} {loglik0:>12.2}")?;
            writeln!(
                out,
                "{df1:>4} {loglik1:>12.2} {:>6.4} {:>8} {:>10}",
                r.statistic,
                r.df_num,
                format_p(r.p_value)
            )?;
            if r.clamped {
                writeln!(out, "note: slightly negative statistic clamped to 0")?;
            }
        }
        Command::Simulate {
            x_levels,
            y_levels,
            reps,
            beta,
            sd,
            seed,
            out: path,
        } => {
            let spec = FactorialSpec::from_column_major(x_levels, y_levels, reps, &beta, sd, seed)?;
            let ds = generate(&spec)?;
            match path {
                Some(p) => write_dataset(&ds, &p)?,
                None => ds.to_writer(&mut out)?,
            }
        }
    }
    Ok(())
}

fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    if path.is_dir() {
        bail!("{} is a directory", path.display());
    }
    ds.write_csv(path).with_context(|| format!("writing {}", path.display()))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
