//! Acceptance checks, one line per criterion. Exits non-zero if any fail.

mod common;

use std::panic;
use std::time::{Duration, Instant};

use common::{chisq1_upper, normal_equations_rss, rel_diff, two_factor, uniform_index};
use mefit_core::datagen::{generate, FactorialSpec, NormalStream};
use mefit_core::fit::FitResult;
use mefit_core::{
    aic, bic, chisq_upper_tail, contrast_matrix, f_test, fit_formula, fit_ols, parse, reduced_formula,
    sequential_anova, test_main_effect, ContrastScheme, DesignMatrix, LogLikelihood,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn formula_algebra() -> Check {
    let start = Instant::now();
    let p = |s: &str| parse(s).map_err(|e| format!("{s}: {e}"));
    let pairs = [
        ("R ~ X*Y", "R ~ 1+X+Y+X:Y"),
        ("R ~ X:X", "R ~ X"),
        ("R ~ X*Y - X", "R ~ Y + X:Y"),
    ];
    for (a, b) in pairs {
        ensure(p(a)? == p(b)?, format!("`{a}` != `{b}`"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("3 equivalences hold in {elapsed:?}"))
}

fn contrast_exactness() -> Check {
    let rows = |s, k| {
        let cm = contrast_matrix(s, k).unwrap();
        (0..k).map(|l| cm.row(l).to_vec()).collect::<Vec<_>>()
    };
    ensure(
        rows(ContrastScheme::Sum, 3) == [vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
        "sum(3) mismatch",
    )?;
    ensure(
        rows(ContrastScheme::Helmert, 3) == [vec![-1.0, -1.0], vec![1.0, -1.0], vec![0.0, 2.0]],
        "helmert(3) mismatch",
    )?;
    for k in 2..=8 {
        for s in [ContrastScheme::Sum, ContrastScheme::Helmert] {
            let cm = contrast_matrix(s, k).unwrap();
            for j in 0..k - 1 {
                ensure(cm.column(j).iter().sum::<f64>() == 0.0, format!("{s} k={k} column {j} sum"))?;
            }
            let cols: Vec<Vec<f64>> = (0..k - 1).map(|j| cm.column(j)).collect();
            let dm = DesignMatrix::from_columns(cols, (0..k - 1).map(|j| j.to_string()).collect());
            ensure(mefit_core::design::rank(&dm) == k - 1, format!("{s} k={k} rank"))?;
        }
    }
    Ok("sum(3), helmert(3) bit-exact; K=2..8 zero-sum, rank K-1".into())
}

fn summary_fit(rss: f64, df: usize) -> FitResult {
    let n = 30;
    FitResult {
        labels: Vec::new(),
        coefficients: Vec::new(),
        rss,
        df_residual: df,
        rank: n - df,
        n,
        loglik: LogLikelihood::Finite(0.0),
        fitted: Vec::new(),
        residuals: Vec::new(),
        effects: Vec::new(),
        pivot: Vec::new(),
        y_sumsq: 300.0,
    }
}

fn f_test_arithmetic() -> Check {
    let r = f_test(&summary_fit(0.24372, 25), &summary_fit(0.23543, 24)).map_err(|e| e.to_string())?;
    ensure((r.statistic - 0.8452).abs() <= 5e-4, format!("F = {}", r.statistic))?;
    ensure((r.p_value - 0.3671).abs() <= 5e-4, format!("p = {}", r.p_value))?;
    ensure(r.df_num == 1 && r.df_den == Some(24), "df")?;
    Ok(format!("F = {:.4}, p = {:.4}, df (1, 24)", r.statistic, r.p_value))
}

fn information_criteria() -> Check {
    let a = aic(568.20, 48);
    let b = bic(568.20, 48, 864);
    ensure((a + 1040.4).abs() <= 0.05, format!("AIC = {a}"))?;
    ensure((b + 811.85).abs() <= 0.05, format!("BIC = {b}"))?;
    Ok(format!("AIC = {a:.2}, BIC = {b:.2}"))
}

fn chisq_p_value() -> Check {
    let p = chisq_upper_tail(0.0666, 1.0).map_err(|e| e.to_string())?;
    ensure((p - 0.7963).abs() <= 5e-4, format!("p = {p}"))?;
    Ok(format!("p = {p:.4}"))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let ds = generate(&FactorialSpec::two_by_three(0.1, 1)).unwrap();
    let t = test_main_effect(&ds, "Response", "X", "Y", ContrastScheme::Sum).map_err(|e| e.to_string())?;
    let c = t.outcome.comparison().ok_or("no comparison")?;
    ensure(c.df_num == 1 && c.df_den == Some(24), format!("df ({}, {:?})", c.df_num, c.df_den))?;
    let table = sequential_anova(&t.full_formula, &ds, ContrastScheme::Sum).map_err(|e| e.to_string())?;
    let fx = table.row("X").and_then(|r| r.f_value).ok_or("no X row")?;
    ensure(rel_diff(fx, c.statistic) <= 1e-6, format!("anova F {fx} vs nested F {}", c.statistic))?;

    let seeds = 200;
    let mut rejections = 0;
    for seed in 0..seeds {
        let ds = generate(&FactorialSpec::two_by_three(0.1, 1000 + seed)).unwrap();
        let t = test_main_effect(&ds, "Response", "X", "Y", ContrastScheme::Sum).map_err(|e| e.to_string())?;
        if t.outcome.comparison().ok_or("no comparison")?.p_value < 0.05 {
            rejections += 1;
        }
    }
    let frac = rejections as f64 / seeds as f64;
    ensure((0.01..=0.11).contains(&frac), format!("rejection rate {frac}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "df (1, 24); anova F = nested F = {:.4}; rejection rate {frac:.3} over {seeds} seeds; {elapsed:.2?}",
        c.statistic
    ))
}

fn same_model_pitfall() -> Check {
    let ds = generate(&FactorialSpec::two_by_three(0.1, 5)).unwrap();
    let fit = |f: &str, d| fit_formula(&parse(f).unwrap(), d, ContrastScheme::Sum).map(|r| r.1);
    let full = fit("Response ~ X*Y", &ds).map_err(|e| e.to_string())?;
    let same = fit("Response ~ Y + X:Y", &ds).map_err(|e| e.to_string())?;
    ensure(rel_diff(full.rss, same.rss) <= 1e-10, format!("rss {} vs {}", full.rss, same.rss))?;
    let (f, aug, _) = reduced_formula("Response", "X", "Y", &ds, ContrastScheme::Sum).map_err(|e| e.to_string())?;
    let red = fit_formula(&f, &aug, ContrastScheme::Sum).map_err(|e| e.to_string())?.1;
    ensure(red.rank + 1 == full.rank, format!("ranks {} vs {}", red.rank, full.rank))?;
    ensure(red.rss > full.rss, "reduced rss not larger")?;
    Ok(format!(
        "factor-Y reduced rss equals full ({:.6}); numeric-coded reduced has {} vs {} params, rss {:.6}",
        full.rss, red.rank, full.rank, red.rss
    ))
}

fn contrast_invariance() -> Check {
    let mut rng = NormalStream::new(77);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let xl = uniform_index(&mut rng, 2, 3);
        let yl = uniform_index(&mut rng, 2, 4);
        let balanced = i % 2 == 0;
        let counts: Vec<usize> =
            (0..xl * yl).map(|_| if balanced { 3 } else { uniform_index(&mut rng, 1, 5) }).collect();
        let means: Vec<f64> = (0..xl * yl).map(|_| rng.next_normal()).collect();
        let ds = two_factor(xl, yl, &counts, |a, b| means[a * yl + b], 0.5, &mut rng);
        let f = |s| {
            test_main_effect(&ds, "R", "X", "Y", s)
                .map_err(|e| e.to_string())
                .and_then(|t| t.outcome.comparison().map(|c| c.statistic).ok_or("untestable".to_string()))
        };
        let d = rel_diff(f(ContrastScheme::Sum)?, f(ContrastScheme::Helmert)?);
        worst = worst.max(d);
        ensure(d <= 1e-8, format!("dataset {i}: relative difference {d}"))?;
    }
    Ok(format!("50 datasets, max relative F difference {worst:.1e}"))
}

fn small_ols_oracle() -> Check {
    let mut rng = NormalStream::new(9);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let p = uniform_index(&mut rng, 1, 3);
        let n = uniform_index(&mut rng, p + 1, 8);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.next_normal()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let dm = DesignMatrix::from_columns(cols.clone(), (0..p).map(|j| j.to_string()).collect());
        let fit = fit_ols(&dm, &y).map_err(|e| e.to_string())?;
        let oracle = normal_equations_rss(&cols, &y);
        let d = rel_diff(fit.rss, oracle);
        worst = worst.max(d);
        ensure(d <= 1e-8, format!("instance {i}: rss {} vs {oracle}", fit.rss))?;
        let rn = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        for c in &cols {
            let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = c.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
            ensure(dot.abs() <= 1e-8 * cn * rn + 1e-14 * cn, format!("instance {i}: residual not orthogonal"))?;
        }
    }
    Ok(format!("100 instances, max relative rss difference {worst:.1e}; residuals orthogonal"))
}

fn special_functions() -> Check {
    for x in [0.5, 1.0, 4.0] {
        let d = (chisq_upper_tail(x, 2.0).unwrap() - (-x / 2.0f64).exp()).abs();
        ensure(d <= 1e-10, format!("df=2 x={x}: error {d}"))?;
    }
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let x = i as f64 * 0.1;
        let d = (chisq_upper_tail(x, 1.0).unwrap() - chisq1_upper(x)).abs();
        worst = worst.max(d);
        ensure(d <= 1e-10, format!("df=1 x={x}: error {d}"))?;
    }
    for k in [1.0, 2.0, 5.0] {
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let p = chisq_upper_tail(i as f64 * 0.03, k).unwrap();
            ensure(p < prev, format!("k={k} not decreasing at grid point {i}"))?;
            prev = p;
        }
    }
    Ok(format!("df=2 closed form exact; df=1 max error vs erf series {worst:.1e}; monotone on 1000 points"))
}

fn main() {
    let checks: [Criterion; 10] = [
        ("formula algebra", formula_algebra),
        ("contrast exactness", contrast_exactness),
        ("F-test arithmetic", f_test_arithmetic),
        ("information criteria", information_criteria),
        ("chi-square p-value", chisq_p_value),
        ("2x3x5 end-to-end", end_to_end),
        ("same-model pitfall", same_model_pitfall),
        ("contrast-scheme invariance", contrast_invariance),
        ("small-instance OLS oracle", small_ols_oracle),
        ("special-function accuracy", special_functions),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
