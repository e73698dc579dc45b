#![allow(dead_code)]

use mefit_core::datagen::NormalStream;
use mefit_core::{Column, Dataset};

/// Two-factor dataset with `counts[i * y_levels + j]` rows in cell `(i, j)`
/// and response `cell_mean(i, j) + sd * z`.
pub fn two_factor(
    x_levels: usize,
    y_levels: usize,
    counts: &[usize],
    cell_mean: impl Fn(usize, usize) -> f64,
    sd: f64,
    rng: &mut NormalStream,
) -> Dataset {
    let (mut xs, mut ys, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..x_levels {
        for j in 0..y_levels {
            for _ in 0..counts[i * y_levels + j] {
                xs.push(format!("x{}", i + 1));
                ys.push(format!("y{}", j + 1));
                r.push(cell_mean(i, j) + sd * rng.next_normal());
            }
        }
    }
    Dataset::new()
        .with_column("X", Column::factor_from_labels(&xs))
        .unwrap()
        .with_column("Y", Column::factor_from_labels(&ys))
        .unwrap()
        .with_column("R", Column::Numeric(r))
        .unwrap()
}

pub fn uniform_index(rng: &mut NormalStream, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

/// RSS of the least-squares solution obtained from the normal equations
/// `XᵀX b = Xᵀy`, solved by Gauss-Jordan elimination with partial pivoting.
pub fn normal_equations_rss(cols: &[Vec<f64>], y: &[f64]) -> f64 {
    let p = cols.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| dot(&cols[i], &cols[j])).collect();
            row.push(dot(&cols[i], y));
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for k in c..=p {
            a[c][k] /= d;
        }
        for i in 0..p {
            if i != c {
                let f = a[i][c];
                for k in c..=p {
                    a[i][k] -= f * a[c][k];
                }
            }
        }
    }
    let b: Vec<f64> = (0..p).map(|i| a[i][p]).collect();
    (0..y.len())
        .map(|r| {
            let fitted: f64 = (0..p).map(|j| cols[j][r] * b[j]).sum();
            (y[r] - fitted).powi(2)
        })
        .sum()
}

/// `erfc(z)` from the Maclaurin-type series
/// `erf(z) = 2/√π · e^{-z²} · Σ 2ⁿ z^{2n+1} / (1·3·…·(2n+1))`.
pub fn erfc_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * z * z / (2.0 * n + 1.0);
        sum += term;
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum
}

/// Upper tail of χ²(1) at `x` via `2(1 - Φ(√x)) = erfc(√(x/2))`.
pub fn chisq1_upper(x: f64) -> f64 {
    erfc_series((x / 2.0).sqrt())
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
