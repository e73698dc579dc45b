//! Deterministic two-factor factorial data.
//!
//! Noise comes from a counter-based generator: the `i`-th 64-bit draw for
//! seed `s` is `splitmix64(s + (i + 1) * 0x9E3779B97F4A7C15)`, so any draw
//! can be recomputed on its own. Standard-normal deviate `k` uses draws
//! `2k` and `2k + 1` as `u1, u2 ∈ (0, 1]` in the Box–Muller cosine branch:
//! `z = sqrt(-2 ln u1) cos(2π u2)`.

use thiserror::Error;

use crate::data::{Column, Dataset};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("level and repetition counts must be at least 1")]
    EmptyDimension,
    #[error("beta has {found} entries, expected {expected}")]
    BetaShape { expected: usize, found: usize },
    #[error("noise sd must be finite and >= 0")]
    BadSd,
    #[error("beta entries must be finite")]
    NonFiniteBeta,
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream of uniforms and standard-normal deviates.
#[derive(Debug, Clone)]
pub struct NormalStream {
    seed: u64,
    counter: u64,
}

impl NormalStream {
    pub fn new(seed: u64) -> NormalStream {
        NormalStream { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        splitmix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `(0, 1]` with 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorialSpec {
    pub x_levels: usize,
    pub y_levels: usize,
    pub repetitions: usize,
    /// Cell means, `beta[x][y]`.
    pub beta: Vec<Vec<f64>>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl FactorialSpec {
    /// Builds a spec from cell means listed column-major (all `x` levels of
    /// the first `y` level, then the next `y` level, ...).
    pub fn from_column_major(
        x_levels: usize,
        y_levels: usize,
        repetitions: usize,
        beta: &[f64],
        noise_sd: f64,
        seed: u64,
    ) -> Result<FactorialSpec, SpecError> {
        if x_levels * y_levels != beta.len() {
            return Err(SpecError::BetaShape {
                expected: x_levels * y_levels,
                found: beta.len(),
            });
        }
        let rows = (0..x_levels)
            .map(|i| (0..y_levels).map(|j| beta[j * x_levels + i]).collect())
            .collect();
        let spec = FactorialSpec {
            x_levels,
            y_levels,
            repetitions,
            beta: rows,
            noise_sd,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The 2 × 3 design with 5 replicates and cell means
    /// `[[1, 5, 3], [4, 2, 3]]`; both rows average 3.
    pub fn two_by_three(noise_sd: f64, seed: u64) -> FactorialSpec {
        FactorialSpec::from_column_major(2, 3, 5, &[1.0, 4.0, 5.0, 2.0, 3.0, 3.0], noise_sd, seed)
            .expect("valid constant spec")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.x_levels == 0 || self.y_levels == 0 || self.repetitions == 0 {
            return Err(SpecError::EmptyDimension);
        }
        let found: usize = self.beta.iter().map(Vec::len).sum();
        if self.beta.len() != self.x_levels
            || self.beta.iter().any(|r| r.len() != self.y_levels)
        {
            return Err(SpecError::BetaShape {
                expected: self.x_levels * self.y_levels,
                found,
            });
        }
        if self.beta.iter().flatten().any(|b| !b.is_finite()) {
            return Err(SpecError::NonFiniteBeta);
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(SpecError::BadSd);
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.x_levels * self.y_levels * self.repetitions
    }
}

/// Rows enumerate `(x, y, repetition)` with `x` fastest. Columns: `X` and
/// `Y` factors (levels `x1..`, `y1..`), numeric `repetitions`, numeric
/// `Response = beta[x][y] + sd * z`.
pub fn generate(spec: &FactorialSpec) -> Result<Dataset, SpecError> {
    spec.validate()?;
    let n = spec.n_rows();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut reps = Vec::with_capacity(n);
    let mut response = Vec::with_capacity(n);
    let mut rng = NormalStream::new(spec.seed);
    for r in 0..spec.repetitions {
        for j in 0..spec.y_levels {
            for i in 0..spec.x_levels {
                xs.push(i);
                ys.push(j);
                reps.push((r + 1) as f64);
                let z = rng.next_normal();
                let noise = if spec.noise_sd == 0.0 { 0.0 } else { spec.noise_sd * z };
                response.push(spec.beta[i][j] + noise);
            }
        }
    }
    let labels = |prefix: &str, k: usize| (1..=k).map(|i| format!("{prefix}{i}")).collect();
    let mut ds = Dataset::new();
    let push = |ds: &mut Dataset, name: &str, col: Column| {
        ds.push(name, col).expect("fresh dataset, equal lengths");
    };
    push(
        &mut ds,
        "X",
        Column::Factor {
            levels: labels("x", spec.x_levels),
            codes: xs,
        },
    );
    push(
        &mut ds,
        "Y",
        Column::Factor {
            levels: labels("y", spec.y_levels),
            codes: ys,
        },
    );
    push(&mut ds, "repetitions", Column::Numeric(reps));
    push(&mut ds, "Response", Column::Numeric(response));
    Ok(ds)
}
