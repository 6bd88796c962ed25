//! Finite-difference model of the 1D Dirichlet Poisson problem
//!
//! `-v''(x) = b(x)` on `(0, 1)` with `v(0) = v(1) = 0`, sampled on the
//! interior grid `x_i = i / N`, `i = 1..N-1`, `N = 2^n`. The central
//! difference stencil turns it into the tridiagonal Toeplitz system
//! `N^2 * tridiag(-1, 2, -1) v = b`, whose eigenpairs are known in closed
//! form. Everything here is classical and serves as the oracle for the
//! circuit results.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QpsError, Result};

/// Smallest supported grid exponent. The inversion normalisation constant 8
/// only bounds the spectrum from below once `n >= 2`.
pub const MIN_GRID_EXPONENT: usize = 2;

/// Relative residual accepted from [`solve_classical`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// A sampled Poisson right-hand side on a grid of `2^n` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonProblem {
    n: usize,
    b: Vec<f64>,
    source_label: Option<String>,
}

impl PoissonProblem {
    pub fn new(n: usize, b: Vec<f64>) -> Result<Self> {
        check_grid_exponent(n)?;
        let expected = (1usize << n) - 1;
        if b.len() != expected {
            return Err(QpsError::LengthMismatch {
                expected,
                found: b.len(),
            });
        }
        Ok(Self {
            n,
            b,
            source_label: None,
        })
    }

    pub fn from_preset(preset: Preset, n: usize) -> Result<Self> {
        check_grid_exponent(n)?;
        let mut problem = Self::new(n, preset.samples(n))?;
        problem.source_label = Some(preset.to_string());
        Ok(problem)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid intervals `N = 2^n`.
    pub fn grid_count(&self) -> usize {
        1 << self.n
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn source_label(&self) -> Option<&str> {
        self.source_label.as_deref()
    }
}

fn check_grid_exponent(n: usize) -> Result<()> {
    // 2^n - 1 interior points must stay addressable.
    const MAX: usize = 30;
    if !(MIN_GRID_EXPONENT..=MAX).contains(&n) {
        return Err(QpsError::GridExponent {
            n,
            min: MIN_GRID_EXPONENT,
            max: MAX,
        });
    }
    Ok(())
}

/// The matrix `scale * tridiag(-1, 2, -1)` of size `(N-1) x (N-1)` with
/// `scale = N^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalSystem {
    grid: usize,
    scale: f64,
}

impl TridiagonalSystem {
    /// Builds the system for an arbitrary grid count `N >= 2`. Unlike
    /// [`discretize`] this does not require `N` to be a power of two with
    /// exponent at least 2; it exists for the small edge cases in tests.
    pub fn with_grid(grid: usize) -> Result<Self> {
        if grid < 2 {
            return Err(QpsError::InvalidConfig(format!(
                "grid count {grid} leaves no interior points"
            )));
        }
        let g = grid as f64;
        Ok(Self { grid, scale: g * g })
    }

    pub fn grid_count(&self) -> usize {
        self.grid
    }

    /// Matrix dimension `N - 1`.
    pub fn dim(&self) -> usize {
        self.grid - 1
    }

    /// `h^-2 = N^2`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.scale
    }

    pub fn off_diagonal(&self) -> f64 {
        -self.scale
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim();
        if v.len() != dim {
            return Err(QpsError::LengthMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let (d, o) = (self.diagonal(), self.off_diagonal());
        Ok((0..dim)
            .map(|i| {
                let mut acc = d * v[i];
                if i > 0 {
                    acc += o * v[i - 1];
                }
                if i + 1 < dim {
                    acc += o * v[i + 1];
                }
                acc
            })
            .collect())
    }

    /// Row-major dense copy of the matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| match i.abs_diff(j) {
                        0 => self.diagonal(),
                        1 => self.off_diagonal(),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn discretize(problem: &PoissonProblem) -> Result<TridiagonalSystem> {
    check_grid_exponent(problem.n)?;
    TridiagonalSystem::with_grid(problem.grid_count())
}

/// One eigenpair of the `2^n`-grid system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub j: usize,
    pub lambda: f64,
    pub u: Vec<f64>,
}

fn check_eigen_index(n: usize, j: usize) -> Result<()> {
    let max = (1u64 << n) - 1;
    if j == 0 || j as u64 > max {
        return Err(QpsError::IndexOutOfRange {
            index: j as u64,
            min: 1,
            max,
        });
    }
    Ok(())
}

/// Closed-form eigenvalue `4 N^2 sin^2(j pi / 2N)`.
pub fn eigenvalue(n: usize, j: usize) -> Result<f64> {
    check_grid_exponent(n)?;
    check_eigen_index(n, j)?;
    Ok(eigenvalue_unchecked(n, j))
}

pub(crate) fn eigenvalue_unchecked(n: usize, j: usize) -> f64 {
    let grid = (1u64 << n) as f64;
    let s = (j as f64 * PI / (2.0 * grid)).sin();
    4.0 * grid * grid * s * s
}

/// Closed-form eigenpair: `u(k) = sqrt(2/N) sin(j pi k / N)`, `k = 1..N-1`.
pub fn eigenpair(n: usize, j: usize) -> Result<EigenPair> {
    let lambda = eigenvalue(n, j)?;
    Ok(EigenPair {
        j,
        lambda,
        u: eigenvector_unchecked(n, j),
    })
}

pub(crate) fn eigenvector_unchecked(n: usize, j: usize) -> Vec<f64> {
    let grid = 1usize << n;
    let g = grid as f64;
    let norm = (2.0 / g).sqrt();
    (1..grid)
        .map(|k| norm * (((j * k) % (2 * grid)) as f64 * PI / g).sin())
        .collect()
}

/// Direct tridiagonal elimination (Thomas algorithm).
pub fn solve_classical(system: &TridiagonalSystem, b: &[f64]) -> Result<Vec<f64>> {
    let dim = system.dim();
    if b.len() != dim {
        return Err(QpsError::LengthMismatch {
            expected: dim,
            found: b.len(),
        });
    }
    let (diag, off) = (system.diagonal(), system.off_diagonal());

    // Forward sweep: c' holds the modified super-diagonal, x the modified rhs.
    let mut c_prime = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut denom = diag;
    c_prime[0] = off / denom;
    x[0] = b[0] / denom;
    for i in 1..dim {
        denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        x[i] = (b[i] - off * x[i - 1]) / denom;
    }
    for i in (0..dim.saturating_sub(1)).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }

    let r = system.matvec(&x)?;
    let residual = l2_norm(&r.iter().zip(b).map(|(a, c)| a - c).collect::<Vec<_>>());
    if residual > SOLVE_TOLERANCE * l2_norm(b) {
        return Err(QpsError::ResidualTooLarge { residual });
    }
    Ok(x)
}

/// `sum_j (<u_j, b> / lambda_j) u_j`, evaluated densely in `O(N^2)`.
pub fn spectral_solve(n: usize, b: &[f64]) -> Result<Vec<f64>> {
    check_grid_exponent(n)?;
    let dim = (1usize << n) - 1;
    if b.len() != dim {
        return Err(QpsError::LengthMismatch {
            expected: dim,
            found: b.len(),
        });
    }
    let mut v = vec![0.0; dim];
    for j in 1..=dim {
        let u = eigenvector_unchecked(n, j);
        let beta: f64 = u.iter().zip(b).map(|(a, c)| a * c).sum();
        let coeff = beta / eigenvalue_unchecked(n, j);
        for (vk, uk) in v.iter_mut().zip(&u) {
            *vk += coeff * uk;
        }
    }
    Ok(v)
}

/// Named right-hand sides sampled at `x_i = i / N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `pi^2 sin(pi x)`, exact solution `sin(pi x)`.
    Sin,
    /// `1`, exact solution `x (1 - x) / 2`.
    Const,
    /// `x`, exact solution `(x - x^3) / 6`.
    Ramp,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Sin, Preset::Const, Preset::Ramp];

    pub fn samples(self, n: usize) -> Vec<f64> {
        let case = self.analytic_case();
        grid_points(n).map(case.rhs).collect()
    }

    pub fn analytic_case(self) -> AnalyticCase {
        match self {
            Preset::Sin => AnalyticCase {
                rhs: |x| PI * PI * (PI * x).sin(),
                solution: |x| (PI * x).sin(),
            },
            Preset::Const => AnalyticCase {
                rhs: |_| 1.0,
                solution: |x| 0.5 * x * (1.0 - x),
            },
            Preset::Ramp => AnalyticCase {
                rhs: |x| x,
                solution: |x| (x - x * x * x) / 6.0,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Sin => "sin",
            Preset::Const => "const",
            Preset::Ramp => "ramp",
        })
    }
}

impl FromStr for Preset {
    type Err = QpsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(Preset::Sin),
            "const" => Ok(Preset::Const),
            "ramp" => Ok(Preset::Ramp),
            other => Err(QpsError::InvalidConfig(format!(
                "unknown preset {other:?} (expected sin, const or ramp)"
            ))),
        }
    }
}

/// A source term together with the exact solution of the continuous problem.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticCase {
    pub rhs: fn(f64) -> f64,
    pub solution: fn(f64) -> f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub n: usize,
    pub max_error: f64,
}

/// Max-norm error of the discrete solution against the analytic one at the
/// grid points, for each `n`.
pub fn truncation_study(case: &AnalyticCase, n_list: &[usize]) -> Result<Vec<TruncationRow>> {
    n_list
        .iter()
        .map(|&n| {
            check_grid_exponent(n)?;
            let b: Vec<f64> = grid_points(n).map(case.rhs).collect();
            let system = TridiagonalSystem::with_grid(1 << n)?;
            let v = if b.iter().all(|&x| x == 0.0) {
                vec![0.0; b.len()]
            } else {
                solve_classical(&system, &b)?
            };
            let max_error = grid_points(n)
                .zip(&v)
                .map(|(x, vi)| ((case.solution)(x) - vi).abs())
                .fold(0.0, f64::max);
            Ok(TruncationRow { n, max_error })
        })
        .collect()
}

/// Interior grid points `i / 2^n`, `i = 1..2^n - 1`.
pub fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    let grid = 1usize << n;
    (1..grid).map(move |i| i as f64 / grid as f64)
}

/// Reproducible random right-hand side with entries uniform in `[-1, 1)`.
pub fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = (1usize << n) - 1;
    loop {
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if b.iter().any(|&x| x != 0.0) {
            return b;
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `v` to unit Euclidean norm; `None` for the zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let norm = l2_norm(v);
    (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
}
