//! Sine-product identities behind the amplitude-domain eigenvalue inversion.
//!
//! The product of the `2^n - 1` eigenvalues of the Poisson matrix is a
//! constant (the Cartan-matrix sine formula). Grouping the factors by the
//! odd part of their index collapses `8 / lambda_j` into a product of only
//! `n - 1` squared sines, each of which a single `RY` rotation can load onto
//! an amplitude. This module produces those angle sequences and checks the
//! identities numerically.
//!
//! Products with thousands of factors underflow, so every identity is
//! evaluated in the base-2 log domain with compensated summation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QpsError, Result};
use crate::poisson::{eigenvalue_unchecked, MIN_GRID_EXPONENT};

/// Largest `n` accepted by the log-domain identity checks.
pub const MAX_IDENTITY_EXPONENT: usize = 14;

/// Largest `n` accepted by [`inversion_angles`].
pub const MAX_ANGLE_EXPONENT: usize = 60;

/// The constant angle whose squared sine is `1/4`.
pub const CONSTANT_ANGLE: f64 = PI / 6.0;

/// `j = 2^m * i` with `i` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OddFactorization {
    pub j: u64,
    pub m: u32,
    pub i: u64,
}

pub fn odd_factor(j: u64) -> Result<OddFactorization> {
    if j == 0 {
        return Err(QpsError::IndexOutOfRange {
            index: 0,
            min: 1,
            max: u64::MAX,
        });
    }
    let m = j.trailing_zeros();
    Ok(OddFactorization { j, m, i: j >> m })
}

/// Rotation half-angles whose squared-sine product equals `8 / lambda_j`.
///
/// `angles[t]` is destined for the `t`-th qubit pair of the inversion
/// register: the first `m` entries are [`CONSTANT_ANGLE`], then the `k`-terms
/// follow for `k = n - m` down to `2`, so pair `t >= m` always carries the
/// term with `k = n - t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSequence {
    pub n: usize,
    pub j: u64,
    pub m: u32,
    pub angles: Vec<f64>,
}

/// `|2^k - (i mod 2^(k+1))|` for odd `i`; always in `[1, 2^k - 1]`.
pub fn angle_numerator(i: u64, k: u32) -> u64 {
    let residue = i & ((1u64 << (k + 1)) - 1);
    (1u64 << k).abs_diff(residue)
}

/// Angle of the `k`-term for odd part `i`.
pub fn term_angle(i: u64, k: u32) -> f64 {
    angle_numerator(i, k) as f64 / (1u64 << (k + 1)) as f64 * PI
}

pub fn inversion_angles(n: usize, j: u64) -> Result<AngleSequence> {
    if !(MIN_GRID_EXPONENT..=MAX_ANGLE_EXPONENT).contains(&n) {
        return Err(QpsError::GridExponent {
            n,
            min: MIN_GRID_EXPONENT,
            max: MAX_ANGLE_EXPONENT,
        });
    }
    let max = (1u64 << n) - 1;
    if j == 0 || j > max {
        return Err(QpsError::IndexOutOfRange { index: j, min: 1, max });
    }
    let OddFactorization { m, i, .. } = odd_factor(j)?;
    let mut angles = Vec::with_capacity(n - 1);
    angles.extend(std::iter::repeat_n(CONSTANT_ANGLE, m as usize));
    // Empty when m = n - 1, i.e. j = 2^(n-1).
    for k in (2..=(n as u32 - m)).rev() {
        angles.push(term_angle(i, k));
    }
    debug_assert_eq!(angles.len(), n - 1);
    Ok(AngleSequence { n, j, m, angles })
}

/// `(prod_t sin(angles[t]))^2`.
pub fn inversion_value(seq: &AngleSequence) -> f64 {
    let p: f64 = seq.angles.iter().map(|a| a.sin()).product();
    p * p
}

/// Relative error of [`inversion_value`] against the closed-form `8 / lambda_j`.
pub fn inversion_relative_error(n: usize, j: u64) -> Result<f64> {
    let seq = inversion_angles(n, j)?;
    let expected = 8.0 / eigenvalue_unchecked(n, j as usize);
    Ok((inversion_value(&seq) - expected).abs() / expected)
}

fn check_identity_exponent(n: usize) -> Result<()> {
    if !(1..=MAX_IDENTITY_EXPONENT).contains(&n) {
        return Err(QpsError::GridExponent {
            n,
            min: 1,
            max: MAX_IDENTITY_EXPONENT,
        });
    }
    Ok(())
}

/// Absolute log2 residual of
/// `2^(2^(n+1) - 2) prod_{j=1}^{2^n - 1} sin^2(j pi / 2^(n+1)) = 2^n`.
pub fn sine_formula_residual(n: usize) -> Result<f64> {
    check_identity_exponent(n)?;
    let denom = (1u64 << (n + 1)) as f64;
    let mut sum = NeumaierSum::default();
    // Integer part of the exponents is exact in f64.
    sum.add(((1u64 << (n + 1)) - 2) as f64 - n as f64);
    for j in 1..(1u64 << n) {
        sum.add(2.0 * (j as f64 * PI / denom).sin().log2());
    }
    Ok(sum.value().abs())
}

/// Absolute log2 residual of the odd-layer regrouping
/// `prod_{k=1}^{n} prod_{j=1}^{2^(k-1)} sin^2((2j - 1) pi / 2^(k+1)) = 2^(n + 2 - 2^(n+1))`.
pub fn odd_layer_residual(n: usize) -> Result<f64> {
    check_identity_exponent(n)?;
    let mut sum = NeumaierSum::default();
    sum.add(((1u64 << (n + 1)) - 2) as f64 - n as f64);
    for k in 1..=n {
        let denom = (1u64 << (k + 1)) as f64;
        for j in 1..=(1u64 << (k - 1)) {
            sum.add(2.0 * ((2 * j - 1) as f64 * PI / denom).sin().log2());
        }
    }
    Ok(sum.value().abs())
}

/// Angular coefficients `j / 2^(n+1)` of the full product, as reduced
/// `(numerator, denominator)` pairs, sorted.
pub fn cartan_coefficients(n: usize) -> Vec<(u64, u64)> {
    let mut v: Vec<_> = (1..(1u64 << n)).map(|j| reduce(j, 1u64 << (n + 1))).collect();
    v.sort_unstable();
    v
}

/// Odd coefficients `(2j - 1) / 2^(k+1)` of layers `k = 1..n`, reduced and
/// sorted.
pub fn odd_layer_coefficients(n: usize) -> Vec<(u64, u64)> {
    let mut v: Vec<_> = (1..=n)
        .flat_map(|k| (1..=(1u64 << (k - 1))).map(move |j| reduce(2 * j - 1, 1u64 << (k + 1))))
        .collect();
    v.sort_unstable();
    v
}

fn reduce(num: u64, den: u64) -> (u64, u64) {
    let s = num.trailing_zeros().min(den.trailing_zeros());
    (num >> s, den >> s)
}

#[derive(Default)]
struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_factor_examples() {
        assert_eq!(odd_factor(1).unwrap(), OddFactorization { j: 1, m: 0, i: 1 });
        assert_eq!(odd_factor(12).unwrap(), OddFactorization { j: 12, m: 2, i: 3 });
        for n in 2..10u32 {
            let f = odd_factor(1 << (n - 1)).unwrap();
            assert_eq!((f.m, f.i), (n - 1, 1));
        }
        assert!(odd_factor(0).is_err());
    }

    #[test]
    fn sine_formula_small_cases() {
        // Zero up to the rounding of sin(pi/4).
        assert!(sine_formula_residual(1).unwrap() <= 1e-15);
        // Direct evaluation for n = 2.
        let direct = 64.0 * (PI / 8.0).sin().powi(2) * (PI / 4.0).sin().powi(2) * (3.0 * PI / 8.0).sin().powi(2);
        assert!((direct - 4.0).abs() <= 1e-12);
        assert!(sine_formula_residual(2).unwrap() <= 1e-12);
        assert!(sine_formula_residual(12).unwrap() <= 1e-9);
        assert!(sine_formula_residual(0).is_err());
        assert!(sine_formula_residual(15).is_err());
    }

    #[test]
    fn odd_layer_small_cases() {
        assert!(odd_layer_residual(1).unwrap() <= 1e-15);
        assert!(odd_layer_residual(4).unwrap() <= 1e-12);
        assert!(odd_layer_residual(10).unwrap() <= 1e-10);
    }

    #[test]
    fn layer_multisets_agree() {
        for n in 1..=10 {
            assert_eq!(cartan_coefficients(n), odd_layer_coefficients(n), "n = {n}");
        }
        // n = 2: {1/8, 1/4, 3/8}
        assert_eq!(cartan_coefficients(2), vec![(1, 4), (1, 8), (3, 8)]);
    }

    #[test]
    fn angle_examples() {
        let s = inversion_angles(2, 1).unwrap();
        assert_eq!(s.m, 0);
        assert_eq!(s.angles, vec![3.0 * PI / 8.0]);
        let lambda1 = 64.0 * (PI / 8.0).sin().powi(2);
        assert!((inversion_value(&s) - 8.0 / lambda1).abs() <= 1e-12);
        assert!((inversion_value(&s) - 0.853553).abs() <= 1e-6);

        let s = inversion_angles(3, 2).unwrap();
        assert_eq!(s.m, 1);
        assert_eq!(s.angles, vec![PI / 6.0, 3.0 * PI / 8.0]);
        let lambda2 = 256.0 * (PI / 8.0).sin().powi(2);
        assert!((inversion_value(&s) - 8.0 / lambda2).abs() <= 1e-12 * 8.0 / lambda2);
        assert!((inversion_value(&s) - 0.213388).abs() <= 1e-6);

        let s = inversion_angles(3, 4).unwrap();
        assert_eq!(s.m, 2);
        assert_eq!(s.angles, vec![PI / 6.0, PI / 6.0]);
        assert!((inversion_value(&s) - 1.0 / 16.0).abs() <= 1e-15);

        let s = inversion_angles(2, 3).unwrap();
        let lambda3 = 64.0 * (3.0 * PI / 8.0).sin().powi(2);
        assert!((inversion_value(&s) - 8.0 / lambda3).abs() <= 1e-12);
        assert!((inversion_value(&s) - 0.146447).abs() <= 1e-6);
    }

    #[test]
    fn all_constant_sequence() {
        for n in 2..=12 {
            let s = inversion_angles(n, 1 << (n - 1)).unwrap();
            assert_eq!(s.angles.len(), n - 1);
            assert!(s.angles.iter().all(|&a| a == CONSTANT_ANGLE));
            let expected = 4f64.powi(-(n as i32 - 1));
            // sin(pi/6) is one ulp below 1/2 in binary.
            assert!((inversion_value(&s) - expected).abs() <= 1e-14 * expected);
        }
    }

    #[test]
    fn angle_range_errors() {
        assert!(inversion_angles(1, 1).is_err());
        assert!(inversion_angles(3, 0).is_err());
        assert!(inversion_angles(3, 8).is_err());
    }

    #[test]
    fn numerator_range() {
        for k in 2..12u32 {
            for i in (1..(1u64 << (k + 2))).step_by(2) {
                let a = angle_numerator(i, k);
                assert!((1..(1u64 << k)).contains(&a));
            }
        }
    }
}
