//! Self-check suites shared by the `verify` command and the test targets.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{QpsError, Result};
use crate::identities::{inversion_relative_error, odd_layer_residual, sine_formula_residual, MAX_IDENTITY_EXPONENT};
use crate::poisson::{eigenvalue, l2_norm, normalized, random_rhs, solve_classical, TridiagonalSystem};
use crate::qps::{
    build_inversion_parallel, build_inversion_serial, build_qps, negate_rotation, run_pipeline, Mode, PipelineRun,
    QpsConfig, QpsLayout, RyConstruction,
};
use crate::simulator::{fidelity, StateVector};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const INVERSION_TOLERANCE: f64 = 1e-12;
pub const AMPLITUDE_TOLERANCE: f64 = 1e-12;
pub const FIDELITY_TOLERANCE: f64 = 1e-10;
pub const PROBABILITY_TOLERANCE: f64 = 1e-10;
pub const LEAKAGE_TOLERANCE: f64 = 1e-12;

/// Largest `n` the simulation suites accept (serial layouts are `3n` qubits).
pub const MAX_VERIFY_EXPONENT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Random right-hand sides per `n` for the sampled suites.
    pub samples: usize,
    /// Negate the first rotation of every circuit under test.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 4,
            seed: 0,
            samples: 10,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub n: usize,
    pub passed: bool,
    /// Worst deviation seen; compared against `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<28} n={:<2} worst={:.3e} tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check,
            self.n,
            self.worst,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, check: &str, n: usize, worst: f64, tolerance: f64) {
        self.checks.push(CheckOutcome {
            check: check.to_string(),
            n,
            // NaN never passes.
            passed: worst <= tolerance,
            worst,
            tolerance,
        });
    }
}

pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.n_min < 2 || opts.n_min > opts.n_max || opts.n_max > MAX_VERIFY_EXPONENT {
        return Err(QpsError::InvalidConfig(format!(
            "verify range {}..={} must lie within 2..={MAX_VERIFY_EXPONENT}",
            opts.n_min, opts.n_max
        )));
    }
    let mut report = VerifyReport::default();
    for n in opts.n_min..=opts.n_max {
        identity_checks(&mut report, n)?;
        amplitude_audit(&mut report, n, opts.inject_fault)?;
        equivalence_checks(&mut report, n, opts)?;
        end_to_end_checks(&mut report, n, opts)?;
    }
    Ok(report)
}

fn identity_checks(report: &mut VerifyReport, n: usize) -> Result<()> {
    if n <= MAX_IDENTITY_EXPONENT {
        report.record("sine-formula", n, sine_formula_residual(n)?, IDENTITY_TOLERANCE);
        report.record("odd-layer", n, odd_layer_residual(n)?, IDENTITY_TOLERANCE);
    }
    report.record("inversion-identity", n, max_inversion_error(n)?, INVERSION_TOLERANCE);
    Ok(())
}

/// Largest relative error of the angle product against `8 / lambda_j`
/// over every `j`.
pub fn max_inversion_error(n: usize) -> Result<f64> {
    (1..(1u64 << n))
        .into_par_iter()
        .map(|j| inversion_relative_error(n, j))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn maybe_fault(mut circuit: Circuit, fault: bool) -> Circuit {
    if fault {
        negate_rotation(&mut circuit, 0);
    }
    circuit
}

/// Largest `|amp(E = 1...1) - 8 / lambda_j|` over basis inputs `|j>` after
/// the inversion stage alone.
pub fn inversion_amplitude_error(layout: &QpsLayout, inversion: &Circuit) -> Result<f64> {
    let n = layout.n;
    let e_ones = (((1u64 << layout.e.width) - 1) << layout.e.offset) as usize;
    (1..(1usize << n))
        .into_par_iter()
        .map(|j| {
            let mut basis = vec![Complex64::new(0.0, 0.0); 1 << n];
            basis[j] = Complex64::new(1.0, 0.0);
            let mut state = StateVector::new(layout.num_qubits())?.inject_register(&layout.b, &basis)?;
            state.apply(inversion)?;
            let amp = state.amplitudes()[j | e_ones];
            Ok((amp - 8.0 / eigenvalue(n, j)?).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn amplitude_audit(report: &mut VerifyReport, n: usize, fault: bool) -> Result<()> {
    let serial = QpsLayout::serial(n)?;
    for (name, ry) in [
        ("amplitude-audit/semantic", RyConstruction::Semantic),
        ("amplitude-audit/bitwise", RyConstruction::Bitwise),
    ] {
        let circuit = maybe_fault(build_inversion_serial(&serial, ry)?, fault);
        report.record(
            name,
            n,
            inversion_amplitude_error(&serial, &circuit)?,
            AMPLITUDE_TOLERANCE,
        );
    }
    if n >= 3 {
        let parallel = QpsLayout::parallel(n)?;
        let circuit = maybe_fault(build_inversion_parallel(&parallel)?, fault);
        report.record(
            "amplitude-audit/parallel",
            n,
            inversion_amplitude_error(&parallel, &circuit)?,
            AMPLITUDE_TOLERANCE,
        );
    }
    Ok(())
}

/// Right-hand sides for comparisons: every basis vector for `n <= 3`,
/// then `samples` seeded random vectors.
fn test_inputs(n: usize, opts: &VerifyOptions) -> Vec<Vec<f64>> {
    let dim = (1usize << n) - 1;
    let mut inputs = Vec::new();
    if n <= 3 {
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            inputs.push(e);
        }
    }
    for s in 0..opts.samples {
        let b = random_rhs(n, sample_seed(opts.seed, n, s));
        inputs.push(normalized(&b).expect("random right-hand sides are non-zero"));
    }
    inputs
}

fn sample_seed(seed: u64, n: usize, sample: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((n as u64) << 32) ^ sample as u64
}

struct Construction {
    layout: QpsLayout,
    circuit: Circuit,
}

impl Construction {
    fn new(config: QpsConfig, fault: bool) -> Result<Self> {
        Ok(Self {
            layout: QpsLayout::new(config.n, config.mode)?,
            circuit: maybe_fault(build_qps(&config)?, fault),
        })
    }

    fn run(&self, b_hat: &[f64]) -> Result<PipelineRun> {
        run_pipeline(&self.layout, &self.circuit, b_hat)
    }
}

/// `1 - fidelity` and probability gap between two constructions, worst
/// over `inputs`, plus the worst C leakage seen on `other`.
fn compare(reference: &Construction, other: &Construction, inputs: &[Vec<f64>]) -> Result<(f64, f64, f64)> {
    inputs
        .par_iter()
        .map(|b| {
            let a = reference.run(b)?;
            let c = other.run(b)?;
            Ok((
                1.0 - fidelity(&a.b_state, &c.b_state)?,
                (a.probability - c.probability).abs(),
                c.leakage,
            ))
        })
        .try_reduce(
            || (0.0, 0.0, 0.0),
            |x, y| Ok((x.0.max(y.0), x.1.max(y.1), x.2.max(y.2))),
        )
}

fn equivalence_checks(report: &mut VerifyReport, n: usize, opts: &VerifyOptions) -> Result<()> {
    let inputs = test_inputs(n, opts);
    let semantic = Construction::new(QpsConfig::new(n).with_ry(RyConstruction::Semantic), false)?;
    let bitwise = Construction::new(QpsConfig::new(n), opts.inject_fault)?;
    let (infidelity, gap, _) = compare(&semantic, &bitwise, &inputs)?;
    report.record("equivalence/semantic-bitwise", n, infidelity, FIDELITY_TOLERANCE);
    report.record("equivalence/probability", n, gap, PROBABILITY_TOLERANCE);
    if n >= 3 {
        let parallel = Construction::new(QpsConfig::new(n).with_mode(Mode::Parallel), opts.inject_fault)?;
        let (infidelity, gap, leakage) = compare(&semantic, &parallel, &inputs)?;
        report.record("equivalence/serial-parallel", n, infidelity, FIDELITY_TOLERANCE);
        report.record("equivalence/parallel-probability", n, gap, PROBABILITY_TOLERANCE);
        report.record("c-register-leakage", n, leakage, LEAKAGE_TOLERANCE);
    }
    Ok(())
}

/// `64 ||A^-1 b_hat||^2`, the postselection probability predicted by the
/// classical solve.
pub fn predicted_success_probability(n: usize, b_hat: &[f64]) -> Result<f64> {
    let system = TridiagonalSystem::with_grid(1 << n)?;
    let v = solve_classical(&system, b_hat)?;
    Ok(64.0 * l2_norm(&v).powi(2))
}

fn end_to_end_checks(report: &mut VerifyReport, n: usize, opts: &VerifyOptions) -> Result<()> {
    let construction = Construction::new(QpsConfig::new(n), opts.inject_fault)?;
    let system = TridiagonalSystem::with_grid(1 << n)?;
    let inputs: Vec<Vec<f64>> = (0..opts.samples.max(1))
        .map(|s| {
            let b = random_rhs(n, sample_seed(opts.seed.wrapping_add(1), n, s));
            normalized(&b).expect("random right-hand sides are non-zero")
        })
        .collect();
    let (infidelity, gap) = inputs
        .par_iter()
        .map(|b| {
            let run = construction.run(b)?;
            let reference = normalized(&solve_classical(&system, b)?).ok_or(QpsError::ZeroRightHandSide)?;
            let reference: Vec<Complex64> = reference.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let infidelity = 1.0 - fidelity(&run.b_state[1..], &reference)?;
            let gap = (run.probability - predicted_success_probability(n, b)?).abs();
            Ok((infidelity, gap))
        })
        .try_reduce(|| (0.0, 0.0), |x, y| Ok((x.0.max(y.0), x.1.max(y.1))))?;
    report.record("end-to-end-fidelity", n, infidelity, FIDELITY_TOLERANCE);
    report.record("success-probability", n, gap, PROBABILITY_TOLERANCE);
    Ok(())
}
