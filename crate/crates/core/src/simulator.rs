//! Dense statevector simulation.
//!
//! Gate kernels enumerate only the basis indices whose control bits match,
//! so a gate with `c` controls on a `q`-qubit state touches `2^(q - c)`
//! amplitudes. Large sweeps are split over rayon workers by fixing the
//! highest free index bits; every amplitude is updated by exactly one worker
//! with the same arithmetic, so results are bit-identical for any thread
//! count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind, Polarity, QubitRegister};
use crate::error::{QpsError, Result};

/// Postselection outcomes below this probability are reported impossible.
pub const POSTSELECT_FLOOR: f64 = 1e-12;

/// Largest unitary block the simulator applies densely.
pub const MAX_BLOCK_QUBITS: usize = 12;

/// Largest simulated state (2^30 amplitudes is 16 GiB).
pub const MAX_QUBITS: usize = 30;

/// Mass tolerated outside the fixed assignment in [`StateVector::extract_register`].
pub const FACTOR_TOLERANCE: f64 = 1e-10;

const PARALLEL_MIN_FREE_BITS: u32 = 14;
const PARALLEL_SPLIT_BITS: u32 = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostselectResult {
    pub probability: f64,
    pub state: StateVector,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(QpsError::InvalidConfig(format!(
                "{num_qubits} qubits exceed the simulator limit of {MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Normalises `amplitudes`, whose length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(QpsError::InvalidConfig(format!(
                "amplitude vector length {len} is not a supported power of two"
            )));
        }
        let norm = complex_norm(&amplitudes);
        if norm == 0.0 {
            return Err(QpsError::ZeroVector);
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        complex_norm(&self.amplitudes)
    }

    /// Probability that `qubit` reads `bit`.
    pub fn probability(&self, qubit: usize, bit: bool) -> f64 {
        let want = if bit { 1 } else { 0 };
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> qubit) & 1 == want)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Loads `amplitudes` (normalised here) into `register`, which must be
    /// in `|0...0>`. Other registers keep their state.
    pub fn inject_register(&self, register: &QubitRegister, amplitudes: &[Complex64]) -> Result<Self> {
        let width = register.width;
        if amplitudes.len() != 1 << width {
            return Err(QpsError::LengthMismatch {
                expected: 1 << width,
                found: amplitudes.len(),
            });
        }
        if register.offset + width > self.num_qubits {
            return Err(QpsError::QubitOutOfBounds {
                qubit: register.offset + width - 1,
                num_qubits: self.num_qubits,
            });
        }
        let norm = complex_norm(amplitudes);
        if norm == 0.0 {
            return Err(QpsError::ZeroVector);
        }
        let mask = register.mask() as usize;
        let excited: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if excited > POSTSELECT_FLOOR {
            return Err(QpsError::RegisterNotGround {
                register: register.name.to_string(),
            });
        }
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (i, rest) in self.amplitudes.iter().enumerate() {
            if i & mask != 0 || *rest == ZERO {
                continue;
            }
            for (x, a) in amplitudes.iter().enumerate() {
                out[i | (x << register.offset)] = rest * (a / norm);
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Real-valued convenience wrapper around [`Self::inject_register`].
    pub fn inject_real(&self, register: &QubitRegister, amplitudes: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inject_register(register, &v)
    }

    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(QpsError::LengthMismatch {
                expected: self.num_qubits,
                found: circuit.num_qubits(),
            });
        }
        for gate in circuit.gates() {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let (ctrl_mask, ctrl_value) = control_pattern(gate);
        match &gate.kind {
            GateKind::RotY(angle) => {
                let (s, c) = (angle / 2.0).sin_cos();
                for &t in &gate.targets {
                    self.single_qubit_kernel(t, ctrl_mask, ctrl_value, |a0, a1| (c * a0 - s * a1, s * a0 + c * a1));
                }
            }
            GateKind::PauliX | GateKind::ControlledNot => {
                for &t in &gate.targets {
                    self.single_qubit_kernel(t, ctrl_mask, ctrl_value, |a0, a1| (a1, a0));
                }
            }
            GateKind::UnitaryBlock(block) => {
                if block.num_qubits() > MAX_BLOCK_QUBITS {
                    return Err(QpsError::InvalidGate(format!(
                        "block {} has {} qubits; at most {MAX_BLOCK_QUBITS} can be simulated",
                        block.label(),
                        block.num_qubits()
                    )));
                }
                self.block_kernel(&gate.targets, block.matrix(), ctrl_mask, ctrl_value);
            }
        }
        Ok(())
    }

    fn single_qubit_kernel<F>(&mut self, target: usize, ctrl_mask: u64, ctrl_value: u64, op: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64) + Sync,
    {
        let tbit = 1usize << target;
        let ptr = AmpPtr(self.amplitudes.as_mut_ptr());
        for_each_base(
            self.num_qubits,
            ctrl_mask | tbit as u64,
            ctrl_value,
            || (),
            |_, base| {
                let i0 = base as usize;
                let i1 = i0 | tbit;
                // SAFETY: for_each_base visits each base once and bases with
                // distinct free bits never share i0 or i1.
                unsafe {
                    let (a0, a1) = (ptr.read(i0), ptr.read(i1));
                    let (b0, b1) = op(a0, a1);
                    ptr.write(i0, b0);
                    ptr.write(i1, b1);
                }
            },
        );
    }

    fn block_kernel(&mut self, targets: &[usize], matrix: &[Complex64], ctrl_mask: u64, ctrl_value: u64) {
        let dim = 1usize << targets.len();
        let offsets: Vec<usize> = (0..dim)
            .map(|x| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| (x >> b) & 1 == 1)
                    .map(|(_, &t)| 1usize << t)
                    .sum()
            })
            .collect();
        let target_mask = offsets[dim - 1] as u64;
        let ptr = AmpPtr(self.amplitudes.as_mut_ptr());
        for_each_base(
            self.num_qubits,
            ctrl_mask | target_mask,
            ctrl_value,
            || (vec![ZERO; dim], vec![ZERO; dim]),
            |(input, output), base| {
                let base = base as usize;
                // SAFETY: the index sets {base | offset} of distinct bases are disjoint.
                unsafe {
                    for (v, off) in input.iter_mut().zip(&offsets) {
                        *v = ptr.read(base | off);
                    }
                    for (r, out) in output.iter_mut().enumerate() {
                        let row = &matrix[r * dim..(r + 1) * dim];
                        *out = row.iter().zip(input.iter()).map(|(m, v)| m * v).sum();
                    }
                    for (v, off) in output.iter().zip(&offsets) {
                        ptr.write(base | off, *v);
                    }
                }
            },
        );
    }

    /// Projects onto `qubits == outcome` and renormalises.
    pub fn postselect(&self, qubits: &[usize], outcome: &[bool]) -> Result<PostselectResult> {
        self.postselect_with_floor(qubits, outcome, POSTSELECT_FLOOR)
    }

    pub fn postselect_with_floor(&self, qubits: &[usize], outcome: &[bool], floor: f64) -> Result<PostselectResult> {
        if qubits.len() != outcome.len() {
            return Err(QpsError::LengthMismatch {
                expected: qubits.len(),
                found: outcome.len(),
            });
        }
        let (mut mask, mut value) = (0usize, 0usize);
        for (&q, &bit) in qubits.iter().zip(outcome) {
            if q >= self.num_qubits {
                return Err(QpsError::QubitOutOfBounds {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            mask |= 1 << q;
            if bit {
                value |= 1 << q;
            }
        }
        let probability: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if probability < floor {
            return Err(QpsError::PostselectionImpossible { probability });
        }
        let scale = probability.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == value { a / scale } else { ZERO })
            .collect();
        Ok(PostselectResult {
            probability,
            state: StateVector {
                num_qubits: self.num_qubits,
                amplitudes,
            },
        })
    }

    /// Amplitudes of `register` with every other register pinned: registers
    /// listed in `fixed` to the given value, all others to zero. Fails when
    /// more than [`FACTOR_TOLERANCE`] of the mass lies outside the pinned
    /// assignment.
    pub fn extract_register(
        &self,
        register: &QubitRegister,
        fixed: &[(&QubitRegister, u64)],
    ) -> Result<Vec<Complex64>> {
        let full = if self.num_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_qubits) - 1
        };
        let other_mask = full & !register.mask();
        let mut value = 0u64;
        for (reg, v) in fixed {
            if reg.mask() & register.mask() != 0 {
                return Err(QpsError::InvalidConfig(format!(
                    "register {} overlaps the extracted register {}",
                    reg.name, register.name
                )));
            }
            if *v >> reg.width != 0 {
                return Err(QpsError::InvalidConfig(format!(
                    "value {v} does not fit register {}",
                    reg.name
                )));
            }
            value |= v << reg.offset;
        }
        let total = self.norm().powi(2);
        let mut out = vec![ZERO; 1 << register.width];
        let mut kept = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if (i as u64) & other_mask == value {
                out[(i >> register.offset) & ((1 << register.width) - 1)] = *a;
                kept += a.norm_sqr();
            }
        }
        let residual = total - kept;
        if residual > FACTOR_TOLERANCE * total {
            return Err(QpsError::NotProductState { residual });
        }
        let norm = kept.sqrt();
        if norm == 0.0 {
            return Err(QpsError::ZeroVector);
        }
        Ok(out.into_iter().map(|a| a / norm).collect())
    }
}

/// `|<a, b>|^2`.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(QpsError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok(inner.norm_sqr())
}

pub fn complex_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn control_pattern(gate: &Gate) -> (u64, u64) {
    gate.controls.iter().fold((0, 0), |(mask, value), c| {
        let bit = 1u64 << c.qubit;
        match c.polarity {
            Polarity::Positive => (mask | bit, value | bit),
            Polarity::Negative => (mask | bit, value),
        }
    })
}

#[derive(Clone, Copy)]
struct AmpPtr(*mut Complex64);

// SAFETY: workers only touch disjoint index sets (see for_each_base).
unsafe impl Send for AmpPtr {}
unsafe impl Sync for AmpPtr {}

impl AmpPtr {
    unsafe fn read(&self, i: usize) -> Complex64 {
        *self.0.add(i)
    }

    unsafe fn write(&self, i: usize, v: Complex64) {
        *self.0.add(i) = v;
    }
}

/// Calls `f` once for every index whose `fixed_mask` bits equal
/// `fixed_value`, in parallel for large index sets. `init` builds per-worker
/// scratch state.
fn for_each_base<S, I, F>(num_qubits: usize, fixed_mask: u64, fixed_value: u64, init: I, f: F)
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, u64) + Sync,
{
    let full = if num_qubits == 64 {
        u64::MAX
    } else {
        (1u64 << num_qubits) - 1
    };
    let free = full & !fixed_mask;
    if free.count_ones() < PARALLEL_MIN_FREE_BITS {
        let mut scratch = init();
        for_each_submask(free, |s| f(&mut scratch, s | fixed_value));
        return;
    }
    let mut outer = 0u64;
    let mut rest = free;
    for _ in 0..PARALLEL_SPLIT_BITS {
        let top = 1u64 << (63 - rest.leading_zeros());
        outer |= top;
        rest &= !top;
    }
    let mut chunks = Vec::with_capacity(1 << PARALLEL_SPLIT_BITS);
    for_each_submask(outer, |s| chunks.push(s));
    chunks.into_par_iter().for_each(|o| {
        let mut scratch = init();
        for_each_submask(rest, |s| f(&mut scratch, s | o | fixed_value));
    });
}

/// Visits every submask of `mask` in increasing order.
fn for_each_submask(mask: u64, mut f: impl FnMut(u64)) {
    let mut s = 0u64;
    loop {
        f(s);
        if s == mask {
            break;
        }
        s = (s | !mask).wrapping_add(1) & mask;
    }
}
