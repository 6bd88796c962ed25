//! Construction of the full solver circuit and the end-to-end pipeline.
//!
//! Stages, on the standard register layout:
//!
//! 1. `BC` on B: the sine transform mapping eigenvector `u_j` to `|j>`.
//! 2. Eigenvalue inversion: for every `j`, pair `t` of register E is
//!    rotated to `(cos a_t |0> + sin a_t |1>)^{x2}` with the angles of
//!    [`inversion_angles`], so `E = |1...1>` carries amplitude `8 / lambda_j`.
//! 3. Flag: `X` on Anc controlled by every qubit of E.
//! 4. `BC^dagger` on B.
//!
//! Postselecting Anc on `|1>` leaves B holding `sum_j beta_j / lambda_j |u_j>`.
//!
//! # Bit convention
//!
//! Bit `p` of `j` (least significant first) lives on qubit `B.offset + p`.
//! With `j = j_1 j_2 ... j_n` written most significant digit first, digit
//! `j_k` is therefore qubit `B.offset + n - k`. This is the only place that
//! mapping is decided; every builder goes through [`QpsLayout::b_bit`].
//!
//! # Modules
//!
//! `j = 2^m * i` with `i` odd selects module `m`. Its global condition is
//! "bits `0..m` of `j` are zero and bit `m` is one". Module `n - 1` (only
//! `j = 2^(n-1)`) carries nothing but the constant `pi/6` terms. For pair
//! `t >= m` the angle depends on `i mod 2^(k+1)` with `k = n - t`, i.e. on
//! bits `m..=m+k` of `j` (bits past `n - 1` read as zero).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Control, Gate, GateKind, QubitRegister, RegisterName, UnitaryBlock};
use crate::error::{QpsError, Result};
use crate::identities::{inversion_angles, CONSTANT_ANGLE};
use crate::poisson::{normalized, solve_classical, TridiagonalSystem, MIN_GRID_EXPONENT};
use crate::resources::{count_resources, CostModel, ResourceReport};
use crate::simulator::{fidelity, StateVector, MAX_BLOCK_QUBITS};

/// Largest `n` for circuit construction (the parallel layout has `4n - 2`
/// qubits, which must fit a 64-bit index).
pub const MAX_BUILD_EXPONENT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Inversion modules run one after another.
    Serial,
    /// Module predicates are precomputed into register C and the rotation
    /// units are regrouped so each group touches disjoint pairs.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RyConstruction {
    /// One fully controlled rotation pair per distinct `j`-bit pattern, with
    /// the angle taken straight from [`inversion_angles`]. Exponential size;
    /// the reference construction.
    Semantic,
    /// Angle assembled bit by bit from locally controlled rotations, with
    /// `X` gates forming the complement of `j` where needed. Cubic size.
    Bitwise,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = QpsError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(<$ty>::$variant),)+
                    other => Err(QpsError::InvalidConfig(format!(
                        "unknown {} {other:?}", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

text_enum!(Mode { Serial => "serial", Parallel => "parallel" });
text_enum!(RyConstruction { Semantic => "semantic", Bitwise => "bitwise" });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpsConfig {
    pub n: usize,
    pub mode: Mode,
    /// Only consulted in serial mode; parallel mode has its own construction.
    pub ry_construction: RyConstruction,
    pub cost_model: CostModel,
}

impl QpsConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            mode: Mode::Serial,
            ry_construction: RyConstruction::Bitwise,
            cost_model: CostModel::default(),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_ry(mut self, ry: RyConstruction) -> Self {
        self.ry_construction = ry;
        self
    }

    pub fn with_cost_model(mut self, model: CostModel) -> Self {
        self.cost_model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Parallel && self.n < 3 {
            return Err(QpsError::InvalidConfig(format!(
                "parallel mode needs n >= 3 (register C has n - 2 qubits), got n = {}",
                self.n
            )));
        }
        if !(MIN_GRID_EXPONENT..=MAX_BUILD_EXPONENT).contains(&self.n) {
            return Err(QpsError::GridExponent {
                n: self.n,
                min: MIN_GRID_EXPONENT,
                max: MAX_BUILD_EXPONENT,
            });
        }
        Ok(())
    }
}

/// Standard register layout.
///
/// | register | qubits            | width   |
/// |----------|-------------------|---------|
/// | B        | `0..n`            | `n`     |
/// | E        | `n..3n-2`         | `2n-2`  |
/// | Anc      | `3n-2`            | 1       |
/// | BCaux    | `3n-1`            | 1       |
/// | C        | `3n..4n-2`        | `n-2` (parallel only) |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QpsLayout {
    pub n: usize,
    pub b: QubitRegister,
    pub e: QubitRegister,
    pub anc: QubitRegister,
    pub bc_aux: QubitRegister,
    pub c: Option<QubitRegister>,
}

impl QpsLayout {
    pub fn new(n: usize, mode: Mode) -> Result<Self> {
        QpsConfig::new(n).with_mode(mode).validate()?;
        Ok(Self {
            n,
            b: QubitRegister::new(RegisterName::B, 0, n),
            e: QubitRegister::new(RegisterName::E, n, 2 * n - 2),
            anc: QubitRegister::new(RegisterName::Anc, 3 * n - 2, 1),
            bc_aux: QubitRegister::new(RegisterName::BcAux, 3 * n - 1, 1),
            c: match mode {
                Mode::Serial => None,
                Mode::Parallel => Some(QubitRegister::new(RegisterName::C, 3 * n, n - 2)),
            },
        })
    }

    pub fn serial(n: usize) -> Result<Self> {
        Self::new(n, Mode::Serial)
    }

    pub fn parallel(n: usize) -> Result<Self> {
        Self::new(n, Mode::Parallel)
    }

    pub fn registers(&self) -> Vec<QubitRegister> {
        let mut regs = vec![self.b, self.e, self.anc, self.bc_aux];
        regs.extend(self.c);
        regs
    }

    pub fn num_qubits(&self) -> usize {
        self.registers().iter().map(|r| r.width).sum()
    }

    pub fn empty_circuit(&self) -> Circuit {
        Circuit::new(self.registers()).expect("standard layout tiles its qubits")
    }

    /// Qubit holding bit `p` (least significant first) of `j`.
    pub fn b_bit(&self, p: usize) -> usize {
        self.b.qubit(p)
    }

    /// The two E qubits of pair `t`.
    pub fn pair(&self, t: usize) -> [usize; 2] {
        [self.e.qubit(2 * t), self.e.qubit(2 * t + 1)]
    }

    fn anc_qubit(&self) -> usize {
        self.anc.qubit(0)
    }
}

fn bc_gate(layout: &QpsLayout) -> Gate {
    let block = UnitaryBlock::sine_transform("BC", layout.n);
    Gate::block(Arc::new(block), layout.b.qubits().collect::<Vec<_>>())
}

/// The `n`-qubit basis conversion `U |u_j> = |j>`: rows `1..2^n - 1` are the
/// Poisson eigenvectors, completed to a unitary by `1` at `(0, 0)`.
pub fn build_bc(n: usize) -> Result<Gate> {
    if !(MIN_GRID_EXPONENT..=MAX_BLOCK_QUBITS).contains(&n) {
        return Err(QpsError::GridExponent {
            n,
            min: MIN_GRID_EXPONENT,
            max: MAX_BLOCK_QUBITS,
        });
    }
    Ok(bc_gate(&QpsLayout::serial(n)?))
}

fn constant_rotation(layout: &QpsLayout, pair: usize) -> Gate {
    Gate::ry(2.0 * CONSTANT_ANGLE, layout.pair(pair))
}

/// Controls of module `m`'s global condition read directly from B.
fn module_pattern(layout: &QpsLayout, m: usize) -> Vec<Control> {
    (0..m)
        .map(|p| Control::neg(layout.b_bit(p)))
        .chain(std::iter::once(Control::pos(layout.b_bit(m))))
        .collect()
}

/// Serial eigenvalue inversion on B and E. The bitwise construction borrows
/// Anc as scratch for the module predicate and returns it to `|0>`.
pub fn build_inversion_serial(layout: &QpsLayout, ry: RyConstruction) -> Result<Circuit> {
    let mut circuit = layout.empty_circuit();
    match ry {
        RyConstruction::Semantic => semantic_inversion(layout, &mut circuit)?,
        RyConstruction::Bitwise => bitwise_inversion(layout, &mut circuit)?,
    }
    Ok(circuit)
}

fn semantic_inversion(layout: &QpsLayout, circuit: &mut Circuit) -> Result<()> {
    let n = layout.n;
    for m in 0..n {
        let global = module_pattern(layout, m);
        for t in 0..n - 1 {
            if t < m {
                circuit.append(constant_rotation(layout, t).with_controls(global.clone()))?;
                continue;
            }
            let k = n - t;
            // Bits m+1..=m+k decide the angle; those past the top of j are zero.
            let top = (m + k).min(n - 1);
            let free = top - m;
            for pattern in 0..(1u64 << free) {
                let j = (1u64 << m) | (pattern << (m + 1));
                let angle = inversion_angles(n, j)?.angles[t];
                let mut controls = global.clone();
                controls.extend((0..free).map(|b| Control::on(layout.b_bit(m + 1 + b), (pattern >> b) & 1 == 1)));
                circuit.append(Gate::ry(2.0 * angle, layout.pair(t)).with_controls(controls))?;
            }
        }
    }
    Ok(())
}

/// Rotation angle `2^l * pi / 2^k` for the `l`-th bit of the numerator.
fn bit_angle(l: usize, k: usize) -> f64 {
    PI * (1u64 << l) as f64 / (1u64 << k) as f64
}

fn bitwise_inversion(layout: &QpsLayout, circuit: &mut Circuit) -> Result<()> {
    let n = layout.n;
    let anc = layout.anc_qubit();
    for m in 0..n {
        // Module 0's condition is bit 0 alone; deeper modules latch theirs on Anc.
        let predicate = Gate::cnot([anc], module_pattern(layout, m));
        let global = if m == 0 {
            Control::pos(layout.b_bit(0))
        } else {
            circuit.append(predicate.clone())?;
            Control::pos(anc)
        };
        for t in 0..n - 1 {
            if t < m {
                circuit.append(constant_rotation(layout, t).with_controls([global]))?;
                continue;
            }
            let k = n - t;
            let pair = layout.pair(t);
            // Numerator = lower k bits of i when bit k of i is set, otherwise
            // 2^k minus them: complementing bits 1..k turns the latter into
            // the former (bit 0 of i is always 1).
            let low: Vec<usize> = (1..k).map(|l| layout.b_bit(m + l)).collect();
            let complement = if m + k < n {
                Gate::cnot(low, [Control::neg(layout.b_bit(m + k))])
            } else {
                Gate::x(low)
            };
            circuit.append(complement.clone())?;
            circuit.append(Gate::ry(bit_angle(0, k), pair).with_controls([global]))?;
            for l in 1..k {
                circuit.append(
                    Gate::ry(bit_angle(l, k), pair).with_controls([global, Control::pos(layout.b_bit(m + l))]),
                )?;
            }
            circuit.append(complement)?;
        }
        if m > 0 {
            circuit.append(predicate)?;
        }
    }
    Ok(())
}

/// `X` on Anc controlled by every qubit of E.
pub fn build_flag(layout: &QpsLayout) -> Result<Circuit> {
    let mut circuit = layout.empty_circuit();
    circuit.append(Gate::cnot(
        [layout.anc_qubit()],
        layout.e.qubits().map(Control::pos).collect::<Vec<_>>(),
    ))?;
    Ok(circuit)
}

/// Gates that load module predicates into C (module `m` in `1..=n-2` on
/// `C[m-1]`) and module `n - 1`'s into Anc, using a running "low bits are
/// zero" chain that is then differenced in place.
fn control_parallelization(layout: &QpsLayout) -> Result<Vec<Gate>> {
    let n = layout.n;
    let c = layout
        .c
        .ok_or_else(|| QpsError::InvalidConfig("parallel inversion needs register C".into()))?;
    let b = |p| layout.b_bit(p);
    let mut gates = Vec::with_capacity(2 * n);
    // C[m-1] <- bits 0..=m all zero.
    gates.push(Gate::cnot([c.qubit(0)], [Control::neg(b(0)), Control::neg(b(1))]));
    for m in 2..=n - 2 {
        gates.push(Gate::cnot(
            [c.qubit(m - 1)],
            [Control::pos(c.qubit(m - 2)), Control::neg(b(m))],
        ));
    }
    gates.push(Gate::cnot(
        [layout.anc_qubit()],
        [Control::pos(c.qubit(n - 3)), Control::pos(b(n - 1))],
    ));
    // zero(0..=m) xor zero(0..m) = zero(0..m) and bit m set.
    for m in (2..=n - 2).rev() {
        gates.push(Gate::cnot([c.qubit(m - 1)], [Control::pos(c.qubit(m - 2))]));
    }
    gates.push(Gate::cnot([c.qubit(0)], [Control::neg(b(0))]));
    Ok(gates)
}

/// One rotation unit: module `m`'s contribution to pair `t`, built from
/// singly indexed B controls only so units of different modules commute.
/// The complement is taken on the targets (`X R(a) X = R(-a)`) instead of
/// on B.
fn parallel_unit(layout: &QpsLayout, global: Control, m: usize, t: usize) -> Vec<Gate> {
    let n = layout.n;
    let pair = layout.pair(t);
    if t < m {
        return vec![constant_rotation(layout, t).with_controls([global])];
    }
    let k = n - t;
    let full = (1u64 << k) as f64;
    let step = PI / full;
    let mut gates = Vec::with_capacity(k + 4);
    let conjugation = if m + k < n {
        let top = Control::neg(layout.b_bit(m + k));
        gates.push(Gate::ry(step, pair).with_controls([global]));
        gates.push(Gate::ry(step * (full - 2.0), pair).with_controls([global, top]));
        Gate::cnot(pair, [top])
    } else {
        gates.push(Gate::ry(step * (full - 1.0), pair).with_controls([global]));
        Gate::x(pair)
    };
    gates.push(conjugation.clone());
    for l in 1..k {
        gates.push(Gate::ry(bit_angle(l, k), pair).with_controls([global, Control::pos(layout.b_bit(m + l))]));
    }
    gates.push(conjugation);
    gates
}

/// Parallel eigenvalue inversion on B, C and E: predicates into C, then
/// `n - 1` regrouped rotation layers, then the predicates uncomputed.
pub fn build_inversion_parallel(layout: &QpsLayout) -> Result<Circuit> {
    let n = layout.n;
    let c = layout
        .c
        .ok_or_else(|| QpsError::InvalidConfig("parallel inversion needs register C".into()))?;
    let global = |m: usize| match m {
        0 => Control::pos(layout.b_bit(0)),
        m if m == n - 1 => Control::pos(layout.anc_qubit()),
        m => Control::pos(c.qubit(m - 1)),
    };
    let cp = control_parallelization(layout)?;
    let mut circuit = layout.empty_circuit();
    circuit.extend(cp.iter().cloned())?;
    let modules = n - 1;
    for r in 0..modules {
        // Layer r: module m works on pair (r + m) mod (n - 1); module n - 1
        // (constants only) rides along on pair r.
        let mut units: Vec<Vec<Gate>> = (0..modules)
            .map(|m| parallel_unit(layout, global(m), m, (r + m) % modules))
            .collect();
        units.push(parallel_unit(layout, global(n - 1), n - 1, r));
        // Interleave so the l-th steps of all units are adjacent; at step l
        // module m reads bit m + l, so the steps do not collide on B.
        let longest = units.iter().map(Vec::len).max().unwrap_or(0);
        for s in 0..longest {
            for unit in &units {
                if let Some(g) = unit.get(s) {
                    circuit.append(g.clone())?;
                }
            }
        }
    }
    circuit.extend(cp.into_iter().rev())?;
    Ok(circuit)
}

/// The complete solver circuit for `config`.
pub fn build_qps(config: &QpsConfig) -> Result<Circuit> {
    config.validate()?;
    let layout = QpsLayout::new(config.n, config.mode)?;
    let inversion = build_inversion(config, &layout)?;
    let bc = bc_gate(&layout);
    let mut circuit = layout.empty_circuit();
    circuit.append(bc.clone())?;
    let circuit = circuit.compose(&inversion)?.compose(&build_flag(&layout)?)?;
    let mut circuit = circuit;
    circuit.append(bc.adjoint())?;
    Ok(circuit)
}

/// The inversion stage alone, as selected by `config`.
pub fn build_inversion(config: &QpsConfig, layout: &QpsLayout) -> Result<Circuit> {
    match config.mode {
        Mode::Serial => build_inversion_serial(layout, config.ry_construction),
        Mode::Parallel => build_inversion_parallel(layout),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpsSolution {
    /// Normalised solution direction read from B after postselection.
    pub solution: Vec<f64>,
    pub success_probability: f64,
    pub resources: ResourceReport,
    /// Normalised direction of the tridiagonal solve.
    pub classical_reference: Vec<f64>,
    pub fidelity: f64,
}

/// Outcome of running a solver circuit on one right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    /// Probability of reading Anc = 1.
    pub probability: f64,
    /// Normalised B register after postselection, E fixed to all ones.
    pub b_state: Vec<Complex64>,
    /// Mass left on non-zero values of register C before postselection.
    pub leakage: f64,
}

/// Injects `b_hat` (already normalised) into B at indices `1..2^n`, runs
/// `circuit`, postselects Anc = 1 and reads B back.
pub fn run_pipeline(layout: &QpsLayout, circuit: &Circuit, b_hat: &[f64]) -> Result<PipelineRun> {
    let dim = (1usize << layout.n) - 1;
    if b_hat.len() != dim {
        return Err(QpsError::LengthMismatch {
            expected: dim,
            found: b_hat.len(),
        });
    }
    let amplitudes: Vec<Complex64> = std::iter::once(0.0)
        .chain(b_hat.iter().copied())
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let mut state = StateVector::new(layout.num_qubits())?.inject_register(&layout.b, &amplitudes)?;
    state.apply(circuit)?;
    let leakage = layout.c.map_or(0.0, |c| {
        let mask = c.mask() as usize;
        state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    });
    let post = state.postselect(&[layout.anc_qubit()], &[true])?;
    let all_ones = (1u64 << layout.e.width) - 1;
    let b_state = post
        .state
        .extract_register(&layout.b, &[(&layout.e, all_ones), (&layout.anc, 1)])?;
    Ok(PipelineRun {
        probability: post.probability,
        b_state,
        leakage,
    })
}

/// Runs the circuit on `|b>` (normalised here), postselects the flag and
/// compares the resulting B state with the classical solution.
pub fn solve(config: &QpsConfig, b: &[f64]) -> Result<QpsSolution> {
    config.validate()?;
    let n = config.n;
    let dim = (1usize << n) - 1;
    if b.len() != dim {
        return Err(QpsError::LengthMismatch {
            expected: dim,
            found: b.len(),
        });
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(QpsError::InvalidConfig("right-hand side is not finite".into()));
    }
    let b_hat = normalized(b).ok_or(QpsError::ZeroRightHandSide)?;

    let layout = QpsLayout::new(n, config.mode)?;
    let circuit = build_qps(config)?;
    let run = run_pipeline(&layout, &circuit, &b_hat)?;
    // Index 0 is outside the problem and receives no amplitude.
    let output = &run.b_state[1..];
    let solution: Vec<f64> = output.iter().map(|a| a.re).collect();

    let system = TridiagonalSystem::with_grid(1 << n)?;
    let classical = solve_classical(&system, &b_hat)?;
    let classical_reference = normalized(&classical).ok_or(QpsError::ZeroRightHandSide)?;
    let reference: Vec<Complex64> = classical_reference.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fidelity = fidelity(output, &reference)?;

    Ok(QpsSolution {
        solution,
        success_probability: run.probability,
        resources: count_resources(&circuit, &config.cost_model),
        classical_reference,
        fidelity,
    })
}

/// Negates the angle of the `nth` rotation gate (counting only `RY`
/// gates). Returns false when the circuit has fewer rotations.
pub fn negate_rotation(circuit: &mut Circuit, nth: usize) -> bool {
    let Some(gate) = circuit
        .gates_mut()
        .iter_mut()
        .filter(|g| matches!(g.kind, GateKind::RotY(_)))
        .nth(nth)
    else {
        return false;
    };
    if let GateKind::RotY(angle) = &mut gate.kind {
        *angle = -*angle;
    }
    true
}
