//! Gate-level circuit representation over named qubit registers.
//!
//! Qubit `q` is bit `q` of a basis-state index (qubit 0 is the least
//! significant bit). Registers tile `[0, num_qubits)` without overlap.

use std::fmt::{self, Write as _};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QpsError, Result};

/// Tolerance for `max |M^dagger M - I|` on unitary blocks.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegisterName {
    /// Problem register: holds `|b>` and, after postselection, the solution.
    B,
    /// Eigenvalue-inversion workspace, `2n - 2` qubits in `n - 1` pairs.
    E,
    /// Success flag.
    Anc,
    /// Per-module global-control register of the parallel construction.
    C,
    /// Extension qubit of the sine-transform embedding. Inert in simulation.
    #[serde(rename = "BCaux")]
    BcAux,
}

impl fmt::Display for RegisterName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegisterName::B => "B",
            RegisterName::E => "E",
            RegisterName::Anc => "Anc",
            RegisterName::C => "C",
            RegisterName::BcAux => "BCaux",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRegister {
    pub name: RegisterName,
    pub width: usize,
    pub offset: usize,
}

impl QubitRegister {
    pub fn new(name: RegisterName, offset: usize, width: usize) -> Self {
        Self { name, width, offset }
    }

    /// Global index of the register's `i`-th qubit.
    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.width, "qubit {i} outside register {}", self.name);
        self.offset + i
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.width
    }

    /// Mask of the register's bits within a basis-state index.
    pub fn mask(&self) -> u64 {
        (((1u128 << self.width) - 1) as u64) << self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// Fires when the control qubit is `|1>`.
    Positive,
    /// Fires when the control qubit is `|0>`.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Control {
    pub qubit: usize,
    pub polarity: Polarity,
}

impl Control {
    pub fn pos(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::Negative,
        }
    }

    /// Control that fires when the qubit equals `bit`.
    pub fn on(qubit: usize, bit: bool) -> Self {
        if bit {
            Self::pos(qubit)
        } else {
            Self::neg(qubit)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BlockOp {
    Dense(Vec<Complex64>),
    /// Sine transform on indices `1..2^n - 1` padded with `1` at `(0, 0)`.
    SineTransform,
}

/// A dense unitary on `num_qubits` target qubits. Local basis index bit `t`
/// corresponds to the gate's `t`-th target.
#[derive(Debug)]
pub struct UnitaryBlock {
    label: String,
    num_qubits: usize,
    op: BlockOp,
    matrix: OnceLock<Vec<Complex64>>,
}

impl UnitaryBlock {
    /// Row-major `2^k x 2^k` matrix; rejected unless unitary.
    pub fn dense(label: impl Into<String>, num_qubits: usize, matrix: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if matrix.len() != dim * dim {
            return Err(QpsError::LengthMismatch {
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        let deviation = unitarity_deviation(&matrix, dim);
        if deviation > UNITARY_TOLERANCE {
            return Err(QpsError::NotUnitary { deviation });
        }
        Ok(Self {
            label: label.into(),
            num_qubits,
            op: BlockOp::Dense(matrix),
            matrix: OnceLock::new(),
        })
    }

    /// Sine-transform block with rows `u_j` (the Poisson eigenvectors) on
    /// indices `1..2^n - 1`. The matrix is only materialised when needed.
    pub(crate) fn sine_transform(label: impl Into<String>, num_qubits: usize) -> Self {
        Self {
            label: label.into(),
            num_qubits,
            op: BlockOp::SineTransform,
            matrix: OnceLock::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn matrix(&self) -> &[Complex64] {
        match &self.op {
            BlockOp::Dense(m) => m,
            BlockOp::SineTransform => self.matrix.get_or_init(|| sine_transform_matrix(self.num_qubits)),
        }
    }

    /// `max |M^dagger M - I|` over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(self.matrix(), self.dim())
    }

    pub fn adjoint(&self) -> Self {
        let label = match self.label.strip_suffix('†') {
            Some(base) => base.to_string(),
            None => format!("{}†", self.label),
        };
        let op = match &self.op {
            BlockOp::Dense(m) => {
                let dim = self.dim();
                let mut t = vec![Complex64::new(0.0, 0.0); dim * dim];
                for r in 0..dim {
                    for c in 0..dim {
                        t[c * dim + r] = m[r * dim + c].conj();
                    }
                }
                BlockOp::Dense(t)
            }
            // Real, symmetric and involutory.
            BlockOp::SineTransform => BlockOp::SineTransform,
        };
        Self {
            label,
            num_qubits: self.num_qubits,
            op,
            matrix: OnceLock::new(),
        }
    }
}

impl PartialEq for UnitaryBlock {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.num_qubits == other.num_qubits && self.op == other.op
    }
}

fn sine_transform_matrix(n: usize) -> Vec<Complex64> {
    let dim = 1usize << n;
    let g = dim as f64;
    let norm = (2.0 / g).sqrt();
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    m[0] = Complex64::new(1.0, 0.0);
    for j in 1..dim {
        for k in 1..dim {
            let phase = ((j * k) % (2 * dim)) as f64 * std::f64::consts::PI / g;
            m[j * dim + k] = Complex64::new(norm * phase.sin(), 0.0);
        }
    }
    m
}

fn unitarity_deviation(m: &[Complex64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in a..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..dim {
                acc += m[r * dim + a].conj() * m[r * dim + b];
            }
            if a == b {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// `exp(-i angle Y / 2)` on every target.
    RotY(f64),
    /// Uncontrolled `X` on every target.
    PauliX,
    /// `X` on every target, with at least one control.
    ControlledNot,
    UnitaryBlock(Arc<UnitaryBlock>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn ry(angle: f64, targets: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: GateKind::RotY(angle),
            targets: targets.into(),
            controls: Vec::new(),
        }
    }

    pub fn x(targets: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: GateKind::PauliX,
            targets: targets.into(),
            controls: Vec::new(),
        }
    }

    pub fn cnot(targets: impl Into<Vec<usize>>, controls: impl Into<Vec<Control>>) -> Self {
        Self {
            kind: GateKind::ControlledNot,
            targets: targets.into(),
            controls: controls.into(),
        }
    }

    pub fn block(block: Arc<UnitaryBlock>, targets: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: GateKind::UnitaryBlock(block),
            targets: targets.into(),
            controls: Vec::new(),
        }
    }

    pub fn with_controls(mut self, controls: impl Into<Vec<Control>>) -> Self {
        self.controls = controls.into();
        self
    }

    pub fn adjoint(&self) -> Self {
        let kind = match &self.kind {
            GateKind::RotY(a) => GateKind::RotY(-a),
            GateKind::PauliX => GateKind::PauliX,
            GateKind::ControlledNot => GateKind::ControlledNot,
            GateKind::UnitaryBlock(b) => GateKind::UnitaryBlock(Arc::new(b.adjoint())),
        };
        Self {
            kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Every qubit the gate touches, targets first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        if self.targets.is_empty() {
            return Err(QpsError::InvalidGate("gate has no targets".into()));
        }
        let mut seen = 0u128;
        for q in self.qubits() {
            if q >= num_qubits {
                return Err(QpsError::QubitOutOfBounds { qubit: q, num_qubits });
            }
            if seen & (1 << q) != 0 {
                return Err(QpsError::InvalidGate(format!("qubit {q} used twice")));
            }
            seen |= 1 << q;
        }
        match &self.kind {
            GateKind::PauliX if !self.controls.is_empty() => Err(QpsError::InvalidGate(
                "PauliX carries controls; use ControlledNot".into(),
            )),
            GateKind::ControlledNot if self.controls.is_empty() => {
                Err(QpsError::InvalidGate("ControlledNot without controls".into()))
            }
            GateKind::UnitaryBlock(b) if b.num_qubits() != self.targets.len() => Err(QpsError::InvalidGate(format!(
                "block {} acts on {} qubits but has {} targets",
                b.label(),
                b.num_qubits(),
                self.targets.len()
            ))),
            GateKind::RotY(a) if !a.is_finite() => Err(QpsError::InvalidGate("non-finite rotation angle".into())),
            _ => Ok(()),
        }
    }
}

/// Ordered gate list over a fixed register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    registers: Vec<QubitRegister>,
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(registers: Vec<QubitRegister>) -> Result<Self> {
        let mut sorted = registers.clone();
        sorted.sort_by_key(|r| r.offset);
        let mut next = 0;
        for r in &sorted {
            if r.width == 0 {
                return Err(QpsError::InvalidLayout(format!("register {} is empty", r.name)));
            }
            if r.offset != next {
                return Err(QpsError::InvalidLayout(format!(
                    "register {} starts at {} but the previous register ends at {next}",
                    r.name, r.offset
                )));
            }
            next += r.width;
        }
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(QpsError::InvalidLayout(format!("register {} listed twice", r.name)));
            }
        }
        if next > 64 {
            return Err(QpsError::InvalidLayout(format!(
                "{next} qubits exceed the 64-qubit index space"
            )));
        }
        Ok(Self {
            registers,
            num_qubits: next,
            gates: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn registers(&self) -> &[QubitRegister] {
        &self.registers
    }

    pub fn register(&self, name: RegisterName) -> Option<&QubitRegister> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gates_mut(&mut self) -> &mut [Gate] {
        &mut self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn append(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.append(g)?;
        }
        Ok(())
    }

    /// `self` followed by `other`; both must share the qubit count.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit> {
        if self.num_qubits != other.num_qubits {
            return Err(QpsError::LengthMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        let mut out = self.clone();
        out.gates.extend(other.gates.iter().cloned());
        Ok(out)
    }

    /// Reversed gate order with every gate inverted.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            registers: self.registers.clone(),
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Line-oriented text form, one gate per line.
    ///
    /// ```text
    /// qubits 6
    /// register B 0 2
    /// ry 2.356194490192345 t=2,3 c=0+
    /// cx t=4 c=2+,3-
    /// block BC n=2 t=0,1
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qubits {}", self.num_qubits);
        for r in &self.registers {
            let _ = writeln!(out, "register {} {} {}", r.name, r.offset, r.width);
        }
        for g in &self.gates {
            match &g.kind {
                GateKind::RotY(a) => {
                    let _ = write!(out, "ry {a}");
                }
                GateKind::PauliX => out.push('x'),
                GateKind::ControlledNot => out.push_str("cx"),
                GateKind::UnitaryBlock(b) => {
                    let _ = write!(out, "block {} n={}", b.label(), b.num_qubits());
                }
            }
            out.push_str(" t=");
            out.push_str(&join(g.targets.iter().map(|t| t.to_string())));
            if !g.controls.is_empty() {
                out.push_str(" c=");
                out.push_str(&join(g.controls.iter().map(|c| {
                    let sign = match c.polarity {
                        Polarity::Positive => '+',
                        Polarity::Negative => '-',
                    };
                    format!("{}{sign}", c.qubit)
                })));
            }
            out.push('\n');
        }
        out
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> Vec<QubitRegister> {
        vec![
            QubitRegister::new(RegisterName::B, 0, 2),
            QubitRegister::new(RegisterName::E, 2, 2),
        ]
    }

    #[test]
    fn registers_must_tile() {
        assert!(Circuit::new(layout()).is_ok());
        let gap = vec![
            QubitRegister::new(RegisterName::B, 0, 2),
            QubitRegister::new(RegisterName::E, 3, 2),
        ];
        assert!(matches!(Circuit::new(gap), Err(QpsError::InvalidLayout(_))));
        let dup = vec![
            QubitRegister::new(RegisterName::B, 0, 2),
            QubitRegister::new(RegisterName::B, 2, 2),
        ];
        assert!(Circuit::new(dup).is_err());
    }

    #[test]
    fn append_checks_bounds_and_overlap() {
        let mut c = Circuit::new(layout()).unwrap();
        assert!(matches!(
            c.append(Gate::x([4])),
            Err(QpsError::QubitOutOfBounds {
                qubit: 4,
                num_qubits: 4
            })
        ));
        assert!(c.append(Gate::cnot([1], [Control::pos(1)])).is_err());
        assert!(c.append(Gate::cnot([1], [])).is_err());
        assert!(c.append(Gate::x([0]).with_controls([Control::pos(1)])).is_err());
        assert!(c.append(Gate::ry(0.3, [2, 3]).with_controls([Control::neg(0)])).is_ok());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn adjoint_is_involution() {
        let mut c = Circuit::new(layout()).unwrap();
        c.append(Gate::ry(std::f64::consts::PI / 3.0, [2])).unwrap();
        c.append(Gate::cnot([3], [Control::pos(2), Control::neg(0)])).unwrap();
        let block = UnitaryBlock::dense(
            "H",
            1,
            vec![
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        c.append(Gate::block(Arc::new(block), [1])).unwrap();
        let adj = c.adjoint();
        assert_eq!(adj.gates()[2].kind, GateKind::RotY(-std::f64::consts::PI / 3.0));
        match &adj.gates()[0].kind {
            GateKind::UnitaryBlock(b) => {
                assert_eq!(b.label(), "H†");
                assert_eq!(b.matrix()[0], Complex64::new(0.0, -1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(adj.adjoint(), c);
    }

    #[test]
    fn dense_block_must_be_unitary() {
        let m = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            UnitaryBlock::dense("bad", 1, m),
            Err(QpsError::NotUnitary { .. })
        ));
        assert!(UnitaryBlock::dense("short", 1, vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn sine_transform_block_is_unitary() {
        for n in 1..=6 {
            let b = UnitaryBlock::sine_transform("BC", n);
            assert!(b.unitarity_deviation() <= UNITARY_TOLERANCE, "n = {n}");
        }
    }

    #[test]
    fn text_form() {
        let mut c = Circuit::new(layout()).unwrap();
        c.append(Gate::ry(0.5, [2, 3]).with_controls([Control::pos(0)]))
            .unwrap();
        c.append(Gate::cnot([3], [Control::pos(1), Control::neg(0)])).unwrap();
        c.append(Gate::x([0, 1])).unwrap();
        let text = c.to_text();
        assert_eq!(
            text,
            "qubits 4\nregister B 0 2\nregister E 2 2\nry 0.5 t=2,3 c=0+\ncx t=3 c=1+,0-\nx t=0,1\n"
        );
    }
}
