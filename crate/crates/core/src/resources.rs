//! Elementary-gate counting and ASAP depth.
//!
//! Every IR gate expands to a number of one- and two-qubit gates under a
//! [`CostModel`]. Multi-target rotations and NOTs are charged per target.
//! Negative-polarity controls cost the same as positive ones: the `X`
//! conjugation they need is absorbed into the coefficients.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};

/// Decomposition coefficients. Loadable from JSON; missing fields keep
/// their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Uncontrolled `RY` or `X`, per target.
    pub single_qubit: u64,
    /// Singly controlled `RY`, per target.
    pub controlled_rotation: u64,
    /// Doubly controlled `RY`, per target. The default of 4 makes a
    /// doubly controlled rotation pair cost 8 two-qubit gates.
    pub doubly_controlled_rotation: u64,
    /// Singly controlled `X`, per target.
    pub cnot: u64,
    /// Slope `s` of the linear `s * (c - 1)` charge for `X` with `c >= 2`
    /// controls and `RY` with `c >= 3` controls, per target.
    pub multi_control_slope: u64,
    /// Unitary blocks on `k` qubits are charged `coefficient * k^2`.
    pub block_coefficient: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            single_qubit: 1,
            controlled_rotation: 2,
            doubly_controlled_rotation: 4,
            cnot: 1,
            multi_control_slope: 16,
            block_coefficient: 2,
        }
    }
}

impl CostModel {
    pub fn gate_cost(&self, gate: &Gate) -> u64 {
        let targets = gate.targets.len() as u64;
        let c = gate.controls.len() as u64;
        match &gate.kind {
            GateKind::RotY(_) => {
                let per_target = match c {
                    0 => self.single_qubit,
                    1 => self.controlled_rotation,
                    2 => self.doubly_controlled_rotation,
                    _ => self.multi_control_slope * (c - 1),
                };
                per_target * targets
            }
            GateKind::PauliX | GateKind::ControlledNot => {
                let per_target = match c {
                    0 => self.single_qubit,
                    1 => self.cnot,
                    _ => self.multi_control_slope * (c - 1),
                };
                per_target * targets
            }
            GateKind::UnitaryBlock(_) => self.block_coefficient * targets * targets,
        }
    }

    /// Layers an expanded gate occupies on its qubit set. Uncontrolled
    /// rotations and flips on several targets run side by side; everything
    /// else is charged serially.
    pub fn gate_depth(&self, gate: &Gate) -> u64 {
        match gate.kind {
            GateKind::RotY(_) | GateKind::PauliX if gate.controls.is_empty() => self.single_qubit,
            _ => self.gate_cost(gate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub qubits: usize,
    pub ir_gates: u64,
    pub elementary_gates: u64,
    /// ASAP depth after expansion under the cost model.
    pub depth_serial: u64,
    /// ASAP depth of the IR gates as built.
    pub depth_native: u64,
}

pub fn count_resources(circuit: &Circuit, model: &CostModel) -> ResourceReport {
    ResourceReport {
        qubits: circuit.num_qubits(),
        ir_gates: circuit.len() as u64,
        elementary_gates: circuit.gates().iter().map(|g| model.gate_cost(g)).sum(),
        depth_serial: weighted_depth(circuit, |g| model.gate_depth(g)),
        depth_native: depth(circuit),
    }
}

/// Greedy ASAP layering: each gate starts in the earliest layer where all
/// of its qubits are free.
pub fn depth(circuit: &Circuit) -> u64 {
    weighted_depth(circuit, |_| 1)
}

/// ASAP layering where a gate holds its qubits for `duration(gate)` layers.
pub fn weighted_depth(circuit: &Circuit, duration: impl Fn(&Gate) -> u64) -> u64 {
    let mut free_at = vec![0u64; circuit.num_qubits()];
    let mut total = 0;
    for gate in circuit.gates() {
        let start = gate.qubits().map(|q| free_at[q]).max().unwrap_or(0);
        let end = start + duration(gate);
        for q in gate.qubits() {
            free_at[q] = end;
        }
        total = total.max(end);
    }
    total
}
