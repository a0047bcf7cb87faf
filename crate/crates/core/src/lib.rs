//! Simulation of entanglement-purification-assisted two-qubit gates.
//!
//! Noisy multi-level particles are modelled as registers of virtual qubits.
//! Elementary pairs made by a noisy (possibly heralded) two-particle gate are
//! purified by nested entanglement pumping and then consumed to teleport a
//! CNOT between the logical qubits. The crate reports the resulting logical
//! gate error together with the expected resource cost.

pub mod error;
pub mod gate;
pub mod linalg;
pub mod noise;
pub mod purify;
pub mod state;
pub mod sweep;

pub use error::{Error, Result};
pub use gate::{
    avg_gate_fidelity, choi_of_noisy_gate, is_entangling, logical_gate_metrics,
    teleported_cnot_channel, ChoiMatrix, Cut, GateMetrics, LogicalGateReport,
};
pub use linalg::{hermitian_eigenvalues, hermitian_min_eig, CMatrix};
pub use noise::{
    bell_twirl, error_rate_from_q, noisy_gate, noisy_measure, q_from_error_rate, raw_pair,
    werner, Basis, BellDiagonal, MeasurementOutcome, NoiseParams, RawPair,
};
pub use purify::{
    nested_pump, pump_level, recurrence_fixed_point, recurrence_step, CostReport, PumpConfig,
    PumpMode, PumpResult,
};
pub use state::{
    apply_unitary, bell_phi, make_pure, overlap, partial_trace, partial_transpose, tensor,
    DensityMatrix, StateVector, UnitaryGate,
};
