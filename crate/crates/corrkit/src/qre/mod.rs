//! Logical resource estimation for qubitized quantum phase estimation on
//! periodic-cell electronic-structure Hamiltonians, in two encodings:
//! first-quantized (momentum registers per electron) and second-quantized
//! (dual plane-wave orbital occupation).

pub mod first;
pub mod second;

use serde::{Deserialize, Serialize};

use crate::structures::ElectronMode;

/// Echo of the inputs that produced an estimate, embedded in every report
/// so a result can be traced without the original config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// "first_quantized" or "second_quantized".
    pub model: String,
    pub eta: u64,
    pub lambda_zeta: u64,
    pub electron_mode: ElectronMode,
    pub per_axis: [u64; 3],
    pub n_p: u32,
    pub e_cut_ry: f64,
    pub gamma: f64,
    pub omega_bohr3: f64,
    /// Total RMS energy error target, Hartree.
    pub epsilon: f64,
    /// Phase-estimation share of the error budget, Hartree.
    pub epsilon_pha: f64,
    /// Which amplitude-amplification branch the 1-norm split lands in
    /// (first-quantized only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplification_branch: Option<String>,
}

/// Logical-resource totals for one QPE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub logical_qubits: u64,
    pub qpe_iterations: u64,
    pub toffoli_count: u64,
    pub t_count: u64,
    pub clifford_count: u64,
    /// Hamiltonian 1-norm, Hartree.
    pub lambda: f64,
    /// Plane waves (first-quantized) or spatial orbitals (second-quantized).
    pub basis_n: u64,
    pub provenance: Provenance,
}
