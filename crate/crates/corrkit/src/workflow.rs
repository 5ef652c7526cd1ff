//! Closed-form glue for the corrosion workflow: Arrhenius kinetics,
//! defect solution energies, classical electronic-structure cost scaling,
//! and the critical aluminum fraction for a protective oxide scale.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::constants::{HARTREE_J_PER_MOL, R_J_PER_MOL_K};
use crate::error::{CorrError, Result};

/// Arrhenius rate A exp(-Ea / RT) with the activation energy in Hartree
/// per particle (converted internally to J/mol).
pub fn arrhenius_rate(prefactor: f64, e_a_hartree: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(CorrError::Domain(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    if !e_a_hartree.is_finite() || !prefactor.is_finite() {
        return Err(CorrError::Domain("non-finite Arrhenius input".to_string()));
    }
    let e_j_per_mol = e_a_hartree * HARTREE_J_PER_MOL;
    Ok(prefactor * (-e_j_per_mol / (R_J_PER_MOL_K * temperature_k)).exp())
}

/// Solution energy of an interstitial from a gas-phase dimer reservoir:
/// E_sol = E(host + X) - E(host) - E(X2) / 2. Any consistent energy unit.
pub fn solution_energy(e_defected: f64, e_host: f64, e_dimer: f64) -> Result<f64> {
    for (name, v) in [
        ("defected cell", e_defected),
        ("host cell", e_host),
        ("dimer", e_dimer),
    ] {
        if !v.is_finite() {
            return Err(CorrError::Domain(format!("non-finite {name} energy")));
        }
    }
    Ok(e_defected - e_host - e_dimer / 2.0)
}

/// Classical electronic-structure methods with their leading cost models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ClassicalMethod {
    /// Determinant count C(N, eta/2) for eta/2 same-spin electrons in N
    /// spatial orbitals.
    Fci,
    /// Iteration cost eta^3 (N - eta/2)^4.
    CcsdT,
    /// Selected CI with a fixed determinant budget: D eta^2 (N - eta/2)^2.
    Sci { n_determinants: u64 },
    /// DMRG sweep cost B^3 N^3 + B^2 N^4.
    Dmrg { bond_dimension: u64 },
}

/// Leading-order classical cost for N spatial orbitals and eta electrons,
/// kept exact in big integers so astronomically large counts survive.
pub fn classical_scaling(method: ClassicalMethod, n: u64, eta: u64) -> Result<BigUint> {
    if n == 0 || eta == 0 {
        return Err(CorrError::Domain(format!(
            "need positive orbital and electron counts, got N = {n}, eta = {eta}"
        )));
    }
    let virt = |label: &str| -> Result<u64> {
        let half = eta / 2;
        if n < half {
            return Err(CorrError::Domain(format!(
                "{label} needs N >= eta/2, got N = {n}, eta = {eta}"
            )));
        }
        Ok(n - half)
    };
    match method {
        ClassicalMethod::Fci => {
            if eta % 2 != 0 {
                return Err(CorrError::Domain(format!(
                    "closed-shell determinant count needs even eta, got {eta}"
                )));
            }
            virt("FCI")?;
            Ok(binomial(n, eta / 2))
        }
        ClassicalMethod::CcsdT => {
            let v = BigUint::from(virt("CCSD(T)")?);
            Ok(BigUint::from(eta).pow(3) * v.pow(4))
        }
        ClassicalMethod::Sci { n_determinants } => {
            let v = BigUint::from(virt("SCI")?);
            Ok(BigUint::from(n_determinants) * BigUint::from(eta).pow(2) * v.pow(2))
        }
        ClassicalMethod::Dmrg { bond_dimension } => {
            let b = BigUint::from(bond_dimension);
            let nn = BigUint::from(n);
            Ok(b.pow(3) * nn.pow(3) + b.pow(2) * nn.pow(4))
        }
    }
}

/// Exact binomial coefficient C(n, k).
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut result = BigUint::from(1u32);
    for i in 0..k {
        result = result * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    result
}

/// Inputs for the critical aluminum fraction criterion. All quantities
/// positive; units must mutually cancel (the fraction is dimensionless).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaleFormationInputs {
    /// Critical oxide volume fraction for lateral coalescence.
    pub g_star: f64,
    /// Oxygen solubility at the surface (mole fraction).
    pub n_o_s: f64,
    /// Oxygen diffusivity in the alloy.
    pub d_o: f64,
    /// Molar volume of the alloy.
    pub v_m: f64,
    /// Aluminum diffusivity in the alloy.
    pub d_al: f64,
    /// Molar volume of the oxide per mole of aluminum.
    pub v_ox: f64,
}

/// Minimum aluminum mole fraction that sustains an external alumina
/// scale instead of internal oxidation:
/// N_Al* = sqrt(pi g*/3 * N_O^s * D_O V_m / (D_Al V_ox)).
pub fn critical_al_fraction(inputs: &ScaleFormationInputs) -> Result<f64> {
    let fields = [
        ("g_star", inputs.g_star),
        ("n_o_s", inputs.n_o_s),
        ("d_o", inputs.d_o),
        ("v_m", inputs.v_m),
        ("d_al", inputs.d_al),
        ("v_ox", inputs.v_ox),
    ];
    for (name, v) in fields {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CorrError::Domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let value = (std::f64::consts::PI * inputs.g_star / 3.0
        * inputs.n_o_s
        * inputs.d_o
        * inputs.v_m
        / (inputs.d_al * inputs.v_ox))
        .sqrt();
    Ok(value)
}
