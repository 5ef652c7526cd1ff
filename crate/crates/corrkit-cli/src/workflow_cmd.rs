//! `workflow` subcommands: closed-form quantities that take their inputs
//! straight from flags and print a JSON document to stdout.

use std::path::{Path, PathBuf};

use serde::Serialize;

use corrkit::workflow::{
    arrhenius_rate, classical_scaling, critical_al_fraction, solution_energy, ClassicalMethod,
    ScaleFormationInputs,
};

use crate::report::stdout_document;
use crate::{CliError, CliResult, MethodArg};

fn emit<T: Serialize>(
    command: &str,
    inputs: serde_json::Value,
    result: &T,
    out: Option<&Path>,
) -> CliResult<()> {
    let doc = stdout_document(command, inputs, result)?;
    println!("{doc}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Config(format!("cannot create output dir {}: {e}", dir.display()))
        })?;
        let stem = command.replace(' ', "_");
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, doc + "\n")
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn arrhenius(
    prefactor_hz: f64,
    e_a_hartree: f64,
    temperature_k: f64,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let rate = arrhenius_rate(prefactor_hz, e_a_hartree, temperature_k)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(
        "workflow arrhenius",
        serde_json::json!({
            "prefactor_hz": prefactor_hz,
            "e_a_hartree": e_a_hartree,
            "temperature_k": temperature_k,
        }),
        &serde_json::json!({ "rate_per_s": rate }),
        out.map(|p| p.as_path()),
    )
}

pub fn scaling(
    method: MethodArg,
    n_orbitals: u64,
    eta: u64,
    n_determinants: Option<u64>,
    bond_dimension: Option<u64>,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let method_enum = match method {
        MethodArg::Fci => ClassicalMethod::Fci,
        MethodArg::CcsdT => ClassicalMethod::CcsdT,
        MethodArg::Sci => ClassicalMethod::Sci {
            n_determinants: n_determinants.ok_or_else(|| {
                CliError::Config("--n-determinants is required for method sci".to_string())
            })?,
        },
        MethodArg::Dmrg => ClassicalMethod::Dmrg {
            bond_dimension: bond_dimension.ok_or_else(|| {
                CliError::Config("--bond-dimension is required for method dmrg".to_string())
            })?,
        },
    };
    let cost = classical_scaling(method_enum, n_orbitals, eta)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cost_str = cost.to_string();
    emit(
        "workflow scaling",
        serde_json::json!({
            "method": format!("{method:?}").to_lowercase(),
            "n_orbitals": n_orbitals,
            "eta": eta,
            "n_determinants": n_determinants,
            "bond_dimension": bond_dimension,
        }),
        &serde_json::json!({
            "cost": cost_str,
            "cost_log10": decimal_log10(&cost_str),
        }),
        out.map(|p| p.as_path()),
    )
}

/// log10 of a decimal integer string, good to ~1e-15 relative.
fn decimal_log10(digits: &str) -> f64 {
    let lead: String = digits.chars().take(15).collect();
    let lead_val: f64 = lead.parse().unwrap_or(1.0);
    lead_val.log10() + (digits.len() - lead.len()) as f64
}

pub fn solution(
    e_defected_ha: f64,
    e_host_ha: f64,
    e_dimer_ha: f64,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let e = solution_energy(e_defected_ha, e_host_ha, e_dimer_ha)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(
        "workflow solution-energy",
        serde_json::json!({
            "e_defected_ha": e_defected_ha,
            "e_host_ha": e_host_ha,
            "e_dimer_ha": e_dimer_ha,
        }),
        &serde_json::json!({ "solution_energy_ha": e }),
        out.map(|p| p.as_path()),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn crit_al(
    g_star: f64,
    n_o_s: f64,
    d_o: f64,
    v_m: f64,
    d_al: f64,
    v_ox: f64,
    out: Option<&PathBuf>,
) -> CliResult<()> {
    let inputs = ScaleFormationInputs { g_star, n_o_s, d_o, v_m, d_al, v_ox };
    let fraction = critical_al_fraction(&inputs).map_err(|e| CliError::Config(e.to_string()))?;
    emit(
        "workflow crit-al",
        serde_json::to_value(&inputs)
            .map_err(|e| CliError::Compute(format!("input serialization failed: {e}")))?,
        &serde_json::json!({ "critical_al_fraction": fraction }),
        out.map(|p| p.as_path()),
    )
}
