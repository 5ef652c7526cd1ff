//! `geom inspect`: summarize a geometry file, including electron counts
//! in both counting modes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use corrkit::structures::{electron_count, parse_geometry_with, ElectronMode, ValenceTable};

use crate::report::stdout_document;
use crate::{CliError, CliResult};

pub fn inspect(geometry: &PathBuf, mode: ElectronMode) -> CliResult<()> {
    let text = std::fs::read_to_string(geometry).map_err(|e| {
        CliError::Config(format!("cannot read geometry {}: {e}", geometry.display()))
    })?;
    let table = ValenceTable::default();
    let cell = parse_geometry_with(&text, &table, mode)
        .map_err(|e| CliError::Config(format!("bad geometry {}: {e}", geometry.display())))?;

    let mut composition: BTreeMap<String, usize> = BTreeMap::new();
    for atom in &cell.atoms {
        *composition.entry(atom.symbol.clone()).or_insert(0) += 1;
    }
    let valence_cell = cell.with_mode(ElectronMode::Valence, &table).map_err(CliError::compute)?;
    let all_cell = cell.with_mode(ElectronMode::AllElectron, &table).map_err(CliError::compute)?;
    let count_valence = electron_count(&valence_cell, &table).map_err(CliError::compute)?;
    let count_all = electron_count(&all_cell, &table).map_err(CliError::compute)?;

    let doc = stdout_document(
        "geom inspect",
        serde_json::json!({
            "geometry": geometry.display().to_string(),
            "electron_mode": match mode {
                ElectronMode::Valence => "valence",
                ElectronMode::AllElectron => "all_electron",
            },
        }),
        &serde_json::json!({
            "n_atoms": cell.atoms.len(),
            "composition": composition,
            "lengths_angstrom": cell.lengths,
            "lengths_bohr": cell.lengths_bohr(),
            "volume_bohr3": cell.volume_bohr3(),
            "eta": cell.eta(),
            "lambda_zeta": cell.lambda_zeta(),
            "eta_valence": count_valence.eta,
            "eta_all_electron": count_all.eta,
        }),
    )?;
    println!("{doc}");
    Ok(())
}
