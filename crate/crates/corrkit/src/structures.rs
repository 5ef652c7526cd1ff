//! Periodic atomistic geometries: extended-XYZ ingestion, electron and
//! nuclear-charge bookkeeping, cell geometry in atomic units.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::BOHR_PER_ANGSTROM;
use crate::error::{CorrError, Result};

/// How per-atom charges are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronMode {
    Valence,
    AllElectron,
}

/// One atom of a periodic cell. Positions are Cartesian Angstrom.
/// `zeta` is the nuclear charge seen by the estimators: the full atomic
/// number in all-electron mode, the valence charge otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub symbol: String,
    pub position: [f64; 3],
    pub zeta: u32,
}

/// Orthorhombic periodic cell with resolved per-atom charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalCell {
    /// Box edge lengths (L_x, L_y, L_z) in Angstrom.
    pub lengths: [f64; 3],
    pub atoms: Vec<Atom>,
    pub electron_mode: ElectronMode,
}

/// Per-element valence electron count and atomic number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValenceTable {
    entries: BTreeMap<String, (u32, u32)>,
}

impl Default for ValenceTable {
    fn default() -> Self {
        // (valence, Z) for the elements the shipped models use.
        let defaults: &[(&str, u32, u32)] = &[
            ("H", 1, 1),
            ("O", 6, 8),
            ("Mg", 2, 12),
            ("Al", 3, 13),
            ("Ti", 4, 22),
            ("Zr", 4, 40),
            ("Nb", 5, 41),
            ("Hf", 4, 72),
            ("Ta", 5, 73),
            ("W", 6, 74),
        ];
        let mut entries = BTreeMap::new();
        for &(sym, val, z) in defaults {
            entries.insert(sym.to_string(), (val, z));
        }
        ValenceTable { entries }
    }
}

impl ValenceTable {
    /// Insert or override an element entry. Requires 1 <= valence <= z.
    pub fn set(&mut self, symbol: &str, valence: u32, z: u32) -> Result<()> {
        if valence < 1 || valence > z {
            return Err(CorrError::Invalid(format!(
                "valence {valence} out of range [1, {z}] for {symbol}"
            )));
        }
        self.entries.insert(symbol.to_string(), (valence, z));
        Ok(())
    }

    pub fn get(&self, symbol: &str) -> Result<(u32, u32)> {
        self.entries
            .get(symbol)
            .copied()
            .ok_or_else(|| CorrError::UnknownSpecies(symbol.to_string()))
    }

    pub fn charge(&self, symbol: &str, mode: ElectronMode) -> Result<u32> {
        let (valence, z) = self.get(symbol)?;
        Ok(match mode {
            ElectronMode::Valence => valence,
            ElectronMode::AllElectron => z,
        })
    }
}

/// Electron count and total nuclear charge of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronCount {
    pub eta: u64,
    pub lambda_zeta: u64,
}

impl CrystalCell {
    /// Total electron count from the resolved per-atom charges.
    pub fn eta(&self) -> u64 {
        self.atoms.iter().map(|a| a.zeta as u64).sum()
    }

    /// Total nuclear charge. Neutral cells make this equal to eta.
    pub fn lambda_zeta(&self) -> u64 {
        self.eta()
    }

    /// Cell volume in Bohr^3.
    pub fn volume_bohr3(&self) -> f64 {
        self.lengths
            .iter()
            .map(|l| l * BOHR_PER_ANGSTROM)
            .product()
    }

    /// Edge lengths in Bohr.
    pub fn lengths_bohr(&self) -> [f64; 3] {
        [
            self.lengths[0] * BOHR_PER_ANGSTROM,
            self.lengths[1] * BOHR_PER_ANGSTROM,
            self.lengths[2] * BOHR_PER_ANGSTROM,
        ]
    }

    /// Re-resolve all atom charges under a new electron mode.
    pub fn with_mode(&self, mode: ElectronMode, table: &ValenceTable) -> Result<CrystalCell> {
        let mut cell = self.clone();
        cell.electron_mode = mode;
        for atom in &mut cell.atoms {
            atom.zeta = table.charge(&atom.symbol, mode)?;
        }
        Ok(cell)
    }
}

/// Cell volume in Bohr^3.
pub fn cell_volume(cell: &CrystalCell) -> f64 {
    cell.volume_bohr3()
}

/// Electron count and total nuclear charge under the cell's electron mode,
/// resolved through the given table.
pub fn electron_count(cell: &CrystalCell, table: &ValenceTable) -> Result<ElectronCount> {
    let mut eta = 0u64;
    for atom in &cell.atoms {
        eta += table.charge(&atom.symbol, cell.electron_mode)? as u64;
    }
    Ok(ElectronCount {
        eta,
        lambda_zeta: eta,
    })
}

/// Parse extended-XYZ content with the default valence table, valence mode.
pub fn parse_geometry(text: &str) -> Result<CrystalCell> {
    parse_geometry_with(text, &ValenceTable::default(), ElectronMode::Valence)
}

/// Parse extended-XYZ content. The comment line must carry a 9-number
/// Lattice="..." entry; only orthorhombic (diagonal) lattices are accepted.
pub fn parse_geometry_with(
    text: &str,
    table: &ValenceTable,
    mode: ElectronMode,
) -> Result<CrystalCell> {
    let mut lines = text.lines().enumerate();
    let (_, count_line) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty geometry file"))?;
    let n_atoms: usize = count_line
        .trim()
        .parse()
        .map_err(|_| parse_err(1, "first line must be the atom count"))?;

    let (_, comment) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing comment line"))?;
    let lengths = parse_lattice(comment)?;

    let mut atoms = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(n_atoms + 2, "fewer atom lines than the declared count"))?;
        let line_no = idx + 1;
        let mut fields = line.split_whitespace();
        let symbol = fields
            .next()
            .ok_or_else(|| parse_err(line_no, "empty atom line"))?;
        let mut position = [0.0f64; 3];
        for slot in &mut position {
            let field = fields
                .next()
                .ok_or_else(|| parse_err(line_no, "expected 3 coordinates"))?;
            *slot = field
                .parse()
                .map_err(|_| parse_err(line_no, &format!("bad coordinate '{field}'")))?;
            if !slot.is_finite() {
                return Err(parse_err(line_no, "non-finite coordinate"));
            }
        }
        let zeta = table.charge(symbol, mode)?;
        atoms.push(Atom {
            symbol: symbol.to_string(),
            position,
            zeta,
        });
    }

    Ok(CrystalCell {
        lengths,
        atoms,
        electron_mode: mode,
    })
}

/// Write a cell back out as extended XYZ (inverse of parse on the fields
/// the estimators use).
pub fn serialize_geometry(cell: &CrystalCell) -> String {
    let [lx, ly, lz] = cell.lengths;
    let mut out = format!(
        "{}\nLattice=\"{lx} 0.0 0.0 0.0 {ly} 0.0 0.0 0.0 {lz}\" Properties=species:S:1:pos:R:3\n",
        cell.atoms.len()
    );
    for atom in &cell.atoms {
        out.push_str(&format!(
            "{} {:.12} {:.12} {:.12}\n",
            atom.symbol, atom.position[0], atom.position[1], atom.position[2]
        ));
    }
    out
}

fn parse_err(line: usize, msg: &str) -> CorrError {
    CorrError::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_lattice(comment: &str) -> Result<[f64; 3]> {
    let start = comment
        .find("Lattice=\"")
        .ok_or_else(|| parse_err(2, "comment line lacks a Lattice=\"...\" entry"))?
        + "Lattice=\"".len();
    let rest = &comment[start..];
    let end = rest
        .find('"')
        .ok_or_else(|| parse_err(2, "unterminated Lattice entry"))?;
    let nums: Vec<f64> = rest[..end]
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(2, "Lattice entry must hold 9 numbers"))?;
    if nums.len() != 9 {
        return Err(parse_err(2, "Lattice entry must hold 9 numbers"));
    }
    for (i, &v) in nums.iter().enumerate() {
        let on_diagonal = i == 0 || i == 4 || i == 8;
        if !on_diagonal && v.abs() >= 1e-9 {
            return Err(CorrError::UnsupportedLattice(format!(
                "off-diagonal lattice component {v} at slot {i}; only orthorhombic cells are supported"
            )));
        }
    }
    let lengths = [nums[0], nums[4], nums[8]];
    if lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(CorrError::UnsupportedLattice(
            "lattice diagonal must be positive".to_string(),
        ));
    }
    Ok(lengths)
}
