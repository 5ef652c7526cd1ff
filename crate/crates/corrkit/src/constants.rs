//! Physical constants and unit conversions (CODATA 2018).

/// Bohr radii per Angstrom.
pub const BOHR_PER_ANGSTROM: f64 = 1.8897259886;

/// Centimeters per Bohr radius.
pub const CM_PER_BOHR: f64 = 5.29177210903e-9;

/// Hartree energies per Rydberg.
pub const HARTREE_PER_RYDBERG: f64 = 0.5;

/// Boltzmann constant in eV/K.
pub const KB_EV_PER_K: f64 = 8.617333262e-5;

/// Molar gas constant in J/(mol K).
pub const R_J_PER_MOL_K: f64 = 8.31446261815324;

/// One Hartree in Joules.
pub const HARTREE_J: f64 = 4.3597447222071e-18;

/// Avogadro constant, 1/mol.
pub const AVOGADRO: f64 = 6.02214076e23;

/// One Hartree in J/mol.
pub const HARTREE_J_PER_MOL: f64 = HARTREE_J * AVOGADRO;
