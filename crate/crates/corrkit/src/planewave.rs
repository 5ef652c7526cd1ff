//! Reciprocal-lattice grid construction from an energy cutoff, and the
//! grid sums the resource estimators consume.
//!
//! The grid G is a symmetric box of integer frequency vectors, m_i points
//! along axis i with m_i odd so the range is [-(m_i-1)/2, (m_i-1)/2].
//! G0 is G minus the zero vector.

use serde::{Deserialize, Serialize};

use crate::constants::HARTREE_PER_RYDBERG;
use crate::error::{CorrError, Result};
use crate::structures::CrystalCell;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveBasis {
    /// Odd per-axis point counts (m_x, m_y, m_z).
    pub per_axis: [u64; 3],
    /// Total plane waves N = m_x * m_y * m_z.
    pub n: u64,
    /// Momentum-register bits per dimension.
    pub n_p: u32,
    /// Wavefunction cutoff in Rydberg that produced this grid.
    pub e_cut_ry: f64,
    /// Grid-spacing scale factor, in (0, 1].
    pub gamma: f64,
    /// Cell volume in Bohr^3.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSums {
    /// Sum over G0 of 1/|nu|^2 (integer-vector norms).
    pub sum_inv_nu_sq: f64,
    /// Sum over G0 of 1/|nu|.
    pub sum_inv_nu: f64,
}

/// Smallest odd integer >= x, floored at 1. Values within 1e-9 of an
/// integer are treated as that integer so exact unit-cell ratios do not
/// jump a shell from float noise.
fn odd_ceil(x: f64) -> u64 {
    let snapped = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    let m = snapped.max(1.0) as u64;
    if m % 2 == 0 {
        m + 1
    } else {
        m
    }
}

/// Momentum bits for a grid of N points: enough to index a signed range
/// one past the per-dimension extent N^{1/3}.
fn momentum_bits(n: u64) -> u32 {
    let cbrt = (n as f64).cbrt();
    let cbrt = if (cbrt - cbrt.round()).abs() < 1e-9 {
        cbrt.round()
    } else {
        cbrt
    };
    (((cbrt + 1.0).log2().ceil()) as u32).max(1)
}

/// Build the reciprocal grid for a cell at a given wavefunction cutoff.
///
/// The cutoff fixes a real-space lattice constant a0 = gamma*sqrt(2 pi^2 / E_c)
/// (E_c in Hartree) and each axis takes the smallest odd point count that
/// resolves it: m_i = odd ceiling of L_i / a0.
pub fn grid_from_cutoff(cell: &CrystalCell, e_cut_ry: f64, gamma: f64) -> Result<PlaneWaveBasis> {
    if !(e_cut_ry > 0.0) {
        return Err(CorrError::Domain(format!(
            "cutoff must be positive, got {e_cut_ry} Ry"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(CorrError::Domain(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let e_cut_ha = e_cut_ry * HARTREE_PER_RYDBERG;
    let a0 = gamma * (2.0 * std::f64::consts::PI.powi(2) / e_cut_ha).sqrt();
    let lengths = cell.lengths_bohr();
    let per_axis = [
        odd_ceil(lengths[0] / a0),
        odd_ceil(lengths[1] / a0),
        odd_ceil(lengths[2] / a0),
    ];
    let n = per_axis.iter().product();
    Ok(PlaneWaveBasis {
        per_axis,
        n,
        n_p: momentum_bits(n),
        e_cut_ry,
        gamma,
        omega: cell.volume_bohr3(),
    })
}

impl PlaneWaveBasis {
    /// Basis with explicit per-axis counts; counts must be odd.
    pub fn from_counts(per_axis: [u64; 3], omega: f64) -> Result<PlaneWaveBasis> {
        if per_axis.iter().any(|&m| m == 0 || m % 2 == 0) {
            return Err(CorrError::Domain(format!(
                "per-axis counts must be odd and positive, got {per_axis:?}"
            )));
        }
        let n = per_axis.iter().product();
        Ok(PlaneWaveBasis {
            per_axis,
            n,
            n_p: momentum_bits(n),
            e_cut_ry: f64::NAN,
            gamma: 1.0,
            omega,
        })
    }

    /// Signed half-extent along each axis: h_i = (m_i - 1)/2.
    pub fn half_extents(&self) -> [i64; 3] {
        [
            (self.per_axis[0] as i64 - 1) / 2,
            (self.per_axis[1] as i64 - 1) / 2,
            (self.per_axis[2] as i64 - 1) / 2,
        ]
    }
}

/// Evaluate both G0 sums. Uses octant symmetry (norms depend only on
/// component magnitudes); agrees with the brute-force triple loop to
/// better than 1e-12 relative on grids up to 101^3.
pub fn grid_sums(basis: &PlaneWaveBasis) -> GridSums {
    let [hx, hy, hz] = basis.half_extents();
    let mut inv_sq = KahanSum::default();
    let mut inv = KahanSum::default();
    for i in 0..=hx {
        let wi = if i == 0 { 1.0 } else { 2.0 };
        for j in 0..=hy {
            let wj = if j == 0 { 1.0 } else { 2.0 };
            for k in 0..=hz {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let wk = if k == 0 { 1.0 } else { 2.0 };
                let w = wi * wj * wk;
                let nsq = (i * i + j * j + k * k) as f64;
                inv_sq.add(w / nsq);
                inv.add(w / nsq.sqrt());
            }
        }
    }
    GridSums {
        sum_inv_nu_sq: inv_sq.value(),
        sum_inv_nu: inv.value(),
    }
}

/// Reference implementation: literal loop over every G0 vector.
pub fn grid_sums_brute(basis: &PlaneWaveBasis) -> GridSums {
    let [hx, hy, hz] = basis.half_extents();
    let mut inv_sq = KahanSum::default();
    let mut inv = KahanSum::default();
    for i in -hx..=hx {
        for j in -hy..=hy {
            for k in -hz..=hz {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let nsq = (i * i + j * j + k * k) as f64;
                inv_sq.add(1.0 / nsq);
                inv.add(1.0 / nsq.sqrt());
            }
        }
    }
    GridSums {
        sum_inv_nu_sq: inv_sq.value(),
        sum_inv_nu: inv.value(),
    }
}

/// Compensated accumulator so the symmetric and brute-force paths agree
/// to near machine precision regardless of summation order.
#[derive(Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::BOHR_PER_ANGSTROM;
    use crate::structures::{parse_geometry, CrystalCell, ElectronMode};
    use approx::assert_relative_eq;

    fn cube_cell(side_bohr: f64) -> CrystalCell {
        CrystalCell {
            lengths: [side_bohr / BOHR_PER_ANGSTROM; 3],
            atoms: vec![],
            electron_mode: ElectronMode::Valence,
        }
    }

    fn dimer_cell() -> CrystalCell {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/mg_dimer.xyz"
        ))
        .unwrap();
        parse_geometry(&text).unwrap()
    }

    #[test]
    fn unit_spacing_cube() {
        // E_c = 2 pi^2 Ha = 4 pi^2 Ry forces a0 = 1 Bohr
        let e_cut_ry = 4.0 * std::f64::consts::PI.powi(2);
        let basis = grid_from_cutoff(&cube_cell(5.0), e_cut_ry, 1.0).unwrap();
        assert_eq!(basis.per_axis, [5, 5, 5]);
        assert_eq!(basis.n, 125);
        assert_eq!(basis.n_p, 3);
    }

    #[test]
    fn coarse_cutoff_clamps_to_single_point() {
        let basis = grid_from_cutoff(&cube_cell(1.0), 0.05, 1.0).unwrap();
        assert_eq!(basis.per_axis, [1, 1, 1]);
        assert_eq!(basis.n, 1);
        assert_eq!(basis.n_p, 1);
    }

    #[test]
    fn dimer_grid_at_30_ry() {
        let basis = grid_from_cutoff(&dimer_cell(), 30.0, 1.0).unwrap();
        assert_eq!(basis.per_axis, [21, 21, 33]);
        assert_eq!(basis.n, 14553);
        assert_eq!(basis.n_p, 5);
    }

    #[test]
    fn dimer_sweep_endpoints_near_reference_range() {
        // published sweep over [11, 46] Ry spans N in [3380, 27716]; our odd
        // grids land within one grid shell of those endpoints
        let low = grid_from_cutoff(&dimer_cell(), 11.0, 1.0).unwrap();
        let high = grid_from_cutoff(&dimer_cell(), 46.0, 1.0).unwrap();
        assert_eq!(low.n, 3549);
        assert_eq!(high.n, 29889);
        assert!((low.n as f64 / 3380.0 - 1.0).abs() < 0.15);
        assert!((high.n as f64 / 27716.0 - 1.0).abs() < 0.15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(grid_from_cutoff(&cube_cell(5.0), 0.0, 1.0).is_err());
        assert!(grid_from_cutoff(&cube_cell(5.0), -3.0, 1.0).is_err());
        assert!(grid_from_cutoff(&cube_cell(5.0), 10.0, 0.0).is_err());
        assert!(grid_from_cutoff(&cube_cell(5.0), 10.0, 1.5).is_err());
        assert!(PlaneWaveBasis::from_counts([4, 5, 5], 1.0).is_err());
    }

    #[test]
    fn twenty_six_vector_sums() {
        let basis = PlaneWaveBasis::from_counts([3, 3, 3], 1.0).unwrap();
        let sums = grid_sums(&basis);
        assert_relative_eq!(sums.sum_inv_nu_sq, 44.0 / 3.0, max_relative = 1e-14);
        let expected = 6.0 + 12.0 / 2f64.sqrt() + 8.0 / 3f64.sqrt();
        assert_relative_eq!(sums.sum_inv_nu, expected, max_relative = 1e-14);
    }

    #[test]
    fn symmetric_matches_brute_force() {
        for counts in [[3, 3, 3], [5, 7, 9], [21, 21, 33], [101, 101, 101]] {
            let basis = PlaneWaveBasis::from_counts(counts, 1.0).unwrap();
            let fast = grid_sums(&basis);
            let brute = grid_sums_brute(&basis);
            assert_relative_eq!(
                fast.sum_inv_nu_sq,
                brute.sum_inv_nu_sq,
                max_relative = 1e-12
            );
            assert_relative_eq!(fast.sum_inv_nu, brute.sum_inv_nu, max_relative = 1e-12);
        }
    }

    #[test]
    fn sums_grow_with_extent() {
        let mut prev = GridSums {
            sum_inv_nu_sq: 0.0,
            sum_inv_nu: 0.0,
        };
        for m in (3..=31).step_by(2) {
            let basis = PlaneWaveBasis::from_counts([m, m, m], 1.0).unwrap();
            let sums = grid_sums(&basis);
            assert!(sums.sum_inv_nu_sq > prev.sum_inv_nu_sq);
            assert!(sums.sum_inv_nu > prev.sum_inv_nu);
            prev = sums;
        }
    }

    #[test]
    fn lambda_nu_scales_at_most_linearly_in_extent() {
        // sum 1/|nu|^2 over a box of half-extent h grows like O(h), so the
        // ratio against the axis count must stay bounded
        let mut ratios = Vec::new();
        for m in (3..=61).step_by(2) {
            let basis = PlaneWaveBasis::from_counts([m, m, m], 1.0).unwrap();
            let sums = grid_sums(&basis);
            ratios.push(sums.sum_inv_nu_sq / m as f64);
        }
        // the box integral of 1/r^2 gives an asymptote near 7.7
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max < 8.0, "ratio grew to {max}");
    }

    #[test]
    fn momentum_bits_step_at_power_boundaries() {
        // on cubic grids n_p increments exactly when the axis count crosses 2^k - 1
        for (m, expected) in [(1, 1), (3, 2), (5, 3), (7, 3), (9, 4), (15, 4), (17, 5)] {
            let basis = PlaneWaveBasis::from_counts([m, m, m], 1.0).unwrap();
            assert_eq!(basis.n_p, expected, "m = {m}");
        }
    }

    #[test]
    fn odd_ceil_snaps_near_integers() {
        assert_eq!(odd_ceil(5.0 + 1e-12), 5);
        assert_eq!(odd_ceil(5.0 - 1e-12), 5);
        assert_eq!(odd_ceil(5.1), 7);
        assert_eq!(odd_ceil(4.2), 5);
        assert_eq!(odd_ceil(0.3), 1);
    }
}
