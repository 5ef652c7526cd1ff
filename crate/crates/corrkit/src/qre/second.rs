//! Second-quantized resource estimation in the dual plane-wave basis.
//!
//! The Hamiltonian is diagonal-dominant with translation-invariant
//! kinetic (T) and electron-electron (V) coefficients indexed by the
//! orbital offset p-q on the grid torus, and a per-orbital external
//! potential U. Explicit coefficients are materialized up to a size
//! guard; past it the quadratic-in-N extrapolation model takes over.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::planewave::{KahanSum, PlaneWaveBasis};
use crate::qre::first::{qpe_iterations, CLIFFORD_PER_T};
use crate::qre::{Provenance, ResourceEstimate};
use crate::structures::CrystalCell;

/// Largest N materialized explicitly by default; beyond it the
/// extrapolation path is the supported route.
pub const DEFAULT_EXPLICIT_GUARD: u64 = 20_000;

/// Per-step T-gate model t = A_T * N_so + B_T * mu + C_T. Calibrated once
/// against the reference niobium-alloy run at 10 Ry and frozen.
pub const A_T: f64 = 97.23;
pub const B_T: f64 = 16.0;
pub const C_T: f64 = 0.0;

/// Qubit model n_log = 2N + ceil(ALPHA * log2(4 sqrt(2) pi lambda^3 N^5 /
/// eps^3)) + BETA, same calibration provenance.
pub const ALPHA: f64 = 1.0;
pub const BETA: i64 = -6;

/// Default phase-estimation energy resolution, Hartree.
pub const DEFAULT_DELTA_E: f64 = 1e-3;

/// Explicit dual plane-wave Hamiltonian coefficients on the grid torus.
/// T and V depend only on the offset p-q; U is per orbital.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpwCoefficients {
    pub per_axis: [u64; 3],
    /// Spatial orbitals N (= grid points).
    pub n: u64,
    /// Spin orbitals, 2N.
    pub n_so: u64,
    /// Cell volume, Bohr^3.
    pub omega: f64,
    t: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl DpwCoefficients {
    fn wrap(&self, offset: [i64; 3]) -> usize {
        let m = [
            self.per_axis[0] as i64,
            self.per_axis[1] as i64,
            self.per_axis[2] as i64,
        ];
        let d = [
            offset[0].rem_euclid(m[0]),
            offset[1].rem_euclid(m[1]),
            offset[2].rem_euclid(m[2]),
        ];
        ((d[0] * m[1] + d[1]) * m[2] + d[2]) as usize
    }

    /// Kinetic coefficient at offset p-q, Hartree.
    pub fn t_of(&self, offset: [i64; 3]) -> f64 {
        self.t[self.wrap(offset)]
    }

    /// External-potential coefficient at orbital p (grid indices), Hartree.
    pub fn u_of(&self, p: [u64; 3]) -> f64 {
        let idx = ((p[0] * self.per_axis[1] + p[1]) * self.per_axis[2] + p[2]) as usize;
        self.u[idx]
    }

    /// Electron-electron coefficient at offset p-q, Hartree.
    pub fn v_of(&self, offset: [i64; 3]) -> f64 {
        self.v[self.wrap(offset)]
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    /// Grid index triple for a flat array position.
    pub fn unflatten(&self, idx: usize) -> [u64; 3] {
        let mz = self.per_axis[2];
        let my = self.per_axis[1];
        let i = idx as u64;
        [i / (my * mz), (i / mz) % my, i % mz]
    }
}

/// Materialize the DPW coefficient arrays with the default size guard.
pub fn dpw_coefficients(cell: &CrystalCell, basis: &PlaneWaveBasis) -> Result<DpwCoefficients> {
    dpw_coefficients_with_guard(cell, basis, DEFAULT_EXPLICIT_GUARD)
}

/// Materialize the DPW coefficient arrays.
///
/// k_nu = 2 pi nu_i / L_i with nu_i signed on [-(m_i-1)/2, (m_i-1)/2];
/// orbital p sits at r_p = (p_i L_i / m_i). Then
///   T(d) = (1/(2 N_so)) sum_nu |k|^2 cos(k . r_d)
///   U(p) = -(4 pi / Omega) sum_{j, nu != 0} zeta_j cos(k . (R_j - r_p)) / |k|^2
///   V(d) = (2 pi / Omega) sum_{nu != 0} cos(k . r_d) / |k|^2
pub fn dpw_coefficients_with_guard(
    cell: &CrystalCell,
    basis: &PlaneWaveBasis,
    guard: u64,
) -> Result<DpwCoefficients> {
    if basis.n > guard {
        return Err(CorrError::ExplicitModeTooLarge {
            n: basis.n,
            guard,
        });
    }
    let m: [usize; 3] = [
        basis.per_axis[0] as usize,
        basis.per_axis[1] as usize,
        basis.per_axis[2] as usize,
    ];
    let n = m[0] * m[1] * m[2];
    let n_so = 2 * n as u64;
    let lengths = cell.lengths_bohr();
    let omega = basis.omega;
    let two_pi = 2.0 * std::f64::consts::PI;

    // signed frequency for a raw grid index (0..h, then -h..-1)
    let signed = |a: usize, mi: usize| -> i64 {
        let h = (mi as i64 - 1) / 2;
        if (a as i64) <= h {
            a as i64
        } else {
            a as i64 - mi as i64
        }
    };

    // per-frequency k^2, 1/k^2, and the nuclear structure factor
    // B_nu = sum_j zeta_j exp(i k . R_j)
    let mut k2 = vec![0.0f64; n];
    let mut inv_k2 = vec![0.0f64; n];
    let mut b_re = vec![0.0f64; n];
    let mut b_im = vec![0.0f64; n];
    for ax in 0..m[0] {
        let kx = two_pi * signed(ax, m[0]) as f64 / lengths[0];
        for ay in 0..m[1] {
            let ky = two_pi * signed(ay, m[1]) as f64 / lengths[1];
            for az in 0..m[2] {
                let kz = two_pi * signed(az, m[2]) as f64 / lengths[2];
                let idx = (ax * m[1] + ay) * m[2] + az;
                let ksq = kx * kx + ky * ky + kz * kz;
                k2[idx] = ksq;
                if ksq > 0.0 {
                    inv_k2[idx] = 1.0 / ksq;
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for atom in &cell.atoms {
                        let phase = kx * atom.position[0] * crate::constants::BOHR_PER_ANGSTROM
                            + ky * atom.position[1] * crate::constants::BOHR_PER_ANGSTROM
                            + kz * atom.position[2] * crate::constants::BOHR_PER_ANGSTROM;
                        let (s, c) = phase.sin_cos();
                        re += atom.zeta as f64 * c;
                        im += atom.zeta as f64 * s;
                    }
                    b_re[idx] = re;
                    b_im[idx] = im;
                }
            }
        }
    }

    // phase tables: tab[axis][a * m + d] = exp(2 pi i a d / m)
    let tab: Vec<Vec<(f64, f64)>> = (0..3)
        .map(|axis| {
            let mi = m[axis];
            let mut t = vec![(0.0f64, 0.0f64); mi * mi];
            for a in 0..mi {
                for d in 0..mi {
                    let (s, c) = (two_pi * (a * d) as f64 / mi as f64).sin_cos();
                    t[a * mi + d] = (c, s);
                }
            }
            t
        })
        .collect();

    // one pass per offset/orbital index accumulates all three sums
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|flat| {
            let dz = flat % m[2];
            let dy = (flat / m[2]) % m[1];
            let dx = flat / (m[1] * m[2]);
            let mut t_sum = KahanSum::default();
            let mut v_sum = KahanSum::default();
            let mut u_sum = KahanSum::default();
            for ax in 0..m[0] {
                let (cx, sx) = tab[0][ax * m[0] + dx];
                for ay in 0..m[1] {
                    let (cy, sy) = tab[1][ay * m[1] + dy];
                    let cxy = cx * cy - sx * sy;
                    let sxy = sx * cy + cx * sy;
                    let base = (ax * m[1] + ay) * m[2];
                    for az in 0..m[2] {
                        let (cz, sz) = tab[2][az * m[2] + dz];
                        let cos = cxy * cz - sxy * sz;
                        let sin = sxy * cz + cxy * sz;
                        let idx = base + az;
                        t_sum.add(k2[idx] * cos);
                        v_sum.add(inv_k2[idx] * cos);
                        // exp(-i k . r_p) pairs with B_nu
                        u_sum.add(inv_k2[idx] * (b_re[idx] * cos + b_im[idx] * sin));
                    }
                }
            }
            (t_sum.value(), v_sum.value(), u_sum.value())
        })
        .collect();

    let mut t = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for (ts, vs, us) in rows {
        t.push(ts / (2.0 * n_so as f64));
        v.push(two_pi / omega * vs);
        u.push(-2.0 * two_pi / omega * us);
    }

    Ok(DpwCoefficients {
        per_axis: basis.per_axis,
        n: n as u64,
        n_so,
        omega,
        t,
        u,
        v,
    })
}

/// Hamiltonian 1-norm over spatial orbital pairs:
/// lambda = sum_{pq} |T(p-q)| + sum_p |U(p)| + sum_{p != q} |V(p-q)|,
/// evaluated with offset multiplicities (each offset class holds exactly
/// N ordered pairs on the torus).
pub fn one_norm_second(coeffs: &DpwCoefficients) -> f64 {
    let n = coeffs.n as f64;
    let sum_t: f64 = coeffs.t.iter().map(|x| x.abs()).sum();
    let sum_u: f64 = coeffs.u.iter().map(|x| x.abs()).sum();
    // flat index 0 is the zero offset, excluded from the V term
    let sum_v: f64 = coeffs.v.iter().skip(1).map(|x| x.abs()).sum();
    n * sum_t + sum_u + n * sum_v
}

/// Literal double loop over ordered orbital pairs; test oracle for the
/// multiplicity shortcut.
pub fn one_norm_second_brute(coeffs: &DpwCoefficients) -> f64 {
    let n = coeffs.n as usize;
    let mut total = 0.0f64;
    for p in 0..n {
        let pi = coeffs.unflatten(p);
        total += coeffs.u[p].abs();
        for q in 0..n {
            let qi = coeffs.unflatten(q);
            let offset = [
                pi[0] as i64 - qi[0] as i64,
                pi[1] as i64 - qi[1] as i64,
                pi[2] as i64 - qi[2] as i64,
            ];
            total += coeffs.t_of(offset).abs();
            if p != q {
                total += coeffs.v_of(offset).abs();
            }
        }
    }
    total
}

/// Bits of the coefficient register for alias-sampling state preparation,
/// and the amplitude error it implies for an L-term LCU.
pub fn mu_bits(lambda: f64, delta_e: f64, h_norm_bound: f64, l_terms: u64) -> Result<(u32, f64)> {
    if !(lambda > 0.0) {
        return Err(CorrError::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(delta_e > 0.0) {
        return Err(CorrError::Domain(format!("delta_E must be > 0, got {delta_e}")));
    }
    if !(h_norm_bound >= 0.0) || h_norm_bound >= lambda {
        return Err(CorrError::Domain(format!(
            "norm bound must satisfy 0 <= |H| < lambda, got |H| = {h_norm_bound}, lambda = {lambda}"
        )));
    }
    if l_terms == 0 {
        return Err(CorrError::Domain("term count must be positive".to_string()));
    }
    let mu_real = (2.0 * 2f64.sqrt() * lambda / delta_e).log2()
        + (1.0 + delta_e.powi(2) / (8.0 * lambda.powi(2))).log2()
        - (1.0 - h_norm_bound.powi(2) / lambda.powi(2)).log2();
    let mu = mu_real.ceil() as u32;
    let epsilon_prep = 1.0 / (2f64.powi(mu as i32) * l_terms as f64);
    Ok((mu, epsilon_prep))
}

/// Linear-T resource estimate for the second-quantized encoding.
pub fn estimate_second(
    cell: &CrystalCell,
    basis: &PlaneWaveBasis,
    lambda: f64,
    mu: u32,
    delta_e: f64,
) -> Result<ResourceEstimate> {
    if !(lambda > 0.0) {
        return Err(CorrError::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(delta_e > 0.0) {
        return Err(CorrError::Domain(format!("delta_E must be > 0, got {delta_e}")));
    }
    let n = basis.n;
    let n_so = 2 * n;
    let iterations = qpe_iterations(lambda, delta_e)?;
    let per_step_t = A_T * n_so as f64 + B_T * mu as f64 + C_T;
    let t_total = iterations as f64 * per_step_t;
    if !t_total.is_finite() || t_total >= u64::MAX as f64 {
        return Err(CorrError::Domain("T count overflows u64".to_string()));
    }
    let t_count = t_total.round() as u64;
    let toffoli_count = t_count / 4;
    let clifford_count = (CLIFFORD_PER_T * t_count as f64).round() as u64;
    let logical_qubits = second_logical_qubits(n, lambda, delta_e)?;

    Ok(ResourceEstimate {
        logical_qubits,
        qpe_iterations: iterations,
        toffoli_count,
        t_count,
        clifford_count,
        lambda,
        basis_n: n,
        provenance: Provenance {
            model: "second_quantized".to_string(),
            eta: cell.eta(),
            lambda_zeta: cell.lambda_zeta(),
            electron_mode: cell.electron_mode,
            per_axis: basis.per_axis,
            n_p: basis.n_p,
            e_cut_ry: basis.e_cut_ry,
            gamma: basis.gamma,
            omega_bohr3: basis.omega,
            epsilon: delta_e,
            epsilon_pha: delta_e,
            amplification_branch: None,
        },
    })
}

/// Qubit model 2N + ceil(alpha * log2(4 sqrt(2) pi lambda^3 N^5 / eps^3)) + beta.
fn second_logical_qubits(n: u64, lambda: f64, epsilon: f64) -> Result<u64> {
    let log_arg =
        4.0 * 2f64.sqrt() * std::f64::consts::PI * lambda.powi(3) * (n as f64).powi(5)
            / epsilon.powi(3);
    if !(log_arg > 0.0) {
        return Err(CorrError::Domain(
            "qubit-model logarithm argument must be positive".to_string(),
        ));
    }
    let overhead = (ALPHA * log_arg.log2()).ceil() as i64 + BETA;
    let total = 2 * n as i64 + overhead;
    if total < 1 {
        return Err(CorrError::Domain(format!(
            "qubit model produced non-positive count {total}"
        )));
    }
    Ok(total as u64)
}

/// One sweep observation feeding the extrapolation fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPoint {
    pub n: u64,
    pub lambda: f64,
    pub t_count: f64,
    pub n_logical: u64,
}

/// Fitted scaling model: lambda(N) quadratic, T(N) through the
/// Heisenberg-limited form, and the logarithmic qubit overhead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtrapolationModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Max absolute training residual of each fit.
    pub residual_lambda: f64,
    pub residual_t: f64,
    pub residual_qubits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPrediction {
    pub n: u64,
    pub lambda: f64,
    pub t_count: f64,
    pub logical_qubits: f64,
}

impl ExtrapolationModel {
    pub fn lambda_at(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.a * nf * nf + self.b * nf + self.c
    }

    pub fn t_at(&self, n: u64) -> f64 {
        let nf = n as f64;
        let lambda = self.lambda_at(n);
        self.x * nf * lambda / self.epsilon
            + self.y * (lambda / self.epsilon) * (nf / self.epsilon).log2()
            + self.z
    }

    pub fn qubits_at(&self, n: u64) -> f64 {
        let nf = n as f64;
        let lambda = self.lambda_at(n);
        let log_arg = 4.0 * 2f64.sqrt() * std::f64::consts::PI * lambda.powi(3) * nf.powi(5)
            / self.epsilon.powi(3);
        2.0 * nf + self.alpha * log_arg.log2() + self.beta
    }

    pub fn predict(&self, n: u64) -> ExtrapolationPrediction {
        ExtrapolationPrediction {
            n,
            lambda: self.lambda_at(n),
            t_count: self.t_at(n),
            logical_qubits: self.qubits_at(n),
        }
    }
}

/// Fit the three scaling laws to sweep observations by least squares.
pub fn fit_extrapolation(points: &[ExtrapolationPoint], epsilon: f64) -> Result<ExtrapolationModel> {
    if !(epsilon > 0.0) {
        return Err(CorrError::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut distinct: Vec<u64> = points.iter().map(|p| p.n).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(CorrError::FitDegenerate(format!(
            "need at least 3 distinct basis sizes, got {}",
            distinct.len()
        )));
    }
    let n_pts = points.len();

    // lambda(N) = a N^2 + b N + c
    let mut rows = Vec::with_capacity(n_pts * 3);
    let mut target = Vec::with_capacity(n_pts);
    for p in points {
        let nf = p.n as f64;
        rows.extend_from_slice(&[nf * nf, nf, 1.0]);
        target.push(p.lambda);
    }
    let lam_fit = crate::linalg::lstsq(&rows, n_pts, 3, &target, 1e-10)?;
    if lam_fit.rank < 3 {
        return Err(CorrError::FitDegenerate(
            "lambda design matrix is rank-deficient".to_string(),
        ));
    }

    // t(N) = x N lambda / eps + y (lambda / eps) log2(N / eps) + z
    let mut rows = Vec::with_capacity(n_pts * 3);
    let mut target = Vec::with_capacity(n_pts);
    for p in points {
        let nf = p.n as f64;
        rows.extend_from_slice(&[
            nf * p.lambda / epsilon,
            (p.lambda / epsilon) * (nf / epsilon).log2(),
            1.0,
        ]);
        target.push(p.t_count);
    }
    let t_fit = crate::linalg::lstsq(&rows, n_pts, 3, &target, 1e-10)?;
    if t_fit.rank < 3 {
        return Err(CorrError::FitDegenerate(
            "T-count design matrix is rank-deficient".to_string(),
        ));
    }

    // n_log(N) - 2N = alpha log2(4 sqrt(2) pi lambda^3 N^5 / eps^3) + beta
    let mut rows = Vec::with_capacity(n_pts * 2);
    let mut target = Vec::with_capacity(n_pts);
    for p in points {
        let nf = p.n as f64;
        let log_arg = 4.0 * 2f64.sqrt() * std::f64::consts::PI * p.lambda.powi(3) * nf.powi(5)
            / epsilon.powi(3);
        rows.extend_from_slice(&[log_arg.log2(), 1.0]);
        target.push(p.n_logical as f64 - 2.0 * nf);
    }
    let q_fit = crate::linalg::lstsq(&rows, n_pts, 2, &target, 1e-10)?;
    if q_fit.rank < 2 {
        return Err(CorrError::FitDegenerate(
            "qubit design matrix is rank-deficient".to_string(),
        ));
    }

    let mut model = ExtrapolationModel {
        a: lam_fit.x[0],
        b: lam_fit.x[1],
        c: lam_fit.x[2],
        x: t_fit.x[0],
        y: t_fit.x[1],
        z: t_fit.x[2],
        alpha: q_fit.x[0],
        beta: q_fit.x[1],
        epsilon,
        residual_lambda: 0.0,
        residual_t: 0.0,
        residual_qubits: 0.0,
    };
    for p in points {
        model.residual_lambda = model
            .residual_lambda
            .max((model.lambda_at(p.n) - p.lambda).abs());
        model.residual_t = model.residual_t.max((model.t_at(p.n) - p.t_count).abs());
        model.residual_qubits = model
            .residual_qubits
            .max((model.qubits_at(p.n) - p.n_logical as f64).abs());
    }
    Ok(model)
}
