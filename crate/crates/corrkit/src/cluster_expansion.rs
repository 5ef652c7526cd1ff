//! Cluster-expansion fitting for alloy energies.
//!
//! A configuration assigns a species code to every lattice site. Each
//! cluster orbit carries the translation instances of a prototype site
//! tuple plus one point function per tuple slot; its correlation
//! Theta_alpha is the orbit average of the point-function products. The
//! model is F(sigma) = J0 + sum_alpha m_alpha J_alpha Theta_alpha(sigma),
//! fitted by (optionally regularized) least squares on per-atom energies
//! in eV. Cross-validation scores are reported in meV/atom.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::linalg::{lstsq, Cholesky};

/// Site occupation codes for one structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub sigma: Vec<u32>,
    pub lattice_id: String,
}

impl Configuration {
    /// Fraction of sites holding the given species code.
    pub fn concentration(&self, species: u32) -> f64 {
        if self.sigma.is_empty() {
            return 0.0;
        }
        let hits = self.sigma.iter().filter(|&&s| s == species).count();
        hits as f64 / self.sigma.len() as f64
    }
}

/// Per-site point-function family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    /// phi_s(sigma) = 1 when sigma == s, else 0.
    OneHot,
    /// phi_k(sigma) = cos(2 pi k sigma / n_species).
    Trigonometric { n_species: u32 },
}

/// A translation orbit of site clusters with its point-function choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOrbit {
    /// Representative site tuple.
    pub alpha: Vec<usize>,
    /// All translation instances, representative first. Every instance
    /// has the arity of alpha.
    pub clusters: Vec<Vec<usize>>,
    /// Point-function index per tuple slot.
    pub point_functions: Vec<u32>,
    /// Clusters of this orbit per cell, the m_alpha weight in the model.
    pub multiplicity: u32,
    pub basis_choice: BasisChoice,
}

impl ClusterOrbit {
    /// Orbit with a single cluster instance (its own representative).
    pub fn single(
        sites: Vec<usize>,
        point_functions: Vec<u32>,
        basis_choice: BasisChoice,
    ) -> ClusterOrbit {
        ClusterOrbit {
            alpha: sites.clone(),
            clusters: vec![sites],
            point_functions,
            multiplicity: 1,
            basis_choice,
        }
    }

    /// Check structural consistency against a lattice of n_sites sites.
    /// Deserialized orbits should be run through this before fitting.
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.multiplicity < 1 {
            return Err(CorrError::Invalid("orbit multiplicity must be >= 1".to_string()));
        }
        if self.clusters.is_empty() {
            return Err(CorrError::Invalid("orbit holds no clusters".to_string()));
        }
        if self.point_functions.len() != self.alpha.len() {
            return Err(CorrError::Invalid(
                "one point function per tuple slot required".to_string(),
            ));
        }
        for cluster in &self.clusters {
            if cluster.len() != self.alpha.len() {
                return Err(CorrError::Invalid(
                    "orbit clusters must share the representative's arity".to_string(),
                ));
            }
            for (i, &site) in cluster.iter().enumerate() {
                if site >= n_sites {
                    return Err(CorrError::Invalid(format!(
                        "orbit site {site} out of range for {n_sites}-site configuration"
                    )));
                }
                if cluster[..i].contains(&site) {
                    return Err(CorrError::Invalid(format!(
                        "orbit cluster repeats site {site}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Orbit-averaged correlation for one configuration.
    pub fn theta(&self, config: &Configuration) -> f64 {
        let mut total = 0.0;
        for cluster in &self.clusters {
            let mut prod = 1.0;
            for (slot, &site) in cluster.iter().enumerate() {
                prod *= self.phi(self.point_functions[slot], config.sigma[site]);
                if prod == 0.0 {
                    break;
                }
            }
            total += prod;
        }
        total / self.clusters.len() as f64
    }

    fn phi(&self, index: u32, code: u32) -> f64 {
        match self.basis_choice {
            BasisChoice::OneHot => {
                if code == index {
                    1.0
                } else {
                    0.0
                }
            }
            BasisChoice::Trigonometric { n_species } => {
                (2.0 * std::f64::consts::PI * index as f64 * code as f64 / n_species as f64).cos()
            }
        }
    }
}

/// All translation instances of a pair at the given ring distance on a
/// 1-dimensional periodic lattice, a convenient test and demo orbit.
pub fn ring_pair_orbit(
    n_sites: usize,
    distance: usize,
    point_functions: [u32; 2],
    basis_choice: BasisChoice,
) -> Result<ClusterOrbit> {
    if n_sites < 3 || distance == 0 || distance >= n_sites {
        return Err(CorrError::Invalid(format!(
            "ring pair needs 0 < distance < n_sites, got {distance} on {n_sites}"
        )));
    }
    let clusters: Vec<Vec<usize>> = (0..n_sites)
        .map(|i| vec![i, (i + distance) % n_sites])
        .collect();
    Ok(ClusterOrbit {
        alpha: clusters[0].clone(),
        multiplicity: clusters.len() as u32,
        clusters,
        point_functions: point_functions.to_vec(),
        basis_choice,
    })
}

/// Point orbit covering every site of a ring lattice.
pub fn ring_point_orbit(
    n_sites: usize,
    point_function: u32,
    basis_choice: BasisChoice,
) -> Result<ClusterOrbit> {
    if n_sites == 0 {
        return Err(CorrError::Invalid("empty lattice".to_string()));
    }
    let clusters: Vec<Vec<usize>> = (0..n_sites).map(|i| vec![i]).collect();
    Ok(ClusterOrbit {
        alpha: clusters[0].clone(),
        multiplicity: clusters.len() as u32,
        clusters,
        point_functions: vec![point_function],
        basis_choice,
    })
}

/// Regularization applied to the ECI fit. J0 is never penalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    None,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
}

/// Fitted cluster-expansion model. J holds (J0, J_alpha...).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterExpansionModel {
    pub orbits: Vec<ClusterOrbit>,
    pub j: Vec<f64>,
    pub regularizer: Regularizer,
    /// Leave-one-out score in meV/atom, when evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_score: Option<f64>,
}

impl ClusterExpansionModel {
    /// F(sigma) = J0 + sum m_alpha J_alpha Theta_alpha(sigma), eV/atom.
    pub fn predict(&self, config: &Configuration) -> Result<f64> {
        let row = design_row(config, &self.orbits)?;
        Ok(row.iter().zip(&self.j).map(|(a, b)| a * b).sum())
    }
}

/// Correlation vector Pi(sigma) = (1, Theta_alpha_1, ...). The leading 1
/// is the empty cluster.
pub fn correlation_vector(config: &Configuration, orbits: &[ClusterOrbit]) -> Result<Vec<f64>> {
    let mut pi = Vec::with_capacity(1 + orbits.len());
    pi.push(1.0);
    for orbit in orbits {
        orbit.validate(config.sigma.len())?;
        pi.push(orbit.theta(config));
    }
    Ok(pi)
}

/// Design row (1, m_alpha Theta_alpha, ...) so the fitted coefficients
/// are the J of the model formula.
fn design_row(config: &Configuration, orbits: &[ClusterOrbit]) -> Result<Vec<f64>> {
    let mut row = correlation_vector(config, orbits)?;
    for (slot, orbit) in orbits.iter().enumerate() {
        row[slot + 1] *= orbit.multiplicity as f64;
    }
    Ok(row)
}

fn build_design(
    train: &[(Configuration, f64)],
    orbits: &[ClusterOrbit],
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if train.is_empty() {
        return Err(CorrError::Invalid("empty training set".to_string()));
    }
    let n_cols = 1 + orbits.len();
    let rows: Result<Vec<Vec<f64>>> = train
        .par_iter()
        .map(|(config, energy)| {
            if !energy.is_finite() {
                return Err(CorrError::Invalid(format!("non-finite energy {energy}")));
            }
            design_row(config, orbits)
        })
        .collect();
    let rows = rows?;
    let mut x = Vec::with_capacity(train.len() * n_cols);
    for row in rows {
        x.extend_from_slice(&row);
    }
    let y: Vec<f64> = train.iter().map(|(_, e)| *e).collect();
    Ok((x, y, n_cols))
}

/// Fit effective cluster interactions to (configuration, energy) pairs.
/// Energies are eV/atom.
pub fn fit_eci(
    train: &[(Configuration, f64)],
    orbits: &[ClusterOrbit],
    regularizer: Regularizer,
) -> Result<ClusterExpansionModel> {
    let (x, y, n_cols) = build_design(train, orbits)?;
    let j = solve_regularized(&x, train.len(), n_cols, &y, regularizer)?;
    Ok(ClusterExpansionModel {
        orbits: orbits.to_vec(),
        j,
        regularizer,
        cv_score: None,
    })
}

fn solve_regularized(
    x: &[f64],
    n_rows: usize,
    n_cols: usize,
    y: &[f64],
    regularizer: Regularizer,
) -> Result<Vec<f64>> {
    match regularizer {
        Regularizer::None => Ok(lstsq(x, n_rows, n_cols, y, 1e-10)?.x),
        Regularizer::Ridge { lambda } => {
            if !(lambda > 0.0) {
                return Err(CorrError::Invalid(format!(
                    "ridge strength must be > 0, got {lambda}"
                )));
            }
            // (X^T X + lambda P) J = X^T y with P = diag(0, 1, 1, ...)
            let mut ata = vec![0.0f64; n_cols * n_cols];
            let mut aty = vec![0.0f64; n_cols];
            for r in 0..n_rows {
                let row = &x[r * n_cols..(r + 1) * n_cols];
                for i in 0..n_cols {
                    aty[i] += row[i] * y[r];
                    for k in i..n_cols {
                        ata[i * n_cols + k] += row[i] * row[k];
                    }
                }
            }
            for i in 0..n_cols {
                for k in 0..i {
                    ata[i * n_cols + k] = ata[k * n_cols + i];
                }
            }
            for i in 1..n_cols {
                ata[i * n_cols + i] += lambda;
            }
            let chol = Cholesky::new(&ata, n_cols)?;
            Ok(chol.solve(&aty))
        }
        Regularizer::Lasso { lambda } => {
            if !(lambda > 0.0) {
                return Err(CorrError::Invalid(format!(
                    "lasso strength must be > 0, got {lambda}"
                )));
            }
            lasso_coordinate_descent(x, n_rows, n_cols, y, lambda)
        }
    }
}

/// Cyclic coordinate descent for
///   min_J (1/2) |X J - y|^2 + lambda * sum_{alpha >= 1} |J_alpha|
/// iterated until the duality gap drops below 1e-10 (relative to the
/// primal objective).
fn lasso_coordinate_descent(
    x: &[f64],
    n_rows: usize,
    n_cols: usize,
    y: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let col = |j: usize, r: usize| x[r * n_cols + j];
    let col_sq: Vec<f64> = (0..n_cols)
        .map(|j| (0..n_rows).map(|r| col(j, r).powi(2)).sum())
        .collect();
    let mut j_vec = vec![0.0f64; n_cols];
    let mut residual = y.to_vec();

    for _sweep in 0..200_000 {
        for jc in 0..n_cols {
            if col_sq[jc] == 0.0 {
                continue;
            }
            let rho: f64 = (0..n_rows).map(|r| col(jc, r) * residual[r]).sum::<f64>()
                + col_sq[jc] * j_vec[jc];
            let new = if jc == 0 {
                rho / col_sq[jc]
            } else {
                soft_threshold(rho, lambda) / col_sq[jc]
            };
            let delta = new - j_vec[jc];
            if delta != 0.0 {
                for r in 0..n_rows {
                    residual[r] -= delta * col(jc, r);
                }
                j_vec[jc] = new;
            }
        }

        // duality gap with theta = feasible scaling of the residual
        let penal_l1: f64 = j_vec[1..].iter().map(|v| v.abs()).sum();
        let r_sq: f64 = residual.iter().map(|r| r * r).sum();
        let primal = 0.5 * r_sq + lambda * penal_l1;
        let max_corr = (1..n_cols)
            .map(|jc| (0..n_rows).map(|r| col(jc, r) * residual[r]).sum::<f64>().abs())
            .fold(0.0f64, f64::max);
        let scale = if max_corr > lambda { lambda / max_corr } else { 1.0 };
        let theta_dot_y: f64 = residual.iter().zip(y).map(|(r, yy)| scale * r * yy).sum();
        let theta_sq = scale * scale * r_sq;
        let dual = theta_dot_y - 0.5 * theta_sq;
        let gap = primal - dual;
        if gap <= 1e-10 * primal.max(1.0) {
            return Ok(j_vec);
        }
    }
    Err(CorrError::FitDegenerate(
        "lasso coordinate descent failed to close the duality gap".to_string(),
    ))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Leave-one-out cross-validation by literal refits, the authoritative
/// definition. Returns meV/atom.
pub fn loo_cv(
    train: &[(Configuration, f64)],
    orbits: &[ClusterOrbit],
    regularizer: Regularizer,
) -> Result<f64> {
    if train.len() < 2 {
        return Err(CorrError::Invalid(format!(
            "leave-one-out needs at least 2 rows, got {}",
            train.len()
        )));
    }
    let errors: Result<Vec<f64>> = (0..train.len())
        .into_par_iter()
        .map(|leave| {
            let subset: Vec<(Configuration, f64)> = train
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != leave)
                .map(|(_, row)| row.clone())
                .collect();
            let model = fit_eci(&subset, orbits, regularizer)?;
            let predicted = model.predict(&train[leave].0)?;
            Ok(train[leave].1 - predicted)
        })
        .collect();
    let errors = errors?;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    Ok(mse.sqrt() * 1000.0)
}

/// Hat-matrix shortcut for the leave-one-out score, exact for ridge and
/// for an unregularized full-rank fit:
/// e_loo_i = (y_i - yhat_i) / (1 - h_ii). Returns meV/atom.
pub fn loo_cv_fast(
    train: &[(Configuration, f64)],
    orbits: &[ClusterOrbit],
    regularizer: Regularizer,
) -> Result<f64> {
    if train.len() < 2 {
        return Err(CorrError::Invalid(format!(
            "leave-one-out needs at least 2 rows, got {}",
            train.len()
        )));
    }
    let lambda = match regularizer {
        Regularizer::Ridge { lambda } => lambda,
        Regularizer::None => 0.0,
        Regularizer::Lasso { .. } => {
            return Err(CorrError::Invalid(
                "no closed-form leave-one-out for lasso; use the literal path".to_string(),
            ))
        }
    };
    let (x, y, n_cols) = build_design(train, orbits)?;
    let n_rows = train.len();
    let mut ata = vec![0.0f64; n_cols * n_cols];
    for r in 0..n_rows {
        let row = &x[r * n_cols..(r + 1) * n_cols];
        for i in 0..n_cols {
            for k in 0..n_cols {
                ata[i * n_cols + k] += row[i] * row[k];
            }
        }
    }
    if lambda > 0.0 {
        for i in 1..n_cols {
            ata[i * n_cols + i] += lambda;
        }
    }
    let chol = Cholesky::new(&ata, n_cols)?;
    let mut aty = vec![0.0f64; n_cols];
    for r in 0..n_rows {
        let row = &x[r * n_cols..(r + 1) * n_cols];
        for i in 0..n_cols {
            aty[i] += row[i] * y[r];
        }
    }
    let coeffs = chol.solve(&aty);

    let mut sum_sq = 0.0f64;
    for r in 0..n_rows {
        let row = &x[r * n_cols..(r + 1) * n_cols];
        let w = chol.solve(row);
        let h_ii: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        let fitted: f64 = row.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
        let denom = 1.0 - h_ii;
        if denom <= 1e-12 {
            return Err(CorrError::FitDegenerate(format!(
                "leverage of row {r} is 1; leave-one-out refit is rank-deficient"
            )));
        }
        let e = (y[r] - fitted) / denom;
        sum_sq += e * e;
    }
    Ok((sum_sq / n_rows as f64).sqrt() * 1000.0)
}

/// Whether a cross-validation score clears the conventional quality bar.
pub fn cv_passes(cv_mev_per_atom: f64) -> bool {
    cv_mev_per_atom < 5.0
}

/// Hop barrier between adjacent interstitial sites: the saddle-point
/// (tetrahedral) model minus the resting (octahedral) model on the shared
/// configuration. May legitimately come out negative; callers decide
/// whether to clamp.
pub fn barrier(
    oct_model: &ClusterExpansionModel,
    tet_model: &ClusterExpansionModel,
    config: &Configuration,
    hop: (usize, usize),
    adjacency: &[Vec<usize>],
) -> Result<f64> {
    let (from, to) = hop;
    if from >= adjacency.len() || to >= adjacency.len() {
        return Err(CorrError::Topology(format!(
            "hop ({from}, {to}) outside the {}-site lattice",
            adjacency.len()
        )));
    }
    if !adjacency[from].contains(&to) {
        return Err(CorrError::Topology(format!(
            "sites {from} and {to} are not adjacent"
        )));
    }
    Ok(tet_model.predict(config)? - oct_model.predict(config)?)
}

/// Concentration-dependent fit: every design column is replicated with
/// concentration powers x^0..x^degree, giving J_alpha(x) = sum_p J_{p,alpha} x^p.
pub fn fit_eci_concentration_dependent(
    train: &[(Configuration, f64)],
    orbits: &[ClusterOrbit],
    regularizer: Regularizer,
    species: u32,
    degree: u32,
) -> Result<Vec<f64>> {
    if degree > 2 {
        return Err(CorrError::Invalid(format!(
            "concentration powers supported up to degree 2, got {degree}"
        )));
    }
    let (x, y, base_cols) = build_design(train, orbits)?;
    let n_rows = train.len();
    let n_cols = base_cols * (degree as usize + 1);
    let mut aug = vec![0.0f64; n_rows * n_cols];
    for r in 0..n_rows {
        let conc = train[r].0.concentration(species);
        for p in 0..=degree as usize {
            let w = conc.powi(p as i32);
            for c in 0..base_cols {
                aug[r * n_cols + p * base_cols + c] = x[r * base_cols + c] * w;
            }
        }
    }
    solve_regularized(&aug, n_rows, n_cols, &y, regularizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn config(sigma: Vec<u32>) -> Configuration {
        Configuration {
            sigma,
            lattice_id: "ring".to_string(),
        }
    }

    fn random_configs(n: usize, sites: usize, species: u32, seed: u64) -> Vec<Configuration> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| config((0..sites).map(|_| rng.gen_range(0..species)).collect()))
            .collect()
    }

    fn toy_orbits(sites: usize) -> Vec<ClusterOrbit> {
        vec![
            ring_point_orbit(sites, 1, BasisChoice::OneHot).unwrap(),
            ring_pair_orbit(sites, 1, [1, 1], BasisChoice::OneHot).unwrap(),
            ring_pair_orbit(sites, 2, [1, 0], BasisChoice::OneHot).unwrap(),
        ]
    }

    fn forward(orbits: &[ClusterOrbit], j: &[f64], c: &Configuration) -> f64 {
        let model = ClusterExpansionModel {
            orbits: orbits.to_vec(),
            j: j.to_vec(),
            regularizer: Regularizer::None,
            cv_score: None,
        };
        model.predict(c).unwrap()
    }

    #[test]
    fn empty_orbits_give_unit_vector() {
        let pi = correlation_vector(&config(vec![0, 1, 0]), &[]).unwrap();
        assert_eq!(pi, vec![1.0]);
    }

    #[test]
    fn pair_indicator_hand_case() {
        let orbit = ClusterOrbit::single(vec![0, 1], vec![1, 1], BasisChoice::OneHot);
        let pi = correlation_vector(&config(vec![1, 1]), &[orbit.clone()]).unwrap();
        assert_eq!(pi, vec![1.0, 1.0]);
        let pi = correlation_vector(&config(vec![1, 0]), &[orbit]).unwrap();
        assert_eq!(pi, vec![1.0, 0.0]);
    }

    #[test]
    fn theta_invariant_under_cluster_order() {
        let mut orbit = ring_pair_orbit(6, 1, [1, 1], BasisChoice::OneHot).unwrap();
        let c = config(vec![1, 1, 0, 1, 0, 1]);
        let t1 = orbit.theta(&c);
        orbit.clusters.reverse();
        assert_eq!(orbit.theta(&c), t1);
    }

    #[test]
    fn out_of_range_site_rejected() {
        let orbit = ClusterOrbit::single(vec![0, 5], vec![1, 1], BasisChoice::OneHot);
        assert!(correlation_vector(&config(vec![0, 1]), &[orbit]).is_err());
    }

    #[test]
    fn constant_model_fits_mean() {
        let train: Vec<(Configuration, f64)> = (0..4)
            .map(|i| (config(vec![i % 2, (i / 2) % 2]), 3.25))
            .collect();
        let model = fit_eci(&train, &[], Regularizer::None).unwrap();
        assert_eq!(model.j.len(), 1);
        assert_relative_eq!(model.j[0], 3.25, max_relative = 1e-12);
    }

    #[test]
    fn exact_recovery_noiseless() {
        let orbits = toy_orbits(10);
        let j_true = [0.7, -0.25, 0.4, 0.12];
        let configs = random_configs(40, 10, 2, 11);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e = forward(&orbits, &j_true, &c);
                (c, e)
            })
            .collect();
        let model = fit_eci(&train, &orbits, Regularizer::None).unwrap();
        for (got, want) in model.j.iter().zip(&j_true) {
            assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-10);
        }
        // forward/inverse consistency on the training rows
        for (c, e) in &train {
            assert_relative_eq!(model.predict(c).unwrap(), *e, max_relative = 1e-9, epsilon = 1e-10);
        }
    }

    #[test]
    fn heavy_ridge_shrinks_to_mean() {
        let orbits = toy_orbits(8);
        let configs = random_configs(30, 8, 2, 3);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c, 1.0 + 0.01 * i as f64))
            .collect();
        let mean = train.iter().map(|(_, e)| e).sum::<f64>() / train.len() as f64;
        let model = fit_eci(&train, &orbits, Regularizer::Ridge { lambda: 1e12 }).unwrap();
        for &coeff in &model.j[1..] {
            assert!(coeff.abs() < 1e-6, "penalized coefficient {coeff} survived");
        }
        assert_relative_eq!(model.j[0], mean, max_relative = 1e-6);
    }

    #[test]
    fn ridge_solution_is_a_minimum() {
        let orbits = toy_orbits(8);
        let configs = random_configs(25, 8, 2, 5);
        let mut rng = StdRng::seed_from_u64(17);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e: f64 = rng.gen_range(-1.0..1.0);
                (c, e)
            })
            .collect();
        let lambda = 0.3;
        let model = fit_eci(&train, &orbits, Regularizer::Ridge { lambda }).unwrap();
        let objective = |j: &[f64]| -> f64 {
            let mut obj = 0.0;
            for (c, e) in &train {
                let row = design_row(c, &orbits).unwrap();
                let pred: f64 = row.iter().zip(j).map(|(a, b)| a * b).sum();
                obj += (pred - e).powi(2);
            }
            obj + lambda * j[1..].iter().map(|v| v * v).sum::<f64>()
        };
        let base = objective(&model.j);
        for slot in 0..model.j.len() {
            for delta in [1e-4, -1e-4] {
                let mut probe = model.j.clone();
                probe[slot] += delta;
                assert!(
                    objective(&probe) > base,
                    "objective decreased along coordinate {slot}"
                );
            }
        }
    }

    #[test]
    fn lasso_strong_penalty_zeroes_support() {
        let orbits = toy_orbits(8);
        let j_true = [0.5, 0.2, -0.1, 0.05];
        let configs = random_configs(30, 8, 2, 7);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e = forward(&orbits, &j_true, &c);
                (c, e)
            })
            .collect();
        let model = fit_eci(&train, &orbits, Regularizer::Lasso { lambda: 1e6 }).unwrap();
        for &coeff in &model.j[1..] {
            assert_eq!(coeff, 0.0);
        }
        // unpenalized intercept still tracks the mean
        let mean = train.iter().map(|(_, e)| e).sum::<f64>() / train.len() as f64;
        assert_relative_eq!(model.j[0], mean, max_relative = 1e-8);
    }

    #[test]
    fn lasso_weak_penalty_near_least_squares() {
        let orbits = toy_orbits(10);
        let j_true = [0.7, -0.25, 0.4, 0.12];
        let configs = random_configs(50, 10, 2, 13);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e = forward(&orbits, &j_true, &c);
                (c, e)
            })
            .collect();
        let model = fit_eci(&train, &orbits, Regularizer::Lasso { lambda: 1e-9 }).unwrap();
        // a 1e-10 duality gap bounds the objective suboptimality, which
        // translates to roughly sqrt(1e-10) coefficient accuracy here
        for (got, want) in model.j.iter().zip(&j_true) {
            assert_relative_eq!(got, want, max_relative = 1e-4, epsilon = 1e-4);
        }
    }

    #[test]
    fn loo_cv_zero_for_in_span_data() {
        let orbits = toy_orbits(9);
        let j_true = [0.3, 0.1, -0.2, 0.08];
        let configs = random_configs(24, 9, 2, 19);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e = forward(&orbits, &j_true, &c);
                (c, e)
            })
            .collect();
        let cv = loo_cv(&train, &orbits, Regularizer::None).unwrap();
        assert!(cv.abs() < 1e-6, "cv = {cv} meV/atom");
    }

    #[test]
    fn fast_path_matches_literal_refits() {
        let orbits = toy_orbits(9);
        let mut rng = StdRng::seed_from_u64(23);
        for (fixture, reg) in [
            (0u64, Regularizer::Ridge { lambda: 0.5 }),
            (1, Regularizer::Ridge { lambda: 2.0 }),
            (2, Regularizer::None),
        ] {
            let configs = random_configs(28, 9, 2, 100 + fixture);
            let train: Vec<(Configuration, f64)> = configs
                .into_iter()
                .map(|c| {
                    let e: f64 = rng.gen_range(-1.0..1.0);
                    (c, e)
                })
                .collect();
            let literal = loo_cv(&train, &orbits, reg).unwrap();
            let fast = loo_cv_fast(&train, &orbits, reg).unwrap();
            assert!(
                (literal - fast).abs() < 1e-9 * literal.max(1.0),
                "fixture {fixture}: literal {literal} vs fast {fast}"
            );
        }
    }

    #[test]
    fn cv_tracks_injected_noise() {
        let orbits = toy_orbits(10);
        let j_true = [0.5, 0.15, -0.3, 0.1];
        let sigma_ev = 0.01; // 10 meV/atom
        let mut ratios = Vec::new();
        for seed in 0..8u64 {
            let configs = random_configs(500, 10, 2, 200 + seed);
            let mut rng = StdRng::seed_from_u64(300 + seed);
            let train: Vec<(Configuration, f64)> = configs
                .into_iter()
                .map(|c| {
                    let clean = forward(&orbits, &j_true, &c);
                    let u1: f64 = rng.gen_range(1e-12..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    let gauss =
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    (c, clean + sigma_ev * gauss)
                })
                .collect();
            let cv = loo_cv_fast(&train, &orbits, Regularizer::None).unwrap();
            ratios.push(cv / (sigma_ev * 1000.0));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (mean - 1.0).abs() < 0.2,
            "cv/noise ratios {ratios:?} drifted (mean {mean})"
        );
    }

    #[test]
    fn cv_invariant_under_row_reordering() {
        let orbits = toy_orbits(8);
        let mut rng = StdRng::seed_from_u64(31);
        let configs = random_configs(16, 8, 2, 41);
        let mut train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let e: f64 = rng.gen_range(-1.0..1.0);
                (c, e)
            })
            .collect();
        let cv1 = loo_cv(&train, &orbits, Regularizer::Ridge { lambda: 0.1 }).unwrap();
        train.reverse();
        train.swap(0, 5);
        let cv2 = loo_cv(&train, &orbits, Regularizer::Ridge { lambda: 0.1 }).unwrap();
        assert_relative_eq!(cv1, cv2, max_relative = 1e-12);
    }

    #[test]
    fn cv_needs_two_rows() {
        let orbits = toy_orbits(8);
        let train = vec![(config(vec![0; 8]), 1.0)];
        assert!(loo_cv(&train, &orbits, Regularizer::None).is_err());
    }

    #[test]
    fn rejects_bad_training_data() {
        assert!(fit_eci(&[], &[], Regularizer::None).is_err());
        let train = vec![(config(vec![0, 1]), f64::NAN)];
        assert!(fit_eci(&train, &[], Regularizer::None).is_err());
    }

    #[test]
    fn barrier_examples() {
        let adjacency = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let c = config(vec![0, 1, 1, 0]);
        let constant = |j0: f64| ClusterExpansionModel {
            orbits: vec![],
            j: vec![j0],
            regularizer: Regularizer::None,
            cv_score: None,
        };
        let oct = constant(1.0);
        assert_eq!(
            barrier(&oct, &constant(1.0), &c, (0, 1), &adjacency).unwrap(),
            0.0
        );
        assert_relative_eq!(
            barrier(&oct, &constant(1.5), &c, (1, 2), &adjacency).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        match barrier(&oct, &constant(1.5), &c, (0, 3), &adjacency) {
            Err(CorrError::Topology(_)) => {}
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn barrier_two_orbit_hand_case() {
        // 4-site ring, point orbit on species 1 and nearest pair (1,1)
        let orbits = vec![
            ring_point_orbit(4, 1, BasisChoice::OneHot).unwrap(),
            ring_pair_orbit(4, 1, [1, 1], BasisChoice::OneHot).unwrap(),
        ];
        let oct = ClusterExpansionModel {
            orbits: orbits.clone(),
            j: vec![0.2, 0.05, 0.01],
            regularizer: Regularizer::None,
            cv_score: None,
        };
        let tet = ClusterExpansionModel {
            orbits,
            j: vec![0.9, -0.02, 0.03],
            regularizer: Regularizer::None,
            cv_score: None,
        };
        let c = config(vec![1, 1, 0, 1]);
        // by hand: theta_point = 3/4; pairs (0,1),(1,2),(2,3),(3,0) -> products 1,0,0,1 -> theta = 1/2
        // oct: 0.2 + 4*0.05*0.75 + 4*0.01*0.5 = 0.2 + 0.15 + 0.02 = 0.37
        // tet: 0.9 - 4*0.02*0.75 + 4*0.03*0.5 = 0.9 - 0.06 + 0.06 = 0.90
        let adjacency = vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![0, 2]];
        let e = barrier(&oct, &tet, &c, (0, 1), &adjacency).unwrap();
        assert_relative_eq!(e, 0.90 - 0.37, max_relative = 1e-12);
    }

    #[test]
    fn concentration_dependent_recovery() {
        // pair correlations vary independently of the concentration, so the
        // x-augmented design stays full rank
        let orbits = vec![ring_pair_orbit(10, 1, [1, 1], BasisChoice::OneHot).unwrap()];
        // E = (1 + 2x) + (0.5 - 0.3x) * m * theta with x = fraction of species 1
        let configs = random_configs(60, 10, 2, 77);
        let train: Vec<(Configuration, f64)> = configs
            .into_iter()
            .map(|c| {
                let x = c.concentration(1);
                let theta = orbits[0].theta(&c) * orbits[0].multiplicity as f64;
                let e = (1.0 + 2.0 * x) + (0.5 - 0.3 * x) * theta;
                (c, e)
            })
            .collect();
        let j = fit_eci_concentration_dependent(&train, &orbits, Regularizer::None, 1, 1).unwrap();
        // layout: [J0_p0, Jalpha_p0, J0_p1, Jalpha_p1]
        assert_relative_eq!(j[0], 1.0, max_relative = 1e-8, epsilon = 1e-8);
        assert_relative_eq!(j[1], 0.5, max_relative = 1e-8, epsilon = 1e-8);
        assert_relative_eq!(j[2], 2.0, max_relative = 1e-8, epsilon = 1e-8);
        assert_relative_eq!(j[3], -0.3, max_relative = 1e-8, epsilon = 1e-8);
    }

    #[test]
    fn cv_threshold_flag() {
        assert!(cv_passes(3.0));
        assert!(!cv_passes(6.0));
    }
}
