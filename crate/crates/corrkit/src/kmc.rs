//! Kinetic Monte Carlo for oxygen hopping on the octahedral interstitial
//! sublattice of a BCC metal.
//!
//! Geometry is kept exact by working on an integer grid in units of a/2:
//! metal atoms occupy the all-even and all-odd parity classes of the
//! conventional cell, octahedral interstitials the remaining six parity
//! classes, and every interstitial has exactly four octahedral neighbors
//! one unit away along a coordinate axis (the hop passes through a
//! tetrahedral saddle at the midpoint). Displacements accumulate as
//! integers, so mean-square displacements carry no rounding error.
//!
//! Trajectories draw from ChaCha12 streams keyed by trajectory index,
//! which makes ensembles byte-for-byte reproducible at any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{CM_PER_BOHR, KB_EV_PER_K};
use crate::error::{CorrError, Result};
use crate::linalg::lstsq;

/// One directed hop out of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub to: usize,
    /// 0, 1, 2 for x, y, z.
    pub axis: u8,
    /// +1 or -1 in units of a/2 along the axis.
    pub sign: i8,
}

/// Which kind of octahedral site, by the count of odd half-coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteClass {
    /// Edge midpoint, one odd coordinate.
    Edge,
    /// Face center, two odd coordinates.
    Face,
}

/// Periodic octahedral interstitial sublattice of a BCC supercell.
#[derive(Debug, Clone)]
pub struct KmcLattice {
    /// Conventional cubic lattice parameter in Bohr.
    pub a_bohr: f64,
    /// Conventional cells per axis.
    pub dims: [usize; 3],
    coords: Vec<[i64; 3]>,
    hops: Vec<[Hop; 4]>,
}

impl KmcLattice {
    pub fn new(a_bohr: f64, dims: [usize; 3]) -> Result<KmcLattice> {
        if !(a_bohr > 0.0) || !a_bohr.is_finite() {
            return Err(CorrError::Domain(format!(
                "lattice parameter must be positive, got {a_bohr}"
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(CorrError::Invalid("supercell dims must all be >= 1".to_string()));
        }
        let ext = [2 * dims[0] as i64, 2 * dims[1] as i64, 2 * dims[2] as i64];
        let grid_len = (ext[0] * ext[1] * ext[2]) as usize;
        let flat = |p: [i64; 3]| -> usize {
            ((p[0] * ext[1] + p[1]) * ext[2] + p[2]) as usize
        };

        // interstitial parities: not all-even (corner) and not all-odd (body center)
        let is_metal = |p: [i64; 3]| -> bool {
            let odd = p.iter().filter(|c| *c % 2 != 0).count();
            odd == 0 || odd == 3
        };

        let mut site_of = vec![usize::MAX; grid_len];
        let mut coords = Vec::new();
        for i in 0..ext[0] {
            for j in 0..ext[1] {
                for k in 0..ext[2] {
                    let p = [i, j, k];
                    if !is_metal(p) {
                        site_of[flat(p)] = coords.len();
                        coords.push(p);
                    }
                }
            }
        }

        let mut hops = Vec::with_capacity(coords.len());
        for &p in &coords {
            let mut out = Vec::with_capacity(4);
            for axis in 0..3u8 {
                for sign in [1i8, -1i8] {
                    let mut q = p;
                    q[axis as usize] =
                        (q[axis as usize] + sign as i64).rem_euclid(ext[axis as usize]);
                    if !is_metal(q) {
                        out.push(Hop {
                            to: site_of[flat(q)],
                            axis,
                            sign,
                        });
                    }
                }
            }
            debug_assert_eq!(out.len(), 4);
            hops.push([out[0], out[1], out[2], out[3]]);
        }

        Ok(KmcLattice {
            a_bohr,
            dims,
            coords,
            hops,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len()
    }

    /// Hop length a/2 in Bohr.
    pub fn jump_distance_bohr(&self) -> f64 {
        self.a_bohr / 2.0
    }

    pub fn hops(&self, site: usize) -> &[Hop; 4] {
        &self.hops[site]
    }

    pub fn site_position_bohr(&self, site: usize) -> [f64; 3] {
        let c = self.coords[site];
        [
            c[0] as f64 * self.a_bohr / 2.0,
            c[1] as f64 * self.a_bohr / 2.0,
            c[2] as f64 * self.a_bohr / 2.0,
        ]
    }

    pub fn site_class(&self, site: usize) -> SiteClass {
        let odd = self.coords[site].iter().filter(|c| *c % 2 != 0).count();
        match odd {
            1 => SiteClass::Edge,
            2 => SiteClass::Face,
            _ => unreachable!("metal parity leaked into the site list"),
        }
    }

    /// Undirected adjacency lists, as consumed by the barrier helpers.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.hops
            .iter()
            .map(|row| row.iter().map(|h| h.to).collect())
            .collect()
    }
}

/// Activation barrier lookup for a directed hop.
pub trait BarrierField: Sync {
    /// Barrier in eV for the hop from -> to. May be negative; rates then
    /// exceed the attempt frequency and the rare-event monitor flags it.
    fn barrier_ev(&self, from: usize, to: usize) -> f64;
}

/// The same barrier for every hop.
pub struct UniformBarrier(pub f64);

impl BarrierField for UniformBarrier {
    fn barrier_ev(&self, _from: usize, _to: usize) -> f64 {
        self.0
    }
}

/// Site-energy landscape with a flat saddle level. barrier(i -> j) =
/// saddle - E_i, which satisfies detailed balance against the Boltzmann
/// distribution of the site energies by construction.
pub struct SiteEnergyBarrier {
    pub site_energy_ev: Vec<f64>,
    pub saddle_ev: f64,
}

impl BarrierField for SiteEnergyBarrier {
    fn barrier_ev(&self, from: usize, _to: usize) -> f64 {
        self.saddle_ev - self.site_energy_ev[from]
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> BarrierField for F {
    fn barrier_ev(&self, from: usize, to: usize) -> f64 {
        self(from, to)
    }
}

/// Arrhenius hop rate nu0 * exp(-E / kB T) in 1/s.
pub fn hop_rate(nu0_hz: f64, barrier_ev: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(CorrError::Domain(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    if !(nu0_hz > 0.0) || !nu0_hz.is_finite() {
        return Err(CorrError::Domain(format!(
            "attempt frequency must be positive and finite, got {nu0_hz}"
        )));
    }
    if barrier_ev.is_nan() {
        return Err(CorrError::Domain("barrier is NaN".to_string()));
    }
    Ok(nu0_hz * (-barrier_ev / (KB_EV_PER_K * temperature_k)).exp())
}

/// Precomputed directed rates for every (site, hop slot).
pub struct RateTable {
    rates: Vec<[f64; 4]>,
    totals: Vec<f64>,
}

impl RateTable {
    pub fn build(
        lattice: &KmcLattice,
        barriers: &dyn BarrierField,
        nu0_hz: f64,
        temperature_k: f64,
    ) -> Result<RateTable> {
        let rates: Result<Vec<[f64; 4]>> = (0..lattice.n_sites())
            .into_par_iter()
            .map(|site| {
                let mut row = [0.0f64; 4];
                for (slot, hop) in lattice.hops(site).iter().enumerate() {
                    row[slot] = hop_rate(nu0_hz, barriers.barrier_ev(site, hop.to), temperature_k)?;
                }
                Ok(row)
            })
            .collect();
        let rates = rates?;
        let totals = rates.iter().map(|row| row.iter().sum()).collect();
        Ok(RateTable { rates, totals })
    }

    pub fn total(&self, site: usize) -> f64 {
        self.totals[site]
    }

    pub fn row(&self, site: usize) -> &[f64; 4] {
        &self.rates[site]
    }
}

/// Pick the hop slot from cumulative rates with r1 in [0, 1), and the
/// residence time ln(1/r2) / k_tot. Errors when every rate is zero.
pub fn kmc_step(rates: &[f64], r1: f64, r2: f64, site: usize) -> Result<(usize, f64)> {
    let k_tot: f64 = rates.iter().sum();
    if k_tot <= 0.0 {
        return Err(CorrError::AbsorbingState(site));
    }
    let target = r1 * k_tot;
    let mut acc = 0.0;
    let mut slot = rates.len() - 1;
    for (i, &k) in rates.iter().enumerate() {
        acc += k;
        if target < acc {
            slot = i;
            break;
        }
    }
    let dt = (1.0 / r2).ln() / k_tot;
    Ok((slot, dt))
}

/// Ensemble controls. Temperatures in K, times in s.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KmcParams {
    pub temperature_k: f64,
    /// Attempt frequency in Hz.
    pub nu0_hz: f64,
    pub n_steps: u64,
    pub n_trajectories: u64,
    pub seed: u64,
}

impl Default for KmcParams {
    fn default() -> Self {
        KmcParams {
            temperature_k: 1800.0,
            nu0_hz: 1e13,
            n_steps: 10_000,
            n_trajectories: 1000,
            seed: 0,
        }
    }
}

/// Optional per-trajectory recordings, all off by default.
#[derive(Debug, Clone, Copy, Default)]
pub struct Recording {
    /// Record the occupied site every so many steps (decorrelates the
    /// visit histogram for goodness-of-fit tests).
    pub thin_visits: Option<u64>,
    /// Accumulate residence time per site.
    pub residence: bool,
    /// Keep every waiting time (for distribution tests; memory heavy).
    pub keep_dt_samples: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KmcTrajectory {
    pub start_site: usize,
    pub final_site: usize,
    pub steps: u64,
    pub time_s: f64,
    /// Unwrapped displacement in units of a/2, exact integers.
    pub delta_units: [i64; 3],
    /// Sum over steps of 1/dt, feeding the per-step estimator.
    pub sum_inv_dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visit_counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residence_s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_samples: Option<Vec<f64>>,
}

impl KmcTrajectory {
    pub fn displacement_bohr(&self, lattice: &KmcLattice) -> [f64; 3] {
        let half = lattice.a_bohr / 2.0;
        [
            self.delta_units[0] as f64 * half,
            self.delta_units[1] as f64 * half,
            self.delta_units[2] as f64 * half,
        ]
    }

    pub fn squared_displacement_cm2(&self, lattice: &KmcLattice) -> f64 {
        let half_cm = lattice.a_bohr / 2.0 * CM_PER_BOHR;
        let d2_units = self
            .delta_units
            .iter()
            .map(|&d| (d as f64).powi(2))
            .sum::<f64>();
        d2_units * half_cm * half_cm
    }
}

/// Run one trajectory. n_steps = 0 yields the single starting point with
/// zero elapsed time.
pub fn run_trajectory(
    lattice: &KmcLattice,
    rates: &RateTable,
    start_site: usize,
    n_steps: u64,
    rng: &mut ChaCha12Rng,
    recording: &Recording,
) -> Result<KmcTrajectory> {
    if start_site >= lattice.n_sites() {
        return Err(CorrError::Invalid(format!(
            "start site {start_site} outside the {}-site lattice",
            lattice.n_sites()
        )));
    }
    let mut site = start_site;
    let mut time = 0.0f64;
    let mut delta = [0i64; 3];
    let mut sum_inv_dt = 0.0f64;
    let mut visit_counts = recording
        .thin_visits
        .map(|_| vec![0u64; lattice.n_sites()]);
    let mut residence = if recording.residence {
        Some(vec![0.0f64; lattice.n_sites()])
    } else {
        None
    };
    let mut dt_samples = if recording.keep_dt_samples {
        Some(Vec::with_capacity(n_steps as usize))
    } else {
        None
    };

    for step in 1..=n_steps {
        let r1: f64 = rng.gen();
        // open interval keeps ln(1/r2) finite
        let r2: f64 = loop {
            let v: f64 = rng.gen();
            if v > 0.0 {
                break v;
            }
        };
        let (slot, dt) = kmc_step(rates.row(site), r1, r2, site)?;
        if let Some(res) = residence.as_mut() {
            res[site] += dt;
        }
        if let Some(samples) = dt_samples.as_mut() {
            samples.push(dt);
        }
        let hop = lattice.hops(site)[slot];
        delta[hop.axis as usize] += hop.sign as i64;
        site = hop.to;
        time += dt;
        sum_inv_dt += 1.0 / dt;
        if let Some(thin) = recording.thin_visits {
            if step % thin == 0 {
                visit_counts.as_mut().unwrap()[site] += 1;
            }
        }
    }

    Ok(KmcTrajectory {
        start_site,
        final_site: site,
        steps: n_steps,
        time_s: time,
        delta_units: delta,
        sum_inv_dt,
        visit_counts,
        residence_s: residence,
        dt_samples,
    })
}

pub struct KmcEnsemble {
    pub trajectories: Vec<KmcTrajectory>,
    pub params: KmcParams,
    pub jump_distance_bohr: f64,
}

/// Run an ensemble in parallel. Trajectory i draws from ChaCha12 stream i
/// of the seed, and results are collected in index order, so the output
/// is identical whatever the rayon thread count.
pub fn run_ensemble(
    lattice: &KmcLattice,
    barriers: &dyn BarrierField,
    params: &KmcParams,
    recording: &Recording,
) -> Result<KmcEnsemble> {
    if params.n_trajectories == 0 {
        return Err(CorrError::Invalid("ensemble needs at least one trajectory".to_string()));
    }
    let rates = RateTable::build(lattice, barriers, params.nu0_hz, params.temperature_k)?;
    let trajectories: Result<Vec<KmcTrajectory>> = (0..params.n_trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
            rng.set_stream(idx);
            let start = rng.gen_range(0..lattice.n_sites());
            run_trajectory(lattice, &rates, start, params.n_steps, &mut rng, recording)
        })
        .collect();
    Ok(KmcEnsemble {
        trajectories: trajectories?,
        params: *params,
        jump_distance_bohr: lattice.jump_distance_bohr(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffusivityEstimate {
    /// Mean-square-displacement estimator, cm^2/s.
    pub d_cm2_per_s: f64,
    /// Standard error of the MSD estimator over trajectories.
    pub stderr_cm2_per_s: f64,
    /// Per-step companion estimator mean(l^2 / 6 dt). Its expectation
    /// diverges (1/dt has no mean under an exponential), so it is
    /// reported for comparison only, never as the headline number.
    pub d_per_step_cm2_per_s: f64,
    pub n_trajectories: usize,
    /// nu0 * mean waiting time; below 10 the rare-event picture is
    /// breaking down.
    pub mean_dt_nu0: f64,
    pub rare_event_ok: bool,
}

/// Diffusivity from an ensemble: per trajectory |dx|^2 / (6 t), averaged.
pub fn diffusivity(lattice: &KmcLattice, ensemble: &KmcEnsemble) -> Result<DiffusivityEstimate> {
    let n = ensemble.trajectories.len();
    if n == 0 {
        return Err(CorrError::Invalid("empty ensemble".to_string()));
    }
    let half_cm = ensemble.jump_distance_bohr * CM_PER_BOHR;
    let mut per_traj = Vec::with_capacity(n);
    let mut per_step = Vec::with_capacity(n);
    let mut total_time = 0.0f64;
    let mut total_steps = 0u64;
    for t in &ensemble.trajectories {
        if !(t.time_s > 0.0) {
            return Err(CorrError::Domain(
                "zero-time trajectory; run at least one step before estimating D".to_string(),
            ));
        }
        per_traj.push(t.squared_displacement_cm2(lattice) / (6.0 * t.time_s));
        per_step.push(half_cm * half_cm / 6.0 * t.sum_inv_dt / t.steps as f64);
        total_time += t.time_s;
        total_steps += t.steps;
    }
    let mean = per_traj.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = per_traj.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    let mean_dt_nu0 = ensemble.params.nu0_hz * total_time / total_steps as f64;
    Ok(DiffusivityEstimate {
        d_cm2_per_s: mean,
        stderr_cm2_per_s: stderr,
        d_per_step_cm2_per_s: per_step.iter().sum::<f64>() / n as f64,
        n_trajectories: n,
        mean_dt_nu0,
        rare_event_ok: mean_dt_nu0 >= 10.0,
    })
}

/// D(T) across a temperature ladder. The same seed is reused at every
/// temperature, so with a temperature-independent barrier landscape the
/// jump sequences coincide and only the clock rescales; Arrhenius slopes
/// then come out almost noise-free.
pub fn diffusivity_sweep(
    lattice: &KmcLattice,
    barriers: &dyn BarrierField,
    base: &KmcParams,
    temperatures_k: &[f64],
    recording: &Recording,
) -> Result<Vec<(f64, DiffusivityEstimate)>> {
    let mut out = Vec::with_capacity(temperatures_k.len());
    for &t_k in temperatures_k {
        let params = KmcParams {
            temperature_k: t_k,
            ..*base
        };
        let ensemble = run_ensemble(lattice, barriers, &params, recording)?;
        out.push((t_k, diffusivity(lattice, &ensemble)?));
    }
    Ok(out)
}

/// Least-squares Arrhenius fit ln D = ln A - Ea / (kB T).
/// Returns (Ea in eV, ln A).
pub fn arrhenius_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(CorrError::Invalid("Arrhenius fit needs at least 2 points".to_string()));
    }
    let mut rows = Vec::with_capacity(points.len() * 2);
    let mut y = Vec::with_capacity(points.len());
    for &(t_k, d) in points {
        if !(t_k > 0.0) || !(d > 0.0) {
            return Err(CorrError::Domain(format!(
                "Arrhenius fit needs T > 0 and D > 0, got ({t_k}, {d})"
            )));
        }
        rows.push(1.0);
        rows.push(-1.0 / (KB_EV_PER_K * t_k));
        y.push(d.ln());
    }
    let fit = lstsq(&rows, points.len(), 2, &y, 1e-12)?;
    Ok((fit.x[1], fit.x[0]))
}
