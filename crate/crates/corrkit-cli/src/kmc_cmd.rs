//! `kmc run`: oxygen-interstitial diffusivity over a temperature sweep,
//! deterministic for a fixed seed.

use std::path::Path;

use serde::Serialize;

use corrkit::cluster_expansion::barrier;
use corrkit::kmc::{
    arrhenius_fit, diffusivity_sweep, BarrierField, DiffusivityEstimate, KmcLattice, KmcParams,
    Recording, SiteEnergyBarrier, UniformBarrier,
};
use corrkit::CorrError;

use crate::config::BarrierSpec;
use crate::report::{Formats, Reporter};
use crate::{CliError, CliResult, CommonArgs};

fn read_site_energies(path: &Path, n_sites: usize) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::Config(format!("bad CSV row in {}: {e}", path.display())))?;
        let raw = record.get(0).ok_or_else(|| {
            CliError::Config(format!("{}: row {} is empty", path.display(), i + 1))
        })?;
        let v: f64 = raw.parse().map_err(|e| {
            CliError::Config(format!(
                "{}: row {}: cannot parse '{raw}': {e}",
                path.display(),
                i + 1
            ))
        })?;
        out.push(v);
    }
    if out.len() != n_sites {
        return Err(CliError::Config(format!(
            "{}: {} site energies but the lattice has {} sites",
            path.display(),
            out.len(),
            n_sites
        )));
    }
    Ok(out)
}

fn build_barrier(spec: &BarrierSpec, lattice: &KmcLattice) -> CliResult<Box<dyn BarrierField>> {
    match spec {
        BarrierSpec::Uniform { barrier_ev } => Ok(Box::new(UniformBarrier(*barrier_ev))),
        BarrierSpec::SiteEnergy { site_energies, saddle_ev } => {
            let site_energy_ev = read_site_energies(site_energies, lattice.n_sites())?;
            Ok(Box::new(SiteEnergyBarrier { site_energy_ev, saddle_ev: *saddle_ev }))
        }
        BarrierSpec::Ce { oct_model, tet_model, occupations } => {
            let oct = crate::ce_cmd::load_model(oct_model)?;
            let tet = crate::ce_cmd::load_model(tet_model)?;
            let configs = crate::ce_cmd::read_occupations(occupations, "kmc")?;
            let config = &configs[0];
            if config.sigma.len() != lattice.n_sites() {
                return Err(CliError::Config(format!(
                    "{}: {} occupations but the lattice has {} sites",
                    occupations.display(),
                    config.sigma.len(),
                    lattice.n_sites()
                )));
            }
            let adjacency = lattice.adjacency();
            let hop = (0, adjacency[0][0]);
            let value = barrier(&oct, &tet, config, hop, &adjacency).map_err(|e| match e {
                CorrError::Topology(_) => CliError::Config(format!("kmc.barrier: {e}")),
                other => CliError::compute(other),
            })?;
            Ok(Box::new(UniformBarrier(value)))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct KmcRecord {
    temperature_k: f64,
    estimate: DiffusivityEstimate,
}

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let cfg = crate::load_and_override(args)?;
    let k = cfg
        .kmc
        .clone()
        .ok_or_else(|| CliError::Config("config has no [kmc] section".to_string()))?;

    let lattice = KmcLattice::new(k.a_bohr, k.dims)
        .map_err(|e| CliError::Config(format!("kmc lattice: {e}")))?;
    let barriers = build_barrier(&k.barrier, &lattice)?;
    let params = KmcParams {
        temperature_k: k.temperatures_k[0],
        nu0_hz: k.nu0_hz,
        n_steps: k.n_steps,
        n_trajectories: k.n_trajectories,
        seed: k.seed,
    };
    let sweep = diffusivity_sweep(
        &lattice,
        barriers.as_ref(),
        &params,
        &k.temperatures_k,
        &Recording::default(),
    )
    .map_err(CliError::compute)?;
    let records: Vec<KmcRecord> = sweep
        .into_iter()
        .map(|(temperature_k, estimate)| KmcRecord { temperature_k, estimate })
        .collect();

    // Arrhenius fit over the sweep when it is well posed
    let fit = if records.len() >= 2
        && records.iter().all(|r| r.estimate.d_cm2_per_s > 0.0)
    {
        let points: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.temperature_k, r.estimate.d_cm2_per_s))
            .collect();
        arrhenius_fit(&points).ok()
    } else {
        None
    };

    let reporter =
        Reporter::new(&cfg.output.dir, Formats::from_flag(args.format), "kmc run", &cfg)?;
    let payload = serde_json::json!({
        "n_sites": lattice.n_sites(),
        "jump_distance_bohr": lattice.jump_distance_bohr(),
        "records": records,
        "arrhenius": fit.map(|(ea_ev, ln_a)| serde_json::json!({
            "ea_ev": ea_ev,
            "ln_a_cm2_per_s": ln_a,
        })),
    });
    let json_path = reporter.write_json("kmc_diffusivity", "kmc", &payload)?;
    let rows: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "{},{:.12e},{:.12e},{},{:.12e}",
                r.temperature_k,
                r.estimate.d_cm2_per_s,
                r.estimate.stderr_cm2_per_s,
                r.estimate.n_trajectories,
                r.estimate.mean_dt_nu0
            )
        })
        .collect();
    let csv_path = reporter.write_csv(
        "kmc_diffusivity",
        "T_K,D_cm2_per_s,stderr_cm2_per_s,n_s,mean_dt_over_inv_nu0",
        &rows,
    )?;

    for r in &records {
        let warn = if r.estimate.rare_event_ok { "" } else { "  [rare-event assumption weak]" };
        println!(
            "T = {:>7} K: D = {:.4e} cm^2/s (stderr {:.1e}){warn}",
            r.temperature_k, r.estimate.d_cm2_per_s, r.estimate.stderr_cm2_per_s
        );
    }
    if let Some((ea_ev, ln_a)) = fit {
        println!("Arrhenius fit: Ea = {ea_ev:.4} eV, ln A = {ln_a:.4}");
    }
    for p in [json_path, csv_path].into_iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}
