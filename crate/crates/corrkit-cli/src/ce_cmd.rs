//! `ce` subcommands: ECI fitting with leave-one-out scoring, and hop
//! barriers from a fitted octahedral/tetrahedral model pair.

use std::path::Path;

use serde::Serialize;

use corrkit::cluster_expansion::{
    barrier, cv_passes, fit_eci, loo_cv, ClusterExpansionModel, ClusterOrbit, Configuration,
};
use corrkit::kmc::KmcLattice;
use corrkit::CorrError;

use crate::report::{Formats, Reporter};
use crate::{CliError, CliResult, CommonArgs};

const CV_THRESHOLD_MEV: f64 = 5.0;

/// Training CSV: header `energy_ev,s0,s1,...`, one configuration per row.
pub fn read_training(path: &Path) -> CliResult<Vec<(Configuration, f64)>> {
    let lattice_id = crate::qre_cmd::model_name(path);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("bad CSV header in {}: {e}", path.display())))?;
    let first = headers.iter().next().unwrap_or("");
    if first != "energy_ev" {
        return Err(CliError::Config(format!(
            "{}: first column must be energy_ev (header energy_ev,s0,s1,...), got '{first}'",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::Config(format!("bad CSV row in {}: {e}", path.display())))?;
        let mut fields = record.iter();
        let energy: f64 = parse_field(fields.next(), path, i, "energy_ev")?;
        let sigma = fields
            .enumerate()
            .map(|(j, f)| parse_field(Some(f), path, i, &format!("s{j}")))
            .collect::<CliResult<Vec<u32>>>()?;
        if sigma.is_empty() {
            return Err(CliError::Config(format!(
                "{}: row {} has no occupation columns",
                path.display(),
                i + 1
            )));
        }
        out.push((Configuration { sigma, lattice_id: lattice_id.clone() }, energy));
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: no training rows", path.display())));
    }
    Ok(out)
}

/// Occupation CSV: header `s0,s1,...`, one configuration per row.
pub fn read_occupations(path: &Path, lattice_id: &str) -> CliResult<Vec<Configuration>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::Config(format!("bad CSV row in {}: {e}", path.display())))?;
        let sigma = record
            .iter()
            .enumerate()
            .map(|(j, f)| parse_field(Some(f), path, i, &format!("s{j}")))
            .collect::<CliResult<Vec<u32>>>()?;
        out.push(Configuration { sigma, lattice_id: lattice_id.to_string() });
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: no occupation rows", path.display())));
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    path: &Path,
    row: usize,
    name: &str,
) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    let raw = field.ok_or_else(|| {
        CliError::Config(format!("{}: row {} is missing {name}", path.display(), row + 1))
    })?;
    raw.parse().map_err(|e| {
        CliError::Config(format!(
            "{}: row {}, column {name}: cannot parse '{raw}': {e}",
            path.display(),
            row + 1
        ))
    })
}

fn read_orbits(path: &Path, n_sites: usize) -> CliResult<Vec<ClusterOrbit>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let orbits: Vec<ClusterOrbit> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad orbit JSON {}: {e}", path.display())))?;
    for (i, orbit) in orbits.iter().enumerate() {
        orbit.validate(n_sites).map_err(|e| {
            CliError::Config(format!("{}: orbit {i} invalid: {e}", path.display()))
        })?;
    }
    Ok(orbits)
}

pub fn load_model(path: &Path) -> CliResult<ClusterExpansionModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad model JSON {}: {e}", path.display())))
}

pub fn fit(args: &CommonArgs) -> CliResult<()> {
    let cfg = crate::load_and_override(args)?;
    let ce = cfg
        .ce
        .clone()
        .ok_or_else(|| CliError::Config("config has no [ce] section".to_string()))?;
    let train = read_training(&ce.training)?;
    let orbits = read_orbits(&ce.orbits, train[0].0.sigma.len())?;
    let regularizer = ce.regularizer.to_regularizer()?;

    let mut model = fit_eci(&train, &orbits, regularizer).map_err(CliError::compute)?;
    let cv = loo_cv(&train, &orbits, regularizer).map_err(CliError::compute)?;
    model.cv_score = Some(cv);
    let passes = cv_passes(cv);

    let reporter = Reporter::new(&cfg.output.dir, Formats::from_flag(args.format), "ce fit", &cfg)?;
    let payload = serde_json::json!({
        "model": model,
        "cv_mev_per_atom": cv,
        "threshold_mev_per_atom": CV_THRESHOLD_MEV,
        "passes_threshold": passes,
        "n_train": train.len(),
        "n_orbits": orbits.len(),
    });
    let json_path = reporter.write_json("ce_fit", "fit", &payload)?;
    let row = format!(
        "{:.9e},{},{},{},{}",
        cv,
        CV_THRESHOLD_MEV,
        passes,
        train.len(),
        orbits.len()
    );
    let csv_path = reporter.write_csv(
        "ce_fit",
        "cv_mev_per_atom,threshold_mev_per_atom,passes_threshold,n_train,n_orbits",
        &[row],
    )?;

    // bare model document, loadable by `ce barriers` and `kmc run`
    let model_path = cfg.output.dir.join("ce_model.json");
    let text = serde_json::to_string_pretty(&model)
        .map_err(|e| CliError::Compute(format!("model serialization failed: {e}")))?;
    std::fs::write(&model_path, text + "\n")
        .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", model_path.display())))?;

    println!(
        "fit {} orbits on {} rows: LOO-CV {:.4} meV/atom ({} the 5 meV/atom bar)",
        orbits.len(),
        train.len(),
        cv,
        if passes { "passes" } else { "fails" }
    );
    println!("wrote {}", model_path.display());
    for p in [json_path, csv_path].into_iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct BarrierRecord {
    config_index: usize,
    from_site: usize,
    to_site: usize,
    barrier_ev: f64,
}

pub fn barriers(args: &CommonArgs) -> CliResult<()> {
    let cfg = crate::load_and_override(args)?;
    let ce = cfg
        .ce
        .clone()
        .ok_or_else(|| CliError::Config("config has no [ce] section".to_string()))?;
    let b = ce
        .barriers
        .clone()
        .ok_or_else(|| CliError::Config("config has no [ce.barriers] section".to_string()))?;

    let oct = load_model(&b.oct_model)?;
    let tet = load_model(&b.tet_model)?;
    let lattice = KmcLattice::new(b.a_bohr, b.dims)
        .map_err(|e| CliError::Config(format!("ce.barriers lattice: {e}")))?;
    let adjacency = lattice.adjacency();
    let configs = read_occupations(&b.configs, &crate::qre_cmd::model_name(&b.configs))?;
    for (i, c) in configs.iter().enumerate() {
        if c.sigma.len() != lattice.n_sites() {
            return Err(CliError::Config(format!(
                "{}: row {} has {} occupations but the {}x{}x{} lattice has {} sites",
                b.configs.display(),
                i + 1,
                c.sigma.len(),
                b.dims[0],
                b.dims[1],
                b.dims[2],
                lattice.n_sites()
            )));
        }
    }

    let mut records = Vec::with_capacity(configs.len() * b.hops.len());
    for (ci, config) in configs.iter().enumerate() {
        for &[from, to] in &b.hops {
            let value = barrier(&oct, &tet, config, (from, to), &adjacency).map_err(|e| {
                match e {
                    // a bad hop pair is an input problem, not a numeric one
                    CorrError::Topology(_) => {
                        CliError::Config(format!("ce.barriers.hops [{from}, {to}]: {e}"))
                    }
                    other => CliError::compute(other),
                }
            })?;
            records.push(BarrierRecord {
                config_index: ci,
                from_site: from,
                to_site: to,
                barrier_ev: value,
            });
        }
    }

    let reporter =
        Reporter::new(&cfg.output.dir, Formats::from_flag(args.format), "ce barriers", &cfg)?;
    let json_path = reporter.write_json("ce_barriers", "barriers", &records)?;
    let rows: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{:.9e}",
                r.config_index, r.from_site, r.to_site, r.barrier_ev
            )
        })
        .collect();
    let csv_path = reporter.write_csv(
        "ce_barriers",
        "config_index,from_site,to_site,barrier_ev",
        &rows,
    )?;

    println!(
        "{} barriers over {} configurations and {} hops",
        records.len(),
        configs.len(),
        b.hops.len()
    );
    for p in [json_path, csv_path].into_iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}
