//! `qre` subcommands: per-cutoff resource estimates in one or both
//! encodings, and the low-cutoff extrapolation protocol.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use corrkit::planewave::grid_from_cutoff;
use corrkit::qre::first::{
    estimate_first_at_cutoff, LambdaBreakdown, PrecisionBudget, PrecisionTargets,
};
use corrkit::qre::second::{
    dpw_coefficients_with_guard, estimate_second, fit_extrapolation, mu_bits, one_norm_second,
    ExtrapolationPoint,
};
use corrkit::qre::ResourceEstimate;
use corrkit::structures::{parse_geometry_with, CrystalCell, ElectronMode, ValenceTable};

use crate::config::{Framework, QreSection};
use crate::report::{Formats, Reporter};
use crate::{CliError, CliResult, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QreMode {
    First,
    Second,
    Sweep,
    Extrapolate,
}

impl QreMode {
    fn name(self) -> &'static str {
        match self {
            QreMode::First => "qre first",
            QreMode::Second => "qre second",
            QreMode::Sweep => "qre sweep",
            QreMode::Extrapolate => "qre extrapolate",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            QreMode::First => "qre_first",
            QreMode::Second => "qre_second",
            QreMode::Sweep => "qre_sweep",
            QreMode::Extrapolate => "qre_extrapolation",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct QreRecord {
    model: String,
    framework: &'static str,
    cutoff_ry: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_breakdown: Option<LambdaBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision_budget: Option<PrecisionBudget>,
    /// Coefficient register bits (second-quantized only).
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prepare_epsilon_ha: Option<f64>,
    estimate: ResourceEstimate,
}

pub fn load_cell(q: &QreSection) -> CliResult<CrystalCell> {
    let text = std::fs::read_to_string(&q.geometry).map_err(|e| {
        CliError::Config(format!("cannot read geometry {}: {e}", q.geometry.display()))
    })?;
    parse_geometry_with(&text, &ValenceTable::default(), q.electron_mode).map_err(|e| {
        CliError::Config(format!("bad geometry {}: {e}", q.geometry.display()))
    })
}

pub fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string())
}

fn targets_of(q: &QreSection) -> PrecisionTargets {
    PrecisionTargets {
        epsilon: q.precision.epsilon,
        epsilon_m: q.precision.epsilon_m,
        epsilon_r: q.precision.epsilon_r,
        epsilon_t: q.precision.epsilon_t,
    }
}

fn first_record(
    cell: &CrystalCell,
    q: &QreSection,
    model: &str,
    cutoff: f64,
) -> CliResult<QreRecord> {
    let targets = targets_of(q);
    let (_basis, lb, budget, estimate) =
        estimate_first_at_cutoff(cell, cutoff, q.gamma, &targets).map_err(CliError::compute)?;
    Ok(QreRecord {
        model: model.to_string(),
        framework: "first",
        cutoff_ry: cutoff,
        lambda_breakdown: Some(lb),
        precision_budget: Some(budget),
        mu_bits: None,
        prepare_epsilon_ha: None,
        estimate,
    })
}

fn second_record(
    cell: &CrystalCell,
    q: &QreSection,
    model: &str,
    cutoff: f64,
) -> CliResult<QreRecord> {
    let basis = grid_from_cutoff(cell, cutoff, q.gamma).map_err(CliError::compute)?;
    let coeffs =
        dpw_coefficients_with_guard(cell, &basis, q.max_explicit_n).map_err(CliError::compute)?;
    let lambda = one_norm_second(&coeffs);
    let (mu, eps_prep) =
        mu_bits(lambda, q.delta_e_ha, 0.0, coeffs.n_so).map_err(CliError::compute)?;
    let estimate =
        estimate_second(cell, &basis, lambda, mu, q.delta_e_ha).map_err(CliError::compute)?;
    Ok(QreRecord {
        model: model.to_string(),
        framework: "second",
        cutoff_ry: cutoff,
        lambda_breakdown: None,
        precision_budget: None,
        mu_bits: Some(mu),
        prepare_epsilon_ha: Some(eps_prep),
        estimate,
    })
}

fn mode_label(mode: ElectronMode) -> &'static str {
    match mode {
        ElectronMode::Valence => "valence",
        ElectronMode::AllElectron => "all_electron",
    }
}

const QRE_CSV_HEADER: &str = "model,framework,cutoff_ry,electron_mode,eta,basis_n,\
lambda_ha,logical_qubits,qpe_iterations,toffoli_count,t_count,clifford_count";

fn csv_row(r: &QreRecord) -> String {
    let e = &r.estimate;
    format!(
        "{},{},{},{},{},{},{:.6e},{},{},{},{},{}",
        r.model,
        r.framework,
        r.cutoff_ry,
        mode_label(e.provenance.electron_mode),
        e.provenance.eta,
        e.basis_n,
        e.lambda,
        e.logical_qubits,
        e.qpe_iterations,
        e.toffoli_count,
        e.t_count,
        e.clifford_count
    )
}

pub fn run(mode: QreMode, args: &CommonArgs) -> CliResult<()> {
    let cfg = crate::load_and_override(args)?;
    let q = cfg
        .qre
        .clone()
        .ok_or_else(|| CliError::Config("config has no [qre] section".to_string()))?;
    let cell = load_cell(&q)?;
    let model = model_name(&q.geometry);
    let reporter = Reporter::new(
        &cfg.output.dir,
        Formats::from_flag(args.format),
        mode.name(),
        &cfg,
    )?;

    if mode == QreMode::Extrapolate {
        return extrapolate(&cell, &q, &model, &reporter, mode);
    }

    let frameworks: &[&'static str] = match (mode, q.framework) {
        (QreMode::First, _) => &["first"],
        (QreMode::Second, _) => &["second"],
        (QreMode::Sweep, Framework::First) => &["first"],
        (QreMode::Sweep, Framework::Second) => &["second"],
        (QreMode::Sweep, Framework::Both) => &["first", "second"],
        (QreMode::Extrapolate, _) => unreachable!(),
    };

    let jobs: Vec<(&'static str, f64)> = frameworks
        .iter()
        .flat_map(|&fw| q.cutoffs_ry.iter().map(move |&c| (fw, c)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(fw, cutoff)| match fw {
            "first" => first_record(&cell, &q, &model, cutoff),
            _ => second_record(&cell, &q, &model, cutoff),
        })
        .collect::<CliResult<Vec<QreRecord>>>()?;
    // canonical order regardless of scheduling
    records.sort_by(|a, b| {
        (a.model.as_str(), a.framework)
            .cmp(&(b.model.as_str(), b.framework))
            .then(a.cutoff_ry.total_cmp(&b.cutoff_ry))
    });

    let json_path = reporter.write_json(mode.stem(), "records", &records)?;
    let rows: Vec<String> = records.iter().map(csv_row).collect();
    let csv_path = reporter.write_csv(mode.stem(), QRE_CSV_HEADER, &rows)?;

    for r in &records {
        println!(
            "{:<6} {:>6} Ry: {} logical qubits, lambda {:.4e} Ha, {:.4e} T gates",
            r.framework,
            r.cutoff_ry,
            r.estimate.logical_qubits,
            r.estimate.lambda,
            r.estimate.t_count as f64
        );
    }
    for p in [json_path, csv_path].into_iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct PredictionRecord {
    cutoff_ry: f64,
    basis_n: u64,
    lambda_ha: f64,
    t_count: f64,
    logical_qubits: f64,
}

fn extrapolate(
    cell: &CrystalCell,
    q: &QreSection,
    model: &str,
    reporter: &Reporter,
    mode: QreMode,
) -> CliResult<()> {
    let ex = q.extrapolation.as_ref().ok_or_else(|| {
        CliError::Config("config has no [qre.extrapolation] section".to_string())
    })?;

    let points = ex
        .fit_cutoffs_ry
        .par_iter()
        .map(|&cutoff| {
            let rec = second_record(cell, q, model, cutoff)?;
            Ok(ExtrapolationPoint {
                n: rec.estimate.basis_n,
                lambda: rec.estimate.lambda,
                t_count: rec.estimate.t_count as f64,
                n_logical: rec.estimate.logical_qubits,
            })
        })
        .collect::<CliResult<Vec<ExtrapolationPoint>>>()?;
    let fit = fit_extrapolation(&points, q.delta_e_ha).map_err(CliError::compute)?;

    let predictions = ex
        .predict_cutoffs_ry
        .iter()
        .map(|&cutoff| {
            let basis = grid_from_cutoff(cell, cutoff, q.gamma).map_err(CliError::compute)?;
            let p = fit.predict(basis.n);
            Ok(PredictionRecord {
                cutoff_ry: cutoff,
                basis_n: basis.n,
                lambda_ha: p.lambda,
                t_count: p.t_count,
                logical_qubits: p.logical_qubits,
            })
        })
        .collect::<CliResult<Vec<PredictionRecord>>>()?;

    let payload = serde_json::json!({
        "model": model,
        "fit": fit,
        "points": points,
        "predictions": predictions,
    });
    let json_path = reporter.write_json(mode.stem(), "extrapolation", &payload)?;
    let rows: Vec<String> = predictions
        .iter()
        .map(|p| {
            format!(
                "{},{},{:.6e},{:.6e},{:.6e}",
                p.cutoff_ry, p.basis_n, p.lambda_ha, p.t_count, p.logical_qubits
            )
        })
        .collect();
    let csv_path = reporter.write_csv(
        mode.stem(),
        "cutoff_ry,basis_n,lambda_ha,t_count,logical_qubits",
        &rows,
    )?;

    for p in &predictions {
        println!(
            "predict {:>6} Ry (N = {}): lambda {:.4e} Ha, {:.4e} T gates",
            p.cutoff_ry, p.basis_n, p.lambda_ha, p.t_count
        );
    }
    for p in [json_path, csv_path].into_iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}
