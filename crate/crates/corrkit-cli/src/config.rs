//! Run configuration: TOML on disk (JSON accepted), validated at load so
//! bad input fails before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use corrkit::cluster_expansion::Regularizer;
use corrkit::structures::ElectronMode;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qre: Option<QreSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ce: Option<CeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmc: Option<KmcSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out_dir() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QreSection {
    /// Extended-XYZ geometry with a Lattice="..." comment line.
    pub geometry: PathBuf,
    #[serde(default = "default_mode")]
    pub electron_mode: ElectronMode,
    pub cutoffs_ry: Vec<f64>,
    #[serde(default = "default_framework")]
    pub framework: Framework,
    /// Grid oversampling factor in (0, 1]; 1 = exact cutoff.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// QPE energy target for the second-quantized path, Hartree.
    #[serde(default = "default_delta_e")]
    pub delta_e_ha: f64,
    /// Largest orbital count allowed in explicit coefficient mode.
    #[serde(default = "default_guard")]
    pub max_explicit_n: u64,
    #[serde(default)]
    pub precision: PrecisionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<ExtrapolationSection>,
}

fn default_mode() -> ElectronMode {
    ElectronMode::Valence
}

fn default_framework() -> Framework {
    Framework::Both
}

fn default_gamma() -> f64 {
    1.0
}

fn default_delta_e() -> f64 {
    1e-3
}

fn default_guard() -> u64 {
    50_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    First,
    Second,
    Both,
}

/// First-quantized error split, Hartree.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_component")]
    pub epsilon_m: f64,
    #[serde(default = "default_component")]
    pub epsilon_r: f64,
    #[serde(default = "default_component")]
    pub epsilon_t: f64,
    /// Rotation synthesis precision. The cost model is calibrated at
    /// 1e-10 and no other value is accepted.
    #[serde(default = "default_delta_rot")]
    pub delta_rot: f64,
}

impl Default for PrecisionSection {
    fn default() -> Self {
        PrecisionSection {
            epsilon: default_epsilon(),
            epsilon_m: default_component(),
            epsilon_r: default_component(),
            epsilon_t: default_component(),
            delta_rot: default_delta_rot(),
        }
    }
}

fn default_epsilon() -> f64 {
    1.6e-3
}

fn default_component() -> f64 {
    1e-4
}

fn default_delta_rot() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolationSection {
    pub fit_cutoffs_ry: Vec<f64>,
    pub predict_cutoffs_ry: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeSection {
    /// Training CSV: header energy_ev,s0,s1,... then one row per config.
    pub training: PathBuf,
    /// JSON array of cluster orbits.
    pub orbits: PathBuf,
    #[serde(default)]
    pub regularizer: RegularizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barriers: Option<BarriersSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSection {
    #[serde(default = "default_reg_kind")]
    pub kind: RegKind,
    #[serde(default = "default_reg_lambda")]
    pub lambda: f64,
}

impl Default for RegularizerSection {
    fn default() -> Self {
        RegularizerSection { kind: RegKind::None, lambda: default_reg_lambda() }
    }
}

fn default_reg_kind() -> RegKind {
    RegKind::None
}

fn default_reg_lambda() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    None,
    Ridge,
    Lasso,
}

impl RegularizerSection {
    pub fn to_regularizer(self) -> CliResult<Regularizer> {
        match self.kind {
            RegKind::None => Ok(Regularizer::None),
            RegKind::Ridge => {
                require_positive(self.lambda, "ce.regularizer.lambda")?;
                Ok(Regularizer::Ridge { lambda: self.lambda })
            }
            RegKind::Lasso => {
                require_positive(self.lambda, "ce.regularizer.lambda")?;
                Ok(Regularizer::Lasso { lambda: self.lambda })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarriersSection {
    /// Fitted model JSON for the resting (octahedral) site.
    pub oct_model: PathBuf,
    /// Fitted model JSON for the saddle (tetrahedral) site.
    pub tet_model: PathBuf,
    /// Occupation CSV (header s0,s1,...), one row per configuration.
    pub configs: PathBuf,
    /// Conventional lattice parameter, Bohr.
    pub a_bohr: f64,
    pub dims: [usize; 3],
    /// Hops as (from_site, to_site) pairs on the interstitial sublattice.
    pub hops: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmcSection {
    /// Conventional lattice parameter, Bohr.
    pub a_bohr: f64,
    pub dims: [usize; 3],
    #[serde(default = "default_nu0")]
    pub nu0_hz: f64,
    pub temperatures_k: Vec<f64>,
    #[serde(default = "default_steps")]
    pub n_steps: u64,
    #[serde(default = "default_trajectories")]
    pub n_trajectories: u64,
    #[serde(default)]
    pub seed: u64,
    pub barrier: BarrierSpec,
}

fn default_nu0() -> f64 {
    1e13
}

fn default_steps() -> u64 {
    10_000
}

fn default_trajectories() -> u64 {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    /// Same barrier on every hop.
    Uniform { barrier_ev: f64 },
    /// Site-energy model: barrier = saddle - E(from). CSV has a single
    /// energy_ev column, one row per site in lattice order.
    SiteEnergy { site_energies: PathBuf, saddle_ev: f64 },
    /// Barrier from a fitted cluster-expansion pair evaluated on one
    /// occupation row (CSV, header s0,s1,...).
    Ce { oct_model: PathBuf, tet_model: PathBuf, occupations: PathBuf },
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = if path.extension().map(|e| e == "json").unwrap_or(false) {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad JSON config {}: {e}", path.display())))?
    } else {
        match toml::from_str(&text) {
            Ok(cfg) => cfg,
            // accept JSON content under any extension
            Err(toml_err) => serde_json::from_str(&text).map_err(|_| {
                CliError::Config(format!("bad config {}: {toml_err}", path.display()))
            })?,
        }
    };
    validate(&cfg, path)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, origin: &Path) -> CliResult<()> {
    if cfg.qre.is_none() && cfg.ce.is_none() && cfg.kmc.is_none() {
        return Err(CliError::Config(format!(
            "config {} has no task section; add [qre], [ce], or [kmc]",
            origin.display()
        )));
    }
    if let Some(q) = &cfg.qre {
        require_file(&q.geometry, "qre.geometry")?;
        if q.cutoffs_ry.is_empty() {
            return Err(CliError::Config("qre.cutoffs_ry is empty".to_string()));
        }
        for &c in &q.cutoffs_ry {
            require_positive(c, "qre.cutoffs_ry entry")?;
        }
        if !(q.gamma > 0.0 && q.gamma <= 1.0) {
            return Err(CliError::Config(format!(
                "qre.gamma must lie in (0, 1], got {}",
                q.gamma
            )));
        }
        require_positive(q.delta_e_ha, "qre.delta_e_ha")?;
        let p = &q.precision;
        for (v, name) in [
            (p.epsilon, "epsilon"),
            (p.epsilon_m, "epsilon_m"),
            (p.epsilon_r, "epsilon_r"),
            (p.epsilon_t, "epsilon_t"),
        ] {
            require_positive(v, &format!("qre.precision.{name}"))?;
        }
        if p.delta_rot != default_delta_rot() {
            return Err(CliError::Config(format!(
                "qre.precision.delta_rot: the cost model is calibrated at 1e-10; got {}",
                p.delta_rot
            )));
        }
        if let Some(ex) = &q.extrapolation {
            if ex.fit_cutoffs_ry.len() < 3 {
                return Err(CliError::Config(
                    "qre.extrapolation.fit_cutoffs_ry needs at least 3 cutoffs".to_string(),
                ));
            }
            for &c in ex.fit_cutoffs_ry.iter().chain(&ex.predict_cutoffs_ry) {
                require_positive(c, "qre.extrapolation cutoff")?;
            }
        }
    }
    if let Some(ce) = &cfg.ce {
        require_file(&ce.training, "ce.training")?;
        require_file(&ce.orbits, "ce.orbits")?;
        ce.regularizer.to_regularizer()?;
        if let Some(b) = &ce.barriers {
            require_file(&b.oct_model, "ce.barriers.oct_model")?;
            require_file(&b.tet_model, "ce.barriers.tet_model")?;
            require_file(&b.configs, "ce.barriers.configs")?;
            require_positive(b.a_bohr, "ce.barriers.a_bohr")?;
            if b.dims.iter().any(|&d| d == 0) {
                return Err(CliError::Config("ce.barriers.dims must be nonzero".to_string()));
            }
            if b.hops.is_empty() {
                return Err(CliError::Config("ce.barriers.hops is empty".to_string()));
            }
        }
    }
    if let Some(k) = &cfg.kmc {
        require_positive(k.a_bohr, "kmc.a_bohr")?;
        if k.dims.iter().any(|&d| d == 0) {
            return Err(CliError::Config("kmc.dims must be nonzero".to_string()));
        }
        require_positive(k.nu0_hz, "kmc.nu0_hz")?;
        if k.temperatures_k.is_empty() {
            return Err(CliError::Config("kmc.temperatures_k is empty".to_string()));
        }
        for &t in &k.temperatures_k {
            require_positive(t, "kmc.temperatures_k entry")?;
        }
        if k.n_steps == 0 || k.n_trajectories == 0 {
            return Err(CliError::Config(
                "kmc.n_steps and kmc.n_trajectories must be nonzero".to_string(),
            ));
        }
        match &k.barrier {
            BarrierSpec::Uniform { .. } => {}
            BarrierSpec::SiteEnergy { site_energies, .. } => {
                require_file(site_energies, "kmc.barrier.site_energies")?;
            }
            BarrierSpec::Ce { oct_model, tet_model, occupations } => {
                require_file(oct_model, "kmc.barrier.oct_model")?;
                require_file(tet_model, "kmc.barrier.tet_model")?;
                require_file(occupations, "kmc.barrier.occupations")?;
            }
        }
    }
    Ok(())
}

fn require_file(path: &Path, field: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{field}: no such file: {}",
            path.display()
        )))
    }
}

fn require_positive(v: f64, field: &str) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field} must be positive and finite, got {v}")))
    }
}
