//! corrkit command line: resource-estimation sweeps, cluster-expansion
//! fits, KMC diffusivity runs, and closed-form workflow quantities.
//!
//! Exit codes: 0 success, 1 computation error, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrkit::structures::ElectronMode;

mod ce_cmd;
mod config;
mod geom_cmd;
mod kmc_cmd;
mod qre_cmd;
mod report;
mod workflow_cmd;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, flags, or input files. Exit 2.
    Config(String),
    /// The inputs were well formed but the computation failed. Exit 1.
    Compute(String),
}

impl CliError {
    /// Library failures during a run count as computation errors.
    pub fn compute<E: std::fmt::Display>(e: E) -> CliError {
        CliError::Compute(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Valence,
    AllElectron,
}

impl From<ModeArg> for ElectronMode {
    fn from(m: ModeArg) -> ElectronMode {
        match m {
            ModeArg::Valence => ElectronMode::Valence,
            ModeArg::AllElectron => ElectronMode::AllElectron,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fci,
    CcsdT,
    Sci,
    Dmrg,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration, TOML (JSON accepted)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides [output].dir
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides [kmc].seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid oversampling factor in (0, 1]; overrides [qre].gamma
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Electron counting mode; overrides [qre].electron_mode
    #[arg(long, value_enum)]
    pub electron_mode: Option<ModeArg>,
    /// Emit only this format (default: both JSON and CSV)
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

/// Load the config and fold the command-line overrides into it, so the
/// provenance echo shows what actually ran.
pub fn load_and_override(args: &CommonArgs) -> CliResult<config::RunConfig> {
    let mut cfg = config::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(q) = cfg.qre.as_mut() {
        if let Some(gamma) = args.gamma {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(CliError::Config(format!(
                    "--gamma must lie in (0, 1], got {gamma}"
                )));
            }
            q.gamma = gamma;
        }
        if let Some(mode) = args.electron_mode {
            q.electron_mode = mode.into();
        }
    }
    if let Some(k) = cfg.kmc.as_mut() {
        if let Some(seed) = args.seed {
            k.seed = seed;
        }
    }
    Ok(cfg)
}

#[derive(Parser)]
#[command(
    name = "corrkit",
    version,
    about = "Resource estimation, cluster expansion, and KMC for periodic alloy models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logical resource estimates for qubitized phase estimation
    Qre {
        #[command(subcommand)]
        sub: QreSub,
    },
    /// Cluster-expansion fitting and barrier evaluation
    Ce {
        #[command(subcommand)]
        sub: CeSub,
    },
    /// Kinetic Monte Carlo diffusivity
    Kmc {
        #[command(subcommand)]
        sub: KmcSub,
    },
    /// Closed-form workflow quantities
    Workflow {
        #[command(subcommand)]
        sub: WorkflowSub,
    },
    /// Geometry utilities
    Geom {
        #[command(subcommand)]
        sub: GeomSub,
    },
}

#[derive(Subcommand)]
enum QreSub {
    /// First-quantized estimates at each configured cutoff
    First(CommonArgs),
    /// Second-quantized (dual plane-wave) estimates
    Second(CommonArgs),
    /// Both encodings over the cutoff list, canonically ordered
    Sweep(CommonArgs),
    /// Fit low-cutoff scaling laws and predict beyond them
    Extrapolate(CommonArgs),
}

#[derive(Subcommand)]
enum CeSub {
    /// Fit effective cluster interactions and score them by leave-one-out
    Fit(CommonArgs),
    /// Hop barriers from an octahedral/tetrahedral model pair
    Barriers(CommonArgs),
}

#[derive(Subcommand)]
enum KmcSub {
    /// Temperature sweep of the oxygen interstitial diffusivity
    Run(CommonArgs),
}

#[derive(Subcommand)]
enum WorkflowSub {
    /// Arrhenius rate from a barrier in Hartree
    Arrhenius {
        /// Attempt frequency A, 1/s
        #[arg(long)]
        prefactor: f64,
        /// Activation energy, Hartree
        #[arg(long)]
        ea_hartree: f64,
        /// Temperature, K
        #[arg(long)]
        temperature_k: f64,
        /// Also write the JSON document into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading-order classical cost of a reference method
    Scaling {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Spatial orbitals N
        #[arg(long)]
        n_orbitals: u64,
        /// Electrons
        #[arg(long)]
        eta: u64,
        /// Determinant budget (sci only)
        #[arg(long)]
        n_determinants: Option<u64>,
        /// Bond dimension (dmrg only)
        #[arg(long)]
        bond_dimension: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interstitial solution energy from three total energies
    SolutionEnergy {
        /// E(host + interstitial), Hartree
        #[arg(long, allow_negative_numbers = true)]
        e_defected: f64,
        /// E(host), Hartree
        #[arg(long, allow_negative_numbers = true)]
        e_host: f64,
        /// E(O2 dimer), Hartree
        #[arg(long, allow_negative_numbers = true)]
        e_dimer: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical aluminum fraction for protective scale formation
    CritAl {
        /// Critical oxide volume fraction g*
        #[arg(long)]
        g_star: f64,
        /// Oxygen surface solubility (mole fraction)
        #[arg(long)]
        n_o_s: f64,
        /// Oxygen diffusivity
        #[arg(long)]
        d_o: f64,
        /// Alloy molar volume
        #[arg(long)]
        v_m: f64,
        /// Aluminum diffusivity
        #[arg(long)]
        d_al: f64,
        /// Oxide molar volume per mole of Al
        #[arg(long)]
        v_ox: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GeomSub {
    /// Parse a geometry and report cell and electron bookkeeping
    Inspect {
        /// Extended-XYZ file with a Lattice="..." comment line
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long, value_enum, default_value = "valence")]
        electron_mode: ModeArg,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Qre { sub } => match sub {
            QreSub::First(args) => qre_cmd::run(qre_cmd::QreMode::First, &args),
            QreSub::Second(args) => qre_cmd::run(qre_cmd::QreMode::Second, &args),
            QreSub::Sweep(args) => qre_cmd::run(qre_cmd::QreMode::Sweep, &args),
            QreSub::Extrapolate(args) => qre_cmd::run(qre_cmd::QreMode::Extrapolate, &args),
        },
        Command::Ce { sub } => match sub {
            CeSub::Fit(args) => ce_cmd::fit(&args),
            CeSub::Barriers(args) => ce_cmd::barriers(&args),
        },
        Command::Kmc { sub } => match sub {
            KmcSub::Run(args) => kmc_cmd::run(&args),
        },
        Command::Workflow { sub } => match sub {
            WorkflowSub::Arrhenius { prefactor, ea_hartree, temperature_k, out } => {
                workflow_cmd::arrhenius(prefactor, ea_hartree, temperature_k, out.as_ref())
            }
            WorkflowSub::Scaling {
                method,
                n_orbitals,
                eta,
                n_determinants,
                bond_dimension,
                out,
            } => workflow_cmd::scaling(
                method,
                n_orbitals,
                eta,
                n_determinants,
                bond_dimension,
                out.as_ref(),
            ),
            WorkflowSub::SolutionEnergy { e_defected, e_host, e_dimer, out } => {
                workflow_cmd::solution(e_defected, e_host, e_dimer, out.as_ref())
            }
            WorkflowSub::CritAl { g_star, n_o_s, d_o, v_m, d_al, v_ox, out } => {
                workflow_cmd::crit_al(g_star, n_o_s, d_o, v_m, d_al, v_ox, out.as_ref())
            }
        },
        Command::Geom { sub } => match sub {
            GeomSub::Inspect { geometry, electron_mode } => {
                geom_cmd::inspect(&geometry, electron_mode.into())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
