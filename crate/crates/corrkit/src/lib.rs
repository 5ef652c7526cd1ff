//! Resource estimation for qubitized phase estimation on periodic alloy
//! models, plus the classical cluster-expansion / kinetic Monte Carlo
//! pipeline for interstitial oxygen diffusivity.
//!
//! The crate is organized around the stages of a hybrid workflow:
//! geometry ingestion ([`structures`]), reciprocal-grid construction
//! ([`planewave`]), first- and second-quantized logical resource
//! estimates ([`qre`]), cluster-expansion fitting ([`cluster_expansion`]),
//! kinetic Monte Carlo diffusion ([`kmc`]), and closed-form workflow
//! utilities ([`workflow`]).

pub mod cluster_expansion;
pub mod constants;
pub mod error;
pub mod kmc;
pub mod linalg;
pub mod planewave;
pub mod qre;
pub mod stats;
pub mod structures;
pub mod workflow;

pub use error::{CorrError, Result};
