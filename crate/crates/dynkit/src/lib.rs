//! dynkit — a dynamical-systems analysis toolkit.
//!
//! The crate covers simulation of flows and maps, equilibrium and
//! periodic-orbit analysis, Taylor computation of invariant-manifold graphs
//! and normal forms, local-bifurcation detection and classification,
//! Liapunov-exponent spectra, fractal dimension and symbolic dynamics.
//!
//! Every capability has a runnable demo under `examples/`; the `dynkit`
//! binary exposes the same operations as subcommands emitting CSV/JSON
//! artifacts.

pub mod bifurcation;
pub mod chaos;
pub mod cli;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod manifolds;
pub mod normalform;
pub mod periodic;
pub mod poly;
pub mod systems;

pub use error::{DynError, Result};

pub use cli::cli_main;
