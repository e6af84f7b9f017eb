//! Analytic and Monte Carlo toolkit for cellular downlinks assisted by
//! fixed ground relays and mobile aerial relays.
//!
//! The crate has three layers:
//!
//! * closed-form SIR distributions and derived metrics (`analytic`), with an
//!   independent stochastic-geometry sampler to validate them (`montecarlo`);
//! * a multi-cell system simulator (`geometry`, `propagation`, `placement`,
//!   `netsim`) comparing deployment schemes under asymmetric traffic;
//! * a command-line front end (`cli`) that emits plot-ready CSV with
//!   deterministic, seed-reproducible content.
//!
//! Units: `netsim` and `geometry` work in meters, watts, Hz and bits/s.
//! `analytic` and `montecarlo` use normalized (dimensionless) distances and
//! densities, since the closed forms mix pathloss exponents and are only
//! self-consistent in a fixed distance unit.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod netsim;
pub mod placement;
pub mod propagation;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
