//! Simulation and analysis of entanglement-assisted pulse-position
//! communication read out by heterodyne conversion and a conditional-nulling
//! photon-counting receiver.
//!
//! - [`stats`]: channel statistics and displaced-thermal vacuum weights.
//! - [`conversion`]: heterodyne records and Gram-Schmidt conversion to idler means.
//! - [`receiver`]: the conditional-nulling decision procedure.
//! - [`theory`]: error recursion, its brute-force oracle, ideal and Helstrom limits.
//! - [`rates`]: capacities and optimized PPM rates.
//! - [`harness`]: Monte-Carlo campaigns, statistical gates and sweeps.
//! - [`dataset`]: CSV/JSON output.

pub mod conversion;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod rates;
pub mod receiver;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use stats::{derive_statistics, DerivedStats, ScenarioParams};
pub use theory::BinaryErrorPair;
