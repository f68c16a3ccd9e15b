//! Link-level simulator and training engine for down-link cellular-connected
//! UAV networks.
//!
//! The crate models a square urban subregion with a statistically generated
//! building field and a hexagonal grid of multi-antenna base stations. A drone
//! user flies a fixed trajectory while base stations keep serving their ground
//! users on a pool of resource-block occupancy maps. Line-of-sight is decided
//! geometrically against the building prisms, large-scale loss follows the
//! urban-macro pathloss formulas, and small-scale fading is Nakagami-m with an
//! imperfect CSI model.
//!
//! On top of the radio layer sit two interleaved decision problems: a discrete
//! resource-block choice per time slot (learned by a dueling double DQN) and a
//! continuous transmit-beam choice per channel draw (learned by DDPG). The
//! [`trainer`] module runs the interleaved loop, and [`eval`] scores trained or
//! baseline policies by ergodic outage duration.

pub mod agents;
pub mod channel;
pub mod cli;
pub mod eval;
pub mod nn;
pub mod radioenv;
pub mod rballoc;
pub mod trainer;
pub mod world;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters that cannot describe a runnable setup.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stochastic generator could not satisfy its constraints.
    #[error("generation error: {0}")]
    Generation(String),
    /// Loaded data does not match the expected shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
