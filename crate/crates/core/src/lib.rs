//! Wireless sensor network lifetime simulator with a mobile base station
//! that a genetic algorithm repositions every round, toward the sensors
//! with the least energy left.

pub mod config;
pub mod energy;
pub mod error;
pub mod ga;
pub mod protocols;
pub mod report;
pub mod sim;
pub mod world;

pub use config::{parse_config, RunSpec};
pub use error::{ConfigError, Error, GaError, Result};
pub use ga::{GaParams, WeightedSite};
pub use protocols::ProtocolKind;
pub use sim::{LifetimeSummary, ProtocolConfig, RepositionPolicy, RoundMetrics};
pub use world::{NetworkConfig, Position};
