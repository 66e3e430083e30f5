//! Continuous-approximation location-inventory-grid model for urban EV
//! battery swapping networks.
//!
//! Everything is expressed as densities over an urban area: stations per
//! km^2, batteries per km^2, $ per day per km^2, kW per km^2.

pub mod config;
pub mod demand;
pub mod econ;
pub mod error;
pub mod geometry;
pub mod inventory;
pub mod market;
pub mod model;
pub mod normal;
pub mod optimizer;
pub mod params;
pub mod regulation;
pub mod scenarios;

pub use config::{load_params, ModelConfig};
pub use demand::{baseline_profile, DemandProfile, StationDemand};
pub use econ::CostBreakdown;
pub use error::{ModelError, Result};
pub use model::{Architecture, Configuration, Decision, MetricsReport, StockPlan};
pub use params::{StockCap, SystemParams};
pub use regulation::RegulationMarket;
