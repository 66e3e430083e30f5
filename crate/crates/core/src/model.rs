use std::fmt;

use serde::Serialize;

use crate::econ::CostBreakdown;
use crate::error::{check_positive, ModelError, Result};
use crate::params::SystemParams;

/// Centralized design decision at one location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    /// Charging-station density rho_c (km^-2).
    pub rho_c: f64,
    /// Re-order quantity Q (batteries, continuous).
    pub q: f64,
}

impl Decision {
    pub fn new(rho_c: f64, q: f64) -> Self {
        Decision { rho_c, q }
    }

    /// Enforces 0 < rho_c <= rho_s and 1 <= Q <= Q_cap.
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        check_positive("rho_c", self.rho_c)?;
        if self.rho_c > params.rho_s * (1.0 + 1e-12) {
            return Err(ModelError::param("rho_c", "must not exceed rho_s"));
        }
        if !(self.q >= 1.0 && self.q <= params.q_cap * (1.0 + 1e-12)) {
            return Err(ModelError::param("Q", "must lie in [1, Q_cap]"));
        }
        Ok(())
    }
}

/// Stock levels implied by a decision (all per km^2 except `nu`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StockPlan {
    /// Charging-station primary stock R.
    pub primary: f64,
    /// Swapping-station re-order point r.
    pub reorder_point: f64,
    /// Decentralized spare stock r^B.
    pub decentral: f64,
    /// Breakpoint of the deficit-variance function (batteries).
    pub nu: f64,
    /// Calibrated decentralized stockout probability.
    pub eps_bs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Centralized,
    Decentralized,
}

/// One of the four operating configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub architecture: Architecture,
    pub regulation: bool,
}

impl Configuration {
    pub const DECENTRALIZED: Configuration = Configuration {
        architecture: Architecture::Decentralized,
        regulation: false,
    };
    pub const CENTRALIZED: Configuration = Configuration {
        architecture: Architecture::Centralized,
        regulation: false,
    };
    pub const DECENTRALIZED_FR: Configuration = Configuration {
        architecture: Architecture::Decentralized,
        regulation: true,
    };
    pub const CENTRALIZED_FR: Configuration = Configuration {
        architecture: Architecture::Centralized,
        regulation: true,
    };

    /// Fixed reporting order.
    pub const ALL: [Configuration; 4] = [
        Self::DECENTRALIZED,
        Self::CENTRALIZED,
        Self::DECENTRALIZED_FR,
        Self::CENTRALIZED_FR,
    ];

    pub fn is_centralized(&self) -> bool {
        self.architecture == Architecture::Centralized
    }

    pub fn label(&self) -> &'static str {
        match (self.architecture, self.regulation) {
            (Architecture::Decentralized, false) => "decentralized",
            (Architecture::Centralized, false) => "centralized",
            (Architecture::Decentralized, true) => "decentralized_fr",
            (Architecture::Centralized, true) => "centralized_fr",
        }
    }

    pub fn parse(s: &str) -> Option<Configuration> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The three comparison metrics for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub configuration: Configuration,
    /// $ day^-1 km^-2.
    pub cost_density: f64,
    /// Batteries km^-2.
    pub battery_density: f64,
    /// kW km^-2.
    pub avg_reg_capacity: f64,
    pub breakdown: CostBreakdown,
    /// Present for centralized configurations.
    pub decision: Option<Decision>,
    pub stock: StockPlan,
}
