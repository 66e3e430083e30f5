//! Monte-Carlo oracle for the swapgrid closed forms.
//!
//! A time-stepped fluid simulation of one or more charging-station
//! districts: swapping stations run an (r, Q) policy, trucks take T^T each
//! way, depleted batteries recharge for T^C at the charging station. The
//! decentralized variant keeps a fixed battery pool per station and
//! recharges swapped-out batteries on site.

mod central;
mod decentral;
mod demand;
pub mod geometry;
mod output;
pub mod stats;

use serde::Serialize;
use swapgrid::{Decision, SystemParams};
use thiserror::Error;

pub use central::{closer_form, formula_stock, measure_in_transit, simulate_centralized, InTransitMoments, VarianceForm};
pub use decentral::simulate_decentralized;
pub use output::write_stats_csv;
pub use stats::{BatchAcc, Estimate};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("infeasible geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Model(#[from] swapgrid::ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn category(&self) -> &'static str {
        match self {
            SimError::Config(_) => "sim_config",
            SimError::Geometry(_) => "sim_geometry",
            SimError::Model(e) => e.category(),
            SimError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    /// The profile's overall mean and variance in every hour, as the stock
    /// formulas assume.
    Stationary,
    /// Hourly means and variances from the profile.
    TimeVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandProcess {
    /// Brownian increments N(mu dt, sigma^2 dt).
    Normal,
    /// Poisson batch arrivals with geometric batch sizes, same mean and variance rates.
    CompoundPoisson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    /// Measured hours after warmup.
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    /// Time steps per one-way truck trip (centralized) or per on-site
    /// charge (decentralized uses four times as many).
    pub steps_per_lead: usize,
    pub demand: DemandMode,
    pub process: DemandProcess,
    /// Batches for batch-means standard errors.
    pub batches: usize,
    /// Simulated area (km^2); sets the number of districts / stations.
    pub area: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 20_000.0,
            warmup: 240.0,
            seed: 1,
            steps_per_lead: 16,
            demand: DemandMode::Stationary,
            process: DemandProcess::Normal,
            batches: 50,
            area: 100.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::Config("horizon must be positive".into()));
        }
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(SimError::Config("warmup must be >= 0".into()));
        }
        if self.steps_per_lead < 2 {
            return Err(SimError::Config("steps_per_lead must be >= 2".into()));
        }
        if self.batches < 2 {
            return Err(SimError::Config("at least 2 batches are needed".into()));
        }
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(SimError::Config("area must be positive".into()));
        }
        Ok(())
    }
}

/// Swapping stations per district when charging stations sit at density
/// `rho_c`: the nearest whole number, at least one.
pub fn stations_per_district(rho_c: f64, rho_s: f64) -> usize {
    ((rho_s / rho_c).round() as usize).max(1)
}

/// Move rho_c to rho_s / n so districts hold a whole number of stations.
pub fn snap_decision(decision: &Decision, params: &SystemParams) -> Decision {
    let n = stations_per_district(decision.rho_c, params.rho_s);
    Decision::new(params.rho_s / n as f64, decision.q)
}

/// Empirical statistics from one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    /// Fraction of order cycles whose lead-time demand reached r_i + 1.
    pub swap_stockout: Option<Estimate>,
    pub swap_cycles: u64,
    /// Mean amount by which charged stock had fallen below r_i when an order
    /// was placed (the offset m of the expected deficit).
    pub order_overshoot: Option<Estimate>,
    /// Fraction of time the charging-station deficit exceeded R / rho_c.
    pub charge_stockout: Option<Estimate>,
    /// Per charging station (batteries).
    pub deficit_mean: Option<Estimate>,
    pub deficit_var: Option<Estimate>,
    /// Fraction of time a swapping station had no charged battery.
    pub decentral_stockout: Option<Estimate>,
    /// Per-period in-transit density (batteries/km^2).
    pub in_transit: Vec<InTransitMoments>,
    /// Long-run average available regulation capacity (kW/km^2).
    pub avg_capacity: Option<Estimate>,
    /// Per-period mean capacity (kW/km^2).
    pub capacity_by_period: Vec<f64>,
    pub stations: usize,
    pub districts: usize,
    pub rho_c: f64,
    pub travel_time: f64,
    pub charge_time: f64,
    pub dt: f64,
    pub steps: u64,
    /// Largest relative drift in total battery count over the run.
    pub conservation_error: f64,
}

/// Run `reps` independent replications in parallel, replication i using
/// seed `cfg.seed + i`. Results come back in seed order.
pub fn replicate<F>(cfg: &SimConfig, reps: usize, run: F) -> Result<Vec<SimStats>>
where
    F: Fn(&SimConfig) -> Result<SimStats> + Sync,
{
    use rayon::prelude::*;
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let c = SimConfig {
                seed: cfg.seed.wrapping_add(i),
                ..cfg.clone()
            };
            run(&c)
        })
        .collect()
}
