//! TOML configuration: sectioned flat key-value document.
//!
//! ```toml
//! [network]
//! rho_s = 0.04        # swapping stations per km^2
//! q_truck = 30.0      # km/h
//! Q_cap = 30.0        # batteries per truck / station bay
//!
//! [charging]
//! T_C = 0.78          # h, full charge at lambda_C
//! lambda_C = 41.0     # kW
//! lambda_S = 7.0      # kW
//! B_C = 31.98         # kWh, defaults to lambda_C * T_C
//!
//! [costs]
//! c_C = 11.10         # $/h per charging station
//! c_S = 4.46          # $/h per swapping station
//! c_I = 4.64          # $/h per swapping station with on-site charging
//! c_T = 1.13          # $/km
//! c_B = 0.10          # $/h per battery
//! c_R = 0.27          # $/h per battery in regulation
//! c_E = [0.223, 0.068]  # $/kWh, peak then off-peak
//!
//! [service]
//! eps_S = 0.03
//! eps_C = 0.03
//! eps_B = 0.03
//! theta = 0.75
//! r_B_cap_factor = 2.0  # or r_B_cap = <batteries/km^2>
//! bernoulli_consistent_variance = false
//!
//! [demand]            # per swapping station, one entry per hourly period
//! mean = [5.68, ...]
//! std = [3.71, ...]
//! peak_hours = [8, 9, 15, 16, 17, 18, 19]
//! ```
//!
//! Every key is optional; missing keys take the baseline values.

use serde::{Deserialize, Serialize};

use crate::demand::{DemandProfile, StationDemand};
use crate::error::{ModelError, Result};
use crate::params::{StockCap, SystemParams};

/// Validated parameters plus the per-station demand they were built from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelConfig {
    pub params: SystemParams,
    pub demand: StationDemand,
}

impl ModelConfig {
    /// Demand densities at the configured swapping-station density.
    pub fn profile(&self) -> DemandProfile {
        self.demand
            .to_profile(self.params.rho_s)
            .expect("validated on load")
    }

    /// Demand-scale transform: rho_s and per-station mean/variance grow by `s`.
    pub fn at_demand_scale(&self, s: f64) -> ModelConfig {
        ModelConfig {
            params: SystemParams {
                rho_s: self.params.rho_s * s,
                ..self.params.clone()
            },
            demand: self.demand.scaled(s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.demand.validate()?;
        if self.params.electricity_price.len() != 2 {
            return Err(ModelError::param(
                "c_E",
                "needs exactly two prices (peak, off-peak)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    charging: RawCharging,
    #[serde(default)]
    costs: RawCosts,
    #[serde(default)]
    service: RawService,
    #[serde(default)]
    demand: RawDemand,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    rho_s: Option<f64>,
    q_truck: Option<f64>,
    #[serde(rename = "Q_cap")]
    q_cap: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCharging {
    #[serde(rename = "T_C")]
    t_c: Option<f64>,
    #[serde(rename = "lambda_C")]
    lambda_c: Option<f64>,
    #[serde(rename = "lambda_S")]
    lambda_s: Option<f64>,
    #[serde(rename = "B_C")]
    b_c: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    #[serde(rename = "c_C")]
    c_c: Option<f64>,
    #[serde(rename = "c_S")]
    c_s: Option<f64>,
    #[serde(rename = "c_I")]
    c_i: Option<f64>,
    #[serde(rename = "c_T")]
    c_t: Option<f64>,
    #[serde(rename = "c_B")]
    c_b: Option<f64>,
    #[serde(rename = "c_R")]
    c_r: Option<f64>,
    #[serde(rename = "c_E")]
    c_e: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawService {
    #[serde(rename = "eps_S")]
    eps_s: Option<f64>,
    #[serde(rename = "eps_C")]
    eps_c: Option<f64>,
    #[serde(rename = "eps_B")]
    eps_b: Option<f64>,
    theta: Option<f64>,
    #[serde(rename = "r_B_cap", skip_serializing_if = "Option::is_none")]
    r_b_cap: Option<f64>,
    #[serde(rename = "r_B_cap_factor", skip_serializing_if = "Option::is_none")]
    r_b_cap_factor: Option<f64>,
    bernoulli_consistent_variance: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemand {
    mean: Option<Vec<f64>>,
    std: Option<Vec<f64>>,
    peak_hours: Option<Vec<usize>>,
}

/// Parse and validate a configuration document.
pub fn load_params(text: &str) -> Result<ModelConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    let base = SystemParams::default();

    let charge_time = raw.charging.t_c.unwrap_or(base.charge_time);
    let power_central = raw.charging.lambda_c.unwrap_or(base.power_central);
    let decentral_cap = match (raw.service.r_b_cap, raw.service.r_b_cap_factor) {
        (Some(_), Some(_)) => {
            return Err(ModelError::param(
                "r_B_cap",
                "conflicts with r_B_cap_factor; give one of them",
            ))
        }
        (Some(v), None) => StockCap::Absolute(v),
        (None, Some(k)) => StockCap::MultipleOfMinimum(k),
        (None, None) => StockCap::default(),
    };

    let params = SystemParams {
        rho_s: raw.network.rho_s.unwrap_or(base.rho_s),
        truck_speed: raw.network.q_truck.unwrap_or(base.truck_speed),
        q_cap: raw.network.q_cap.unwrap_or(base.q_cap),
        charge_time,
        power_central,
        power_swap: raw.charging.lambda_s.unwrap_or(base.power_swap),
        battery_kwh: raw.charging.b_c.unwrap_or(power_central * charge_time),
        cost_charging_station: raw.costs.c_c.unwrap_or(base.cost_charging_station),
        cost_swapping_station: raw.costs.c_s.unwrap_or(base.cost_swapping_station),
        cost_onsite_station: raw.costs.c_i.unwrap_or(base.cost_onsite_station),
        cost_transport: raw.costs.c_t.unwrap_or(base.cost_transport),
        cost_battery: raw.costs.c_b.unwrap_or(base.cost_battery),
        cost_battery_regulation: raw.costs.c_r.unwrap_or(base.cost_battery_regulation),
        electricity_price: raw.costs.c_e.unwrap_or(base.electricity_price),
        eps_swap: raw.service.eps_s.unwrap_or(base.eps_swap),
        eps_charge: raw.service.eps_c.unwrap_or(base.eps_charge),
        eps_capacity: raw.service.eps_b.unwrap_or(base.eps_capacity),
        theta: raw.service.theta.unwrap_or(base.theta),
        decentral_cap,
        bernoulli_consistent_variance: raw
            .service
            .bernoulli_consistent_variance
            .unwrap_or(base.bernoulli_consistent_variance),
    };

    let base_demand = StationDemand::default();
    let demand = StationDemand {
        mean: raw.demand.mean.unwrap_or(base_demand.mean),
        std: raw.demand.std.unwrap_or(base_demand.std),
        peak_hours: raw.demand.peak_hours.unwrap_or(base_demand.peak_hours),
    };

    let config = ModelConfig { params, demand };
    config.validate()?;
    Ok(config)
}

/// Emit the fully populated, normalized form of a configuration.
pub fn to_toml(config: &ModelConfig) -> String {
    let p = &config.params;
    let (r_b_cap, r_b_cap_factor) = match p.decentral_cap {
        StockCap::Absolute(v) => (Some(v), None),
        StockCap::MultipleOfMinimum(k) => (None, Some(k)),
    };
    let raw = RawConfig {
        network: RawNetwork {
            rho_s: Some(p.rho_s),
            q_truck: Some(p.truck_speed),
            q_cap: Some(p.q_cap),
        },
        charging: RawCharging {
            t_c: Some(p.charge_time),
            lambda_c: Some(p.power_central),
            lambda_s: Some(p.power_swap),
            b_c: Some(p.battery_kwh),
        },
        costs: RawCosts {
            c_c: Some(p.cost_charging_station),
            c_s: Some(p.cost_swapping_station),
            c_i: Some(p.cost_onsite_station),
            c_t: Some(p.cost_transport),
            c_b: Some(p.cost_battery),
            c_r: Some(p.cost_battery_regulation),
            c_e: Some(p.electricity_price.clone()),
        },
        service: RawService {
            eps_s: Some(p.eps_swap),
            eps_c: Some(p.eps_charge),
            eps_b: Some(p.eps_capacity),
            theta: Some(p.theta),
            r_b_cap,
            r_b_cap_factor,
            bernoulli_consistent_variance: Some(p.bernoulli_consistent_variance),
        },
        demand: RawDemand {
            mean: Some(config.demand.mean.clone()),
            std: Some(config.demand.std.clone()),
            peak_hours: Some(config.demand.peak_hours.clone()),
        },
    };
    toml::to_string(&raw).expect("config serializes")
}

/// Baseline configuration document shipped with the crate.
pub const BASELINE_TOML: &str = include_str!("../data/baseline.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_file_values() {
        let c = load_params(BASELINE_TOML).unwrap();
        assert_eq!(c.params.cost_charging_station, 11.10);
        assert_eq!(c.params.charge_time, 0.78);
        assert_eq!(c.params.power_central, 41.0);
        assert_eq!(c, ModelConfig::default());
    }

    #[test]
    fn empty_document_is_baseline() {
        assert_eq!(load_params("").unwrap(), ModelConfig::default());
    }

    #[test]
    fn eps_out_of_range_names_key() {
        let err = load_params("[service]\neps_S = 1.5\n").unwrap_err();
        assert_eq!(err.to_string(), "eps_S out of (0,1)");
    }

    #[test]
    fn missing_cap_defaults_to_twice_minimum() {
        let c = load_params("[network]\nrho_s = 0.05\n").unwrap();
        assert_eq!(c.params.decentral_cap, StockCap::MultipleOfMinimum(2.0));
        assert_eq!(c.params.decentral_cap.resolve(1.25), 2.5);
        let again = load_params(&to_toml(&c)).unwrap();
        assert_eq!(again.params.decentral_cap, StockCap::MultipleOfMinimum(2.0));
    }

    #[test]
    fn absolute_cap_and_conflict() {
        let c = load_params("[service]\nr_B_cap = 3.5\n").unwrap();
        assert_eq!(c.params.decentral_cap, StockCap::Absolute(3.5));
        assert!(load_params("[service]\nr_B_cap = 3.5\nr_B_cap_factor = 2.0\n").is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(load_params("[network\n"), Err(ModelError::Parse(_))));
        assert!(matches!(
            load_params("[network]\nbogus = 1\n"),
            Err(ModelError::Parse(_))
        ));
    }

    #[test]
    fn battery_energy_defaults_to_power_times_time() {
        let c = load_params("[charging]\nT_C = 0.5\nlambda_C = 60.0\n").unwrap();
        assert!((c.params.battery_kwh - 30.0).abs() < 1e-12);
    }

    #[test]
    fn serialization_is_normal_form() {
        let c = load_params("[costs]\nc_T = 2.0\n[demand]\npeak_hours = [1, 2]\n").unwrap();
        let text = to_toml(&c);
        let back = load_params(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(to_toml(&back), text);
    }
}
