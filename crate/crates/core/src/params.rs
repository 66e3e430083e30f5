//! Physical, cost and service-level parameters.
//!
//! Rates are stored exactly as quoted (dollars per hour, per km, per kWh);
//! conversion to the per-day cost-density basis happens in [`crate::econ`].

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, ModelError, Result};

/// Hours per day; hourly depreciation rates are multiplied by this.
pub const HOURS_PER_DAY: f64 = 24.0;

/// Upper bound on decentralized spare stock used when regulation pays for
/// holding more batteries than the service level requires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StockCap {
    /// Fixed bound in batteries per km^2.
    Absolute(f64),
    /// Multiple of the minimum service-level stock r^B.
    MultipleOfMinimum(f64),
}

impl Default for StockCap {
    fn default() -> Self {
        StockCap::MultipleOfMinimum(2.0)
    }
}

impl StockCap {
    pub fn resolve(&self, minimum: f64) -> f64 {
        match *self {
            StockCap::Absolute(v) => v,
            StockCap::MultipleOfMinimum(k) => k * minimum,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Swapping-station density rho_s (km^-2).
    pub rho_s: f64,
    /// Truck speed q (km/h).
    pub truck_speed: f64,
    /// Truck / station batch capacity (batteries).
    pub q_cap: f64,
    /// Full-charge time at charging-station power (h).
    pub charge_time: f64,
    /// Charging power at charging stations, lambda^C (kW).
    pub power_central: f64,
    /// Charging power at swapping stations, lambda^S (kW).
    pub power_swap: f64,
    /// Battery energy capacity B^C (kWh).
    pub battery_kwh: f64,
    /// Amortized charging-station cost c^C ($/h).
    pub cost_charging_station: f64,
    /// Amortized swapping-station cost c^S ($/h). Reported only.
    pub cost_swapping_station: f64,
    /// Amortized swapping station with on-site charging c^I ($/h).
    pub cost_onsite_station: f64,
    /// Transport cost c^T ($/km).
    pub cost_transport: f64,
    /// Battery depreciation without regulation c^B ($/h).
    pub cost_battery: f64,
    /// Battery depreciation with regulation c^R ($/h).
    pub cost_battery_regulation: f64,
    /// Electricity price per demand scenario c^E_n ($/kWh).
    pub electricity_price: Vec<f64>,
    /// Swapping-station stockout threshold eps^S.
    pub eps_swap: f64,
    /// Charging-station stockout threshold eps^C.
    pub eps_charge: f64,
    /// Regulation capacity shortage threshold eps^B.
    pub eps_capacity: f64,
    /// Regulation performance level theta.
    pub theta: f64,
    /// Bound on decentralized spare stock (batteries/km^2).
    pub decentral_cap: StockCap,
    /// Use Var(L) = T^T mu (rho_s Q - T^T mu) instead of the Q-form.
    pub bernoulli_consistent_variance: bool,
}

impl Default for SystemParams {
    /// Beijing baseline values.
    fn default() -> Self {
        let charge_time = 0.78;
        let power_central = 41.0;
        SystemParams {
            rho_s: 0.04,
            truck_speed: 30.0,
            q_cap: 30.0,
            charge_time,
            power_central,
            power_swap: 7.0,
            battery_kwh: power_central * charge_time,
            cost_charging_station: 11.10,
            cost_swapping_station: 4.46,
            cost_onsite_station: 4.64,
            cost_transport: 1.13,
            cost_battery: 0.10,
            cost_battery_regulation: 0.27,
            electricity_price: vec![0.223, 0.068],
            eps_swap: 0.03,
            eps_charge: 0.03,
            eps_capacity: 0.03,
            theta: 0.75,
            decentral_cap: StockCap::default(),
            bernoulli_consistent_variance: false,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("rho_s", self.rho_s)?;
        check_positive("q_truck", self.truck_speed)?;
        if !(self.q_cap >= 1.0 && self.q_cap.is_finite()) {
            return Err(ModelError::param("Q_cap", "must be >= 1"));
        }
        check_positive("T_C", self.charge_time)?;
        check_positive("lambda_S", self.power_swap)?;
        check_positive("lambda_C", self.power_central)?;
        if self.power_central < self.power_swap {
            return Err(ModelError::param("lambda_C", "must be >= lambda_S"));
        }
        check_positive("B_C", self.battery_kwh)?;
        for (key, v) in [
            ("c_C", self.cost_charging_station),
            ("c_S", self.cost_swapping_station),
            ("c_I", self.cost_onsite_station),
            ("c_T", self.cost_transport),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ModelError::param(key, "must be >= 0"));
            }
        }
        check_positive("c_B", self.cost_battery)?;
        if !(self.cost_battery_regulation >= self.cost_battery) {
            return Err(ModelError::param("c_R", "must be >= c_B"));
        }
        if self.electricity_price.is_empty()
            || self.electricity_price.iter().any(|p| !(*p >= 0.0) || !p.is_finite())
        {
            return Err(ModelError::param("c_E", "needs one nonnegative price per scenario"));
        }
        check_probability("eps_S", self.eps_swap)?;
        check_probability("eps_C", self.eps_charge)?;
        check_probability("eps_B", self.eps_capacity)?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(ModelError::param("theta", "out of (0,1]"));
        }
        match self.decentral_cap {
            StockCap::Absolute(v) if !(v >= 0.0 && v.is_finite()) => {
                return Err(ModelError::param("r_B_cap", "must be >= 0"))
            }
            StockCap::MultipleOfMinimum(k) if !(k >= 1.0 && k.is_finite()) => {
                return Err(ModelError::param("r_B_cap_factor", "must be >= 1"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Charging time at the charging stations (h).
    pub fn central_charge_time(&self) -> f64 {
        self.charge_time
    }

    /// On-site charging time at a swapping station: B^C / lambda^S (h).
    pub fn onsite_charge_time(&self) -> f64 {
        self.battery_kwh / self.power_swap
    }

    /// Scale both charging powers; charge times shrink in proportion.
    pub fn with_power_multiplier(&self, m: f64) -> Self {
        SystemParams {
            power_central: self.power_central * m,
            power_swap: self.power_swap * m,
            charge_time: self.charge_time / m,
            ..self.clone()
        }
    }

    /// Scale both battery depreciation rates.
    pub fn with_battery_cost_multiplier(&self, m: f64) -> Self {
        SystemParams {
            cost_battery: self.cost_battery * m,
            cost_battery_regulation: self.cost_battery_regulation * m,
            ..self.clone()
        }
    }

    /// Battery depreciation rate in effect for the given regulation status.
    pub fn battery_rate(&self, regulation_on: bool) -> f64 {
        if regulation_on {
            self.cost_battery_regulation
        } else {
            self.cost_battery
        }
    }
}
