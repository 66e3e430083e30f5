//! Battery and cost densities for both architectures.
//!
//! Every cost term is in $ per day per km^2: hourly depreciation rates are
//! multiplied by [`HOURS_PER_DAY`], and sums over the 24 hourly periods are
//! already daily. Clearing prices are $/MW, capacities kW/km^2, hence /1000.

use serde::Serialize;

use crate::demand::DemandProfile;
use crate::error::{ModelError, Result};
use crate::geometry;
use crate::inventory::{self, PhiPieces};
use crate::model::{Decision, StockPlan};
use crate::normal::safety_factor;
use crate::params::{SystemParams, HOURS_PER_DAY};
use crate::regulation::{self, CapacityBound, RegulationMarket};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub electricity: f64,
    pub station_depreciation: f64,
    pub battery_depreciation: f64,
    pub transport: f64,
    /// Stored as a negative contribution (<= 0).
    pub regulation_income: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.electricity
            + self.station_depreciation
            + self.battery_depreciation
            + self.transport
            + self.regulation_income
    }

    pub fn terms(&self) -> [(&'static str, f64); 5] {
        [
            ("electricity", self.electricity),
            ("station_depreciation", self.station_depreciation),
            ("battery_depreciation", self.battery_depreciation),
            ("transport", self.transport),
            ("regulation_income", self.regulation_income),
        ]
    }
}

/// B = R + r + Q rho_s.
pub fn centralized_battery_density(decision: &Decision, stock: &StockPlan, params: &SystemParams) -> f64 {
    stock.primary + stock.reorder_point + decision.q * params.rho_s
}

pub fn decentralized_battery_density(r_b: f64) -> f64 {
    r_b
}

/// Daily charging energy cost; identical for every configuration.
pub fn electricity_cost(params: &SystemParams, profile: &DemandProfile) -> Result<f64> {
    if params.electricity_price.len() != profile.scenarios() {
        return Err(ModelError::Data(format!(
            "{} electricity prices for {} demand scenarios",
            params.electricity_price.len(),
            profile.scenarios()
        )));
    }
    Ok(profile.priced_demand(&params.electricity_price) * params.battery_kwh)
}

fn require_market<'a>(
    market: Option<&'a RegulationMarket>,
    regulation_on: bool,
    profile: &DemandProfile,
) -> Result<Option<&'a RegulationMarket>> {
    if !regulation_on {
        return Ok(None);
    }
    let m = market.ok_or_else(|| {
        ModelError::Data("regulation requires AGC and clearing-price data".into())
    })?;
    m.check_periods(profile)?;
    Ok(Some(m))
}

/// Full result of evaluating a centralized decision.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralEvaluation {
    pub decision: Decision,
    pub stock: StockPlan,
    pub breakdown: CostBreakdown,
    /// Per-period capacity bounds; empty with regulation off.
    pub capacities: Vec<CapacityBound>,
}

impl CentralEvaluation {
    pub fn cost_density(&self) -> f64 {
        self.breakdown.total()
    }
}

/// Centralized objective with everything that does not depend on the
/// decision precomputed.
#[derive(Debug, Clone)]
pub struct CentralModel<'a> {
    params: &'a SystemParams,
    profile: &'a DemandProfile,
    market: Option<&'a RegulationMarket>,
    z_charge: f64,
    z_swap: f64,
    z_capacity: f64,
    electricity: f64,
    period_means: Vec<f64>,
}

impl<'a> CentralModel<'a> {
    pub fn new(
        params: &'a SystemParams,
        profile: &'a DemandProfile,
        market: Option<&'a RegulationMarket>,
        regulation_on: bool,
    ) -> Result<Self> {
        params.validate()?;
        let market = require_market(market, regulation_on, profile)?;
        Ok(CentralModel {
            params,
            profile,
            market,
            z_charge: safety_factor(params.eps_charge),
            z_swap: safety_factor(params.eps_swap),
            z_capacity: safety_factor(params.eps_capacity),
            electricity: electricity_cost(params, profile)?,
            period_means: (0..profile.periods()).map(|z| profile.period_mean(z)).collect(),
        })
    }

    pub fn params(&self) -> &SystemParams {
        self.params
    }

    pub fn profile(&self) -> &DemandProfile {
        self.profile
    }

    pub fn regulation_on(&self) -> bool {
        self.market.is_some()
    }

    /// Evaluate without range checks on the decision.
    pub(crate) fn evaluate_unchecked(&self, rho_c: f64, q: f64) -> Result<CentralEvaluation> {
        let p = self.params;
        let tt = geometry::travel_time(rho_c, p.truck_speed);
        let primary = inventory::primary_unchecked(q, rho_c, p, self.profile, self.z_charge);
        let reorder_point = inventory::reorder_unchecked(rho_c, p, self.profile, self.z_swap);
        let nu = PhiPieces::for_density(rho_c, p, self.profile).nu;
        let stock = StockPlan {
            primary,
            reorder_point,
            decentral: 0.0,
            nu,
            eps_bs: 0.0,
        };
        let batteries = primary + reorder_point + q * p.rho_s;
        let mut capacities = Vec::new();
        let mut income = 0.0;
        if let Some(m) = self.market {
            capacities.reserve(self.period_means.len());
            let held = p.power_central * primary + p.power_swap * (reorder_point + p.rho_s * q);
            let lambda = p.power_central + p.power_swap;
            for (z, mu) in self.period_means.iter().enumerate() {
                let (mean, var) = regulation::in_transit_unchecked(z, tt * mu, q, p)?;
                let num = held - lambda * (mean + self.z_capacity * var.sqrt());
                let b = CapacityBound {
                    kw: num.max(0.0) / m.eta()[z].max(regulation::ETA_FLOOR),
                    capped: m.eta()[z] <= 0.0,
                };
                income += m.prices()[z] * b.paid() / 1000.0;
                capacities.push(b);
            }
        }
        let breakdown = CostBreakdown {
            electricity: self.electricity,
            station_depreciation: HOURS_PER_DAY * p.cost_charging_station * rho_c,
            battery_depreciation: HOURS_PER_DAY * p.battery_rate(self.market.is_some()) * batteries,
            transport: 2.0 * p.cost_transport * geometry::mean_distance(rho_c) / q
                * self.profile.total_demand(),
            // 0 - x rather than -x: no income stays +0 in output files.
            regulation_income: 0.0 - income,
        };
        Ok(CentralEvaluation {
            decision: Decision::new(rho_c, q),
            stock,
            breakdown,
            capacities,
        })
    }

    pub fn evaluate(&self, decision: Decision) -> Result<CentralEvaluation> {
        decision.validate(self.params)?;
        self.evaluate_unchecked(decision.rho_c, decision.q)
    }

    /// Cost density, or +inf where the decision is infeasible.
    pub fn objective(&self, rho_c: f64, q: f64) -> f64 {
        match self.evaluate_unchecked(rho_c, q) {
            Ok(e) => e.breakdown.total(),
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn centralized_cost_density(
    decision: &Decision,
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    regulation_on: bool,
) -> Result<CostBreakdown> {
    Ok(CentralModel::new(params, profile, market, regulation_on)?
        .evaluate(*decision)?
        .breakdown)
}

/// Result of evaluating the decentralized architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct DecentralEvaluation {
    pub r_b: f64,
    pub r_b_min: f64,
    pub breakdown: CostBreakdown,
    pub capacities: Vec<CapacityBound>,
}

/// Regulation income per battery of decentralized spare stock ($/day).
pub fn decentralized_income_slope(params: &SystemParams, market: &RegulationMarket) -> f64 {
    market
        .prices()
        .iter()
        .zip(market.eta())
        .filter(|(_, e)| **e > 0.0)
        .map(|(p, e)| p * params.power_swap / e / 1000.0)
        .sum()
}

pub fn evaluate_decentralized(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    eps_bs: f64,
    regulation_on: bool,
    r_b_override: Option<f64>,
) -> Result<DecentralEvaluation> {
    params.validate()?;
    let market = require_market(market, regulation_on, profile)?;
    let r_b_min = inventory::decentralized_stock_rb(params, profile, eps_bs)?;
    let r_b = match r_b_override {
        None => r_b_min,
        Some(v) if v < r_b_min * (1.0 - 1e-12) => {
            return Err(ModelError::StockBelowMinimum {
                value: v,
                minimum: r_b_min,
            })
        }
        Some(v) => {
            let cap = params.decentral_cap.resolve(r_b_min);
            if v > cap * (1.0 + 1e-12) {
                return Err(ModelError::param("r_B", format!("{v} exceeds r_B_cap {cap}")));
            }
            v
        }
    };
    let mut capacities = Vec::new();
    let mut income = 0.0;
    if let Some(m) = market {
        for (z, eta) in m.eta().iter().enumerate() {
            let b = regulation::decentralized_capacity_bound(r_b, params, *eta)?;
            income += m.prices()[z] * b.paid() / 1000.0;
            capacities.push(b);
        }
    }
    let breakdown = CostBreakdown {
        electricity: electricity_cost(params, profile)?,
        station_depreciation: HOURS_PER_DAY * params.cost_onsite_station * params.rho_s,
        battery_depreciation: HOURS_PER_DAY * params.battery_rate(regulation_on) * r_b,
        transport: 0.0,
        regulation_income: 0.0 - income,
    };
    Ok(DecentralEvaluation {
        r_b,
        r_b_min,
        breakdown,
        capacities,
    })
}

pub fn decentralized_cost_density(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    eps_bs: f64,
    regulation_on: bool,
    r_b_override: Option<f64>,
) -> Result<CostBreakdown> {
    Ok(evaluate_decentralized(params, profile, market, eps_bs, regulation_on, r_b_override)?.breakdown)
}

/// A homogeneous cell of a city region.
#[derive(Debug, Clone)]
pub struct Cell {
    /// km^2.
    pub area: f64,
    pub params: SystemParams,
    pub profile: DemandProfile,
}

/// Total centralized cost ($/day) of a region, one decision per cell.
pub fn regional_total_cost(
    cells: &[Cell],
    decisions: &[Decision],
    market: Option<&RegulationMarket>,
    regulation_on: bool,
) -> Result<f64> {
    if cells.len() != decisions.len() {
        return Err(ModelError::Data("one decision per cell is required".into()));
    }
    let mut total = 0.0;
    for (cell, d) in cells.iter().zip(decisions) {
        if !(cell.area > 0.0) {
            return Err(ModelError::param("area", "must be positive"));
        }
        total += cell.area
            * centralized_cost_density(d, &cell.params, &cell.profile, market, regulation_on)?.total();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::baseline_profile;
    use crate::market::sample_market;

    fn zero_profile() -> DemandProfile {
        DemandProfile::new(vec![vec![1.0, 0.0]], vec![vec![0.0, 0.0]], vec![0.0]).unwrap()
    }

    #[test]
    fn battery_densities() {
        let d = Decision::new(0.01, 50.0);
        let s = StockPlan {
            primary: 10.0,
            reorder_point: 1.0,
            decentral: 0.0,
            nu: 7.0,
            eps_bs: 0.0,
        };
        assert_eq!(centralized_battery_density(&d, &s, &SystemParams::default()), 13.0);
        assert_eq!(decentralized_battery_density(1.0722), 1.0722);
        assert_eq!(decentralized_battery_density(0.0), 0.0);
    }

    #[test]
    fn zero_demand_centralized() {
        let p = SystemParams::default();
        let b = centralized_cost_density(&Decision::new(0.01, 1.0), &p, &zero_profile(), None, false).unwrap();
        assert_eq!(b.electricity, 0.0);
        assert_eq!(b.transport, 0.0);
        assert_eq!(b.regulation_income, 0.0);
        let expect = 24.0 * (11.10 * 0.01 + 0.10 * 2.0 * 0.04);
        assert!((b.total() - expect).abs() < 1e-12);
    }

    #[test]
    fn transport_inverse_in_q() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let a = centralized_cost_density(&Decision::new(0.01, 8.0), &p, &prof, None, false).unwrap();
        let b = centralized_cost_density(&Decision::new(0.01, 4.0), &p, &prof, None, false).unwrap();
        assert!((b.transport - 2.0 * a.transport).abs() < 1e-12 * b.transport);
    }

    #[test]
    fn baseline_term_by_term() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let m = sample_market(p.theta);
        let d = Decision::new(0.012, 9.5);
        for reg in [false, true] {
            let e = CentralModel::new(&p, &prof, Some(&m), reg).unwrap().evaluate(d).unwrap();
            let b = e.breakdown;
            // Spreadsheet-style recomputation.
            let tt = std::f64::consts::SQRT_2 / (3.0 * 0.012f64.sqrt()) / 30.0;
            let r = inventory::reorder_point_r(0.012, &p, &prof, 0.03).unwrap();
            let big_r = inventory::primary_stock_r(9.5, 0.012, &p, &prof, 0.03).unwrap();
            let mut elec = 0.0;
            let mut daily = 0.0;
            for z in 0..24 {
                let peak = [8, 9, 15, 16, 17, 18, 19].contains(&z);
                let mu = prof.period_mean(z);
                elec += if peak { 0.223 } else { 0.068 } * mu * 41.0 * 0.78;
                daily += mu;
            }
            let rate = if reg { 0.27 } else { 0.10 };
            let mut income = 0.0;
            if reg {
                for z in 0..24 {
                    let (mean, var) = regulation::in_transit_moments(z, 9.5, 0.012, &p, &prof).unwrap();
                    let num = 41.0 * big_r + 7.0 * (r + 0.04 * 9.5)
                        - 48.0 * (mean + 1.880_793_608_1 * var.sqrt());
                    income += m.prices()[z] * num.max(0.0) / m.eta()[z] / 1000.0;
                }
            }
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-12);
            assert!(rel(b.electricity, elec));
            assert!(rel(b.station_depreciation, 24.0 * 11.10 * 0.012));
            assert!(rel(b.battery_depreciation, 24.0 * rate * (big_r + r + 9.5 * 0.04)));
            assert!(rel(b.transport, 2.0 * 1.13 * tt * 30.0 / 9.5 * daily));
            if reg {
                assert!(rel(-b.regulation_income, income));
            }
            let sum: f64 = b.terms().iter().map(|t| t.1).sum();
            assert!(rel(sum, b.total()));
        }
    }

    #[test]
    fn regulation_needs_market() {
        let p = SystemParams::default();
        let err = centralized_cost_density(&Decision::new(0.01, 5.0), &p, &baseline_profile(), None, true);
        assert!(err.is_err());
    }

    #[test]
    fn regulation_off_ignores_market() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let d = Decision::new(0.01, 5.0);
        let a = centralized_cost_density(&d, &p, &prof, None, false).unwrap();
        let b = centralized_cost_density(&d, &p, &prof, Some(&sample_market(0.75)), false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decentralized_zero_demand() {
        let p = SystemParams::default();
        let b = decentralized_cost_density(&p, &zero_profile(), None, 0.03, false, None).unwrap();
        assert!((b.total() - 4.4544).abs() < 1e-9);
    }

    #[test]
    fn decentralized_regulation_identity() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let m = sample_market(0.75);
        let off = evaluate_decentralized(&p, &prof, Some(&m), 0.03, false, None).unwrap();
        let on = evaluate_decentralized(&p, &prof, Some(&m), 0.03, true, None).unwrap();
        let diff = on.breakdown.total() - off.breakdown.total();
        let income = -on.breakdown.regulation_income;
        assert!((diff - (24.0 * (0.27 - 0.10) * off.r_b - income)).abs() < 1e-9);
        assert!((income - decentralized_income_slope(&p, &m) * on.r_b).abs() < 1e-9);
    }

    #[test]
    fn decentralized_override_bounds() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let min = evaluate_decentralized(&p, &prof, None, 0.03, false, None).unwrap().r_b_min;
        let low = evaluate_decentralized(&p, &prof, None, 0.03, false, Some(0.5 * min));
        assert!(matches!(low, Err(ModelError::StockBelowMinimum { .. })));
        assert!(evaluate_decentralized(&p, &prof, None, 0.03, false, Some(3.0 * min)).is_err());
        let ok = evaluate_decentralized(&p, &prof, None, 0.03, false, Some(1.5 * min)).unwrap();
        assert_eq!(ok.r_b, 1.5 * min);
    }

    #[test]
    fn regional_sum() {
        let cell = Cell {
            area: 1.0,
            params: SystemParams::default(),
            profile: baseline_profile(),
        };
        let d = Decision::new(0.01, 6.0);
        let one = regional_total_cost(std::slice::from_ref(&cell), &[d], None, false).unwrap();
        let c = centralized_cost_density(&d, &cell.params, &cell.profile, None, false).unwrap();
        assert_eq!(one, c.total());
        let two = regional_total_cost(&[cell.clone(), cell], &[d, d], None, false).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn cost_diverges_near_zero_density() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let model = CentralModel::new(&p, &prof, None, false).unwrap();
        let near = model.objective(1e-9, 5.0);
        let normal = model.objective(0.01, 5.0);
        assert!(near > 100.0 * normal);
    }
}
