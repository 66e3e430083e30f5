//! Four-configuration pipeline, eps^BS calibration, parameter sweeps and
//! radar normalization.
//!
//! Pipeline order: centralized solve (regulation off) -> calibrate eps^BS at
//! that optimum -> decentralized solves. The calibrated probability is shared
//! by both decentralized configurations so they deliver the same service.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ModelConfig;
use crate::demand::DemandProfile;
use crate::econ::{self, CentralModel};
use crate::error::{ModelError, Result};
use crate::geometry;
use crate::model::{Configuration, Decision, MetricsReport, StockPlan};
use crate::optimizer::{self, Optimum, SearchSpec};
use crate::params::SystemParams;
use crate::regulation::{self, RegulationMarket};

/// Bounds applied to eps^BS before taking the normal quantile.
const EPS_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub eps_bs: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Calibration {
    /// eps^BS kept strictly inside (0, 1) so the quantile is finite.
    pub fn usable(&self) -> f64 {
        self.eps_bs.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP)
    }
}

/// Monte-Carlo estimate of the decentralized stockout probability that
/// matches the centralized service, using per-unit-area counts.
///
/// Demand over the first T^T and over the remaining Delta - T^T of one
/// window are drawn as independent normal increments, so N(T^T) and
/// N(Delta) are nested; each count is truncated at zero.
pub fn calibrate_eps_bs(
    decision: &Decision,
    stock: &StockPlan,
    params: &SystemParams,
    profile: &DemandProfile,
    samples: usize,
    seed: u64,
) -> Result<Calibration> {
    if samples < 2 {
        return Err(ModelError::param("mc_samples", "needs at least 2 samples"));
    }
    decision.validate(params)?;
    let tt = geometry::travel_time(decision.rho_c, params.truck_speed);
    let delta = 2.0 * tt + params.central_charge_time();
    if !(delta > 0.0) {
        return Err(ModelError::param("T_C", "window 2 T^T + T^C must be positive"));
    }
    let (mu, s2) = (profile.mu_bar(), profile.sigma2_bar());
    let (m1, sd1) = (tt * mu, (tt * s2).sqrt());
    let (m2, sd2) = ((delta - tt) * mu, ((delta - tt) * s2).sqrt());
    let held = decision.rho_c / params.rho_s * stock.primary;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let first = m1 + sd1 * a;
        let whole = (first + m2 + sd2 * b).max(0.0);
        let x = ((whole - held).max(0.0) + first.max(0.0) - stock.reorder_point).max(0.0);
        sum += x;
        sum2 += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(Calibration {
        eps_bs: (mean / decision.q).clamp(0.0, 1.0),
        std_error: (var / n).sqrt() / decision.q,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub search: SearchSpec,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            search: SearchSpec::default(),
            mc_samples: 100_000,
            seed: 20240831,
        }
    }
}

fn central_report(config: Configuration, opt: &Optimum, params: &SystemParams, profile: &DemandProfile) -> Result<MetricsReport> {
    let e = &opt.evaluation;
    let avg = if config.regulation {
        regulation::average_capacity(&e.decision, &e.stock, params, profile)?
    } else {
        0.0
    };
    Ok(MetricsReport {
        configuration: config,
        cost_density: e.breakdown.total(),
        battery_density: econ::centralized_battery_density(&e.decision, &e.stock, params),
        avg_reg_capacity: avg,
        breakdown: e.breakdown,
        decision: Some(e.decision),
        stock: e.stock,
    })
}

fn decentral_report(
    config: Configuration,
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    calibration: &Calibration,
) -> Result<MetricsReport> {
    let eps = calibration.usable();
    let r_b = optimizer::choose_decentralized_stock(params, profile, market, config.regulation, eps)?;
    let e = econ::evaluate_decentralized(params, profile, market, eps, config.regulation, Some(r_b))?;
    Ok(MetricsReport {
        configuration: config,
        cost_density: e.breakdown.total(),
        battery_density: econ::decentralized_battery_density(e.r_b),
        avg_reg_capacity: if config.regulation {
            regulation::average_capacity_decentralized(e.r_b, params)
        } else {
            0.0
        },
        breakdown: e.breakdown,
        decision: None,
        stock: StockPlan {
            primary: 0.0,
            reorder_point: 0.0,
            decentral: e.r_b,
            nu: f64::INFINITY,
            eps_bs: calibration.eps_bs,
        },
    })
}

/// Metrics for one configuration. Decentralized configurations need the
/// calibration from [`calibrate_eps_bs`]; centralized ones ignore it.
pub fn run_configuration(
    config: Configuration,
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    calibration: Option<&Calibration>,
    search: &SearchSpec,
) -> Result<MetricsReport> {
    if config.is_centralized() {
        let model = CentralModel::new(params, profile, market, config.regulation)?;
        let opt = optimizer::optimize_model(&model, search)?;
        central_report(config, &opt, params, profile)
    } else {
        let cal = calibration.ok_or_else(|| {
            ModelError::Data("decentralized configurations need a calibrated eps_BS".into())
        })?;
        decentral_report(config, params, profile, market, cal)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// One report per requested configuration, in the requested order.
    pub reports: Vec<MetricsReport>,
    pub calibration: Calibration,
    /// Regulation-off centralized optimum used for calibration.
    pub reference: Optimum,
}

impl PipelineOutput {
    pub fn report(&self, config: Configuration) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.configuration == config)
    }
}

pub fn run_pipeline(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    configs: &[Configuration],
    spec: &PipelineSpec,
) -> Result<PipelineOutput> {
    let reference = optimizer::optimize_centralized(params, profile, None, false, &spec.search)?;
    let d = reference.decision();
    let calibration = calibrate_eps_bs(&d, &reference.evaluation.stock, params, profile, spec.mc_samples, spec.seed)?;
    let mut reports = Vec::with_capacity(configs.len());
    for c in configs {
        let r = if *c == Configuration::CENTRALIZED {
            central_report(*c, &reference, params, profile)?
        } else {
            run_configuration(*c, params, profile, market, Some(&calibration), &spec.search)?
        };
        reports.push(r);
    }
    Ok(PipelineOutput {
        reports,
        calibration,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Scales rho_s and per-station demand mean and variance.
    DemandScale,
    /// Scales lambda^C and lambda^S; charge times shrink accordingly.
    PowerMultiplier,
    /// Scales c_B and c_R.
    BatteryCostMultiplier,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::DemandScale => "demand_scale",
            SweepAxis::PowerMultiplier => "power_multiplier",
            SweepAxis::BatteryCostMultiplier => "battery_cost_multiplier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::DemandScale, Self::PowerMultiplier, Self::BatteryCostMultiplier]
            .into_iter()
            .find(|a| a.label() == s)
    }

    pub fn default_points(&self) -> Vec<f64> {
        match self {
            SweepAxis::DemandScale => (1..=10).map(f64::from).collect(),
            _ => (1..=10).map(|i| 0.5 * f64::from(i)).collect(),
        }
    }

    /// Model at one axis value.
    pub fn apply(&self, base: &ModelConfig, x: f64) -> ModelConfig {
        match self {
            SweepAxis::DemandScale => base.at_demand_scale(x),
            SweepAxis::PowerMultiplier => ModelConfig {
                params: base.params.with_power_multiplier(x),
                demand: base.demand.clone(),
            },
            SweepAxis::BatteryCostMultiplier => ModelConfig {
                params: base.params.with_battery_cost_multiplier(x),
                demand: base.demand.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub points: Vec<f64>,
    pub configurations: Vec<Configuration>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis) -> Self {
        SweepSpec {
            axis,
            points: axis.default_points(),
            configurations: Configuration::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(ModelError::param("points", "a sweep needs at least 2 points"));
        }
        if self.points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ModelError::param("points", "must be strictly increasing"));
        }
        if self.points.iter().any(|p| !(*p > 0.0)) {
            return Err(ModelError::param("points", "must be positive"));
        }
        if self.configurations.is_empty() {
            return Err(ModelError::param("configurations", "none selected"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub report: MetricsReport,
    pub calibration: Calibration,
}

/// Run the pipeline at every axis point (in parallel; each point is
/// deterministic given the seed).
pub fn sweep(
    spec: &SweepSpec,
    base: &ModelConfig,
    market: Option<&RegulationMarket>,
    pipeline: &PipelineSpec,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let per_point = spec
        .points
        .par_iter()
        .map(|x| {
            let cfg = spec.axis.apply(base, *x);
            cfg.validate()?;
            let out = run_pipeline(&cfg.params, &cfg.profile(), market, &spec.configurations, pipeline)?;
            Ok(out
                .reports
                .into_iter()
                .map(|report| SweepRow {
                    axis_value: *x,
                    report,
                    calibration: out.calibration,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub const METRICS: [&str; 3] = ["cost_density", "battery_density", "avg_reg_capacity"];

pub fn metric_value(r: &MetricsReport, metric: &str) -> Option<f64> {
    match metric {
        "cost_density" => Some(r.cost_density),
        "battery_density" => Some(r.battery_density),
        "avg_reg_capacity" => Some(r.avg_reg_capacity),
        _ => None,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format: one row per (axis value, configuration, metric) with the
/// cost decomposition repeated on each row.
pub fn write_sweep_csv<W: Write>(axis: SweepAxis, rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| ModelError::Data(e.to_string());
    w.write_record([
        "axis",
        "axis_value",
        "configuration",
        "metric",
        "value",
        "electricity",
        "station_depreciation",
        "battery_depreciation",
        "transport",
        "regulation_income",
        "rho_c",
        "Q",
        "eps_bs",
    ])
    .map_err(err)?;
    for row in rows {
        let r = &row.report;
        for m in METRICS {
            let b = &r.breakdown;
            w.write_record([
                axis.label().to_string(),
                row.axis_value.to_string(),
                r.configuration.label().to_string(),
                m.to_string(),
                metric_value(r, m).unwrap_or(f64::NAN).to_string(),
                b.electricity.to_string(),
                b.station_depreciation.to_string(),
                b.battery_depreciation.to_string(),
                b.transport.to_string(),
                b.regulation_income.to_string(),
                fmt_opt(r.decision.map(|d| d.rho_c)),
                fmt_opt(r.decision.map(|d| d.q)),
                row.calibration.eps_bs.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Min-max normalize each metric across configurations into [0, 1], where 1
/// is best: cost and battery density are inverted. A metric that is equal
/// for every configuration maps to 1.
pub fn normalize_radar(reports: &[MetricsReport]) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; reports.len()];
    for (k, m) in METRICS.iter().enumerate() {
        let vals: Vec<f64> = reports.iter().map(|r| metric_value(r, m).unwrap()).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, v) in vals.iter().enumerate() {
            out[i][k] = if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                1.0
            } else if k < 2 {
                (hi - v) / (hi - lo)
            } else {
                (v - lo) / (hi - lo)
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::baseline_profile;
    use crate::econ::CostBreakdown;

    fn plan(primary: f64, reorder_point: f64) -> StockPlan {
        StockPlan {
            primary,
            reorder_point,
            decentral: 0.0,
            nu: f64::INFINITY,
            eps_bs: 0.0,
        }
    }

    #[test]
    fn huge_stocks_give_zero() {
        let p = SystemParams::default();
        let c = calibrate_eps_bs(&Decision::new(0.01, 5.0), &plan(1e9, 1e9), &p, &baseline_profile(), 1000, 1).unwrap();
        assert_eq!(c.eps_bs, 0.0);
        assert_eq!(c.std_error, 0.0);
    }

    #[test]
    fn deterministic_demand_closed_form() {
        let p = SystemParams::default();
        let lambda = 0.5;
        let prof = DemandProfile::stationary(lambda, 0.0).unwrap();
        let d = Decision::new(0.01, 30.0);
        let c = calibrate_eps_bs(&d, &plan(0.0, 0.0), &p, &prof, 1000, 7).unwrap();
        let tt = geometry::travel_time(0.01, p.truck_speed);
        let delta = 2.0 * tt + p.charge_time;
        assert!((c.eps_bs - (delta * lambda + tt * lambda) / 30.0).abs() < 1e-12);
    }

    #[test]
    fn seed_reproducible() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let d = Decision::new(0.01, 5.0);
        let s = plan(1.0, 0.1);
        let a = calibrate_eps_bs(&d, &s, &p, &prof, 5000, 3).unwrap();
        let b = calibrate_eps_bs(&d, &s, &p, &prof, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert!(calibrate_eps_bs(&d, &s, &p, &prof, 1, 3).is_err());
    }

    fn report(cost: f64, batt: f64, cap: f64) -> MetricsReport {
        MetricsReport {
            configuration: Configuration::CENTRALIZED,
            cost_density: cost,
            battery_density: batt,
            avg_reg_capacity: cap,
            breakdown: CostBreakdown::default(),
            decision: None,
            stock: plan(0.0, 0.0),
        }
    }

    #[test]
    fn radar_conventions() {
        let rs = vec![
            report(10.0, 5.0, 0.0),
            report(20.0, 5.0, 100.0),
            report(15.0, 5.0, 50.0),
            report(12.0, 5.0, 10.0),
        ];
        let n = normalize_radar(&rs);
        assert_eq!(n[0][0], 1.0);
        assert_eq!(n[1][0], 0.0);
        assert_eq!(n[2][0], 0.5);
        assert!(n.iter().all(|row| row[1] == 1.0));
        assert_eq!(n[1][2], 1.0);
        assert_eq!(n[0][2], 0.0);
        assert!(n.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn sweep_spec_validation() {
        let mut s = SweepSpec::new(SweepAxis::DemandScale);
        assert_eq!(s.points.len(), 10);
        s.validate().unwrap();
        s.points = vec![1.0];
        assert!(s.validate().is_err());
        s.points = vec![2.0, 1.0];
        assert!(s.validate().is_err());
        assert_eq!(SweepAxis::parse("power_multiplier"), Some(SweepAxis::PowerMultiplier));
    }

    #[test]
    fn decentralized_needs_calibration() {
        let p = SystemParams::default();
        let r = run_configuration(Configuration::DECENTRALIZED, &p, &baseline_profile(), None, None, &SearchSpec::default());
        assert!(r.is_err());
    }
}
