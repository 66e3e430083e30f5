use std::path::{Path, PathBuf};

use swapgrid::config::to_toml;
use swapgrid::market::{self, SAMPLE_AGC_CSV, SAMPLE_PRICES_CSV};
use swapgrid::optimizer::{self, SearchSpec, SurfaceSpec};
use swapgrid::regulation::{self, AgcTrace};
use swapgrid::scenarios::{self, PipelineSpec, SweepAxis, SweepSpec, METRICS};
use swapgrid::{inventory, load_params, Configuration, Decision, MetricsReport, ModelConfig, RegulationMarket};
use swapgrid_sim::{DemandMode, DemandProcess, SimConfig};

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::svg::{line_chart, Series};
use crate::{
    ArchitectureArg, AxisArg, CalibrationArgs, CliError, DemandArg, EtaArgs, ModelInputs, OptimizeArgs, ProcessArg,
    ReportArgs, Result, SimulateArgs, SweepArgs,
};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(out: &Path, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    let p = out.join(name);
    std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    files.push(p);
    Ok(())
}

fn load_config(path: Option<&Path>, manifest: &mut Vec<(String, String, Vec<u8>)>) -> Result<ModelConfig> {
    match path {
        Some(p) => {
            let text = read(p)?;
            let cfg = load_params(&text)?;
            manifest.push(("config".into(), p.display().to_string(), text.into_bytes()));
            Ok(cfg)
        }
        None => Ok(ModelConfig::default()),
    }
}

/// Market data for regulation configurations: both files, or neither for
/// the bundled sample day.
fn load_market(
    inputs: &ModelInputs,
    theta: f64,
    needed: bool,
    manifest: &mut Vec<(String, String, Vec<u8>)>,
) -> Result<Option<RegulationMarket>> {
    if !needed {
        return Ok(None);
    }
    let (agc, prices, agc_name, price_name) = match (&inputs.agc, &inputs.prices) {
        (Some(a), Some(p)) => (read(a)?, read(p)?, a.display().to_string(), p.display().to_string()),
        (None, None) => (
            SAMPLE_AGC_CSV.to_string(),
            SAMPLE_PRICES_CSV.to_string(),
            "bundled:sample_agc.csv".to_string(),
            "bundled:sample_prices.csv".to_string(),
        ),
        (Some(_), None) => {
            return Err(CliError::MissingInput(
                "regulation is on but no clearing-price file was given (--prices)".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(CliError::MissingInput(
                "regulation is on but no AGC trace file was given (--agc)".into(),
            ))
        }
    };
    let m = market::load_market(&agc, &prices, theta)?;
    manifest.push(("agc".into(), agc_name, agc.into_bytes()));
    manifest.push(("prices".into(), price_name, prices.into_bytes()));
    Ok(Some(m))
}

fn parse_configurations(names: &[String]) -> Result<Vec<Configuration>> {
    if names.is_empty() {
        return Ok(Configuration::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let c = Configuration::parse(n.trim()).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown configuration '{n}' (expected one of decentralized, centralized, decentralized_fr, centralized_fr)"
            ))
        })?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

fn pipeline_spec(c: &CalibrationArgs) -> PipelineSpec {
    PipelineSpec {
        search: SearchSpec::default(),
        mc_samples: c.mc_samples,
        seed: c.seed,
    }
}

/// Write the manifest before anything else; returns its path.
fn start(
    command: &str,
    args: Vec<String>,
    cfg: &ModelConfig,
    out: &Path,
    seed: Option<u64>,
    inputs: Vec<(String, String, Vec<u8>)>,
) -> Result<Vec<PathBuf>> {
    let toml = to_toml(cfg);
    let mut m = RunManifest::new(command, args, &toml, out);
    m.seed = seed;
    for (role, path, bytes) in &inputs {
        m.input(role, path, bytes);
    }
    m.write(out, &toml)?;
    Ok(vec![out.join(MANIFEST_FILE), out.join("params.toml")])
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn eta(a: &EtaArgs, args: Vec<String>) -> Result<Vec<PathBuf>> {
    let (text, name) = match &a.agc {
        Some(p) => (read(p)?, p.display().to_string()),
        None => (SAMPLE_AGC_CSV.to_string(), "bundled:sample_agc.csv".to_string()),
    };
    let traces = market::parse_agc_csv(&text)?;
    if !(a.theta > 0.0 && a.theta <= 1.0) {
        return Err(CliError::Usage(format!("--theta must be in (0, 1], got {}", a.theta)));
    }
    let cfg = ModelConfig::default();
    let mut files = start("eta", args, &cfg, &a.out, None, vec![("agc".into(), name, text.into_bytes())])?;
    let rows: Vec<Vec<String>> = traces
        .iter()
        .map(|t: &AgcTrace| -> Result<Vec<String>> {
            Ok(vec![
                t.period.to_string(),
                t.samples().len().to_string(),
                regulation::requested_mileage(t).to_string(),
                regulation::eta_z(t, a.theta)?.to_string(),
            ])
        })
        .collect::<Result<_>>()?;
    let bytes = csv_bytes(&["period", "samples", "requested_mileage", "eta"], &rows)?;
    write(&a.out, "eta.csv", &bytes, &mut files)?;
    let pts = rows
        .iter()
        .map(|r| (r[0].parse().unwrap_or(f64::NAN), r[3].parse().unwrap_or(f64::NAN)))
        .collect();
    let chart = line_chart(
        &format!("Minimum availability per period (theta = {})", a.theta),
        "period z (h)",
        "eta_z (fraction of bid capacity)",
        &[Series { name: "eta_z".into(), points: pts }],
    );
    write(&a.out, "eta.svg", chart.as_bytes(), &mut files)?;
    Ok(files)
}

const REPORT_HEADER: [&str; 19] = [
    "configuration",
    "cost_density",
    "battery_density",
    "avg_reg_capacity",
    "electricity",
    "station_depreciation",
    "battery_depreciation",
    "transport",
    "regulation_income",
    "rho_c",
    "Q",
    "Q_rounded",
    "rounded_cost_density",
    "primary_stock_R",
    "reorder_point_r",
    "decentral_stock_rB",
    "eps_bs",
    "eps_bs_std_error",
    "nu",
];

fn report_row(r: &MetricsReport, rounded: Option<(f64, f64)>, cal: &scenarios::Calibration) -> Vec<String> {
    let b = &r.breakdown;
    vec![
        r.configuration.label().to_string(),
        r.cost_density.to_string(),
        r.battery_density.to_string(),
        r.avg_reg_capacity.to_string(),
        b.electricity.to_string(),
        b.station_depreciation.to_string(),
        b.battery_depreciation.to_string(),
        b.transport.to_string(),
        b.regulation_income.to_string(),
        opt(r.decision.map(|d| d.rho_c)),
        opt(r.decision.map(|d| d.q)),
        opt(rounded.map(|x| x.0)),
        opt(rounded.map(|x| x.1)),
        r.stock.primary.to_string(),
        r.stock.reorder_point.to_string(),
        r.stock.decentral.to_string(),
        cal.eps_bs.to_string(),
        cal.std_error.to_string(),
        r.stock.nu.to_string(),
    ]
}

struct Solved {
    cfg: ModelConfig,
    files: Vec<PathBuf>,
    market: Option<RegulationMarket>,
    out: scenarios::PipelineOutput,
}

fn solve(
    command: &str,
    inputs: &ModelInputs,
    cal: &CalibrationArgs,
    configs: &[Configuration],
    scale: f64,
    args: Vec<String>,
) -> Result<Solved> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Usage(format!("--demand-scale must be positive, got {scale}")));
    }
    let mut used = Vec::new();
    let cfg = load_config(inputs.config.as_deref(), &mut used)?.at_demand_scale(scale);
    cfg.validate()?;
    let needs = configs.iter().any(|c| c.regulation);
    let market = load_market(inputs, cfg.params.theta, needs, &mut used)?;
    let files = start(command, args, &cfg, &inputs.out, Some(cal.seed), used)?;
    let out = scenarios::run_pipeline(&cfg.params, &cfg.profile(), market.as_ref(), configs, &pipeline_spec(cal))?;
    Ok(Solved { cfg, files, market, out })
}

pub fn optimize(a: &OptimizeArgs, args: Vec<String>) -> Result<Vec<PathBuf>> {
    let configs = parse_configurations(&a.configurations)?;
    let Solved { cfg, mut files, market, out } = solve("optimize", &a.inputs, &a.calibration, &configs, a.demand_scale, args)?;
    let profile = cfg.profile();
    let mut rows = Vec::new();
    for r in &out.reports {
        let rounded = if r.configuration.is_centralized() {
            let o = if r.configuration.regulation {
                optimizer::optimize_centralized(&cfg.params, &profile, market.as_ref(), true, &SearchSpec::default())?
            } else {
                out.reference.clone()
            };
            Some((o.rounded.q, o.rounded_objective))
        } else {
            None
        };
        rows.push(report_row(r, rounded, &out.calibration));
    }
    write(&a.inputs.out, "solution.csv", &csv_bytes(&REPORT_HEADER, &rows)?, &mut files)?;
    Ok(files)
}

fn axis(a: AxisArg) -> SweepAxis {
    match a {
        AxisArg::DemandScale => SweepAxis::DemandScale,
        AxisArg::PowerMultiplier => SweepAxis::PowerMultiplier,
        AxisArg::BatteryCostMultiplier => SweepAxis::BatteryCostMultiplier,
    }
}

fn axis_label(a: SweepAxis) -> &'static str {
    match a {
        SweepAxis::DemandScale => "demand scale s (x baseline stations and per-station demand)",
        SweepAxis::PowerMultiplier => "charging power multiplier (x 41 kW / 7 kW)",
        SweepAxis::BatteryCostMultiplier => "battery cost multiplier (x c_B, c_R in $/h)",
    }
}

fn metric_label(m: &str) -> &'static str {
    match m {
        "cost_density" => "cost density ($ day^-1 km^-2)",
        "battery_density" => "battery density (batteries km^-2)",
        _ => "average regulation capacity (kW km^-2)",
    }
}

pub fn sweep(a: &SweepArgs, args: Vec<String>) -> Result<Vec<PathBuf>> {
    let configs = parse_configurations(&a.configurations)?;
    let ax = axis(a.axis);
    let spec = SweepSpec {
        axis: ax,
        points: if a.points.is_empty() { ax.default_points() } else { a.points.clone() },
        configurations: configs.clone(),
    };
    spec.validate()?;
    let mut used = Vec::new();
    let base = load_config(a.inputs.config.as_deref(), &mut used)?;
    base.validate()?;
    let market = load_market(&a.inputs, base.params.theta, configs.iter().any(|c| c.regulation), &mut used)?;
    let mut files = start("sweep", args, &base, &a.inputs.out, Some(a.calibration.seed), used)?;
    let rows = scenarios::sweep(&spec, &base, market.as_ref(), &pipeline_spec(&a.calibration))?;
    let mut buf = Vec::new();
    scenarios::write_sweep_csv(ax, &rows, &mut buf)?;
    write(&a.inputs.out, "sweep.csv", &buf, &mut files)?;
    for m in METRICS {
        let series: Vec<Series> = configs
            .iter()
            .map(|c| Series {
                name: c.label().to_string(),
                points: rows
                    .iter()
                    .filter(|r| r.report.configuration == *c)
                    .map(|r| (r.axis_value, scenarios::metric_value(&r.report, m).unwrap_or(f64::NAN)))
                    .collect(),
            })
            .collect();
        let svg = line_chart(metric_label(m), axis_label(ax), metric_label(m), &series);
        write(&a.inputs.out, &format!("sweep_{m}.svg"), svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}

pub fn simulate(a: &SimulateArgs, args: Vec<String>) -> Result<Vec<PathBuf>> {
    let mut used = Vec::new();
    let cfg = load_config(a.config.as_deref(), &mut used)?.at_demand_scale(a.demand_scale);
    cfg.validate()?;
    let p = &cfg.params;
    let profile = cfg.profile();
    let sim = SimConfig {
        horizon: a.horizon,
        warmup: a.warmup,
        seed: a.seed,
        steps_per_lead: a.steps_per_lead,
        demand: match a.demand {
            DemandArg::TimeVarying => DemandMode::TimeVarying,
            DemandArg::Stationary => DemandMode::Stationary,
        },
        process: match a.process {
            ProcessArg::Normal => DemandProcess::Normal,
            ProcessArg::CompoundPoisson => DemandProcess::CompoundPoisson,
        },
        batches: a.batches,
        area: a.area,
    };
    sim.validate()?;
    let mut files = start("simulate", args, &cfg, &a.out, Some(a.seed), used)?;
    let reference = || optimizer::optimize_centralized(p, &profile, None, false, &SearchSpec::default());
    let stats = match a.architecture {
        ArchitectureArg::Centralized => {
            let d = match (a.rho_c, a.q) {
                (Some(r), Some(q)) => Decision::new(r, q),
                (None, None) => reference()?.decision(),
                (r, q) => {
                    let o = reference()?.decision();
                    Decision::new(r.unwrap_or(o.rho_c), q.unwrap_or(o.q))
                }
            };
            d.validate(p)?;
            let d = swapgrid_sim::snap_decision(&d, p);
            let stock = swapgrid_sim::formula_stock(&d, p, &profile)?;
            swapgrid_sim::simulate_centralized(&d, &stock, p, &profile, &sim)?
        }
        ArchitectureArg::Decentralized => {
            let r_b = match (a.r_b, a.eps_bs) {
                (Some(r), _) => r,
                (None, Some(e)) => inventory::decentralized_stock_rb(p, &profile, e)?,
                (None, None) => {
                    let o = reference()?;
                    let spec = PipelineSpec::default();
                    let c = scenarios::calibrate_eps_bs(
                        &o.decision(),
                        &o.evaluation.stock,
                        p,
                        &profile,
                        spec.mc_samples,
                        spec.seed,
                    )?;
                    inventory::decentralized_stock_rb(p, &profile, c.usable())?
                }
            };
            swapgrid_sim::simulate_decentralized(r_b, p, &profile, &sim)?
        }
    };
    let mut buf = Vec::new();
    swapgrid_sim::write_stats_csv(&stats, &mut buf)?;
    write(&a.out, "simulation.csv", &buf, &mut files)?;
    Ok(files)
}

pub fn report(a: &ReportArgs, args: Vec<String>) -> Result<Vec<PathBuf>> {
    let Solved { cfg, mut files, market, out } =
        solve("report", &a.inputs, &a.calibration, &Configuration::ALL, a.demand_scale, args)?;
    let rows: Vec<Vec<String>> = out.reports.iter().map(|r| report_row(r, None, &out.calibration)).collect();
    write(&a.inputs.out, "metrics.csv", &csv_bytes(&REPORT_HEADER, &rows)?, &mut files)?;

    let radar = scenarios::normalize_radar(&out.reports);
    let rows: Vec<Vec<String>> = out
        .reports
        .iter()
        .zip(&radar)
        .map(|(r, v)| {
            let mut row = vec![r.configuration.label().to_string()];
            row.extend(v.iter().map(|x| x.to_string()));
            row
        })
        .collect();
    let bytes = csv_bytes(&["configuration", "cost_score", "battery_score", "capacity_score"], &rows)?;
    write(&a.inputs.out, "radar.csv", &bytes, &mut files)?;

    let profile = cfg.profile();
    for (reg, name) in [(false, "surface_regulation_off"), (true, "surface_regulation_on")] {
        let s = optimizer::sensitivity_surface(&cfg.params, &profile, market.as_ref(), reg, &SurfaceSpec::default())?;
        let mut buf = Vec::new();
        s.write_csv(&mut buf)?;
        write(&a.inputs.out, &format!("{name}.csv"), &buf, &mut files)?;
        let (i, j) = s.opt_index;
        let q_cut = Series {
            name: "vary Q".into(),
            points: s.q.iter().zip(&s.cost[i]).map(|(q, c)| (q / s.q[j], *c)).collect(),
        };
        let rho_cut = Series {
            name: "vary rho_c".into(),
            points: s.rho_c.iter().zip(s.cost.iter().map(|row| row[j])).map(|(r, c)| (r / s.rho_c[i], c)).collect(),
        };
        let title = format!("Cost near the optimum, regulation {}", if reg { "on" } else { "off" });
        let svg = line_chart(&title, "decision / optimal decision (-)", "cost density ($ day^-1 km^-2)", &[q_cut, rho_cut]);
        write(&a.inputs.out, &format!("{name}.svg"), svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}
