//! Two-dimensional search over (rho_c, Q) for the centralized design, the
//! decentralized stock choice under regulation, and sensitivity surfaces.
//!
//! Joint quasi-convexity is only an empirical observation, so the search
//! starts from a coarse global grid and refines by alternating golden-section
//! line searches. The Q line search splits its bracket at the deficit-variance
//! breakpoint nu, where the objective has a kink.

use std::io::Write;

use rayon::prelude::*;

use crate::demand::DemandProfile;
use crate::econ::{decentralized_income_slope, CentralEvaluation, CentralModel};
use crate::error::{ModelError, Result};
use crate::inventory::{self, PhiPieces};
use crate::model::Decision;
use crate::params::{SystemParams, HOURS_PER_DAY};
use crate::regulation::RegulationMarket;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub rho_c_min: f64,
    /// Upper bound on rho_c; `None` means rho_s.
    pub rho_c_max: Option<f64>,
    /// Coarse grid points in rho_c (log-spaced).
    pub grid_rho: usize,
    /// Coarse grid points in Q (linear).
    pub grid_q: usize,
    /// Points scanned per line search before golden-section refinement.
    pub line_scan: usize,
    /// Stop when a sweep improves the objective by less than this (relative).
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            rho_c_min: 1e-5,
            rho_c_max: None,
            grid_rho: 48,
            grid_q: 30,
            line_scan: 40,
            tolerance: 1e-4,
            max_sweeps: 50,
        }
    }
}

impl SearchSpec {
    pub fn validate(&self, params: &SystemParams) -> Result<(f64, f64)> {
        let hi = self.rho_c_max.unwrap_or(params.rho_s).min(params.rho_s);
        if !(self.rho_c_min > 0.0 && self.rho_c_min < hi) {
            return Err(ModelError::param("rho_c_min", "search range for rho_c is empty"));
        }
        if self.grid_rho < 2 || self.grid_q < 2 || self.line_scan < 3 {
            return Err(ModelError::param("grid", "needs at least 2 points per axis"));
        }
        if !(self.tolerance > 0.0) {
            return Err(ModelError::param("tolerance", "must be positive"));
        }
        Ok((self.rho_c_min, hi))
    }
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub evaluation: CentralEvaluation,
    pub objective: f64,
    /// Q rounded to the nearest feasible integer.
    pub rounded: Decision,
    pub rounded_objective: f64,
    /// rounded_objective - objective.
    pub rounded_gap: f64,
    /// Smallest objective seen on the coarse grid.
    pub grid_min: f64,
    pub evaluations: usize,
}

impl Optimum {
    pub fn decision(&self) -> Decision {
        self.evaluation.decision
    }
}

struct Counter<'m, 'a> {
    model: &'m CentralModel<'a>,
    n: usize,
}

impl Counter<'_, '_> {
    fn f(&mut self, rho_c: f64, q: f64) -> f64 {
        self.n += 1;
        self.model.objective(rho_c, q)
    }
}

fn golden(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimize over [lo, hi]: scan, then golden-section inside the best
/// bracket, split at any `kinks` that fall inside it.
fn line_min(mut f: impl FnMut(f64) -> f64, pts: &[f64], kinks: &[f64]) -> (f64, f64) {
    let vals: Vec<f64> = pts.iter().map(|x| f(*x)).collect();
    let (i, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let mut best = (pts[i], vals[i]);
    let a = pts[i.saturating_sub(1)];
    let b = pts[(i + 1).min(pts.len() - 1)];
    let mut cuts = vec![a];
    cuts.extend(kinks.iter().copied().filter(|k| *k > a && *k < b));
    cuts.push(b);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            for x in [w[0], w[1]] {
                let v = f(x);
                if v < best.1 {
                    best = (x, v);
                }
            }
            let (x, v) = golden(&mut f, w[0], w[1]);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// Minimize the centralized cost density over (rho_c, Q).
pub fn optimize_centralized(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    regulation_on: bool,
    spec: &SearchSpec,
) -> Result<Optimum> {
    let model = CentralModel::new(params, profile, market, regulation_on)?;
    optimize_model(&model, spec)
}

pub fn optimize_model(model: &CentralModel<'_>, spec: &SearchSpec) -> Result<Optimum> {
    let params = model.params();
    let (rlo, rhi) = spec.validate(params)?;
    let rho_grid = log_space(rlo, rhi, spec.grid_rho);
    let q_grid = lin_space(1.0, params.q_cap, spec.grid_q);

    let grid: Vec<(f64, f64, f64)> = rho_grid
        .par_iter()
        .flat_map_iter(|r| q_grid.iter().map(move |q| (*r, *q, model.objective(*r, *q))))
        .collect();
    let (mut rho, mut q, grid_min) = grid
        .iter()
        .copied()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("non-empty grid");
    if !grid_min.is_finite() {
        return Err(ModelError::Infeasible(
            "every grid point violates the in-transit probability bound T^T*mu_z <= rho_s*Q".into(),
        ));
    }

    let mut ctr = Counter {
        model,
        n: grid.len(),
    };
    let mut best = grid_min;
    let rho_scan = log_space(rlo, rhi, spec.line_scan);
    let q_scan = lin_space(1.0, params.q_cap, spec.line_scan);
    for sweep in 0..spec.max_sweeps {
        let before = best;
        // rho_c in log coordinates.
        let log_scan: Vec<f64> = rho_scan.iter().map(|r| r.ln()).collect();
        let (x, v) = line_min(|x| ctr.f(x.exp().clamp(rlo, rhi), q), &log_scan, &[]);
        if v < best {
            rho = x.exp().clamp(rlo, rhi);
            best = v;
        }
        if params.q_cap > 1.0 {
            let nu = PhiPieces::for_density(rho, params, model.profile()).nu;
            let (x, v) = line_min(|x| ctr.f(rho, x), &q_scan, &[nu]);
            if v < best {
                q = x;
                best = v;
            }
        }
        if sweep >= 1 && before - best <= spec.tolerance * best.abs().max(1e-12) {
            break;
        }
    }
    debug_assert!(best <= grid_min);

    let evaluation = model.evaluate_unchecked(rho, q)?;
    let objective = evaluation.breakdown.total();
    let (rounded, rounded_objective) = round_q(model, rho, q, &mut ctr)?;
    Ok(Optimum {
        evaluation,
        objective,
        rounded,
        rounded_gap: rounded_objective - objective,
        rounded_objective,
        grid_min,
        evaluations: ctr.n,
    })
}

fn round_q(model: &CentralModel<'_>, rho: f64, q: f64, ctr: &mut Counter<'_, '_>) -> Result<(Decision, f64)> {
    let cap = model.params().q_cap.floor().max(1.0);
    let near = q.round().clamp(1.0, cap);
    let far = if near >= q { q.floor() } else { q.ceil() }.clamp(1.0, cap);
    for cand in [near, far] {
        let v = ctr.f(rho, cand);
        if v.is_finite() {
            return Ok((Decision::new(rho, cand), v));
        }
    }
    Err(ModelError::Infeasible(format!("no feasible integer Q near {q:.3}")))
}

/// Decentralized spare stock: the service-level minimum, or with
/// regulation whichever end of [r^B_min, r_B_cap] the linear profit favours.
pub fn choose_decentralized_stock(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    regulation_on: bool,
    eps_bs: f64,
) -> Result<f64> {
    let min = inventory::decentralized_stock_rb(params, profile, eps_bs)?;
    if !regulation_on {
        return Ok(min);
    }
    let market = market.ok_or_else(|| {
        ModelError::Data("regulation requires AGC and clearing-price data".into())
    })?;
    let cap = params.decentral_cap.resolve(min);
    if cap < min {
        return Err(ModelError::param("r_B_cap", format!("{cap} is below the minimum {min}")));
    }
    let slope = decentralized_income_slope(params, market);
    Ok(if slope > HOURS_PER_DAY * params.cost_battery_regulation {
        cap
    } else {
        min
    })
}

/// Multiplicative offsets from the optimum at which the surface is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub rho_factors: Vec<f64>,
    pub q_factors: Vec<f64>,
    pub search: SearchSpec,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            rho_factors: log_space(0.25, 4.0, 25),
            q_factors: lin_space(0.5, 1.5, 21),
            search: SearchSpec::default(),
        }
    }
}

fn with_unit(mut v: Vec<f64>) -> Vec<f64> {
    if !v.iter().any(|f| (*f - 1.0).abs() < 1e-12) {
        v.push(1.0);
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v.iter_mut().for_each(|f| {
        if (*f - 1.0).abs() < 1e-12 {
            *f = 1.0
        }
    });
    v
}

/// Cost density over a grid around the optimum. Points outside the
/// decision domain hold NaN.
#[derive(Debug, Clone)]
pub struct Surface {
    pub rho_c: Vec<f64>,
    pub q: Vec<f64>,
    /// `cost[i][j]` at (rho_c[i], q[j]).
    pub cost: Vec<Vec<f64>>,
    pub optimum: Optimum,
    pub opt_index: (usize, usize),
}

impl Surface {
    fn opt_cost(&self) -> f64 {
        self.cost[self.opt_index.0][self.opt_index.1]
    }

    /// Largest relative deviation along Q (rho_c at optimum) for factors in [lo, hi].
    pub fn max_deviation_q(&self, lo: f64, hi: f64) -> f64 {
        let (i, _) = self.opt_index;
        let q0 = self.optimum.decision().q;
        let c0 = self.opt_cost();
        self.q
            .iter()
            .zip(&self.cost[i])
            .filter(|(q, c)| c.is_finite() && **q >= lo * q0 * (1.0 - 1e-12) && **q <= hi * q0 * (1.0 + 1e-12))
            .map(|(_, c)| ((c - c0) / c0.abs()).abs())
            .fold(0.0, f64::max)
    }

    /// Largest relative deviation along rho_c (Q at optimum).
    pub fn max_deviation_rho(&self, lo: f64, hi: f64) -> f64 {
        let (_, j) = self.opt_index;
        let r0 = self.optimum.decision().rho_c;
        let c0 = self.opt_cost();
        self.rho_c
            .iter()
            .zip(self.cost.iter().map(|row| row[j]))
            .filter(|(r, c)| c.is_finite() && **r >= lo * r0 * (1.0 - 1e-12) && **r <= hi * r0 * (1.0 + 1e-12))
            .map(|(_, c)| ((c - c0) / c0.abs()).abs())
            .fold(0.0, f64::max)
    }

    /// Long-format CSV: rho_c,Q,cost_density,is_optimum.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ModelError::Data(e.to_string());
        w.write_record(["rho_c", "Q", "cost_density", "is_optimum"]).map_err(io)?;
        for (i, r) in self.rho_c.iter().enumerate() {
            for (j, q) in self.q.iter().enumerate() {
                let c = self.cost[i][j];
                w.write_record([
                    r.to_string(),
                    q.to_string(),
                    if c.is_finite() { c.to_string() } else { String::new() },
                    ((i, j) == self.opt_index).to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sensitivity_surface(
    params: &SystemParams,
    profile: &DemandProfile,
    market: Option<&RegulationMarket>,
    regulation_on: bool,
    spec: &SurfaceSpec,
) -> Result<Surface> {
    let model = CentralModel::new(params, profile, market, regulation_on)?;
    let optimum = optimize_model(&model, &spec.search)?;
    let d = optimum.decision();
    let rf = with_unit(spec.rho_factors.clone());
    let qf = with_unit(spec.q_factors.clone());
    let rho_c: Vec<f64> = rf.iter().map(|f| f * d.rho_c).collect();
    let q: Vec<f64> = qf.iter().map(|f| f * d.q).collect();
    let cost = rho_c
        .par_iter()
        .map(|r| {
            q.iter()
                .map(|qq| {
                    if Decision::new(*r, *qq).validate(params).is_ok() {
                        model.objective(*r, *qq)
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();
    let opt_index = (
        rf.iter().position(|f| *f == 1.0).expect("unit factor"),
        qf.iter().position(|f| *f == 1.0).expect("unit factor"),
    );
    Ok(Surface {
        rho_c,
        q,
        cost,
        optimum,
        opt_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::demand::baseline_profile;
    use crate::market::sample_market;

    fn brute(model: &CentralModel<'_>, n: usize) -> f64 {
        let p = model.params();
        let rs = log_space(1e-5, p.rho_s, n);
        let qs = lin_space(1.0, p.q_cap, n);
        rs.iter()
            .flat_map(|r| qs.iter().map(move |q| model.objective(*r, *q)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_min_respects_kink() {
        let f = |x: f64| if x < 2.0 { 4.0 - x } else { 2.0 + 3.0 * (x - 2.0) };
        let pts = lin_space(0.0, 10.0, 6);
        let (x, v) = line_min(f, &pts, &[2.0]);
        assert!((x - 2.0).abs() < 1e-9 && (v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn baseline_scale_five_matches_brute_force() {
        let cfg = ModelConfig::default().at_demand_scale(5.0);
        let prof = cfg.profile();
        let model = CentralModel::new(&cfg.params, &prof, None, false).unwrap();
        let opt = optimize_model(&model, &SearchSpec::default()).unwrap();
        let b = brute(&model, 200);
        assert!(opt.objective <= b * (1.0 + 1e-3), "{} vs {}", opt.objective, b);
        assert!(opt.objective <= opt.grid_min);
        assert!(opt.rounded_gap >= -1e-12);
        assert_eq!(opt.rounded.q, opt.rounded.q.round());
    }

    #[test]
    fn zero_demand_goes_to_corner() {
        let p = SystemParams::default();
        let prof = DemandProfile::new(vec![vec![0.0, 1.0]], vec![vec![0.0, 0.0]], vec![0.0]).unwrap();
        let opt = optimize_centralized(&p, &prof, None, false, &SearchSpec::default()).unwrap();
        let d = opt.decision();
        assert!(d.rho_c < 1.0001e-5, "{d:?}");
        assert!(d.q < 1.0 + 1e-6, "{d:?}");
    }

    #[test]
    fn regulation_raises_q() {
        let cfg = ModelConfig::default().at_demand_scale(5.0);
        let prof = cfg.profile();
        let m = sample_market(cfg.params.theta);
        let off = optimize_centralized(&cfg.params, &prof, Some(&m), false, &SearchSpec::default()).unwrap();
        let on = optimize_centralized(&cfg.params, &prof, Some(&m), true, &SearchSpec::default()).unwrap();
        assert!(on.decision().q >= off.decision().q - 1e-9);
        assert!(on.objective < off.objective);
    }

    #[test]
    fn infeasible_region_is_reported() {
        // Slow trucks make T^T*mu_z exceed rho_s*Q at every grid point.
        let p = SystemParams {
            truck_speed: 0.01,
            q_cap: 2.0,
            ..SystemParams::default()
        };
        let prof = baseline_profile();
        let m = sample_market(0.75);
        let r = optimize_centralized(&p, &prof, Some(&m), true, &SearchSpec::default());
        assert!(matches!(r, Err(ModelError::Infeasible(_))), "{r:?}");
    }

    #[test]
    fn decentralized_choice_endpoints() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let m = sample_market(0.75);
        let min = choose_decentralized_stock(&p, &prof, Some(&m), false, 0.03).unwrap();
        let on = choose_decentralized_stock(&p, &prof, Some(&m), true, 0.03).unwrap();
        let slope = decentralized_income_slope(&p, &m);
        if slope > 24.0 * p.cost_battery_regulation {
            assert_eq!(on, 2.0 * min);
        } else {
            assert_eq!(on, min);
        }
        let cheap = m.clone();
        let dear = SystemParams {
            cost_battery_regulation: slope / 24.0 * 2.0,
            ..p.clone()
        };
        assert_eq!(choose_decentralized_stock(&dear, &prof, Some(&cheap), true, 0.03).unwrap(), min);
        let rich = SystemParams {
            cost_battery_regulation: slope / 24.0 * 0.5,
            cost_battery: slope / 24.0 * 0.25,
            ..p
        };
        assert_eq!(choose_decentralized_stock(&rich, &prof, Some(&m), true, 0.03).unwrap(), 2.0 * min);
    }

    #[test]
    fn surface_optimum_cell_matches() {
        let cfg = ModelConfig::default();
        let prof = cfg.profile();
        let s = sensitivity_surface(&cfg.params, &prof, None, false, &SurfaceSpec::default()).unwrap();
        let (i, j) = s.opt_index;
        assert!((s.cost[i][j] - s.optimum.objective).abs() <= 1e-9 * s.optimum.objective);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + s.rho_c.len() * s.q.len());
        assert_eq!(text.matches(",true").count(), 1);
    }
}
