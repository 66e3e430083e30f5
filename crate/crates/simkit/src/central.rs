use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use swapgrid::{inventory, Decision, DemandProfile, StockPlan, SystemParams};

use crate::demand::DemandSampler;
use crate::geometry::diamond_mean_distance;
use crate::stats::{BatchAcc, Estimate};
use crate::{snap_decision, stations_per_district, DemandMode, Result, SimConfig, SimError, SimStats};

const QUADRATURE_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceForm {
    /// T^T mu_z (Q - T^T mu_z).
    Stated,
    /// T^T mu_z (rho_s Q - T^T mu_z).
    Consistent,
    /// rho_c T^T mu_z (Q - T^T mu_z / rho_s): one independent two-point
    /// variable per swapping station.
    Independent,
}

/// Empirical in-transit density moments for one period, next to the
/// closed-form candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InTransitMoments {
    pub period: usize,
    pub mean: Estimate,
    pub var: Estimate,
    pub expected_mean: f64,
    pub stated_var: f64,
    pub consistent_var: f64,
    /// Variance if each station's truck is an independent two-point variable.
    pub independent_var: f64,
}

#[derive(Debug, Clone, Copy)]
struct Station {
    charged: f64,
    depleted: f64,
    /// (arrival step, order step, demand since order)
    order: Option<(u64, u64, f64)>,
}

struct District {
    stations: Vec<Station>,
    deficit: f64,
    /// (step at which the batch is charged, amount), FIFO.
    returns: VecDeque<(u64, f64)>,
}

/// Pick the step count per trip (>= `min`) that puts the charge time
/// closest to a whole number of steps.
fn choose_steps(travel: f64, charge: f64, min: usize) -> (usize, usize) {
    (min..=4 * min)
        .map(|k| {
            let x = charge / (travel / k as f64);
            (k, x.round().max(1.0) as usize, (x - x.round()).abs())
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(k, c, _)| (k, c))
        .expect("non-empty range")
}

/// Simulate centralized operation with stock levels `stock` (densities).
///
/// `decision.rho_c` is snapped to rho_s / n for a whole number n of swapping
/// stations per district; the stocks are used as given.
pub fn simulate_centralized(
    decision: &Decision,
    stock: &StockPlan,
    params: &SystemParams,
    profile: &DemandProfile,
    cfg: &SimConfig,
) -> Result<SimStats> {
    cfg.validate()?;
    params.validate()?;
    decision.validate(params)?;
    let n = stations_per_district(decision.rho_c, params.rho_s);
    let rho_c = params.rho_s / n as f64;
    let districts = ((cfg.area * rho_c).round() as usize).max(1);
    let travel = diamond_mean_distance(rho_c, QUADRATURE_POINTS) / params.truck_speed;
    if !(travel > 0.0 && travel.is_finite()) {
        return Err(SimError::Geometry(format!("travel time {travel} h")));
    }
    let (lead, charge) = choose_steps(travel, params.central_charge_time(), cfg.steps_per_lead);
    let dt = travel / lead as f64;
    let (lead, charge) = (lead as u64, charge as u64);

    let q = decision.q;
    let r_i = stock.reorder_point / params.rho_s;
    let r_cs = stock.primary / rho_c;
    let sampler = DemandSampler::new(params, profile, cfg.demand, cfg.process, dt);
    let periods = profile.periods();

    let warm_steps = (cfg.warmup / dt).floor() as u64;
    let total_steps = ((cfg.warmup + cfg.horizon) / dt).ceil() as u64;
    let measured = (total_steps - warm_steps).max(1);
    let nb = cfg.batches;
    let batch_of = |k: u64| (((k - warm_steps) as u128 * nb as u128 / measured as u128) as usize).min(nb - 1);

    let mut ds: Vec<District> = (0..districts)
        .map(|_| District {
            stations: vec![
                Station {
                    charged: r_i,
                    depleted: 0.0,
                    order: None,
                };
                n
            ],
            deficit: 0.0,
            returns: VecDeque::new(),
        })
        .collect();
    let fleet = districts as f64 * (r_cs + n as f64 * r_i);

    let mut swap = BatchAcc::new(nb);
    let mut cycles = 0u64;
    let mut charge_out = BatchAcc::new(nb);
    let mut deficit = BatchAcc::new(nb);
    let mut in_transit: Vec<BatchAcc> = (0..periods).map(|_| BatchAcc::new(nb)).collect();
    let mut capacity = BatchAcc::new(nb);
    let mut overshoot = BatchAcc::new(nb);
    let held = params.power_central * stock.primary
        + params.power_swap * (stock.reorder_point + params.rho_s * q);
    let lambda = params.power_central + params.power_swap;
    let mut drift = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for k in 0..total_steps {
        let t = k as f64 * dt;
        let measuring = k >= warm_steps;
        for d in ds.iter_mut() {
            for st in d.stations.iter_mut() {
                let x = sampler.sample(t, &mut rng);
                st.charged -= x;
                st.depleted += x;
                if let Some((_, _, lead_demand)) = st.order.as_mut() {
                    *lead_demand += x;
                }
            }
            for st in d.stations.iter_mut() {
                if let Some((arrive, placed, lead_demand)) = st.order {
                    if arrive == k {
                        st.charged += q;
                        d.returns.push_back((k + lead + charge, st.depleted));
                        st.depleted = 0.0;
                        st.order = None;
                        if placed >= warm_steps {
                            cycles += 1;
                            swap.push(batch_of(k), f64::from(u8::from(lead_demand >= r_i + 1.0)));
                        }
                    }
                }
            }
            while d.returns.front().is_some_and(|(s, _)| *s <= k) {
                let (_, amount) = d.returns.pop_front().expect("checked");
                d.deficit -= amount;
            }
            for st in d.stations.iter_mut() {
                if st.order.is_none() && st.charged <= r_i {
                    if measuring {
                        overshoot.push(batch_of(k), r_i - st.charged);
                    }
                    d.deficit += q;
                    st.order = Some((k + lead, k, 0.0));
                }
            }
        }

        let mut total = 0.0;
        for d in &ds {
            let outbound: f64 = d.stations.iter().filter(|s| s.order.is_some()).count() as f64 * q;
            let inbound: f64 = d.returns.iter().map(|(_, a)| a).sum();
            let at_stations: f64 = d.stations.iter().map(|s| s.charged + s.depleted).sum();
            total += (r_cs - d.deficit) + outbound + inbound + at_stations;
            if measuring {
                let b = batch_of(k);
                let l = rho_c * outbound;
                deficit.push(b, d.deficit);
                charge_out.push(b, f64::from(u8::from(d.deficit > r_cs)));
                in_transit[(t.floor() as usize) % periods].push(b, l);
                capacity.push(b, held - lambda * l);
            }
        }
        drift = drift.max((total - fleet).abs() / fleet.abs().max(1.0));
    }

    let tt_formula = swapgrid::geometry::one_way_travel_time(rho_c, params.truck_speed)?;
    let in_transit = in_transit
        .iter()
        .enumerate()
        .map(|(z, acc)| {
            let mu_bar = match cfg.demand {
                DemandMode::Stationary => profile.mu_bar(),
                DemandMode::TimeVarying => profile.period_mean(z),
            };
            let m = tt_formula * mu_bar;
            InTransitMoments {
                period: z,
                mean: acc.mean(),
                var: acc.variance(),
                expected_mean: m,
                stated_var: (m * (q - m)).max(0.0),
                consistent_var: (m * (params.rho_s * q - m)).max(0.0),
                independent_var: (rho_c * m * (q - m / params.rho_s)).max(0.0),
            }
        })
        .collect::<Vec<_>>();
    let capacity_by_period = in_transit.iter().map(|m| held - lambda * m.mean.mean).collect();

    Ok(SimStats {
        swap_stockout: (cycles > 0).then(|| swap.mean()),
        swap_cycles: cycles,
        order_overshoot: (overshoot.count() > 0.0).then(|| overshoot.mean()),
        charge_stockout: Some(charge_out.mean()),
        deficit_mean: Some(deficit.mean()),
        deficit_var: Some(deficit.variance()),
        decentral_stockout: None,
        in_transit,
        avg_capacity: Some(capacity.mean()),
        capacity_by_period,
        stations: n * districts,
        districts,
        rho_c,
        travel_time: travel,
        charge_time: charge as f64 * dt,
        dt,
        steps: total_steps,
        conservation_error: drift,
    })
}

/// Which closed-form variance the simulated moments sit closer to,
/// summed over periods in units of the empirical standard error.
pub fn closer_form(moments: &[InTransitMoments]) -> VarianceForm {
    let score = |f: fn(&InTransitMoments) -> f64| -> f64 {
        moments
            .iter()
            .filter(|m| m.var.std_error > 0.0)
            .map(|m| m.var.z_score(f(m)))
            .sum()
    };
    [
        (VarianceForm::Stated, score(|m| m.stated_var)),
        (VarianceForm::Consistent, score(|m| m.consistent_var)),
        (VarianceForm::Independent, score(|m| m.independent_var)),
    ]
    .into_iter()
    .min_by(|a, b| a.1.total_cmp(&b.1))
    .map(|(f, _)| f)
    .expect("three candidates")
}

/// Simulate at formula stock levels and return per-period in-transit
/// moments with the better-matching variance form.
pub fn measure_in_transit(
    decision: &Decision,
    params: &SystemParams,
    profile: &DemandProfile,
    cfg: &SimConfig,
) -> Result<(Vec<InTransitMoments>, VarianceForm)> {
    let d = snap_decision(decision, params);
    let stock = formula_stock(&d, params, profile)?;
    let stats = simulate_centralized(&d, &stock, params, profile, cfg)?;
    let form = closer_form(&stats.in_transit);
    Ok((stats.in_transit, form))
}

/// Result 1-2 stock levels at a decision.
pub fn formula_stock(d: &Decision, params: &SystemParams, profile: &DemandProfile) -> Result<StockPlan> {
    Ok(StockPlan {
        primary: inventory::primary_stock_r(d.q, d.rho_c, params, profile, params.eps_charge)?,
        reorder_point: inventory::reorder_point_r(d.rho_c, params, profile, params.eps_swap)?,
        decentral: 0.0,
        nu: inventory::breakpoint_nu(d.rho_c, params, profile)?,
        eps_bs: 0.0,
    })
}
