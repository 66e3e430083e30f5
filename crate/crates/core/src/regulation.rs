//! Frequency-regulation mechanics: AGC mileage, the performance
//! requirement eta_z, in-transit battery moments and capacity bounds.

use rayon::prelude::*;

use crate::demand::DemandProfile;
use crate::error::{check_probability, ModelError, Result};
use crate::geometry;
use crate::model::{Decision, StockPlan};
use crate::normal::safety_factor;
use crate::params::SystemParams;

/// Bisection tolerance on eta.
pub const ETA_TOL: f64 = 1e-6;
/// Floor used in place of eta when a period requests no mileage.
pub const ETA_FLOOR: f64 = 1e-6;

/// AGC dispatch samples for one bidding period.
#[derive(Debug, Clone, PartialEq)]
pub struct AgcTrace {
    pub period: usize,
    samples: Vec<f64>,
}

impl AgcTrace {
    pub fn new(period: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(ModelError::Data(format!(
                "period {period}: AGC trace needs at least 2 samples"
            )));
        }
        if let Some(g) = samples.iter().find(|g| !(g.abs() <= 1.0)) {
            return Err(ModelError::Data(format!(
                "period {period}: AGC signal {g} outside [-1, 1]"
            )));
        }
        Ok(AgcTrace { period, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Cumulative absolute change of the trace.
pub fn requested_mileage(trace: &AgcTrace) -> f64 {
    trace.samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn clipped_mileage(samples: &[f64], eta: f64) -> f64 {
    samples
        .windows(2)
        .map(|w| (w[1].clamp(-eta, eta) - w[0].clamp(-eta, eta)).abs())
        .sum()
}

/// Mileage delivered when available capacity is eta times the bid.
pub fn fulfilled_mileage(trace: &AgcTrace, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ModelError::param("eta", "out of [0,1]"));
    }
    Ok(clipped_mileage(&trace.samples, eta))
}

/// Smallest eta whose fulfilled mileage reaches theta times the request.
pub fn eta_z(trace: &AgcTrace, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(ModelError::param("theta", "out of (0,1]"));
    }
    let target = theta * requested_mileage(trace);
    if target <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ETA_TOL {
        let mid = 0.5 * (lo + hi);
        if clipped_mileage(&trace.samples, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Per-period traces, clearing prices and the derived eta_z.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulationMarket {
    traces: Vec<AgcTrace>,
    prices: Vec<f64>,
    theta: f64,
    eta: Vec<f64>,
}

impl RegulationMarket {
    /// Traces must be ordered by period 0..Z; `prices[z]` in $/MW.
    pub fn new(traces: Vec<AgcTrace>, prices: Vec<f64>, theta: f64) -> Result<Self> {
        if traces.is_empty() {
            return Err(ModelError::Data("market has no periods".into()));
        }
        if traces.len() != prices.len() {
            return Err(ModelError::Data(format!(
                "{} AGC periods but {} prices",
                traces.len(),
                prices.len()
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(ModelError::Data(format!("negative clearing price {p}")));
        }
        for (z, t) in traces.iter().enumerate() {
            if t.period != z {
                return Err(ModelError::Data(format!("AGC period {z} missing")));
            }
        }
        let eta = traces
            .par_iter()
            .map(|t| eta_z(t, theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(RegulationMarket {
            traces,
            prices,
            theta,
            eta,
        })
    }

    pub fn periods(&self) -> usize {
        self.prices.len()
    }

    pub fn traces(&self) -> &[AgcTrace] {
        &self.traces
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Same traces re-evaluated at a different performance level.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.traces.clone(), self.prices.clone(), theta)
    }

    pub(crate) fn check_periods(&self, profile: &DemandProfile) -> Result<()> {
        if self.periods() != profile.periods() {
            return Err(ModelError::Data(format!(
                "market has {} periods, demand has {}",
                self.periods(),
                profile.periods()
            )));
        }
        Ok(())
    }
}

/// Capacity bound for one period; `capped` marks an eta_z = 0 period whose
/// bound was computed with [`ETA_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBound {
    pub kw: f64,
    pub capped: bool,
}

impl CapacityBound {
    fn new(numerator: f64, eta: f64) -> Self {
        let capped = eta <= 0.0;
        CapacityBound {
            kw: numerator.max(0.0) / eta.max(ETA_FLOOR),
            capped,
        }
    }

    /// Capacity that earns income: capped periods earn nothing.
    pub fn paid(&self) -> f64 {
        if self.capped {
            0.0
        } else {
            self.kw
        }
    }
}

pub(crate) fn in_transit_unchecked(
    z: usize,
    mean: f64,
    q: f64,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let bound = params.rho_s * q;
    if mean > bound * (1.0 + 1e-12) {
        return Err(ModelError::InTransitBound {
            period: z,
            probability: mean / bound,
            expected: mean,
            bound,
        });
    }
    let spread = if params.bernoulli_consistent_variance {
        bound
    } else {
        q
    };
    Ok((mean, (mean * (spread - mean)).max(0.0)))
}

/// Mean and variance of the in-transit battery density L_z.
pub fn in_transit_moments(
    z: usize,
    q: f64,
    rho_c: f64,
    params: &SystemParams,
    profile: &DemandProfile,
) -> Result<(f64, f64)> {
    Decision::new(rho_c, q).validate(params)?;
    if z >= profile.periods() {
        return Err(ModelError::param("z", "period out of range"));
    }
    let tt = geometry::travel_time(rho_c, params.truck_speed);
    in_transit_unchecked(z, tt * profile.period_mean(z), q, params)
}

/// Result 4 bound from explicit stock levels and in-transit moments.
pub fn centralized_bound_from_moments(
    params: &SystemParams,
    primary: f64,
    reorder_point: f64,
    rho_s_q: f64,
    mean: f64,
    var: f64,
    eps_b: f64,
    eta: f64,
) -> Result<CapacityBound> {
    check_probability("eps_B", eps_b)?;
    let num = params.power_central * primary + params.power_swap * (reorder_point + rho_s_q)
        - (params.power_central + params.power_swap) * (mean + safety_factor(eps_b) * var.sqrt());
    Ok(CapacityBound::new(num, eta))
}

/// Upper bound on the centralized regulation capacity in period z.
pub fn centralized_capacity_bound(
    z: usize,
    decision: &Decision,
    stock: &StockPlan,
    params: &SystemParams,
    profile: &DemandProfile,
    eta: f64,
    eps_b: f64,
) -> Result<CapacityBound> {
    let (mean, var) = in_transit_moments(z, decision.q, decision.rho_c, params, profile)?;
    centralized_bound_from_moments(
        params,
        stock.primary,
        stock.reorder_point,
        params.rho_s * decision.q,
        mean,
        var,
        eps_b,
        eta,
    )
}

/// Upper bound on the decentralized regulation capacity, lambda^S r^B / eta.
pub fn decentralized_capacity_bound(r_b: f64, params: &SystemParams, eta: f64) -> Result<CapacityBound> {
    if !(r_b >= 0.0) {
        return Err(ModelError::param("r_B", "must be >= 0"));
    }
    Ok(CapacityBound::new(params.power_swap * r_b, eta))
}

/// Long-run average available capacity of the centralized system
/// (kW/km^2), averaged over periods and scenarios.
pub fn average_capacity(
    decision: &Decision,
    stock: &StockPlan,
    params: &SystemParams,
    profile: &DemandProfile,
) -> Result<f64> {
    decision.validate(params)?;
    let tt = geometry::travel_time(decision.rho_c, params.truck_speed);
    let z = profile.periods() as f64;
    let mut in_transit = 0.0;
    for p in 0..profile.periods() {
        for n in 0..profile.scenarios() {
            in_transit += profile.kappa(p, n) * tt * profile.mu_bar_zn(p, n);
        }
    }
    let held = params.power_central * stock.primary
        + params.power_swap * (stock.reorder_point + decision.q * params.rho_s);
    Ok((held - (params.power_central + params.power_swap) * in_transit / z).max(0.0))
}

/// Decentralized analogue: every spare battery sits on an on-site charger.
pub fn average_capacity_decentralized(r_b: f64, params: &SystemParams) -> f64 {
    params.power_swap * r_b.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::baseline_profile;
    use proptest::prelude::*;

    fn trace(s: &[f64]) -> AgcTrace {
        AgcTrace::new(0, s.to_vec()).unwrap()
    }

    fn ramp(n: usize) -> AgcTrace {
        trace(&(0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect::<Vec<_>>())
    }

    #[test]
    fn mileage_examples() {
        assert_eq!(requested_mileage(&trace(&[0.3; 10])), 0.0);
        assert!((requested_mileage(&ramp(101)) - 2.0).abs() < 1e-12);
        let t = trace(&[0.0, 1.0, -1.0, 1.0]);
        assert_eq!(requested_mileage(&t), 5.0);
        let brute: f64 = (1..4).map(|w| (t.samples()[w] - t.samples()[w - 1]).abs()).sum();
        assert_eq!(brute, 5.0);
    }

    #[test]
    fn fulfilled_examples() {
        let r = ramp(201);
        assert_eq!(fulfilled_mileage(&r, 1.0).unwrap(), requested_mileage(&r));
        assert_eq!(fulfilled_mileage(&r, 0.0).unwrap(), 0.0);
        assert!((fulfilled_mileage(&r, 0.3).unwrap() - 0.6).abs() < 1e-12);
        assert!(fulfilled_mileage(&r, 1.2).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_z(&trace(&[0.5; 4]), 0.7).unwrap(), 0.0);
        assert!((eta_z(&ramp(1001), 0.7).unwrap() - 0.7).abs() <= 1e-6);
        assert!(eta_z(&ramp(11), 0.0).is_err());
        assert!(AgcTrace::new(0, vec![0.1]).is_err());
        assert!(AgcTrace::new(0, vec![0.1, 1.5]).is_err());
    }

    #[test]
    fn in_transit_examples() {
        let params = SystemParams {
            rho_s: 1.0,
            ..SystemParams::default()
        };
        assert_eq!(in_transit_unchecked(0, 0.5, 2.0, &params).unwrap(), (0.5, 0.75));
        assert_eq!(in_transit_unchecked(0, 0.0, 2.0, &params).unwrap(), (0.0, 0.0));
        let consistent = SystemParams {
            bernoulli_consistent_variance: true,
            ..params.clone()
        };
        assert_eq!(in_transit_unchecked(0, 0.5, 2.0, &consistent).unwrap(), (0.5, 0.75));
        let low = SystemParams::default();
        let (_, v_stated) = in_transit_unchecked(0, 0.05, 2.0, &low).unwrap();
        let (_, v_cons) = in_transit_unchecked(
            0,
            0.05,
            2.0,
            &SystemParams {
                bernoulli_consistent_variance: true,
                ..low.clone()
            },
        )
        .unwrap();
        assert!((v_stated - 0.05 * 1.95).abs() < 1e-12);
        assert!((v_cons - 0.05 * 0.03).abs() < 1e-12);
        let err = in_transit_unchecked(3, 0.5, 2.0, &low).unwrap_err();
        assert!(matches!(err, ModelError::InTransitBound { period: 3, .. }));
    }

    #[test]
    fn in_transit_from_profile() {
        let p = SystemParams::default();
        let prof = baseline_profile();
        let (m, _) = in_transit_moments(10, 5.0, 0.01, &p, &prof).unwrap();
        let tt = geometry::travel_time(0.01, 30.0);
        assert!((m - tt * 14.51 * 0.04).abs() < 1e-12);
        assert!(in_transit_moments(99, 5.0, 0.01, &p, &prof).is_err());
    }

    #[test]
    fn centralized_bound_example() {
        let params = SystemParams {
            power_central: 41.0,
            power_swap: 7.0,
            ..SystemParams::default()
        };
        let b = centralized_bound_from_moments(&params, 10.0, 1.0, 2.0, 0.5, 0.75, 0.03, 0.8).unwrap();
        let expect = (431.0 - 48.0 * (0.5 + 1.880_793_608 * 0.75f64.sqrt())) / 0.8;
        assert!((b.kw - expect).abs() < 1e-6);
        assert!((b.kw - 411.02).abs() < 5e-3);
        assert!(!b.capped);
        let zero = centralized_bound_from_moments(&params, 0.0, 0.0, 0.0, 0.0, 0.0, 0.03, 0.8).unwrap();
        assert_eq!(zero.kw, 0.0);
        let half = centralized_bound_from_moments(&params, 10.0, 1.0, 2.0, 0.5, 0.75, 0.5, 1.0).unwrap();
        assert!((half.kw - (431.0 - 48.0 * 0.5)).abs() < 1e-9);
    }

    #[test]
    fn zero_eta_is_capped_and_unpaid() {
        let params = SystemParams::default();
        let b = decentralized_capacity_bound(1.0, &params, 0.0).unwrap();
        assert!(b.capped);
        assert!((b.kw - 7.0 / ETA_FLOOR).abs() < 1e-3);
        assert_eq!(b.paid(), 0.0);
    }

    #[test]
    fn decentralized_bound_examples() {
        let p = SystemParams::default();
        assert!((decentralized_capacity_bound(1.0722, &p, 0.8).unwrap().kw - 9.382).abs() < 5e-4);
        assert_eq!(decentralized_capacity_bound(0.0, &p, 0.8).unwrap().kw, 0.0);
        let unit = SystemParams {
            power_swap: 1.0,
            ..p
        };
        assert_eq!(decentralized_capacity_bound(3.0, &unit, 1.0).unwrap().kw, 3.0);
    }

    #[test]
    fn average_capacity_zero_demand() {
        let params = SystemParams::default();
        let prof = DemandProfile::stationary(0.0, 0.0).unwrap();
        let d = Decision::new(0.01, 4.0);
        let s = StockPlan {
            primary: 2.0,
            reorder_point: 0.5,
            decentral: 0.0,
            nu: f64::INFINITY,
            eps_bs: 0.0,
        };
        let avg = average_capacity(&d, &s, &params, &prof).unwrap();
        assert!((avg - (41.0 * 2.0 + 7.0 * (0.5 + 4.0 * 0.04))).abs() < 1e-12);
    }

    #[test]
    fn market_validation() {
        let t = vec![ramp(5), AgcTrace::new(1, vec![0.0, 0.5]).unwrap()];
        assert!(RegulationMarket::new(t.clone(), vec![10.0], 0.75).is_err());
        assert!(RegulationMarket::new(t.clone(), vec![10.0, -1.0], 0.75).is_err());
        let m = RegulationMarket::new(t, vec![10.0, 20.0], 0.75).unwrap();
        assert!((m.eta()[0] - 0.75).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn fulfilled_monotone_and_bounded(
            s in proptest::collection::vec(-1.0f64..1.0, 2..60),
            a in 0.0f64..1.0, b in 0.0f64..1.0,
        ) {
            let t = trace(&s);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f_lo = fulfilled_mileage(&t, lo).unwrap();
            let f_hi = fulfilled_mileage(&t, hi).unwrap();
            prop_assert!(f_lo <= f_hi + 1e-12);
            prop_assert!(f_hi <= requested_mileage(&t) + 1e-12);
            prop_assert_eq!(fulfilled_mileage(&t, 1.0).unwrap(), requested_mileage(&t));
        }

        #[test]
        fn eta_is_minimal(s in proptest::collection::vec(-1.0f64..1.0, 2..60), theta in 0.05f64..1.0) {
            let t = trace(&s);
            let req = requested_mileage(&t);
            let e = eta_z(&t, theta).unwrap();
            prop_assert!(fulfilled_mileage(&t, e).unwrap() >= theta * req);
            if e > 1e-4 {
                prop_assert!(fulfilled_mileage(&t, e - 1e-4).unwrap() < theta * req);
            }
        }

        #[test]
        fn bound_monotone(
            r in 0.0f64..20.0, dr in 0.0f64..5.0, q in 0.0f64..3.0,
            eta in 0.05f64..1.0, de in 0.0f64..0.5,
        ) {
            let p = SystemParams::default();
            let base = centralized_bound_from_moments(&p, r, 1.0, q, 0.3, 0.2, 0.03, eta).unwrap().kw;
            let more = centralized_bound_from_moments(&p, r + dr, 1.0 + dr, q + dr, 0.3, 0.2, 0.03, eta).unwrap().kw;
            let slower = centralized_bound_from_moments(&p, r, 1.0, q, 0.3, 0.2, 0.03, (eta + de).min(1.0)).unwrap().kw;
            prop_assert!(more >= base - 1e-9);
            prop_assert!(slower <= base + 1e-9);
        }
    }
}
