//! Service-level stock formulas.
//!
//! Charging stations hold a primary stock R sized against the aggregate
//! battery deficit of the swapping stations they serve; swapping stations
//! run an (r, Q) policy; in the decentralized design each swapping station
//! keeps a spare stock r^B that covers demand over one on-site charge.
//! All stocks are aggregate densities (batteries per km^2).

use crate::demand::DemandProfile;
use crate::error::{check_positive, check_probability, ModelError, Result};
use crate::geometry;
use crate::normal::safety_factor;
use crate::params::SystemParams;

/// Piecewise deficit variance.
///
/// With `stations = 1` and per-station (mu, sigma2) this is the single
/// swapping-station form; with densities and `stations = rho_s / rho_c` it
/// is the charging-station (density) form. The breakpoint is the same in
/// both because the scale factor multiplies both branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPieces {
    /// Round trip plus charge time, 2 T^T + T^C (h).
    pub delta: f64,
    /// Per-station mean demand rate.
    pub mu: f64,
    /// Per-station demand variance rate.
    pub sigma2: f64,
    /// Number of swapping stations aggregated.
    pub stations: f64,
    pub nu: f64,
}

impl PhiPieces {
    pub fn new(delta: f64, mu: f64, sigma2: f64, stations: f64) -> Self {
        let nu = breakpoint(delta, mu, sigma2);
        PhiPieces {
            delta,
            mu,
            sigma2,
            stations,
            nu,
        }
    }

    /// Density form at charging-station density `rho_c`.
    pub fn for_density(rho_c: f64, params: &SystemParams, profile: &DemandProfile) -> Self {
        let tt = geometry::travel_time(rho_c, params.truck_speed);
        let delta = 2.0 * tt + params.central_charge_time();
        Self::new(
            delta,
            profile.mu_bar() / params.rho_s,
            profile.sigma2_bar() / params.rho_s,
            params.rho_s / rho_c,
        )
    }

    /// Delta * sigma^2 + (Q^2 - 1) / 6, scaled.
    pub fn small_q(&self, q: f64) -> f64 {
        self.stations * (self.delta * self.sigma2 + (q * q - 1.0) / 6.0)
    }

    /// Q Delta mu - (Delta mu)^2, scaled.
    pub fn large_q(&self, q: f64) -> f64 {
        let dm = self.delta * self.mu;
        self.stations * (q * dm - dm * dm)
    }

    pub fn eval(&self, q: f64) -> f64 {
        if q <= self.nu {
            self.small_q(q)
        } else {
            self.large_q(q)
        }
    }
}

/// Smallest positive root of small_q(Q) = large_q(Q), i.e. of
/// Q^2 - 6 Delta mu Q + 6 (Delta mu)^2 + 6 Delta sigma^2 - 1 = 0.
/// +inf when there is no positive real root or mu = 0.
fn breakpoint(delta: f64, mu: f64, sigma2: f64) -> f64 {
    let dm = delta * mu;
    if dm <= 0.0 {
        return f64::INFINITY;
    }
    let disc = 3.0 * dm * dm - 6.0 * delta * sigma2 + 1.0;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let s = disc.sqrt();
    let (lo, hi) = (3.0 * dm - s, 3.0 * dm + s);
    if lo > 0.0 {
        lo
    } else if hi > 0.0 {
        hi
    } else {
        f64::INFINITY
    }
}

fn check_q(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(ModelError::param("Q", "must be >= 0"))
    }
}

fn check_rho_c(rho_c: f64, params: &SystemParams) -> Result<()> {
    check_positive("rho_c", rho_c)?;
    if rho_c > params.rho_s * (1.0 + 1e-12) {
        return Err(ModelError::param("rho_c", "must not exceed rho_s"));
    }
    Ok(())
}

/// Deficit variance density phi(Q) at a charging station (batteries^2).
pub fn phi(q: f64, rho_c: f64, params: &SystemParams, profile: &DemandProfile) -> Result<f64> {
    check_q(q)?;
    check_rho_c(rho_c, params)?;
    Ok(PhiPieces::for_density(rho_c, params, profile).eval(q))
}

/// Breakpoint nu (batteries) between the two variance branches.
pub fn breakpoint_nu(rho_c: f64, params: &SystemParams, profile: &DemandProfile) -> Result<f64> {
    check_rho_c(rho_c, params)?;
    Ok(PhiPieces::for_density(rho_c, params, profile).nu)
}

/// Minimum primary stock R at charging stations, clamped at zero.
pub fn primary_stock_r(
    q: f64,
    rho_c: f64,
    params: &SystemParams,
    profile: &DemandProfile,
    eps_c: f64,
) -> Result<f64> {
    check_q(q)?;
    check_rho_c(rho_c, params)?;
    check_probability("eps_C", eps_c)?;
    Ok(primary_unchecked(q, rho_c, params, profile, safety_factor(eps_c)))
}

pub(crate) fn primary_unchecked(
    q: f64,
    rho_c: f64,
    params: &SystemParams,
    profile: &DemandProfile,
    z: f64,
) -> f64 {
    let tt = geometry::travel_time(rho_c, params.truck_speed);
    let var = PhiPieces::for_density(rho_c, params, profile).eval(q).max(0.0);
    let raw = (tt + params.central_charge_time()) * profile.mu_bar()
        + q * params.rho_s
        + z * var.sqrt() * rho_c;
    raw.max(0.0)
}

/// Minimum re-order point r at swapping stations, clamped at zero.
pub fn reorder_point_r(
    rho_c: f64,
    params: &SystemParams,
    profile: &DemandProfile,
    eps_s: f64,
) -> Result<f64> {
    check_rho_c(rho_c, params)?;
    check_probability("eps_S", eps_s)?;
    Ok(reorder_unchecked(rho_c, params, profile, safety_factor(eps_s)))
}

pub(crate) fn reorder_unchecked(
    rho_c: f64,
    params: &SystemParams,
    profile: &DemandProfile,
    z: f64,
) -> f64 {
    let tt = geometry::travel_time(rho_c, params.truck_speed);
    let raw = tt * profile.mu_bar() - params.rho_s + z * (tt * params.rho_s).sqrt() * profile.sigma_bar();
    raw.max(0.0)
}

/// Spare stock covering demand over one charge of length `charge_time`.
pub fn spare_stock(
    charge_time: f64,
    params: &SystemParams,
    profile: &DemandProfile,
    eps_bs: f64,
) -> Result<f64> {
    check_positive("charge_time", charge_time)?;
    check_probability("eps_BS", eps_bs)?;
    let raw = charge_time * profile.mu_bar() - params.rho_s
        + safety_factor(eps_bs) * (charge_time * params.rho_s).sqrt() * profile.sigma_bar();
    Ok(raw.max(0.0))
}

/// Minimum decentralized spare stock r^B; swapped-out batteries recharge
/// on site at lambda^S.
pub fn decentralized_stock_rb(
    params: &SystemParams,
    profile: &DemandProfile,
    eps_bs: f64,
) -> Result<f64> {
    spare_stock(params.onsite_charge_time(), params, profile, eps_bs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_params() -> SystemParams {
        SystemParams {
            rho_s: 0.04,
            truck_speed: 30.0,
            charge_time: 0.78,
            ..SystemParams::default()
        }
    }

    #[test]
    fn per_station_branches() {
        let p = PhiPieces::new(1.0, 4.0, 4.0, 1.0);
        assert_eq!(p.nu, 7.0);
        assert_eq!(p.eval(1.0), 4.0);
        assert_eq!(p.eval(20.0), 64.0);
        assert!((p.small_q(7.0) - p.large_q(7.0)).abs() < 1e-12);
        // Second crossing exists but is not the breakpoint.
        assert!((p.small_q(17.0) - p.large_q(17.0)).abs() < 1e-9);
    }

    #[test]
    fn breakpoint_degenerate_cases() {
        assert_eq!(PhiPieces::new(1.0, 4.0, 1e6, 1.0).nu, f64::INFINITY);
        assert_eq!(PhiPieces::new(1.0, 0.0, 0.01, 1.0).nu, f64::INFINITY);
        let p = PhiPieces::new(1.0, 0.0, 0.01, 1.0);
        assert!(p.large_q(5.0) <= 0.0);
    }

    #[test]
    fn density_form_scales_station_form() {
        let params = unit_params();
        let profile = DemandProfile::stationary(0.8, 0.6).unwrap();
        let rho_c = 0.005;
        let d = PhiPieces::for_density(rho_c, &params, &profile);
        let s = PhiPieces::new(d.delta, 0.8 / 0.04, 0.6 / 0.04, 1.0);
        assert_eq!(d.nu, s.nu);
        for q in [1.0, 3.0, 10.0, 25.0] {
            let explicit_small = 0.6 / rho_c * d.delta + (q * q - 1.0) / 6.0 * 0.04 / rho_c;
            let explicit_large = d.delta * 0.8 / rho_c * q - d.delta.powi(2) * 0.64 / (0.04 * rho_c);
            assert!((d.small_q(q) - explicit_small).abs() < 1e-9 * explicit_small.abs());
            assert!((d.large_q(q) - explicit_large).abs() < 1e-9 * explicit_large.abs().max(1.0));
            assert!((d.eval(q) - 8.0 * s.eval(q)).abs() < 1e-9 * d.eval(q).abs().max(1.0));
        }
    }

    #[test]
    fn phi_rejects_negative_q() {
        let p = SystemParams::default();
        let prof = crate::demand::baseline_profile();
        assert!(phi(-1.0, 0.01, &p, &prof).is_err());
    }

    #[test]
    fn reorder_point_reference() {
        let params = unit_params();
        let profile = DemandProfile::stationary(1.0, 1.0).unwrap();
        let r = reorder_point_r(0.01, &params, &profile, 0.03).unwrap();
        assert!((r - 0.26624).abs() < 5e-5, "{r}");
        // Expectation term cancels rho_s exactly at eps = 0.5.
        let tt = geometry::travel_time(0.01, 30.0);
        let tuned = DemandProfile::stationary(0.04 / tt, 1.0).unwrap();
        assert!(reorder_point_r(0.01, &params, &tuned, 0.5).unwrap().abs() < 1e-12);
        let zero = DemandProfile::stationary(0.0, 0.0).unwrap();
        assert_eq!(reorder_point_r(0.01, &params, &zero, 0.03).unwrap(), 0.0);
        assert!(reorder_point_r(0.01, &params, &profile, 1.0).is_err());
    }

    #[test]
    fn spare_stock_reference() {
        let params = unit_params();
        let profile = DemandProfile::stationary(1.0, 1.0).unwrap();
        let rb = spare_stock(0.78, &params, &profile, 0.03).unwrap();
        let expect = 0.74 + 1.880_793_608 * (0.78f64 * 0.04).sqrt();
        assert!((rb - expect).abs() < 1e-8);
        assert!((rb - 1.0722).abs() < 5e-5);
        let half = spare_stock(0.78, &params, &profile, 0.5).unwrap();
        assert!((half - 0.74).abs() < 1e-12);
        let zero = DemandProfile::stationary(0.0, 0.0).unwrap();
        assert_eq!(spare_stock(0.78, &params, &zero, 0.03).unwrap(), 0.0);
        assert!(spare_stock(0.78, &params, &profile, 0.0).is_err());
    }

    #[test]
    fn primary_stock_cases() {
        let params = unit_params();
        let profile = DemandProfile::stationary(1.0, 1.0).unwrap();
        let tt = geometry::travel_time(0.01, 30.0);
        let half = primary_stock_r(5.0, 0.01, &params, &profile, 0.5).unwrap();
        assert!((half - ((tt + 0.78) * 1.0 + 5.0 * 0.04)).abs() < 1e-12);
        let zero = DemandProfile::stationary(0.0, 0.0).unwrap();
        let r = primary_stock_r(1.0, 0.01, &params, &zero, 0.03).unwrap();
        assert!((r - 0.04).abs() < 1e-12);
        assert!(primary_stock_r(5.0, 0.01, &params, &profile, 1.2).is_err());
    }

    proptest! {
        #[test]
        fn continuity_at_breakpoint(delta in 0.1f64..5.0, mu in 0.1f64..30.0, s2 in 0.0f64..30.0) {
            let p = PhiPieces::new(delta, mu, s2, 1.0);
            if p.nu.is_finite() {
                let a = p.small_q(p.nu);
                let b = p.large_q(p.nu);
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0));
            }
        }

        #[test]
        fn stocks_monotone_in_demand_and_service(
            mu in 0.01f64..20.0, extra in 0.0f64..5.0, s2 in 0.01f64..20.0,
            rho_c in 0.001f64..0.04, q in 1.0f64..30.0,
            eps in 0.005f64..0.3, deps in 0.0f64..0.1,
        ) {
            let params = SystemParams::default();
            let lo = DemandProfile::stationary(mu, s2).unwrap();
            let hi = DemandProfile::stationary(mu + extra, s2).unwrap();
            let tight = eps;
            let loose = (eps + deps).min(0.45);
            let r_lo = primary_stock_r(q, rho_c, &params, &lo, tight).unwrap();
            let r_hi = primary_stock_r(q, rho_c, &params, &hi, tight).unwrap();
            prop_assert!(r_hi >= r_lo - 1e-9 * r_lo.abs().max(1.0));
            let r_loose = primary_stock_r(q, rho_c, &params, &lo, loose).unwrap();
            prop_assert!(r_loose <= r_lo + 1e-12);
            let o_lo = reorder_point_r(rho_c, &params, &lo, tight).unwrap();
            let o_hi = reorder_point_r(rho_c, &params, &hi, tight).unwrap();
            prop_assert!(o_hi >= o_lo - 1e-12);
            prop_assert!(reorder_point_r(rho_c, &params, &lo, loose).unwrap() <= o_lo + 1e-12);
        }
    }
}
