//! Swap-demand densities per bidding period and price scenario.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Hourly swap demand at a single swapping station, before conversion to
/// area densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDemand {
    /// Mean swaps per hour, one entry per period.
    pub mean: Vec<f64>,
    /// Standard deviation of hourly swaps, one entry per period.
    pub std: Vec<f64>,
    /// Periods (hour indices) billed at the peak electricity price.
    pub peak_hours: Vec<usize>,
}

/// Per-station hourly statistics for 0:00-8:59 and 9:00-23:59.
pub const BASELINE_OFFPEAK_MEAN: f64 = 5.68;
pub const BASELINE_OFFPEAK_STD: f64 = 3.71;
pub const BASELINE_DAY_MEAN: f64 = 14.51;
pub const BASELINE_DAY_STD: f64 = 3.90;
/// Peak electricity hours 8-10 a.m. and 3-8 p.m.
pub const BASELINE_PEAK_HOURS: [usize; 7] = [8, 9, 15, 16, 17, 18, 19];

impl Default for StationDemand {
    fn default() -> Self {
        let (mean, std) = (0..24)
            .map(|h| {
                if h < 9 {
                    (BASELINE_OFFPEAK_MEAN, BASELINE_OFFPEAK_STD)
                } else {
                    (BASELINE_DAY_MEAN, BASELINE_DAY_STD)
                }
            })
            .unzip();
        StationDemand {
            mean,
            std,
            peak_hours: BASELINE_PEAK_HOURS.to_vec(),
        }
    }
}

impl StationDemand {
    pub fn validate(&self) -> Result<()> {
        if self.mean.is_empty() {
            return Err(ModelError::param("mean", "needs at least one period"));
        }
        if self.mean.len() != self.std.len() {
            return Err(ModelError::param("std", "length must match mean"));
        }
        if self.mean.iter().chain(&self.std).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(ModelError::param("mean", "demand statistics must be >= 0"));
        }
        if let Some(h) = self.peak_hours.iter().find(|h| **h >= self.mean.len()) {
            return Err(ModelError::param("peak_hours", format!("period {h} out of range")));
        }
        Ok(())
    }

    /// Scale mean and variance per station by `s` (std by sqrt(s)).
    pub fn scaled(&self, s: f64) -> Self {
        StationDemand {
            mean: self.mean.iter().map(|m| m * s).collect(),
            std: self.std.iter().map(|d| d * s.sqrt()).collect(),
            peak_hours: self.peak_hours.clone(),
        }
    }

    /// Convert to area densities at swapping-station density `rho_s`.
    /// Two scenarios: index 0 = peak, 1 = off-peak.
    pub fn to_profile(&self, rho_s: f64) -> Result<DemandProfile> {
        self.validate()?;
        let z = self.mean.len();
        let kappa = (0..z)
            .map(|h| {
                if self.peak_hours.contains(&h) {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect();
        let mu_bar = self.mean.iter().map(|m| vec![m * rho_s; 2]).collect();
        let sigma2_bar = self.std.iter().map(|s| s * s * rho_s).collect();
        DemandProfile::new(kappa, mu_bar, sigma2_bar)
    }
}

/// Demand densities (per km^2) for every period and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    kappa: Vec<Vec<f64>>,
    mu_bar: Vec<Vec<f64>>,
    sigma2_bar: Vec<f64>,
    mu_bar_overall: f64,
    sigma2_bar_overall: f64,
}

impl DemandProfile {
    /// `kappa[z][n]`: share of period z in scenario n; `mu_bar[z][n]`:
    /// mean swaps h^-1 km^-2; `sigma2_bar[z]`: variance density.
    pub fn new(kappa: Vec<Vec<f64>>, mu_bar: Vec<Vec<f64>>, sigma2_bar: Vec<f64>) -> Result<Self> {
        let z = kappa.len();
        if z == 0 || mu_bar.len() != z || sigma2_bar.len() != z {
            return Err(ModelError::Data(
                "kappa, mu_bar and sigma2_bar need the same nonzero number of periods".into(),
            ));
        }
        let n = kappa[0].len();
        if n == 0 {
            return Err(ModelError::Data("at least one scenario is required".into()));
        }
        for (i, (k, m)) in kappa.iter().zip(&mu_bar).enumerate() {
            if k.len() != n || m.len() != n {
                return Err(ModelError::Data(format!("period {i}: ragged scenario rows")));
            }
            let sum: f64 = k.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || k.iter().any(|v| *v < 0.0) {
                return Err(ModelError::Data(format!("period {i}: kappa must sum to 1")));
            }
            if m.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(ModelError::Data(format!("period {i}: negative demand density")));
            }
        }
        if sigma2_bar.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(ModelError::Data("negative demand variance density".into()));
        }
        let mu_bar_overall = kappa
            .iter()
            .zip(&mu_bar)
            .map(|(k, m)| k.iter().zip(m).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>()
            / z as f64;
        let sigma2_bar_overall = sigma2_bar.iter().sum::<f64>() / z as f64;
        Ok(DemandProfile {
            kappa,
            mu_bar,
            sigma2_bar,
            mu_bar_overall,
            sigma2_bar_overall,
        })
    }

    /// A single-period, single-scenario profile with constant densities.
    pub fn stationary(mu_bar: f64, sigma2_bar: f64) -> Result<Self> {
        Self::new(vec![vec![1.0]], vec![vec![mu_bar]], vec![sigma2_bar])
    }

    pub fn periods(&self) -> usize {
        self.kappa.len()
    }

    pub fn scenarios(&self) -> usize {
        self.kappa[0].len()
    }

    pub fn kappa(&self, z: usize, n: usize) -> f64 {
        self.kappa[z][n]
    }

    pub fn mu_bar_zn(&self, z: usize, n: usize) -> f64 {
        self.mu_bar[z][n]
    }

    pub fn sigma2_bar_z(&self, z: usize) -> f64 {
        self.sigma2_bar[z]
    }

    /// Time-weighted mean density in period z.
    pub fn period_mean(&self, z: usize) -> f64 {
        self.kappa[z]
            .iter()
            .zip(&self.mu_bar[z])
            .map(|(k, m)| k * m)
            .sum()
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_bar_overall
    }

    pub fn sigma2_bar(&self) -> f64 {
        self.sigma2_bar_overall
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma2_bar_overall.sqrt()
    }

    /// Sum over periods and scenarios of kappa * mu_bar: swaps per km^2 per day
    /// when periods are hours.
    pub fn total_demand(&self) -> f64 {
        (0..self.periods()).map(|z| self.period_mean(z)).sum()
    }

    /// Same sum weighted by a per-scenario price.
    pub fn priced_demand(&self, price: &[f64]) -> f64 {
        (0..self.periods())
            .map(|z| {
                (0..self.scenarios())
                    .map(|n| price[n] * self.kappa[z][n] * self.mu_bar[z][n])
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.mu_bar.iter().flatten().all(|m| *m == 0.0) && self.sigma2_bar.iter().all(|s| *s == 0.0)
    }
}

/// Hourly Beijing profile at swapping-station density `rho_s`.
pub fn baseline_profile_at(rho_s: f64) -> DemandProfile {
    StationDemand::default()
        .to_profile(rho_s)
        .expect("baseline demand is valid")
}

/// Baseline profile at rho_s = 0.04 km^-2.
pub fn baseline_profile() -> DemandProfile {
    baseline_profile_at(0.04)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_shape_and_values() {
        let d = StationDemand::default();
        assert_eq!(d.mean.len(), 24);
        assert_eq!(d.mean[3], 5.68);
        assert_eq!(d.std[3], 3.71);
        assert_eq!(d.mean[9], 14.51);
        assert_eq!(d.std[23], 3.90);
    }

    #[test]
    fn overall_means() {
        let per_station: f64 = (9.0 * 5.68 + 15.0 * 14.51) / 24.0;
        assert!((per_station - 11.198_75).abs() < 1e-12);
        assert!((per_station - 11.199).abs() < 5e-4);
        let p = baseline_profile();
        assert!((p.mu_bar() - 0.04 * per_station).abs() < 1e-12);
        assert!((p.mu_bar() - 0.447_95).abs() < 1e-12);
        assert!((p.mu_bar() - 0.448).abs() < 1e-4);
        assert!((p.period_mean(3) / 0.04 - 5.68).abs() < 1e-12);
    }

    #[test]
    fn aggregation_identity() {
        let p = baseline_profile();
        let mut acc = 0.0;
        for z in 0..p.periods() {
            for n in 0..p.scenarios() {
                acc += p.kappa(z, n) * p.mu_bar_zn(z, n);
            }
        }
        assert!(((acc / 24.0) - p.mu_bar()).abs() <= 1e-12 * p.mu_bar());
        let s2: f64 = (0..24).map(|z| p.sigma2_bar_z(z)).sum::<f64>() / 24.0;
        assert!((s2 - p.sigma2_bar()).abs() <= 1e-12 * s2);
    }

    #[test]
    fn kappa_rows_sum_to_one() {
        let p = baseline_profile();
        for z in 0..24 {
            let s: f64 = (0..2).map(|n| p.kappa(z, n)).sum();
            assert_eq!(s, 1.0);
        }
        assert_eq!(p.kappa(8, 0), 1.0);
        assert_eq!(p.kappa(3, 1), 1.0);
    }

    #[test]
    fn scaling_is_quadratic_in_density() {
        let d = StationDemand::default();
        let p1 = d.to_profile(0.04).unwrap();
        let p5 = d.scaled(5.0).to_profile(0.2).unwrap();
        assert!((p5.mu_bar() / p1.mu_bar() - 25.0).abs() < 1e-12);
        assert!((p5.sigma2_bar() / p1.sigma2_bar() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_kappa() {
        let r = DemandProfile::new(vec![vec![0.5, 0.4]], vec![vec![1.0, 1.0]], vec![1.0]);
        assert!(r.is_err());
    }
}
