//! Per-station swap demand over one time step.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson, StandardNormal};
use swapgrid::{DemandProfile, SystemParams};

use crate::{DemandMode, DemandProcess};

#[derive(Debug, Clone, Copy)]
struct Rate {
    mu: f64,
    sigma2: f64,
}

/// Draws the demand of one swapping station in one step of length `dt`.
#[derive(Debug, Clone)]
pub(crate) struct DemandSampler {
    rates: Vec<Rate>,
    dt: f64,
    process: DemandProcess,
}

impl DemandSampler {
    pub fn new(
        params: &SystemParams,
        profile: &DemandProfile,
        mode: DemandMode,
        process: DemandProcess,
        dt: f64,
    ) -> Self {
        let per_station = |mu_bar: f64, s2_bar: f64| Rate {
            mu: mu_bar / params.rho_s,
            sigma2: s2_bar / params.rho_s,
        };
        let rates = match mode {
            DemandMode::Stationary => vec![per_station(profile.mu_bar(), profile.sigma2_bar())],
            DemandMode::TimeVarying => (0..profile.periods())
                .map(|z| per_station(profile.period_mean(z), profile.sigma2_bar_z(z)))
                .collect(),
        };
        DemandSampler { rates, dt, process }
    }

    pub fn period(&self, t_hours: f64) -> usize {
        (t_hours.floor() as usize) % self.rates.len()
    }

    /// Mean demand rate per station, averaged over periods.
    #[cfg(test)]
    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().map(|r| r.mu).sum::<f64>() / self.rates.len() as f64
    }

    pub fn sample<R: Rng>(&self, t_hours: f64, rng: &mut R) -> f64 {
        let r = self.rates[self.period(t_hours)];
        match self.process {
            DemandProcess::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                r.mu * self.dt + (r.sigma2 * self.dt).sqrt() * z
            }
            DemandProcess::CompoundPoisson => {
                if r.mu <= 0.0 {
                    return 0.0;
                }
                // Geometric batches on {1, 2, ...} with mean m give variance
                // rate mu (2m - 1).
                let m = ((r.sigma2 / r.mu + 1.0) / 2.0).max(1.0);
                let arrivals = Poisson::new(r.mu / m * self.dt).map(|p| p.sample(rng)).unwrap_or(0.0);
                if m == 1.0 {
                    return arrivals;
                }
                let batch = Geometric::new(1.0 / m).expect("valid batch probability");
                (0..arrivals as u64).map(|_| 1.0 + batch.sample(rng) as f64).sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(s: &DemandSampler, n: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..n).map(|_| s.sample(0.5, &mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    #[test]
    fn both_processes_match_rates() {
        let params = SystemParams::default();
        let prof = DemandProfile::stationary(0.04 * 10.0, 0.04 * 25.0).unwrap();
        for process in [DemandProcess::Normal, DemandProcess::CompoundPoisson] {
            let s = DemandSampler::new(&params, &prof, DemandMode::Stationary, process, 0.5);
            let (m, v) = moments(&s, 200_000);
            assert!((m - 5.0).abs() < 0.05, "{process:?} mean {m}");
            assert!((v - 12.5).abs() < 0.3, "{process:?} var {v}");
        }
    }

    #[test]
    fn periods_wrap_daily() {
        let params = SystemParams::default();
        let prof = swapgrid::baseline_profile();
        let s = DemandSampler::new(&params, &prof, DemandMode::TimeVarying, DemandProcess::Normal, 0.1);
        assert_eq!(s.period(25.3), 1);
        assert!((s.mean_rate() - 11.198_75).abs() < 1e-9);
    }
}
