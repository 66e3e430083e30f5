//! Batch-means accumulators.

use serde::Serialize;

/// Point estimate with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// |mean - target| in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error > 0.0 {
            (self.mean - target).abs() / self.std_error
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum2: f64,
}

impl Moments {
    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn var(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum2 - self.n * m * m) / (self.n - 1.0)).max(0.0)
    }
}

/// Observations split into consecutive batches; the spread of batch
/// statistics gives the standard error despite serial correlation.
#[derive(Debug, Clone)]
pub struct BatchAcc {
    batches: Vec<Moments>,
}

impl BatchAcc {
    pub fn new(batches: usize) -> Self {
        BatchAcc {
            batches: vec![Moments::default(); batches.max(2)],
        }
    }

    pub fn push(&mut self, batch: usize, x: f64) {
        let b = &mut self.batches[batch];
        b.n += 1.0;
        b.sum += x;
        b.sum2 += x * x;
    }

    pub fn count(&self) -> f64 {
        self.batches.iter().map(|b| b.n).sum()
    }

    fn across(&self, stat: impl Fn(&Moments) -> f64) -> Estimate {
        let vals: Vec<f64> = self.batches.iter().filter(|b| b.n > 0.0).map(stat).collect();
        let k = vals.len() as f64;
        if k == 0.0 {
            return Estimate {
                mean: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let m = vals.iter().sum::<f64>() / k;
        let se = if k > 1.0 {
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            f64::NAN
        };
        Estimate { mean: m, std_error: se }
    }

    /// Overall mean, SE from batch means.
    pub fn mean(&self) -> Estimate {
        let total: Moments = self.batches.iter().fold(Moments::default(), |a, b| Moments {
            n: a.n + b.n,
            sum: a.sum + b.sum,
            sum2: a.sum2 + b.sum2,
        });
        let se = self.across(Moments::mean).std_error;
        Estimate {
            mean: if total.n > 0.0 { total.mean() } else { f64::NAN },
            std_error: se,
        }
    }

    /// Average within-batch variance, SE from its spread across batches.
    pub fn variance(&self) -> Estimate {
        self.across(Moments::var)
    }
}
