use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Error)]
pub enum ModelError {
    /// A parameter violates its documented domain. `key` is the config key.
    #[error("{key} {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("data error: {0}")]
    Data(String),

    /// In-transit probability T^T·mu_z / (rho_s·Q) exceeded one.
    #[error("in-transit probability {probability:.6} exceeds 1 in period {period} (T^T*mu_z = {expected:.6} > rho_s*Q = {bound:.6})")]
    InTransitBound {
        period: usize,
        probability: f64,
        expected: f64,
        bound: f64,
    },

    #[error("no feasible (rho_c, Q) in the search region: {0}")]
    Infeasible(String),

    #[error("decentralized stock {value:.6} is below the service-level minimum {minimum:.6}")]
    StockBelowMinimum { value: f64, minimum: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParam {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable category used by the CLI on stderr.
    pub fn category(&self) -> &'static str {
        match self {
            ModelError::InvalidParam { .. } => "invalid_param",
            ModelError::Parse(_) => "parse",
            ModelError::Data(_) => "data",
            ModelError::InTransitBound { .. } => "in_transit_bound",
            ModelError::Infeasible(_) => "infeasible",
            ModelError::StockBelowMinimum { .. } => "stock_below_minimum",
            ModelError::Io(_) => "io",
        }
    }
}

pub(crate) fn check_probability(key: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(ModelError::param(key, "out of (0,1)"))
    }
}

pub(crate) fn check_positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::param(key, format!("must be positive and finite (got {v})")))
    }
}
