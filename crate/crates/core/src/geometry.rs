//! Diamond-shaped (L1) service districts around charging stations.
//!
//! A district of area 1/rho_c is a rotated square centred on its charging
//! station; the mean Manhattan distance from a uniformly placed swapping
//! station to the centre is sqrt(2) / (3 sqrt(rho_c)).

use crate::error::{check_positive, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistrictGeometry {
    pub rho_c: f64,
    pub truck_speed: f64,
}

impl DistrictGeometry {
    pub fn new(rho_c: f64, truck_speed: f64) -> Result<Self> {
        check_positive("rho_c", rho_c)?;
        check_positive("q_truck", truck_speed)?;
        Ok(DistrictGeometry { rho_c, truck_speed })
    }

    pub fn distance(&self) -> f64 {
        mean_distance(self.rho_c)
    }

    pub fn travel_time(&self) -> f64 {
        self.distance() / self.truck_speed
    }
}

// Unchecked closed forms, used in the optimizer's inner loop.
#[inline]
pub(crate) fn mean_distance(rho_c: f64) -> f64 {
    std::f64::consts::SQRT_2 / (3.0 * rho_c.sqrt())
}

#[inline]
pub(crate) fn travel_time(rho_c: f64, truck_speed: f64) -> f64 {
    mean_distance(rho_c) / truck_speed
}

/// Average one-way truck distance (km).
pub fn avg_one_way_distance(rho_c: f64) -> Result<f64> {
    check_positive("rho_c", rho_c)?;
    Ok(mean_distance(rho_c))
}

/// One-way travel time T^T (h).
pub fn one_way_travel_time(rho_c: f64, truck_speed: f64) -> Result<f64> {
    Ok(DistrictGeometry::new(rho_c, truck_speed)?.travel_time())
}

/// Transport cost of one one-way trip ($).
pub fn transport_cost_per_one_way(rho_c: f64, cost_per_km: f64) -> Result<f64> {
    Ok(cost_per_km * avg_one_way_distance(rho_c)?)
}
