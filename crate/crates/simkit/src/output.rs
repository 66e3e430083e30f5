use std::io::Write;

use crate::{Estimate, Result, SimError, SimStats};

/// Long format: `metric,period,value,std_error`; `period` is empty for
/// whole-run statistics.
pub fn write_stats_csv<W: Write>(stats: &SimStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| SimError::Io(std::io::Error::other(e.to_string()));
    w.write_record(["metric", "period", "value", "std_error"]).map_err(err)?;
    let mut put = |metric: &str, period: Option<usize>, value: f64, se: Option<f64>| {
        w.write_record([
            metric.to_string(),
            period.map(|p| p.to_string()).unwrap_or_default(),
            value.to_string(),
            se.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(err)
    };
    let est = |e: &Option<Estimate>| e.map(|e| (e.mean, e.std_error));
    for (name, e) in [
        ("swap_stockout", est(&stats.swap_stockout)),
        ("order_overshoot", est(&stats.order_overshoot)),
        ("charge_stockout", est(&stats.charge_stockout)),
        ("deficit_mean", est(&stats.deficit_mean)),
        ("deficit_var", est(&stats.deficit_var)),
        ("decentral_stockout", est(&stats.decentral_stockout)),
        ("avg_capacity", est(&stats.avg_capacity)),
    ] {
        if let Some((v, se)) = e {
            put(name, None, v, Some(se))?;
        }
    }
    put("swap_cycles", None, stats.swap_cycles as f64, None)?;
    put("stations", None, stats.stations as f64, None)?;
    put("rho_c", None, stats.rho_c, None)?;
    put("travel_time", None, stats.travel_time, None)?;
    put("charge_time", None, stats.charge_time, None)?;
    put("dt", None, stats.dt, None)?;
    put("conservation_error", None, stats.conservation_error, None)?;
    for m in &stats.in_transit {
        put("in_transit_mean", Some(m.period), m.mean.mean, Some(m.mean.std_error))?;
        put("in_transit_var", Some(m.period), m.var.mean, Some(m.var.std_error))?;
        put("in_transit_stated_var", Some(m.period), m.stated_var, None)?;
        put("in_transit_consistent_var", Some(m.period), m.consistent_var, None)?;
        put("in_transit_independent_var", Some(m.period), m.independent_var, None)?;
    }
    for (z, c) in stats.capacity_by_period.iter().enumerate() {
        put("capacity", Some(z), *c, None)?;
    }
    w.flush()?;
    Ok(())
}
