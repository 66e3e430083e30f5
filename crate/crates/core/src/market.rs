//! AGC and clearing-price CSV ingestion, plus the bundled synthetic day.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;

use crate::error::{ModelError, Result};
use crate::regulation::{AgcTrace, RegulationMarket};

/// One synthetic day of 4 s AGC samples (`timestamp,signal`).
pub const SAMPLE_AGC_CSV: &str = include_str!("../data/sample_agc.csv");
/// Hourly clearing prices for the same day (`period,price_usd_per_mw`).
pub const SAMPLE_PRICES_CSV: &str = include_str!("../data/sample_prices.csv");

const PERIOD_SECONDS: f64 = 3600.0;

fn parse_seconds(raw: &str) -> Result<f64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc().timestamp() as f64 + f64::from(t.and_utc().timestamp_subsec_millis()) / 1e3);
        }
    }
    Err(ModelError::Parse(format!("unrecognized timestamp '{s}'")))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| ModelError::Parse(format!("missing column '{name}'")))
}

/// Group samples into hourly periods counted from the hour containing the
/// first timestamp. Timestamps are either `YYYY-MM-DD HH:MM:SS` or seconds.
pub fn parse_agc_csv(text: &str) -> Result<Vec<AgcTrace>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| ModelError::Parse(e.to_string()))?.clone();
    let (ti, si) = (column(&headers, "timestamp")?, column(&headers, "signal")?);
    let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut origin = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ModelError::Parse(e.to_string()))?;
        let t = parse_seconds(rec.get(ti).unwrap_or(""))?;
        let g: f64 = rec
            .get(si)
            .unwrap_or("")
            .parse()
            .map_err(|_| ModelError::Parse(format!("row {}: bad signal value", line + 2)))?;
        let t0 = *origin.get_or_insert((t / PERIOD_SECONDS).floor() * PERIOD_SECONDS);
        if t < t0 {
            return Err(ModelError::Data(format!("row {}: timestamp precedes first period", line + 2)));
        }
        let z = ((t - t0) / PERIOD_SECONDS).floor() as usize;
        groups.entry(z).or_default().push((t, g));
    }
    if groups.is_empty() {
        return Err(ModelError::Data("AGC file has no samples".into()));
    }
    groups
        .into_iter()
        .map(|(z, mut v)| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            AgcTrace::new(z, v.into_iter().map(|(_, g)| g).collect())
        })
        .collect()
}

/// Prices indexed by period; periods must be 0..Z without gaps.
pub fn parse_price_csv(text: &str) -> Result<Vec<f64>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| ModelError::Parse(e.to_string()))?.clone();
    let (pi, vi) = (column(&headers, "period")?, column(&headers, "price_usd_per_mw")?);
    let mut prices = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ModelError::Parse(e.to_string()))?;
        let bad = |what: &str| ModelError::Parse(format!("row {}: bad {what}", line + 2));
        let z: usize = rec.get(pi).unwrap_or("").parse().map_err(|_| bad("period"))?;
        let p: f64 = rec.get(vi).unwrap_or("").parse().map_err(|_| bad("price"))?;
        if prices.insert(z, p).is_some() {
            return Err(ModelError::Data(format!("duplicate price for period {z}")));
        }
    }
    for (i, z) in prices.keys().enumerate() {
        if i != *z {
            return Err(ModelError::Data(format!("price for period {i} missing")));
        }
    }
    Ok(prices.into_values().collect())
}

pub fn load_market(agc_csv: &str, price_csv: &str, theta: f64) -> Result<RegulationMarket> {
    RegulationMarket::new(parse_agc_csv(agc_csv)?, parse_price_csv(price_csv)?, theta)
}

/// The bundled synthetic day at performance level `theta`.
pub fn sample_market(theta: f64) -> RegulationMarket {
    load_market(SAMPLE_AGC_CSV, SAMPLE_PRICES_CSV, theta).expect("bundled market data is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_day_shape() {
        let traces = parse_agc_csv(SAMPLE_AGC_CSV).unwrap();
        assert_eq!(traces.len(), 24);
        assert!(traces.iter().all(|t| t.samples().len() == 900));
        let prices = parse_price_csv(SAMPLE_PRICES_CSV).unwrap();
        assert_eq!(prices.len(), 24);
        assert!(prices.iter().all(|p| (8.0..=45.0).contains(p)));
        let m = sample_market(0.75);
        assert!(m.eta().iter().all(|e| *e > 0.0 && *e < 1.0));
    }

    #[test]
    fn numeric_timestamps_and_grouping() {
        let text = "timestamp,signal\n0,0.0\n1800,0.5\n3600,0.5\n3700,-0.5\n";
        let t = parse_agc_csv(text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].samples(), &[0.0, 0.5]);
        assert_eq!(t[1].period, 1);
    }

    #[test]
    fn datetime_timestamps() {
        let text = "timestamp,signal\n2024-08-31 05:10:00,0.1\n2024-08-31 05:59:59,0.2\n2024-08-31 06:00:00,0.3\n2024-08-31 06:30:00,0.1\n";
        let t = parse_agc_csv(text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].samples(), &[0.3, 0.1]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_agc_csv("time,signal\n0,0.1\n").is_err());
        assert!(parse_agc_csv("timestamp,signal\nyesterday,0.1\n").is_err());
        assert!(parse_agc_csv("timestamp,signal\n0,2.0\n1,0.0\n").is_err());
        assert!(parse_price_csv("period,price_usd_per_mw\n0,10\n2,11\n").is_err());
        assert!(parse_price_csv("period,price_usd_per_mw\n0,10\n0,11\n").is_err());
        assert!(parse_price_csv("period,price\n0,10\n").is_err());
    }
}
