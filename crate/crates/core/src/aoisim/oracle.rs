use super::{run, Delivery, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub engine_per_sensor: Vec<f64>,
    pub oracle_per_sensor: Vec<f64>,
    pub engine_network: f64,
    pub oracle_network: f64,
}

impl OracleReport {
    pub fn max_relative_error(&self) -> f64 {
        self.engine_per_sensor
            .iter()
            .zip(&self.oracle_per_sensor)
            .map(|(e, o)| (e - o).abs() / e.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Re-derives the average AoI by stepping time on a uniform grid of width
/// `step` and evaluating `t - U(t)` at every cell midpoint, where `U(t)` is the
/// largest generation time among deliveries logged at or before `t`.
///
/// Limited to small instances: at most 3 sensors, 100 rounds, `step <= T / 1000`.
pub fn brute_force_oracle(config: &SimConfig, step: f64) -> Result<OracleReport> {
    if config.n_sensors > 3 || config.rounds > 100 {
        return Err(Error::invalid("oracle is limited to N <= 3 and rounds <= 100"));
    }
    if !(step > 0.0 && step <= config.slot_seconds / 1000.0) {
        return Err(Error::invalid("oracle step must be in (0, T/1000]"));
    }
    let mut cfg = config.clone();
    cfg.keep_log = true;
    let engine = run(&cfg)?;
    let log = engine.log.as_ref().expect("log requested");
    let (start, end) = cfg.horizon();
    let cells = ((end - start) / step).round() as u64;
    let dt = (end - start) / cells as f64;

    let mut oracle = Vec::with_capacity(cfg.n_sensors);
    for sensor in 0..cfg.n_sensors {
        let mut deliveries: Vec<&Delivery> = log.iter().filter(|d| d.sensor == sensor).collect();
        deliveries.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut next = 0;
        let mut freshest = 0.0f64;
        let mut sum = 0.0;
        for k in 0..cells {
            let t = start + (k as f64 + 0.5) * dt;
            while next < deliveries.len() && deliveries[next].time <= t {
                freshest = freshest.max(deliveries[next].generation_time);
                next += 1;
            }
            sum += (t - freshest) * dt;
        }
        oracle.push(sum / (end - start));
    }
    let oracle_network = oracle.iter().sum::<f64>() / oracle.len() as f64;
    Ok(OracleReport {
        engine_network: engine.network_avg_aoi,
        engine_per_sensor: engine.per_sensor_avg_aoi,
        oracle_per_sensor: oracle,
        oracle_network,
    })
}
