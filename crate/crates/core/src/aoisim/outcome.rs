use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linklevel::{self, PacketOutcome, PhyParams, PhyPool};
use crate::par::Execution;
use crate::rng::{self, tag};

/// Decode results for one TDMA slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub round: u64,
    pub sensor: usize,
    pub generation_time_ms: f64,
    /// Per AP, index 0 is the primary.
    pub decoded: Vec<bool>,
    /// Joint-decode result per m (index m - 1); `None` when not attempted.
    pub joint: [Option<bool>; 8],
}

impl SlotOutcome {
    fn from_packet(round: u64, sensor: usize, gen_ms: f64, p: &PacketOutcome) -> Self {
        SlotOutcome {
            round,
            sensor,
            generation_time_ms: gen_ms,
            decoded: p.decoded.clone(),
            joint: p.joint,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.decoded.is_empty() {
            return Err(Error::Trace(format!(
                "round {} sensor {}: no AP columns",
                self.round, self.sensor
            )));
        }
        let has_branch = !self.decoded[0] && self.decoded[1..].iter().any(|d| !d);
        if !has_branch && self.joint.contains(&Some(true)) {
            return Err(Error::Trace(format!(
                "round {} sensor {}: joint success without any soft-bit branch",
                self.round, self.sensor
            )));
        }
        Ok(())
    }
}

/// Decode probabilities for one sensor class.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeProbs {
    /// Per AP, index 0 is the primary.
    pub ap: Vec<f64>,
    /// Joint success per m, conditioned on the primary and a secondary failing.
    pub joint: [f64; 8],
}

impl DecodeProbs {
    pub fn perfect(n_aps: usize) -> Self {
        DecodeProbs {
            ap: vec![1.0; n_aps],
            joint: [1.0; 8],
        }
    }

    pub fn validate(&self, n_aps: usize) -> Result<()> {
        if self.ap.len() != n_aps {
            return Err(Error::config(format!(
                "decode probabilities list {} APs, config has {n_aps}",
                self.ap.len()
            )));
        }
        for p in self.ap.iter().chain(&self.joint) {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::config(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum DecodeSource {
    /// Independent draws per (sensor class, AP); sensors are split into
    /// contiguous equal blocks, one per class.
    Bernoulli(Vec<DecodeProbs>),
    /// Recorded slot outcomes covering every (round, sensor) of the run.
    Trace(Arc<Vec<SlotOutcome>>),
    /// Link-level Monte Carlo: one pool per SNR class (per-AP SNRs), resampled per slot.
    MonteCarlo {
        phy: PhyParams,
        classes: Vec<Vec<f64>>,
        n_packets: usize,
    },
    /// Prebuilt pools, one per class.
    Pools(Arc<Vec<PhyPool>>),
}

/// Sensor `i` of `n` belongs to class `i * classes / n`.
pub fn class_of(sensor: usize, n_sensors: usize, n_classes: usize) -> usize {
    sensor * n_classes / n_sensors.max(1)
}

pub fn slot_generation_ms(round: u64, sensor: usize, n_sensors: usize, slot_seconds: f64) -> f64 {
    (round as f64 * n_sensors as f64 + sensor as f64) * slot_seconds * 1e3
}

pub fn pool_seed(seed: u64, class: usize) -> u64 {
    rng::derive(seed, &[tag::POOL, class as u64])
}

/// Builds one pool per class.
pub fn build_pools(
    phy: &PhyParams,
    classes: &[Vec<f64>],
    n_packets: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PhyPool>> {
    classes
        .iter()
        .enumerate()
        .map(|(c, snr)| linklevel::build_pool(phy, snr, n_packets, pool_seed(seed, c), exec))
        .collect()
}

/// Materializes the outcome of every slot, in slot order (`round * n + sensor`).
pub(crate) fn materialize(
    source: &DecodeSource,
    n_sensors: usize,
    n_aps: usize,
    rounds: u64,
    slot_seconds: f64,
    seed: u64,
) -> Result<Vec<SlotOutcome>> {
    let total = rounds as usize * n_sensors;
    let gen = |j: u64, i: usize| slot_generation_ms(j, i, n_sensors, slot_seconds);
    let slots = (0..rounds).flat_map(|j| (0..n_sensors).map(move |i| (j, i)));
    match source {
        DecodeSource::Bernoulli(classes) => {
            if classes.is_empty() {
                return Err(Error::config("bernoulli source needs at least one class"));
            }
            for c in classes {
                c.validate(n_aps)?;
            }
            Ok(slots
                .map(|(j, i)| {
                    let probs = &classes[class_of(i, n_sensors, classes.len())];
                    let decoded: Vec<bool> = (0..n_aps)
                        .map(|r| rng::unit(seed, &[tag::DECODE, j, i as u64, r as u64]) < probs.ap[r])
                        .collect();
                    let mut joint = [None; 8];
                    if !decoded[0] && decoded[1..].iter().any(|d| !d) {
                        let u = rng::unit(seed, &[tag::JOINT, j, i as u64]);
                        for (slot, q) in joint.iter_mut().zip(probs.joint) {
                            *slot = Some(u < q);
                        }
                    }
                    SlotOutcome {
                        round: j,
                        sensor: i,
                        generation_time_ms: gen(j, i),
                        decoded,
                        joint,
                    }
                })
                .collect())
        }
        DecodeSource::Trace(rows) => {
            let mut out: Vec<Option<SlotOutcome>> = vec![None; total];
            for row in rows.iter() {
                if row.round >= rounds || row.sensor >= n_sensors {
                    continue;
                }
                if row.decoded.len() != n_aps {
                    return Err(Error::Trace(format!(
                        "round {} sensor {}: trace has {} AP columns, config has {n_aps}",
                        row.round,
                        row.sensor,
                        row.decoded.len()
                    )));
                }
                let expected = gen(row.round, row.sensor);
                if (row.generation_time_ms - expected).abs() > 1e-6 * expected.abs().max(1.0) {
                    return Err(Error::Trace(format!(
                        "round {} sensor {}: generation time {} ms does not match the schedule ({expected} ms)",
                        row.round, row.sensor, row.generation_time_ms
                    )));
                }
                row.check()?;
                out[row.round as usize * n_sensors + row.sensor] = Some(row.clone());
            }
            out.into_iter()
                .enumerate()
                .map(|(k, o)| {
                    o.ok_or_else(|| {
                        Error::Trace(format!(
                            "trace shorter than the horizon: no row for round {} sensor {}",
                            k / n_sensors,
                            k % n_sensors
                        ))
                    })
                })
                .collect()
        }
        DecodeSource::MonteCarlo {
            phy,
            classes,
            n_packets,
        } => {
            let pools = build_pools(phy, classes, *n_packets, seed, Execution::Parallel)?;
            resample(&pools, n_sensors, n_aps, rounds, slot_seconds, seed)
        }
        DecodeSource::Pools(pools) => resample(pools, n_sensors, n_aps, rounds, slot_seconds, seed),
    }
}

fn resample(
    pools: &[PhyPool],
    n_sensors: usize,
    n_aps: usize,
    rounds: u64,
    slot_seconds: f64,
    seed: u64,
) -> Result<Vec<SlotOutcome>> {
    if pools.is_empty() || pools.iter().any(|p| p.outcomes.is_empty()) {
        return Err(Error::config("every SNR class needs a nonempty outcome pool"));
    }
    if let Some(p) = pools.iter().find(|p| p.snr_db.len() != n_aps) {
        return Err(Error::config(format!(
            "pool simulated {} APs, config has {n_aps}",
            p.snr_db.len()
        )));
    }
    let mut out = Vec::with_capacity(rounds as usize * n_sensors);
    for j in 0..rounds {
        for i in 0..n_sensors {
            let pool = &pools[class_of(i, n_sensors, pools.len())];
            let pick = rng::derive(seed, &[tag::POOL_PICK, j, i as u64]) % pool.outcomes.len() as u64;
            out.push(SlotOutcome::from_packet(
                j,
                i,
                slot_generation_ms(j, i, n_sensors, slot_seconds),
                &pool.outcomes[pick as usize],
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_blocks_are_contiguous() {
        let classes: Vec<usize> = (0..10).map(|i| class_of(i, 10, 2)).collect();
        assert_eq!(classes, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(class_of(0, 1, 3), 0);
    }

    #[test]
    fn bernoulli_rates() {
        let probs = DecodeProbs {
            ap: vec![0.7, 0.4],
            joint: [0.5; 8],
        };
        let rows = materialize(&DecodeSource::Bernoulli(vec![probs]), 4, 2, 5000, 1e-3, 3).unwrap();
        let n = rows.len() as f64;
        let p0 = rows.iter().filter(|r| r.decoded[0]).count() as f64 / n;
        let p1 = rows.iter().filter(|r| r.decoded[1]).count() as f64 / n;
        assert!((p0 - 0.7).abs() < 0.01);
        assert!((p1 - 0.4).abs() < 0.01);
        for r in &rows {
            r.check().unwrap();
            assert_eq!(r.joint[0].is_some(), !r.decoded[0] && !r.decoded[1]);
        }
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        let probs = DecodeProbs {
            ap: vec![1.5],
            joint: [0.0; 8],
        };
        assert!(materialize(&DecodeSource::Bernoulli(vec![probs]), 1, 1, 1, 1e-3, 0).is_err());
        let wrong_len = DecodeProbs::perfect(1);
        assert!(materialize(&DecodeSource::Bernoulli(vec![wrong_len]), 1, 2, 1, 1e-3, 0).is_err());
    }

    #[test]
    fn inconsistent_joint_success_is_an_error() {
        let row = SlotOutcome {
            round: 0,
            sensor: 0,
            generation_time_ms: 0.0,
            decoded: vec![false, true],
            joint: [Some(true); 8],
        };
        assert!(row.check().is_err());
    }

    #[test]
    fn short_trace_is_an_error() {
        let rows = materialize(&DecodeSource::Bernoulli(vec![DecodeProbs::perfect(2)]), 2, 2, 3, 1e-3, 0).unwrap();
        let short: Vec<SlotOutcome> = rows[..5].to_vec();
        let err = materialize(&DecodeSource::Trace(Arc::new(short)), 2, 2, 3, 1e-3, 0).unwrap_err();
        assert!(matches!(err, Error::Trace(_)));
        let full = materialize(&DecodeSource::Trace(Arc::new(rows.clone())), 2, 2, 3, 1e-3, 0).unwrap();
        assert_eq!(full, rows);
    }
}
