//! Event-driven TDMA status-update engine.
//!
//! Sensor `i` owns slot `i` of every round of `N` slots. Its update for round
//! `j` is generated at the slot start `t = (jN + i) T` and decode outcomes are
//! realized at the slot end `t + T`. The primary delivers immediately on
//! success; secondaries forward decoded packets (Co-AP) and, in Soft-Co-AP,
//! quantized soft bits of packets they failed on. Every delivery carries the
//! packet's generation time and lowers the AoI only if it is fresher than what
//! the primary already holds.

mod oracle;
mod outcome;
mod trace;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::backbone::{self, DelayModel, ForwardPayload, PayloadKind};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

pub use oracle::{brute_force_oracle, OracleReport};
pub use outcome::{build_pools, class_of, pool_seed, slot_generation_ms, DecodeProbs, DecodeSource, SlotOutcome};
pub use trace::{emit_trace, ingest_trace, parse_trace, write_trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    SingleAp,
    CoAp,
    SoftCoAp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SingleAp => "single_ap",
            Mode::CoAp => "co_ap",
            Mode::SoftCoAp => "soft_co_ap",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_ap" => Ok(Mode::SingleAp),
            "co_ap" => Ok(Mode::CoAp),
            "soft_co_ap" => Ok(Mode::SoftCoAp),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected single_ap | co_ap | soft_co_ap)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub mode: Mode,
    pub n_sensors: usize,
    pub slot_seconds: f64,
    /// Primary plus secondaries.
    pub n_aps: usize,
    /// Bits per forwarded soft bit (Soft-Co-AP only).
    pub m: u8,
    pub rounds: u64,
    pub warmup_rounds: u64,
    pub decode_source: DecodeSource,
    pub delay_model: DelayModel,
    /// Data bytes per update, used to size backbone payloads.
    pub payload_bytes: u32,
    pub seed: u64,
    pub keep_log: bool,
}

impl SimConfig {
    /// Perfect-channel single-AP defaults: T = 1.2 ms, 10 warmup rounds.
    pub fn new(mode: Mode, n_sensors: usize, rounds: u64) -> Self {
        SimConfig {
            mode,
            n_sensors,
            slot_seconds: 1.2e-3,
            n_aps: 2,
            m: 4,
            rounds,
            warmup_rounds: 10,
            decode_source: DecodeSource::Bernoulli(vec![DecodeProbs::perfect(2)]),
            delay_model: DelayModel::calibrated(),
            payload_bytes: 768,
            seed: 0,
            keep_log: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::config("n_sensors must be at least 1"));
        }
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return Err(Error::config("slot duration must be positive"));
        }
        if self.n_aps == 0 {
            return Err(Error::config("n_aps must be at least 1"));
        }
        if !(1..=8).contains(&self.m) {
            return Err(Error::config(format!("m = {} outside {{1..8}}", self.m)));
        }
        if self.rounds <= self.warmup_rounds {
            return Err(Error::config("rounds must exceed warmup_rounds"));
        }
        if self.payload_bytes == 0 {
            return Err(Error::config("payload_bytes must be positive"));
        }
        self.delay_model.validate()
    }

    pub fn round_seconds(&self) -> f64 {
        self.n_sensors as f64 * self.slot_seconds
    }

    fn slot_time(&self, slot_index: u64) -> f64 {
        slot_index as f64 * self.slot_seconds
    }

    pub fn horizon(&self) -> (f64, f64) {
        let n = self.n_sensors as u64;
        (
            self.slot_time(self.warmup_rounds * n),
            self.slot_time(self.rounds * n),
        )
    }
}

/// How an update reached the primary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Via {
    Primary,
    Forwarded(usize),
    Joint,
}

/// One delivery at the primary, accepted or stale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub time: f64,
    pub sensor: usize,
    pub generation_time: f64,
    pub via: Via,
}

/// Per-sensor AoI bookkeeping over the measurement window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoiSeries {
    /// (delivery time, new last-update generation time) for each accepted update.
    pub updates: Vec<(f64, f64)>,
    /// Area under the AoI curve between consecutive update boundaries.
    pub areas: Vec<f64>,
    /// Length of each of those intervals.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    /// Fraction of measured slots the primary decoded alone.
    pub decode_primary: f64,
    /// Primary or any secondary decoded.
    pub decode_co_ap: f64,
    /// Soft-Co-AP success at this run's m (equals `decode_co_ap` in other modes).
    pub decode_soft: f64,
    /// Mean of all sampled backbone delays, seconds.
    pub mean_delay: Option<f64>,
    pub forwarded: u64,
    pub stale_deliveries: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub per_sensor_avg_aoi: Vec<f64>,
    pub network_avg_aoi: f64,
    pub stats: RunStats,
    pub log: Option<Vec<Delivery>>,
    pub series: Option<Vec<AoiSeries>>,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    sensor: usize,
    ap: usize,
    seq: u64,
    generation_time: f64,
    via: Via,
}

impl Event {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.sensor.cmp(&other.sensor))
            .then(self.ap.cmp(&other.ap))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

struct SensorState {
    last_update: f64,
    last_time: f64,
    integral: f64,
    boundary: f64,
    boundary_area: f64,
    series: Option<AoiSeries>,
}

impl SensorState {
    /// Integrates `t - last_update` over `[from, to]` clipped to the window.
    fn integrate(&mut self, to: f64, window: (f64, f64)) {
        let lo = self.last_time.max(window.0);
        let hi = to.min(window.1);
        if hi > lo {
            let area = (hi - lo) * (0.5 * (lo + hi) - self.last_update);
            self.integral += area;
            self.boundary_area += area;
        }
        self.last_time = to;
    }

    fn deliver(&mut self, time: f64, generation_time: f64, window: (f64, f64)) -> bool {
        self.integrate(time, window);
        if generation_time <= self.last_update {
            return false;
        }
        self.last_update = generation_time;
        if time > window.0 && time <= window.1 {
            if let Some(s) = self.series.as_mut() {
                s.updates.push((time, generation_time));
                s.areas.push(self.boundary_area);
                s.gaps.push(time - self.boundary);
            }
            self.boundary = time;
            self.boundary_area = 0.0;
        }
        true
    }
}

fn forward_payload(kind: PayloadKind, payload_bytes: u32) -> Result<ForwardPayload> {
    backbone::payload_for(kind, payload_bytes)
}

/// Runs one simulation.
pub fn run(config: &SimConfig) -> Result<RunResult> {
    config.validate()?;
    let outcomes = outcome::materialize(
        &config.decode_source,
        config.n_sensors,
        config.n_aps,
        config.rounds,
        config.slot_seconds,
        config.seed,
    )?;
    run_with_outcomes(config, &outcomes)
}

/// Runs one simulation over already materialized slot outcomes
/// (slot order, `round * n_sensors + sensor`).
pub fn run_with_outcomes(config: &SimConfig, outcomes: &[SlotOutcome]) -> Result<RunResult> {
    config.validate()?;
    let n = config.n_sensors;
    let total_slots = config.rounds * n as u64;
    if outcomes.len() as u64 != total_slots {
        return Err(Error::Trace(format!(
            "expected {total_slots} slot outcomes, got {}",
            outcomes.len()
        )));
    }
    let window = config.horizon();
    let decoded_payload = forward_payload(PayloadKind::DecodedPacket, config.payload_bytes)?;
    let soft_payload = forward_payload(PayloadKind::SoftBits(config.m), config.payload_bytes)?;
    let m_idx = config.m as usize - 1;

    let mut sensors: Vec<SensorState> = (0..n)
        .map(|_| SensorState {
            last_update: 0.0,
            last_time: 0.0,
            integral: 0.0,
            boundary: window.0,
            boundary_area: 0.0,
            series: config.keep_log.then(AoiSeries::default),
        })
        .collect();
    let mut log = config.keep_log.then(Vec::new);
    let mut heap: BinaryHeap<Event> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut delay_sum = 0.0;
    let mut forwarded = 0u64;
    let mut stale = 0u64;
    let (mut ok_primary, mut ok_co, mut ok_soft, mut measured) = (0u64, 0u64, 0u64, 0u64);

    let process = |ev: &Event, sensors: &mut Vec<SensorState>, log: &mut Option<Vec<Delivery>>, stale: &mut u64| {
        if ev.time > window.1 {
            return;
        }
        if let Some(l) = log.as_mut() {
            l.push(Delivery {
                time: ev.time,
                sensor: ev.sensor,
                generation_time: ev.generation_time,
                via: ev.via,
            });
        }
        if !sensors[ev.sensor].deliver(ev.time, ev.generation_time, window) {
            *stale += 1;
        }
    };

    for (slot, o) in outcomes.iter().enumerate() {
        let slot = slot as u64;
        let (round, sensor) = (slot / n as u64, (slot % n as u64) as usize);
        if o.round != round || o.sensor != sensor {
            return Err(Error::Trace(format!(
                "outcome {slot} is for round {} sensor {}, expected round {round} sensor {sensor}",
                o.round, o.sensor
            )));
        }
        if o.decoded.len() != config.n_aps {
            return Err(Error::Trace(format!(
                "round {round} sensor {sensor}: {} AP columns, config has {}",
                o.decoded.len(),
                config.n_aps
            )));
        }
        let generated = config.slot_time(slot);
        let slot_end = config.slot_time(slot + 1);
        let slot_event = Event {
            time: slot_end,
            sensor,
            ap: 0,
            seq: 0,
            generation_time: generated,
            via: Via::Primary,
        };
        while heap.peek().is_some_and(|top| top.key_cmp(&slot_event) == Ordering::Less) {
            let ev = heap.pop().expect("peeked");
            process(&ev, &mut sensors, &mut log, &mut stale);
        }

        let primary_ok = o.decoded[0];
        let secondary_ok = o.decoded[1..].iter().any(|d| *d);
        let joint_ok = o.joint[m_idx] == Some(true);
        if round >= config.warmup_rounds {
            measured += 1;
            ok_primary += primary_ok as u64;
            ok_co += (primary_ok || secondary_ok) as u64;
            ok_soft += (primary_ok || secondary_ok || joint_ok) as u64;
        }

        if primary_ok {
            process(&slot_event, &mut sensors, &mut log, &mut stale);
            continue;
        }
        if config.mode == Mode::SingleAp {
            continue;
        }
        let mut soft_ready: Option<(f64, usize)> = None;
        for (ap, &ok) in o.decoded.iter().enumerate().skip(1) {
            let coords = [round, sensor as u64, ap as u64];
            if ok {
                let mut r = rng::stream(config.seed, &[tag::DELAY_DECODED, coords[0], coords[1], coords[2]]);
                let d = config.delay_model.sample(&decoded_payload, &mut r)?;
                delay_sum += d;
                forwarded += 1;
                seq += 1;
                heap.push(Event {
                    time: slot_end + d,
                    sensor,
                    ap,
                    seq,
                    generation_time: generated,
                    via: Via::Forwarded(ap),
                });
            } else if config.mode == Mode::SoftCoAp {
                let mut r = rng::stream(
                    config.seed,
                    &[tag::DELAY_SOFT, coords[0], coords[1], coords[2], u64::from(config.m)],
                );
                let d = config.delay_model.sample(&soft_payload, &mut r)?;
                delay_sum += d;
                forwarded += 1;
                let arrival = slot_end + d;
                // Joint decoding runs once every failed branch has arrived.
                if soft_ready.is_none_or(|(t, _)| arrival >= t) {
                    soft_ready = Some((arrival, ap));
                }
            }
        }
        if let Some((time, ap)) = soft_ready {
            match o.joint[m_idx] {
                Some(true) => {
                    seq += 1;
                    heap.push(Event {
                        time,
                        sensor,
                        ap,
                        seq,
                        generation_time: generated,
                        via: Via::Joint,
                    });
                }
                Some(false) => {}
                None => {
                    return Err(Error::Trace(format!(
                        "round {round} sensor {sensor}: no joint outcome recorded for m = {}",
                        config.m
                    )))
                }
            }
        }
    }
    while let Some(ev) = heap.pop() {
        process(&ev, &mut sensors, &mut log, &mut stale);
    }

    let span = window.1 - window.0;
    let mut per_sensor = Vec::with_capacity(n);
    let mut series = config.keep_log.then(Vec::new);
    for mut s in sensors {
        s.integrate(window.1, window);
        if let Some(mut sr) = s.series.take() {
            sr.areas.push(s.boundary_area);
            sr.gaps.push(window.1 - s.boundary);
            series.as_mut().expect("keep_log").push(sr);
        }
        per_sensor.push(s.integral / span);
    }
    let network = per_sensor.iter().sum::<f64>() / n as f64;
    let frac = |c: u64| c as f64 / measured.max(1) as f64;
    let stats = RunStats {
        decode_primary: frac(ok_primary),
        decode_co_ap: frac(ok_co),
        decode_soft: if config.mode == Mode::SoftCoAp { frac(ok_soft) } else { frac(ok_co) },
        mean_delay: (forwarded > 0).then(|| delay_sum / forwarded as f64),
        forwarded,
        stale_deliveries: stale,
    };
    Ok(RunResult {
        per_sensor_avg_aoi: per_sensor,
        network_avg_aoi: network,
        stats,
        log,
        series,
    })
}

/// Materializes the slot outcomes a config's decode source would produce.
pub fn slot_outcomes(config: &SimConfig) -> Result<Vec<SlotOutcome>> {
    outcome::materialize(
        &config.decode_source,
        config.n_sensors,
        config.n_aps,
        config.rounds,
        config.slot_seconds,
        config.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    fn bernoulli(p: Vec<f64>, joint: f64) -> DecodeSource {
        DecodeSource::Bernoulli(vec![DecodeProbs { ap: p, joint: [joint; 8] }])
    }

    #[test]
    fn perfect_channel_sawtooth() {
        for n in [1usize, 10, 30] {
            let mut c = SimConfig::new(Mode::SingleAp, n, 2000);
            c.n_aps = 1;
            c.decode_source = bernoulli(vec![1.0], 1.0);
            let r = run(&c).unwrap();
            let expected = 1.2e-3 + n as f64 * 1.2e-3 / 2.0;
            assert!(close(r.network_avg_aoi, expected, 1e-9), "{n}: {}", r.network_avg_aoi);
        }
    }

    #[test]
    fn alternating_primary_gives_two_slot_sawtooth() {
        let mut c = SimConfig::new(Mode::SingleAp, 1, 1000);
        c.n_aps = 1;
        let rows: Vec<SlotOutcome> = (0..1000u64)
            .map(|j| SlotOutcome {
                round: j,
                sensor: 0,
                generation_time_ms: slot_generation_ms(j, 0, 1, 1.2e-3),
                decoded: vec![j % 2 == 0],
                joint: [None; 8],
            })
            .collect();
        c.decode_source = DecodeSource::Trace(rows.into());
        let r = run(&c).unwrap();
        assert!(close(r.network_avg_aoi, 2.4e-3, 1e-3), "{}", r.network_avg_aoi);
    }

    #[test]
    fn areas_sum_to_integral() {
        let mut c = SimConfig::new(Mode::SoftCoAp, 3, 300);
        c.decode_source = bernoulli(vec![0.5, 0.6], 0.5);
        c.keep_log = true;
        c.seed = 4;
        let r = run(&c).unwrap();
        let (w0, w1) = c.horizon();
        for (s, series) in r.series.as_ref().unwrap().iter().enumerate() {
            let area: f64 = series.areas.iter().sum();
            let gap: f64 = series.gaps.iter().sum();
            assert!(close(gap, w1 - w0, 1e-9));
            assert!(close(area / gap, r.per_sensor_avg_aoi[s], 1e-9));
            assert!(series.updates.windows(2).all(|w| w[0].1 < w[1].1));
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = SimConfig::new(Mode::SingleAp, 0, 100);
        assert!(run(&c).is_err());
        c.n_sensors = 1;
        c.rounds = 10;
        assert!(run(&c).is_err());
        c.rounds = 100;
        c.m = 9;
        assert!(run(&c).is_err());
    }

    #[test]
    fn stale_forwarding_is_a_no_op() {
        let mut single = SimConfig::new(Mode::SingleAp, 4, 400);
        single.decode_source = bernoulli(vec![0.6, 0.8], 0.7);
        single.seed = 12;
        let mut co = single.clone();
        co.mode = Mode::CoAp;
        co.delay_model = DelayModel::Constant(10.0);
        let mut soft = co.clone();
        soft.mode = Mode::SoftCoAp;
        let a = run(&single).unwrap();
        assert_eq!(a.per_sensor_avg_aoi, run(&co).unwrap().per_sensor_avg_aoi);
        assert_eq!(a.per_sensor_avg_aoi, run(&soft).unwrap().per_sensor_avg_aoi);
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let mut c = SimConfig::new(Mode::SoftCoAp, 5, 500);
        c.decode_source = bernoulli(vec![0.5, 0.6], 0.4);
        c.seed = 99;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.per_sensor_avg_aoi, b.per_sensor_avg_aoi);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn missing_joint_outcome_in_soft_mode_is_an_error() {
        let mut c = SimConfig::new(Mode::SoftCoAp, 1, 20);
        let rows: Vec<SlotOutcome> = (0..20u64)
            .map(|j| SlotOutcome {
                round: j,
                sensor: 0,
                generation_time_ms: slot_generation_ms(j, 0, 1, 1.2e-3),
                decoded: vec![false, false],
                joint: [None; 8],
            })
            .collect();
        c.decode_source = DecodeSource::Trace(rows.into());
        assert!(matches!(run(&c), Err(Error::Trace(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cooperation_never_hurts(
            seed in any::<u64>(),
            n in 2usize..8,
            p1 in 0.0f64..1.0,
            p2 in 0.0f64..1.0,
            q in 0.0f64..1.0,
            delay_slots in 0.1f64..1.0,
        ) {
            let mut single = SimConfig::new(Mode::SingleAp, n, 200);
            single.decode_source = bernoulli(vec![p1, p2], q);
            single.seed = seed;
            // Identical constant delays below (N - 1) T.
            single.delay_model = DelayModel::Constant(delay_slots * (n as f64 - 1.0) * single.slot_seconds);
            let mut co = single.clone();
            co.mode = Mode::CoAp;
            let mut soft = single.clone();
            soft.mode = Mode::SoftCoAp;
            let a = run(&single).unwrap();
            let b = run(&co).unwrap();
            let c = run(&soft).unwrap();
            for s in 0..n {
                prop_assert!(b.per_sensor_avg_aoi[s] <= a.per_sensor_avg_aoi[s] + 1e-12);
                prop_assert!(c.per_sensor_avg_aoi[s] <= b.per_sensor_avg_aoi[s] + 1e-12);
            }
        }

        #[test]
        fn aoi_never_below_perfect_floor(seed in any::<u64>(), n in 1usize..6, p in 0.0f64..1.0) {
            let mut c = SimConfig::new(Mode::CoAp, n, 150);
            c.decode_source = bernoulli(vec![p, p], 0.5);
            c.seed = seed;
            let r = run(&c).unwrap();
            let floor = c.slot_seconds + c.round_seconds() / 2.0;
            for a in r.per_sensor_avg_aoi {
                prop_assert!(a >= floor * (1.0 - 1e-9));
            }
        }
    }
}
