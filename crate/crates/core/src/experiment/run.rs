use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;

use super::output::{fmt_num, ExperimentOutput};
use super::{Curve, DecodeSpec, ExperimentSpec, Point};
use crate::aoisim::{
    self, brute_force_oracle, class_of, write_trace, DecodeProbs, DecodeSource, Mode, OracleReport, RunStats,
    SimConfig, SlotOutcome,
};
use crate::backbone::DelayModel;
use crate::error::{Error, Result};
use crate::linklevel::{self, PacketOutcome, PhyParams, PhyPool, ProbabilitySummary};
use crate::par::{self, Execution};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub curve: Curve,
    pub network_avg_aoi: f64,
    pub per_sensor_avg_aoi: Vec<f64>,
    pub stats: RunStats,
}

/// Results of one (sweep point, replication) job.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub point: Point,
    pub replication: u32,
    pub seed: u64,
    pub curves: Vec<CurveResult>,
}

/// Runs every (point, replication) job of a spec. Jobs run in parallel under
/// `exec`; the output does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentOutput> {
    spec.check()?;
    par::with_workers(spec.workers, || {
        let delay = spec.delay.build()?;
        let points = spec.points();
        let curves = spec.curves();
        let sources = point_sources(spec, &points, exec)?;
        let jobs: Vec<(usize, u32)> = (0..points.len())
            .flat_map(|p| (0..spec.replications).map(move |r| (p, r)))
            .collect();
        let rows = par::map_slice(exec, &jobs, |&(p, r)| {
            run_job(spec, &points[p], &sources[p], &curves, &delay, r)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentOutput {
            spec: spec.clone(),
            curves,
            rows,
        })
    })
}

fn sim_config(spec: &ExperimentSpec, point: &Point, source: &DecodeSource, delay: &DelayModel, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(Mode::SingleAp, point.n_sensors, spec.system.rounds);
    cfg.slot_seconds = spec.system.slot_seconds;
    cfg.n_aps = point.n_aps;
    cfg.m = point.m[0];
    cfg.warmup_rounds = spec.system.warmup_rounds;
    cfg.decode_source = source.clone();
    cfg.delay_model = delay.clone();
    cfg.payload_bytes = spec.system.payload_bytes;
    cfg.seed = seed;
    cfg
}

fn run_job(
    spec: &ExperimentSpec,
    point: &Point,
    source: &DecodeSource,
    curves: &[Curve],
    delay: &DelayModel,
    replication: u32,
) -> Result<ResultRow> {
    let seed = rng::replication_seed(spec.seed, u64::from(replication));
    let mut cfg = sim_config(spec, point, source, delay, seed);
    let outcomes = aoisim::slot_outcomes(&cfg)?;
    let mut results = Vec::with_capacity(curves.len());
    for curve in curves {
        cfg.mode = curve.mode;
        cfg.m = curve.m.unwrap_or(point.m[0]);
        let r = aoisim::run_with_outcomes(&cfg, &outcomes)?;
        results.push(CurveResult {
            curve: *curve,
            network_avg_aoi: r.network_avg_aoi,
            per_sensor_avg_aoi: r.per_sensor_avg_aoi,
            stats: r.stats,
        });
    }
    Ok(ResultRow {
        point: point.clone(),
        replication,
        seed,
        curves: results,
    })
}

fn pool_params(spec: &ExperimentSpec) -> PhyParams {
    PhyParams {
        m_list: spec.joint_m_list(),
        ..spec.phy.params.clone()
    }
}

/// Decode source for every point. Monte Carlo pools are built once per
/// distinct set of SNR classes and shared by all points and replications.
fn point_sources(spec: &ExperimentSpec, points: &[Point], exec: Execution) -> Result<Vec<DecodeSource>> {
    match &spec.decode {
        DecodeSpec::Bernoulli { .. } => Ok(points
            .iter()
            .map(|p| DecodeSource::Bernoulli(spec.decode_probs(p.n_aps).expect("bernoulli spec")))
            .collect()),
        DecodeSpec::Trace(path) => {
            let rows = Arc::new(aoisim::ingest_trace(path)?);
            Ok(points.iter().map(|_| DecodeSource::Trace(rows.clone())).collect())
        }
        DecodeSpec::MonteCarlo => {
            let pools = point_pools(spec, points, exec)?;
            Ok(pools.into_iter().map(DecodeSource::Pools).collect())
        }
    }
}

/// SNR classes and the pools built for them.
type PoolCache = Vec<(Vec<Vec<f64>>, Arc<Vec<PhyPool>>)>;

fn point_pools(spec: &ExperimentSpec, points: &[Point], exec: Execution) -> Result<Vec<Arc<Vec<PhyPool>>>> {
    let params = pool_params(spec);
    let mut built: PoolCache = Vec::new();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let classes = spec.snr_classes(p);
        let pools = match built.iter().find(|(c, _)| *c == classes) {
            Some((_, pools)) => pools.clone(),
            None => {
                let pools = Arc::new(aoisim::build_pools(&params, &classes, spec.phy.n_packets, spec.seed, exec)?);
                built.push((classes, pools.clone()));
                pools
            }
        };
        out.push(pools);
    }
    Ok(out)
}

/// Slot traces (replication 0 schedule) for every point plus an empirical
/// decode-probability table.
#[derive(Debug, Clone)]
pub struct TraceOutput {
    pub probabilities_csv: String,
    /// File name and slot outcomes per point.
    pub traces: Vec<(String, Vec<SlotOutcome>)>,
}

/// Runs the link-level chain (or the configured decode source) for every
/// point and collects slot traces and decode probabilities.
///
/// With the Monte Carlo source the table has one row per (point, SNR class)
/// summarizing that class's packet pool; other sources are summarized from
/// the slot outcomes, one row per point and class.
pub fn generate_phy_traces(spec: &ExperimentSpec, exec: Execution) -> Result<TraceOutput> {
    spec.check()?;
    par::with_workers(spec.workers, || {
        let delay = spec.delay.build()?;
        let points = spec.points();
        let ms = spec.joint_m_list();
        let max_aps = points.iter().map(|p| p.n_aps).max().unwrap_or(1);
        let mut csv = String::from("x,class,n_packets");
        for r in 1..=max_aps {
            csv.push_str(&format!(",snr_ap{r}_db"));
        }
        for r in 1..=max_aps {
            csv.push_str(&format!(",p_ap{r}"));
        }
        csv.push_str(",p_co_ap");
        for m in &ms {
            csv.push_str(&format!(",joint_m{m}"));
        }
        for m in &ms {
            csv.push_str(&format!(",p_soft_co_ap_m{m}"));
        }
        csv.push('\n');

        let sources = point_sources(spec, &points, exec)?;
        let seed = rng::replication_seed(spec.seed, 0);
        let mut traces = Vec::with_capacity(points.len());
        for (point, source) in points.iter().zip(&sources) {
            let cfg = sim_config(spec, point, source, &delay, seed);
            let outcomes = aoisim::slot_outcomes(&cfg)?;
            let summaries: Vec<(Option<Vec<f64>>, ProbabilitySummary)> = match source {
                DecodeSource::Pools(pools) => pools
                    .iter()
                    .map(|pool| (Some(pool.snr_db.clone()), linklevel::summarize(pool, &ms)))
                    .collect(),
                _ => {
                    let classes = match source {
                        DecodeSource::Bernoulli(c) => c.len(),
                        _ => 1,
                    };
                    (0..classes)
                        .map(|c| {
                            let pool = PhyPool {
                                snr_db: vec![f64::NAN; point.n_aps],
                                outcomes: outcomes
                                    .iter()
                                    .filter(|o| class_of(o.sensor, point.n_sensors, classes) == c)
                                    .map(|o| PacketOutcome {
                                        decoded: o.decoded.clone(),
                                        joint: o.joint,
                                    })
                                    .collect(),
                            };
                            (None, linklevel::summarize(&pool, &ms))
                        })
                        .collect()
                }
            };
            for (class, (snr, s)) in summaries.iter().enumerate() {
                csv.push_str(&format!("{},{class},{}", fmt_num(point.x), s.n_packets));
                for r in 0..max_aps {
                    csv.push(',');
                    if let Some(v) = snr.as_ref().and_then(|v| v.get(r)) {
                        csv.push_str(&fmt_num(*v));
                    }
                }
                for r in 0..max_aps {
                    csv.push(',');
                    if let Some(p) = s.per_ap.get(r) {
                        csv.push_str(&fmt_num(*p));
                    }
                }
                csv.push_str(&format!(",{}", fmt_num(s.co_ap)));
                for table in [&s.joint_conditional, &s.soft_co_ap] {
                    for m in &ms {
                        csv.push(',');
                        if let Some(v) = table[*m as usize - 1] {
                            csv.push_str(&fmt_num(v));
                        }
                    }
                }
                csv.push('\n');
            }
            traces.push((format!("trace_x{}.csv", fmt_num(point.x)), outcomes));
        }
        Ok(TraceOutput {
            probabilities_csv: csv,
            traces,
        })
    })
}

/// Writes [`generate_phy_traces`] output under `<output_dir>/traces`.
pub fn write_phy_traces(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<PathBuf>> {
    let out = generate_phy_traces(spec, exec)?;
    let dir = spec.output_dir.join("traces");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();
    let probs = dir.join("probabilities.csv");
    std::fs::write(&probs, &out.probabilities_csv).map_err(|e| Error::io(&probs, e))?;
    written.push(probs);
    for (name, rows) in &out.traces {
        let path = dir.join(name);
        write_trace(rows, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Cross-checks the engine against the brute-force integrator for every
/// point and curve of a small spec (replication 0, at most 100 rounds).
pub fn oracle_check(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<(String, OracleReport)>> {
    spec.check()?;
    let points = spec.points();
    if let Some(p) = points.iter().find(|p| p.n_sensors > 3) {
        return Err(Error::Validation(vec![format!(
            "system.n_sensors: oracle checks need at most 3 sensors, point x = {} has {}",
            fmt_num(p.x),
            p.n_sensors
        )]));
    }
    let delay = spec.delay.build()?;
    let sources = point_sources(spec, &points, exec)?;
    let curves = spec.curves();
    let seed = rng::replication_seed(spec.seed, 0);
    let mut cases = Vec::new();
    for (point, source) in points.iter().zip(&sources) {
        for curve in &curves {
            let mut cfg = sim_config(spec, point, source, &delay, seed);
            cfg.rounds = cfg.rounds.min(100);
            cfg.warmup_rounds = cfg.warmup_rounds.min(cfg.rounds - 1);
            cfg.mode = curve.mode;
            cfg.m = curve.m.unwrap_or(point.m[0]);
            cases.push((format!("x={} {}", fmt_num(point.x), curve.label()), cfg));
        }
    }
    par::map_slice(exec, &cases, |(label, cfg)| {
        brute_force_oracle(cfg, cfg.slot_seconds / 1000.0).map(|r| (label.clone(), r))
    })
    .into_iter()
    .collect()
}

/// `count` seeded small instances (N <= 3, all three modes, constant and
/// jittered delays, random decode probabilities) checked against the
/// brute-force integrator.
pub fn oracle_battery(count: usize, seed: u64, exec: Execution) -> Result<Vec<(String, OracleReport)>> {
    let modes = [Mode::SingleAp, Mode::CoAp, Mode::SoftCoAp];
    let cases: Vec<(String, SimConfig)> = (0..count)
        .map(|k| {
            let mut r = rng::stream(seed, &[k as u64]);
            let n = 1 + k % 3;
            let mode = modes[(k / 3) % 3];
            let mut cfg = SimConfig::new(mode, n, r.random_range(40..=100));
            cfg.n_aps = r.random_range(2..=3);
            cfg.m = r.random_range(1..=8);
            cfg.warmup_rounds = r.random_range(0..10);
            cfg.seed = r.random();
            let ap = (0..cfg.n_aps).map(|_| r.random_range(0.2..1.0)).collect();
            let mut joint = [0.0; 8];
            joint.iter_mut().for_each(|q| *q = r.random_range(0.0..1.0));
            cfg.decode_source = DecodeSource::Bernoulli(vec![DecodeProbs { ap, joint }]);
            let jittered = k % 2 == 0;
            cfg.delay_model = if jittered {
                DelayModel::Parametric {
                    base: r.random_range(0.1e-3..3e-3),
                    per_fragment: r.random_range(0.5e-3..3e-3),
                    jitter: r.random_range(0.05..0.5),
                }
            } else {
                DelayModel::Constant(r.random_range(0.05e-3..8e-3))
            };
            let label = format!(
                "#{k} {mode} N={n} aps={} m={} {}",
                cfg.n_aps,
                cfg.m,
                if jittered { "jittered" } else { "constant" }
            );
            (label, cfg)
        })
        .collect();
    par::map_slice(exec, &cases, |(label, cfg)| {
        brute_force_oracle(cfg, cfg.slot_seconds / 1000.0).map(|r| (label.clone(), r))
    })
    .into_iter()
    .collect()
}
