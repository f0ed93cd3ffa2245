//! Experiment files, sweeps over SNR / N / m / AP count, Monte Carlo PHY
//! traces and columnar result output.

mod config;
mod output;
mod recipes;
mod run;

use std::fmt;
use std::path::PathBuf;

use crate::aoisim::{DecodeProbs, Mode};
use crate::backbone::{self, DelayModel};
use crate::error::{Error, Result};
use crate::linklevel::PhyParams;

pub use config::{parse_config, validate_config};
pub use output::ExperimentOutput;
pub use recipes::{recipe, RECIPES};
pub use run::{
    generate_phy_traces, oracle_battery, oracle_check, run_experiment, write_phy_traces, CurveResult, ResultRow,
    TraceOutput,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SnrPrimary,
    NSensors,
    M,
    NAps,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::SnrPrimary => "snr_primary",
            SweepAxis::NSensors => "n_sensors",
            SweepAxis::M => "m",
            SweepAxis::NAps => "n_aps",
        })
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr_primary" => Ok(SweepAxis::SnrPrimary),
            "n_sensors" => Ok(SweepAxis::NSensors),
            "m" => Ok(SweepAxis::M),
            "n_aps" => Ok(SweepAxis::NAps),
            other => Err(Error::invalid(format!(
                "unknown sweep axis `{other}` (expected snr_primary | n_sensors | m | n_aps)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n_sensors: usize,
    pub slot_seconds: f64,
    pub n_aps: usize,
    /// Soft-Co-AP curves, one per m.
    pub m: Vec<u8>,
    pub rounds: u64,
    pub warmup_rounds: u64,
    pub payload_bytes: u32,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            n_sensors: 10,
            slot_seconds: 1.2e-3,
            n_aps: 2,
            m: vec![4],
            rounds: 10_000,
            warmup_rounds: 10,
            payload_bytes: 768,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeSpec {
    /// One class per entry of `p_primary`; every secondary uses `p_secondary`
    /// of its class. `p_joint` is indexed by m - 1.
    Bernoulli {
        p_primary: Vec<f64>,
        p_secondary: Vec<f64>,
        p_joint: Option<[f64; 8]>,
    },
    Trace(PathBuf),
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhySpec {
    pub params: PhyParams,
    pub n_packets: usize,
    /// Primary SNR of each sensor class.
    pub snr_primary_db: Vec<f64>,
    /// Secondary r sits at primary + `snr_offset_db[r - 1]`; a single entry applies to all.
    pub snr_offset_db: Vec<f64>,
}

impl Default for PhySpec {
    fn default() -> Self {
        PhySpec {
            params: PhyParams::default(),
            n_packets: 5000,
            snr_primary_db: vec![5.0],
            snr_offset_db: vec![1.0],
        }
    }
}

impl PhySpec {
    pub fn offset(&self, secondary: usize) -> f64 {
        if self.snr_offset_db.len() == 1 {
            self.snr_offset_db[0]
        } else {
            self.snr_offset_db[secondary - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelaySpec {
    Model(DelayModel),
    Empirical {
        files: Vec<PathBuf>,
        halve_round_trip: bool,
    },
}

impl DelaySpec {
    pub fn build(&self) -> Result<DelayModel> {
        match self {
            DelaySpec::Model(m) => {
                m.validate()?;
                Ok(m.clone())
            }
            DelaySpec::Empirical {
                files,
                halve_round_trip,
            } => {
                let mut model = DelayModel::Empirical(Default::default());
                for f in files {
                    model.add_samples(backbone::load_delay_samples(f, None, *halve_round_trip)?)?;
                }
                model.validate()?;
                Ok(model)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub sweep: SweepAxis,
    /// Strictly increasing.
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub replications: u32,
    pub seed: u64,
    /// Worker threads for independent jobs, 0 picks the machine default.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub system: SystemSpec,
    pub decode: DecodeSpec,
    pub phy: PhySpec,
    pub delay: DelaySpec,
}

/// One sweep point with the sweep value applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub x: f64,
    pub n_sensors: usize,
    pub n_aps: usize,
    pub m: Vec<u8>,
    pub snr_primary_db: Vec<f64>,
}

/// One output curve: a system mode, plus m for Soft-Co-AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Curve {
    pub mode: Mode,
    /// `None` for non-soft modes and for m sweeps, where m is the x value.
    pub m: Option<u8>,
}

impl Curve {
    pub fn label(&self) -> String {
        match self.m {
            Some(m) => format!("{}_m{m}", self.mode),
            None => self.mode.to_string(),
        }
    }
}

impl ExperimentSpec {
    /// Defaults for every key: a single point at N = 10 with perfect channels.
    pub fn new(name: &str) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            sweep: SweepAxis::NSensors,
            values: vec![10.0],
            modes: vec![Mode::SingleAp, Mode::CoAp, Mode::SoftCoAp],
            replications: 1,
            seed: 0,
            workers: 0,
            output_dir: PathBuf::from("results").join(name),
            system: SystemSpec::default(),
            decode: DecodeSpec::Bernoulli {
                p_primary: vec![1.0],
                p_secondary: vec![1.0],
                p_joint: Some([1.0; 8]),
            },
            phy: PhySpec::default(),
            delay: DelaySpec::Model(DelayModel::calibrated()),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        self.values
            .iter()
            .enumerate()
            .map(|(index, &x)| {
                let mut p = Point {
                    index,
                    x,
                    n_sensors: self.system.n_sensors,
                    n_aps: self.system.n_aps,
                    m: self.system.m.clone(),
                    snr_primary_db: self.phy.snr_primary_db.clone(),
                };
                match self.sweep {
                    SweepAxis::SnrPrimary => p.snr_primary_db = vec![x],
                    SweepAxis::NSensors => p.n_sensors = x as usize,
                    SweepAxis::M => p.m = vec![x as u8],
                    SweepAxis::NAps => p.n_aps = x as usize,
                }
                p
            })
            .collect()
    }

    pub fn curves(&self) -> Vec<Curve> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            if mode == Mode::SoftCoAp && self.sweep != SweepAxis::M {
                out.extend(self.system.m.iter().map(|&m| Curve { mode, m: Some(m) }));
            } else {
                out.push(Curve { mode, m: None });
            }
        }
        out
    }

    /// Every m any point needs a joint-decode outcome for.
    pub fn joint_m_list(&self) -> Vec<u8> {
        if !self.modes.contains(&Mode::SoftCoAp) {
            return Vec::new();
        }
        let mut ms: Vec<u8> = self.points().iter().flat_map(|p| p.m.clone()).collect();
        ms.sort_unstable();
        ms.dedup();
        ms
    }

    /// Per-class, per-AP SNRs of a point (Monte Carlo source).
    pub fn snr_classes(&self, point: &Point) -> Vec<Vec<f64>> {
        point
            .snr_primary_db
            .iter()
            .map(|&p| {
                std::iter::once(p)
                    .chain((1..point.n_aps).map(|r| p + self.phy.offset(r)))
                    .collect()
            })
            .collect()
    }

    /// Per-class decode probabilities at `n_aps` APs (Bernoulli source).
    pub fn decode_probs(&self, n_aps: usize) -> Option<Vec<DecodeProbs>> {
        match &self.decode {
            DecodeSpec::Bernoulli {
                p_primary,
                p_secondary,
                p_joint,
            } => Some(
                p_primary
                    .iter()
                    .enumerate()
                    .map(|(c, &p1)| {
                        let p2 = p_secondary[if p_secondary.len() == 1 { 0 } else { c }];
                        let mut ap = vec![p2; n_aps];
                        ap[0] = p1;
                        DecodeProbs {
                            ap,
                            joint: p_joint.unwrap_or([0.0; 8]),
                        }
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}
