//! TOML experiment files.
//!
//! Every problem is collected with its `section.key` path before anything
//! runs; unknown sections and keys are errors. See the README for the full
//! key reference.

use std::path::Path;

use toml::{Table, Value};

use super::{DecodeSpec, DelaySpec, ExperimentSpec, PhySpec, SweepAxis, SystemSpec};
use crate::aoisim::Mode;
use crate::backbone::DelayModel;
use crate::error::{Error, Result};
use crate::phychannel::FadingProfile;
use crate::softquant::QuantizerParams;

const SECTIONS: [&str; 5] = ["experiment", "system", "decode", "phy", "delay"];

/// Reads and validates an experiment file. Relative paths inside it resolve
/// against the file's directory.
pub fn validate_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    parse_config_named(&text, base, stem)
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentSpec> {
    parse_config_named(text, base_dir, "experiment")
}

fn parse_config_named(text: &str, base_dir: &Path, default_name: &str) -> Result<ExperimentSpec> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Validation(vec![format!("syntax: {}", e.message())]))?;
    let mut errors = Vec::new();
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errors.push(format!("{key}: unknown section (expected one of {})", SECTIONS.join(", ")));
        }
    }
    let mut section = |name: &'static str| {
        let table = match root.remove(name) {
            Some(Value::Table(t)) => t,
            Some(_) => {
                errors.push(format!("{name}: expected a [{name}] section"));
                Table::new()
            }
            None => Table::new(),
        };
        Section { name, table }
    };
    let mut exp = section("experiment");
    let mut sys = section("system");
    let mut dec = section("decode");
    let mut phy = section("phy");
    let mut del = section("delay");
    let mut e = Vec::new();

    let name = exp.string("name", default_name, &mut e);
    let mut spec = ExperimentSpec::new(&name);
    spec.sweep = exp.parsed("sweep", spec.sweep, &mut e);
    spec.modes = match exp.take("modes") {
        None => spec.modes,
        Some(v) => match v.as_array() {
            Some(items) => items
                .iter()
                .filter_map(|m| match m.as_str().map(str::parse::<Mode>) {
                    Some(Ok(mode)) => Some(mode),
                    Some(Err(err)) => {
                        e.push(format!("experiment.modes: {err}"));
                        None
                    }
                    None => {
                        e.push("experiment.modes: expected strings".into());
                        None
                    }
                })
                .collect(),
            None => {
                e.push("experiment.modes: expected a list of strings".into());
                Vec::new()
            }
        },
    };
    spec.replications = exp.uint("replications", 1, &mut e) as u32;
    spec.seed = exp.uint("seed", 0, &mut e);
    spec.workers = exp.uint("workers", 0, &mut e) as usize;
    spec.output_dir = base_dir.join(exp.string("output_dir", &format!("results/{name}"), &mut e));

    let d = SystemSpec::default();
    spec.system = SystemSpec {
        n_sensors: sys.uint("n_sensors", d.n_sensors as u64, &mut e) as usize,
        slot_seconds: sys.float("slot_ms", d.slot_seconds * 1e3, &mut e) / 1e3,
        n_aps: sys.uint("n_aps", d.n_aps as u64, &mut e) as usize,
        m: sys
            .floats("m", &mut e)
            .map(|v| v.iter().map(|&m| int_in(m, 1, 8, "system.m", &mut e) as u8).collect())
            .unwrap_or(d.m),
        rounds: sys.uint("rounds", d.rounds, &mut e),
        warmup_rounds: sys.uint("warmup_rounds", d.warmup_rounds, &mut e),
        payload_bytes: sys.uint("payload_bytes", u64::from(d.payload_bytes), &mut e) as u32,
    };
    spec.values = exp
        .floats("values", &mut e)
        .unwrap_or_else(|| default_values(&spec));

    let source = dec.string("source", "bernoulli", &mut e);
    spec.decode = match source.as_str() {
        "bernoulli" => {
            let p_primary = dec.floats("p_primary", &mut e).unwrap_or(vec![1.0]);
            let p_secondary = dec.floats("p_secondary", &mut e).unwrap_or(vec![1.0]);
            let p_joint = dec.floats("p_joint", &mut e).map(|v| match v.len() {
                1 => [v[0]; 8],
                8 => v.try_into().expect("length checked"),
                n => {
                    e.push(format!("decode.p_joint: expected 1 or 8 values (one per m), found {n}"));
                    [0.0; 8]
                }
            });
            DecodeSpec::Bernoulli {
                p_primary,
                p_secondary,
                p_joint,
            }
        }
        "trace" => match dec.take("file") {
            Some(Value::String(f)) => DecodeSpec::Trace(base_dir.join(f)),
            Some(_) => {
                e.push("decode.file: expected a path string".into());
                DecodeSpec::MonteCarlo
            }
            None => {
                e.push("decode.file: required when decode.source = \"trace\"".into());
                DecodeSpec::MonteCarlo
            }
        },
        "montecarlo" => DecodeSpec::MonteCarlo,
        other => {
            e.push(format!(
                "decode.source: unknown source `{other}` (expected bernoulli | trace | montecarlo)"
            ));
            DecodeSpec::MonteCarlo
        }
    };

    if spec.decode == DecodeSpec::MonteCarlo || phy.table.is_empty() {
        let d = PhySpec::default();
        let mut params = d.params.clone();
        params.info_bytes = phy.uint("info_bytes", params.info_bytes as u64, &mut e) as usize;
        params.profile = phy.parsed::<FadingProfile>("profile", params.profile, &mut e);
        params.alpha = phy.float("alpha", params.alpha, &mut e);
        params.implementation_loss_db = phy.float("implementation_loss_db", params.implementation_loss_db, &mut e);
        spec.phy = PhySpec {
            n_packets: phy.uint("n_packets", d.n_packets as u64, &mut e) as usize,
            snr_primary_db: phy.floats("snr_primary_db", &mut e).unwrap_or(d.snr_primary_db),
            snr_offset_db: phy.floats("snr_offset_db", &mut e).unwrap_or(d.snr_offset_db),
            params,
        };
    } else {
        e.push("phy: only used with decode.source = \"montecarlo\"".into());
        phy.table.clear();
    }

    let model = del.string("model", "parametric", &mut e);
    spec.delay = match model.as_str() {
        "parametric" => DelaySpec::Model(DelayModel::Parametric {
            base: del.float("base_ms", 1.0, &mut e) / 1e3,
            per_fragment: del.float("per_fragment_ms", 2.1, &mut e) / 1e3,
            jitter: del.float("jitter", 0.25, &mut e),
        }),
        "constant" => match del.take("constant_ms") {
            Some(v) => DelaySpec::Model(DelayModel::Constant(
                number(&v).unwrap_or_else(|| {
                    e.push("delay.constant_ms: expected a number".into());
                    1.0
                }) / 1e3,
            )),
            None => {
                e.push("delay.constant_ms: required when delay.model = \"constant\"".into());
                DelaySpec::Model(DelayModel::calibrated())
            }
        },
        "empirical" => {
            let files = match del.take("files") {
                Some(Value::Array(items)) => items
                    .iter()
                    .filter_map(|f| match f.as_str() {
                        Some(s) => Some(base_dir.join(s)),
                        None => {
                            e.push("delay.files: expected path strings".into());
                            None
                        }
                    })
                    .collect(),
                _ => {
                    e.push("delay.files: required list of sample files when delay.model = \"empirical\"".into());
                    Vec::new()
                }
            };
            DelaySpec::Empirical {
                files,
                halve_round_trip: del.boolean("halve_round_trip", true, &mut e),
            }
        }
        other => {
            e.push(format!(
                "delay.model: unknown model `{other}` (expected parametric | constant | empirical)"
            ));
            DelaySpec::Model(DelayModel::calibrated())
        }
    };

    for s in [exp, sys, dec, phy, del] {
        s.finish(&mut e);
    }
    errors.extend(e);
    if let Err(Error::Validation(more)) = spec.check() {
        for m in more {
            if !errors.contains(&m) {
                errors.push(m);
            }
        }
    }
    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(errors))
    }
}

fn default_values(spec: &ExperimentSpec) -> Vec<f64> {
    let v = match spec.sweep {
        SweepAxis::SnrPrimary => PhySpec::default().snr_primary_db[0],
        SweepAxis::NSensors => spec.system.n_sensors as f64,
        SweepAxis::M => f64::from(spec.system.m.first().copied().unwrap_or(4)),
        SweepAxis::NAps => spec.system.n_aps as f64,
    };
    vec![v]
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn int_in(x: f64, lo: i64, hi: i64, key: &str, e: &mut Vec<String>) -> i64 {
    if x.fract() != 0.0 || x < lo as f64 || x > hi as f64 {
        e.push(format!("{key}: {x} outside {{{lo}..{hi}}}"));
        return lo;
    }
    x as i64
}

struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn string(&mut self, key: &str, default: &str, e: &mut Vec<String>) -> String {
        match self.take(key) {
            None => default.to_string(),
            Some(Value::String(s)) => s,
            Some(_) => {
                e.push(format!("{}: expected a string", self.path(key)));
                default.to_string()
            }
        }
    }

    fn parsed<T>(&mut self, key: &str, default: T, e: &mut Vec<String>) -> T
    where
        T: std::str::FromStr<Err = Error>,
    {
        match self.take(key) {
            None => default,
            Some(Value::String(s)) => s.parse().unwrap_or_else(|err| {
                e.push(format!("{}: {}", self.path(key), bare(err)));
                default
            }),
            Some(_) => {
                e.push(format!("{}: expected a string", self.path(key)));
                default
            }
        }
    }

    fn float(&mut self, key: &str, default: f64, e: &mut Vec<String>) -> f64 {
        match self.take(key) {
            None => default,
            Some(v) => number(&v).unwrap_or_else(|| {
                e.push(format!("{}: expected a number", self.path(key)));
                default
            }),
        }
    }

    fn uint(&mut self, key: &str, default: u64, e: &mut Vec<String>) -> u64 {
        match self.take(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(Value::Integer(i)) => {
                e.push(format!("{}: must be nonnegative, got {i}", self.path(key)));
                default
            }
            Some(_) => {
                e.push(format!("{}: expected an integer", self.path(key)));
                default
            }
        }
    }

    fn boolean(&mut self, key: &str, default: bool, e: &mut Vec<String>) -> bool {
        match self.take(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(_) => {
                e.push(format!("{}: expected true or false", self.path(key)));
                default
            }
        }
    }

    /// A number or a list of numbers.
    fn floats(&mut self, key: &str, e: &mut Vec<String>) -> Option<Vec<f64>> {
        let v = self.take(key)?;
        let list = match &v {
            Value::Array(items) => items.iter().map(number).collect::<Option<Vec<_>>>(),
            other => number(other).map(|x| vec![x]),
        };
        if list.is_none() {
            e.push(format!("{}: expected a number or a list of numbers", self.path(key)));
        }
        list
    }

    fn finish(self, e: &mut Vec<String>) {
        for key in self.table.keys() {
            e.push(format!("{}: unknown key", self.path(key)));
        }
    }
}

fn bare(err: Error) -> String {
    match err {
        Error::InvalidArgument(m) | Error::Config(m) => m,
        other => other.to_string(),
    }
}

impl ExperimentSpec {
    /// Cross-field checks, all problems reported at once.
    pub fn check(&self) -> Result<()> {
        let mut e = Vec::new();
        let co = self.modes.iter().any(|m| *m != Mode::SingleAp);
        let soft = self.modes.contains(&Mode::SoftCoAp);

        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            e.push(format!(
                "experiment.name: `{}` must be nonempty and use only letters, digits, `_` or `-`",
                self.name
            ));
        }
        if self.modes.is_empty() {
            e.push("experiment.modes: at least one mode is required".into());
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                e.push(format!("experiment.modes: `{m}` listed twice"));
            }
        }
        if self.replications == 0 {
            e.push("experiment.replications: must be at least 1".into());
        }
        if self.values.is_empty() {
            e.push("experiment.values: at least one sweep value is required".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            e.push("experiment.values: values must be finite".into());
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            e.push("experiment.values: must be strictly increasing".into());
        }
        match self.sweep {
            SweepAxis::NSensors => {
                for &v in &self.values {
                    int_in(v, 1, 1_000_000, "experiment.values", &mut e);
                }
            }
            SweepAxis::NAps => {
                for &v in &self.values {
                    int_in(v, if co { 2 } else { 1 }, 64, "experiment.values", &mut e);
                }
            }
            SweepAxis::M => {
                for &v in &self.values {
                    int_in(v, 1, 8, "experiment.values", &mut e);
                }
                if let Some(m) = self.modes.iter().find(|m| **m != Mode::SoftCoAp) {
                    e.push(format!(
                        "experiment.sweep: an m sweep only applies to soft_co_ap, but modes include {m}"
                    ));
                }
            }
            SweepAxis::SnrPrimary => {
                if self.decode != DecodeSpec::MonteCarlo {
                    e.push("experiment.sweep: snr_primary sweeps need decode.source = \"montecarlo\"".into());
                } else if self.phy.snr_primary_db.len() > 1 {
                    e.push("phy.snr_primary_db: an snr_primary sweep needs a single SNR class".into());
                }
            }
        }

        let s = &self.system;
        if s.n_sensors == 0 {
            e.push("system.n_sensors: must be at least 1".into());
        }
        if !(s.slot_seconds > 0.0 && s.slot_seconds.is_finite()) {
            e.push(format!("system.slot_ms: must be positive, got {}", s.slot_seconds * 1e3));
        }
        if s.n_aps == 0 || (co && s.n_aps < 2 && self.sweep != SweepAxis::NAps) {
            e.push(format!(
                "system.n_aps: {} is too few, cooperative modes need a primary and at least one secondary",
                s.n_aps
            ));
        }
        if s.m.is_empty() {
            e.push("system.m: at least one value is required".into());
        }
        for &m in &s.m {
            if !(1..=8).contains(&m) {
                e.push(format!("system.m: {m} outside {{1..8}}"));
            }
        }
        if s.m.windows(2).any(|w| w[1] <= w[0]) {
            e.push("system.m: must be strictly increasing".into());
        }
        if s.rounds <= s.warmup_rounds {
            e.push(format!(
                "system.rounds: {} must exceed system.warmup_rounds ({})",
                s.rounds, s.warmup_rounds
            ));
        }
        if s.payload_bytes == 0 {
            e.push("system.payload_bytes: must be positive".into());
        }

        match &self.decode {
            DecodeSpec::Bernoulli {
                p_primary,
                p_secondary,
                p_joint,
            } => {
                if p_primary.is_empty() {
                    e.push("decode.p_primary: at least one class is required".into());
                }
                if p_secondary.len() != 1 && p_secondary.len() != p_primary.len() {
                    e.push(format!(
                        "decode.p_secondary: expected 1 value or one per class ({}), found {}",
                        p_primary.len(),
                        p_secondary.len()
                    ));
                }
                let all = p_primary.iter().chain(p_secondary).chain(p_joint.iter().flatten());
                if all.clone().any(|p| !(0.0..=1.0).contains(p)) {
                    e.push("decode: probabilities must lie in [0, 1]".into());
                }
                let lossy = p_primary.iter().chain(p_secondary).any(|p| *p < 1.0);
                if soft && lossy && p_joint.is_none() {
                    e.push(
                        "decode.p_joint: required for soft_co_ap with the bernoulli source \
                         (joint success given the primary and a secondary failed)"
                            .into(),
                    );
                }
            }
            DecodeSpec::Trace(path) => {
                if !path.is_file() {
                    e.push(format!("decode.file: {} does not exist", path.display()));
                }
            }
            DecodeSpec::MonteCarlo => {
                let p = &self.phy;
                if p.n_packets == 0 {
                    e.push("phy.n_packets: must be at least 1".into());
                }
                if p.params.info_bytes == 0 {
                    e.push("phy.info_bytes: must be positive".into());
                }
                if let Err(err) = QuantizerParams::new(p.params.alpha, 8, 1) {
                    e.push(format!("phy.alpha: {}", bare(err)));
                }
                if !p.params.implementation_loss_db.is_finite() {
                    e.push("phy.implementation_loss_db: must be finite".into());
                }
                if p.snr_primary_db.is_empty() {
                    e.push("phy.snr_primary_db: at least one class is required".into());
                }
                if p.snr_primary_db.iter().chain(&p.snr_offset_db).any(|v| v.is_nan()) {
                    e.push("phy: SNR values must not be NaN".into());
                }
                let max_aps = self.points().iter().map(|p| p.n_aps).max().unwrap_or(1);
                if p.snr_offset_db.is_empty() || (p.snr_offset_db.len() > 1 && p.snr_offset_db.len() < max_aps - 1) {
                    e.push(format!(
                        "phy.snr_offset_db: expected 1 value or one per secondary AP ({}), found {}",
                        max_aps - 1,
                        p.snr_offset_db.len()
                    ));
                }
            }
        }

        match &self.delay {
            DelaySpec::Model(m) => {
                if let Err(err) = m.validate() {
                    let key = match m {
                        DelayModel::Constant(_) => "delay.constant_ms",
                        _ => "delay",
                    };
                    e.push(format!("{key}: {}", bare(err)));
                }
            }
            DelaySpec::Empirical { files, .. } => {
                if files.is_empty() && co {
                    e.push("delay.files: at least one sample file is required".into());
                }
                for f in files {
                    if !f.is_file() {
                        e.push(format!("delay.files: {} does not exist", f.display()));
                    }
                }
            }
        }

        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(e))
        }
    }

    /// The normalized spec as an experiment file, every default filled in.
    pub fn to_toml(&self) -> String {
        fn floats(v: &[f64]) -> Value {
            Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
        }
        fn int(x: u64) -> Value {
            Value::Integer(x as i64)
        }
        let mut exp = Table::new();
        exp.insert("name".into(), Value::String(self.name.clone()));
        exp.insert("sweep".into(), Value::String(self.sweep.to_string()));
        exp.insert("values".into(), floats(&self.values));
        exp.insert(
            "modes".into(),
            Value::Array(self.modes.iter().map(|m| Value::String(m.to_string())).collect()),
        );
        exp.insert("replications".into(), int(u64::from(self.replications)));
        exp.insert("seed".into(), int(self.seed));
        exp.insert("workers".into(), int(self.workers as u64));
        exp.insert("output_dir".into(), Value::String(path_str(&self.output_dir)));

        let s = &self.system;
        let mut sys = Table::new();
        sys.insert("n_sensors".into(), int(s.n_sensors as u64));
        sys.insert("slot_ms".into(), Value::Float(s.slot_seconds * 1e3));
        sys.insert("n_aps".into(), int(s.n_aps as u64));
        sys.insert(
            "m".into(),
            Value::Array(s.m.iter().map(|m| int(u64::from(*m))).collect()),
        );
        sys.insert("rounds".into(), int(s.rounds));
        sys.insert("warmup_rounds".into(), int(s.warmup_rounds));
        sys.insert("payload_bytes".into(), int(u64::from(s.payload_bytes)));

        let mut dec = Table::new();
        let mut root = Table::new();
        match &self.decode {
            DecodeSpec::Bernoulli {
                p_primary,
                p_secondary,
                p_joint,
            } => {
                dec.insert("source".into(), Value::String("bernoulli".into()));
                dec.insert("p_primary".into(), floats(p_primary));
                dec.insert("p_secondary".into(), floats(p_secondary));
                if let Some(j) = p_joint {
                    dec.insert("p_joint".into(), floats(j));
                }
            }
            DecodeSpec::Trace(path) => {
                dec.insert("source".into(), Value::String("trace".into()));
                dec.insert("file".into(), Value::String(path_str(path)));
            }
            DecodeSpec::MonteCarlo => {
                dec.insert("source".into(), Value::String("montecarlo".into()));
                let p = &self.phy;
                let mut phy = Table::new();
                phy.insert("n_packets".into(), int(p.n_packets as u64));
                phy.insert("info_bytes".into(), int(p.params.info_bytes as u64));
                phy.insert(
                    "profile".into(),
                    Value::String(
                        match p.params.profile {
                            FadingProfile::Flat => "flat",
                            FadingProfile::RayleighPerSymbol => "rayleigh_per_symbol",
                        }
                        .into(),
                    ),
                );
                phy.insert("alpha".into(), Value::Float(p.params.alpha));
                phy.insert(
                    "implementation_loss_db".into(),
                    Value::Float(p.params.implementation_loss_db),
                );
                phy.insert("snr_primary_db".into(), floats(&p.snr_primary_db));
                phy.insert("snr_offset_db".into(), floats(&p.snr_offset_db));
                root.insert("phy".into(), Value::Table(phy));
            }
        }

        let mut del = Table::new();
        match &self.delay {
            DelaySpec::Model(DelayModel::Constant(d)) => {
                del.insert("model".into(), Value::String("constant".into()));
                del.insert("constant_ms".into(), Value::Float(d * 1e3));
            }
            DelaySpec::Model(DelayModel::Parametric {
                base,
                per_fragment,
                jitter,
            }) => {
                del.insert("model".into(), Value::String("parametric".into()));
                del.insert("base_ms".into(), Value::Float(base * 1e3));
                del.insert("per_fragment_ms".into(), Value::Float(per_fragment * 1e3));
                del.insert("jitter".into(), Value::Float(*jitter));
            }
            DelaySpec::Model(DelayModel::Empirical(_)) => {
                del.insert("model".into(), Value::String("empirical".into()));
            }
            DelaySpec::Empirical {
                files,
                halve_round_trip,
            } => {
                del.insert("model".into(), Value::String("empirical".into()));
                del.insert(
                    "files".into(),
                    Value::Array(files.iter().map(|f| Value::String(path_str(f))).collect()),
                );
                del.insert("halve_round_trip".into(), Value::Boolean(*halve_round_trip));
            }
        }
        root.insert("experiment".into(), Value::Table(exp));
        root.insert("system".into(), Value::Table(sys));
        root.insert("decode".into(), Value::Table(dec));
        root.insert("delay".into(), Value::Table(del));
        root.to_string()
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec> {
        parse_config(text, Path::new("/tmp"))
    }

    fn messages(r: Result<ExperimentSpec>) -> Vec<String> {
        match r {
            Err(Error::Validation(v)) => v,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let spec = parse("[experiment]\nname = \"tiny\"\n").unwrap();
        assert_eq!(spec.system.slot_seconds, 1.2e-3);
        assert_eq!(spec.system.warmup_rounds, 10);
        assert_eq!(spec.phy.params.alpha, 0.25);
        assert_eq!(spec.replications, 1);
        assert_eq!(spec.values, vec![10.0]);
        assert_eq!(spec.output_dir, Path::new("/tmp/results/tiny"));
        let empty = parse("").unwrap();
        assert_eq!(empty.name, "experiment");
    }

    #[test]
    fn echo_round_trips() {
        let text = "[experiment]\nsweep = \"snr_primary\"\nvalues = [5, 6, 7]\nreplications = 3\n\
                    [decode]\nsource = \"montecarlo\"\n[phy]\nn_packets = 100\n\
                    [delay]\nmodel = \"constant\"\nconstant_ms = 4\n";
        let spec = parse(text).unwrap();
        let again = parse(&spec.to_toml()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn negative_slot_names_the_key() {
        let msgs = messages(parse("[system]\nslot_ms = -1.2\n"));
        assert!(msgs.iter().any(|m| m.starts_with("system.slot_ms")), "{msgs:?}");
    }

    #[test]
    fn m_out_of_range_cites_the_set() {
        let msgs = messages(parse("[system]\nm = 9\n"));
        assert!(msgs.iter().any(|m| m.contains("system.m") && m.contains("{1..8}")), "{msgs:?}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let msgs = messages(parse("[system]\nn_sensor = 3\n[extra]\nx = 1\n"));
        assert!(msgs.iter().any(|m| m == "system.n_sensor: unknown key"), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("extra: unknown section")), "{msgs:?}");
    }

    #[test]
    fn all_errors_reported_together() {
        let msgs = messages(parse(
            "[experiment]\nreplications = 0\nvalues = [3, 2]\n[system]\nslot_ms = 0\nm = 0\n",
        ));
        assert!(msgs.len() >= 4, "{msgs:?}");
    }

    #[test]
    fn m_sweep_needs_soft_mode() {
        let msgs = messages(parse(
            "[experiment]\nsweep = \"m\"\nvalues = [2, 4]\nmodes = [\"single_ap\"]\n",
        ));
        assert!(msgs.iter().any(|m| m.starts_with("experiment.sweep")), "{msgs:?}");
        let ok = parse(
            "[experiment]\nsweep = \"m\"\nvalues = [2, 4]\nmodes = [\"soft_co_ap\"]\n[decode]\np_joint = 0.5\n",
        );
        assert!(ok.is_ok(), "{ok:?}");
    }

    #[test]
    fn bernoulli_soft_needs_joint_probabilities() {
        let msgs = messages(parse("[decode]\np_primary = 0.5\n"));
        assert!(msgs.iter().any(|m| m.starts_with("decode.p_joint")), "{msgs:?}");
    }

    #[test]
    fn missing_files_are_validation_errors() {
        let msgs = messages(parse("[decode]\nsource = \"trace\"\nfile = \"nope.csv\"\n"));
        assert!(msgs.iter().any(|m| m.starts_with("decode.file")), "{msgs:?}");
        let msgs = messages(parse("[delay]\nmodel = \"empirical\"\nfiles = [\"nope.txt\"]\n"));
        assert!(msgs.iter().any(|m| m.starts_with("delay.files")), "{msgs:?}");
    }

    #[test]
    fn phy_section_only_with_montecarlo() {
        let msgs = messages(parse("[phy]\nn_packets = 10\n"));
        assert!(msgs.iter().any(|m| m.starts_with("phy:")), "{msgs:?}");
    }

    #[test]
    fn syntax_errors_are_validation_errors() {
        let msgs = messages(parse("[system\n"));
        assert!(msgs[0].starts_with("syntax"));
    }
}
