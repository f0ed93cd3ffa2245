//! Ethernet backbone between APs: forwarded payload sizing, MTU fragmentation,
//! one-way delay models and the soft-bit wire format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::softquant::{levels, QuantizedSoftVector};

pub const MAC_HEADER_BYTES: u32 = 30;
pub const MTU_BYTES: u32 = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PayloadKind {
    DecodedPacket,
    SoftBits(u8),
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadKind::DecodedPacket => write!(f, "decoded"),
            PayloadKind::SoftBits(m) => write!(f, "soft_m{m}"),
        }
    }
}

impl std::str::FromStr for PayloadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "decoded" {
            return Ok(PayloadKind::DecodedPacket);
        }
        s.strip_prefix("soft_m")
            .and_then(|m| m.parse::<u8>().ok())
            .filter(|m| (1..=8).contains(m))
            .map(PayloadKind::SoftBits)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown payload kind `{s}` (expected decoded | soft_m1..soft_m8)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardPayload {
    pub kind: PayloadKind,
    pub payload_bytes: u32,
    pub fragments: u32,
}

/// Backbone payload for forwarding one packet of `data_bytes`.
///
/// A decoded packet carries the MAC header plus data. Soft bits carry
/// `2 * m * data_bytes` bytes (rate-1/2 code, m bits per coded bit) plus the header.
pub fn payload_for(kind: PayloadKind, data_bytes: u32) -> Result<ForwardPayload> {
    if data_bytes == 0 {
        return Err(Error::invalid("data_bytes must be positive"));
    }
    let payload_bytes = match kind {
        PayloadKind::DecodedPacket => MAC_HEADER_BYTES + data_bytes,
        PayloadKind::SoftBits(m) => {
            if !(1..=8).contains(&m) {
                return Err(Error::invalid(format!("m = {m} outside {{1..8}}")));
            }
            2 * u32::from(m) * data_bytes + MAC_HEADER_BYTES
        }
    };
    Ok(ForwardPayload {
        kind,
        payload_bytes,
        fragments: payload_bytes.div_ceil(MTU_BYTES).max(1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    /// Fixed delay in seconds.
    Constant(f64),
    /// `(base + per_fragment * fragments) * (1 + U(-jitter, jitter))`.
    Parametric {
        base: f64,
        per_fragment: f64,
        jitter: f64,
    },
    /// Recorded one-way delays in seconds, resampled uniformly per payload kind.
    Empirical(BTreeMap<PayloadKind, Vec<f64>>),
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::calibrated()
    }
}

impl DelayModel {
    /// 1 ms + 2.1 ms per fragment, +-25 % uniform jitter.
    pub fn calibrated() -> Self {
        DelayModel::Parametric {
            base: 1e-3,
            per_fragment: 2.1e-3,
            jitter: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DelayModel::Constant(d) if !(*d > 0.0 && d.is_finite()) => {
                Err(Error::config(format!("constant delay must be positive, got {d}")))
            }
            DelayModel::Parametric {
                base,
                per_fragment,
                jitter,
            } => {
                if !(*base >= 0.0 && *per_fragment >= 0.0 && base + per_fragment > 0.0) {
                    return Err(Error::config("parametric base/per_fragment must be nonnegative with a positive sum"));
                }
                if !(0.0..1.0).contains(jitter) {
                    return Err(Error::config(format!("jitter {jitter} outside [0, 1)")));
                }
                Ok(())
            }
            DelayModel::Empirical(samples) => {
                for (kind, list) in samples {
                    if let Some(bad) = list.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                        return Err(Error::config(format!("nonpositive delay {bad} for {kind}")));
                    }
                }
                Ok(())
            }
            DelayModel::Constant(_) => Ok(()),
        }
    }

    /// Mean delay for a payload, where defined analytically.
    pub fn mean(&self, payload: &ForwardPayload) -> Option<f64> {
        match self {
            DelayModel::Constant(d) => Some(*d),
            DelayModel::Parametric {
                base, per_fragment, ..
            } => Some(base + per_fragment * f64::from(payload.fragments)),
            DelayModel::Empirical(samples) => samples
                .get(&payload.kind)
                .filter(|s| !s.is_empty())
                .map(|s| s.iter().sum::<f64>() / s.len() as f64),
        }
    }

    /// Draws one positive one-way delay in seconds.
    pub fn sample<R: Rng + ?Sized>(&self, payload: &ForwardPayload, rng: &mut R) -> Result<f64> {
        match self {
            DelayModel::Constant(d) => Ok(*d),
            DelayModel::Parametric { jitter, .. } => {
                let mean = self.mean(payload).expect("parametric mean is defined");
                let u: f64 = if *jitter > 0.0 {
                    rng.random_range(-*jitter..*jitter)
                } else {
                    0.0
                };
                Ok(mean * (1.0 + u))
            }
            DelayModel::Empirical(samples) => {
                let list = samples.get(&payload.kind).filter(|s| !s.is_empty()).ok_or_else(|| {
                    Error::config(format!("no recorded delay samples for {}", payload.kind))
                })?;
                Ok(list[rng.random_range(0..list.len())])
            }
        }
    }

    /// Adds a recorded sample file to an empirical model.
    pub fn add_samples(&mut self, file: DelaySamples) -> Result<()> {
        match self {
            DelayModel::Empirical(map) => {
                map.entry(file.kind).or_default().extend(file.seconds);
                Ok(())
            }
            _ => Err(Error::config("sample files only apply to the empirical delay model")),
        }
    }
}

/// Parsed delay sample file, values converted to one-way seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySamples {
    pub kind: PayloadKind,
    pub seconds: Vec<f64>,
}

/// Parses a delay sample file: one delay per line in milliseconds, with an
/// optional header `# kind=<decoded|soft_m1..soft_m8> unit=ms oneway=<true|false>`.
///
/// `default_kind` applies when the header omits `kind`. Round-trip files
/// (`oneway=false`) are halved on load unless `halve_round_trip` is false.
pub fn parse_delay_samples(
    text: &str,
    source: &Path,
    default_kind: Option<PayloadKind>,
    halve_round_trip: bool,
) -> Result<DelaySamples> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };
    let mut kind = default_kind;
    let mut oneway = true;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if !values.is_empty() {
                continue;
            }
            for field in header.split_whitespace() {
                let Some((key, value)) = field.split_once('=') else {
                    continue;
                };
                match key {
                    "kind" => {
                        kind = Some(value.parse().map_err(|e: Error| parse_err(line_no, e.to_string()))?)
                    }
                    "unit" if value != "ms" => {
                        return Err(parse_err(line_no, format!("unsupported unit `{value}` (only ms)")))
                    }
                    "unit" => {}
                    "oneway" => {
                        oneway = value.parse().map_err(|_| {
                            parse_err(line_no, format!("oneway must be true|false, got `{value}`"))
                        })?
                    }
                    other => return Err(parse_err(line_no, format!("unknown header key `{other}`"))),
                }
            }
            continue;
        }
        let ms: f64 = line
            .parse()
            .map_err(|_| parse_err(line_no, format!("not a number: `{line}`")))?;
        if !(ms > 0.0 && ms.is_finite()) {
            return Err(parse_err(line_no, format!("delay must be positive, got {ms}")));
        }
        values.push(ms);
    }
    let kind = kind.ok_or_else(|| parse_err(1, "payload kind missing (header `# kind=...`)".into()))?;
    if values.is_empty() {
        return Err(parse_err(1, "no delay samples".into()));
    }
    let divisor = if !oneway && halve_round_trip { 2000.0 } else { 1000.0 };
    Ok(DelaySamples {
        kind,
        seconds: values.into_iter().map(|ms| ms / divisor).collect(),
    })
}

pub fn load_delay_samples(
    path: &Path,
    default_kind: Option<PayloadKind>,
    halve_round_trip: bool,
) -> Result<DelaySamples> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_delay_samples(&text, path, default_kind, halve_round_trip)
}

pub const SOFT_HEADER_MAGIC: &[u8; 4] = b"SQSB";

/// Serializes quantized soft bits as m-bit level indices packed MSB-first,
/// preceded by a 30-byte header stand-in (magic, m, big-endian count, zero padding).
pub fn encode_soft_payload(qsv: &QuantizedSoftVector) -> Result<Vec<u8>> {
    let m = qsv.m;
    if !(1..=8).contains(&m) {
        return Err(Error::invalid(format!("m = {m} outside {{1..8}}")));
    }
    let lv = levels(m);
    let count = u32::try_from(qsv.values.len()).map_err(|_| Error::invalid("soft vector too long"))?;
    let mut out = Vec::with_capacity(MAC_HEADER_BYTES as usize + (qsv.values.len() * m as usize).div_ceil(8));
    out.extend_from_slice(SOFT_HEADER_MAGIC);
    out.push(m);
    out.extend_from_slice(&count.to_be_bytes());
    out.resize(MAC_HEADER_BYTES as usize, 0);

    let mut acc: u32 = 0;
    let mut nbits = 0u32;
    for (k, v) in qsv.values.iter().enumerate() {
        let idx = lv
            .binary_search(v)
            .map_err(|_| Error::invalid(format!("value {v} at index {k} is not an m={m} level")))?;
        acc = (acc << m) | idx as u32;
        nbits += u32::from(m);
        while nbits >= 8 {
            nbits -= 8;
            out.push((acc >> nbits) as u8);
        }
        acc &= (1 << nbits) - 1;
    }
    if nbits > 0 {
        out.push((acc << (8 - nbits)) as u8);
    }
    Ok(out)
}

pub fn decode_soft_payload(bytes: &[u8]) -> Result<QuantizedSoftVector> {
    let header = MAC_HEADER_BYTES as usize;
    if bytes.len() < header || &bytes[..4] != SOFT_HEADER_MAGIC {
        return Err(Error::invalid("missing soft payload header"));
    }
    let m = bytes[4];
    if !(1..=8).contains(&m) {
        return Err(Error::invalid(format!("m = {m} outside {{1..8}}")));
    }
    let count = u32::from_be_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let body = &bytes[header..];
    if body.len() != (count * m as usize).div_ceil(8) {
        return Err(Error::invalid("soft payload body length does not match header"));
    }
    let lv = levels(m);
    let mut values = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut nbits = 0u32;
    let mut bytes_iter = body.iter();
    while values.len() < count {
        while nbits < u32::from(m) {
            acc = (acc << 8) | u32::from(*bytes_iter.next().expect("length checked"));
            nbits += 8;
        }
        nbits -= u32::from(m);
        values.push(lv[(acc >> nbits) as usize & ((1 << m) - 1)]);
        acc &= (1 << nbits) - 1;
    }
    Ok(QuantizedSoftVector { values, m })
}
