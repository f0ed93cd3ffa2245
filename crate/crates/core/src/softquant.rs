//! Soft-bit quantization, m-bit requantization for backbone forwarding,
//! reconstruction at the primary AP and multi-branch combining.

use crate::error::{Error, Result};

pub const BETA: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.25;

/// Real-valued soft bits of one AP (`ap_id = Some(r)`) or of a combination (`None`).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftVector {
    pub ap_id: Option<usize>,
    pub values: Vec<f64>,
}

impl SoftVector {
    pub fn new(ap_id: Option<usize>, values: Vec<f64>) -> Self {
        SoftVector { ap_id, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sign-flipped copy. The demapper produces `log(P(bit 0) / P(bit 1))`;
    /// the decoder wants large values for bit 1, so the receive chain flips once.
    pub fn negated(&self) -> SoftVector {
        SoftVector {
            ap_id: self.ap_id,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Integer soft bits restricted to the `2^m` levels of an m-bit quantizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedSoftVector {
    pub values: Vec<u8>,
    pub m: u8,
}

impl QuantizedSoftVector {
    pub fn levels(&self) -> Vec<u8> {
        levels(self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerParams {
    pub alpha: f64,
    pub beta: f64,
    /// Range control for combined soft bits.
    pub alpha_combined: f64,
    /// Bits per forwarded soft bit.
    pub m: u8,
}

impl Default for QuantizerParams {
    fn default() -> Self {
        QuantizerParams::new(DEFAULT_ALPHA, 8, 2).expect("defaults are valid")
    }
}

impl QuantizerParams {
    /// `alpha_combined = alpha / branches`.
    pub fn new(alpha: f64, m: u8, branches: usize) -> Result<Self> {
        if !(0.2..=0.5).contains(&alpha) {
            return Err(Error::invalid(format!("alpha {alpha} outside [0.2, 0.5]")));
        }
        check_m(m)?;
        if branches == 0 {
            return Err(Error::invalid("at least one branch is required"));
        }
        Ok(QuantizerParams {
            alpha,
            beta: BETA,
            alpha_combined: alpha / branches as f64,
            m,
        })
    }

    pub fn with_branches(self, branches: usize) -> Self {
        QuantizerParams {
            alpha_combined: self.alpha / branches.max(1) as f64,
            ..self
        }
    }
}

fn check_m(m: u8) -> Result<()> {
    if (1..=8).contains(&m) {
        Ok(())
    } else {
        Err(Error::invalid(format!("m = {m} outside {{1..8}}")))
    }
}

#[inline]
fn to_byte(x: f64) -> u8 {
    // Round half up, then clamp.
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// 8-bit soft bits: `clamp(round((x / h_max_sq * alpha + beta) * 255), 0, 255)`.
pub fn quantize8(soft: &SoftVector, h_max_sq: f64, q: &QuantizerParams) -> Result<QuantizedSoftVector> {
    if !(h_max_sq > 0.0) {
        return Err(Error::invalid(format!("h_max_sq must be positive, got {h_max_sq}")));
    }
    let values = soft
        .values
        .iter()
        .map(|x| to_byte((x / h_max_sq * q.alpha + q.beta) * 255.0))
        .collect();
    Ok(QuantizedSoftVector { values, m: 8 })
}

/// The `2^m` permitted values `floor(i * 255 / (2^m - 1))`.
pub fn levels(m: u8) -> Vec<u8> {
    let top = (1u32 << m) - 1;
    (0..=top).map(|i| (i * 255 / top) as u8).collect()
}

/// Nearest m-bit level to an 8-bit value.
///
/// Exact midpoints go to the higher level. For `m = 1` the decision follows
/// the fixed threshold: values up to and including 128 map to 0.
pub fn snap(value: u8, m: u8) -> u8 {
    if m >= 8 {
        return value;
    }
    if m == 1 {
        return if value <= 128 { 0 } else { 255 };
    }
    let top = (1u32 << m) - 1;
    let level = |i: u32| i * 255 / top;
    let v = u32::from(value);
    // Candidate index from the ideal (unfloored) spacing; the true nearest is adjacent.
    let guess = (v * top + 127) / 255;
    let mut best = level(guess);
    for i in guess.saturating_sub(1)..=(guess + 1).min(top) {
        let l = level(i);
        let (d, db) = (l.abs_diff(v), best.abs_diff(v));
        if d < db || (d == db && l > best) {
            best = l;
        }
    }
    best as u8
}

/// Requantizes 8-bit soft bits to `m_out` bits.
pub fn requantize(qsv: &QuantizedSoftVector, m_out: u8) -> Result<QuantizedSoftVector> {
    check_m(m_out)?;
    if qsv.m != 8 {
        return Err(Error::invalid(format!("requantize expects m = 8 input, got m = {}", qsv.m)));
    }
    Ok(QuantizedSoftVector {
        values: qsv.values.iter().map(|&v| snap(v, m_out)).collect(),
        m: m_out,
    })
}

/// Normalized soft bit recovered from a quantized value: `(v / 255 - beta) / alpha`.
pub fn reconstruct(qsv: &QuantizedSoftVector, q: &QuantizerParams) -> SoftVector {
    let values = qsv
        .values
        .iter()
        .map(|&v| (f64::from(v) / 255.0 - q.beta) / q.alpha)
        .collect();
    SoftVector::new(None, values)
}

/// Unclamped, unrounded combined confidence on the unit scale:
/// `(own / own_h_max_sq + sum of reconstructed remotes) * alpha_combined + beta`.
pub fn combine_real(
    own: &SoftVector,
    own_h_max_sq: f64,
    remote: &[QuantizedSoftVector],
    q: &QuantizerParams,
) -> Result<Vec<f64>> {
    if !(own_h_max_sq > 0.0) {
        return Err(Error::invalid(format!(
            "own_h_max_sq must be positive, got {own_h_max_sq}"
        )));
    }
    if let Some(r) = remote.iter().find(|r| r.values.len() != own.len()) {
        return Err(Error::invalid(format!(
            "length mismatch: own {} vs remote {}",
            own.len(),
            r.values.len()
        )));
    }
    let mut acc: Vec<f64> = own.values.iter().map(|x| x / own_h_max_sq).collect();
    for r in remote {
        for (a, rec) in acc.iter_mut().zip(reconstruct(r, q).values) {
            *a += rec;
        }
    }
    Ok(acc
        .into_iter()
        .map(|s| s * q.alpha_combined + q.beta)
        .collect())
}

/// Combined 8-bit soft bits fed to the primary's Viterbi decoder.
pub fn combine(
    own: &SoftVector,
    own_h_max_sq: f64,
    remote: &[QuantizedSoftVector],
    q: &QuantizerParams,
) -> Result<QuantizedSoftVector> {
    let values = combine_real(own, own_h_max_sq, remote, q)?
        .into_iter()
        .map(|u| to_byte(u * 255.0))
        .collect();
    Ok(QuantizedSoftVector { values, m: 8 })
}
