//! BPSK mapping, per-symbol frequency-domain channel, LLR demapping and
//! packet air-time arithmetic.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::softquant::SoftVector;

/// Maps coded bits to BPSK symbols, `x = 1 - 2v`.
pub fn modulate(coded_bits: &[u8]) -> Vec<f64> {
    coded_bits
        .iter()
        .map(|&b| if b & 1 == 0 { 1.0 } else { -1.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingProfile {
    /// Unit gain on every symbol.
    #[default]
    Flat,
    /// Independent CN(0, 1) gain per symbol.
    RayleighPerSymbol,
}

impl std::str::FromStr for FadingProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(FadingProfile::Flat),
            "rayleigh" | "rayleigh_per_symbol" => Ok(FadingProfile::RayleighPerSymbol),
            other => Err(Error::invalid(format!(
                "unknown fading profile `{other}` (expected flat | rayleigh_per_symbol)"
            ))),
        }
    }
}

/// One AP's view of a transmitted packet.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization {
    pub ap_id: usize,
    pub gains: Vec<Complex64>,
    pub noise_variance: f64,
    pub received: Vec<Complex64>,
    pub snr_db: f64,
}

/// Noise variance for unit-energy symbols at `snr_db`; `+inf` gives the noiseless limit.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `y[k] = h[k] x[k] + n[k]`, deterministic in `seed`.
pub fn apply_channel(
    ap_id: usize,
    symbols: &[f64],
    profile: FadingProfile,
    snr_db: f64,
    seed: u64,
) -> Result<LinkRealization> {
    let mut rng = rng::stream(seed, &[rng::tag::CHANNEL]);
    apply_channel_with(ap_id, symbols, profile, snr_db, &mut rng)
}

pub fn apply_channel_with<R: Rng + ?Sized>(
    ap_id: usize,
    symbols: &[f64],
    profile: FadingProfile,
    snr_db: f64,
    rng: &mut R,
) -> Result<LinkRealization> {
    if symbols.is_empty() {
        return Err(Error::invalid("no symbols to transmit"));
    }
    // +inf is accepted as the noiseless limit.
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("snr_db must be finite, got {snr_db}")));
    }
    let noise_var = noise_variance(snr_db);
    let sigma = (noise_var / 2.0).sqrt();
    let mut gaussian = |scale: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    };
    let mut gains = Vec::with_capacity(symbols.len());
    let mut received = Vec::with_capacity(symbols.len());
    let unit_scale = std::f64::consts::FRAC_1_SQRT_2;
    for &x in symbols {
        let h = match profile {
            FadingProfile::Flat => Complex64::new(1.0, 0.0),
            FadingProfile::RayleighPerSymbol => {
                Complex64::new(gaussian(unit_scale), gaussian(unit_scale))
            }
        };
        let n = if sigma > 0.0 {
            Complex64::new(gaussian(sigma), gaussian(sigma))
        } else {
            Complex64::new(0.0, 0.0)
        };
        gains.push(h);
        received.push(h * x + n);
    }
    Ok(LinkRealization {
        ap_id,
        gains,
        noise_variance: noise_var,
        received,
        snr_db,
    })
}

/// Per-symbol soft value `Re(y conj(h))`, the 2-vector dot product of `y` and `h`
/// with the constant `2 / sigma^2` dropped. Positive favours `x = +1` (coded bit 0).
pub fn llr(link: &LinkRealization) -> SoftVector {
    let values = link
        .received
        .iter()
        .zip(&link.gains)
        .map(|(y, h)| y.re * h.re + y.im * h.im)
        .collect();
    SoftVector::new(Some(link.ap_id), values)
}

/// `max_k |h[k]|^2`.
pub fn max_gain(link: &LinkRealization) -> f64 {
    link.gains
        .iter()
        .map(|h| h.norm_sqr())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingParams {
    pub preamble_samples: u32,
    pub fft_size: u32,
    pub cp_samples: u32,
    pub data_subcarriers: u32,
    pub bandwidth_hz: f64,
    pub payload_bytes: u32,
    pub code_rate_inverse: u32,
    pub slot_seconds: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            preamble_samples: 320,
            fft_size: 64,
            cp_samples: 16,
            data_subcarriers: 48,
            bandwidth_hz: 2e7,
            payload_bytes: 768,
            code_rate_inverse: 2,
            slot_seconds: 1.2e-3,
        }
    }
}

impl TimingParams {
    pub fn ofdm_symbols(&self) -> u64 {
        let coded_bits = u64::from(self.payload_bytes) * 8 * u64::from(self.code_rate_inverse);
        coded_bits.div_ceil(u64::from(self.data_subcarriers))
    }
}

/// Air time of one update packet: preamble plus whole OFDM symbols (FFT + CP samples).
pub fn packet_duration(t: &TimingParams) -> Result<f64> {
    if t.payload_bytes == 0 {
        return Err(Error::config("payload_bytes must be positive"));
    }
    if t.fft_size == 0 || t.data_subcarriers == 0 || t.code_rate_inverse == 0 {
        return Err(Error::config("OFDM counts must be positive"));
    }
    if !(t.bandwidth_hz > 0.0) || !(t.slot_seconds > 0.0) {
        return Err(Error::config("bandwidth and slot duration must be positive"));
    }
    let samples = u64::from(t.preamble_samples)
        + t.ofdm_symbols() * u64::from(t.fft_size + t.cp_samples);
    let duration = samples as f64 / t.bandwidth_hz;
    if duration > t.slot_seconds {
        return Err(Error::config(format!(
            "packet duration {:.6} s exceeds slot {:.6} s",
            duration, t.slot_seconds
        )));
    }
    Ok(duration)
}
