//! Rate-1/2 convolutional code ([133, 171] octal, K = 7) with a soft-input
//! Viterbi decoder over 8-bit confidence values.
//!
//! Soft value convention: 255 means "coded bit is 1", 0 means "coded bit is 0".
//! The branch metric for expected bit `b` and soft value `s` is `s` when
//! `b == 1` and `255 - s` otherwise; the decoder maximizes the summed metric
//! over zero-terminated paths.

use crate::error::{Error, Result};

pub const CONSTRAINT_LENGTH: u32 = 7;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecParams {
    constraint_length: u32,
    generators: [u32; 2],
}

impl Default for CodecParams {
    fn default() -> Self {
        CodecParams {
            constraint_length: CONSTRAINT_LENGTH,
            generators: GENERATORS,
        }
    }
}

impl CodecParams {
    pub fn new(constraint_length: u32, generators: [u32; 2]) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::invalid(format!(
                "constraint length {constraint_length} outside 2..=16"
            )));
        }
        let lead = 1u32 << (constraint_length - 1);
        for g in generators {
            if g >> constraint_length != 0 || g & lead == 0 {
                return Err(Error::invalid(format!(
                    "generator {g:o} must fit in {constraint_length} bits with the leading tap set"
                )));
            }
        }
        Ok(CodecParams {
            constraint_length,
            generators,
        })
    }

    pub fn constraint_length(&self) -> u32 {
        self.constraint_length
    }

    pub fn generators(&self) -> [u32; 2] {
        self.generators
    }

    /// Number of zero tail bits appended to terminate the trellis.
    pub fn tail_bits(&self) -> usize {
        (self.constraint_length - 1) as usize
    }

    fn memory(&self) -> u32 {
        self.constraint_length - 1
    }

    fn n_states(&self) -> usize {
        1 << self.memory()
    }

    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.tail_bits())
    }

    /// Inverse of [`coded_len`](Self::coded_len); `None` if no message length fits.
    pub fn info_len(&self, coded_len: usize) -> Option<usize> {
        if !coded_len.is_multiple_of(2) {
            return None;
        }
        (coded_len / 2)
            .checked_sub(self.tail_bits())
            .filter(|&n| n > 0)
    }

    /// Output pair for a full register `(input << memory) | state`.
    #[inline]
    fn outputs(&self, register: u32) -> (u8, u8) {
        (
            ((register & self.generators[0]).count_ones() & 1) as u8,
            ((register & self.generators[1]).count_ones() & 1) as u8,
        )
    }
}

/// A sensor update with its codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedPacket {
    pub sensor_id: usize,
    pub round_index: u64,
    pub generation_time: f64,
    pub info_bits: Vec<u8>,
    pub coded_bits: Vec<u8>,
}

impl CodedPacket {
    pub fn new(
        sensor_id: usize,
        round_index: u64,
        generation_time: f64,
        info_bits: Vec<u8>,
        params: &CodecParams,
    ) -> Result<Self> {
        let coded_bits = encode(&info_bits, params)?;
        Ok(CodedPacket {
            sensor_id,
            round_index,
            generation_time,
            info_bits,
            coded_bits,
        })
    }
}

/// Encodes `info_bits` (values 0/1) from the zero state, appending the zero tail.
pub fn encode(info_bits: &[u8], params: &CodecParams) -> Result<Vec<u8>> {
    if info_bits.is_empty() {
        return Err(Error::invalid("cannot encode an empty message"));
    }
    let memory = params.memory();
    let mask = params.n_states() as u32 - 1;
    let mut state = 0u32;
    let mut out = Vec::with_capacity(params.coded_len(info_bits.len()));
    let tail = std::iter::repeat_n(0u8, params.tail_bits());
    for bit in info_bits.iter().copied().chain(tail) {
        let register = (u32::from(bit & 1) << memory) | state;
        let (a, b) = params.outputs(register);
        out.push(a);
        out.push(b);
        state = register >> 1 & mask;
    }
    Ok(out)
}

/// Result of a Viterbi pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub info_bits: Vec<u8>,
    pub path_metric: u64,
}

/// Checked conversion from arbitrary integers to 8-bit soft values.
pub fn soft_bits_from_ints(values: &[i64]) -> Result<Vec<u8>> {
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            u8::try_from(v)
                .map_err(|_| Error::invalid(format!("soft value {v} at index {k} outside [0, 255]")))
        })
        .collect()
}

/// Soft-input Viterbi decoding of a zero-terminated codeword.
pub fn viterbi_decode(soft_bits: &[u8], params: &CodecParams) -> Result<Decoded> {
    let steps = check_len(soft_bits.len(), params)?;
    let (info_bits, metric) = viterbi_core(params, steps, |k, expected| {
        let s = i64::from(soft_bits[k]);
        if expected == 1 {
            s
        } else {
            255 - s
        }
    });
    Ok(Decoded {
        info_bits,
        path_metric: metric as u64,
    })
}

/// Viterbi over real-valued soft inputs in "bit-1 confidence" orientation,
/// branch metric `s` for an expected 1 and `1 - s` for an expected 0.
/// Used to reason about metric-order properties without integer rounding.
pub fn viterbi_decode_real(soft: &[f64], params: &CodecParams) -> Result<(Vec<u8>, f64)> {
    let steps = check_len(soft.len(), params)?;
    if let Some(k) = soft.iter().position(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite soft value at index {k}")));
    }
    Ok(viterbi_core(params, steps, |k, expected| {
        if expected == 1 {
            soft[k]
        } else {
            1.0 - soft[k]
        }
    }))
}

/// True iff the decoded message equals `true_info_bits` exactly.
pub fn decode_success(soft_bits: &[u8], params: &CodecParams, true_info_bits: &[u8]) -> Result<bool> {
    let decoded = viterbi_decode(soft_bits, params)?;
    Ok(decoded.info_bits == true_info_bits)
}

fn check_len(len: usize, params: &CodecParams) -> Result<usize> {
    if !len.is_multiple_of(2) {
        return Err(Error::invalid(format!("soft input length {len} is odd")));
    }
    if params.info_len(len).is_none() {
        return Err(Error::invalid(format!(
            "soft input length {len} is not a valid terminated codeword length"
        )));
    }
    Ok(len / 2)
}

trait Metric: Copy + PartialOrd + std::ops::Add<Output = Self> {
    const ZERO: Self;
    /// Metric of an unreachable state; adding any path metric keeps it below every reachable one.
    const UNREACHABLE: Self;
}

impl Metric for i64 {
    const ZERO: Self = 0;
    const UNREACHABLE: Self = i64::MIN / 2;
}

impl Metric for f64 {
    const ZERO: Self = 0.0;
    const UNREACHABLE: Self = f64::NEG_INFINITY;
}

/// Add-compare-select over the full trellis followed by traceback from state 0.
///
/// State = last `memory` input bits, newest in the most significant position.
/// A next state `ns` has predecessors `(ns << 1 | b) & mask` for `b` in {0, 1};
/// on equal metrics the lower-numbered predecessor (b = 0) survives.
fn viterbi_core<M: Metric>(
    params: &CodecParams,
    steps: usize,
    branch: impl Fn(usize, u8) -> M,
) -> (Vec<u8>, M) {
    let n_states = params.n_states();
    let mask = n_states - 1;
    let half = n_states / 2;
    // States j and j + half share predecessors 2j and 2j + 1. Per j, the
    // output-pair index of the registers (j, 0), (j, 1), (j + half, 0), (j + half, 1).
    let butterflies: Vec<[usize; 4]> = (0..half)
        .map(|j| {
            let idx = |r: usize| {
                let (o0, o1) = params.outputs(r as u32);
                (o0 as usize) << 1 | o1 as usize
            };
            [idx(2 * j), idx(2 * j + 1), idx(2 * j + n_states), idx(2 * j + n_states + 1)]
        })
        .collect();

    let mut metric = vec![M::UNREACHABLE; n_states];
    metric[0] = M::ZERO;
    let mut next = vec![M::UNREACHABLE; n_states];
    // One bit per state per step: which predecessor survived.
    let words = n_states.div_ceil(64);
    let mut decisions = vec![0u64; steps * words];

    for step in 0..steps {
        let bm = |o0: u8, o1: u8| branch(2 * step, o0) + branch(2 * step + 1, o1);
        let table = [bm(0, 0), bm(0, 1), bm(1, 0), bm(1, 1)];
        let row = &mut decisions[step * words..(step + 1) * words];
        let (lo, hi) = next.split_at_mut(half);
        let pairs = metric.chunks_exact(2).zip(&butterflies);
        for (j, ((nl, nh), (pm, bf))) in lo.iter_mut().zip(hi.iter_mut()).zip(pairs).enumerate() {
            let (m0, m1) = (pm[0], pm[1]);
            for (slot, ns, c0, c1) in [
                (nl, j, m0 + table[bf[0] & 3], m1 + table[bf[1] & 3]),
                (nh, j + half, m0 + table[bf[2] & 3], m1 + table[bf[3] & 3]),
            ] {
                if c1 > c0 {
                    *slot = c1;
                    row[ns / 64] |= 1 << (ns % 64);
                } else {
                    *slot = c0;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let final_metric = metric[0];
    let memory = params.memory();
    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for step in (0..steps).rev() {
        bits[step] = (state >> (memory as usize - 1)) as u8 & 1;
        let b = (decisions[step * words + state / 64] >> (state % 64)) & 1;
        state = ((state << 1) | b as usize) & mask;
    }
    bits.truncate(steps - params.tail_bits());
    (bits, final_metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference encoder: explicit 7-cell shift register, taps read MSB-first
    /// from the octal generator strings.
    fn reference_encode(msg: &[u8]) -> Vec<u8> {
        let taps = |octal: &str| -> Vec<u8> {
            octal
                .chars()
                .flat_map(|c| {
                    let d = c.to_digit(8).unwrap();
                    [(d >> 2) & 1, (d >> 1) & 1, d & 1]
                })
                .skip(2) // 3 octal digits = 9 bits, K = 7
                .map(|b| b as u8)
                .collect()
        };
        let g0 = taps("133");
        let g1 = taps("171");
        let mut reg = [0u8; 7];
        let mut out = vec![];
        for &bit in msg.iter().chain([0u8; 6].iter()) {
            reg.rotate_right(1);
            reg[0] = bit;
            let a = reg.iter().zip(&g0).map(|(r, g)| r & g).fold(0, |x, y| x ^ y);
            let b = reg.iter().zip(&g1).map(|(r, g)| r & g).fold(0, |x, y| x ^ y);
            out.push(a);
            out.push(b);
        }
        out
    }

    fn metric_of(codeword: &[u8], soft: &[u8]) -> u64 {
        codeword
            .iter()
            .zip(soft)
            .map(|(&b, &s)| if b == 1 { s as u64 } else { 255 - s as u64 })
            .sum()
    }

    fn hard(codeword: &[u8]) -> Vec<u8> {
        codeword.iter().map(|&b| if b == 1 { 255 } else { 0 }).collect()
    }

    #[test]
    fn default_params_are_valid() {
        let p = CodecParams::default();
        assert_eq!(CodecParams::new(7, [0o133, 0o171]).unwrap(), p);
        assert!(CodecParams::new(7, [0o033, 0o171]).is_err());
        assert!(CodecParams::new(7, [0o333, 0o171]).is_err());
        assert_eq!(p.coded_len(8), 28);
        assert_eq!(p.info_len(28), Some(8));
        assert_eq!(p.info_len(12), None);
        assert_eq!(p.info_len(27), None);
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let out = encode(&[0; 8], &CodecParams::default()).unwrap();
        assert_eq!(out, vec![0; 28]);
    }

    #[test]
    fn leading_one_emits_one_one() {
        let out = encode(&[1, 0, 0], &CodecParams::default()).unwrap();
        assert_eq!(&out[..2], &[1, 1]);
    }

    #[test]
    fn empty_message_is_rejected() {
        assert!(matches!(
            encode(&[], &CodecParams::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn matches_reference_encoder_on_random_messages() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let msg: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(encode(&msg, &CodecParams::default()).unwrap(), reference_encode(&msg));
        }
    }

    #[test]
    fn clean_codeword_decodes_with_full_metric() {
        let p = CodecParams::default();
        let msg = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1];
        let cw = encode(&msg, &p).unwrap();
        let d = viterbi_decode(&hard(&cw), &p).unwrap();
        assert_eq!(d.info_bits, msg);
        assert_eq!(d.path_metric, 255 * cw.len() as u64);
    }

    #[test]
    fn ambiguous_input_is_deterministic() {
        let p = CodecParams::default();
        let soft = vec![128u8; p.coded_len(20)];
        let a = viterbi_decode(&soft, &p).unwrap();
        let b = viterbi_decode(&soft, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.info_bits.len(), 20);
    }

    #[test]
    fn bad_lengths_and_values_are_rejected() {
        let p = CodecParams::default();
        assert!(viterbi_decode(&[0; 27], &p).is_err());
        assert!(viterbi_decode(&[0; 12], &p).is_err());
        assert!(soft_bits_from_ints(&[0, 255, 256]).is_err());
        assert!(soft_bits_from_ints(&[-1]).is_err());
        assert_eq!(soft_bits_from_ints(&[0, 17, 255]).unwrap(), vec![0, 17, 255]);
    }

    #[test]
    fn decode_success_compares_against_truth() {
        let p = CodecParams::default();
        let msg = [0, 1, 1, 0, 1];
        let cw = hard(&encode(&msg, &p).unwrap());
        assert!(decode_success(&cw, &p, &msg).unwrap());
        assert!(!decode_success(&cw, &p, &[0, 1, 1, 0, 0]).unwrap());
    }

    #[test]
    fn viterbi_is_maximum_likelihood_on_small_space() {
        let p = CodecParams::default();
        let codebook: Vec<Vec<u8>> = (0..64u32)
            .map(|v| encode(&(0..6).map(|i| (v >> i & 1) as u8).collect::<Vec<_>>(), &p).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let soft: Vec<u8> = (0..24).map(|_| rng.random()).collect();
            let best = codebook.iter().map(|cw| metric_of(cw, &soft)).max().unwrap();
            assert_eq!(viterbi_decode(&soft, &p).unwrap().path_metric, best);
        }
    }

    #[test]
    fn real_and_integer_decoders_agree_on_exact_inputs() {
        let p = CodecParams::default();
        let msg = [1, 1, 0, 1, 0, 0, 0, 1];
        let cw = encode(&msg, &p).unwrap();
        let soft: Vec<f64> = cw.iter().map(|&b| if b == 1 { 0.8 } else { 0.3 }).collect();
        let (bits, _) = viterbi_decode_real(&soft, &p).unwrap();
        assert_eq!(bits, msg);
        assert!(viterbi_decode_real(&[f64::NAN; 28], &p).is_err());
    }

    proptest! {
        #[test]
        fn hard_round_trip(msg in proptest::collection::vec(0u8..2, 1..=64)) {
            let p = CodecParams::default();
            let cw = encode(&msg, &p).unwrap();
            prop_assert_eq!(cw.len(), 2 * (msg.len() + 6));
            prop_assert_eq!(viterbi_decode(&hard(&cw), &p).unwrap().info_bits, msg);
        }

        #[test]
        fn encoder_is_linear(pair in (1usize..40).prop_flat_map(|n| (
            proptest::collection::vec(0u8..2, n),
            proptest::collection::vec(0u8..2, n),
        ))) {
            let p = CodecParams::default();
            let (a, b) = pair;
            let x: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = encode(&a, &p).unwrap();
            let eb = encode(&b, &p).unwrap();
            let ex: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(encode(&x, &p).unwrap(), ex);
        }
    }
}
