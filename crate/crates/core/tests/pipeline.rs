use proptest::prelude::*;
use softcoap::aoisim::{self, emit_trace, parse_trace, DecodeProbs, DecodeSource, Mode, SimConfig};
use softcoap::convcodec::{encode, viterbi_decode, viterbi_decode_real, CodecParams};
use softcoap::linklevel::{simulate_packet, PhyParams};
use softcoap::phychannel::{apply_channel, llr, max_gain, modulate, FadingProfile};
use softcoap::softquant::{combine_real, quantize8, requantize, QuantizerParams, SoftVector};
use std::path::Path;

fn bits(v: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| (v >> (n - 1 - i) & 1) as u8).collect()
}

/// Soft values in bit-1 orientation as seen by one AP.
fn receive(coded: &[u8], snr_db: f64, seed: u64) -> (SoftVector, f64) {
    let link = apply_channel(0, &modulate(coded), FadingProfile::RayleighPerSymbol, snr_db, seed).unwrap();
    (llr(&link).negated(), max_gain(&link))
}

#[test]
fn noiseless_chain_recovers_message() {
    let p = CodecParams::default();
    let info: Vec<u8> = (0..96).map(|i| (i * 7 % 3 == 0) as u8).collect();
    let coded = encode(&info, &p).unwrap();
    let (soft, h) = receive(&coded, f64::INFINITY, 3);
    let q8 = quantize8(&soft, h, &QuantizerParams::default()).unwrap();
    for m in 1..=8 {
        let q = requantize(&q8, m).unwrap();
        assert_eq!(viterbi_decode(&q.values, &p).unwrap().info_bits, info, "m = {m}");
    }
}

#[test]
fn packets_are_reproducible_per_seed() {
    let params = PhyParams {
        info_bytes: 16,
        ..PhyParams::default()
    };
    let a: Vec<_> = (0..20).map(|k| simulate_packet(&params, &[2.0, 3.0], 9, k).unwrap()).collect();
    let b: Vec<_> = (0..20).map(|k| simulate_packet(&params, &[2.0, 3.0], 9, k).unwrap()).collect();
    assert_eq!(a, b);
    for o in &a {
        assert_eq!(o.joint.iter().all(Option::is_some), !o.decoded[0] && !o.decoded[1]);
    }
}

#[test]
fn recorded_trace_replays_identically() {
    let mut c = SimConfig::new(Mode::SoftCoAp, 4, 400);
    c.decode_source = DecodeSource::Bernoulli(vec![DecodeProbs {
        ap: vec![0.5, 0.7],
        joint: [0.6; 8],
    }]);
    let direct = aoisim::run(&c).unwrap();
    let outcomes = aoisim::slot_outcomes(&c).unwrap();
    let replayed = parse_trace(&emit_trace(&outcomes).unwrap(), Path::new("mem")).unwrap();
    c.decode_source = DecodeSource::Trace(replayed.into());
    let again = aoisim::run(&c).unwrap();
    assert_eq!(direct.per_sensor_avg_aoi, again.per_sensor_avg_aoi);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Combining is affine in the summed normalized LLRs, so the real-valued
    // decoder picks the codeword with the best LLR correlation.
    #[test]
    fn combining_preserves_the_ml_codeword(seed in any::<u64>(), snr in -2.0f64..4.0) {
        let p = CodecParams::default();
        let codebook: Vec<Vec<u8>> = (0..256).map(|v| encode(&bits(v, 8), &p).unwrap()).collect();
        let tx = &codebook[(seed % 256) as usize];
        let (own, own_h) = receive(tx, snr, seed);
        let (far, far_h) = receive(tx, snr + 1.0, seed ^ 0x5a5a);
        let q = QuantizerParams::new(0.25, 8, 1).unwrap();
        let remote = quantize8(&far, far_h, &q).unwrap();
        let qc = q.with_branches(2);
        let combined = combine_real(&own, own_h, std::slice::from_ref(&remote), &qc).unwrap();

        let (decoded, _) = viterbi_decode_real(&combined, &p).unwrap();
        let score = |cw: &[u8]| -> f64 {
            cw.iter().zip(&combined).map(|(&c, &u)| if c == 1 { u - 0.5 } else { 0.5 - u }).sum()
        };
        let best = codebook.iter().map(|c| score(c)).fold(f64::NEG_INFINITY, f64::max);
        let got = score(&encode(&decoded, &p).unwrap());
        prop_assert!((got - best).abs() <= 1e-9 * best.abs().max(1.0), "{got} vs {best}");
    }
}
