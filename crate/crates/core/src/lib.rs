//! Age-of-Information simulator for status updates received by cooperating
//! access points that share decoded packets and quantized soft bits over a
//! wired backbone.
//!
//! Layers, bottom up:
//! - [`convcodec`]: rate-1/2 K=7 convolutional code and soft Viterbi decoder
//! - [`phychannel`]: BPSK, per-symbol channel, LLRs, packet air time
//! - [`softquant`]: 8-bit soft bits, m-bit requantization, combining
//! - [`backbone`]: forwarded payload sizing and backbone delay models
//! - [`linklevel`]: packet-level Monte Carlo of the whole receive chain
//! - [`aoisim`]: event-driven TDMA engine computing average AoI
//! - [`experiment`]: config files, sweeps, recipes and CSV output

pub mod aoisim;
pub mod backbone;
pub mod convcodec;
pub mod error;
pub mod experiment;
pub mod linklevel;
pub mod par;
pub mod phychannel;
pub mod rng;
pub mod softquant;

pub use error::{Error, Result};
