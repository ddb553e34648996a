//! Superimposed coded and uncoded transmission of a memoryless Gaussian
//! source over an average-power-limited AWGN channel.
//!
//! The transmitter sends `x = alpha s + beta u*`, where `u*` is a codeword
//! of a random spherical vector quantizer of rate `rho` picked at a typical
//! angle to the source block `s`. The receiver decodes `u*` by minimum
//! angle and then forms a linear estimate of `s`. For every `0 <= rho < C`
//! the distortion approaches `sigma2 N / (P + N)` as the blocklength grows;
//! `rho = 0` is plain scaled uncoded transmission.
//!
//! - [`theory`]: closed-form capacity, distortion and coefficients.
//! - [`quantizer`]: spherical codebooks and typical-angle encoding.
//! - [`codec`]: encoder, channel, decoder, reconstructor.
//! - [`simulator`]: reproducible Monte Carlo runs and sweeps.
//! - [`config`], [`output`], [`cli`]: the `supercode` command-line tool.
//!
//! ```
//! use supercode::{run, CodebookPolicy, Mode, SystemParams};
//!
//! let params = SystemParams::new(1.0, 1.0, 1.0, 0.25, 16).with_seed(1);
//! let report = run(&params, 200, Mode::Genie, CodebookPolicy::Fixed)?;
//! assert_eq!(report.theory.optimal_distortion, 0.5);
//! assert!(report.mean_distortion < 1.0);
//! # Ok::<(), supercode::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod output;
pub mod quantizer;
pub mod simulator;
pub mod theory;

pub use codec::{awgn, decode_codeword, encode, reconstruct, transmit_block, EncodeRecord, TrialMeta};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use quantizer::{build_codebook, cosine, quantize, Codebook, QuantizeOutcome};
pub use simulator::{cross_term_stats, run, sweep, CodebookPolicy, Mode, RunReport, TrialResult};
pub use theory::{
    capacity, coefficients, distortion_rate, effective_decode_snr, optimal_distortion, predicted_genie_distortion,
    SchemeCoefficients, SystemParams, Theory,
};
