//! Blocklength-`n` encoder, AWGN channel, minimum-angle decoder and the
//! two-phase reconstructor.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quantizer::{dot, quantize, Codebook, QuantizeOutcome};
use crate::theory::SchemeCoefficients;

/// What the encoder did with one source block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeRecord {
    /// Codeword superimposed on the source; `None` when no codeword was
    /// admissible and the zero vector was sent instead.
    pub chosen_index: Option<usize>,
    pub encode_failed: bool,
    /// Number of admissible codewords.
    pub candidates: usize,
    /// `|x|^2 / n`.
    pub block_power: f64,
}

/// Transmitted and received block of one channel use sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBlock {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_variance: f64,
}

impl ChannelBlock {
    pub fn transmit<R: Rng + ?Sized>(x: Vec<f64>, noise_variance: f64, rng: &mut R) -> ChannelBlock {
        let y = awgn(&x, noise_variance, rng);
        ChannelBlock { x, y, noise_variance }
    }

    /// Realized noise `y - x`.
    pub fn noise(&self) -> Vec<f64> {
        self.y.iter().zip(&self.x).map(|(y, x)| y - x).collect()
    }
}

/// `x = alpha s + beta u*`, with `u* = 0` when quantization fails.
///
/// No per-block clipping: the power constraint holds in expectation only.
pub fn encode<R: Rng + ?Sized>(
    s: &[f64],
    coeffs: &SchemeCoefficients,
    cb: &Codebook,
    epsilon: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, EncodeRecord)> {
    let outcome = quantize(s, cb, coeffs.target_cos, epsilon, rng)?;
    Ok(superimpose(s, coeffs, cb, outcome))
}

/// Channel input for an already quantized block.
pub fn superimpose(
    s: &[f64],
    coeffs: &SchemeCoefficients,
    cb: &Codebook,
    outcome: QuantizeOutcome,
) -> (Vec<f64>, EncodeRecord) {
    let x: Vec<f64> = match outcome.index {
        Some(i) => s
            .iter()
            .zip(cb.codeword(i))
            .map(|(sv, uv)| coeffs.alpha * sv + coeffs.beta * uv)
            .collect(),
        None => s.iter().map(|sv| coeffs.alpha * sv).collect(),
    };
    let block_power = dot(&x, &x) / x.len() as f64;
    (
        x,
        EncodeRecord {
            chosen_index: outcome.index,
            encode_failed: outcome.index.is_none(),
            candidates: outcome.candidates,
            block_power,
        },
    )
}

/// Adds i.i.d. zero-mean Gaussian noise of variance `noise` (must be >= 0).
pub fn awgn<R: Rng + ?Sized>(x: &[f64], noise: f64, rng: &mut R) -> Vec<f64> {
    let sd = noise.sqrt();
    x.iter()
        .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `argmax_i <y, u_i>`, lowest index on ties.
///
/// # Panics
/// If `y` does not have the codebook's blocklength.
pub fn decode_codeword(y: &[f64], cb: &Codebook) -> usize {
    decode_batch(&[y], cb)[0]
}

/// [`decode_codeword`] for several received blocks in one pass over the
/// codebook.
///
/// # Panics
/// If any block does not have the codebook's blocklength.
pub fn decode_batch(ys: &[&[f64]], cb: &Codebook) -> Vec<usize> {
    const TILE: usize = 256;
    for y in ys {
        assert_eq!(y.len(), cb.dim(), "received block length does not match codebook");
    }
    let n = cb.dim();
    let mut best = vec![(0usize, f64::NEG_INFINITY); ys.len()];
    for (t, tile) in cb.as_slice().chunks(TILE * n).enumerate() {
        let first = t * TILE;
        for (y, b) in ys.iter().zip(best.iter_mut()) {
            for (j, u) in tile.chunks_exact(n).enumerate() {
                let score = dot(y, u);
                if score > b.1 {
                    *b = (first + j, score);
                }
            }
        }
    }
    best.into_iter().map(|(i, _)| i).collect()
}

/// `s_hat = u_hat + (gamma / alpha) (y - (alpha + beta) u_hat)`.
pub fn reconstruct(y: &[f64], u_hat: &[f64], coeffs: &SchemeCoefficients) -> Result<Vec<f64>> {
    if !(coeffs.alpha > 0.0) {
        return Err(Error::param("alpha", "reconstruction requires alpha > 0 (rho < C)"));
    }
    if y.len() != u_hat.len() {
        return Err(Error::Usage(format!(
            "received block has length {} but the codeword has length {}",
            y.len(),
            u_hat.len()
        )));
    }
    let slope = coeffs.gamma / coeffs.alpha;
    let gain = coeffs.alpha + coeffs.beta;
    Ok(y.iter()
        .zip(u_hat)
        .map(|(yv, uv)| uv + slope * (yv - gain * uv))
        .collect())
}

/// Per-block measurements from [`transmit_block`]. Normalized quantities
/// are divided by `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMeta {
    pub chosen_index: Option<usize>,
    pub decoded_index: usize,
    pub encode_failed: bool,
    pub candidates: usize,
    /// `|x|^2 / n`.
    pub block_power: f64,
    /// `|s - u*|^2 / n`.
    pub quant_error: f64,
    /// `|s - s_hat|^2 / n` with the reconstruction actually produced.
    pub sq_error: f64,
    /// `|s - s_hat|^2 / n` had the decoder been handed `u*`.
    pub genie_sq_error: f64,
    /// `<s, u*> / n`.
    pub inner_su: f64,
    /// `<s - u*, u*> / n`.
    pub orth_defect: f64,
    /// `<z, u_hat> / n`.
    pub noise_codeword: f64,
}

impl TrialMeta {
    /// The decoder recovered the codeword the encoder sent.
    pub fn decode_correct(&self) -> bool {
        self.chosen_index == Some(self.decoded_index)
    }
}

/// Encode, pass through the channel, decode and reconstruct one block.
///
/// Random draws happen in a fixed order (quantizer selection, then channel
/// noise) and do not depend on `genie`, so genie and full runs fed the same
/// stream see the same codeword and noise.
pub fn transmit_block<R: Rng + ?Sized>(
    s: &[f64],
    coeffs: &SchemeCoefficients,
    cb: &Codebook,
    epsilon: f64,
    noise: f64,
    rng: &mut R,
    genie: bool,
) -> Result<(Vec<f64>, TrialMeta)> {
    let (x, record) = encode(s, coeffs, cb, epsilon, rng)?;
    let block = ChannelBlock::transmit(x, noise, rng);
    let decoded = (!genie).then(|| decode_codeword(&block.y, cb));
    measure(s, coeffs, cb, &record, &block, decoded)
}

/// Second-phase reconstruction and per-block measurements. `decoded` is
/// the first-phase decision, or `None` to hand the reconstructor the
/// transmitted codeword.
pub fn measure(
    s: &[f64],
    coeffs: &SchemeCoefficients,
    cb: &Codebook,
    record: &EncodeRecord,
    block: &ChannelBlock,
    decoded: Option<usize>,
) -> Result<(Vec<f64>, TrialMeta)> {
    let n = s.len();
    let nf = n as f64;
    let z = block.noise();

    let zero = vec![0.0; n];
    let u_star = record.chosen_index.map_or(zero.as_slice(), |i| cb.codeword(i));
    let genie_hat = reconstruct(&block.y, u_star, coeffs)?;
    let genie_sq_error = sq_dist(s, &genie_hat) / nf;

    let (decoded_index, s_hat, sq_error, u_hat) = match decoded {
        // the zero fallback has no codeword index; it reports 0 and counts
        // as a decoding miss
        None => (record.chosen_index.unwrap_or(0), genie_hat, genie_sq_error, u_star),
        Some(idx) => {
            let u_hat = cb.codeword(idx);
            let s_hat = reconstruct(&block.y, u_hat, coeffs)?;
            let e = sq_dist(s, &s_hat) / nf;
            (idx, s_hat, e, u_hat)
        }
    };

    let inner_su = dot(s, u_star) / nf;
    let uu = dot(u_star, u_star) / nf;
    let meta = TrialMeta {
        chosen_index: record.chosen_index,
        decoded_index,
        encode_failed: record.encode_failed,
        candidates: record.candidates,
        block_power: record.block_power,
        quant_error: sq_dist(s, u_star) / nf,
        sq_error,
        genie_sq_error,
        inner_su,
        orth_defect: inner_su - uu,
        noise_codeword: dot(&z, u_hat) / nf,
    };
    Ok((s_hat, meta))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
