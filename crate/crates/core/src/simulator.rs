//! Monte Carlo estimation of distortion, power and failure rates.
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(seed, rho, n)` with the trial index as stream id, so results do not
//! depend on how trials are scheduled across threads. Trial outputs are
//! collected in index order and reduced sequentially.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_batch, measure, superimpose, transmit_block, ChannelBlock, TrialMeta};
use crate::error::{Error, Result};
use crate::quantizer::{admissible_sets, build_codebook, codebook_size, default_epsilon, select, Codebook};
use crate::theory::{coefficients, SchemeCoefficients, SystemParams, Theory};

/// Normal quantile used for the reported confidence interval.
pub const CI_Z: f64 = 1.96;

/// `alpha^2 < ALPHA_MARGIN * P / sigma2` triggers a numerical-margin warning.
pub const ALPHA_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Minimum-angle decoding followed by reconstruction.
    Full,
    /// Reconstruction from the transmitted codeword.
    Genie,
    /// Scaled uncoded transmission; forces `rho = 0`.
    Uncoded,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Genie => "genie",
            Mode::Uncoded => "uncoded",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "genie" => Ok(Mode::Genie),
            "uncoded" => Ok(Mode::Uncoded),
            _ => Err(Error::Usage(format!(
                "unknown mode {s:?} (expected full, genie or uncoded)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookPolicy {
    /// One codebook per grid point.
    #[default]
    Fixed,
    /// A new codebook for every trial (ensemble average).
    FreshPerTrial,
}

impl CodebookPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodebookPolicy::Fixed => "fixed",
            CodebookPolicy::FreshPerTrial => "fresh_per_trial",
        }
    }
}

impl fmt::Display for CodebookPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodebookPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(CodebookPolicy::Fixed),
            "fresh_per_trial" | "fresh" => Ok(CodebookPolicy::FreshPerTrial),
            _ => Err(Error::Usage(format!(
                "unknown codebook policy {s:?} (expected fixed or fresh_per_trial)"
            ))),
        }
    }
}

/// Per-block measurements. Normalized quantities are divided by `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// `|s - s_hat|^2 / n`.
    pub sq_error: f64,
    /// Same block reconstructed from the transmitted codeword.
    pub genie_sq_error: f64,
    /// `|x|^2 / n`.
    pub block_power: f64,
    /// `|s - u*|^2 / n`.
    pub quant_error: f64,
    pub encode_failed: bool,
    pub decode_correct: bool,
    /// `<s, u*> / n`.
    pub inner_su: f64,
    /// `<s - u*, u*> / n`.
    pub orth_defect: f64,
    /// `<z, u_hat> / n`.
    pub noise_codeword: f64,
}

/// Aggregated statistics of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Parameters actually simulated (`rho = 0` in uncoded mode).
    pub params: SystemParams,
    pub mode: Mode,
    pub codebook_policy: CodebookPolicy,
    pub num_trials: usize,
    pub codebook_size: usize,
    pub mean_distortion: f64,
    pub stderr_distortion: f64,
    /// Normal-approximation 95% interval for the mean distortion.
    pub ci_distortion: [f64; 2],
    pub genie_mean_distortion: f64,
    pub genie_stderr_distortion: f64,
    /// Paired mean of `sq_error - genie_sq_error`.
    pub decode_penalty: f64,
    pub decode_penalty_stderr: f64,
    pub mean_power: f64,
    pub stderr_power: f64,
    /// Fraction of blocks with `|x|^2 / n > P`.
    pub power_exceedance_rate: f64,
    pub encode_failure_rate: f64,
    /// Decoding misses among blocks whose encoding succeeded.
    pub decode_error_rate: f64,
    pub mean_quant_error: f64,
    /// Mean quantization error over successfully encoded blocks.
    pub mean_quant_error_encoded: Option<f64>,
    pub mean_orth_defect: f64,
    pub mean_abs_orth_defect: f64,
    pub mean_inner_su: f64,
    pub stderr_inner_su: f64,
    pub mean_noise_codeword: f64,
    pub stderr_noise_codeword: f64,
    pub mean_distortion_given_decode_error: Option<f64>,
    pub mean_distortion_given_encode_failure: Option<f64>,
    pub theory: Theory,
    pub warnings: Vec<String>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error (sample std / sqrt(count)) in two passes.
fn mean_stderr<I>(values: I) -> (f64, f64)
where
    I: Iterator<Item = f64> + Clone,
{
    let mut acc = KahanSum::default();
    let mut count = 0usize;
    for v in values.clone() {
        acc.add(v);
        count += 1;
    }
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = acc.total() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let mut dev = KahanSum::default();
    for v in values {
        dev.add((v - mean) * (v - mean));
    }
    let var = dev.total() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

fn mean_of<I: Iterator<Item = f64> + Clone>(values: I) -> Option<f64> {
    let (m, _) = mean_stderr(values);
    (!m.is_nan()).then_some(m)
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(words: &[u64]) -> u64 {
    let mut state = 0x5EED_0F5C_A1AB_1E00;
    let mut out = 0;
    for w in words {
        state ^= *w;
        out = splitmix64(&mut state);
    }
    out
}

fn key_from(word: u64) -> [u8; 32] {
    let mut state = word;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

const CODEBOOK_TAG: u64 = 0xC0DE_B00C_0000_0001;

/// Random streams of one grid point.
#[derive(Debug, Clone, Copy)]
pub struct PointStreams {
    root: u64,
}

impl PointStreams {
    pub fn new(seed: u64, rho: f64, n: usize) -> Self {
        PointStreams {
            root: mix(&[seed, rho.to_bits(), n as u64]),
        }
    }

    /// Stream for source, encoder selection and noise of trial `t`.
    pub fn trial(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(key_from(self.root));
        rng.set_stream(t);
        rng
    }

    /// Stream for the point's fixed codebook (`None`) or trial `t`'s fresh one.
    pub fn codebook(&self, t: Option<u64>) -> ChaCha8Rng {
        let tag = t.map_or(0, |t| t + 1);
        ChaCha8Rng::from_seed(key_from(mix(&[self.root, CODEBOOK_TAG, tag])))
    }
}

/// Draws `n` i.i.d. zero-mean Gaussian source symbols of variance `sigma2`.
pub fn draw_source<R: Rng + ?Sized>(n: usize, sigma2: f64, rng: &mut R) -> Vec<f64> {
    let sd = sigma2.sqrt();
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn effective_params(params: &SystemParams, mode: Mode) -> SystemParams {
    match mode {
        Mode::Uncoded => SystemParams { rho: 0.0, ..*params },
        _ => *params,
    }
}

struct Prepared {
    params: SystemParams,
    coeffs: SchemeCoefficients,
    streams: PointStreams,
    fixed: Option<Codebook>,
}

fn prepare(params: &SystemParams, mode: Mode, policy: CodebookPolicy) -> Result<Prepared> {
    let params = effective_params(params, mode);
    params.validate()?;
    let coeffs = coefficients(&params)?;
    if !(coeffs.alpha > 0.0) {
        return Err(Error::param("alpha", "alpha is zero; rho is numerically at capacity"));
    }
    let streams = PointStreams::new(params.seed, params.rho, params.n);
    let fixed = match policy {
        CodebookPolicy::Fixed => Some(build_codebook(
            params.n,
            params.rho,
            coeffs.radius2,
            &mut streams.codebook(None),
        )?),
        CodebookPolicy::FreshPerTrial => None,
    };
    Ok(Prepared {
        params,
        coeffs,
        streams,
        fixed,
    })
}

/// Trials sharing one pass over a fixed codebook.
const BATCH: usize = 32;

fn trial_result(meta: &TrialMeta) -> TrialResult {
    TrialResult {
        sq_error: meta.sq_error,
        genie_sq_error: meta.genie_sq_error,
        block_power: meta.block_power,
        quant_error: meta.quant_error,
        encode_failed: meta.encode_failed,
        decode_correct: meta.decode_correct(),
        inner_su: meta.inner_su,
        orth_defect: meta.orth_defect,
        noise_codeword: meta.noise_codeword,
    }
}

fn run_fresh_trial(p: &Prepared, mode: Mode, t: u64) -> Result<TrialResult> {
    let cb = build_codebook(
        p.params.n,
        p.params.rho,
        p.coeffs.radius2,
        &mut p.streams.codebook(Some(t)),
    )?;
    let mut rng = p.streams.trial(t);
    let s = draw_source(p.params.n, p.params.sigma2, &mut rng);
    let (_, meta) = transmit_block(
        &s,
        &p.coeffs,
        &cb,
        p.params.epsilon,
        p.params.noise,
        &mut rng,
        mode == Mode::Genie,
    )?;
    Ok(trial_result(&meta))
}

// Same draws and arithmetic as `transmit_block` per trial; only the
// codebook scans are shared.
fn run_batch(p: &Prepared, cb: &Codebook, mode: Mode, trials: std::ops::Range<u64>) -> Result<Vec<TrialResult>> {
    let mut rngs: Vec<ChaCha8Rng> = trials.map(|t| p.streams.trial(t)).collect();
    let sources: Vec<Vec<f64>> = rngs
        .iter_mut()
        .map(|rng| draw_source(p.params.n, p.params.sigma2, rng))
        .collect();
    let refs: Vec<&[f64]> = sources.iter().map(|s| s.as_slice()).collect();
    let admissible = admissible_sets(&refs, cb, p.coeffs.target_cos, p.params.epsilon)?;

    let mut encoded = Vec::with_capacity(sources.len());
    for ((s, adm), rng) in sources.iter().zip(&admissible).zip(rngs.iter_mut()) {
        let (x, record) = superimpose(s, &p.coeffs, cb, select(adm, rng));
        encoded.push((record, ChannelBlock::transmit(x, p.params.noise, rng)));
    }
    let decoded: Vec<Option<usize>> = match mode {
        Mode::Genie => vec![None; encoded.len()],
        _ => {
            let ys: Vec<&[f64]> = encoded.iter().map(|(_, b)| b.y.as_slice()).collect();
            decode_batch(&ys, cb).into_iter().map(Some).collect()
        }
    };
    sources
        .iter()
        .zip(&encoded)
        .zip(decoded)
        .map(|((s, (record, block)), d)| {
            measure(s, &p.coeffs, cb, record, block, d).map(|(_, meta)| trial_result(&meta))
        })
        .collect()
}

/// Runs `num_trials` blocks and returns the raw per-block results in
/// trial order.
pub fn run_trials(
    params: &SystemParams,
    num_trials: usize,
    mode: Mode,
    policy: CodebookPolicy,
) -> Result<Vec<TrialResult>> {
    if num_trials == 0 {
        return Err(Error::param("num_trials", "must be >= 1"));
    }
    let prepared = prepare(params, mode, policy)?;
    match &prepared.fixed {
        Some(cb) => {
            let batches: Vec<Vec<TrialResult>> = (0..num_trials.div_ceil(BATCH))
                .into_par_iter()
                .map(|b| {
                    let lo = (b * BATCH) as u64;
                    let hi = ((b + 1) * BATCH).min(num_trials) as u64;
                    run_batch(&prepared, cb, mode, lo..hi)
                })
                .collect::<Result<_>>()?;
            Ok(batches.into_iter().flatten().collect())
        }
        None => (0..num_trials as u64)
            .into_par_iter()
            .map(|t| run_fresh_trial(&prepared, mode, t))
            .collect(),
    }
}

/// Runs the simulation and aggregates it into a report.
pub fn run(params: &SystemParams, num_trials: usize, mode: Mode, policy: CodebookPolicy) -> Result<RunReport> {
    let trials = run_trials(params, num_trials, mode, policy)?;
    RunReport::from_trials(params, mode, policy, &trials)
}

impl RunReport {
    pub fn from_trials(
        params: &SystemParams,
        mode: Mode,
        policy: CodebookPolicy,
        trials: &[TrialResult],
    ) -> Result<RunReport> {
        if trials.is_empty() {
            return Err(Error::param("num_trials", "must be >= 1"));
        }
        let params = effective_params(params, mode);
        let theory = Theory::evaluate(&params)?;
        let total = trials.len();
        let it = trials.iter();

        let (mean_distortion, stderr_distortion) = mean_stderr(it.clone().map(|t| t.sq_error));
        let (genie_mean_distortion, genie_stderr_distortion) = mean_stderr(it.clone().map(|t| t.genie_sq_error));
        let (decode_penalty, decode_penalty_stderr) = mean_stderr(it.clone().map(|t| t.sq_error - t.genie_sq_error));
        let (mean_power, stderr_power) = mean_stderr(it.clone().map(|t| t.block_power));
        let (mean_inner_su, stderr_inner_su) = mean_stderr(it.clone().map(|t| t.inner_su));
        let (mean_noise_codeword, stderr_noise_codeword) = mean_stderr(it.clone().map(|t| t.noise_codeword));

        let encoded = it.clone().filter(|t| !t.encode_failed);
        let n_encoded = encoded.clone().count();
        let n_decode_err = encoded.clone().filter(|t| !t.decode_correct).count();

        let mut warnings = Vec::new();
        if theory.alpha * theory.alpha < ALPHA_MARGIN * params.power / params.sigma2 {
            warnings.push(format!(
                "numerical margin: alpha^2 = {:e} is below {ALPHA_MARGIN:e} * P / sigma2; rho is close to capacity",
                theory.alpha * theory.alpha
            ));
        }

        Ok(RunReport {
            params,
            mode,
            codebook_policy: policy,
            num_trials: total,
            codebook_size: if params.rho == 0.0 {
                1
            } else {
                codebook_size(params.n, params.rho)?
            },
            mean_distortion,
            stderr_distortion,
            ci_distortion: [
                mean_distortion - CI_Z * stderr_distortion,
                mean_distortion + CI_Z * stderr_distortion,
            ],
            genie_mean_distortion,
            genie_stderr_distortion,
            decode_penalty,
            decode_penalty_stderr,
            mean_power,
            stderr_power,
            power_exceedance_rate: rate(it.clone().filter(|t| t.block_power > params.power).count(), total),
            encode_failure_rate: rate(total - n_encoded, total),
            decode_error_rate: rate(n_decode_err, n_encoded),
            mean_quant_error: mean_stderr(it.clone().map(|t| t.quant_error)).0,
            mean_quant_error_encoded: mean_of(encoded.clone().map(|t| t.quant_error)),
            mean_orth_defect: mean_stderr(it.clone().map(|t| t.orth_defect)).0,
            mean_abs_orth_defect: mean_stderr(it.clone().map(|t| t.orth_defect.abs())).0,
            mean_inner_su,
            stderr_inner_su,
            mean_noise_codeword,
            stderr_noise_codeword,
            mean_distortion_given_decode_error: mean_of(
                encoded.clone().filter(|t| !t.decode_correct).map(|t| t.sq_error),
            ),
            mean_distortion_given_encode_failure: mean_of(it.clone().filter(|t| t.encode_failed).map(|t| t.sq_error)),
            theory,
            warnings,
        })
    }
}

/// One grid point of a sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub rho: f64,
    pub n: usize,
    pub result: Result<RunReport>,
}

/// Runs one simulation per `(rho, n)` pair, rho-major. `epsilon = None`
/// applies the default tolerance for each `n`; otherwise the given value
/// is used at every point. Failing points are reported, not fatal.
pub fn sweep(
    base: &SystemParams,
    rho_grid: &[f64],
    n_grid: &[usize],
    num_trials: usize,
    mode: Mode,
    policy: CodebookPolicy,
    epsilon: Option<f64>,
) -> Vec<SweepPoint> {
    let mut points = Vec::with_capacity(rho_grid.len() * n_grid.len());
    for &rho in rho_grid {
        for &n in n_grid {
            let params = SystemParams {
                rho,
                n,
                epsilon: epsilon.unwrap_or_else(|| default_epsilon(n)),
                ..*base
            };
            points.push(SweepPoint {
                rho,
                n,
                result: run(&params, num_trials, mode, policy),
            });
        }
    }
    points
}

/// Empirical cross-terms of the distortion analysis against their
/// nominal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTermSummary {
    /// Empirical `E<s, u*> / n`.
    pub inner_su: f64,
    pub inner_su_stderr: f64,
    /// Nominal `sigma2 (1 - 2^(-2 rho))`.
    pub inner_su_reference: f64,
    /// `(inner_su - reference) / reference`; zero when the reference is zero.
    pub inner_su_relative_deviation: f64,
    /// Empirical `E<z, u_hat> / n`.
    pub noise_codeword: f64,
    pub noise_codeword_stderr: f64,
    /// `noise_codeword / noise_codeword_stderr`.
    pub noise_codeword_z: f64,
}

impl CrossTermSummary {
    pub fn from_report(report: &RunReport) -> CrossTermSummary {
        Self::build(
            &report.params,
            (report.mean_inner_su, report.stderr_inner_su),
            (report.mean_noise_codeword, report.stderr_noise_codeword),
        )
    }

    pub fn from_trials(params: &SystemParams, trials: &[TrialResult]) -> CrossTermSummary {
        Self::build(
            params,
            mean_stderr(trials.iter().map(|t| t.inner_su)),
            mean_stderr(trials.iter().map(|t| t.noise_codeword)),
        )
    }

    fn build(params: &SystemParams, su: (f64, f64), zu: (f64, f64)) -> CrossTermSummary {
        let reference = params.sigma2 * (1.0 - (-2.0 * params.rho).exp2());
        let rel = if reference == 0.0 {
            0.0
        } else {
            (su.0 - reference) / reference
        };
        let z = if zu.1 > 0.0 { zu.0 / zu.1 } else { 0.0 };
        CrossTermSummary {
            inner_su: su.0,
            inner_su_stderr: su.1,
            inner_su_reference: reference,
            inner_su_relative_deviation: rel,
            noise_codeword: zu.0,
            noise_codeword_stderr: zu.1,
            noise_codeword_z: z,
        }
    }
}

/// Cross-term summary of a report.
pub fn cross_term_stats(report: &RunReport) -> CrossTermSummary {
    CrossTermSummary::from_report(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(rho: f64, n: usize) -> SystemParams {
        SystemParams::new(1.0, 1.0, 1.0, rho, n).with_seed(42)
    }

    #[test]
    fn batched_trials_match_single_block_pipeline() {
        let params = unit(0.4, 12).with_delta(0.05);
        for mode in [Mode::Full, Mode::Genie] {
            let batched = run_trials(&params, 75, mode, CodebookPolicy::Fixed).unwrap();
            let p = prepare(&params, mode, CodebookPolicy::Fixed).unwrap();
            let cb = p.fixed.as_ref().unwrap();
            for (t, got) in batched.iter().enumerate() {
                let mut rng = p.streams.trial(t as u64);
                let s = draw_source(12, 1.0, &mut rng);
                let (_, meta) =
                    transmit_block(&s, &p.coeffs, cb, params.epsilon, 1.0, &mut rng, mode == Mode::Genie).unwrap();
                assert_eq!(*got, trial_result(&meta), "trial {t}");
            }
        }
    }

    #[test]
    fn mean_stderr_matches_textbook() {
        let (m, se) = mean_stderr([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert_relative_eq!(se, (5.0f64 / 3.0 / 4.0).sqrt());
        let (m, se) = mean_stderr([7.0].into_iter());
        assert_eq!((m, se), (7.0, 0.0));
        assert!(mean_of(std::iter::empty()).is_none());
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut k = KahanSum::default();
        k.add(1e16);
        for _ in 0..1000 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.total(), 1000.0);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a = PointStreams::new(1, 0.25, 48);
        let b = PointStreams::new(1, 0.25, 32);
        let c = PointStreams::new(2, 0.25, 48);
        let draw = |mut r: ChaCha8Rng| r.random::<u64>();
        assert_eq!(draw(a.trial(3)), draw(a.trial(3)));
        assert_ne!(draw(a.trial(3)), draw(a.trial(4)));
        assert_ne!(draw(a.trial(3)), draw(b.trial(3)));
        assert_ne!(draw(a.trial(3)), draw(c.trial(3)));
        assert_ne!(draw(a.codebook(None)), draw(a.codebook(Some(0))));
        assert_ne!(draw(a.codebook(None)), draw(a.trial(0)));
    }

    #[test]
    fn mode_and_policy_parse() {
        for m in [Mode::Full, Mode::Genie, Mode::Uncoded] {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
        assert_eq!(
            "fresh_per_trial".parse::<CodebookPolicy>().unwrap(),
            CodebookPolicy::FreshPerTrial
        );
        assert!("x".parse::<CodebookPolicy>().is_err());
    }

    #[test]
    fn rates_are_probabilities_and_errors_stderr() {
        let r = run(&unit(0.25, 16), 500, Mode::Full, CodebookPolicy::Fixed).unwrap();
        for v in [r.encode_failure_rate, r.decode_error_rate, r.power_exceedance_rate] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(r.num_trials, 500);
        assert_eq!(r.codebook_size, 16);
        assert!(r.mean_distortion >= r.genie_mean_distortion - 3.0 * r.decode_penalty_stderr);
        assert_relative_eq!(r.ci_distortion[1] - r.mean_distortion, CI_Z * r.stderr_distortion);
    }

    #[test]
    fn uncoded_mode_forces_zero_rate() {
        let r = run(&unit(0.25, 8), 100, Mode::Uncoded, CodebookPolicy::Fixed).unwrap();
        assert_eq!(r.params.rho, 0.0);
        assert_eq!(r.codebook_size, 1);
        assert_eq!(r.mean_inner_su, 0.0);
        assert_eq!(r.mean_distortion, r.genie_mean_distortion);
        assert_eq!(r.encode_failure_rate, 0.0);
        assert_eq!(r.decode_error_rate, 0.0);
    }

    #[test]
    fn genie_mode_never_misdecodes() {
        let r = run(&unit(0.25, 16), 300, Mode::Genie, CodebookPolicy::Fixed).unwrap();
        assert_eq!(r.decode_error_rate, 0.0);
        assert_eq!(r.decode_penalty, 0.0);
        assert!(r.mean_distortion_given_decode_error.is_none());
    }

    #[test]
    fn full_and_genie_see_the_same_blocks() {
        let p = unit(0.25, 16);
        let full = run_trials(&p, 200, Mode::Full, CodebookPolicy::Fixed).unwrap();
        let genie = run_trials(&p, 200, Mode::Genie, CodebookPolicy::Fixed).unwrap();
        for (f, g) in full.iter().zip(&genie) {
            assert_eq!(f.genie_sq_error, g.sq_error);
            assert_eq!(f.quant_error, g.quant_error);
            assert_eq!(f.block_power, g.block_power);
        }
    }

    #[test]
    fn fresh_codebooks_differ_from_fixed() {
        let p = unit(0.25, 16);
        let a = run(&p, 200, Mode::Genie, CodebookPolicy::Fixed).unwrap();
        let b = run(&p, 200, Mode::Genie, CodebookPolicy::FreshPerTrial).unwrap();
        let c = run(&p, 200, Mode::Genie, CodebookPolicy::FreshPerTrial).unwrap();
        assert_ne!(a.mean_distortion, b.mean_distortion);
        assert_eq!(b, c);
    }

    #[test]
    fn zero_rate_sweep_point_equals_uncoded_run() {
        let base = unit(0.0, 16);
        let pts = sweep(&base, &[0.0], &[16], 300, Mode::Full, CodebookPolicy::Fixed, None);
        let unc = run(&unit(0.3, 16), 300, Mode::Uncoded, CodebookPolicy::Fixed).unwrap();
        let mut swept = pts.into_iter().next().unwrap().result.unwrap();
        swept.mode = Mode::Uncoded;
        assert_eq!(swept.mean_distortion, unc.mean_distortion);
        assert_eq!(swept.mean_power, unc.mean_power);
    }

    #[test]
    fn sweep_collects_point_errors() {
        let base = unit(0.0, 8);
        let pts = sweep(
            &base,
            &[0.1, 0.6],
            &[8, 12],
            20,
            Mode::Genie,
            CodebookPolicy::Fixed,
            None,
        );
        assert_eq!(pts.len(), 4);
        let order: Vec<(f64, usize)> = pts.iter().map(|p| (p.rho, p.n)).collect();
        assert_eq!(order, vec![(0.1, 8), (0.1, 12), (0.6, 8), (0.6, 12)]);
        assert!(pts[0].result.is_ok() && pts[1].result.is_ok());
        assert!(matches!(pts[2].result, Err(Error::AboveCapacity { .. })));
        assert_relative_eq!(pts[0].result.as_ref().unwrap().params.epsilon, 0.5 / 8f64.sqrt());
    }

    #[test]
    fn near_capacity_points_carry_margin_warning() {
        let r = run(&unit(0.5 - 1e-9, 4), 10, Mode::Genie, CodebookPolicy::Fixed).unwrap();
        assert!(r.theory.alpha < 1e-3);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("numerical margin"));
        let ok = run(&unit(0.25, 4), 10, Mode::Genie, CodebookPolicy::Fixed).unwrap();
        assert!(ok.warnings.is_empty());
    }

    #[test]
    fn cross_terms_at_zero_rate_vanish_exactly() {
        let p = unit(0.0, 8);
        let trials = run_trials(&p, 100, Mode::Full, CodebookPolicy::Fixed).unwrap();
        let x = CrossTermSummary::from_trials(&p, &trials);
        assert_eq!(x.inner_su, 0.0);
        assert_eq!(x.inner_su_reference, 0.0);
        assert_eq!(x.noise_codeword, 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run(&unit(0.1, 8), 0, Mode::Full, CodebookPolicy::Fixed).is_err());
    }
}
