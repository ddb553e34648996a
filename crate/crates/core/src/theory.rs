//! Closed-form quantities of the superimposed scheme.
//!
//! Everything here is a pure function of the system constants: channel
//! capacity, the Gaussian distortion-rate function, the optimum end-to-end
//! distortion, and the gains `alpha`, `beta`, `gamma` that the codec uses.
//! The simulator and the tests check Monte Carlo output against these.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer;

/// Radicand values in `[-RADICAND_CLAMP, 0)` are treated as zero when
/// computing `alpha` near capacity.
pub const RADICAND_CLAMP: f64 = 1e-12;

/// Channel capacity of the AWGN channel, `0.5 * log2(1 + P/N)` bits per use.
pub fn capacity(power: f64, noise: f64) -> Result<f64> {
    check_positive("power", power)?;
    check_positive("noise", noise)?;
    Ok(0.5 * (power / noise).ln_1p() / std::f64::consts::LN_2)
}

/// Distortion-rate function of a memoryless Gaussian source, `sigma2 * 2^(-2R)`.
pub fn distortion_rate(sigma2: f64, rate: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::param("rate", format!("must be finite and >= 0, got {rate}")));
    }
    Ok(sigma2 * (-2.0 * rate).exp2())
}

/// Optimum distortion `D* = sigma2 * N / (P + N)`: the distortion-rate
/// function evaluated at capacity.
pub fn optimal_distortion(sigma2: f64, power: f64, noise: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    check_positive("power", power)?;
    check_positive("noise", noise)?;
    Ok(sigma2 * noise / (power + noise))
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Every constant that defines one instance of the scheme plus the
/// simulator knobs that go with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Source variance.
    pub sigma2: f64,
    /// Channel input power budget `P`.
    pub power: f64,
    /// Channel noise variance `N`.
    pub noise: f64,
    /// Quantizer rate in bits per source symbol.
    pub rho: f64,
    /// Blocklength.
    pub n: usize,
    /// Half-width of the encoder's cosine acceptance band.
    pub epsilon: f64,
    /// Codeword-sphere shrink factor; the radius is scaled by `1 - delta`.
    pub delta: f64,
    pub seed: u64,
}

impl SystemParams {
    /// Parameters with the default encoder tolerance for `n`, no sphere
    /// shrink and seed 0.
    pub fn new(sigma2: f64, power: f64, noise: f64, rho: f64, n: usize) -> Self {
        SystemParams {
            sigma2,
            power,
            noise,
            rho,
            n,
            epsilon: quantizer::default_epsilon(n),
            delta: 0.0,
            seed: 0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn capacity(&self) -> Result<f64> {
        capacity(self.power, self.noise)
    }

    /// Checks every invariant, including `rho < C` and the codebook size guard.
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma2", self.sigma2)?;
        check_positive("power", self.power)?;
        check_positive("noise", self.noise)?;
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::param(
                "rho",
                format!("must be finite and >= 0, got {}", self.rho),
            ));
        }
        let cap = self.capacity()?;
        if self.rho >= cap {
            return Err(Error::AboveCapacity {
                rho: self.rho,
                capacity: cap,
            });
        }
        if self.n == 0 {
            return Err(Error::param("n", "blocklength must be >= 1"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param(
                "epsilon",
                format!("must be finite and >= 0, got {}", self.epsilon),
            ));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        quantizer::codebook_size(self.n, self.rho)?;
        Ok(())
    }
}

/// Derived constants of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeCoefficients {
    /// Gain applied to the source block.
    pub alpha: f64,
    /// Gain applied to the chosen codeword.
    pub beta: f64,
    /// Nominal quantization error `sigma2 * 2^(-2 rho)`.
    pub delta_q: f64,
    /// Reconstruction gain `alpha^2 Delta / (alpha^2 Delta + N)`.
    pub gamma: f64,
    /// Per-symbol squared codeword radius `sigma2 (1 - 2^(-2 rho)) (1 - delta)^2`.
    pub radius2: f64,
    /// Cosine at which `s - u` is orthogonal to `u` for a typical source
    /// block: `sqrt(radius2 / sigma2)`.
    pub target_cos: f64,
}

/// Evaluates `alpha`, `beta`, `Delta`, `gamma` and the codeword radius.
pub fn coefficients(params: &SystemParams) -> Result<SchemeCoefficients> {
    params.validate()?;
    let SystemParams {
        sigma2,
        power,
        noise,
        rho,
        delta,
        ..
    } = *params;

    let q = (-2.0 * rho).exp2();
    let mut radicand = (q * (noise + power) - noise) / (sigma2 * q);
    if radicand < 0.0 {
        if radicand >= -RADICAND_CLAMP {
            radicand = 0.0;
        } else {
            return Err(Error::AboveCapacity {
                rho,
                capacity: params.capacity()?,
            });
        }
    }
    let alpha = radicand.sqrt();
    let beta = ((power + noise) / sigma2).sqrt() - alpha;
    let delta_q = sigma2 * q;
    let gamma = alpha * alpha * delta_q / (alpha * alpha * delta_q + noise);
    let shrink = (1.0 - delta) * (1.0 - delta);
    let radius2 = sigma2 * (1.0 - q) * shrink;
    let target_cos = ((1.0 - q) * shrink).sqrt();

    Ok(SchemeCoefficients {
        alpha,
        beta,
        delta_q,
        gamma,
        radius2,
        target_cos,
    })
}

/// Signal-to-noise ratio seen by the minimum-angle decoder when the scaled
/// quantization noise is treated as Gaussian:
/// `(alpha+beta)^2 sigma2 (1 - 2^(-2 rho)) / (alpha^2 sigma2 2^(-2 rho) + N)`.
///
/// Uses the nominal (unshrunk) codeword power, so with any `delta` the
/// result is `2^(2 rho) - 1`.
pub fn effective_decode_snr(coeffs: &SchemeCoefficients, sigma2: f64, noise: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    check_positive("noise", noise)?;
    let gain = coeffs.alpha + coeffs.beta;
    let signal = gain * gain * (sigma2 - coeffs.delta_q);
    let interference = coeffs.alpha * coeffs.alpha * coeffs.delta_q + noise;
    Ok(signal / interference)
}

/// Expected distortion of the two-phase reconstructor when the first phase
/// always recovers the transmitted codeword: `Delta N / (alpha^2 Delta + N)`.
pub fn predicted_genie_distortion(coeffs: &SchemeCoefficients, noise: f64) -> Result<f64> {
    check_positive("noise", noise)?;
    if !(coeffs.alpha > 0.0) {
        return Err(Error::param("alpha", "reconstruction requires alpha > 0 (rho < C)"));
    }
    let a2d = coeffs.alpha * coeffs.alpha * coeffs.delta_q;
    Ok(coeffs.delta_q * noise / (a2d + noise))
}

/// Reference values attached to every simulation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub capacity: f64,
    /// `D(rho)`, the distortion-rate function at the quantizer rate.
    pub distortion_at_rho: f64,
    /// `D*`.
    pub optimal_distortion: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta_q: f64,
    pub radius2: f64,
    pub effective_snr: f64,
    /// `None` when `alpha` is zero.
    pub predicted_genie_distortion: Option<f64>,
}

impl Theory {
    pub fn evaluate(params: &SystemParams) -> Result<Theory> {
        let c = coefficients(params)?;
        Ok(Theory {
            capacity: params.capacity()?,
            distortion_at_rho: distortion_rate(params.sigma2, params.rho)?,
            optimal_distortion: optimal_distortion(params.sigma2, params.power, params.noise)?,
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
            delta_q: c.delta_q,
            radius2: c.radius2,
            effective_snr: effective_decode_snr(&c, params.sigma2, params.noise)?,
            predicted_genie_distortion: predicted_genie_distortion(&c, params.noise).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(rho: f64) -> SystemParams {
        SystemParams::new(1.0, 1.0, 1.0, rho, 16)
    }

    #[test]
    fn capacity_examples() {
        assert_relative_eq!(capacity(3.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(capacity(1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(capacity(15.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert!(capacity(0.0, 1.0).is_err());
        assert!(capacity(1.0, -1.0).is_err());
    }

    #[test]
    fn distortion_rate_examples() {
        assert_eq!(distortion_rate(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(distortion_rate(1.0, 0.5).unwrap(), 0.5);
        assert_relative_eq!(distortion_rate(4.0, 1.0).unwrap(), 1.0);
        assert!(distortion_rate(1.0, -0.1).is_err());
    }

    #[test]
    fn optimal_distortion_examples() {
        assert_relative_eq!(optimal_distortion(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(optimal_distortion(1.0, 3.0, 1.0).unwrap(), 0.25);
        assert_relative_eq!(optimal_distortion(2.0, 1.0, 3.0).unwrap(), 1.5);
        assert!(optimal_distortion(1.0, 0.0, 1.0).is_err());
        let via_rate = distortion_rate(2.0, capacity(1.0, 3.0).unwrap()).unwrap();
        assert_relative_eq!(via_rate, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn coefficients_at_zero_rate_are_goblick() {
        let c = coefficients(&unit(0.0)).unwrap();
        assert_relative_eq!(c.alpha, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.beta, 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_eq!(c.delta_q, 1.0);
        assert_relative_eq!(c.gamma, 0.5, epsilon = 1e-15);
        assert_eq!(c.radius2, 0.0);
        assert_eq!(c.target_cos, 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn coefficients_quarter_bit() {
        // Independent route: solve the power identity
        // (P+N)(1-q) + alpha^2 sigma2 q = P for alpha with q = 2^(-1/2).
        let q = 0.5f64.sqrt();
        let alpha_oracle = ((1.0 - 2.0 * (1.0 - q)) / q).sqrt();
        let c = coefficients(&unit(0.25)).unwrap();
        assert_relative_eq!(c.alpha, alpha_oracle, max_relative = 1e-12);
        assert_relative_eq!(c.alpha, 0.76537, epsilon = 1e-5);
        assert_relative_eq!(c.beta, 0.64885, epsilon = 1e-5);
        assert_relative_eq!(c.delta_q, 0.70711, epsilon = 1e-5);
        assert_relative_eq!(c.gamma, 0.29289, epsilon = 1e-5);
        assert_relative_eq!(c.radius2, 0.29289, epsilon = 1e-5);
    }

    #[test]
    fn shrink_scales_radius_and_target() {
        let c = coefficients(&unit(0.25).with_delta(0.1)).unwrap();
        let q = 0.5f64.sqrt();
        assert_relative_eq!(c.radius2, (1.0 - q) * 0.81, max_relative = 1e-12);
        assert_relative_eq!(c.target_cos, (1.0 - q).sqrt() * 0.9, max_relative = 1e-12);
        // gains do not depend on the shrink
        let c0 = coefficients(&unit(0.25)).unwrap();
        assert_eq!(c.alpha, c0.alpha);
        assert_eq!(c.beta, c0.beta);
    }

    #[test]
    fn rho_at_or_above_capacity_rejected() {
        let err = coefficients(&unit(0.5)).unwrap_err();
        assert!(matches!(err, Error::AboveCapacity { .. }), "{err}");
        assert!(err.to_string().contains("capacity"));
        assert!(coefficients(&unit(0.7)).is_err());
    }

    #[test]
    fn alpha_vanishes_near_capacity() {
        let c = coefficients(&unit(0.5 - 1e-12)).unwrap();
        assert!(c.alpha < 1e-5, "alpha = {}", c.alpha);
    }

    #[test]
    fn alpha_strictly_decreasing_in_rho() {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let rho = 0.5 * i as f64 / 50.0;
            let a = coefficients(&unit(rho)).unwrap().alpha;
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn effective_snr_examples() {
        let c = coefficients(&unit(0.25)).unwrap();
        let snr = effective_decode_snr(&c, 1.0, 1.0).unwrap();
        assert_relative_eq!(snr, 2f64.sqrt() - 1.0, max_relative = 1e-12);
        assert_relative_eq!(0.5 * (1.0 + snr).log2(), 0.25, epsilon = 1e-12);
        let c0 = coefficients(&unit(0.0)).unwrap();
        assert_eq!(effective_decode_snr(&c0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn genie_distortion_examples() {
        let c = coefficients(&unit(0.25)).unwrap();
        assert_relative_eq!(predicted_genie_distortion(&c, 1.0).unwrap(), 0.5, max_relative = 1e-12);
        let p = SystemParams::new(1.0, 3.0, 1.0, 0.5, 16);
        let c = coefficients(&p).unwrap();
        assert_relative_eq!(predicted_genie_distortion(&c, 1.0).unwrap(), 0.25, max_relative = 1e-12);
        let c0 = coefficients(&unit(0.0)).unwrap();
        assert_relative_eq!(predicted_genie_distortion(&c0, 1.0).unwrap(), 0.5, max_relative = 1e-12);
        let zero = SchemeCoefficients { alpha: 0.0, ..c0 };
        assert!(predicted_genie_distortion(&zero, 1.0).is_err());
    }

    #[test]
    fn validation_catches_each_field() {
        let ok = unit(0.25);
        assert!(ok.validate().is_ok());
        assert!(SystemParams { sigma2: 0.0, ..ok }.validate().is_err());
        assert!(SystemParams { power: -1.0, ..ok }.validate().is_err());
        assert!(SystemParams { noise: f64::NAN, ..ok }.validate().is_err());
        assert!(SystemParams { rho: -0.1, ..ok }.validate().is_err());
        assert!(SystemParams { n: 0, ..ok }.validate().is_err());
        assert!(SystemParams { epsilon: -1.0, ..ok }.validate().is_err());
        assert!(SystemParams { delta: 1.0, ..ok }.validate().is_err());
        let huge = SystemParams {
            n: 200,
            rho: 0.49,
            ..ok
        };
        assert!(huge.validate().unwrap_err().is_resource());
    }
}
