//! Scalar density-ratio and divergence math.
//!
//! Everything here is a pure function of its arguments: raw and relative
//! density ratios, mixture densities, Pearson-type divergence estimators,
//! and the threshold/gain conversions that make the divergence
//! regularization behave like a clipping threshold.
//!
//! Conventions:
//! - `rho` is the raw density ratio `pi(a|s) / pi_b(a|s)` between the latest
//!   and baseline policies, always computed in log space.
//! - `beta` is the mixture ratio of the blended density
//!   `pi_beta = beta * pi + (1 - beta) * pi_b`.
//! - `rho_beta = rho / (1 - beta + beta * rho)` is the relative ratio
//!   `pi / pi_beta`, bounded in `[0, 1/beta)`.

use crate::error::{Error, Result};
use crate::scalar::{Real, Sign};

/// Default clamp for `exp` of a log-ratio gap. Early-training log-prob gaps
/// can be huge; the ratio is clamped symmetrically to
/// `[1/max_ratio, max_ratio]` instead of propagating inf/0.
pub const DEFAULT_MAX_RATIO: f64 = 1e6;

/// Mixture ratio `beta` of the blended density, validated to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixtureParams<F> {
    beta: F,
}

impl<F: Real> MixtureParams<F> {
    pub fn new(beta: F) -> Result<Self> {
        if !beta.is_finite() || beta < F::zero() || beta > F::one() {
            return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1]")));
        }
        Ok(Self { beta })
    }

    #[inline]
    pub fn beta(&self) -> F {
        self.beta
    }
}

/// One transition's ratio quadruple: raw ratio, relative ratio, advantage
/// sign, and the advantage itself. This is the unit the surrogate losses
/// consume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSample<F> {
    rho: F,
    rho_beta: F,
    sigma: Sign,
    advantage: F,
    beta: F,
}

impl<F: Real> RatioSample<F> {
    /// Builds the quadruple from a raw ratio and an advantage under a given
    /// mixture ratio. `sigma` is the advantage sign; an exactly-zero
    /// advantage maps to `Plus` and is short-circuited by every consumer.
    pub fn new(rho: F, advantage: F, mixture: MixtureParams<F>) -> Result<Self> {
        if !advantage.is_finite() {
            return Err(Error::invalid(format!("advantage {advantage} must be finite")));
        }
        let rho_beta = relative_ratio(rho, mixture.beta())?;
        Ok(Self {
            rho,
            rho_beta,
            sigma: Sign::of_advantage(advantage),
            advantage,
            beta: mixture.beta(),
        })
    }

    #[inline]
    pub fn rho(&self) -> F {
        self.rho
    }

    #[inline]
    pub fn rho_beta(&self) -> F {
        self.rho_beta
    }

    #[inline]
    pub fn sigma(&self) -> Sign {
        self.sigma
    }

    #[inline]
    pub fn advantage(&self) -> F {
        self.advantage
    }

    /// Mixture ratio this sample's `rho_beta` was built with.
    #[inline]
    pub fn beta(&self) -> F {
        self.beta
    }
}

/// Density ratio `exp(logp_new - logp_base)`, clamped to
/// `[1/max_ratio, max_ratio]`. Returns the ratio and whether the clamp hit.
pub fn density_ratio_clamped<F: Real>(
    logp_new: F,
    logp_base: F,
    max_ratio: F,
) -> Result<(F, bool)> {
    if !logp_new.is_finite() || !logp_base.is_finite() {
        return Err(Error::invalid(format!(
            "log-probabilities must be finite, got ({logp_new}, {logp_base})"
        )));
    }
    if !(max_ratio > F::one()) || !max_ratio.is_finite() {
        return Err(Error::invalid(format!("max_ratio {max_ratio} must be finite and > 1")));
    }
    let raw = (logp_new - logp_base).exp();
    let lo = max_ratio.recip();
    if raw > max_ratio {
        Ok((max_ratio, true))
    } else if raw < lo {
        Ok((lo, true))
    } else {
        Ok((raw, false))
    }
}

/// Density ratio `pi/pi_b` from the two log-densities, with the default
/// overflow clamp.
pub fn density_ratio<F: Real>(logp_new: F, logp_base: F) -> Result<F> {
    density_ratio_clamped(logp_new, logp_base, F::of(DEFAULT_MAX_RATIO)).map(|(r, _)| r)
}

/// Mixture weight `pi_beta / pi_b = 1 - beta + beta * rho`, written as
/// `1 + beta*(rho - 1)` so it is exactly `1` at `rho == 1`.
#[inline]
pub(crate) fn mixture_weight<F: Real>(rho: F, beta: F) -> F {
    F::one() + beta * (rho - F::one())
}

/// Relative density ratio `rho_beta = rho / (1 - beta + beta*rho)`.
///
/// Bounded in `[0, 1/beta)` for `beta > 0`; equals `rho` at `beta == 0`;
/// fixed point `rho_beta == 1` exactly at `rho == 1`.
pub fn relative_ratio<F: Real>(rho: F, beta: F) -> Result<F> {
    if !(rho > F::zero()) || !rho.is_finite() {
        return Err(Error::invalid(format!("density ratio rho={rho} must be positive and finite")));
    }
    if !beta.is_finite() || beta < F::zero() || beta > F::one() {
        return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1]")));
    }
    Ok(rho / mixture_weight(rho, beta))
}

/// Mixture density `beta * p_new + (1 - beta) * p_base`.
pub fn mixture_pdf<F: Real>(p_new: F, p_base: F, beta: F) -> Result<F> {
    if !(p_new >= F::zero()) || !(p_base >= F::zero()) {
        return Err(Error::invalid(format!(
            "densities must be non-negative, got ({p_new}, {p_base})"
        )));
    }
    if !beta.is_finite() || beta < F::zero() || beta > F::one() {
        return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1]")));
    }
    Ok(beta * p_new + (F::one() - beta) * p_base)
}

/// Monte-Carlo Pearson divergence from ratios of baseline-sampled actions:
/// mean of `(rho_i - 1)^2 / 2`. Since the mean of `rho` under the baseline
/// is one, this is the mean squared deviation of `rho` from its mean.
pub fn pe_divergence_mc<F: Real>(rho_samples: &[F]) -> Result<F> {
    if rho_samples.is_empty() {
        return Err(Error::invalid("pe_divergence_mc needs at least one ratio sample"));
    }
    let half = F::of(0.5);
    let mut acc = F::zero();
    for &rho in rho_samples {
        if !(rho > F::zero()) || !rho.is_finite() {
            return Err(Error::invalid(format!("ratio sample {rho} must be positive and finite")));
        }
        let d = rho - F::one();
        acc += half * d * d;
    }
    Ok(acc / F::of(rho_samples.len() as f64))
}

/// Monte-Carlo relative Pearson divergence from ratios of baseline-sampled
/// actions. The divergence is an expectation under the mixture density, so
/// each term carries the importance weight `pi_beta/pi_b = 1 - beta + beta*rho`:
/// mean of `(1 - beta + beta*rho_i) * (rho_beta_i - 1)^2 / 2`.
///
/// Degenerates bit-for-bit to [`pe_divergence_mc`] at `beta == 0`.
pub fn rpe_divergence_mc<F: Real>(rho_samples: &[F], beta: F) -> Result<F> {
    if rho_samples.is_empty() {
        return Err(Error::invalid("rpe_divergence_mc needs at least one ratio sample"));
    }
    if !beta.is_finite() || beta < F::zero() || beta > F::one() {
        return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1]")));
    }
    let half = F::of(0.5);
    let mut acc = F::zero();
    for &rho in rho_samples {
        if !(rho > F::zero()) || !rho.is_finite() {
            return Err(Error::invalid(format!("ratio sample {rho} must be positive and finite")));
        }
        let w = mixture_weight(rho, beta);
        let d = rho / w - F::one();
        acc += w * (half * d * d);
    }
    Ok(acc / F::of(rho_samples.len() as f64))
}

/// Threshold pair for a given `(epsilon, beta, sigma)`:
/// the relative-ratio threshold `1 + sigma*epsilon` and the raw-ratio
/// threshold it maps back to,
/// `1 + sigma*epsilon / (1 - beta*(1 + sigma*epsilon))`.
///
/// The raw threshold is asymmetric around one unless `beta == 0`.
pub fn ratio_thresholds<F: Real>(epsilon: F, beta: F, sigma: Sign) -> Result<(F, F)> {
    validate_threshold_params(epsilon, beta)?;
    let s_eps = sigma.value::<F>() * epsilon;
    let denom = F::one() - beta * (F::one() + s_eps);
    if !(denom > F::zero()) {
        return Err(Error::domain(format!(
            "raw ratio threshold undefined for (beta={beta}, epsilon={epsilon}, sigma={sigma}): \
             1 - beta*(1 + sigma*epsilon) = {denom} <= 0"
        )));
    }
    let rho_beta_eps = F::one() + s_eps;
    let rho_eps = F::one() + s_eps / denom;
    Ok((rho_beta_eps, rho_eps))
}

/// Regularization gain such that the regularized gradient vanishes exactly
/// at the ratio threshold:
/// `C = A / (sigma*eps * (beta*sigma*eps + 2*(1 - beta*(1 + sigma*eps))))`.
///
/// `C > 0` whenever `sigma` matches the sign of `advantage`. A zero
/// advantage returns zero (no update flows through it anyway).
pub fn regularization_gain<F: Real>(advantage: F, epsilon: F, beta: F, sigma: Sign) -> Result<F> {
    validate_threshold_params(epsilon, beta)?;
    if !advantage.is_finite() {
        return Err(Error::invalid(format!("advantage {advantage} must be finite")));
    }
    if advantage == F::zero() {
        return Ok(F::zero());
    }
    let s_eps = sigma.value::<F>() * epsilon;
    let two = F::of(2.0);
    let denom = s_eps * (beta * s_eps + two * (F::one() - beta * (F::one() + s_eps)));
    if denom == F::zero() {
        return Err(Error::domain(format!(
            "gain denominator is zero for (beta={beta}, epsilon={epsilon}, sigma={sigma})"
        )));
    }
    Ok(advantage / denom)
}

fn validate_threshold_params<F: Real>(epsilon: F, beta: F) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= F::zero() || epsilon >= F::one() {
        return Err(Error::invalid(format!("threshold epsilon={epsilon} must be in (0, 1)")));
    }
    if !beta.is_finite() || beta < F::zero() || beta >= F::one() {
        return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1)")));
    }
    Ok(())
}
