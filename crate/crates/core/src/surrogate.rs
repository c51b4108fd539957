//! The three surrogate objectives: clipping (`ppo_clip`), rollback
//! (`ppo_rb`), and relative-Pearson-divergence regularization with a
//! threshold-derived gain (`ppo_rpe`).
//!
//! Each variant is exposed as a per-sample loss term (the minimization
//! contribution before the expectation) together with its analytic
//! derivative with respect to the density ratio. The negated derivative is
//! the *effective advantage*: the quantity that multiplies
//! `rho * grad log pi` in the policy update.
//!
//! All three variants agree at `rho == 1`, where the loss term is exactly
//! `-A` and the effective advantage is exactly `A`.

use crate::error::{Error, Result};
use crate::ratio::{mixture_weight, ratio_thresholds, regularization_gain, RatioSample};
use crate::scalar::{Real, Sign};

/// Which surrogate objective to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateVariant {
    /// Clip the ratio beyond `1 + sigma*epsilon`; gradient vanishes there.
    PpoClip,
    /// Negative-slope extension beyond the threshold with gain `eta`,
    /// actively pushing the ratio back. `eta == 0` reduces to `PpoClip`.
    PpoRb,
    /// Relative-Pearson-divergence regularization whose gain is chosen so
    /// the gradient vanishes exactly at the (asymmetric) raw-ratio
    /// threshold.
    PpoRpe,
}

impl SurrogateVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurrogateVariant::PpoClip => "ppo_clip",
            SurrogateVariant::PpoRb => "ppo_rb",
            SurrogateVariant::PpoRpe => "ppo_rpe",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ppo_clip" => Ok(SurrogateVariant::PpoClip),
            "ppo_rb" => Ok(SurrogateVariant::PpoRb),
            "ppo_rpe" => Ok(SurrogateVariant::PpoRpe),
            other => Err(Error::invalid(format!(
                "unknown surrogate variant {other:?}; expected ppo_clip, ppo_rb, or ppo_rpe"
            ))),
        }
    }
}

impl core::fmt::Display for SurrogateVariant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Variant selector plus the knobs it needs.
///
/// `epsilon` is shared; `eta` only applies to `ppo_rb`; `beta` only to
/// `ppo_rpe`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurrogateSpec<F> {
    pub variant: SurrogateVariant,
    pub epsilon: F,
    pub eta: F,
    pub beta: F,
}

impl<F: Real> SurrogateSpec<F> {
    pub fn ppo_clip(epsilon: F) -> Self {
        Self { variant: SurrogateVariant::PpoClip, epsilon, eta: F::zero(), beta: F::zero() }
    }

    pub fn ppo_rb(epsilon: F, eta: F) -> Self {
        Self { variant: SurrogateVariant::PpoRb, epsilon, eta, beta: F::zero() }
    }

    pub fn ppo_rpe(epsilon: F, beta: F) -> Self {
        Self { variant: SurrogateVariant::PpoRpe, epsilon, eta: F::zero(), beta }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= F::zero() || self.epsilon >= F::one() {
            return Err(Error::invalid(format!(
                "threshold epsilon={} must be in (0, 1)",
                self.epsilon
            )));
        }
        match self.variant {
            SurrogateVariant::PpoClip => {
                if self.eta != F::zero() {
                    return Err(Error::invalid(format!(
                        "eta={} is only legal for ppo_rb (ppo_clip clips with eta = 0)",
                        self.eta
                    )));
                }
            }
            SurrogateVariant::PpoRb => {
                if !(self.eta >= F::zero()) || !self.eta.is_finite() {
                    return Err(Error::invalid(format!(
                        "rollback gain eta={} must be finite and >= 0",
                        self.eta
                    )));
                }
            }
            SurrogateVariant::PpoRpe => {
                if self.eta != F::zero() {
                    return Err(Error::invalid(format!(
                        "eta={} is only legal for ppo_rb",
                        self.eta
                    )));
                }
                if !self.beta.is_finite() || self.beta < F::zero() || self.beta >= F::one() {
                    return Err(Error::invalid(format!(
                        "mixture ratio beta={} must be in [0, 1)",
                        self.beta
                    )));
                }
                let bound = F::one() - self.beta * (F::one() + self.epsilon);
                if !(bound > F::zero()) {
                    return Err(Error::invalid(format!(
                        "(epsilon={}, beta={}) leaves no raw-ratio threshold: \
                         1 - beta*(1 + epsilon) = {bound} <= 0",
                        self.epsilon, self.beta
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-sample evaluation of a surrogate objective at a given ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateEval<F> {
    /// Minimization contribution before the expectation.
    pub loss_term: F,
    /// Analytic derivative of `loss_term` with respect to `rho`.
    pub dloss_drho: F,
    /// `-dloss_drho`: the signal that multiplies `rho * grad log pi`.
    pub effective_advantage: F,
    /// `sigma * (rho - rho_dagger)`: the per-sample regularization
    /// magnitude, where `rho_dagger` is the surrogate counterpart of the
    /// raw ratio (the clipped/rolled-back ratio for the PPO family,
    /// `(rho*A - Omega)/A` for the divergence-regularized family).
    /// Non-negative for every variant.
    pub regularization_amount: F,
}

impl<F: Real> SurrogateEval<F> {
    fn zero() -> Self {
        Self {
            loss_term: F::zero(),
            dloss_drho: F::zero(),
            effective_advantage: F::zero(),
            regularization_amount: F::zero(),
        }
    }

    fn from_parts(loss_term: F, effective_advantage: F, regularization_amount: F) -> Self {
        Self {
            loss_term,
            dloss_drho: -effective_advantage,
            effective_advantage,
            regularization_amount,
        }
    }
}

/// Surrogated density ratio of the clip/rollback family:
/// `-eta*rho + (1 + eta)*(1 + sigma*epsilon)` once `sigma*(rho - 1) >= epsilon`,
/// the raw `rho` otherwise. Continuous at the threshold.
pub fn ppo_surrogate_ratio<F: Real>(rho: F, sigma: Sign, epsilon: F, eta: F) -> Result<F> {
    if !(rho > F::zero()) || !rho.is_finite() {
        return Err(Error::invalid(format!("density ratio rho={rho} must be positive and finite")));
    }
    if !epsilon.is_finite() || epsilon <= F::zero() || epsilon >= F::one() {
        return Err(Error::invalid(format!("threshold epsilon={epsilon} must be in (0, 1)")));
    }
    if !(eta >= F::zero()) || !eta.is_finite() {
        return Err(Error::invalid(format!("rollback gain eta={eta} must be finite and >= 0")));
    }
    let s = sigma.value::<F>();
    if s * (rho - F::one()) >= epsilon {
        Ok(-eta * rho + (F::one() + eta) * (F::one() + s * epsilon))
    } else {
        Ok(rho)
    }
}

/// Clip/rollback surrogate evaluation.
///
/// Interior derivative is `-A`; beyond the threshold it is `eta*A`. Exactly
/// at the kink the interior derivative is used (the branch condition itself
/// uses `>=`, so the surrogate value there comes from the clipped branch —
/// the two branches agree on the value, only the subgradient choice is
/// ours).
pub fn evaluate_ppo<F: Real>(rho: F, advantage: F, spec: &SurrogateSpec<F>) -> Result<SurrogateEval<F>> {
    if spec.variant == SurrogateVariant::PpoRpe {
        return Err(Error::invalid("evaluate_ppo expects variant ppo_clip or ppo_rb"));
    }
    spec.validate()?;
    if !(rho > F::zero()) || !rho.is_finite() {
        return Err(Error::invalid(format!("density ratio rho={rho} must be positive and finite")));
    }
    if !advantage.is_finite() {
        return Err(Error::invalid(format!("advantage {advantage} must be finite")));
    }
    if advantage == F::zero() {
        return Ok(SurrogateEval::zero());
    }
    let sigma = Sign::of_advantage(advantage);
    let s = sigma.value::<F>();
    let surrogate = ppo_surrogate_ratio(rho, sigma, spec.epsilon, spec.eta)?;
    let loss_term = -surrogate * advantage;
    let clipped = s * (rho - F::one()) > spec.epsilon;
    let effective_advantage = if clipped { -spec.eta * advantage } else { advantage };
    let regularization_amount = s * (rho - surrogate);
    Ok(SurrogateEval::from_parts(loss_term, effective_advantage, regularization_amount))
}

/// Divergence regularization term `Omega = C * (rho_beta - 1)^2 / rho_beta`,
/// equivalently `C * (1 - beta + beta*rho) * (rho_beta - 1)^2 / rho`.
pub fn rpe_omega<F: Real>(rho: F, beta: F, gain: F) -> Result<F> {
    if !(rho > F::zero()) || !rho.is_finite() {
        return Err(Error::invalid(format!("density ratio rho={rho} must be positive and finite")));
    }
    if !beta.is_finite() || beta < F::zero() || beta > F::one() {
        return Err(Error::invalid(format!("mixture ratio beta={beta} must be in [0, 1]")));
    }
    if !(gain >= F::zero()) || !gain.is_finite() {
        return Err(Error::invalid(format!("gain {gain} must be finite and >= 0")));
    }
    let rho_beta = rho / mixture_weight(rho, beta);
    let d = rho_beta - F::one();
    Ok(gain * d * d / rho_beta)
}

/// Divergence-regularized surrogate evaluation.
///
/// The loss term is `-(rho*A - rho*Omega)` with
/// `rho*Omega = C*(1 - beta + beta*rho)*(rho_beta - 1)^2`, and the effective
/// advantage is its exact negated derivative
/// `A - C*(rho_beta - 1)*(beta*(rho_beta - 1) + 2*(1 - beta)/(1 - beta + beta*rho))`,
/// with `C` from [`regularization_gain`] so that it vanishes exactly at the
/// raw-ratio threshold for `sigma = sign(A)`.
pub fn evaluate_rpe<F: Real>(rho: F, advantage: F, spec: &SurrogateSpec<F>) -> Result<SurrogateEval<F>> {
    if spec.variant != SurrogateVariant::PpoRpe {
        return Err(Error::invalid("evaluate_rpe expects variant ppo_rpe"));
    }
    spec.validate()?;
    if !(rho > F::zero()) || !rho.is_finite() {
        return Err(Error::invalid(format!("density ratio rho={rho} must be positive and finite")));
    }
    if !advantage.is_finite() {
        return Err(Error::invalid(format!("advantage {advantage} must be finite")));
    }
    if advantage == F::zero() {
        return Ok(SurrogateEval::zero());
    }
    let sigma = Sign::of_advantage(advantage);
    // Existence of the raw threshold for this sigma; also validates ranges.
    ratio_thresholds(spec.epsilon, spec.beta, sigma)?;
    let gain = regularization_gain(advantage, spec.epsilon, spec.beta, sigma)?;

    let one = F::one();
    let two = F::of(2.0);
    let w = mixture_weight(rho, spec.beta);
    let rho_beta = rho / w;
    let d = rho_beta - one;

    // rho * Omega, using the algebraic form that is exactly 0 at rho == 1.
    let rho_omega = gain * w * d * d;
    let loss_term = -(rho * advantage - rho_omega);

    let brace = spec.beta * d + two * (one - spec.beta) / w;
    let effective_advantage = advantage - gain * d * brace;

    let omega = gain * d * d / rho_beta;
    // rho_dagger = (rho*A - Omega)/A, so sigma*(rho - rho_dagger) = sigma*Omega/A.
    let regularization_amount = sigma.value::<F>() * omega / advantage;

    Ok(SurrogateEval::from_parts(loss_term, effective_advantage, regularization_amount))
}

/// Evaluate a ratio/advantage pair under whichever variant `spec` selects.
pub fn evaluate<F: Real>(rho: F, advantage: F, spec: &SurrogateSpec<F>) -> Result<SurrogateEval<F>> {
    match spec.variant {
        SurrogateVariant::PpoClip | SurrogateVariant::PpoRb => evaluate_ppo(rho, advantage, spec),
        SurrogateVariant::PpoRpe => evaluate_rpe(rho, advantage, spec),
    }
}

/// Evaluate a prepared [`RatioSample`]. The sample's mixture ratio must
/// match the spec's for `ppo_rpe`.
pub fn evaluate_sample<F: Real>(
    sample: &RatioSample<F>,
    spec: &SurrogateSpec<F>,
) -> Result<SurrogateEval<F>> {
    if spec.variant == SurrogateVariant::PpoRpe && sample.beta() != spec.beta {
        return Err(Error::invalid(format!(
            "ratio sample built with beta={} but spec has beta={}",
            sample.beta(),
            spec.beta
        )));
    }
    evaluate(sample.rho(), sample.advantage(), spec)
}

/// One row of an exported loss curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint<F> {
    pub rho: F,
    /// `-loss_term`, i.e. the per-sample objective being maximized.
    pub neg_loss: F,
    pub dloss_drho: F,
}

/// Tabulates the surrogate objective over a ratio grid for a unit advantage
/// of the given sign (`A = +1` or `A = -1`).
pub fn loss_curve<F: Real>(
    spec: &SurrogateSpec<F>,
    advantage_sign: Sign,
    rho_grid: &[F],
) -> Result<Vec<CurvePoint<F>>> {
    if rho_grid.is_empty() {
        return Err(Error::invalid("loss_curve needs a non-empty rho grid"));
    }
    let advantage = advantage_sign.value::<F>();
    let mut rows = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let eval = evaluate(rho, advantage, spec)?;
        rows.push(CurvePoint { rho, neg_loss: -eval.loss_term, dloss_drho: eval.dloss_drho });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn surrogate_ratio_branches() {
        // interior
        assert_eq!(ppo_surrogate_ratio(1.0, Sign::Plus, 0.2, 0.0).unwrap(), 1.0);
        // clip branch: 0*rho + 1*1.2
        close(ppo_surrogate_ratio(1.3, Sign::Plus, 0.2, 0.0).unwrap(), 1.2, 1e-15);
        // rollback branch: -0.39 + 1.3*1.2
        close(ppo_surrogate_ratio(1.3, Sign::Plus, 0.2, 0.3).unwrap(), 1.17, 1e-15);
        // continuity at the threshold
        let at = ppo_surrogate_ratio(1.2, Sign::Plus, 0.2, 0.7).unwrap();
        close(at, 1.2, 1e-12);
    }

    #[test]
    fn surrogate_ratio_negative_sign_branch() {
        // sigma = -1 clips for rho <= 1 - eps
        close(ppo_surrogate_ratio(0.7, Sign::Minus, 0.2, 0.0).unwrap(), 0.8, 1e-15);
        assert_eq!(ppo_surrogate_ratio(0.9, Sign::Minus, 0.2, 0.0).unwrap(), 0.9);
    }

    #[test]
    fn evaluate_ppo_examples() {
        let clip = SurrogateSpec::ppo_clip(0.1);
        let e = evaluate_ppo(1.0, 2.0, &clip).unwrap();
        assert_eq!(e.loss_term, -2.0);
        assert_eq!(e.effective_advantage, 2.0);
        assert_eq!(e.regularization_amount, 0.0);

        let clip2 = SurrogateSpec::ppo_clip(0.2);
        let e = evaluate_ppo(1.3, 1.0, &clip2).unwrap();
        assert_eq!(e.effective_advantage, 0.0);
        close(e.regularization_amount, 0.1, 1e-15);

        let rb = SurrogateSpec::ppo_rb(0.2, 0.3);
        let e = evaluate_ppo(1.3, 1.0, &rb).unwrap();
        close(e.effective_advantage, -0.3, 1e-15);
        close(e.loss_term, -1.17, 1e-15);
    }

    #[test]
    fn evaluate_ppo_rejects_rpe_variant_and_zero_advantage_short_circuits() {
        let rpe = SurrogateSpec::ppo_rpe(0.1, 0.5);
        assert!(evaluate_ppo(1.0, 1.0, &rpe).is_err());
        let clip = SurrogateSpec::ppo_clip(0.1);
        let e = evaluate_ppo(1.7, 0.0, &clip).unwrap();
        assert_eq!(e, SurrogateEval::zero());
    }

    #[test]
    fn rb_with_eta_zero_matches_clip_bitwise() {
        let clip = SurrogateSpec::<f64>::ppo_clip(0.15);
        let rb = SurrogateSpec::<f64>::ppo_rb(0.15, 0.0);
        for rho in [0.2, 0.8499999, 0.85, 1.0, 1.1499, 1.15, 1.3, 7.0] {
            for adv in [2.5, -2.5, 0.03125] {
                let a = evaluate_ppo(rho, adv, &clip).unwrap();
                let b = evaluate_ppo(rho, adv, &rb).unwrap();
                assert_eq!(a.loss_term.to_bits(), b.loss_term.to_bits());
                assert_eq!(a.dloss_drho.to_bits(), b.dloss_drho.to_bits());
                assert_eq!(a.regularization_amount.to_bits(), b.regularization_amount.to_bits());
            }
        }
    }

    #[test]
    fn rpe_omega_examples_and_algebraic_forms() {
        assert_eq!(rpe_omega(1.0, 0.5, 3.0).unwrap(), 0.0);
        close(rpe_omega(2.0, 0.5, 1.0).unwrap(), 1.0 / 12.0, 1e-15);
        close(rpe_omega(2.0, 0.5, 3.0).unwrap(), 0.25, 1e-15);
        // the two algebraic forms agree
        for rho in [0.05, 0.4, 1.0, 1.9, 13.0] {
            for beta in [0.0, 0.25, 0.5, 0.9] {
                let a = rpe_omega(rho, beta, 2.0).unwrap();
                let w = 1.0 - beta + beta * rho;
                let rb = rho / w;
                let b = 2.0 * w * (rb - 1.0) * (rb - 1.0) / rho;
                close(a, b, 1e-12);
            }
        }
    }

    #[test]
    fn evaluate_rpe_examples() {
        let spec = SurrogateSpec::<f64>::ppo_rpe(0.1, 0.5);
        let e = evaluate_rpe(1.0, 1.0, &spec).unwrap();
        assert_eq!(e.effective_advantage, 1.0);
        assert_eq!(e.loss_term, -1.0);
        assert_eq!(e.regularization_amount, 0.0);

        // at the raw threshold the gradient vanishes
        let e = evaluate_rpe(11.0 / 9.0, 1.0, &spec).unwrap();
        assert!(e.effective_advantage.abs() < 1e-10);

        // hand value at rho = 2: 1 - (1/0.095)*(1/3)*(5/6)
        let e = evaluate_rpe(2.0, 1.0, &spec).unwrap();
        close(e.effective_advantage, 1.0 - (1.0 / 0.095) * (1.0 / 3.0) * (5.0 / 6.0), 1e-12);
        close(e.effective_advantage, -1.923976608187134, 1e-9);
        assert!(e.regularization_amount > 0.0);
    }

    #[test]
    fn evaluate_rpe_zero_advantage_and_threshold_guard() {
        let spec = SurrogateSpec::ppo_rpe(0.1, 0.5);
        let e = evaluate_rpe(3.0, 0.0, &spec).unwrap();
        assert_eq!(e, SurrogateEval::zero());
        // beta too large for this epsilon: no positive-side threshold
        let bad = SurrogateSpec::ppo_rpe(0.3, 0.8);
        assert!(evaluate_rpe(1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn dispatch_and_config_validation() {
        let clip = SurrogateSpec::ppo_clip(0.1);
        let via_dispatch = evaluate(1.3, 1.0, &clip).unwrap();
        let direct = evaluate_ppo(1.3, 1.0, &clip).unwrap();
        assert_eq!(via_dispatch, direct);

        let rpe = SurrogateSpec::ppo_rpe(0.1, 0.5);
        assert_eq!(evaluate(2.0, 1.0, &rpe).unwrap(), evaluate_rpe(2.0, 1.0, &rpe).unwrap());

        // eta on a clip spec is a config error
        let bad = SurrogateSpec { eta: 0.3, ..SurrogateSpec::ppo_clip(0.1) };
        assert!(evaluate(1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn loss_at_one_is_minus_advantage_for_all_variants() {
        let specs = [
            SurrogateSpec::ppo_clip(0.2),
            SurrogateSpec::ppo_rb(0.2, 0.3),
            SurrogateSpec::ppo_rpe(0.2, 0.5),
        ];
        for spec in &specs {
            for adv in [0.5, -0.5, 2.0, -2.0] {
                let e = evaluate(1.0, adv, spec).unwrap();
                assert_eq!(e.loss_term, -adv, "{spec:?} A={adv}");
                assert_eq!(e.effective_advantage, adv);
            }
        }
    }

    #[test]
    fn loss_curve_rows() {
        let clip = SurrogateSpec::ppo_clip(0.1);
        let rows = loss_curve(&clip, Sign::Plus, &[1.05, 1.15]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].dloss_drho, -1.0);
        assert_eq!(rows[1].dloss_drho, 0.0);

        let any = loss_curve(&clip, Sign::Plus, &[1.0]).unwrap();
        assert_eq!(any[0].neg_loss, 1.0);

        assert!(loss_curve(&clip, Sign::Plus, &[]).is_err());
        assert!(loss_curve(&clip, Sign::Plus, &[-0.5]).is_err());
    }

    #[test]
    fn rpe_curve_vertex_brackets_threshold() {
        let spec = SurrogateSpec::ppo_rpe(0.1, 0.5);
        let grid: Vec<f64> = (0..600).map(|i| 0.01 + i as f64 * (3.0 - 0.01) / 599.0).collect();
        let rows = loss_curve(&spec, Sign::Plus, &grid).unwrap();
        let mut changes = Vec::new();
        for pair in rows.windows(2) {
            if pair[0].dloss_drho.signum() != pair[1].dloss_drho.signum() {
                changes.push((pair[0].rho, pair[1].rho));
            }
        }
        assert_eq!(changes.len(), 1);
        let (lo, hi) = changes[0];
        let vertex = 11.0 / 9.0;
        assert!(lo < vertex && vertex < hi, "vertex {vertex} not in ({lo}, {hi})");
    }

    /// The divergence-regularized objective has exactly one stationary point
    /// per advantage sign across the whole (0.01, 100) ratio range.
    #[test]
    fn rpe_has_a_single_vertex_over_wide_range() {
        // log-spaced grid over (0.01, 100)
        let grid: Vec<f64> =
            (0..2000).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 1999.0)).collect();
        for (eps, beta) in [(0.1, 0.5), (0.2, 0.3), (0.3, 0.1)] {
            let spec = SurrogateSpec::ppo_rpe(eps, beta);
            for sigma in [Sign::Plus, Sign::Minus] {
                let rows = loss_curve(&spec, sigma, &grid).unwrap();
                let changes = rows
                    .windows(2)
                    .filter(|p| p[0].dloss_drho.signum() != p[1].dloss_drho.signum())
                    .count();
                assert_eq!(
                    changes, 1,
                    "eps={eps} beta={beta} sigma={sigma}: expected one sign change"
                );
            }
        }
    }

    /// The regularization contribution always points back toward rho == 1:
    /// above one it lowers the effective advantage, below one it raises it.
    #[test]
    fn rpe_regularization_pulls_toward_one() {
        let spec = SurrogateSpec::ppo_rpe(0.1, 0.5);
        for i in 0..400 {
            let rho = 0.05 + i as f64 * 0.025;
            for adv in [0.5, 2.0] {
                let e = evaluate_rpe(rho, adv, &spec).unwrap();
                if rho > 1.0 {
                    assert!(e.effective_advantage < adv, "rho={rho} adv={adv}");
                } else if rho < 1.0 {
                    assert!(e.effective_advantage > adv, "rho={rho} adv={adv}");
                }
            }
        }
    }

    #[test]
    fn evaluate_sample_checks_mixture_consistency() {
        let mix = crate::ratio::MixtureParams::new(0.5).unwrap();
        let sample = RatioSample::new(1.4, 0.8, mix).unwrap();
        let spec = SurrogateSpec::ppo_rpe(0.1, 0.5);
        assert!(evaluate_sample(&sample, &spec).is_ok());
        let other = SurrogateSpec::ppo_rpe(0.1, 0.3);
        assert!(evaluate_sample(&sample, &other).is_err());
    }
}
