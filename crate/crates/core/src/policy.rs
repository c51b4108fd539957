//! Differentiable stochastic policy: a fully connected network producing a
//! diagonal Gaussian over pre-squash actions, squashed through `tanh` into
//! `(-1, 1)^d` with the exact change-of-variables correction.
//!
//! Densities are exact, so the density ratio between a live policy and a
//! frozen snapshot is exact as well. Gradients of `log pi(a|s)` with respect
//! to every parameter are produced by the manual backward pass in
//! [`crate::mlp`]; there is no autodiff engine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{Activation, Mlp};
use crate::scalar::Real;

/// Clamp bounds for the log standard deviation at the distribution head.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Policy architecture knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// When true the network outputs `[mean | log_std]`; otherwise
    /// `log_std` is a free state-independent parameter vector.
    pub state_dependent_std: bool,
    /// Initial value of the state-independent log-std parameters.
    pub init_log_std: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            state_dependent_std: false,
            init_log_std: -0.5,
        }
    }
}

/// Diagonal Gaussian head: pre-squash mean and (clamped) log-std per action
/// dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHead<F> {
    pub mean: Vec<F>,
    pub log_std: Vec<F>,
}

impl<F: Real> GaussianHead<F> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[inline]
fn clamp_log_std<F: Real>(raw: F) -> F {
    raw.max(F::of(LOG_STD_MIN)).min(F::of(LOG_STD_MAX))
}

#[inline]
fn log_std_gate<F: Real>(raw: F) -> F {
    if raw > F::of(LOG_STD_MIN) && raw < F::of(LOG_STD_MAX) {
        F::one()
    } else {
        F::zero()
    }
}

/// The policy: network, distribution head configuration, and (when
/// state-independent) the free log-std parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy<F> {
    net: Mlp<F>,
    log_std: Vec<F>,
    state_dependent_std: bool,
    state_dim: usize,
    action_dim: usize,
}

impl<F: Real> Policy<F> {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        config: &PolicyConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::invalid("state and action dimensions must be positive"));
        }
        let out_dim = if config.state_dependent_std { 2 * action_dim } else { action_dim };
        let mut sizes = Vec::with_capacity(config.hidden.len() + 2);
        sizes.push(state_dim);
        sizes.extend_from_slice(&config.hidden);
        sizes.push(out_dim);
        let net = Mlp::new(&sizes, config.activation, rng)?;
        let log_std = if config.state_dependent_std {
            Vec::new()
        } else {
            vec![F::of(config.init_log_std); action_dim]
        };
        Ok(Self { net, log_std, state_dependent_std: config.state_dependent_std, state_dim, action_dim })
    }

    pub(crate) fn from_parts(
        net: Mlp<F>,
        log_std: Vec<F>,
        state_dependent_std: bool,
        action_dim: usize,
    ) -> Result<Self> {
        let state_dim = net.input_dim();
        let expected_out = if state_dependent_std { 2 * action_dim } else { action_dim };
        if net.output_dim() != expected_out {
            return Err(Error::invalid(format!(
                "network output dim {} does not match action dim {} (state_dependent_std={})",
                net.output_dim(),
                action_dim,
                state_dependent_std
            )));
        }
        if !state_dependent_std && log_std.len() != action_dim {
            return Err(Error::invalid("log_std length must equal the action dimension"));
        }
        Ok(Self { net, log_std, state_dependent_std, state_dim, action_dim })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn net(&self) -> &Mlp<F> {
        &self.net
    }

    pub fn log_std_params(&self) -> &[F] {
        &self.log_std
    }

    pub fn state_dependent_std(&self) -> bool {
        self.state_dependent_std
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count() + self.log_std.len()
    }

    pub fn is_finite(&self) -> bool {
        self.net.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    /// Distribution head for a state.
    pub fn forward(&self, state: &[F]) -> Result<GaussianHead<F>> {
        let out = self.net.forward(state)?;
        Ok(self.head_from_output(&out))
    }

    fn head_from_output(&self, out: &[F]) -> GaussianHead<F> {
        if self.state_dependent_std {
            let mean = out[..self.action_dim].to_vec();
            let log_std = out[self.action_dim..].iter().map(|&r| clamp_log_std(r)).collect();
            GaussianHead { mean, log_std }
        } else {
            GaussianHead {
                mean: out.to_vec(),
                log_std: self.log_std.iter().map(|&r| clamp_log_std(r)).collect(),
            }
        }
    }

    /// Draws a squashed action and its exact log-density. The log-density is
    /// computed through the same path as [`Policy::log_prob`], so the two
    /// agree bit-for-bit on the returned action.
    pub fn sample<R: Rng + ?Sized>(&self, head: &GaussianHead<F>, rng: &mut R) -> (Vec<F>, F) {
        let mut action = Vec::with_capacity(head.dim());
        for d in 0..head.dim() {
            let std = head.log_std[d].exp();
            loop {
                let z = F::standard_normal(rng);
                let a = (head.mean[d] + std * z).tanh();
                // tanh can round to exactly +-1 for extreme draws, which has
                // no finite pre-image; redraw.
                if a > -F::one() && a < F::one() {
                    action.push(a);
                    break;
                }
            }
        }
        let log_prob = self
            .log_prob(head, &action)
            .expect("freshly squashed action is strictly inside (-1, 1)");
        (action, log_prob)
    }

    /// Exact log-density of a squashed action:
    /// Gaussian log-density of `atanh(a)` minus `sum(log(1 - a^2))`.
    pub fn log_prob(&self, head: &GaussianHead<F>, action: &[F]) -> Result<F> {
        if action.len() != head.dim() {
            return Err(Error::invalid(format!(
                "action has {} entries, head has {} dimensions",
                action.len(),
                head.dim()
            )));
        }
        let half = F::of(0.5);
        let half_ln_2pi = half * F::of(core::f64::consts::TAU.ln());
        let mut lp = F::zero();
        for d in 0..head.dim() {
            let a = action[d];
            if !(a > -F::one() && a < F::one()) {
                return Err(Error::domain(format!(
                    "action component {a} is outside (-1, 1); the pre-squash inverse is undefined"
                )));
            }
            let u = a.atanh();
            let z = (u - head.mean[d]) / head.log_std[d].exp();
            // log(1 - a^2) = log1p(-a) + log1p(a)
            let squash_correction = (-a).ln_1p() + a.ln_1p();
            lp += -half * z * z - head.log_std[d] - half_ln_2pi - squash_correction;
        }
        Ok(lp)
    }

    /// Convenience: `log pi(a|s)` straight from a state.
    pub fn log_prob_state(&self, state: &[F], action: &[F]) -> Result<F> {
        let head = self.forward(state)?;
        self.log_prob(&head, action)
    }

    /// Log-density and its gradient with respect to every parameter
    /// (canonical order: network parameters, then the state-independent
    /// log-std parameters).
    pub fn grad_log_prob(&self, state: &[F], action: &[F]) -> Result<(F, Vec<F>)> {
        let (_, log_prob, grad) = self.grad_log_prob_with_head(state, action)?;
        Ok((log_prob, grad))
    }

    /// [`Policy::grad_log_prob`] plus the distribution head from the same
    /// forward pass.
    pub fn grad_log_prob_with_head(
        &self,
        state: &[F],
        action: &[F],
    ) -> Result<(GaussianHead<F>, F, Vec<F>)> {
        let cache = self.net.forward_cached(state)?;
        let head = self.head_from_output(cache.output());
        let log_prob = self.log_prob(&head, action)?;

        // Per-dimension pieces: z = (atanh(a) - mean)/std,
        // d logp / d mean = z/std, d logp / d log_std = z^2 - 1.
        let mut d_mean = Vec::with_capacity(self.action_dim);
        let mut d_log_std = Vec::with_capacity(self.action_dim);
        for d in 0..self.action_dim {
            let std = head.log_std[d].exp();
            let z = (action[d].atanh() - head.mean[d]) / std;
            d_mean.push(z / std);
            d_log_std.push(z * z - F::one());
        }

        if self.state_dependent_std {
            let raw = &cache.output()[self.action_dim..];
            let mut d_out = Vec::with_capacity(2 * self.action_dim);
            d_out.extend_from_slice(&d_mean);
            for d in 0..self.action_dim {
                d_out.push(log_std_gate(raw[d]) * d_log_std[d]);
            }
            let grad = self.net.backward(&cache, &d_out)?;
            Ok((head, log_prob, grad))
        } else {
            let mut grad = self.net.backward(&cache, &d_mean)?;
            grad.reserve(self.action_dim);
            for d in 0..self.action_dim {
                grad.push(log_std_gate(self.log_std[d]) * d_log_std[d]);
            }
            Ok((head, log_prob, grad))
        }
    }

    /// Closed-form entropy of the pre-squash diagonal Gaussian:
    /// `sum_d (log_std_d + ln(2*pi*e)/2)`.
    pub fn entropy_bonus(head: &GaussianHead<F>) -> F {
        let half_ln_2pi_e = F::of(0.5 * (core::f64::consts::TAU * core::f64::consts::E).ln());
        head.log_std.iter().fold(F::zero(), |acc, &ls| acc + ls + half_ln_2pi_e)
    }

    /// Gradient of the entropy with respect to every parameter, same layout
    /// as [`Policy::grad_log_prob`].
    pub fn entropy_grad(&self, state: &[F]) -> Result<Vec<F>> {
        if self.state_dependent_std {
            let cache = self.net.forward_cached(state)?;
            let raw = &cache.output()[self.action_dim..];
            let mut d_out = vec![F::zero(); 2 * self.action_dim];
            for d in 0..self.action_dim {
                d_out[self.action_dim + d] = log_std_gate(raw[d]);
            }
            self.net.backward(&cache, &d_out)
        } else {
            let mut grad = vec![F::zero(); self.net.param_count()];
            grad.reserve(self.action_dim);
            for d in 0..self.action_dim {
                grad.push(log_std_gate(self.log_std[d]));
            }
            Ok(grad)
        }
    }

    /// Parameters flattened in canonical order.
    pub fn flatten(&self) -> Vec<F> {
        let mut flat = self.net.flatten();
        flat.extend_from_slice(&self.log_std);
        flat
    }

    pub fn set_from_flat(&mut self, flat: &[F]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "flat vector has {} entries, policy has {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let n = self.net.param_count();
        self.net.set_from_flat(&flat[..n])?;
        self.log_std.copy_from_slice(&flat[n..]);
        Ok(())
    }

    /// Subtracts an optimizer step (canonical order) from the parameters.
    pub fn apply_step(&mut self, step: &[F]) -> Result<()> {
        if step.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "step vector has {} entries, policy has {} parameters",
                step.len(),
                self.param_count()
            )));
        }
        let n = self.net.param_count();
        self.net.apply_step(&step[..n])?;
        for (p, s) in self.log_std.iter_mut().zip(step[n..].iter()) {
            *p -= *s;
        }
        Ok(())
    }

    /// Frozen copy to serve as the baseline policy.
    pub fn snapshot(&self) -> PolicySnapshot<F> {
        PolicySnapshot { frozen: self.clone() }
    }
}

/// Immutable copy of a policy at a point in time; the baseline both for
/// sampling and as the regularization anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySnapshot<F> {
    frozen: Policy<F>,
}

impl<F: Real> PolicySnapshot<F> {
    /// Re-freezes the snapshot to the live policy's current parameters.
    pub fn refresh(&mut self, live: &Policy<F>) {
        self.frozen = live.clone();
    }

    pub fn forward(&self, state: &[F]) -> Result<GaussianHead<F>> {
        self.frozen.forward(state)
    }

    pub fn sample<R: Rng + ?Sized>(&self, head: &GaussianHead<F>, rng: &mut R) -> (Vec<F>, F) {
        self.frozen.sample(head, rng)
    }

    pub fn log_prob(&self, head: &GaussianHead<F>, action: &[F]) -> Result<F> {
        self.frozen.log_prob(head, action)
    }

    pub fn log_prob_state(&self, state: &[F], action: &[F]) -> Result<F> {
        self.frozen.log_prob_state(state, action)
    }

    pub fn as_policy(&self) -> &Policy<F> {
        &self.frozen
    }
}
