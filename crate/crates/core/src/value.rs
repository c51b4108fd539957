//! State-value function, Polyak-averaged target network, and generalized
//! advantage estimation over rollout buffers.
//!
//! The advantage of a transition is `Q - V` with `Q` realized as the
//! bootstrapped target `r + gamma * V_target(s')`; GAE chains the resulting
//! one-step errors with weight `gamma * lambda`, masked at episode
//! boundaries.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{Activation, Mlp};
use crate::scalar::Real;
use crate::trainer::TransitionBatch;

/// Discount/trace/target-update knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaeConfig<F> {
    /// Discount factor, in `[0, 1)`.
    pub gamma: F,
    /// Trace decay, in `[0, 1]`. Zero reduces each advantage to the
    /// one-step TD error.
    pub lambda: F,
    /// Polyak step toward the online parameters, in `(0, 1]`.
    pub polyak_tau: F,
}

impl<F: Real> GaeConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < F::zero() || self.gamma >= F::one() {
            return Err(Error::invalid(format!("gamma={} must be in [0, 1)", self.gamma)));
        }
        if !self.lambda.is_finite() || self.lambda < F::zero() || self.lambda > F::one() {
            return Err(Error::invalid(format!("lambda={} must be in [0, 1]", self.lambda)));
        }
        if !self.polyak_tau.is_finite() || self.polyak_tau <= F::zero() || self.polyak_tau > F::one()
        {
            return Err(Error::invalid(format!("polyak_tau={} must be in (0, 1]", self.polyak_tau)));
        }
        Ok(())
    }
}

impl<F: Real> Default for GaeConfig<F> {
    fn default() -> Self {
        Self { gamma: F::of(0.99), lambda: F::of(0.95), polyak_tau: F::of(0.9) }
    }
}

/// Value network: an [`Mlp`] with a scalar output head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueNet<F> {
    net: Mlp<F>,
}

impl<F: Real> ValueNet<F> {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        hidden: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(state_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self { net: Mlp::new(&sizes, activation, rng)? })
    }

    pub(crate) fn from_net(net: Mlp<F>) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::invalid("a value network must have a scalar output"));
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp<F> {
        &self.net
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn is_finite(&self) -> bool {
        self.net.is_finite()
    }

    /// `V(s)`.
    pub fn value(&self, state: &[F]) -> Result<F> {
        Ok(self.net.forward(state)?[0])
    }

    pub fn flatten(&self) -> Vec<F> {
        self.net.flatten()
    }

    pub fn set_from_flat(&mut self, flat: &[F]) -> Result<()> {
        self.net.set_from_flat(flat)
    }

    pub fn apply_step(&mut self, step: &[F]) -> Result<()> {
        self.net.apply_step(step)
    }
}

/// GAE advantages for a rollout: one per transition, bootstrapped from the
/// target network, masked at episode ends. With `lambda == 0` each entry is
/// the one-step TD error `r + gamma*V_target(s')*(1 - done) - V(s)`.
pub fn advantage_estimates<F: Real>(
    rollout: &TransitionBatch<F>,
    vparams: &ValueNet<F>,
    target_vparams: &ValueNet<F>,
    cfg: &GaeConfig<F>,
) -> Result<Vec<F>> {
    cfg.validate()?;
    rollout.check_consistent()?;
    let n = rollout.len();
    if n == 0 {
        return Err(Error::invalid("advantage_estimates needs a non-empty rollout"));
    }
    let mut advantages = vec![F::zero(); n];
    let mut gae = F::zero();
    for t in (0..n).rev() {
        let not_done = if rollout.dones[t] { F::zero() } else { F::one() };
        let v_next = target_vparams.value(&rollout.next_states[t])?;
        let v_here = vparams.value(&rollout.states[t])?;
        let delta = rollout.rewards[t] + cfg.gamma * v_next * not_done - v_here;
        gae = delta + cfg.gamma * cfg.lambda * not_done * gae;
        advantages[t] = gae;
    }
    Ok(advantages)
}

/// Squared-error regression loss `mean((V(s) - target)^2) / 2` and its
/// gradient with respect to the value parameters (canonical flat order).
pub fn value_loss_grad<F: Real>(
    vparams: &ValueNet<F>,
    states: &[Vec<F>],
    targets: &[F],
) -> Result<(F, Vec<F>)> {
    if states.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} states but {} targets",
            states.len(),
            targets.len()
        )));
    }
    if states.is_empty() {
        return Err(Error::invalid("value_loss_grad needs at least one sample"));
    }
    let n = F::of(states.len() as f64);
    let half = F::of(0.5);
    let mut loss = F::zero();
    let mut grad = vec![F::zero(); vparams.param_count()];
    for (state, &target) in states.iter().zip(targets.iter()) {
        let cache = vparams.net.forward_cached(state)?;
        let err = cache.output()[0] - target;
        loss += half * err * err / n;
        let sample_grad = vparams.net.backward(&cache, &[err / n])?;
        for (g, sg) in grad.iter_mut().zip(sample_grad.iter()) {
            *g += *sg;
        }
    }
    Ok((loss, grad))
}

/// Polyak averaging: `target <- (1 - tau) * target + tau * online`.
pub fn soft_update<F: Real>(target: &mut ValueNet<F>, online: &ValueNet<F>, tau: F) -> Result<()> {
    if !tau.is_finite() || tau < F::zero() || tau > F::one() {
        return Err(Error::invalid(format!("polyak tau={tau} must be in [0, 1]")));
    }
    if target.param_count() != online.param_count() {
        return Err(Error::invalid("target and online networks have different shapes"));
    }
    let online_flat = online.flatten();
    let mut target_flat = target.flatten();
    let keep = F::one() - tau;
    for (t, o) in target_flat.iter_mut().zip(online_flat.iter()) {
        *t = keep * *t + tau * *o;
    }
    target.set_from_flat(&target_flat)
}

/// Normalizes a batch of advantages to mean zero, unit standard deviation.
pub fn normalize_advantages<F: Real>(advantages: &mut [F]) {
    if advantages.len() < 2 {
        return;
    }
    let n = F::of(advantages.len() as f64);
    let mean = advantages.iter().fold(F::zero(), |a, &x| a + x) / n;
    let var = advantages.iter().fold(F::zero(), |a, &x| a + (x - mean) * (x - mean)) / n;
    let std = var.sqrt().max(F::of(1e-8));
    for a in advantages.iter_mut() {
        *a = (*a - mean) / std;
    }
}
