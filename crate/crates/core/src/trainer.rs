//! The learning loop: collect transitions under a frozen baseline policy,
//! estimate advantages, take surrogate-objective gradient steps with an
//! adaptive optimizer, refresh the baseline, log metrics.
//!
//! The baseline is refreshed once per rollout, so every ratio in a batch is
//! measured against the policy that collected it; setting
//! `rollout_len = 1, epochs_per_rollout = 1` recovers the strict
//! one-transition-per-update cadence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{evaluate_policy, Env, EnvName, EnvSpec, EvalStats};
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyConfig, PolicySnapshot};
use crate::ratio::density_ratio_clamped;
use crate::scalar::Real;
use crate::surrogate::{evaluate, SurrogateEval, SurrogateSpec};
use crate::value::{
    advantage_estimates, normalize_advantages, soft_update, value_loss_grad, GaeConfig, ValueNet,
};

/// Everything a training run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig<F> {
    pub env: EnvName,
    pub surrogate: SurrogateSpec<F>,
    pub gae: GaeConfig<F>,
    pub learning_rate: F,
    pub rollout_len: usize,
    pub epochs_per_rollout: usize,
    pub minibatch_size: usize,
    pub total_steps: usize,
    /// Entropy-bonus gain; zero disables the bonus.
    pub entropy_gain: F,
    pub seed: u64,
    /// Evaluate every this many environment steps; zero disables.
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub policy: PolicyConfig,
    /// Normalize advantages per rollout to zero mean / unit std.
    pub adv_normalize: bool,
    /// L2 gradient-norm clip; zero disables.
    pub grad_clip: F,
    /// Bypass the surrogate entirely: plain importance-sampled policy
    /// gradient, no regularization.
    pub vanilla: bool,
    /// Symmetric clamp on the density ratio.
    pub max_ratio: F,
    /// Reserved for a TD-regularization gain; must stay zero.
    pub td_gain: F,
}

impl<F: Real> TrainerConfig<F> {
    pub fn new(env: EnvName, surrogate: SurrogateSpec<F>) -> Self {
        Self {
            env,
            surrogate,
            gae: GaeConfig::default(),
            learning_rate: F::of(3e-4),
            rollout_len: 2048,
            epochs_per_rollout: 10,
            minibatch_size: 64,
            total_steps: 100_000,
            entropy_gain: F::of(0.01),
            seed: 0,
            eval_every: 0,
            eval_episodes: 50,
            policy: PolicyConfig::default(),
            adv_normalize: false,
            grad_clip: F::of(10.0),
            vanilla: false,
            max_ratio: F::of(crate::ratio::DEFAULT_MAX_RATIO),
            td_gain: F::zero(),
        }
    }

    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec::of(self.env)
    }

    pub fn validate(&self) -> Result<()> {
        self.surrogate.validate()?;
        self.gae.validate()?;
        if !(self.learning_rate > F::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning_rate={} must be positive",
                self.learning_rate
            )));
        }
        if self.rollout_len == 0 || self.epochs_per_rollout == 0 || self.minibatch_size == 0 {
            return Err(Error::invalid(
                "rollout_len, epochs_per_rollout, and minibatch_size must be positive",
            ));
        }
        if self.minibatch_size > self.rollout_len {
            return Err(Error::invalid(format!(
                "minibatch_size={} exceeds rollout_len={}",
                self.minibatch_size, self.rollout_len
            )));
        }
        if !(self.entropy_gain >= F::zero()) {
            return Err(Error::invalid(format!(
                "entropy_gain={} must be >= 0",
                self.entropy_gain
            )));
        }
        if self.eval_every > 0 && self.eval_episodes == 0 {
            return Err(Error::invalid("eval_episodes must be positive when eval_every is set"));
        }
        if !(self.grad_clip >= F::zero()) {
            return Err(Error::invalid(format!("grad_clip={} must be >= 0", self.grad_clip)));
        }
        if !(self.max_ratio > F::one()) {
            return Err(Error::invalid(format!("max_ratio={} must be > 1", self.max_ratio)));
        }
        if self.td_gain != F::zero() {
            return Err(Error::invalid(
                "td_gain is reserved and must be zero; TD regularization is not implemented",
            ));
        }
        Ok(())
    }
}

/// Flat rollout of transitions, parallel arrays. Baseline log-probs are
/// recorded at collection time and define the denominator of every ratio in
/// the batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionBatch<F> {
    pub states: Vec<Vec<F>>,
    pub actions: Vec<Vec<F>>,
    pub rewards: Vec<F>,
    pub next_states: Vec<Vec<F>>,
    pub dones: Vec<bool>,
    pub logp_baseline: Vec<F>,
    pub advantages: Vec<F>,
    pub value_targets: Vec<F>,
}

impl<F: Real> TransitionBatch<F> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            states: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            next_states: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            logp_baseline: Vec::with_capacity(n),
            advantages: Vec::new(),
            value_targets: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        state: Vec<F>,
        action: Vec<F>,
        reward: F,
        next_state: Vec<F>,
        done: bool,
        logp_baseline: F,
    ) {
        self.states.push(state);
        self.actions.push(action);
        self.rewards.push(reward);
        self.next_states.push(next_state);
        self.dones.push(done);
        self.logp_baseline.push(logp_baseline);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn check_consistent(&self) -> Result<()> {
        let n = self.len();
        let ok = self.actions.len() == n
            && self.rewards.len() == n
            && self.next_states.len() == n
            && self.dones.len() == n
            && self.logp_baseline.len() == n
            && (self.advantages.is_empty() || self.advantages.len() == n)
            && (self.value_targets.is_empty() || self.value_targets.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("transition batch arrays have mismatched lengths"))
        }
    }
}

/// Running episode-return bookkeeping across rollout boundaries.
#[derive(Clone, Debug, Default)]
pub struct EpisodeTracker<F> {
    partial: F,
    completed: Vec<F>,
}

impl<F: Real> EpisodeTracker<F> {
    pub fn new() -> Self {
        Self { partial: F::zero(), completed: Vec::new() }
    }

    fn observe(&mut self, reward: F, done: bool) {
        self.partial += reward;
        if done {
            self.completed.push(self.partial);
            self.partial = F::zero();
        }
    }

    /// Returns and clears the episodes completed since the last drain.
    pub fn drain_completed(&mut self) -> Vec<F> {
        std::mem::take(&mut self.completed)
    }
}

/// Collects exactly `rollout_len` transitions under the snapshot policy,
/// auto-resetting episodes with seeds drawn from `rng`. Log-probs are the
/// snapshot's exact densities for the sampled actions.
pub fn collect_rollout<F: Real>(
    snapshot: &PolicySnapshot<F>,
    env: &mut Env<F>,
    rollout_len: usize,
    rng: &mut ChaCha12Rng,
    tracker: &mut EpisodeTracker<F>,
) -> Result<TransitionBatch<F>> {
    if rollout_len == 0 {
        return Err(Error::invalid("rollout_len must be positive"));
    }
    let mut batch = TransitionBatch::with_capacity(rollout_len);
    let mut state = match env.needs_reset() {
        true => env.reset(rng.random()),
        false => env.observation(),
    };
    for _ in 0..rollout_len {
        let head = snapshot.forward(&state)?;
        let (action, logp) = snapshot.sample(&head, rng);
        let tr = env.step(&action)?;
        tracker.observe(tr.reward, tr.done);
        state = if tr.done { env.reset(rng.random()) } else { tr.next_state.clone() };
        batch.push(tr.state, action, tr.reward, tr.next_state, tr.done, logp);
    }
    Ok(batch)
}

/// Per-rollout metrics row (one line of the metrics CSV).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics<F> {
    /// Environment steps consumed so far.
    pub step: usize,
    /// Mean return of episodes completed during this rollout (carries the
    /// previous value when none completed).
    pub episode_return: F,
    pub surrogate_loss: F,
    pub value_loss: F,
    pub mean_ratio: F,
    /// Mean per-sample regularization amount `sigma * (rho - rho_dagger)`.
    pub mean_reg_amount: F,
    pub entropy: F,
    pub grad_norm: F,
    /// Minibatch updates skipped because their gradient was non-finite.
    pub skipped_updates: u64,
}

/// Bias-corrected first/second-moment adaptive SGD (Adam).
#[derive(Clone, Debug)]
pub struct AdamOptimizer<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: u64,
    beta1: F,
    beta2: F,
    eps: F,
}

impl<F: Real> AdamOptimizer<F> {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![F::zero(); param_count],
            v: vec![F::zero(); param_count],
            t: 0,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
        }
    }

    /// One update: returns the step to subtract from the parameters.
    pub fn step(&mut self, gradient: &[F], lr: F) -> Result<Vec<F>> {
        if gradient.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "gradient has {} entries, optimizer tracks {}",
                gradient.len(),
                self.m.len()
            )));
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient passed to the optimizer".into()));
        }
        self.t += 1;
        let one = F::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        let mut update = Vec::with_capacity(gradient.len());
        for i in 0..gradient.len() {
            let g = gradient[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            update.push(lr * m_hat / (v_hat.sqrt() + self.eps));
        }
        Ok(update)
    }
}

/// Aggregated statistics of one `policy_update` call.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolicyUpdateStats<F> {
    pub surrogate_loss: F,
    pub mean_ratio: F,
    pub mean_reg_amount: F,
    pub entropy: F,
    pub grad_norm: F,
    pub skipped_updates: u64,
    /// Samples whose ratio hit the overflow clamp.
    pub clamped_ratios: u64,
}

fn vanilla_eval<F: Real>(rho: F, advantage: F) -> SurrogateEval<F> {
    SurrogateEval {
        loss_term: -rho * advantage,
        dloss_drho: -advantage,
        effective_advantage: advantage,
        regularization_amount: F::zero(),
    }
}

fn l2_norm<F: Real>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Runs `epochs_per_rollout` passes of reshuffled minibatch updates over the
/// batch. Each sample contributes `-(rho * effective_advantage) * grad log pi`
/// to the descent gradient, plus the optional entropy-bonus term; minibatch
/// gradients are averaged, norm-clipped, and fed to the optimizer.
/// Non-finite gradients skip the update and bump a counter.
pub fn policy_update<F: Real>(
    policy: &mut Policy<F>,
    batch: &TransitionBatch<F>,
    config: &TrainerConfig<F>,
    optimizer: &mut AdamOptimizer<F>,
    rng: &mut ChaCha12Rng,
) -> Result<PolicyUpdateStats<F>> {
    batch.check_consistent()?;
    if batch.is_empty() {
        return Err(Error::invalid("policy_update needs a non-empty batch"));
    }
    if batch.advantages.len() != batch.len() {
        return Err(Error::invalid("batch advantages are not populated"));
    }

    let n = batch.len();
    let param_count = policy.param_count();
    let mut indices: Vec<usize> = (0..n).collect();

    let mut stats = PolicyUpdateStats::<F>::default();
    let mut sample_count = 0u64;
    let mut minibatch_count = 0u64;

    for _ in 0..config.epochs_per_rollout {
        indices.shuffle(rng);
        for chunk in indices.chunks(config.minibatch_size) {
            let mb = F::of(chunk.len() as f64);
            let mut grad = vec![F::zero(); param_count];
            for &i in chunk {
                let (head, logp_live, glp) =
                    policy.grad_log_prob_with_head(&batch.states[i], &batch.actions[i])?;
                let (rho, clamped) =
                    density_ratio_clamped(logp_live, batch.logp_baseline[i], config.max_ratio)?;
                if clamped {
                    stats.clamped_ratios += 1;
                }
                let advantage = batch.advantages[i];
                let eval = if config.vanilla {
                    vanilla_eval(rho, advantage)
                } else {
                    evaluate(rho, advantage, &config.surrogate)?
                };
                let scale = -(rho * eval.effective_advantage) / mb;
                for (g, dlp) in grad.iter_mut().zip(glp.iter()) {
                    *g += scale * *dlp;
                }
                if config.entropy_gain > F::zero() {
                    let ent_grad = policy.entropy_grad(&batch.states[i])?;
                    let ent_scale = config.entropy_gain / mb;
                    for (g, de) in grad.iter_mut().zip(ent_grad.iter()) {
                        *g -= ent_scale * *de;
                    }
                }
                stats.surrogate_loss += eval.loss_term;
                stats.mean_ratio += rho;
                stats.mean_reg_amount += eval.regularization_amount;
                stats.entropy += Policy::entropy_bonus(&head);
                sample_count += 1;
            }

            let norm = l2_norm(&grad);
            if !norm.is_finite() {
                stats.skipped_updates += 1;
                continue;
            }
            stats.grad_norm += norm;
            minibatch_count += 1;
            if config.grad_clip > F::zero() && norm > config.grad_clip {
                let scale = config.grad_clip / norm;
                for g in &mut grad {
                    *g *= scale;
                }
            }
            let step = optimizer.step(&grad, config.learning_rate)?;
            policy.apply_step(&step)?;
        }
    }

    if sample_count > 0 {
        let sc = F::of(sample_count as f64);
        stats.surrogate_loss /= sc;
        stats.mean_ratio /= sc;
        stats.mean_reg_amount /= sc;
        stats.entropy /= sc;
    }
    if minibatch_count > 0 {
        stats.grad_norm /= F::of(minibatch_count as f64);
    }
    Ok(stats)
}

/// Minibatch regression of the value network toward the batch targets.
/// Returns the mean loss; skips non-finite updates like `policy_update`.
pub fn value_update<F: Real>(
    value: &mut ValueNet<F>,
    batch: &TransitionBatch<F>,
    config: &TrainerConfig<F>,
    optimizer: &mut AdamOptimizer<F>,
    rng: &mut ChaCha12Rng,
) -> Result<(F, u64)> {
    if batch.value_targets.len() != batch.len() {
        return Err(Error::invalid("batch value targets are not populated"));
    }
    let n = batch.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut total_loss = F::zero();
    let mut updates = 0u64;
    let mut skipped = 0u64;
    for _ in 0..config.epochs_per_rollout {
        indices.shuffle(rng);
        for chunk in indices.chunks(config.minibatch_size) {
            let states: Vec<Vec<F>> = chunk.iter().map(|&i| batch.states[i].clone()).collect();
            let targets: Vec<F> = chunk.iter().map(|&i| batch.value_targets[i]).collect();
            let (loss, mut grad) = value_loss_grad(value, &states, &targets)?;
            let norm = l2_norm(&grad);
            if !norm.is_finite() || !loss.is_finite() {
                skipped += 1;
                continue;
            }
            if config.grad_clip > F::zero() && norm > config.grad_clip {
                let scale = config.grad_clip / norm;
                for g in &mut grad {
                    *g *= scale;
                }
            }
            let step = optimizer.step(&grad, config.learning_rate)?;
            value.apply_step(&step)?;
            total_loss += loss;
            updates += 1;
        }
    }
    let mean = if updates > 0 { total_loss / F::of(updates as f64) } else { F::zero() };
    Ok((mean, skipped))
}

/// A periodic evaluation record.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint<F> {
    pub step: usize,
    pub stats: EvalStats<F>,
}

/// Everything a finished run hands back.
#[derive(Clone, Debug)]
pub struct TrainOutcome<F> {
    pub policy: Policy<F>,
    pub value: ValueNet<F>,
    pub metrics: Vec<StepMetrics<F>>,
    pub evals: Vec<EvalPoint<F>>,
}

/// Runs the full training loop. Deterministic for a fixed config (including
/// the seed).
pub fn train<F: Real>(config: &TrainerConfig<F>) -> Result<TrainOutcome<F>> {
    config.validate()?;
    let spec = config.env_spec();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let mut policy = Policy::new(spec.state_dim, spec.action_dim, &config.policy, &mut rng)?;
    let mut value = ValueNet::new(
        spec.state_dim,
        &config.policy.hidden,
        config.policy.activation,
        &mut rng,
    )?;
    let mut value_target = value.clone();
    let mut baseline = policy.snapshot();

    let mut opt_policy = AdamOptimizer::new(policy.param_count());
    let mut opt_value = AdamOptimizer::new(value.param_count());

    let mut env = Env::<F>::new(config.env);
    let mut tracker = EpisodeTracker::new();

    let mut metrics = Vec::new();
    let mut evals = Vec::new();
    let mut steps_done = 0usize;
    let mut next_eval = if config.eval_every > 0 { config.eval_every } else { usize::MAX };
    let mut last_episode_return = F::zero();

    while steps_done < config.total_steps {
        baseline.refresh(&policy);
        let mut batch =
            collect_rollout(&baseline, &mut env, config.rollout_len, &mut rng, &mut tracker)?;

        let mut advantages = advantage_estimates(&batch, &value, &value_target, &config.gae)?;
        let mut targets = Vec::with_capacity(batch.len());
        for (i, adv) in advantages.iter().enumerate() {
            targets.push(*adv + value.value(&batch.states[i])?);
        }
        if config.adv_normalize {
            normalize_advantages(&mut advantages);
        }
        batch.advantages = advantages;
        batch.value_targets = targets;

        let pstats = policy_update(&mut policy, &batch, config, &mut opt_policy, &mut rng)?;
        let (value_loss, v_skipped) =
            value_update(&mut value, &batch, config, &mut opt_value, &mut rng)?;
        soft_update(&mut value_target, &value, config.gae.polyak_tau)?;

        steps_done += batch.len();

        let completed = tracker.drain_completed();
        if !completed.is_empty() {
            let total: F = completed.iter().fold(F::zero(), |a, &x| a + x);
            last_episode_return = total / F::of(completed.len() as f64);
        }

        metrics.push(StepMetrics {
            step: steps_done,
            episode_return: last_episode_return,
            surrogate_loss: pstats.surrogate_loss,
            value_loss,
            mean_ratio: pstats.mean_ratio,
            mean_reg_amount: pstats.mean_reg_amount,
            entropy: pstats.entropy,
            grad_norm: pstats.grad_norm,
            skipped_updates: pstats.skipped_updates + v_skipped,
        });

        while steps_done >= next_eval {
            let eval_seed: u64 = rng.random();
            let stats = evaluate_policy(config.env, &policy, config.eval_episodes, eval_seed)?;
            evals.push(EvalPoint { step: steps_done, stats });
            next_eval = next_eval.saturating_add(config.eval_every);
        }
    }

    Ok(TrainOutcome { policy, value, metrics, evals })
}
