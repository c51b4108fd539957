//! Deterministic, seedable desk-scale environments: pendulum swing-up,
//! continuous-action cartpole balance, and a two-armed Gaussian bandit that
//! doubles as an analytically solvable convergence oracle.
//!
//! Actions are `[-1, 1]^action_dim` everywhere; each environment scales
//! them to its native torque/force internally.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::scalar::Real;

/// Which environment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Pendulum,
    CartpoleContinuous,
    Bandit2,
}

impl EnvName {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvName::Pendulum => "pendulum",
            EnvName::CartpoleContinuous => "cartpole_continuous",
            EnvName::Bandit2 => "bandit2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvName::Pendulum),
            "cartpole_continuous" => Ok(EnvName::CartpoleContinuous),
            "bandit2" => Ok(EnvName::Bandit2),
            other => Err(Error::invalid(format!(
                "unknown environment {other:?}; expected pendulum, cartpole_continuous, or bandit2"
            ))),
        }
    }
}

impl core::fmt::Display for EnvName {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Static description of an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: EnvName,
    pub state_dim: usize,
    pub action_dim: usize,
    pub max_steps: usize,
}

impl EnvSpec {
    pub fn of(name: EnvName) -> Self {
        match name {
            EnvName::Pendulum => Self { name, state_dim: 3, action_dim: 1, max_steps: 200 },
            EnvName::CartpoleContinuous => {
                Self { name, state_dim: 4, action_dim: 1, max_steps: 500 }
            }
            EnvName::Bandit2 => Self { name, state_dim: 1, action_dim: 1, max_steps: 1 },
        }
    }
}

/// One environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<F> {
    pub state: Vec<F>,
    pub action: Vec<F>,
    pub reward: F,
    pub next_state: Vec<F>,
    pub done: bool,
}

// Pendulum constants: rod pendulum with g = 10, m = l = 1, dt = 0.05,
// torque = 2 * action, angular velocity clamped to +-8.
const PEND_DT: f64 = 0.05;
const PEND_MAX_SPEED: f64 = 8.0;
const PEND_MAX_TORQUE: f64 = 2.0;

// Cartpole constants (classic cart-pole ODE), force = 10 * action,
// explicit Euler with dt = 0.02, failure at |theta| > 12 deg or |x| > 2.4.
const CART_DT: f64 = 0.02;
const CART_GRAVITY: f64 = 9.8;
const CART_MASS_CART: f64 = 1.0;
const CART_MASS_POLE: f64 = 0.1;
const CART_HALF_LENGTH: f64 = 0.5;
const CART_FORCE_MAG: f64 = 10.0;
const CART_X_LIMIT: f64 = 2.4;
const CART_THETA_LIMIT: f64 = 12.0 * core::f64::consts::PI / 180.0;

const BANDIT_NOISE_STD: f64 = 0.1;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<F: Real>(x: F) -> F {
    let two_pi = F::of(core::f64::consts::TAU);
    let pi = F::of(core::f64::consts::PI);
    let mut a = (x + pi) % two_pi;
    if a < F::zero() {
        a += two_pi;
    }
    let mut w = a - pi;
    if w == -pi {
        w = pi;
    }
    w
}

/// One semi-implicit Euler step of the pendulum dynamics
/// `theta_ddot = 15*sin(theta) + 3*torque` (velocity first, then angle).
/// Exposed so the integrator can be probed at arbitrary `dt`.
pub fn pendulum_dynamics_step<F: Real>(theta: F, theta_dot: F, torque: F, dt: F) -> (F, F) {
    let accel = F::of(15.0) * theta.sin() + F::of(3.0) * torque;
    let mut new_dot = theta_dot + accel * dt;
    let max_speed = F::of(PEND_MAX_SPEED);
    new_dot = new_dot.max(-max_speed).min(max_speed);
    let new_theta = wrap_angle(theta + new_dot * dt);
    (new_theta, new_dot)
}

/// Reward mean of the bandit arm selected by the sign of the scalar action.
pub fn bandit_arm_mean<F: Real>(action: F) -> F {
    if action >= F::zero() {
        F::one()
    } else {
        F::zero()
    }
}

#[derive(Clone, Debug)]
enum EnvState<F> {
    Pendulum { theta: F, theta_dot: F },
    Cartpole { x: F, x_dot: F, theta: F, theta_dot: F },
    Bandit,
}

/// A single-threaded environment state machine. Distinct instances may run
/// in parallel; one instance is strictly sequential.
#[derive(Clone, Debug)]
pub struct Env<F> {
    spec: EnvSpec,
    state: EnvState<F>,
    steps: usize,
    needs_reset: bool,
    rng: ChaCha12Rng,
}

impl<F: Real> Env<F> {
    pub fn new(name: EnvName) -> Self {
        let spec = EnvSpec::of(name);
        let state = match name {
            EnvName::Pendulum => EnvState::Pendulum { theta: F::zero(), theta_dot: F::zero() },
            EnvName::CartpoleContinuous => EnvState::Cartpole {
                x: F::zero(),
                x_dot: F::zero(),
                theta: F::zero(),
                theta_dot: F::zero(),
            },
            EnvName::Bandit2 => EnvState::Bandit,
        };
        Self { spec, state, steps: 0, needs_reset: true, rng: ChaCha12Rng::seed_from_u64(0) }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// True before the first reset and after an episode finished.
    pub fn needs_reset(&self) -> bool {
        self.needs_reset
    }

    /// Starts a fresh episode. Deterministic for a fixed seed.
    pub fn reset(&mut self, seed: u64) -> Vec<F> {
        self.rng = ChaCha12Rng::seed_from_u64(seed);
        self.steps = 0;
        self.needs_reset = false;
        match self.spec.name {
            EnvName::Pendulum => {
                // near hanging-down: theta = pi +- 0.1, theta_dot in +-0.05
                let theta = wrap_angle(F::of(core::f64::consts::PI) + self.uniform(0.1));
                let theta_dot = self.uniform(0.05);
                self.state = EnvState::Pendulum { theta, theta_dot };
            }
            EnvName::CartpoleContinuous => {
                self.state = EnvState::Cartpole {
                    x: self.uniform(0.05),
                    x_dot: self.uniform(0.05),
                    theta: self.uniform(0.05),
                    theta_dot: self.uniform(0.05),
                };
            }
            EnvName::Bandit2 => {
                self.state = EnvState::Bandit;
            }
        }
        self.observation()
    }

    fn uniform(&mut self, half_width: f64) -> F {
        let u: f64 = self.rng.random::<f64>() * 2.0 - 1.0;
        F::of(u * half_width)
    }

    /// Current observation vector.
    pub fn observation(&self) -> Vec<F> {
        match &self.state {
            EnvState::Pendulum { theta, theta_dot } => {
                vec![theta.cos(), theta.sin(), *theta_dot]
            }
            EnvState::Cartpole { x, x_dot, theta, theta_dot } => {
                vec![*x, *x_dot, *theta, *theta_dot]
            }
            EnvState::Bandit => vec![F::zero()],
        }
    }

    /// Advances one step under a `[-1, 1]`-bounded action.
    pub fn step(&mut self, action: &[F]) -> Result<Transition<F>> {
        if self.needs_reset {
            return Err(Error::invalid("episode is finished; call reset before stepping"));
        }
        if action.len() != self.spec.action_dim {
            return Err(Error::invalid(format!(
                "action has {} entries, {} expects {}",
                action.len(),
                self.spec.name,
                self.spec.action_dim
            )));
        }
        for a in action {
            if !a.is_finite() {
                return Err(Error::invalid(format!("action component {a} is not finite")));
            }
        }
        let state = self.observation();
        let a = action[0].max(-F::one()).min(F::one());

        let reward = match &mut self.state {
            EnvState::Pendulum { theta, theta_dot } => {
                let torque = F::of(PEND_MAX_TORQUE) * a;
                let th = wrap_angle(*theta);
                let reward = -(th * th
                    + F::of(0.1) * *theta_dot * *theta_dot
                    + F::of(0.001) * torque * torque);
                let (nt, nd) = pendulum_dynamics_step(*theta, *theta_dot, torque, F::of(PEND_DT));
                *theta = nt;
                *theta_dot = nd;
                reward
            }
            EnvState::Cartpole { x, x_dot, theta, theta_dot } => {
                let force = F::of(CART_FORCE_MAG) * a;
                let total_mass = F::of(CART_MASS_CART + CART_MASS_POLE);
                let polemass_length = F::of(CART_MASS_POLE * CART_HALF_LENGTH);
                let cos = theta.cos();
                let sin = theta.sin();
                let temp = (force + polemass_length * *theta_dot * *theta_dot * sin) / total_mass;
                let theta_acc = (F::of(CART_GRAVITY) * sin - cos * temp)
                    / (F::of(CART_HALF_LENGTH)
                        * (F::of(4.0 / 3.0) - F::of(CART_MASS_POLE) * cos * cos / total_mass));
                let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
                let dt = F::of(CART_DT);
                *x += dt * *x_dot;
                *x_dot += dt * x_acc;
                *theta += dt * *theta_dot;
                *theta_dot += dt * theta_acc;
                F::one()
            }
            EnvState::Bandit => {
                let noise = F::standard_normal(&mut self.rng);
                bandit_arm_mean(a) + F::of(BANDIT_NOISE_STD) * noise
            }
        };

        self.steps += 1;
        let failed = match &self.state {
            EnvState::Cartpole { x, theta, .. } => {
                x.abs() > F::of(CART_X_LIMIT) || theta.abs() > F::of(CART_THETA_LIMIT)
            }
            _ => false,
        };
        let done = failed || self.steps >= self.spec.max_steps;
        self.needs_reset = done;

        Ok(Transition {
            state,
            action: vec![a],
            reward,
            next_state: self.observation(),
            done,
        })
    }
}

/// Score statistics of repeated policy evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalStats<F> {
    /// Per-episode returns, in episode order.
    pub returns: Vec<F>,
    pub median: F,
    pub mean: F,
    /// Normal-approximation 95% confidence interval on the mean.
    pub ci_lo: F,
    pub ci_hi: F,
}

/// Runs `episodes` full episodes with actions sampled from the policy and
/// returns per-episode returns plus their median/mean/95% CI. Fully
/// deterministic for a fixed `(policy, seed)` pair.
pub fn evaluate_policy<F: Real>(
    name: EnvName,
    policy: &Policy<F>,
    episodes: usize,
    seed: u64,
) -> Result<EvalStats<F>> {
    Ok(evaluate_policy_traced(name, policy, episodes, seed, 0)?.0)
}

/// One full episode's transitions.
pub type EpisodeTrace<F> = Vec<Transition<F>>;

/// [`evaluate_policy`] that also keeps the full transition traces of the
/// first `keep_traces` episodes.
pub fn evaluate_policy_traced<F: Real>(
    name: EnvName,
    policy: &Policy<F>,
    episodes: usize,
    seed: u64,
    keep_traces: usize,
) -> Result<(EvalStats<F>, Vec<EpisodeTrace<F>>)> {
    if episodes == 0 {
        return Err(Error::invalid("evaluate_policy needs at least one episode"));
    }
    let mut env = Env::<F>::new(name);
    if policy.state_dim() != env.spec().state_dim || policy.action_dim() != env.spec().action_dim {
        return Err(Error::invalid(format!(
            "policy shaped {}x{} does not fit {} ({}x{})",
            policy.state_dim(),
            policy.action_dim(),
            name,
            env.spec().state_dim,
            env.spec().action_dim
        )));
    }
    let mut seeder = ChaCha12Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    let mut traces = Vec::new();
    for episode in 0..episodes {
        let env_seed: u64 = seeder.random();
        let action_seed: u64 = seeder.random();
        let mut action_rng = ChaCha12Rng::seed_from_u64(action_seed);
        let mut state = env.reset(env_seed);
        let mut ep_return = F::zero();
        let keep = episode < keep_traces;
        let mut trace = Vec::new();
        loop {
            let head = policy.forward(&state)?;
            let (action, _) = policy.sample(&head, &mut action_rng);
            let tr = env.step(&action)?;
            ep_return += tr.reward;
            let done = tr.done;
            state = tr.next_state.clone();
            if keep {
                trace.push(tr);
            }
            if done {
                break;
            }
        }
        if keep {
            traces.push(trace);
        }
        returns.push(ep_return);
    }
    Ok((stats_from_returns(returns), traces))
}

/// Serializes one episode trace as CSV with header
/// `t,state0..,action0..,reward,done`.
pub fn trace_csv<F: Real>(spec: &EnvSpec, trace: &[Transition<F>]) -> String {
    let mut out = String::from("t");
    for d in 0..spec.state_dim {
        out.push_str(&format!(",state{d}"));
    }
    for d in 0..spec.action_dim {
        out.push_str(&format!(",action{d}"));
    }
    out.push_str(",reward,done\n");
    for (t, tr) in trace.iter().enumerate() {
        out.push_str(&t.to_string());
        for v in &tr.state {
            out.push_str(&format!(",{v}"));
        }
        for v in &tr.action {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{},{}\n", tr.reward, u8::from(tr.done)));
    }
    out
}

pub(crate) fn stats_from_returns<F: Real>(returns: Vec<F>) -> EvalStats<F> {
    let mut sorted = returns.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("returns are finite"));
    let median = median_of_sorted(&sorted);
    let n = F::of(returns.len() as f64);
    let mean = returns.iter().fold(F::zero(), |a, &x| a + x) / n;
    let (ci_lo, ci_hi) = if returns.len() < 2 {
        (mean, mean)
    } else {
        let var = returns.iter().fold(F::zero(), |a, &x| a + (x - mean) * (x - mean))
            / (n - F::one());
        let half = F::of(1.96) * (var / n).sqrt();
        (mean - half, mean + half)
    };
    EvalStats { returns, median, mean, ci_lo, ci_hi }
}

pub(crate) fn median_of_sorted<F: Real>(sorted: &[F]) -> F {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) * F::of(0.5)
    }
}
