//! Flat JSON run configuration and its mapping onto the trainer config.
//!
//! The config file is a single flat object; every key can also be set from
//! the command line (`--seed 7`). Unknown keys are rejected so typos fail
//! loudly.

use clap::Args;
use serde::{Deserialize, Serialize};

use psurr_core::envs::EnvName;
use psurr_core::mlp::Activation;
use psurr_core::policy::PolicyConfig;
use psurr_core::surrogate::{SurrogateSpec, SurrogateVariant};
use psurr_core::trainer::TrainerConfig;
use psurr_core::value::GaeConfig;

use crate::CmdError;

/// One training run, fully specified. Field names are the config-file keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: String,
    pub variant: String,
    pub epsilon: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub polyak_tau: f64,
    pub learning_rate: f64,
    pub rollout_len: usize,
    pub epochs_per_rollout: usize,
    pub minibatch_size: usize,
    pub total_steps: usize,
    pub entropy_gain: f64,
    pub seed: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub hidden: Vec<usize>,
    pub activation: String,
    pub state_dependent_std: bool,
    pub init_log_std: f64,
    pub adv_normalize: bool,
    pub grad_clip: f64,
    pub vanilla: bool,
    pub max_ratio: f64,
    pub td_gain: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: "bandit2".into(),
            variant: "ppo_rpe".into(),
            epsilon: 0.1,
            beta: 0.5,
            eta: 0.0,
            gamma: 0.99,
            lambda: 0.95,
            polyak_tau: 0.9,
            learning_rate: 3e-4,
            rollout_len: 2048,
            epochs_per_rollout: 10,
            minibatch_size: 64,
            total_steps: 100_000,
            entropy_gain: 0.01,
            seed: 0,
            eval_every: 10_000,
            eval_episodes: 50,
            hidden: vec![64, 64],
            activation: "tanh".into(),
            state_dependent_std: false,
            init_log_std: -0.5,
            adv_normalize: false,
            grad_clip: 10.0,
            vanilla: false,
            max_ratio: 1e6,
            td_gain: 0.0,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CmdError::usage(format!("config {}: {e}", path.display())))
    }

    /// Builds the trainer config, validating every field.
    pub fn to_trainer_config(&self) -> Result<TrainerConfig<f64>, CmdError> {
        let env = EnvName::parse(&self.env).map_err(CmdError::from_config)?;
        let variant = SurrogateVariant::parse(&self.variant).map_err(CmdError::from_config)?;
        let surrogate =
            SurrogateSpec { variant, epsilon: self.epsilon, eta: self.eta, beta: self.beta };
        let activation = Activation::parse(&self.activation).map_err(CmdError::from_config)?;
        let config = TrainerConfig {
            env,
            surrogate,
            gae: GaeConfig { gamma: self.gamma, lambda: self.lambda, polyak_tau: self.polyak_tau },
            learning_rate: self.learning_rate,
            rollout_len: self.rollout_len,
            epochs_per_rollout: self.epochs_per_rollout,
            minibatch_size: self.minibatch_size,
            total_steps: self.total_steps,
            entropy_gain: self.entropy_gain,
            seed: self.seed,
            eval_every: self.eval_every,
            eval_episodes: self.eval_episodes,
            policy: PolicyConfig {
                hidden: self.hidden.clone(),
                activation,
                state_dependent_std: self.state_dependent_std,
                init_log_std: self.init_log_std,
            },
            adv_normalize: self.adv_normalize,
            grad_clip: self.grad_clip,
            vanilla: self.vanilla,
            max_ratio: self.max_ratio,
            td_gain: self.td_gain,
        };
        config.validate().map_err(CmdError::from_config)?;
        Ok(config)
    }
}

/// `--key value` overrides for every [`RunConfig`] field.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigOverrides {
    #[arg(long, help_heading = "Config overrides")]
    pub env: Option<String>,
    #[arg(long, help_heading = "Config overrides")]
    pub variant: Option<String>,
    #[arg(long, help_heading = "Config overrides")]
    pub epsilon: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub beta: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub eta: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub gamma: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub lambda: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub polyak_tau: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub learning_rate: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub rollout_len: Option<usize>,
    #[arg(long, help_heading = "Config overrides")]
    pub epochs_per_rollout: Option<usize>,
    #[arg(long, help_heading = "Config overrides")]
    pub minibatch_size: Option<usize>,
    #[arg(long, help_heading = "Config overrides")]
    pub total_steps: Option<usize>,
    #[arg(long, help_heading = "Config overrides")]
    pub entropy_gain: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub seed: Option<u64>,
    #[arg(long, help_heading = "Config overrides")]
    pub eval_every: Option<usize>,
    #[arg(long, help_heading = "Config overrides")]
    pub eval_episodes: Option<usize>,
    /// Hidden layer widths, comma separated (e.g. `--hidden 64,64`).
    #[arg(long, value_delimiter = ',', help_heading = "Config overrides")]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, help_heading = "Config overrides")]
    pub activation: Option<String>,
    #[arg(long, help_heading = "Config overrides")]
    pub state_dependent_std: Option<bool>,
    #[arg(long, help_heading = "Config overrides")]
    pub init_log_std: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub adv_normalize: Option<bool>,
    #[arg(long, help_heading = "Config overrides")]
    pub grad_clip: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub vanilla: Option<bool>,
    #[arg(long, help_heading = "Config overrides")]
    pub max_ratio: Option<f64>,
    #[arg(long, help_heading = "Config overrides")]
    pub td_gain: Option<f64>,
}

macro_rules! apply_field {
    ($cfg:ident, $self:ident, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = &$self.$field {
            $cfg.$field = v.clone();
        })+
    };
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut RunConfig) {
        apply_field!(
            config, self, env, variant, epsilon, beta, eta, gamma, lambda, polyak_tau,
            learning_rate, rollout_len, epochs_per_rollout, minibatch_size, total_steps,
            entropy_gain, seed, eval_every, eval_episodes, hidden, activation,
            state_dependent_std, init_log_std, adv_normalize, grad_clip, vanilla, max_ratio,
            td_gain,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_trainer_config() {
        let config = RunConfig::default();
        let tc = config.to_trainer_config().unwrap();
        assert_eq!(tc.seed, 0);
        assert_eq!(tc.gae.gamma, 0.99);
        assert_eq!(tc.learning_rate, 3e-4);
        assert_eq!(tc.surrogate.epsilon, 0.1);
        assert_eq!(tc.entropy_gain, 0.01);
    }

    #[test]
    fn unknown_variant_is_rejected() {
        let config = RunConfig { variant: "trpo".into(), ..Default::default() };
        assert!(config.to_trainer_config().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>("{\"seeed\": 3}").unwrap_err();
        assert!(err.to_string().contains("seeed"));
    }

    #[test]
    fn overrides_apply() {
        let mut config = RunConfig::default();
        let ov = ConfigOverrides {
            seed: Some(7),
            variant: Some("ppo_clip".into()),
            hidden: Some(vec![8, 8]),
            ..Default::default()
        };
        ov.apply(&mut config);
        assert_eq!(config.seed, 7);
        assert_eq!(config.variant, "ppo_clip");
        assert_eq!(config.hidden, vec![8, 8]);
        // untouched fields keep their values
        assert_eq!(config.epsilon, 0.1);
    }

    #[test]
    fn config_json_round_trip() {
        let config = RunConfig { seed: 42, total_steps: 123, ..Default::default() };
        let json = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
    }
}
