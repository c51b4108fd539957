//! Policy-regularized reinforcement learning around the PPO surrogate
//! family: ratio clipping, rollback, and relative-Pearson-divergence
//! regularization with a threshold-derived adaptive gain.
//!
//! The crate is organized bottom-up:
//!
//! - [`ratio`]: scalar density-ratio and divergence math (raw/relative
//!   ratios, PE/RPE Monte-Carlo estimators, threshold and gain
//!   conversions).
//! - [`surrogate`]: the three per-sample objectives and their analytic
//!   ratio derivatives, unified behind one dispatch.
//! - [`mlp`], [`policy`], [`value`]: manual-backprop networks, the
//!   tanh-squashed Gaussian policy with exact densities, and the GAE
//!   critic with a Polyak-averaged target.
//! - [`envs`]: seedable desk-scale environments (pendulum swing-up,
//!   continuous cartpole, two-armed bandit).
//! - [`trainer`]: the rollout/update loop with an adaptive SGD optimizer,
//!   deterministic under a seed.
//! - [`checkpoint`]: versioned JSON parameter dumps.
//!
//! All numeric code is generic over the scalar type via [`Real`]
//! (`f32`/`f64`); the `*64` aliases below pin the precision the trainer and
//! CLI run at.

// Validation deliberately writes `!(x > 0)` so NaN fails the check, and
// parallel-array math indexes by position.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checkpoint;
pub mod envs;
pub mod error;
pub mod mlp;
pub mod policy;
pub mod ratio;
pub mod scalar;
pub mod surrogate;
pub mod trainer;
pub mod value;

pub use error::{Error, Result};
pub use scalar::{Real, Sign};

/// f64 instantiations of the main domain types.
pub type RatioSample64 = ratio::RatioSample<f64>;
pub type MixtureParams64 = ratio::MixtureParams<f64>;
pub type SurrogateSpec64 = surrogate::SurrogateSpec<f64>;
pub type SurrogateEval64 = surrogate::SurrogateEval<f64>;
pub type Mlp64 = mlp::Mlp<f64>;
pub type Policy64 = policy::Policy<f64>;
pub type ValueNet64 = value::ValueNet<f64>;
pub type GaeConfig64 = value::GaeConfig<f64>;
pub type Env64 = envs::Env<f64>;
pub type TrainerConfig64 = trainer::TrainerConfig<f64>;
pub type TransitionBatch64 = trainer::TransitionBatch<f64>;
pub type StepMetrics64 = trainer::StepMetrics<f64>;

/// f32 instantiations, for callers that trade precision for footprint.
pub type RatioSample32 = ratio::RatioSample<f32>;
pub type SurrogateSpec32 = surrogate::SurrogateSpec<f32>;
pub type Mlp32 = mlp::Mlp<f32>;
pub type Policy32 = policy::Policy<f32>;
