//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Real`]. `f32` and `f64` are provided;
//! the crate-root aliases pin `f64` as the precision the trainer and CLI run
//! at.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + core::iter::Sum
    + core::fmt::Display
    + core::fmt::Debug
    + core::fmt::LowerExp
    + Serialize
    + DeserializeOwned
    + Default
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant. Lossy for `f32`.
    fn of(x: f64) -> Self;

    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Sign of an advantage, used to pick the active branch of every surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    /// Positive advantage.
    Plus,
    /// Negative advantage.
    Minus,
}

impl Sign {
    /// Sign of `advantage`. Exact zero maps to `Plus`; callers short-circuit
    /// zero advantages before the sign ever matters.
    #[inline]
    pub fn of_advantage<F: Real>(advantage: F) -> Self {
        if advantage < F::zero() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// The sign as a scalar, `+1` or `-1`.
    #[inline]
    pub fn value<F: Real>(self) -> F {
        match self {
            Sign::Plus => F::one(),
            Sign::Minus => -F::one(),
        }
    }
}

impl core::fmt::Display for Sign {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Sign::Plus => write!(f, "+1"),
            Sign::Minus => write!(f, "-1"),
        }
    }
}
