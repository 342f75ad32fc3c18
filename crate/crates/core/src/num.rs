//! Scalar abstraction for the numeric core.
//!
//! Every stage of the pipeline (geometry, estimators, closed forms, Monte
//! Carlo) is generic over [`Real`], so the whole engine runs in either `f32`
//! or `f64`. The crate root exports `f64` aliases for the main types; `f64`
//! is what the simulation harness and the validation suites use.

use rand::Rng;

/// Floating-point scalar for all large-scale and per-realization math.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Draws one standard normal variate from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws one uniform variate on `[0, 1)` from `rng`.
    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the value has no representation in `T`, which cannot
/// happen for the finite constants this crate feeds it.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite constant must convert")
}

/// Converts a count into the working scalar type.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count must convert")
}
