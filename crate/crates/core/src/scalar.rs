//! Floating-point abstraction so the simulation math can run in `f32` or
//! `f64` without duplicated code paths.
//!
//! Signal-level quantities (powers, SINR, network weights) are generic over
//! [`Scalar`]; tick counts and other bookkeeping stay in concrete integer or
//! `f64` types. The crate root exports [`crate::Real`] as the default
//! instantiation used by the command-line pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::LinalgScalar;
use num_traits::{Float, NumAssign};
use serde::{de::DeserializeOwned, Serialize};

/// Scalar type for all signal-level arithmetic.
///
/// Implemented for `f32` and `f64` only. The explicit impls (rather than a
/// blanket one) keep the trait sealed in practice and let each width carry
/// its own dtype tag for file headers and checkpoints.
pub trait Scalar:
    Float
    + NumAssign
    + LinalgScalar
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Type tag recorded in trace headers and checkpoint files.
    const DTYPE: &'static str;

    /// Parses a decimal literal, returning `None` on malformed input.
    fn parse(text: &str) -> Option<Self>;

    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn from_f64(value: f64) -> Self;

    /// Widening conversion to `f64`.
    fn to_f64(self) -> f64;

    /// Conversion from a count or index.
    fn from_usize(value: usize) -> Self {
        Self::from_f64(value as f64)
    }
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";

    fn parse(text: &str) -> Option<Self> {
        text.parse().ok()
    }

    fn from_f64(value: f64) -> Self {
        value as f32
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";

    fn parse(text: &str) -> Option<Self> {
        text.parse().ok()
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Converts decibels to linear scale: `10^(db/10)`.
pub fn db_to_linear<S: Scalar>(db: S) -> S {
    let ten = S::from_f64(10.0);
    ten.powf(db / ten)
}

/// Converts a linear power ratio to decibels: `10 log10(x)`.
pub fn linear_to_db<S: Scalar>(linear: S) -> S {
    S::from_f64(10.0) * linear.log10()
}

/// Index of the largest element, lowest index winning ties.
///
/// Panics on an empty slice; callers always have at least one base station.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    assert!(!values.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
