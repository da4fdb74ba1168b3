//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type usable by the estimators and bound formulas.
///
/// Implemented for `f32` and `f64`. Arithmetic goes through nalgebra's
/// `RealField` (so dense factorizations work on the same type) and
/// conversions go through num-traits.
pub trait Scalar:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Serialize + DeserializeOwned
{
    /// Converts an `f64` literal. Panics only if the value cannot be
    /// represented at all, which does not happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Sum using pairwise reduction. The result does not depend on how work was
/// split across threads, only on the input order.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Arithmetic mean via [`pairwise_sum`]. Returns zero for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    pairwise_sum(xs) / T::from_usize_lossy(xs.len())
}

/// Serializes a `DVector` as a plain JSON array.
pub mod dvector_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Scalar;

    pub fn serialize<T: Scalar, S: Serializer>(v: &DVector<T>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<DVector<T>, D::Error> {
        Vec::<T>::deserialize(d).map(DVector::from_vec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 55.0);
        assert_eq!(mean(&xs), 5.5);
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(mean::<f32>(&[]), 0.0);
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert!(<f64 as Scalar>::infinity().is_infinite());
    }
}
