//! Scalar abstraction. All numerics run in complex arithmetic over a real
//! floating-point base type `T` (`f32` or `f64`).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point base type of the kernel.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Default `(rank_rtol, eig_cluster_atol, commute_rtol, verify_rtol, defect_rtol)`.
    fn default_thresholds() -> [Self; 5];

    /// Lossy conversion from `f64`, used for literals and RNG draws.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f64 {
    fn default_thresholds() -> [Self; 5] {
        [1e-10, 1e-8, 1e-8, 1e-8, 1e-6]
    }
}

impl Real for f32 {
    fn default_thresholds() -> [Self; 5] {
        [1e-5, 1e-4, 1e-4, 1e-4, 3e-3]
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `|z|` without overflow.
#[inline]
pub(crate) fn abs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Whether the base type can represent the scalar in a real field.
#[inline]
pub fn is_real<T: Real>(z: C<T>) -> bool {
    z.im == T::zero()
}
