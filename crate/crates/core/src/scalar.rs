//! Field abstraction shared by every kernel.
//!
//! States are flat vectors over either `f64` (ODE systems, method-of-lines
//! grids) or `Complex64` (the scalar test equation with complex λ used in
//! stability analysis).

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
{
    fn from_real(x: f64) -> Self;

    /// Absolute value (modulus for complex numbers).
    fn modulus(self) -> f64;

    fn is_finite(self) -> bool;

    fn exp(self) -> Self;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn one() -> Self {
        Self::from_real(1.0)
    }

    fn scale(self, x: f64) -> Self {
        self * Self::from_real(x)
    }
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn scale(self, x: f64) -> Self {
        self * x
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn exp(self) -> Self {
        Complex64::exp(self)
    }

    fn scale(self, x: f64) -> Self {
        self * x
    }
}

/// Max-norm of a state vector.
pub fn max_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

/// Max-norm of the difference of two equally sized vectors.
pub fn max_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((*x - *y).modulus()))
}

/// `y += a * x`
pub fn axpy<S: Scalar>(a: S, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// `y += a * x` with a real coefficient.
pub fn axpy_real<S: Scalar>(a: f64, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi.scale(a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn norm_is_nonnegative_and_zero_only_at_zero(v in proptest::collection::vec(-1e6f64..1e6, 1..8),
                                                     w in proptest::collection::vec(-1e6f64..1e6, 1..8)) {
            let n = max_norm(&v);
            prop_assert!(n >= 0.0);
            prop_assert_eq!(n == 0.0, v.iter().all(|x| *x == 0.0));
            let c: Vec<Complex64> = v.iter().zip(w.iter().cycle()).map(|(a, b)| Complex64::new(*a, *b)).collect();
            let nc = max_norm(&c);
            prop_assert!(nc >= 0.0);
            prop_assert_eq!(nc == 0.0, c.iter().all(|x| x.re == 0.0 && x.im == 0.0));
        }
    }

    #[test]
    fn complex_modulus() {
        assert_eq!(Complex64::new(3.0, 4.0).modulus(), 5.0);
        assert_eq!(Complex64::from_real(2.0), Complex64::new(2.0, 0.0));
        assert!(!Complex64::new(f64::NAN, 0.0).is_finite());
    }
}
