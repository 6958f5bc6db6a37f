//! Scalar abstraction shared by every numerical module.
//!
//! All of the numerics are written against [`Real`], which is satisfied by
//! `f32` and `f64`. Complex values are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar usable by the library.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count or index into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// Shorthand for building a complex number from its parts.
#[inline]
pub fn c<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

/// Shorthand for building a complex number from `f64` parts.
#[inline]
pub fn cl<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Pairwise (cascade) summation; the result depends only on the order of `values`.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Pairwise summation for complex values.
pub fn pairwise_sum_c<T: Real>(values: &[Cplx<T>]) -> Cplx<T> {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for &v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum_c(&values[..mid]) + pairwise_sum_c(&values[mid..])
    }
}

/// Pairwise summation of `f(i)` over `0..n` without materializing a buffer
/// larger than one block per recursion level.
pub fn pairwise_fold<T: Real, F: Fn(usize) -> T>(n: usize, f: &F) -> T {
    fn go<T: Real, F: Fn(usize) -> T>(lo: usize, hi: usize, f: &F) -> T {
        if hi - lo <= 32 {
            let mut acc = T::zero();
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    go(0, n, f)
}

/// Complex counterpart of [`pairwise_fold`].
pub fn pairwise_fold_c<T: Real, F: Fn(usize) -> Cplx<T>>(n: usize, f: &F) -> Cplx<T> {
    fn go<T: Real, F: Fn(usize) -> Cplx<T>>(lo: usize, hi: usize, f: &F) -> Cplx<T> {
        if hi - lo <= 32 {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    go(0, n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 55.0);
        assert_eq!(pairwise_fold(10, &|i| (i + 1) as f64), 55.0);
    }

    #[test]
    fn pairwise_is_accurate_on_long_input() {
        let n = 1_000_000;
        let s = pairwise_fold(n, &|_| 0.1f64);
        assert!((s - 100_000.0).abs() < 1e-8);
    }

    #[test]
    fn literals_convert_for_both_widths() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::from_count(7), 7.0);
    }
}
