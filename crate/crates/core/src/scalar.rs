//! Floating-point abstraction shared by every numerical routine.

use nalgebra::RealField;
use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the library is generic over (implemented for `f32` and `f64`).
pub trait Real: RealField + Copy + Default + Serialize + DeserializeOwned {
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// Absolute value; `abs` is ambiguous between `Signed` and `ComplexField`.
    fn mag(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Scales an `f64` tolerance to this type's precision, capped at 1e-2.
    fn tol(x: f64) -> Self {
        let scale = Self::default_epsilon().to_f64() / f64::EPSILON;
        Self::lit((x * scale).min(1e-2).max(x))
    }
}

macro_rules! impl_real {
    ($($t:ty),*) => {$(
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    )*};
}

impl_real!(f32, f64);

pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn i_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn cexp<T: Real>(z: C<T>) -> C<T> {
    cis(z.im) * z.re.exp()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Real>(x: T) -> T {
    let tau = T::two_pi();
    let mut y = x % tau;
    if y < T::zero() {
        y += tau;
    }
    if y >= tau {
        y -= tau;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_scales_with_precision() {
        assert_eq!(<f64 as Real>::tol(1e-10), 1e-10);
        let t32 = <f32 as Real>::tol(1e-10);
        assert!(t32 > 1e-5 && t32 <= 1e-2);
    }

    #[test]
    fn wrap_phase_range() {
        let pi = std::f64::consts::PI;
        assert!((wrap_phase(-pi / 2.0) - 1.5 * pi).abs() < 1e-15);
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!(wrap_phase(2.0 * pi) < 1e-15);
        assert!((wrap_phase(5.0 * pi) - pi).abs() < 1e-12);
    }

    #[test]
    fn cis_and_cexp_agree() {
        let z = c(0.3, -1.2);
        let e = cexp(z);
        let s = z.exp();
        assert!((e - s).norm() < 1e-15);
        assert!((cabs(cis(0.7f64)) - 1.0).abs() < 1e-15);
    }
}
