use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub use num_complex::Complex64 as C64;

/// Element type of a sparse matrix or factorization.
///
/// Implemented for `f64` and `Complex64`. Right-hand sides and eigenvectors
/// are always complex; `scale_c64` lets a real factor act on them without
/// promoting the factor itself.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// `None` when the value has a nonzero imaginary part and `Self` is real.
    fn try_from_c64(c: C64) -> Option<Self>;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn to_c64(self) -> C64;
    /// `self * c`
    fn scale_c64(self, c: C64) -> C64;
    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    fn try_from_c64(c: C64) -> Option<Self> {
        (c.im == 0.0).then_some(c.re)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    #[inline]
    fn scale_c64(self, c: C64) -> C64 {
        C64::new(self * c.re, self * c.im)
    }
}

impl Scalar for C64 {
    #[inline]
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn try_from_c64(c: C64) -> Option<Self> {
        Some(c)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        num_complex::Complex::conj(&self)
    }
    #[inline]
    fn to_c64(self) -> C64 {
        self
    }
    #[inline]
    fn scale_c64(self, c: C64) -> C64 {
        self * c
    }
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated inner product `<a, b> = sum conj(a_i) b_i`.
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}
