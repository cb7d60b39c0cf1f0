//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the library is generic over: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate (1e-8, 1e-10, ...) assume `f64`;
/// `f32` builds compute the same quantities at single precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + rustfft::FftNum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `sin(x)/x` with the removable singularity filled in.
    fn sinc(self) -> Self {
        if self.abs() < Self::lit(1e-4) {
            let x2 = self * self;
            Self::one() - x2 / Self::lit(6.0) + x2 * x2 / Self::lit(120.0)
        } else {
            self.sin() / self
        }
    }

    /// `sinh(x)/x` with the removable singularity filled in.
    fn sinhc(self) -> Self {
        if self.abs() < Self::lit(1e-4) {
            let x2 = self * self;
            Self::one() + x2 / Self::lit(6.0) + x2 * x2 / Self::lit(120.0)
        } else {
            self.sinh() / self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex amplitude over a scalar type.
pub type Cx<S> = Complex<S>;

/// `e^{iθ}`.
#[inline]
pub fn cis<S: Scalar>(theta: S) -> Cx<S> {
    Complex::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<S: Scalar>(theta: S) -> S {
    let two_pi = S::TAU();
    let mut w = theta - two_pi * (theta / two_pi).round();
    if w <= -S::PI() {
        w += two_pi;
    } else if w > S::PI() {
        w -= two_pi;
    }
    w
}

/// Makes a sampled phase continuous by adding multiples of `period` so that
/// adjacent samples differ by at most `period / 2`.
pub fn unwrap_phase<S: Scalar>(values: &mut [S], period: S) {
    let half = period / S::lit(2.0);
    for i in 1..values.len() {
        let diff = values[i] - values[i - 1];
        if diff.abs() > half {
            let turns = (diff / period).round();
            values[i] -= turns * period;
        }
    }
}
