//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, NumCast, ToPrimitive};
use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

/// Floating-point scalar the pipeline can run on: `f32` or `f64`.
///
/// `Display` / `FromStr` are required because every text export in the crate
/// relies on Rust's shortest round-trip float formatting to reload values
/// bit-exactly.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Unnormalized forward FFT, in place.
    fn fft_in_place(buf: &mut [Complex<Self>]);
}

fn planned_fft<T: FftNum>(buf: &mut [Complex<T>]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

impl Real for f32 {
    fn fft_in_place(buf: &mut [Complex<Self>]) {
        planned_fft(buf)
    }
}

impl Real for f64 {
    fn fft_in_place(buf: &mut [Complex<Self>]) {
        planned_fft(buf)
    }
}
