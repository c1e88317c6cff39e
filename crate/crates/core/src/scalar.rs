//! Real scalar abstraction underlying all complex linear algebra.
//!
//! Every matrix, ensemble and solver in this crate is generic over the real
//! floating-point type `T`; matrix entries are `Complex<T>`. The crate root
//! exports `f64` aliases, which is what the CLI and the verification suite
//! use. `f32` works for exploratory runs but will not reach the default
//! tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar. Blanket-implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant (tolerance, literal) into `T`.
pub fn real<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("scalar must be constructible from f64")
}

/// Complex value with zero imaginary part.
pub fn cx<T: Scalar>(re: f64) -> Complex<T> {
    Complex::new(real(re), T::zero())
}

/// Lossy view of a `T` as `f64`, used only for diagnostics and error reports.
pub fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
