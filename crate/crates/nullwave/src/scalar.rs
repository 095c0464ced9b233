//! Floating-point scalar abstraction for the grid, solver, and diagnostics.
//!
//! The algebra side of the crate stays in exact rationals; everything
//! numerical is generic over [`Scalar`] so the same kernels run in `f64`
//! (the default used by the binaries) or `f32`.

use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Field type of grid values: IEEE float semantics plus the conversions and
/// bounds the parallel kernels need.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Send + Sync + Debug + Display + 'static
{
    /// Conversion from `f64` constants; panics only on values outside the
    /// type's range, which no solver constant is.
    fn of_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("constant representable in scalar type")
    }

    /// Lossy widening/narrowing to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}
