//! Scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate is written against [`Real`], which is
//! `nalgebra`'s `RealField` plus lossy conversion from `f64` literals.
//! `f32` and `f64` both qualify; tolerances are stated in `f64` and
//! converted at use sites via [`real`].

use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type usable by all numeric kernels in this crate.
pub trait Real: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T> Real for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

/// Reads a scalar back as `f64` (exact for `f32`/`f64`).
#[inline]
pub fn as_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}

/// Converts an `f64` constant to the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant converts to scalar type")
}

/// A tolerance that honors stated `f64` contracts while staying usable
/// for wider-epsilon scalar types: `max(tol64, 100·eps)`.
#[inline]
pub fn tol<T: Real>(tol64: f64) -> T {
    let floor = T::default_epsilon() * real::<T>(100.0);
    let t = real::<T>(tol64);
    if t > floor {
        t
    } else {
        floor
    }
}
