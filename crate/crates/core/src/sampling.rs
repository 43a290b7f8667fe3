//! Seeded random samplers shared by tests, the self-test suite, and flow
//! fixtures.
//!
//! Samples are drawn in `f64` and converted to the working scalar type,
//! so a given seed produces the same values regardless of `T`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::{real, Real};
use crate::symform::SymBilinearForm;

/// The deterministic generator used throughout: a fixed algorithm so a
/// seed reproduces the same stream across platforms and releases.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal vector of the given length.
pub fn gaussian_vector<T: Real, R: Rng>(rng: &mut R, len: usize) -> DVector<T> {
    DVector::from_fn(len, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        real::<T>(x)
    })
}

/// Unit vector uniform on the sphere.
pub fn random_unit_vector<T: Real, R: Rng>(rng: &mut R, len: usize) -> DVector<T> {
    loop {
        let v = gaussian_vector::<T, R>(rng, len);
        let n = v.norm();
        if n > real::<T>(1e-6) {
            return v / n;
        }
    }
}

/// Orthonormal k-frame in dimension `dim`, Haar-ish via Gram-Schmidt on
/// Gaussian vectors.
pub fn random_orthonormal_frame<T: Real, R: Rng>(
    rng: &mut R,
    dim: usize,
    k: usize,
) -> Vec<DVector<T>> {
    assert!(k <= dim, "frame size exceeds dimension");
    let mut frame: Vec<DVector<T>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v = gaussian_vector::<T, R>(rng, dim);
        for u in &frame {
            let c = v.dot(u);
            v -= u * c;
        }
        let n = v.norm();
        if n > real::<T>(1e-6) {
            frame.push(v / n);
        }
    }
    frame
}

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
pub fn random_orthogonal<T: Real, R: Rng>(rng: &mut R, dim: usize) -> DMatrix<T> {
    let cols = random_orthonormal_frame::<T, R>(rng, dim, dim);
    DMatrix::from_columns(&cols)
}

/// Random symmetric form with independent Gaussian entries scaled by
/// `scale`.
pub fn random_symmetric<T: Real, R: Rng>(rng: &mut R, dim: usize, scale: f64) -> SymBilinearForm<T> {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        real::<T>(x * scale)
    });
    SymBilinearForm::new(m).expect("finite square matrix")
}
