//! Symmetric bilinear forms and the k-trace functional.
//!
//! The k-trace of a symmetric form is the sum of its k smallest
//! eigenvalues, equivalently the infimum of the trace of the form
//! restricted to a k-dimensional subspace. It is superadditive, which is
//! what makes it the right functional for splitting a Hessian into a
//! weighted average of per-atom contributions.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{real, tol, Real};
use crate::{Error, Result};

/// Orthonormality tolerance for subspace frames (f64 contract: 1e-9).
const FRAME_ORTHO_TOL: f64 = 1e-9;

/// A finite-dimensional symmetric bilinear form.
///
/// Construction symmetrizes the entries exactly, so `entry(i, j) ==
/// entry(j, i)` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBilinearForm<T: Real> {
    mat: DMatrix<T>,
}

impl<T: Real> SymBilinearForm<T> {
    /// Builds a form from a square matrix, symmetrizing as `(A + Aᵀ)/2`.
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::Input(format!(
                "expected a nonempty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        let half = real::<T>(0.5);
        let sym = (&entries + entries.transpose()) * half;
        Ok(Self { mat: sym })
    }

    /// Builds a form from row slices.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("rows must form a square matrix".into()));
        }
        let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(mat)
    }

    /// Diagonal form with the given entries.
    pub fn diagonal(entries: &[T]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("diagonal must be nonempty".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("diagonal entries must be finite".into()));
        }
        Ok(Self {
            mat: DMatrix::from_diagonal(&DVector::from_row_slice(entries)),
        })
    }

    /// Identity form of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.mat[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Pointwise sum of two forms of equal dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Input(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            mat: &self.mat * c,
        }
    }

    pub fn trace(&self) -> T {
        self.mat.trace()
    }

    /// Full spectrum, sorted ascending.
    pub fn eigenvalues_ascending(&self) -> Vec<T> {
        let mut evs: Vec<T> = nalgebra::linalg::SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        evs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        evs
    }

    /// Spectrum with eigenvectors, sorted ascending by eigenvalue.
    pub fn eigenpairs_ascending(&self) -> (Vec<T>, Vec<DVector<T>>) {
        let eig = nalgebra::linalg::SymmetricEigen::new(self.mat.clone());
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .expect("finite eigenvalues")
        });
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = idx
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        (values, vectors)
    }

    /// Sum of the k smallest eigenvalues.
    ///
    /// Equals the infimum of [`Self::trace_on_subspace`] over k-dimensional
    /// subspaces.
    pub fn k_trace(&self, k: usize) -> Result<T> {
        if k < 1 || k > self.dim() {
            return Err(Error::Input(format!(
                "k = {} out of range [1, {}]",
                k,
                self.dim()
            )));
        }
        let evs = self.eigenvalues_ascending();
        let mut acc = T::zero();
        for ev in evs.iter().take(k) {
            acc += *ev;
        }
        Ok(acc)
    }

    /// Trace of the form restricted to the span of an orthonormal frame:
    /// `Σᵢ vᵢᵀ A vᵢ`.
    pub fn trace_on_subspace(&self, frame: &[DVector<T>]) -> Result<T> {
        if frame.is_empty() || frame.len() > self.dim() {
            return Err(Error::Input(format!(
                "frame size {} out of range [1, {}]",
                frame.len(),
                self.dim()
            )));
        }
        let ortho_tol = tol::<T>(FRAME_ORTHO_TOL);
        for (i, v) in frame.iter().enumerate() {
            if v.len() != self.dim() {
                return Err(Error::Input(format!(
                    "frame vector {} has length {}, expected {}",
                    i,
                    v.len(),
                    self.dim()
                )));
            }
            for (j, w) in frame.iter().enumerate().take(i + 1) {
                let expected = if i == j { T::one() } else { T::zero() };
                if (v.dot(w) - expected).abs() > ortho_tol {
                    return Err(Error::Input(format!(
                        "frame is not orthonormal at pair ({j}, {i})"
                    )));
                }
            }
        }
        let mut acc = T::zero();
        for v in frame {
            acc += (&self.mat * v).dot(v);
        }
        Ok(acc)
    }

    /// Orthonormal eigenvectors spanning the k lowest eigendirections.
    pub fn lowest_frame(&self, k: usize) -> Result<Vec<DVector<T>>> {
        if k < 1 || k > self.dim() {
            return Err(Error::Input(format!(
                "k = {} out of range [1, {}]",
                k,
                self.dim()
            )));
        }
        let (_, vecs) = self.eigenpairs_ascending();
        Ok(vecs.into_iter().take(k).collect())
    }
}
