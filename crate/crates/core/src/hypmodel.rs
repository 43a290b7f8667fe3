//! Hyperboloid model of real hyperbolic n-space.
//!
//! Points live on the upper sheet of ⟨x,x⟩ = −1 in Minkowski space
//! ℝ^{n,1} with ⟨x,y⟩ = −x₀y₀ + Σᵢ xᵢyᵢ. Ideal boundary points are
//! future-pointing null rays, normalized against the basepoint
//! p = (1,0,…,0) so that the Busemann function vanishes at p. In this
//! model the Busemann function, its gradient, and its Hessian are
//! closed-form expressions and isometries act linearly, so nothing ever
//! leaves a chart.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::{real, tol, Real};
use crate::symform::SymBilinearForm;
use crate::{Error, Result};

/// Hyperboloid constraint tolerance: |⟨x,x⟩ + 1| ≤ 1e-10·(1 + x₀²).
/// The scale factor makes the check meaningful far from the basepoint,
/// where the quadratic form is evaluated by cancellation of terms of
/// size x₀² and its absolute rounding error necessarily grows like
/// eps·x₀².
const POINT_TOL: f64 = 1e-10;
/// Null-vector tolerance for boundary points (relative to ‖b‖²).
const NULL_TOL: f64 = 1e-10;
/// Tangency tolerance: |⟨x,v⟩| ≤ 1e-9.
const TANGENT_TOL: f64 = 1e-9;
/// Lorentz-matrix tolerance: ‖gᵀJg − J‖_max ≤ 1e-9.
const LORENTZ_TOL: f64 = 1e-9;

/// Minkowski pairing ⟨a,b⟩ = −a₀b₀ + Σᵢ aᵢbᵢ.
pub fn mink_dot<T: Real>(a: &DVector<T>, b: &DVector<T>) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = -(a[0] * b[0]);
    for i in 1..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn mink_matrix<T: Real>(dim: usize) -> DMatrix<T> {
    let mut j = DMatrix::identity(dim, dim);
    j[(0, 0)] = -T::one();
    j
}

/// A point on the upper hyperboloid sheet: ⟨x,x⟩ = −1, x₀ > 0.
///
/// Serializes as the raw coordinate array `[x0, x1, …, xn]`; invariants
/// are re-checked on deserialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkPoint<T: Real> {
    coords: DVector<T>,
}

impl<T: Real + Serialize> Serialize for MinkPoint<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for MinkPoint<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<T>::deserialize(d)?;
        Self::new(DVector::from_vec(raw)).map_err(D::Error::custom)
    }
}

impl<T: Real> MinkPoint<T> {
    /// Validates and wraps hyperboloid coordinates.
    pub fn new(coords: DVector<T>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::Input("ambient dimension must be at least 3".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("point coordinates must be finite".into()));
        }
        if coords[0] <= T::zero() {
            return Err(Error::Input("point must lie on the upper sheet (x0 > 0)".into()));
        }
        let q = mink_dot(&coords, &coords);
        let scale = T::one() + coords[0] * coords[0];
        if (q + T::one()).abs() > tol::<T>(POINT_TOL) * scale {
            return Err(Error::Input(format!(
                "point is off the hyperboloid: <x,x> = {:?}",
                q
            )));
        }
        Ok(Self { coords })
    }

    /// The basepoint p = (1, 0, …, 0) of Hⁿ.
    pub fn basepoint(n: usize) -> Self {
        let mut coords = DVector::zeros(n + 1);
        coords[0] = T::one();
        Self { coords }
    }

    /// Radially projects a timelike future vector onto the hyperboloid:
    /// x ← x / √(−⟨x,x⟩).
    pub fn project(coords: DVector<T>) -> Result<Self> {
        if coords.len() < 3 || coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("invalid coordinates for projection".into()));
        }
        let q = mink_dot(&coords, &coords);
        if q >= T::zero() || coords[0] <= T::zero() {
            return Err(Error::Input(
                "projection requires a future-pointing timelike vector".into(),
            ));
        }
        Ok(Self {
            coords: coords / (-q).sqrt(),
        })
    }

    /// Hyperbolic dimension n (ambient dimension minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }
}

/// A tangent vector at a hyperboloid point: ⟨base, v⟩ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec<T: Real> {
    base: MinkPoint<T>,
    coords: DVector<T>,
}

impl<T: Real> TangentVec<T> {
    pub fn new(base: MinkPoint<T>, coords: DVector<T>) -> Result<Self> {
        if coords.len() != base.coords.len() {
            return Err(Error::Input("tangent/base dimension mismatch".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("tangent coordinates must be finite".into()));
        }
        let pairing = mink_dot(&base.coords, &coords);
        if pairing.abs() > tol::<T>(TANGENT_TOL) {
            return Err(Error::Input(format!(
                "vector is not tangent: <x,v> = {:?}",
                pairing
            )));
        }
        Ok(Self { base, coords })
    }

    /// Projects an ambient vector onto T_x and wraps it:
    /// v ← v + ⟨v,x⟩·x.
    pub fn project(base: MinkPoint<T>, ambient: DVector<T>) -> Result<Self> {
        if ambient.len() != base.coords.len() {
            return Err(Error::Input("tangent/base dimension mismatch".into()));
        }
        let c = mink_dot(&ambient, &base.coords);
        let coords = ambient + &base.coords * c;
        Self::new(base, coords)
    }

    pub fn base(&self) -> &MinkPoint<T> {
        &self.base
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    /// Riemannian norm (the Minkowski form is positive definite on T_x).
    pub fn norm(&self) -> T {
        mink_dot(&self.coords, &self.coords).sqrt()
    }

    /// Riemannian inner product with another tangent vector at the same
    /// base point.
    pub fn dot(&self, other: &Self) -> T {
        mink_dot(&self.coords, &other.coords)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n < tol::<T>(1e-12) {
            return Err(Error::Input("cannot normalize a zero tangent vector".into()));
        }
        Ok(Self {
            base: self.base.clone(),
            coords: &self.coords / n,
        })
    }
}

/// An ideal boundary point: future null vector b with ⟨b, p⟩ = −1,
/// i.e. b₀ = 1 in these coordinates.
///
/// Serializes as the raw coordinate array; re-validated when read back.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint<T: Real> {
    coords: DVector<T>,
}

impl<T: Real + Serialize> Serialize for BoundaryPoint<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for BoundaryPoint<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<T>::deserialize(d)?;
        Self::new(DVector::from_vec(raw)).map_err(D::Error::custom)
    }
}

impl<T: Real> BoundaryPoint<T> {
    /// Validates a null vector and rescales it to the ⟨b,p⟩ = −1 gauge.
    pub fn new(coords: DVector<T>) -> Result<Self> {
        if coords.len() < 3 || coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("invalid boundary coordinates".into()));
        }
        if coords[0] <= T::zero() {
            return Err(Error::Input("boundary vector must be future-pointing".into()));
        }
        let q = mink_dot(&coords, &coords);
        let scale = coords.norm_squared();
        if q.abs() > tol::<T>(NULL_TOL) * (T::one() + scale) {
            return Err(Error::Input(format!(
                "boundary vector is not null: <b,b> = {:?}",
                q
            )));
        }
        let b0 = coords[0];
        Ok(Self { coords: coords / b0 })
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

/// A Lorentz isometry of Hⁿ: gᵀJg = J, orthochronous.
///
/// Serializes as a row-major nested array; the Lorentz condition is
/// re-checked on deserialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry<T: Real> {
    mat: DMatrix<T>,
}

impl<T: Real + Serialize> Serialize for Isometry<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<T>> = (0..self.mat.nrows())
            .map(|i| self.mat.row(i).iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Isometry<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom("isometry rows must form a square matrix"));
        }
        let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(mat).map_err(D::Error::custom)
    }
}

impl<T: Real> Isometry<T> {
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        let d = mat.nrows();
        if d < 3 || mat.ncols() != d {
            return Err(Error::Input("isometry matrix must be square, size >= 3".into()));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("isometry entries must be finite".into()));
        }
        let j = mink_matrix::<T>(d);
        let defect = mat.transpose() * &j * &mat - &j;
        let worst = defect.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if worst > tol::<T>(LORENTZ_TOL) {
            return Err(Error::Input(format!(
                "matrix is not Lorentz: max |g'Jg - J| = {:?}",
                worst
            )));
        }
        if mat[(0, 0)] <= T::zero() {
            return Err(Error::Input("isometry must be orthochronous".into()));
        }
        Ok(Self { mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n + 1, n + 1),
        }
    }

    /// Hyperbolic translation of length `t` along the first spatial axis.
    pub fn boost(n: usize, t: T) -> Self {
        let mut mat = DMatrix::identity(n + 1, n + 1);
        mat[(0, 0)] = t.cosh();
        mat[(0, 1)] = t.sinh();
        mat[(1, 0)] = t.sinh();
        mat[(1, 1)] = t.cosh();
        Self { mat }
    }

    /// Rotation by `angle` in the spatial (i, j) plane, 1-based spatial
    /// indices i < j ≤ n.
    pub fn rotation(n: usize, i: usize, j: usize, angle: T) -> Result<Self> {
        if i == 0 || j == 0 || i >= j || j > n {
            return Err(Error::Input(format!(
                "rotation plane ({i}, {j}) invalid for H^{n}"
            )));
        }
        let mut mat = DMatrix::identity(n + 1, n + 1);
        mat[(i, i)] = angle.cos();
        mat[(j, j)] = angle.cos();
        mat[(i, j)] = -angle.sin();
        mat[(j, i)] = angle.sin();
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows() - 1
    }

    /// Composition g∘h (apply h first).
    pub fn compose(&self, h: &Self) -> Result<Self> {
        if self.mat.nrows() != h.mat.nrows() {
            return Err(Error::Input("isometry dimension mismatch".into()));
        }
        Ok(Self {
            mat: &self.mat * &h.mat,
        })
    }

    /// Exact inverse J gᵀ J (no linear solve needed for Lorentz matrices).
    pub fn inverse(&self) -> Self {
        let j = mink_matrix::<T>(self.mat.nrows());
        Self {
            mat: &j * self.mat.transpose() * &j,
        }
    }
}

/// Geodesic distance arccosh(max(−⟨x,y⟩, 1)).
pub fn distance<T: Real>(x: &MinkPoint<T>, y: &MinkPoint<T>) -> T {
    let c = -mink_dot(x.coords(), y.coords());
    c.max(T::one()).acosh()
}

/// Busemann function B_θ(x) = log(−⟨x, b⟩), normalized so B(p) = 0.
pub fn busemann<T: Real>(x: &MinkPoint<T>, b: &BoundaryPoint<T>) -> Result<T> {
    let pairing = -mink_dot(x.coords(), b.coords());
    if pairing <= T::zero() {
        return Err(Error::Input(
            "nonpositive Busemann pairing; point or boundary data corrupted".into(),
        ));
    }
    Ok(pairing.ln())
}

/// Gradient of B_θ at x: the unit tangent vector x + b/⟨x,b⟩, pointing
/// away from θ.
pub fn busemann_gradient<T: Real>(x: &MinkPoint<T>, b: &BoundaryPoint<T>) -> Result<TangentVec<T>> {
    let pairing = mink_dot(x.coords(), b.coords());
    if -pairing <= T::zero() {
        return Err(Error::Input(
            "nonpositive Busemann pairing; point or boundary data corrupted".into(),
        ));
    }
    let coords = x.coords() + b.coords() / pairing;
    TangentVec::new(x.clone(), coords)
}

/// Deterministic orthonormal basis of T_x (Gram-Schmidt over projected
/// ambient axes; the Minkowski form is positive definite on T_x).
pub fn tangent_basis<T: Real>(x: &MinkPoint<T>) -> Vec<TangentVec<T>> {
    let d = x.coords().len();
    let n = d - 1;
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(n);
    for i in 0..d {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(d);
        v[i] = T::one();
        let c = mink_dot(&v, x.coords());
        v += x.coords() * c;
        for u in &basis {
            let c = mink_dot(&v, u);
            v -= u * c;
        }
        let norm = mink_dot(&v, &v).max(T::zero()).sqrt();
        if norm > real::<T>(1e-8) {
            basis.push(v / norm);
        }
    }
    debug_assert_eq!(basis.len(), n);
    basis
        .into_iter()
        .map(|v| TangentVec { base: x.clone(), coords: v })
        .collect()
}

/// Hessian of B_θ at x expressed in an orthonormal tangent basis:
/// ∇dB = g − dB⊗dB, i.e. I − u uᵀ with uᵢ = ⟨∇B, vᵢ⟩.
pub fn busemann_hessian_in_basis<T: Real>(
    x: &MinkPoint<T>,
    b: &BoundaryPoint<T>,
    basis: &[TangentVec<T>],
) -> Result<SymBilinearForm<T>> {
    let n = x.dim();
    if basis.len() != n {
        return Err(Error::Input(format!(
            "expected a full tangent basis of size {n}, got {}",
            basis.len()
        )));
    }
    let grad = busemann_gradient(x, b)?;
    let u = DVector::from_fn(n, |i, _| grad.dot(&basis[i]));
    let mut mat = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            mat[(i, j)] -= u[i] * u[j];
        }
    }
    SymBilinearForm::new(mat)
}

/// Hessian of B_θ at x in the basis produced by [`tangent_basis`].
pub fn busemann_hessian<T: Real>(
    x: &MinkPoint<T>,
    b: &BoundaryPoint<T>,
) -> Result<SymBilinearForm<T>> {
    let basis = tangent_basis(x);
    busemann_hessian_in_basis(x, b, &basis)
}

/// Geodesic point exp_x(t·v) = cosh(t)·x + sinh(t)·v for unit v,
/// reprojected onto the hyperboloid.
pub fn exp_map<T: Real>(x: &MinkPoint<T>, v: &TangentVec<T>, t: T) -> Result<MinkPoint<T>> {
    check_unit(v)?;
    let coords = x.coords() * t.cosh() + v.coords() * t.sinh();
    MinkPoint::project(coords)
}

/// Geodesic point together with the transported velocity
/// (sinh(t)·x + cosh(t)·v), re-orthogonalized at the new point.
pub fn geodesic_flow<T: Real>(
    x: &MinkPoint<T>,
    v: &TangentVec<T>,
    t: T,
) -> Result<(MinkPoint<T>, TangentVec<T>)> {
    check_unit(v)?;
    let point = MinkPoint::project(x.coords() * t.cosh() + v.coords() * t.sinh())?;
    let vel = x.coords() * t.sinh() + v.coords() * t.cosh();
    let vel = TangentVec::project(point.clone(), vel)?.normalize()?;
    Ok((point, vel))
}

/// Ideal endpoint of the geodesic ray from x with unit direction v:
/// the null vector x + v in the ⟨b,p⟩ = −1 gauge.
pub fn boundary_endpoint<T: Real>(x: &MinkPoint<T>, v: &TangentVec<T>) -> Result<BoundaryPoint<T>> {
    check_unit(v)?;
    BoundaryPoint::new(x.coords() + v.coords())
}

fn check_unit<T: Real>(v: &TangentVec<T>) -> Result<()> {
    if (v.norm() - T::one()).abs() > tol::<T>(TANGENT_TOL) {
        return Err(Error::Input("direction must be a unit tangent vector".into()));
    }
    Ok(())
}

/// Applies an isometry to a point.
pub fn apply_to_point<T: Real>(g: &Isometry<T>, x: &MinkPoint<T>) -> Result<MinkPoint<T>> {
    if g.dim() != x.dim() {
        return Err(Error::Input("isometry/point dimension mismatch".into()));
    }
    MinkPoint::project(g.matrix() * x.coords())
}

/// Applies an isometry to a boundary point, renormalizing the gauge.
pub fn apply_to_boundary<T: Real>(g: &Isometry<T>, b: &BoundaryPoint<T>) -> Result<BoundaryPoint<T>> {
    if g.dim() != b.dim() {
        return Err(Error::Input("isometry/boundary dimension mismatch".into()));
    }
    BoundaryPoint::new(g.matrix() * b.coords())
}

/// Applies an isometry to a tangent vector (base and fiber), restoring
/// exact tangency afterwards.
pub fn apply_to_tangent<T: Real>(g: &Isometry<T>, v: &TangentVec<T>) -> Result<TangentVec<T>> {
    let base = apply_to_point(g, v.base())?;
    TangentVec::project(base, g.matrix() * v.coords())
}
