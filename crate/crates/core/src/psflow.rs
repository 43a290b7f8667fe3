//! Potential-theoretic gradient flow for discrete boundary densities.
//!
//! A Patterson-Sullivan measure is approximated here by a finite atomic
//! measure mu = sum_i w_i delta_{theta_i} on the boundary sphere.  Its
//! x-dependent norm is
//!
//! ```text
//! ||mu_x|| = sum_i w_i exp(-delta B_{theta_i}(x)),
//! ```
//!
//! and the potential driving everything below is f(x) = -log ||mu_x||.
//! The natural flow runs x' = -grad f; along it a k-frame transported by
//! the linearized flow loses volume at rate at least delta(k-1-delta),
//! which [`verify_contraction`] checks on concrete trajectories.
//!
//! Finite atomic densities are a stand-in for the genuine limit measure:
//! every guarantee verified here is about the finite model, and orbit
//! truncation depth controls how well it tracks the ideal object.  All
//! norm accumulation runs in log-sum-exp form so far-out evaluation
//! points cannot overflow, and the frame is transported by the exact
//! variational equation Y' = +/- (hess f) Y with no renormalization, so
//! the Gram determinant carries the honest k-volume.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::hypmodel::{
    boundary_endpoint, exp_map, mink_dot, tangent_basis, BoundaryPoint, MinkPoint, TangentVec,
};
use crate::scalar::{as_f64, real, tol, Real};
use crate::schottky::{poincare_partial_sum, OrbitPoint};
use crate::symform::SymBilinearForm;
use crate::{Error, Result};

/// Two atoms closer than this (Euclidean gap of unit direction vectors,
/// which is the visual angle at the basepoint to first order) are the
/// same atom.
pub const ANGULAR_TOL: f64 = 1e-8;

/// Default integrator step for [`integrate_flow`].
pub const DEFAULT_DT: f64 = 1e-3;

/// Largest step the integrator accepts.
pub const MAX_DT: f64 = 1e-2;

/// Per-unit-time slack granted to the contraction bound; covers RK4
/// truncation and Gram-determinant rounding on [0, T].
pub const CONTRACTION_SLACK: f64 = 1e-3;

/// Hyperboloid drift allowed per accepted step, measured before the
/// radial reprojection.
pub const DRIFT_TOL: f64 = 1e-6;

/// Fixed step for the scalar comparison ODE in [`verify_ode_bound`].
pub const ODE_DT: f64 = 1e-4;

// ---------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------

/// Finite atomic approximation of a boundary density of exponent delta.
#[derive(Debug, Clone)]
pub struct DiscreteBoundaryDensity<T: Real> {
    delta: T,
    atoms: Vec<(BoundaryPoint<T>, T)>,
    dim: usize,
}

impl<T: Real> DiscreteBoundaryDensity<T> {
    /// Builds a density from explicit atoms.
    ///
    /// Requires `delta >= 0` finite, at least one atom, every weight
    /// finite and positive, matching dimensions, and pairwise atom
    /// separation above [`ANGULAR_TOL`].
    pub fn new(delta: T, atoms: Vec<(BoundaryPoint<T>, T)>) -> Result<Self> {
        if !delta.is_finite() || delta < T::zero() {
            return Err(Error::Input(
                "density exponent delta must be finite and nonnegative".into(),
            ));
        }
        let first = atoms
            .first()
            .ok_or_else(|| Error::Input("density needs at least one atom".into()))?;
        let dim = first.0.dim();
        if dim < 2 {
            return Err(Error::Input("boundary atoms must live in H^n, n >= 2".into()));
        }
        for (b, w) in &atoms {
            if b.dim() != dim {
                return Err(Error::Input("density atoms have mixed dimensions".into()));
            }
            if !w.is_finite() || *w <= T::zero() {
                return Err(Error::Input("atom weights must be finite and positive".into()));
            }
        }
        ensure_separated(&atoms)?;
        Ok(Self { delta, atoms, dim })
    }

    /// Exponent delta of the density.
    pub fn delta(&self) -> T {
        self.delta
    }

    /// The atoms as (boundary point, weight) pairs.
    pub fn atoms(&self) -> &[(BoundaryPoint<T>, T)] {
        &self.atoms
    }

    /// Hyperbolic dimension n of the ambient space H^n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total mass sum_i w_i.
    pub fn total_weight(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, (_, w)| acc + *w)
    }

    /// The same density with every weight multiplied by `c > 0`.
    ///
    /// Gradient and Hessian of the potential are invariant under this
    /// gauge change; the potential itself shifts by -log c.
    pub fn rescaled(&self, c: T) -> Result<Self> {
        if !c.is_finite() || c <= T::zero() {
            return Err(Error::Input("weight rescaling factor must be positive".into()));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|(b, w)| (b.clone(), *w * c))
            .collect();
        Self::new(self.delta, atoms)
    }
}

/// Spatial direction (unit vector in R^n) of a normalized boundary point.
fn atom_direction<T: Real>(b: &BoundaryPoint<T>) -> Vec<T> {
    b.coords().iter().skip(1).copied().collect()
}

/// Grid key at resolution [`ANGULAR_TOL`] for near-duplicate lookup.
fn spatial_key<T: Real>(dir: &[T]) -> Vec<i64> {
    dir.iter()
        .map(|c| (as_f64(*c) / ANGULAR_TOL).round() as i64)
        .collect()
}

fn dir_gap_sq<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
}

/// Visits the 3^n grid cells adjacent to `key` (including itself).
fn for_each_neighbor_cell<F: FnMut(&[i64])>(key: &[i64], mut f: F) {
    let n = key.len();
    let mut offset = vec![-1i64; n];
    loop {
        let cell: Vec<i64> = key.iter().zip(&offset).map(|(k, o)| k + o).collect();
        f(&cell);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            offset[i] += 1;
            if offset[i] <= 1 {
                break;
            }
            offset[i] = -1;
            i += 1;
        }
    }
}

/// Rejects atom lists with a pair closer than [`ANGULAR_TOL`].
fn ensure_separated<T: Real>(atoms: &[(BoundaryPoint<T>, T)]) -> Result<()> {
    let tol2 = real::<T>(ANGULAR_TOL * ANGULAR_TOL);
    let dirs: Vec<Vec<T>> = atoms.iter().map(|(b, _)| atom_direction(b)).collect();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, dir) in dirs.iter().enumerate() {
        let key = spatial_key(dir);
        let mut clash = false;
        for_each_neighbor_cell(&key, |cell| {
            if clash {
                return;
            }
            if let Some(bucket) = grid.get(cell) {
                for &j in bucket {
                    if dir_gap_sq(dir, &dirs[j]) <= tol2 {
                        clash = true;
                        return;
                    }
                }
            }
        });
        if clash {
            return Err(Error::Input(format!(
                "atoms {} and a neighbor are closer than the angular tolerance {ANGULAR_TOL}",
                i
            )));
        }
        grid.entry(key).or_default().push(i);
    }
    Ok(())
}

/// Builds a density from a truncated orbit: one atom per orbit point,
/// placed at the boundary endpoint of the ray from `p` through the
/// point, with weight exp(-delta * dist).
///
/// Atoms closer than [`ANGULAR_TOL`] merge by adding weights, so the
/// total mass equals the Poincare partial sum of the orbit at `delta`.
/// A multi-point orbit whose directions all merge into a single atom is
/// degenerate and rejected.
pub fn density_from_orbit<T: Real>(
    orbit: &[OrbitPoint<T>],
    delta: T,
    p: &MinkPoint<T>,
) -> Result<DiscreteBoundaryDensity<T>> {
    if orbit.is_empty() {
        return Err(Error::Input("cannot build a density from an empty orbit".into()));
    }
    if !delta.is_finite() || delta <= T::zero() {
        return Err(Error::Input(
            "orbit density exponent delta must be finite and positive".into(),
        ));
    }
    let tol2 = real::<T>(ANGULAR_TOL * ANGULAR_TOL);
    let mut atoms: Vec<(BoundaryPoint<T>, T)> = Vec::new();
    let mut dirs: Vec<Vec<T>> = Vec::new();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for op in orbit {
        if op.point.dim() != p.dim() {
            return Err(Error::Input("orbit and basepoint dimensions differ".into()));
        }
        // Unit tangent at p toward the orbit point.
        let y = op.point.coords();
        let w = y + p.coords() * mink_dot(y, p.coords());
        let norm_sq = mink_dot(&w, &w);
        if norm_sq <= tol::<T>(1e-24) {
            return Err(Error::Input(
                "orbit point coincides with the basepoint; ray direction undefined".into(),
            ));
        }
        let v = TangentVec::new(p.clone(), w / norm_sq.sqrt())?;
        let b = boundary_endpoint(p, &v)?;
        let weight = (-delta * op.dist).exp();
        if weight <= T::zero() {
            return Err(Error::Estimation(
                "orbit atom weight underflowed to zero; delta * dist too large".into(),
            ));
        }
        let dir = atom_direction(&b);
        let key = spatial_key(&dir);
        let mut merged: Option<usize> = None;
        for_each_neighbor_cell(&key, |cell| {
            if merged.is_some() {
                return;
            }
            if let Some(bucket) = grid.get(cell) {
                for &j in bucket {
                    if dir_gap_sq(&dir, &dirs[j]) <= tol2 {
                        merged = Some(j);
                        return;
                    }
                }
            }
        });
        match merged {
            Some(j) => atoms[j].1 += weight,
            None => {
                grid.entry(key).or_default().push(atoms.len());
                atoms.push((b, weight));
                dirs.push(dir);
            }
        }
    }
    if orbit.len() >= 2 && atoms.len() == 1 {
        return Err(Error::Estimation(
            "all orbit directions merged into a single atom; the truncated density is degenerate"
                .into(),
        ));
    }
    DiscreteBoundaryDensity::new(delta, atoms)
}

// ---------------------------------------------------------------------
// Potential, gradient, Hessian
// ---------------------------------------------------------------------

/// Atom data packed for repeated evaluation: columns of `b` are atom
/// coordinates, `log_w` the log weights.
struct DensityKernel<T: Real> {
    delta: T,
    b: DMatrix<T>,
    log_w: DVector<T>,
}

/// Everything the flow needs at one evaluation point: softmax weights
/// `alpha`, Busemann gradients as columns of `u`, the ambient potential
/// gradient, and log ||mu_x||.
struct KernelEval<T: Real> {
    alpha: DVector<T>,
    u: DMatrix<T>,
    grad: DVector<T>,
    log_norm: T,
    x: DVector<T>,
    qxx: T,
}

impl<T: Real> DensityKernel<T> {
    fn new(mu: &DiscreteBoundaryDensity<T>) -> Self {
        let d = mu.dim() + 1;
        let a = mu.atoms().len();
        let b = DMatrix::from_fn(d, a, |r, c| mu.atoms()[c].0.coords()[r]);
        let log_w = DVector::from_fn(a, |i, _| mu.atoms()[i].1.ln());
        Self { delta: mu.delta(), b, log_w }
    }

    /// Evaluates at raw ambient coordinates, which only need to be near
    /// the hyperboloid; RK4 stage points are evaluated here directly.
    fn eval(&self, x: &DVector<T>) -> Result<KernelEval<T>> {
        let a = self.b.ncols();
        let mut jx = x.clone();
        jx[0] = -jx[0];
        let pair = self.b.tr_mul(&jx);
        let mut logits = DVector::zeros(a);
        for i in 0..a {
            if pair[i] >= T::zero() {
                return Err(Error::Input(
                    "nonpositive Busemann pairing; evaluation point is invalid".into(),
                ));
            }
            logits[i] = self.log_w[i] - self.delta * (-pair[i]).ln();
        }
        let m = logits.max();
        let mut alpha = logits.map(|l| (l - m).exp());
        let z = alpha.sum();
        alpha /= z;
        let log_norm = m + z.ln();
        let mut u = DMatrix::zeros(x.len(), a);
        for i in 0..a {
            let col = x + self.b.column(i) / pair[i];
            u.set_column(i, &col);
        }
        let mut grad = &u * &alpha * self.delta;
        let qxx = mink_dot(x, x);
        let gx = mink_dot(&grad, x);
        grad -= x * (gx / qxx);
        Ok(KernelEval { alpha, u, grad, log_norm, x: x.clone(), qxx })
    }

    /// Applies the Hessian operator of f at the evaluation point to an
    /// ambient vector (tangent projection included):
    /// H y = delta P(y) - delta(1+delta) sum_i alpha_i <u_i,y> u_i + <g,y> g.
    fn hess_apply(&self, ev: &KernelEval<T>, y: &DVector<T>) -> DVector<T> {
        let py = y - &ev.x * (mink_dot(y, &ev.x) / ev.qxx);
        let mut jy = y.clone();
        jy[0] = -jy[0];
        let c = ev.u.tr_mul(&jy);
        let weighted = ev.alpha.component_mul(&c);
        let gy = mink_dot(&ev.grad, y);
        py * self.delta - (&ev.u * weighted) * (self.delta * (T::one() + self.delta))
            + &ev.grad * gy
    }

    /// Trace of the Hessian operator restricted to span(ys), computed on
    /// an orthonormalized copy of the frame.
    fn span_trace(&self, ev: &KernelEval<T>, ys: &[DVector<T>]) -> Result<T> {
        let mut basis: Vec<DVector<T>> = Vec::with_capacity(ys.len());
        for y in ys {
            let mut v = y.clone();
            for e in &basis {
                let c = mink_dot(&v, e);
                v -= e * c;
            }
            let n2 = mink_dot(&v, &v);
            if n2 <= real::<T>(1e-250) {
                return Err(Error::Estimation(
                    "transported frame degenerated; k-volume trace undefined".into(),
                ));
            }
            basis.push(v / n2.sqrt());
        }
        let mut tr = T::zero();
        for e in &basis {
            tr += mink_dot(e, &self.hess_apply(ev, e));
        }
        Ok(tr)
    }
}

/// log ||mu_x||, accumulated in log-sum-exp form.
pub fn log_norm_mu<T: Real>(mu: &DiscreteBoundaryDensity<T>, x: &MinkPoint<T>) -> Result<T> {
    check_point_dim(mu, x)?;
    Ok(DensityKernel::new(mu).eval(x.coords())?.log_norm)
}

/// ||mu_x|| itself.  Errors when the value overflows the scalar type;
/// use [`potential_f`] or [`log_norm_mu`] in that regime.
pub fn norm_mu<T: Real>(mu: &DiscreteBoundaryDensity<T>, x: &MinkPoint<T>) -> Result<T> {
    let log_norm = log_norm_mu(mu, x)?;
    let value = log_norm.exp();
    if !value.is_finite() {
        return Err(Error::Estimation(
            "||mu_x|| overflows the scalar type; work with log_norm_mu instead".into(),
        ));
    }
    Ok(value)
}

/// The potential f(x) = -log ||mu_x||.
pub fn potential_f<T: Real>(mu: &DiscreteBoundaryDensity<T>, x: &MinkPoint<T>) -> Result<T> {
    Ok(-log_norm_mu(mu, x)?)
}

/// Riemannian gradient of f at x:
/// grad f = delta * sum_i alpha_i grad B_{theta_i}, where alpha is the
/// softmax of log w_i - delta B_i.  Its norm never exceeds delta (each
/// Busemann gradient is unit), and equals delta exactly for one atom.
pub fn grad_f<T: Real>(
    mu: &DiscreteBoundaryDensity<T>,
    x: &MinkPoint<T>,
) -> Result<TangentVec<T>> {
    check_point_dim(mu, x)?;
    let ev = DensityKernel::new(mu).eval(x.coords())?;
    TangentVec::new(x.clone(), ev.grad)
}

/// Covariant Hessian of f at x as a bilinear form on T_x, expressed in
/// the deterministic orthonormal basis of [`tangent_basis`]:
///
/// ```text
/// hess f = delta I - delta(1+delta) sum_i alpha_i dB_i (x) dB_i + df (x) df.
/// ```
///
/// Its k-trace is bounded below by delta(k-1-delta), which drives the
/// volume contraction of the natural flow.
pub fn hess_f<T: Real>(
    mu: &DiscreteBoundaryDensity<T>,
    x: &MinkPoint<T>,
) -> Result<SymBilinearForm<T>> {
    check_point_dim(mu, x)?;
    let kernel = DensityKernel::new(mu);
    let ev = kernel.eval(x.coords())?;
    let basis = tangent_basis(x);
    let n = basis.len();
    let a = ev.alpha.len();
    // Components of each Busemann gradient and of grad f in the basis.
    let mut v = DMatrix::zeros(n, a);
    for (r, e) in basis.iter().enumerate() {
        let mut je = e.coords().clone();
        je[0] = -je[0];
        let row = ev.u.tr_mul(&je);
        for c in 0..a {
            v[(r, c)] = row[c];
        }
    }
    let g = DVector::from_fn(n, |r, _| mink_dot(basis[r].coords(), &ev.grad));
    let mut h = DMatrix::identity(n, n) * kernel.delta;
    let factor = kernel.delta * (T::one() + kernel.delta);
    for i in 0..a {
        let vi = v.column(i);
        let w = ev.alpha[i] * factor;
        for r in 0..n {
            for c in 0..n {
                h[(r, c)] -= w * vi[r] * vi[c];
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            h[(r, c)] += g[r] * g[c];
        }
    }
    SymBilinearForm::new(h)
}

fn check_point_dim<T: Real>(mu: &DiscreteBoundaryDensity<T>, x: &MinkPoint<T>) -> Result<()> {
    if x.dim() != mu.dim() {
        return Err(Error::Input("point and density dimensions differ".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Flow integration
// ---------------------------------------------------------------------

/// Orientation of the integrated flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowSense {
    /// phi_t: x' = +grad f.
    Forward,
    /// The natural flow F_t = phi_{-t}: x' = -grad f; this is the
    /// contracting direction.
    Natural,
}

impl FlowSense {
    fn sign<T: Real>(self) -> T {
        match self {
            FlowSense::Forward => T::one(),
            FlowSense::Natural => -T::one(),
        }
    }

    /// Parses "forward" or "natural".
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(FlowSense::Forward),
            "natural" => Ok(FlowSense::Natural),
            other => Err(Error::Input(format!(
                "unknown flow sense {other:?}; expected \"forward\" or \"natural\""
            ))),
        }
    }
}

impl std::fmt::Display for FlowSense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowSense::Forward => "forward",
            FlowSense::Natural => "natural",
        })
    }
}

/// One point on an integrated trajectory, with the transported k-frame
/// and both k-volume ledgers.
#[derive(Debug, Clone)]
pub struct FlowState<T: Real> {
    /// Position on the hyperboloid.
    pub x: MinkPoint<T>,
    /// Flow time.
    pub t: T,
    /// Frame transported by the linearized flow (not renormalized).
    pub frame: Vec<TangentVec<T>>,
    /// log of the frame k-volume, from the Gram determinant.
    pub log_k_volume: T,
    /// The same quantity obtained by integrating the Hessian trace
    /// along the trajectory; agreement with `log_k_volume` within
    /// 1e-4 * T is part of the integrator contract.
    pub trace_log_k_volume: T,
}

impl<T: Real> FlowState<T> {
    /// Validated constructor: frame vectors must be based at `x`,
    /// tangent within 1e-8, and linearly independent (Gram determinant
    /// above 1e-12).
    pub fn new(x: MinkPoint<T>, t: T, frame: Vec<TangentVec<T>>, log_k_volume: T) -> Result<Self> {
        if frame.is_empty() {
            return Err(Error::Input("flow state frame must be nonempty".into()));
        }
        for y in &frame {
            if y.base().coords() != x.coords() {
                return Err(Error::Input("frame vector not based at the state point".into()));
            }
            if mink_dot(x.coords(), y.coords()).abs() > tol::<T>(1e-8) {
                return Err(Error::Input("frame vector not tangent at the state point".into()));
            }
        }
        let g = frame_gram(&frame);
        if g.determinant() <= real::<T>(1e-12) {
            return Err(Error::Input(
                "frame is numerically dependent (Gram determinant <= 1e-12)".into(),
            ));
        }
        Ok(Self { x, t, frame, log_k_volume, trace_log_k_volume: log_k_volume })
    }
}

fn frame_gram<T: Real>(frame: &[TangentVec<T>]) -> DMatrix<T> {
    let k = frame.len();
    DMatrix::from_fn(k, k, |i, j| mink_dot(frame[i].coords(), frame[j].coords()))
}

fn raw_gram<T: Real>(ys: &[DVector<T>]) -> DMatrix<T> {
    let k = ys.len();
    DMatrix::from_fn(k, k, |i, j| mink_dot(&ys[i], &ys[j]))
}

struct Deriv<T: Real> {
    dx: DVector<T>,
    dys: Vec<DVector<T>>,
    dw: T,
}

/// Integrates the chosen flow from `x0` with an orthonormal initial
/// frame, by classical RK4 at a fixed step `h <= dt` chosen so the grid
/// lands on `total_time` exactly.  Positions are radially reprojected
/// and frames tangent-reprojected after every step; a step whose raw
/// hyperboloid drift exceeds [`DRIFT_TOL`] is rejected with a hint to
/// shrink dt.  Returns the full per-step trajectory, starting at t = 0.
pub fn integrate_flow<T: Real>(
    mu: &DiscreteBoundaryDensity<T>,
    x0: &MinkPoint<T>,
    frame0: &[TangentVec<T>],
    total_time: T,
    dt: T,
    sense: FlowSense,
) -> Result<Vec<FlowState<T>>> {
    check_point_dim(mu, x0)?;
    if !(total_time > T::zero()) || !total_time.is_finite() {
        return Err(Error::Input("flow time must be positive and finite".into()));
    }
    if !(dt > T::zero()) || dt > tol::<T>(MAX_DT) {
        return Err(Error::Input(format!("dt must lie in (0, {MAX_DT}]")));
    }
    if frame0.is_empty() {
        return Err(Error::Input("initial frame must contain at least one vector".into()));
    }
    let ortho_tol = tol::<T>(1e-8);
    for (i, y) in frame0.iter().enumerate() {
        if y.base().coords() != x0.coords() {
            return Err(Error::Input("initial frame vector not based at x0".into()));
        }
        for (j, z) in frame0.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            if (mink_dot(y.coords(), z.coords()) - target).abs() > ortho_tol {
                return Err(Error::Input("initial frame must be orthonormal".into()));
            }
        }
    }

    let kernel = DensityKernel::new(mu);
    let sign: T = sense.sign();
    let n_steps = (as_f64(total_time) / as_f64(dt) - 1e-9).ceil().max(1.0) as usize;
    let h = total_time / real::<T>(n_steps as f64);

    let rhs = |x: &DVector<T>, ys: &[DVector<T>]| -> Result<Deriv<T>> {
        let ev = kernel.eval(x)?;
        let dx = &ev.grad * sign;
        let dys = ys.iter().map(|y| kernel.hess_apply(&ev, y) * sign).collect();
        let dw = kernel.span_trace(&ev, ys)? * sign;
        Ok(Deriv { dx, dys, dw })
    };

    let mut x = x0.coords().clone();
    let mut ys: Vec<DVector<T>> = frame0.iter().map(|y| y.coords().clone()).collect();
    let mut w = T::zero();
    let lv0 = real::<T>(0.5) * raw_gram(&ys).determinant().ln();

    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(FlowState {
        x: x0.clone(),
        t: T::zero(),
        frame: frame0.to_vec(),
        log_k_volume: lv0,
        trace_log_k_volume: lv0,
    });

    let half = h / real::<T>(2.0);
    let sixth = h / real::<T>(6.0);
    for step in 1..=n_steps {
        let k1 = rhs(&x, &ys)?;
        let x2 = &x + &k1.dx * half;
        let y2: Vec<_> = ys.iter().zip(&k1.dys).map(|(y, d)| y + d * half).collect();
        let k2 = rhs(&x2, &y2)?;
        let x3 = &x + &k2.dx * half;
        let y3: Vec<_> = ys.iter().zip(&k2.dys).map(|(y, d)| y + d * half).collect();
        let k3 = rhs(&x3, &y3)?;
        let x4 = &x + &k3.dx * h;
        let y4: Vec<_> = ys.iter().zip(&k3.dys).map(|(y, d)| y + d * h).collect();
        let k4 = rhs(&x4, &y4)?;

        let two = real::<T>(2.0);
        x += (&k1.dx + &k2.dx * two + &k3.dx * two + &k4.dx) * sixth;
        for (i, y) in ys.iter_mut().enumerate() {
            *y += (&k1.dys[i] + &k2.dys[i] * two + &k3.dys[i] * two + &k4.dys[i]) * sixth;
        }
        w += (k1.dw + two * k2.dw + two * k3.dw + k4.dw) * sixth;

        let t = h * real::<T>(step as f64);
        let q = mink_dot(&x, &x);
        let drift = (q + T::one()).abs();
        if drift > tol::<T>(DRIFT_TOL) {
            return Err(Error::Estimation(format!(
                "hyperboloid drift {} at t = {} exceeds {DRIFT_TOL}; reduce dt",
                as_f64(drift),
                as_f64(t)
            )));
        }
        x /= (-q).sqrt();
        for y in ys.iter_mut() {
            let c = mink_dot(y, &x);
            *y += &x * c;
        }

        let det = raw_gram(&ys).determinant();
        if !(det > T::zero()) {
            return Err(Error::Estimation(
                "transported frame lost independence; k-volume undefined".into(),
            ));
        }
        let point = MinkPoint::new(x.clone())?;
        let frame: Vec<TangentVec<T>> = ys
            .iter()
            .map(|y| TangentVec::new(point.clone(), y.clone()))
            .collect::<Result<_>>()?;
        states.push(FlowState {
            x: point,
            t,
            frame,
            log_k_volume: real::<T>(0.5) * det.ln(),
            trace_log_k_volume: lv0 + w,
        });
    }
    Ok(states)
}

// ---------------------------------------------------------------------
// Contraction verification
// ---------------------------------------------------------------------

/// Outcome of checking a trajectory against the k-volume contraction
/// bound of the natural flow.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport<T: Real> {
    /// Density exponent.
    pub delta: T,
    /// Frame size.
    pub k: usize,
    /// Grid times.
    pub times: Vec<T>,
    /// Gram-determinant log k-volumes along the trajectory.
    pub log_k_volumes: Vec<T>,
    /// Bound on the increment: -delta(k-1-delta)(t - t0) per grid point.
    pub bound_curve: Vec<T>,
    /// Worst slack-adjusted overshoot over the grid:
    /// max_t [ (v(t)-v(t0)) - bound(t) - CONTRACTION_SLACK * (t-t0) ].
    pub max_violation: T,
    /// True iff `max_violation <= 0`.
    pub pass: bool,
}

/// Checks log_k_volume(t) - log_k_volume(0) <= -delta(k-1-delta) t up to
/// [`CONTRACTION_SLACK`] per unit time on a natural-sense trajectory.
///
/// For a single atom the increment is exactly -k delta t, so the
/// recorded margin sits at -delta(1+delta)t below the bound when k = 2.
/// At delta = k-1 the bound degenerates to zero and the check still
/// applies verbatim.
pub fn verify_contraction<T: Real>(
    states: &[FlowState<T>],
    mu: &DiscreteBoundaryDensity<T>,
    k: usize,
) -> Result<ContractionReport<T>> {
    if states.is_empty() {
        return Err(Error::Input("contraction check needs at least one state".into()));
    }
    if k == 0 {
        return Err(Error::Input("frame size k must be positive".into()));
    }
    for s in states {
        if s.frame.len() != k {
            return Err(Error::Input(format!(
                "state frame has {} vectors but k = {k}",
                s.frame.len()
            )));
        }
    }
    let delta = mu.delta();
    let rate = delta * (real::<T>(k as f64) - T::one() - delta);
    let slack = real::<T>(CONTRACTION_SLACK);
    let t0 = states[0].t;
    let v0 = states[0].log_k_volume;
    let mut times = Vec::with_capacity(states.len());
    let mut vols = Vec::with_capacity(states.len());
    let mut bounds = Vec::with_capacity(states.len());
    // The t0 grid point always contributes violation 0, so any negative
    // seed is overwritten on the first iteration.
    let mut max_violation = -T::one();
    for s in states {
        let dt = s.t - t0;
        let bound = -rate * dt;
        let violation = (s.log_k_volume - v0) - bound - slack * dt;
        if violation > max_violation {
            max_violation = violation;
        }
        times.push(s.t);
        vols.push(s.log_k_volume);
        bounds.push(bound);
    }
    Ok(ContractionReport {
        delta,
        k,
        times,
        log_k_volumes: vols,
        bound_curve: bounds,
        max_violation,
        pass: max_violation <= T::zero(),
    })
}

/// Renders a trajectory as CSV: time, ambient coordinates, Gram-based
/// log k-volume, the contraction bound on the increment, and the margin
/// (increment minus bound; negative means strictly inside the bound).
pub fn trajectory_csv<T: Real>(states: &[FlowState<T>], delta: T, k: usize) -> String {
    let mut out = String::new();
    if states.is_empty() {
        return out;
    }
    let d = states[0].x.coords().len();
    out.push('t');
    for i in 0..d {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",log_k_volume,bound_curve,margin\n");
    let rate = delta * (real::<T>(k as f64) - T::one() - delta);
    let t0 = states[0].t;
    let v0 = states[0].log_k_volume;
    for s in states {
        let bound = -rate * (s.t - t0);
        let margin = (s.log_k_volume - v0) - bound;
        out.push_str(&format!("{}", as_f64(s.t)));
        for c in s.x.coords().iter() {
            out.push_str(&format!(",{}", as_f64(*c)));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            as_f64(s.log_k_volume),
            as_f64(bound),
            as_f64(margin)
        ));
    }
    out
}

// ---------------------------------------------------------------------
// Scalar comparison ODE
// ---------------------------------------------------------------------

/// Outcome of the comparison-ODE lower bound check.
#[derive(Debug, Clone, Serialize)]
pub struct OdeBoundReport<T: Real> {
    /// Smallest value of y(t) - (y0 - y0^alpha / (C(1-alpha))) e^{Ct}
    /// over the grid.
    pub min_margin: T,
    /// True iff the margin never drops below -1e-6 and y stayed positive.
    pub pass: bool,
    /// First grid time at which y crossed zero, if it did.
    pub crossing_time: Option<T>,
}

/// Integrates y' = C y - y^alpha from y0 by RK4 at step [`ODE_DT`] and
/// checks the Gronwall-type lower bound
///
/// ```text
/// y(t) >= (y0 - y0^alpha / (C(1-alpha))) e^{Ct} - 1e-6.
/// ```
///
/// For C=1, alpha=1/2, y0=9 the bound curve is 3 e^t; for C=2,
/// alpha=1/2, y0=4 it is 2 e^{2t}; y0 = (1/(C(1-alpha)))^{1/(1-alpha)}
/// makes the coefficient vanish.  If y crosses zero the report carries
/// the crossing time and fails.
pub fn verify_ode_bound<T: Real>(c: T, alpha: T, y0: T, total_time: T) -> Result<OdeBoundReport<T>> {
    if !c.is_finite() || c <= T::zero() {
        return Err(Error::Input("ODE coefficient C must be positive".into()));
    }
    if !alpha.is_finite() || alpha <= T::zero() || alpha >= T::one() {
        return Err(Error::Input("ODE exponent alpha must lie strictly in (0, 1)".into()));
    }
    if !y0.is_finite() || y0 <= T::zero() {
        return Err(Error::Input("ODE initial value y0 must be positive".into()));
    }
    if !total_time.is_finite() || total_time <= T::zero() {
        return Err(Error::Input("ODE horizon must be positive".into()));
    }
    let coef = y0 - y0.powf(alpha) / (c * (T::one() - alpha));
    let f = |y: T| c * y - y.max(T::zero()).powf(alpha);
    let n_steps = (as_f64(total_time) / ODE_DT - 1e-9).ceil().max(1.0) as usize;
    let h = total_time / real::<T>(n_steps as f64);
    let half = h / real::<T>(2.0);
    let sixth = h / real::<T>(6.0);
    let two = real::<T>(2.0);

    let mut y = y0;
    let mut min_margin = y0 - coef;
    let mut crossing_time = None;
    for step in 1..=n_steps {
        let k1 = f(y);
        let k2 = f(y + half * k1);
        let k3 = f(y + half * k2);
        let k4 = f(y + h * k3);
        y += sixth * (k1 + two * k2 + two * k3 + k4);
        let t = h * real::<T>(step as f64);
        if y <= T::zero() {
            crossing_time = Some(t);
            break;
        }
        let margin = y - coef * (c * t).exp();
        if margin < min_margin {
            min_margin = margin;
        }
    }
    let pass = crossing_time.is_none() && min_margin >= -tol::<T>(1e-6);
    Ok(OdeBoundReport { min_margin, pass, crossing_time })
}

// ---------------------------------------------------------------------
// Norm growth along geodesics
// ---------------------------------------------------------------------

/// Sampled values of log ||mu_x|| along a geodesic ray, with the fitted
/// exponential rate.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthProfile<T: Real> {
    /// (distance along the ray, log ||mu_x||) pairs.
    pub samples: Vec<(T, T)>,
    /// Least-squares slope of log ||mu_x|| against distance.
    pub rate: T,
}

/// Samples log ||mu_x|| at `samples` equispaced points of the geodesic
/// ray from `x0` with unit direction `v`, and fits the growth rate.
///
/// For a single atom the rate is exactly +delta toward the atom and
/// -delta away from it; rays into the ordinary set of a Schottky
/// density grow at a rate well below delta.
pub fn norm_growth_profile<T: Real>(
    mu: &DiscreteBoundaryDensity<T>,
    x0: &MinkPoint<T>,
    v: &TangentVec<T>,
    total_length: T,
    samples: usize,
) -> Result<GrowthProfile<T>> {
    check_point_dim(mu, x0)?;
    if v.base().coords() != x0.coords() {
        return Err(Error::Input("ray direction must be based at x0".into()));
    }
    if (v.norm() - T::one()).abs() > tol::<T>(1e-9) {
        return Err(Error::Input("ray direction must be a unit vector".into()));
    }
    if !total_length.is_finite() || total_length <= T::zero() {
        return Err(Error::Input("ray length must be positive".into()));
    }
    if samples < 2 {
        return Err(Error::Input("growth profile needs at least two samples".into()));
    }
    let kernel = DensityKernel::new(mu);
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = total_length * real::<T>(i as f64) / real::<T>((samples - 1) as f64);
        let x = exp_map(x0, v, t)?;
        let log_norm = kernel.eval(x.coords())?.log_norm;
        pts.push((t, log_norm));
    }
    let m = real::<T>(samples as f64);
    let mean_t = pts.iter().fold(T::zero(), |a, (t, _)| a + *t) / m;
    let mean_y = pts.iter().fold(T::zero(), |a, (_, y)| a + *y) / m;
    let mut num = T::zero();
    let mut den = T::zero();
    for (t, y) in &pts {
        num += (*t - mean_t) * (*y - mean_y);
        den += (*t - mean_t) * (*t - mean_t);
    }
    if den <= T::zero() {
        return Err(Error::Estimation("degenerate sample grid for rate fit".into()));
    }
    Ok(GrowthProfile { samples: pts, rate: num / den })
}

/// Weight a truncated-orbit density assigns in total, for consistency
/// with the Poincare partial sum it was built from.
pub fn orbit_density_mass<T: Real>(orbit: &[OrbitPoint<T>], delta: T) -> Result<T> {
    poincare_partial_sum(orbit, delta)
}
