//! Spectral bounds and flow diagnostics for discrete groups acting on
//! negatively curved and higher-rank symmetric spaces.
//!
//! The crate is organized around a handful of small numeric domains:
//!
//! * [`symform`]: symmetric bilinear forms and the k-trace functional
//!   (the sum of the k smallest eigenvalues).
//! * [`hypmodel`]: the hyperboloid model of real hyperbolic n-space:
//!   points, ideal boundary points, Busemann functions and their
//!   derivatives, Lorentz isometries.
//! * [`rootsys`]: restricted root systems with multiplicities, the
//!   half-sum ρ, the highest root, maximal strongly orthogonal systems,
//!   and the integer gap bounds they induce.
//! * [`rankone`]: closed-form spectral data for the four rank-one
//!   families (real, complex, quaternionic, octonionic hyperbolic) and
//!   the dimension/Cheeger/λ₀ bounds attached to a critical exponent.
//! * [`schottky`]: Schottky-group fixtures, orbit enumeration, and
//!   critical-exponent estimation from orbital counting.
//! * [`psflow`]: discrete boundary densities, the induced potential,
//!   its gradient and Hessian, and the transported-frame flow integrator
//!   with k-volume contraction checks.
//!
//! All numeric kernels are generic over the scalar type through the
//! [`scalar::Real`] trait; `f64` aliases for the main types are exported
//! at the crate root.

pub mod hypmodel;
pub mod psflow;
pub mod rankone;
pub mod rootsys;
pub mod sampling;
pub mod scalar;
pub mod schottky;
pub mod symform;

pub use scalar::Real;

/// Errors surfaced by the library, grouped by how callers are expected
/// to react (reject the input, raise a resource cap, treat an estimate
/// as unusable, or flag a failed verification).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("estimation failure: {0}")]
    Estimation(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `f64` instantiations of the core generic types.
pub type SymForm = symform::SymBilinearForm<f64>;
pub type Point = hypmodel::MinkPoint<f64>;
pub type Tangent = hypmodel::TangentVec<f64>;
pub type Boundary = hypmodel::BoundaryPoint<f64>;
pub type Motion = hypmodel::Isometry<f64>;
pub type RootSystem = rootsys::RestrictedRootSystem<f64>;
pub type SpacePreset = rootsys::SymmetricSpacePreset<f64>;
pub type Rank1 = rankone::RankOneSpace<f64>;
pub type Density = psflow::DiscreteBoundaryDensity<f64>;
