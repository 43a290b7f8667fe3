//! Bound tables for the four rank-one hyperbolic families.
//!
//! Each family (real, complex, quaternionic, Cayley) carries a fixed
//! Busemann-Hessian spectrum once the metric is normalized so that the
//! sectional curvature lies in `[-4, -1]` (identically `-1` in the real
//! case).  Everything in this module is a closed-form consequence of
//! that spectrum: the critical index of an exponent `delta`, the
//! homological-dimension bound it yields, the sampled trace inequality
//! on holomorphic planes, and the Cheeger and bottom-of-spectrum bounds
//! for real hyperbolic manifolds.

use nalgebra::DVector;

use crate::sampling;
use crate::scalar::{as_f64, real, Real};
use crate::symform::SymBilinearForm;
use crate::{Error, Result};

/// Slack for the sampled trace inequality in [`holo_trace_check`].
const TRACE_SLACK: f64 = 1e-8;

/// Cap on the number of coordinate complex planes enumerated by
/// [`holo_trace_check`]; above this the binomial count is treated as a
/// resource error rather than silently truncated.
const MAX_COORD_PLANES: u128 = 1_000_000;

/// The four families of rank-one symmetric spaces of noncompact type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Real,
    Complex,
    Quaternionic,
    Cayley,
}

impl Family {
    /// Lower-case label used in serialized tables and CLI output.
    pub fn label(self) -> &'static str {
        match self {
            Family::Real => "real",
            Family::Complex => "complex",
            Family::Quaternionic => "quaternionic",
            Family::Cayley => "cayley",
        }
    }

    /// Inverse of [`Family::label`].
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Family::Real),
            "complex" => Ok(Family::Complex),
            "quaternionic" => Ok(Family::Quaternionic),
            "cayley" => Ok(Family::Cayley),
            other => Err(Error::Input(format!("unknown rank-one family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl serde::Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> serde::Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Family::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A rank-one symmetric space `H^n` over one of the four division
/// algebras, reduced to the data the bounds actually consume: its real
/// dimension and the eigenvalue list of the Busemann Hessian.
///
/// The spectra are exact small integers:
///
/// * real: `(0, 1^(n-1))`,
/// * complex: `(0, 1^(2n-2), 2)`,
/// * quaternionic: `(0, 1^(4n-4), 2, 2, 2)`,
/// * Cayley: `(0, 1^(8), 2^(7))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSpace<T: Real> {
    family: Family,
    n: usize,
    spectrum: Vec<T>,
}

impl<T: Real> RankOneSpace<T> {
    /// Builds the space `H^n` over the algebra selected by `family`.
    ///
    /// Requires `n >= 2`; the Cayley plane only exists for `n = 2`.
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input(format!(
                "rank-one space needs n >= 2, got n = {n}"
            )));
        }
        if family == Family::Cayley && n != 2 {
            return Err(Error::Input(format!(
                "the Cayley hyperbolic plane is fixed at n = 2, got n = {n}"
            )));
        }
        let zero = T::zero();
        let one = T::one();
        let two = real::<T>(2.0);
        let mut spectrum = vec![zero];
        match family {
            Family::Real => spectrum.extend(std::iter::repeat(one).take(n - 1)),
            Family::Complex => {
                spectrum.extend(std::iter::repeat(one).take(2 * n - 2));
                spectrum.push(two);
            }
            Family::Quaternionic => {
                spectrum.extend(std::iter::repeat(one).take(4 * n - 4));
                spectrum.extend(std::iter::repeat(two).take(3));
            }
            Family::Cayley => {
                spectrum.extend(std::iter::repeat(one).take(8));
                spectrum.extend(std::iter::repeat(two).take(7));
            }
        }
        Ok(RankOneSpace {
            family,
            n,
            spectrum,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The algebra-dimension parameter `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension: `n`, `2n`, `4n`, or `16`.
    pub fn real_dim(&self) -> usize {
        self.spectrum.len()
    }

    /// Busemann-Hessian eigenvalues, ascending.
    pub fn spectrum(&self) -> &[T] {
        &self.spectrum
    }

    /// The Hessian as a diagonal symmetric form.
    pub fn hessian_form(&self) -> SymBilinearForm<T> {
        SymBilinearForm::diagonal(&self.spectrum).expect("canonical spectrum is finite")
    }

    /// Volume entropy of the normalized metric: the full spectrum sum
    /// (`n-1`, `2n`, `4n+2`, `22`).  Critical exponents of discrete
    /// subgroups live in `[0, volume_entropy]`.
    pub fn volume_entropy(&self) -> T {
        let mut s = T::zero();
        for &a in &self.spectrum {
            s += a;
        }
        s
    }

    // Sum of the k smallest eigenvalues.  The spectrum is ascending and
    // integer-valued, so the prefix sum is exact; strict comparisons
    // against an integer delta never sit on rounding noise.
    fn prefix_trace(&self, k: usize) -> T {
        let mut s = T::zero();
        for &a in &self.spectrum[..k] {
            s += a;
        }
        s
    }
}

/// Smallest `k` whose k-trace of the Hessian spectrum exceeds `delta`,
/// or `real_dim + 1` when even the full trace does not.
pub fn critical_index<T: Real>(space: &RankOneSpace<T>, delta: T) -> Result<usize> {
    if delta < T::zero() {
        return Err(Error::Input(format!(
            "critical index needs delta >= 0, got {}",
            as_f64(delta)
        )));
    }
    let dim = space.real_dim();
    for k in 1..=dim {
        if space.prefix_trace(k) > delta {
            return Ok(k);
        }
    }
    Ok(dim + 1)
}

/// Upper bound on the homological dimension of a discrete subgroup with
/// critical exponent `delta`: the critical index minus one.
///
/// The caller is responsible for the group-theoretic hypotheses behind
/// the bound (no parabolics, or uniformly bounded injectivity radius);
/// nothing here checks them.
pub fn hd_bound<T: Real>(space: &RankOneSpace<T>, delta: T) -> Result<usize> {
    Ok(critical_index(space, delta)? - 1)
}

/// One row of a homological-dimension table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HdBoundReport<T: Real> {
    pub family: Family,
    pub n: usize,
    pub delta: T,
    pub critical_index: usize,
    pub bound: usize,
    /// True when `delta` lies in an open interval ruled out by
    /// Corlette's gap theorem (quaternionic `(4n, 4n+2)`, Cayley
    /// `(16, 22)`).  The numeric bound is still the one the k-trace
    /// profile yields; no exponent of an actual group lies here.
    pub corlette_excluded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// [`hd_bound`] with provenance: carries the critical index and flags
/// exponents inside a Corlette gap.
pub fn hd_report<T: Real>(space: &RankOneSpace<T>, delta: T) -> Result<HdBoundReport<T>> {
    let ci = critical_index(space, delta)?;
    let excluded = in_corlette_gap(space, delta);
    Ok(HdBoundReport {
        family: space.family(),
        n: space.n(),
        delta,
        critical_index: ci,
        bound: ci - 1,
        corlette_excluded: excluded,
        note: excluded.then(|| "excluded by Corlette gap".to_string()),
    })
}

// Strict interior of the gap: the endpoints are attained (the upper one
// exactly by lattices), so they are not flagged.
fn in_corlette_gap<T: Real>(space: &RankOneSpace<T>, delta: T) -> bool {
    let (lo, hi) = match space.family() {
        Family::Quaternionic => (real::<T>(4.0 * space.n() as f64), space.volume_entropy()),
        Family::Cayley => (real::<T>(16.0), real::<T>(22.0)),
        _ => return false,
    };
    delta > lo && delta < hi
}

/// Sweeps `delta` from `0` to the volume entropy in increments of
/// `step` (endpoint included when the step divides it) and reports the
/// bound at each point, gap rows flagged.
pub fn hd_table<T: Real>(space: &RankOneSpace<T>, step: T) -> Result<Vec<HdBoundReport<T>>> {
    if step <= T::zero() {
        return Err(Error::Input("table step must be positive".into()));
    }
    let top = space.volume_entropy();
    let count = as_f64((top / step).floor()) as i64;
    if count > 1_000_000 {
        return Err(Error::Resource(format!(
            "table would have {count} rows; raise the step"
        )));
    }
    let mut rows = Vec::new();
    for i in 0..=count {
        let delta = step * real::<T>(i as f64);
        if delta > top {
            break;
        }
        rows.push(hd_report(space, delta)?);
    }
    Ok(rows)
}

/// Renders table rows as aligned text, one row per line.
pub fn format_hd_table<T: Real>(rows: &[HdBoundReport<T>]) -> String {
    let mut out = String::new();
    out.push_str("family         n  delta     crit  hd\n");
    for r in rows {
        let mark = if r.corlette_excluded { "  (Corlette gap)" } else { "" };
        out.push_str(&format!(
            "{:<12} {:>3}  {:>7.3}  {:>4}  {:>2}{}\n",
            r.family.label(),
            r.n,
            as_f64(r.delta),
            r.critical_index,
            r.bound,
            mark
        ));
    }
    out
}

/// Outcome of the holomorphic trace inequality check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HoloTraceReport<T: Real> {
    /// Smallest trace seen over all sampled and coordinate planes.
    pub min_sampled_trace: T,
    /// The claimed lower bound `2k - delta`.
    pub bound: T,
    pub pass: bool,
}

/// Samples the trace of `L = K - delta * H` over random `J`-invariant
/// `2k`-planes in `R^(2n)` and over every coordinate complex plane,
/// and checks the lower bound `2k - delta`.
///
/// `K` is diagonal with eigenvalue `0` on `e1`, `2` on `e2 = J e1`, and
/// `1` elsewhere; `H = e1 e1^T`.  Random planes are drawn uniformly on
/// the complex Grassmannian: `k` complex Gaussian vectors in `C^n`,
/// orthonormalized over `C`, then realified.  The coordinate plane
/// through `(e1, e2)` attains the bound exactly, so the minimum is
/// tight whenever `delta > 0`.
pub fn holo_trace_check<T: Real>(
    n: usize,
    delta: T,
    k: usize,
    num_samples: usize,
    seed: u64,
) -> Result<HoloTraceReport<T>> {
    if n < 2 {
        return Err(Error::Input(format!("need n >= 2, got n = {n}")));
    }
    if k < 1 || k > n {
        return Err(Error::Input(format!("need 1 <= k <= n, got k = {k}")));
    }
    let two_n = real::<T>(2.0 * n as f64);
    if delta < T::zero() || delta > two_n {
        return Err(Error::Input(format!(
            "need 0 <= delta <= 2n = {}, got {}",
            2 * n,
            as_f64(delta)
        )));
    }
    if binomial(n, k) > MAX_COORD_PLANES {
        return Err(Error::Resource(format!(
            "{} choose {} coordinate planes exceeds the enumeration cap",
            n, k
        )));
    }

    // L = K - delta * H = diag(-delta, 2, 1, ..., 1) in the realified
    // basis, complex coordinate i occupying real slots (2i, 2i+1).
    let dim = 2 * n;
    let mut diag = vec![T::one(); dim];
    diag[0] = -delta;
    diag[1] = real::<T>(2.0);
    let form = SymBilinearForm::diagonal(&diag)?;

    let bound = real::<T>(2.0 * k as f64) - delta;
    let mut min_trace: Option<T> = None;
    let mut record = |t: T| {
        min_trace = Some(match min_trace {
            Some(m) if m <= t => m,
            _ => t,
        });
    };

    for subset in Combinations::new(n, k) {
        let frame: Vec<DVector<T>> = subset
            .iter()
            .flat_map(|&i| [2 * i, 2 * i + 1])
            .map(|j| {
                let mut v = DVector::zeros(dim);
                v[j] = T::one();
                v
            })
            .collect();
        record(form.trace_on_subspace(&frame)?);
    }

    let mut rng = sampling::seeded_rng(seed);
    for _ in 0..num_samples {
        let frame = random_holomorphic_frame::<T>(n, k, &mut rng);
        record(form.trace_on_subspace(&frame)?);
    }

    let min_sampled_trace = min_trace.expect("at least one coordinate plane");
    let pass = min_sampled_trace >= bound - real::<T>(TRACE_SLACK);
    Ok(HoloTraceReport {
        min_sampled_trace,
        bound,
        pass,
    })
}

// Draws k complex Gaussian vectors in C^n, Gram-Schmidts them over C,
// and realifies: complex coordinate i maps to real slots (2i, 2i+1),
// and each complex unit vector v contributes the pair (v, Jv).  The
// result is an orthonormal basis of a J-invariant 2k-plane.
fn random_holomorphic_frame<T: Real>(
    n: usize,
    k: usize,
    rng: &mut impl rand::Rng,
) -> Vec<DVector<T>> {
    let mut basis: Vec<(DVector<T>, DVector<T>)> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut re: DVector<T> = sampling::gaussian_vector(rng, n);
        let mut im: DVector<T> = sampling::gaussian_vector(rng, n);
        for (bre, bim) in &basis {
            // Hermitian projection coefficient <b, w> = a + bi.
            let a = bre.dot(&re) + bim.dot(&im);
            let b = bre.dot(&im) - bim.dot(&re);
            re.zip_zip_apply(bre, bim, |w, x, y| *w -= a * x - b * y);
            im.zip_zip_apply(bim, bre, |w, x, y| *w -= a * x + b * y);
        }
        let norm = (re.norm_squared() + im.norm_squared()).sqrt();
        if norm < real::<T>(1e-6) {
            continue; // degenerate draw; resample
        }
        basis.push((re / norm, im / norm));
    }
    let mut frame = Vec::with_capacity(2 * k);
    for (re, im) in basis {
        let mut u = DVector::zeros(2 * n);
        let mut ju = DVector::zeros(2 * n);
        for i in 0..n {
            u[2 * i] = re[i];
            u[2 * i + 1] = im[i];
            ju[2 * i] = -im[i];
            ju[2 * i + 1] = re[i];
        }
        frame.push(u);
        frame.push(ju);
    }
    frame
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

// Lexicographic k-subsets of {0, ..., n-1}.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: Some((0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.take()?;
        let k = current.len();
        let mut next = current.clone();
        let mut i = k;
        loop {
            if i == 0 {
                break; // exhausted
            }
            i -= 1;
            if next[i] < self.n - (k - i) {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(current)
    }
}

/// Lower bound `max(n - 1 - delta, 0)` on the Cheeger constant of a
/// complete real hyperbolic n-manifold with critical exponent `delta`.
pub fn cheeger_lower<T: Real>(n: usize, delta: T) -> Result<T> {
    if n < 2 {
        return Err(Error::Input(format!("need n >= 2, got n = {n}")));
    }
    if delta < T::zero() {
        return Err(Error::Input(format!(
            "need delta >= 0, got {}",
            as_f64(delta)
        )));
    }
    Ok((real::<T>((n - 1) as f64) - delta).max(T::zero()))
}

/// Bottom of the L2 spectrum of a real hyperbolic n-manifold, with the
/// curvature-only lower bound that accompanies it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Lambda0Report<T: Real> {
    /// `(n-1)^2 / 4` when `delta <= (n-1)/2`, else `delta (n-1-delta)`.
    pub value: T,
    /// `(n-1-delta)^2 / 4`, always below `value`.
    pub lower_bound: T,
}

/// Evaluates the bottom-of-spectrum formula for exponent `delta` in
/// `[0, n-1]`.
pub fn sullivan_lambda0<T: Real>(n: usize, delta: T) -> Result<Lambda0Report<T>> {
    if n < 2 {
        return Err(Error::Input(format!("need n >= 2, got n = {n}")));
    }
    let top = real::<T>((n - 1) as f64);
    if delta < T::zero() || delta > top {
        return Err(Error::Input(format!(
            "need 0 <= delta <= n-1 = {}, got {}",
            n - 1,
            as_f64(delta)
        )));
    }
    let half = top / real::<T>(2.0);
    let value = if delta <= half {
        top * top / real::<T>(4.0)
    } else {
        delta * (top - delta)
    };
    let lower_bound = {
        let gap = top - delta;
        gap * gap / real::<T>(4.0)
    };
    debug_assert!(value >= lower_bound - real::<T>(1e-12));
    Ok(Lambda0Report { value, lower_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_binomial_many() {
        let subsets: Vec<_> = Combinations::new(5, 2).collect();
        assert_eq!(subsets.len(), 10);
        assert_eq!(subsets[0], vec![0, 1]);
        assert_eq!(subsets[9], vec![3, 4]);
        assert_eq!(Combinations::new(4, 4).count(), 1);
        assert_eq!(Combinations::new(6, 1).count(), 6);
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 1..=20usize {
            for k in 0..=n {
                let direct = binomial(n, k);
                let pascal = if k == 0 || k == n {
                    1
                } else {
                    binomial(n - 1, k - 1) + binomial(n - 1, k)
                };
                assert_eq!(direct, pascal, "n={n} k={k}");
            }
        }
    }
}
