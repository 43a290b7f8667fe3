//! Free discrete isometry groups given by explicit generators: orbit
//! enumeration over reduced words, Poincaré partial sums, and critical
//! exponent estimation from orbital counting.
//!
//! Nothing here verifies discreteness or freeness (no ping-pong check);
//! the group spec records the caller's assertion and the enumeration
//! trusts it, so "orbit" always means one point per reduced word.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hypmodel::{mink_dot, Isometry, MinkPoint};
use crate::scalar::{as_f64, real, Real};
use crate::{Error, Result};

/// Default ceiling on the number of words at the deepest level.
pub const DEFAULT_ORBIT_CAP: u64 = 10_000_000;

/// A marked Schottky-type group: `m` generators acting on Hⁿ, a
/// basepoint for orbit sums, and the caller's assertion that the
/// generators are free and discrete.
///
/// Serializes as JSON `{label, generators, basepoint, free_asserted,
/// separation?}` with generator matrices in row-major nested arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SchottkyGroupSpec<T: Real> {
    label: String,
    generators: Vec<Isometry<T>>,
    basepoint: MinkPoint<T>,
    free_asserted: bool,
    separation: Option<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::Deserialize<'de>"
))]
struct SpecDoc<T: Real> {
    label: String,
    generators: Vec<Isometry<T>>,
    basepoint: MinkPoint<T>,
    free_asserted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separation: Option<T>,
}

impl<T: Real + Serialize> Serialize for SchottkyGroupSpec<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecDoc {
            label: self.label.clone(),
            generators: self.generators.clone(),
            basepoint: self.basepoint.clone(),
            free_asserted: self.free_asserted,
            separation: self.separation,
        }
        .serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for SchottkyGroupSpec<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SpecDoc::<T>::deserialize(d)?;
        let mut spec = SchottkyGroupSpec::new(
            doc.label,
            doc.generators,
            doc.basepoint,
            doc.free_asserted,
        )
        .map_err(serde::de::Error::custom)?;
        spec.separation = doc.separation;
        Ok(spec)
    }
}

impl<T: Real> SchottkyGroupSpec<T> {
    pub fn new(
        label: String,
        generators: Vec<Isometry<T>>,
        basepoint: MinkPoint<T>,
        free_asserted: bool,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Input("group spec needs at least one generator".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.dim() != basepoint.dim() {
                return Err(Error::Input(format!(
                    "generator {i} acts on H^{} but the basepoint lies in H^{}",
                    g.dim(),
                    basepoint.dim()
                )));
            }
        }
        Ok(Self {
            label,
            generators,
            basepoint,
            free_asserted,
            separation: None,
        })
    }

    /// Records the fixture's axis-separation parameter (documentation
    /// only; no computation consumes it).
    pub fn with_separation(mut self, separation: T) -> Self {
        self.separation = Some(separation);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Isometry<T>] {
        &self.generators
    }

    pub fn basepoint(&self) -> &MinkPoint<T> {
        &self.basepoint
    }

    /// Caller-asserted freeness/discreteness flag; never verified here.
    pub fn free_asserted(&self) -> bool {
        self.free_asserted
    }

    pub fn separation(&self) -> Option<T> {
        self.separation
    }
}

/// One orbit point `γ·p` for a reduced word `γ`.
///
/// Letters are nonzero integers: `i` is the i-th generator (1-based),
/// `-i` its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint<T: Real> {
    pub word: Vec<i32>,
    pub point: MinkPoint<T>,
    pub dist: T,
}

impl<T: Real> OrbitPoint<T> {
    pub fn word_len(&self) -> usize {
        self.word.len()
    }
}

/// Spells a word compactly: generators `a, b, c, …` with uppercase
/// inverses when there are at most 26 of them, dot-joined signed
/// indices otherwise.
pub fn spell_word(word: &[i32]) -> String {
    let compact = word.iter().all(|&l| l != 0 && l.unsigned_abs() <= 26);
    if compact {
        word.iter()
            .map(|&l| {
                let base = b'a' + (l.unsigned_abs() - 1) as u8;
                if l > 0 {
                    base as char
                } else {
                    base.to_ascii_uppercase() as char
                }
            })
            .collect()
    } else {
        word.iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

// Number of reduced words of length exactly len over m free generators.
fn words_at_level(m: usize, len: usize) -> u128 {
    if len == 0 {
        return 1;
    }
    let branch = (2 * m).saturating_sub(1) as u128;
    let mut count = 2 * m as u128;
    for _ in 1..len {
        count = count.saturating_mul(branch);
    }
    count
}

/// Enumerates `γ·p` for every reduced word of length 1..=`max_len`,
/// with [`DEFAULT_ORBIT_CAP`] as the level cap.
pub fn enumerate_orbit<T: Real>(
    spec: &SchottkyGroupSpec<T>,
    max_len: usize,
) -> Result<Vec<OrbitPoint<T>>> {
    enumerate_orbit_capped(spec, max_len, DEFAULT_ORBIT_CAP)
}

/// [`enumerate_orbit`] with an explicit cap on the word count at the
/// deepest level.
pub fn enumerate_orbit_capped<T: Real>(
    spec: &SchottkyGroupSpec<T>,
    max_len: usize,
    cap: u64,
) -> Result<Vec<OrbitPoint<T>>> {
    if max_len == 0 {
        return Err(Error::Input("word length bound must be at least 1".into()));
    }
    let m = spec.generator_count();
    let deepest = words_at_level(m, max_len);
    if deepest > cap as u128 {
        return Err(Error::Resource(format!(
            "{deepest} words at length {max_len} exceed the cap {cap}; \
             raise the cap to at least {deepest} or lower the length"
        )));
    }

    // Symmetric alphabet, inverses paired with their generators: letter
    // at index i is generator i+1, at index m+i its inverse -(i+1).
    let mut alphabet: Vec<(i32, DMatrix<T>)> = Vec::with_capacity(2 * m);
    for (i, g) in spec.generators().iter().enumerate() {
        alphabet.push((i as i32 + 1, g.matrix().clone()));
    }
    for (i, g) in spec.generators().iter().enumerate() {
        alphabet.push((-(i as i32 + 1), g.inverse().matrix().clone()));
    }

    let total: u128 = (1..=max_len).map(|l| words_at_level(m, l)).sum();
    let mut out = Vec::with_capacity(total.min(1 << 24) as usize);
    let base = spec.basepoint().coords().clone();
    let mut word = Vec::with_capacity(max_len);
    let identity = DMatrix::<T>::identity(base.len(), base.len());
    dfs(&alphabet, &base, max_len, &mut word, &identity, &mut out)?;
    Ok(out)
}

fn dfs<T: Real>(
    alphabet: &[(i32, DMatrix<T>)],
    base: &DVector<T>,
    max_len: usize,
    word: &mut Vec<i32>,
    mat: &DMatrix<T>,
    out: &mut Vec<OrbitPoint<T>>,
) -> Result<()> {
    for (letter, gmat) in alphabet {
        // Reduced: never follow a letter with its inverse.
        if word.last() == Some(&-letter) {
            continue;
        }
        let next = mat * gmat;
        let coords = &next * base;
        let dist = (-mink_dot(&coords, base)).max(T::one()).acosh();
        word.push(*letter);
        out.push(OrbitPoint {
            word: word.clone(),
            point: wrap_orbit_point(coords, word)?,
            dist,
        });
        if word.len() < max_len {
            dfs(alphabet, base, max_len, word, &next, out)?;
        }
        word.pop();
    }
    Ok(())
}

// A word whose intermediate products travel far and then collapse back
// (near-elliptic words of a non-Schottky configuration) loses absolute
// precision to cancellation, so the raw product of exact Lorentz
// matrices can land measurably off the hyperboloid.  Mild drift is
// repaired by radial projection; drift beyond any plausible rounding
// budget means the configuration is not the free group the caller
// asserted, and gets a named error instead of a silent fix.
fn wrap_orbit_point<T: Real>(coords: DVector<T>, word: &[i32]) -> Result<MinkPoint<T>> {
    if let Ok(p) = MinkPoint::new(coords.clone()) {
        return Ok(p);
    }
    let q = mink_dot(&coords, &coords);
    let scale = T::one() + coords[0] * coords[0];
    if (q + T::one()).abs() <= real::<T>(1e-6) * scale && q < -real::<T>(0.5) {
        return MinkPoint::project(coords);
    }
    Err(Error::Verification(format!(
        "orbit point for word {} is far off the hyperboloid (<x,x> = {}); \
         the generators are probably not a discrete free (Schottky) system",
        spell_word(word),
        as_f64(q)
    )))
}

/// Partial Poincaré sum Σ exp(−s·d(p, γp)) over the enumerated orbit.
pub fn poincare_partial_sum<T: Real>(orbit: &[OrbitPoint<T>], s: T) -> Result<T> {
    if orbit.is_empty() {
        return Err(Error::Input("orbit is empty".into()));
    }
    if s < T::zero() {
        return Err(Error::Input(format!(
            "exponent must be nonnegative, got {}",
            as_f64(s)
        )));
    }
    let mut sum = T::zero();
    for p in orbit {
        sum += (-s * p.dist).exp();
    }
    Ok(sum)
}

/// A least-squares critical-exponent estimate from orbital counting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEstimate<T: Real> {
    /// Fitted growth exponent, clamped at 0.
    pub value: T,
    /// Radius window the fit used.
    pub window: (T, T),
    /// Number of (R, log N(R)) samples inside the window.
    pub point_count: usize,
    /// Root-mean-square residual of the linear fit.
    pub fit_residual: T,
}

/// Estimates the critical exponent by fitting `log N(R)` against `R`,
/// where `N(R)` counts orbit points with `d(p, γp) ≤ R`.
///
/// The fit window `[0.2·R_max, 0.9·R_max]` discards the small-radius
/// transient and the truncation undercount near `R_max`; the window is
/// a heuristic, and the one-sided truncation bias is why the residual
/// is reported alongside the value.
pub fn estimate_delta<T: Real>(
    spec: &SchottkyGroupSpec<T>,
    max_len: usize,
) -> Result<DeltaEstimate<T>> {
    estimate_from_orbit(&enumerate_orbit(spec, max_len)?)
}

/// [`estimate_delta`] with an explicit enumeration cap.
pub fn estimate_delta_capped<T: Real>(
    spec: &SchottkyGroupSpec<T>,
    max_len: usize,
    cap: u64,
) -> Result<DeltaEstimate<T>> {
    estimate_from_orbit(&enumerate_orbit_capped(spec, max_len, cap)?)
}

/// Fits the growth exponent of an already-enumerated orbit.
pub fn estimate_from_orbit<T: Real>(orbit: &[OrbitPoint<T>]) -> Result<DeltaEstimate<T>> {
    if orbit.len() < 50 {
        return Err(Error::Estimation(format!(
            "{} orbit points are too few for a growth fit (need 50)",
            orbit.len()
        )));
    }
    let mut dists: Vec<T> = orbit.iter().map(|p| p.dist).collect();
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let r_max = *dists.last().expect("nonempty");
    let lo = real::<T>(0.2) * r_max;
    let hi = real::<T>(0.9) * r_max;

    let mut samples: Vec<(T, T)> = Vec::new();
    for (i, &d) in dists.iter().enumerate() {
        if d >= lo && d <= hi {
            samples.push((d, real::<T>((i + 1) as f64).ln()));
        }
    }
    if samples.len() < 50 {
        return Err(Error::Estimation(format!(
            "{} samples in the fit window are too few (need 50)",
            samples.len()
        )));
    }

    let count = real::<T>(samples.len() as f64);
    let mean_r = samples.iter().fold(T::zero(), |a, s| a + s.0) / count;
    let mean_y = samples.iter().fold(T::zero(), |a, s| a + s.1) / count;
    let mut var = T::zero();
    let mut cov = T::zero();
    for (r, y) in &samples {
        var += (*r - mean_r) * (*r - mean_r);
        cov += (*r - mean_r) * (*y - mean_y);
    }
    if var <= real::<T>(1e-12) {
        return Err(Error::Estimation(
            "fit window has no radial spread; cannot fit a slope".into(),
        ));
    }
    let slope = cov / var;
    let mut ss = T::zero();
    for (r, y) in &samples {
        let e = *y - (mean_y + slope * (*r - mean_r));
        ss += e * e;
    }
    Ok(DeltaEstimate {
        value: slope.max(T::zero()),
        window: (lo, hi),
        point_count: samples.len(),
        fit_residual: (ss / count).sqrt(),
    })
}

/// Serializes an orbit as JSON lines `{"word": …, "dist": …}`, one
/// orbit point per line, in enumeration order.
pub fn orbit_to_json_lines<T: Real>(orbit: &[OrbitPoint<T>]) -> String {
    let mut out = String::new();
    for p in orbit {
        out.push_str(&format!(
            "{{\"word\":{:?},\"dist\":{}}}\n",
            spell_word(&p.word),
            as_f64(p.dist)
        ));
    }
    out
}

/// Infinite cyclic fixture: one hyperbolic translation of length `t`
/// along an axis through the basepoint of Hⁿ.
pub fn cyclic_fixture<T: Real>(n: usize, t: T) -> Result<SchottkyGroupSpec<T>> {
    if n < 2 {
        return Err(Error::Input("fixture needs n >= 2".into()));
    }
    if t <= T::zero() {
        return Err(Error::Input("translation length must be positive".into()));
    }
    SchottkyGroupSpec::new(
        format!("cyclic-h{n}"),
        vec![Isometry::boost(n, t)],
        MinkPoint::basepoint(n),
        true,
    )
}

/// Symmetric two-generator fixture in Hⁿ: translations of common
/// length `ell` along perpendicular axes, each axis pushed a distance
/// `offset` away from the basepoint (0 keeps both axes through it).
///
/// For `ell` comfortably above the ping-pong threshold the group is
/// free and discrete; the returned group spec records that assertion
/// together with the separation parameter.
pub fn separated_fixture<T: Real>(n: usize, ell: T, offset: T) -> Result<SchottkyGroupSpec<T>> {
    if n < 2 {
        return Err(Error::Input("fixture needs n >= 2".into()));
    }
    if ell <= T::zero() {
        return Err(Error::Input("translation length must be positive".into()));
    }
    if offset < T::zero() {
        return Err(Error::Input("axis offset must be nonnegative".into()));
    }
    let quarter = real::<T>(std::f64::consts::FRAC_PI_2);
    let rot = Isometry::rotation(n, 1, 2, quarter)?;
    let axis1 = Isometry::boost(n, ell);
    let axis2 = rot.compose(&axis1)?.compose(&rot.inverse())?;
    // Push axis 1 off the basepoint along e2, axis 2 along e1.
    let shift2 = rot.compose(&Isometry::boost(n, offset))?.compose(&rot.inverse())?;
    let shift1 = Isometry::boost(n, offset);
    let g1 = shift2.compose(&axis1)?.compose(&shift2.inverse())?;
    let g2 = shift1.compose(&axis2)?.compose(&shift1.inverse())?;
    Ok(SchottkyGroupSpec::new(
        format!("schottky2-h{n}"),
        vec![g1, g2],
        MinkPoint::basepoint(n),
        true,
    )?
    .with_separation(offset))
}
