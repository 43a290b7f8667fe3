//! Restricted root systems with multiplicities.
//!
//! Houses the covectors attached to a symmetric space of noncompact
//! type: the positive system Σ⁺ with multiplicities, the half sum ρ, the
//! highest root 𝔩, a maximal strongly orthogonal system and its half sum
//! Θ, the gap integer s(η), the Busemann spectrum L_u, and the integer
//! bounds l_X and n − s(η) built from them.
//!
//! Realizations use the standard orthonormal coordinate models, which
//! for some types live in an ambient space slightly larger than the
//! rank: A_r sits in the trace-zero hyperplane of ℝ^{r+1}, G₂ in the
//! trace-zero hyperplane of ℝ³, and E₆/E₇ inside the coordinate model
//! of E₈ in ℝ⁸. Covectors are plain coordinate vectors; evaluation is
//! the Euclidean dot product. All root coordinates in these models are
//! half-integers, which the combinatorial routines exploit by working
//! over exact integer keys (doubled coordinates, rounded simple-root
//! coefficients) rather than raw floats.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::{as_f64, real, tol, Real};
use crate::symform::SymBilinearForm;
use crate::{Error, Result};

/// Chamber nonnegativity and span tolerances.
const EVAL_TOL: f64 = 1e-9;
/// Root coordinates must be half-integers to this accuracy.
const GRID_TOL: f64 = 1e-7;

/// Component type labels for restricted root systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootType {
    A,
    B,
    C,
    D,
    E6,
    E7,
    E8,
    F4,
    G2,
    BC,
}

impl RootType {
    pub fn label(self) -> &'static str {
        match self {
            RootType::A => "A",
            RootType::B => "B",
            RootType::C => "C",
            RootType::D => "D",
            RootType::E6 => "E6",
            RootType::E7 => "E7",
            RootType::E8 => "E8",
            RootType::F4 => "F4",
            RootType::G2 => "G2",
            RootType::BC => "BC",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Some(match label {
            "A" => RootType::A,
            "B" => RootType::B,
            "C" => RootType::C,
            "D" => RootType::D,
            "E6" => RootType::E6,
            "E7" => RootType::E7,
            "E8" => RootType::E8,
            "F4" => RootType::F4,
            "G2" => RootType::G2,
            "BC" => RootType::BC,
            _ => return None,
        })
    }

    fn rank_valid(self, r: usize) -> bool {
        match self {
            RootType::A | RootType::BC => r >= 1,
            RootType::B | RootType::C => r >= 2,
            RootType::D => r >= 4,
            RootType::E6 => r == 6,
            RootType::E7 => r == 7,
            RootType::E8 => r == 8,
            RootType::F4 => r == 4,
            RootType::G2 => r == 2,
        }
    }

    /// Classical count of positive roots (multiplicities ignored).
    pub fn positive_count(self, r: usize) -> usize {
        match self {
            RootType::A => r * (r + 1) / 2,
            RootType::B | RootType::C => r * r,
            RootType::D => r * (r - 1),
            RootType::BC => r * r + r,
            RootType::E6 => 36,
            RootType::E7 => 63,
            RootType::E8 => 120,
            RootType::F4 => 24,
            RootType::G2 => 6,
        }
    }
}

impl std::fmt::Display for RootType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A positive restricted root: a covector with its multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveRoot<T: Real> {
    coords: DVector<T>,
    mult: usize,
}

impl<T: Real> PositiveRoot<T> {
    pub fn new(coords: DVector<T>, mult: usize) -> Result<Self> {
        if mult == 0 {
            return Err(Error::Input("root multiplicity must be positive".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("root coordinates must be finite".into()));
        }
        Ok(Self { coords, mult })
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    pub fn mult(&self) -> usize {
        self.mult
    }
}

/// Doubled-coordinate integer key; exact on the half-integer grid.
fn grid_key<T: Real>(v: &DVector<T>) -> Result<Vec<i64>> {
    v.iter()
        .map(|&x| {
            let two = 2.0 * as_f64(x);
            let r = two.round();
            if (two - r).abs() > GRID_TOL {
                return Err(Error::Input(format!(
                    "root coordinate {} is not a half-integer; use a standard realization",
                    as_f64(x)
                )));
            }
            Ok(r as i64)
        })
        .collect()
}

fn key_add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn key_sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A restricted root system: component labels, positive roots with
/// multiplicity, and the chamber generators (fundamental coweights,
/// the dual basis of the simple roots inside their span).
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedRootSystem<T: Real> {
    components: Vec<(RootType, usize)>,
    rank: usize,
    ambient: usize,
    roots: Vec<PositiveRoot<T>>,
    simple_idx: Vec<usize>,
    generators: Vec<DVector<T>>,
}

impl<T: Real> RestrictedRootSystem<T> {
    /// Builds the split realization of a classical or exceptional type
    /// (all multiplicities 1).
    pub fn build(ty: RootType, rank: usize) -> Result<Self> {
        if !ty.rank_valid(rank) {
            return Err(Error::Input(format!(
                "invalid type/rank pair ({}, {rank})",
                ty.label()
            )));
        }
        let (roots, simples) = realize(ty, rank);
        let positives = roots
            .into_iter()
            .map(|c| PositiveRoot::new(c, 1))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(vec![(ty, rank)], positives, simples, None)
    }

    /// Validates externally supplied data (deserialization path). The
    /// stored chamber generators are canonicalized to the dual basis of
    /// the recovered simple roots; supplied ones are only checked for
    /// the nonnegativity invariant.
    pub fn from_parts(
        components: Vec<(RootType, usize)>,
        positive_roots: Vec<PositiveRoot<T>>,
        supplied_generators: Option<Vec<DVector<T>>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Input("root system needs at least one component".into()));
        }
        for &(ty, r) in &components {
            if !ty.rank_valid(r) {
                return Err(Error::Input(format!(
                    "invalid type/rank pair ({}, {r})",
                    ty.label()
                )));
            }
        }
        let rank: usize = components.iter().map(|&(_, r)| r).sum();
        let expected: usize = components.iter().map(|&(ty, r)| ty.positive_count(r)).sum();
        if positive_roots.len() != expected {
            return Err(Error::Input(format!(
                "expected {expected} positive roots for {:?}, got {}",
                components,
                positive_roots.len()
            )));
        }
        let ambient = positive_roots[0].coords.len();
        if positive_roots.iter().any(|a| a.coords.len() != ambient) {
            return Err(Error::Input("positive roots have mixed dimensions".into()));
        }

        // Recover the simple roots: exactly r positives that are not the
        // sum of two positives.
        let keys = positive_roots
            .iter()
            .map(|a| grid_key(&a.coords))
            .collect::<Result<Vec<_>>>()?;
        let key_set: HashSet<&[i64]> = keys.iter().map(|k| k.as_slice()).collect();
        if key_set.len() != keys.len() {
            return Err(Error::Input("duplicate positive roots".into()));
        }
        let mut decomposable: HashSet<Vec<i64>> = HashSet::new();
        for i in 0..keys.len() {
            for j in i..keys.len() {
                let s = key_add(&keys[i], &keys[j]);
                if key_set.contains(s.as_slice()) {
                    decomposable.insert(s);
                }
            }
        }
        let simple_idx: Vec<usize> = (0..keys.len())
            .filter(|&i| !decomposable.contains(&keys[i]))
            .collect();
        if simple_idx.len() != rank {
            return Err(Error::Input(format!(
                "found {} indecomposable positive roots, expected rank {rank}",
                simple_idx.len()
            )));
        }

        let simples: Vec<DVector<T>> = simple_idx
            .iter()
            .map(|&i| positive_roots[i].coords.clone())
            .collect();
        let generators = dual_basis(&simples)?;

        // Every positive root must be nonnegative on every generator,
        // both the canonical ones and any supplied ones.
        let coeff_tol = tol::<T>(EVAL_TOL);
        let check_nonneg = |gens: &[DVector<T>]| -> Result<()> {
            for g in gens {
                if g.len() != ambient {
                    return Err(Error::Input("chamber generator dimension mismatch".into()));
                }
                for a in &positive_roots {
                    if a.coords.dot(g) < -coeff_tol {
                        return Err(Error::Input(
                            "a positive root is negative on a chamber generator".into(),
                        ));
                    }
                }
            }
            Ok(())
        };
        check_nonneg(&generators)?;
        if let Some(gens) = &supplied_generators {
            if gens.len() != rank {
                return Err(Error::Input(format!(
                    "expected {rank} chamber generators, got {}",
                    gens.len()
                )));
            }
            check_nonneg(gens)?;
        }

        let sys = Self {
            components,
            rank,
            ambient,
            roots: positive_roots,
            simple_idx,
            generators,
        };
        // Simple-root coefficients of every positive root must be
        // nonnegative integers; this also fixes the exact combinatorics.
        for a in &sys.roots {
            sys.int_coefficients(&a.coords)?;
        }
        Ok(sys)
    }

    /// Internal constructor that places the given simple roots first so
    /// their coordinate order (the lexicographic priority used by the
    /// strongly orthogonal search) is the conventional one.
    fn assemble(
        components: Vec<(RootType, usize)>,
        positives: Vec<PositiveRoot<T>>,
        simples: Vec<DVector<T>>,
        generators: Option<Vec<DVector<T>>>,
    ) -> Result<Self> {
        let simple_keys: Vec<Vec<i64>> = simples
            .iter()
            .map(grid_key)
            .collect::<Result<Vec<_>>>()?;
        let mut ordered = Vec::with_capacity(positives.len());
        let mut rest = Vec::new();
        for a in positives {
            let k = grid_key(&a.coords)?;
            if simple_keys.contains(&k) {
                ordered.push((simple_keys.iter().position(|s| *s == k).unwrap(), a));
            } else {
                rest.push(a);
            }
        }
        if ordered.len() != simples.len() {
            return Err(Error::Input("simple roots missing from positive system".into()));
        }
        ordered.sort_by_key(|(i, _)| *i);
        let mut list: Vec<PositiveRoot<T>> = ordered.into_iter().map(|(_, a)| a).collect();
        list.extend(rest);
        Self::from_parts(components, list, generators)
    }

    pub fn components(&self) -> &[(RootType, usize)] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn positive_roots(&self) -> &[PositiveRoot<T>] {
        &self.roots
    }

    pub fn chamber_generators(&self) -> &[DVector<T>] {
        &self.generators
    }

    pub fn simple_roots(&self) -> Vec<&DVector<T>> {
        self.simple_idx.iter().map(|&i| &self.roots[i].coords).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.components.len() == 1
    }

    /// Total multiplicity Σ mult(α) over the positive system.
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|a| a.mult).sum()
    }

    /// Evaluations of a covector at the chamber generators. For a
    /// covector in the span of the roots these are exactly its
    /// coefficients in the simple-root basis.
    pub fn coefficients(&self, eta: &DVector<T>) -> Result<DVector<T>> {
        if eta.len() != self.ambient {
            return Err(Error::Input("covector dimension mismatch".into()));
        }
        Ok(DVector::from_fn(self.rank, |i, _| eta.dot(&self.generators[i])))
    }

    /// Integer simple-root coefficients of a root.
    fn int_coefficients(&self, root: &DVector<T>) -> Result<Vec<i64>> {
        let c = self.coefficients(root)?;
        c.iter()
            .map(|&x| {
                let f = as_f64(x);
                let r = f.round();
                if (f - r).abs() > 1e-6 || r < -1e-6 {
                    return Err(Error::Input(format!(
                        "root has non-integer or negative simple coefficient {f}"
                    )));
                }
                Ok(r as i64)
            })
            .collect()
    }

    /// Signed root membership keys (positives and negatives).
    fn membership(&self) -> HashSet<Vec<i64>> {
        let mut set = HashSet::with_capacity(2 * self.roots.len());
        for a in &self.roots {
            let k = grid_key(&a.coords).expect("validated roots stay on the grid");
            set.insert(k.iter().map(|x| -x).collect());
            set.insert(k);
        }
        set
    }
}

/// Dual basis of a linearly independent family inside its own span:
/// rows of (S Sᵀ)⁻¹ S.
fn dual_basis<T: Real>(simples: &[DVector<T>]) -> Result<Vec<DVector<T>>> {
    let r = simples.len();
    let ambient = simples[0].len();
    let s = DMatrix::from_fn(r, ambient, |i, j| simples[i][j]);
    let gram = &s * s.transpose();
    let inv = gram.clone().try_inverse().ok_or_else(|| {
        Error::Input("simple roots are linearly dependent".into())
    })?;
    let w = inv * s;
    Ok((0..r).map(|i| w.row(i).transpose()).collect())
}

/// Residual of projecting `v` onto the span of the simple roots.
fn span_residual<T: Real>(simples: &[DVector<T>], v: &DVector<T>) -> T {
    let r = simples.len();
    let ambient = simples[0].len();
    let s = DMatrix::from_fn(r, ambient, |i, j| simples[i][j]);
    let gram = &s * s.transpose();
    let rhs = &s * v;
    match gram.lu().solve(&rhs) {
        Some(c) => {
            let proj = s.transpose() * c;
            (v - proj).amax()
        }
        None => v.amax(),
    }
}

/// Standard coordinate realizations: (positive roots, simple roots).
fn realize<T: Real>(ty: RootType, r: usize) -> (Vec<DVector<T>>, Vec<DVector<T>>) {
    let e = |i: usize, d: usize| {
        let mut v = DVector::zeros(d);
        v[i] = T::one();
        v
    };
    match ty {
        RootType::A => {
            let d = r + 1;
            let mut pos = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    pos.push(e(i, d) - e(j, d));
                }
            }
            let simple = (0..r).map(|i| e(i, d) - e(i + 1, d)).collect();
            (pos, simple)
        }
        RootType::B | RootType::C | RootType::BC => {
            let d = r;
            let mut pos = Vec::new();
            for i in 0..d {
                if ty != RootType::C {
                    pos.push(e(i, d));
                }
                if ty != RootType::B {
                    pos.push(e(i, d) * real::<T>(2.0));
                }
            }
            for i in 0..d {
                for j in i + 1..d {
                    pos.push(e(i, d) - e(j, d));
                    pos.push(e(i, d) + e(j, d));
                }
            }
            let mut simple: Vec<DVector<T>> =
                (0..r - 1).map(|i| e(i, d) - e(i + 1, d)).collect();
            simple.push(if ty == RootType::C {
                e(r - 1, d) * real::<T>(2.0)
            } else {
                e(r - 1, d)
            });
            (pos, simple)
        }
        RootType::D => {
            let d = r;
            let mut pos = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    pos.push(e(i, d) - e(j, d));
                    pos.push(e(i, d) + e(j, d));
                }
            }
            let mut simple: Vec<DVector<T>> =
                (0..r - 1).map(|i| e(i, d) - e(i + 1, d)).collect();
            simple.push(e(r - 2, d) + e(r - 1, d));
            (pos, simple)
        }
        RootType::G2 => {
            let d = 3;
            let a1 = e(0, d) - e(1, d);
            let a2 = e(1, d) + e(2, d) - e(0, d) * real::<T>(2.0);
            let pos = vec![
                a1.clone(),
                a2.clone(),
                &a1 + &a2,
                &a1 * real::<T>(2.0) + &a2,
                &a1 * real::<T>(3.0) + &a2,
                &a1 * real::<T>(3.0) + &a2 * real::<T>(2.0),
            ];
            (pos, vec![a1, a2])
        }
        RootType::F4 => {
            let d = 4;
            let h = real::<T>(0.5);
            let mut pos = Vec::new();
            for i in 0..4 {
                pos.push(e(i, d));
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    pos.push(e(i, d) - e(j, d));
                    pos.push(e(i, d) + e(j, d));
                }
            }
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    for s3 in [1.0, -1.0] {
                        pos.push(DVector::from_vec(vec![
                            h,
                            h * real::<T>(s1),
                            h * real::<T>(s2),
                            h * real::<T>(s3),
                        ]));
                    }
                }
            }
            let simple = vec![
                e(1, d) - e(2, d),
                e(2, d) - e(3, d),
                e(3, d),
                DVector::from_vec(vec![h, -h, -h, -h]),
            ];
            (pos, simple)
        }
        RootType::E6 | RootType::E7 | RootType::E8 => {
            let d = 8;
            let h = real::<T>(0.5);
            let mut pos8 = Vec::new();
            for i in 0..8 {
                for j in i + 1..8 {
                    pos8.push(e(i, d) + e(j, d));
                    pos8.push(e(j, d) - e(i, d));
                }
            }
            for mask in 0u32..128 {
                if mask.count_ones() % 2 == 0 {
                    let mut v = DVector::from_element(d, h);
                    for bit in 0..7 {
                        if mask & (1 << bit) != 0 {
                            v[bit] = -h;
                        }
                    }
                    pos8.push(v);
                }
            }
            let mut a1 = DVector::from_element(d, -h);
            a1[0] = h;
            a1[7] = h;
            let mut simple8 = vec![a1, e(0, d) + e(1, d)];
            simple8.extend((0..6).map(|i| e(i + 1, d) - e(i, d)));
            let rr = match ty {
                RootType::E6 => 6,
                RootType::E7 => 7,
                _ => 8,
            };
            let simple: Vec<DVector<T>> = simple8[..rr].to_vec();
            let pos = if rr == 8 {
                pos8
            } else {
                pos8.into_iter()
                    .filter(|a| span_residual(&simple, a) < tol::<T>(EVAL_TOL))
                    .collect()
            };
            (pos, simple)
        }
    }
}

/// The unique positive root dominating all others; irreducible systems
/// only.
pub fn highest_root<T: Real>(rs: &RestrictedRootSystem<T>) -> Result<DVector<T>> {
    if !rs.is_irreducible() {
        return Err(Error::Input(
            "highest root is undefined for reducible systems".into(),
        ));
    }
    let best = rs
        .roots
        .iter()
        .map(|a| Ok((rs.int_coefficients(&a.coords)?, &a.coords)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max_by(|x, y| x.0.cmp(&y.0))
        .expect("positive system is nonempty");
    Ok(best.1.clone())
}

/// A maximal strongly orthogonal system and its half sum Θ.
///
/// Among all strongly orthogonal subsets (α ± β never a root for
/// distinct members), the search maximizes the total simple-root
/// coefficient vector lexicographically, a refinement of taking the
/// highest root first; the winner is automatically maximal under
/// inclusion. Branch and bound over exact integer coefficient keys.
pub fn strongly_orthogonal_theta<T: Real>(
    rs: &RestrictedRootSystem<T>,
) -> Result<(Vec<DVector<T>>, DVector<T>)> {
    let n = rs.roots.len();
    let mut cv: Vec<Vec<i64>> = Vec::with_capacity(n);
    for a in &rs.roots {
        cv.push(rs.int_coefficients(&a.coords)?);
    }
    let keys: Vec<Vec<i64>> = rs
        .roots
        .iter()
        .map(|a| grid_key(&a.coords))
        .collect::<Result<Vec<_>>>()?;
    let membership = rs.membership();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cv[j].cmp(&cv[i]));

    struct Search<'a> {
        cv: &'a [Vec<i64>],
        keys: &'a [Vec<i64>],
        membership: &'a HashSet<Vec<i64>>,
        best_key: Option<Vec<i64>>,
        best_sys: Vec<usize>,
    }

    impl Search<'_> {
        fn strongly_orth(&self, a: usize, b: usize) -> bool {
            !self.membership.contains(&key_add(&self.keys[a], &self.keys[b]))
                && !self.membership.contains(&key_sub(&self.keys[a], &self.keys[b]))
        }

        fn go(&mut self, key: Vec<i64>, chosen: Vec<usize>, cands: &[usize]) {
            // Optimistic bound: all coefficients are nonnegative, so
            // adding every remaining candidate dominates any completion.
            let mut ub = key.clone();
            for &c in cands {
                for (u, x) in ub.iter_mut().zip(&self.cv[c]) {
                    *u += x;
                }
            }
            if let Some(best) = &self.best_key {
                if ub <= *best {
                    return;
                }
            }
            if cands.is_empty() {
                if self.best_key.as_ref().map_or(true, |b| key > *b) {
                    self.best_key = Some(key);
                    self.best_sys = chosen;
                }
                return;
            }
            let a = cands[0];
            let rest = &cands[1..];
            let filtered: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&b| self.strongly_orth(a, b))
                .collect();
            let mut with_key = key.clone();
            for (u, x) in with_key.iter_mut().zip(&self.cv[a]) {
                *u += x;
            }
            let mut with_chosen = chosen.clone();
            with_chosen.push(a);
            self.go(with_key, with_chosen, &filtered);
            self.go(key, chosen, rest);
        }
    }

    let mut search = Search {
        cv: &cv,
        keys: &keys,
        membership: &membership,
        best_key: None,
        best_sys: Vec::new(),
    };
    search.go(vec![0; rs.rank], Vec::new(), &order);

    let system: Vec<DVector<T>> = search
        .best_sys
        .iter()
        .map(|&i| rs.roots[i].coords.clone())
        .collect();
    let mut theta = DVector::zeros(rs.ambient);
    for a in &system {
        theta += a;
    }
    theta *= real::<T>(0.5);
    Ok((system, theta))
}

/// The gap integer s(η): the largest s ≥ 0 such that η − s·𝔩 is
/// nonnegative on every chamber generator and not identically zero
/// there. Requires η nonnegative on the chamber.
pub fn s_eta<T: Real>(rs: &RestrictedRootSystem<T>, eta: &DVector<T>) -> Result<usize> {
    if !rs.is_irreducible() {
        return Err(Error::Input("s(η) requires an irreducible system".into()));
    }
    let tol_t = tol::<T>(EVAL_TOL);
    let vals = rs.coefficients(eta)?;
    if vals.iter().any(|&v| v < -tol_t) {
        return Err(Error::Input(
            "η must be nonnegative on the chamber generators".into(),
        ));
    }
    let hvals = rs.coefficients(&highest_root(rs)?)?;
    let mut s = 0usize;
    loop {
        let next = real::<T>((s + 1) as f64);
        let shifted = DVector::from_fn(rs.rank, |i, _| vals[i] - next * hvals[i]);
        let nonneg = shifted.iter().all(|&v| v >= -tol_t);
        let nonzero = shifted.iter().any(|&v| v > tol_t);
        if nonneg && nonzero {
            s += 1;
        } else {
            return Ok(s);
        }
    }
}

/// A named symmetric-space model: a root system carrying multiplicities
/// together with the space dimension n = r + Σ mult.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpacePreset<T: Real> {
    name: String,
    system: RestrictedRootSystem<T>,
}

impl<T: Real> SymmetricSpacePreset<T> {
    pub fn new(name: impl Into<String>, system: RestrictedRootSystem<T>) -> Self {
        Self { name: name.into(), system }
    }

    /// Split real form of the given type: every multiplicity is 1.
    pub fn split(ty: RootType, rank: usize) -> Result<Self> {
        let system = RestrictedRootSystem::build(ty, rank)?;
        Ok(Self::new(format!("split-{}{rank}", ty.label()), system))
    }

    /// SL(N,ℝ)/SO(N): type A_{N−1}, all multiplicities 1, n = r(r+3)/2.
    pub fn special_linear(n_matrix: usize) -> Result<Self> {
        if n_matrix < 2 {
            return Err(Error::Input("SL(N,R)/SO(N) needs N >= 2".into()));
        }
        let system = RestrictedRootSystem::build(RootType::A, n_matrix - 1)?;
        Ok(Self::new(format!("SL({n_matrix},R)/SO({n_matrix})"), system))
    }

    /// Real hyperbolic space Hⁿ: rank one, a single root of
    /// multiplicity n−1 with α(u) = u in the 1-dimensional flat.
    pub fn real_hyperbolic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input("real hyperbolic space needs n >= 2".into()));
        }
        let root = PositiveRoot::new(DVector::from_vec(vec![T::one()]), n - 1)?;
        let system =
            RestrictedRootSystem::from_parts(vec![(RootType::A, 1)], vec![root], None)?;
        Ok(Self::new(format!("H{n}"), system))
    }

    /// Product H^{n₁} × H^{n₂}: reducible A₁ × A₁ with multiplicities
    /// n₁−1 and n₂−1 in coordinates (e₁, e₂).
    pub fn hyperbolic_product(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Input("product factors need dimension >= 2".into()));
        }
        let roots = vec![
            PositiveRoot::new(DVector::from_vec(vec![T::one(), T::zero()]), n1 - 1)?,
            PositiveRoot::new(DVector::from_vec(vec![T::zero(), T::one()]), n2 - 1)?,
        ];
        let system = RestrictedRootSystem::from_parts(
            vec![(RootType::A, 1), (RootType::A, 1)],
            roots,
            None,
        )?;
        Ok(Self::new(format!("H{n1}xH{n2}"), system))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root_system(&self) -> &RestrictedRootSystem<T> {
        &self.system
    }

    pub fn rank(&self) -> usize {
        self.system.rank()
    }

    /// Space dimension n = r + Σ multiplicities.
    pub fn dim(&self) -> usize {
        self.system.rank() + self.system.total_multiplicity()
    }
}

/// Half sum of the positive roots with multiplicity:
/// ρ = ½ Σ mult(α)·α.
pub fn rho<T: Real>(preset: &SymmetricSpacePreset<T>) -> DVector<T> {
    let rs = preset.root_system();
    let mut acc = DVector::zeros(rs.ambient_dim());
    for a in rs.positive_roots() {
        acc += a.coords() * real::<T>(a.mult() as f64);
    }
    acc * real::<T>(0.5)
}

/// The Busemann Hessian spectrum in a chamber direction u: a diagonal
/// form with r zeros followed by the values α(u) with multiplicity,
/// sorted ascending.
pub fn busemann_spectrum<T: Real>(
    preset: &SymmetricSpacePreset<T>,
    u: &DVector<T>,
) -> Result<SymBilinearForm<T>> {
    let rs = preset.root_system();
    if u.len() != rs.ambient_dim() {
        return Err(Error::Input("direction dimension mismatch".into()));
    }
    let tol_t = tol::<T>(EVAL_TOL);
    if (u.norm() - T::one()).abs() > tol_t {
        return Err(Error::Input("direction must have unit Euclidean norm".into()));
    }
    let simples: Vec<DVector<T>> = rs.simple_roots().into_iter().cloned().collect();
    if span_residual(&simples, u) > tol_t {
        return Err(Error::Input("direction lies outside the flat".into()));
    }
    let mut entries = vec![T::zero(); rs.rank()];
    for a in rs.positive_roots() {
        let v = a.coords().dot(u);
        if v < -tol_t {
            return Err(Error::Input("direction lies outside the closed chamber".into()));
        }
        for _ in 0..a.mult() {
            entries.push(v.max(T::zero()));
        }
    }
    entries.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum entries"));
    SymBilinearForm::diagonal(&entries)
}

/// The critical index l_X: the smallest k with k-trace(L_u) > δ, or
/// n + 1 when no k qualifies.
pub fn l_x<T: Real>(
    preset: &SymmetricSpacePreset<T>,
    u: &DVector<T>,
    delta: T,
) -> Result<usize> {
    if delta < T::zero() {
        return Err(Error::Input("critical exponent must be nonnegative".into()));
    }
    let spectrum = busemann_spectrum(preset, u)?;
    let n = preset.dim();
    for k in 1..=n {
        if spectrum.k_trace(k)? > delta {
            return Ok(k);
        }
    }
    Ok(n + 1)
}

/// The dimension gap bound n − s(η) for an irreducible preset.
pub fn gap_bound<T: Real>(
    preset: &SymmetricSpacePreset<T>,
    eta: &DVector<T>,
) -> Result<usize> {
    let s = s_eta(preset.root_system(), eta)?;
    Ok(preset.dim() - s)
}

#[derive(Serialize, Deserialize)]
struct RootDoc<T> {
    coords: Vec<T>,
    mult: usize,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc<T> {
    components: Vec<(String, usize)>,
    positive_roots: Vec<RootDoc<T>>,
    chamber_generators: Vec<Vec<T>>,
}

impl<T: Real + Serialize> Serialize for RestrictedRootSystem<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = SystemDoc {
            components: self
                .components
                .iter()
                .map(|&(ty, r)| (ty.label().to_string(), r))
                .collect(),
            positive_roots: self
                .roots
                .iter()
                .map(|a| RootDoc {
                    coords: a.coords.iter().copied().collect(),
                    mult: a.mult,
                })
                .collect(),
            chamber_generators: self
                .generators
                .iter()
                .map(|g| g.iter().copied().collect())
                .collect(),
        };
        doc.serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for RestrictedRootSystem<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SystemDoc::<T>::deserialize(d)?;
        let components = doc
            .components
            .iter()
            .map(|(label, r)| {
                RootType::parse(label)
                    .map(|ty| (ty, *r))
                    .ok_or_else(|| D::Error::custom(format!("unknown root type {label:?}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let roots = doc
            .positive_roots
            .into_iter()
            .map(|a| PositiveRoot::new(DVector::from_vec(a.coords), a.mult))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let generators = doc
            .chamber_generators
            .into_iter()
            .map(DVector::from_vec)
            .collect();
        RestrictedRootSystem::from_parts(components, roots, Some(generators))
            .map_err(D::Error::custom)
    }
}

/// Free-function alias matching the operation vocabulary.
pub fn build_root_system<T: Real>(ty: RootType, rank: usize) -> Result<RestrictedRootSystem<T>> {
    RestrictedRootSystem::build(ty, rank)
}
