//! Root-system contract tests: classical counts, highest-root
//! dominance, strongly orthogonal systems, gap integers, Busemann
//! spectra, and the integer bounds built on top of them.

use critflow_core::rootsys::{
    build_root_system, busemann_spectrum, gap_bound, highest_root, l_x, rho, s_eta,
    strongly_orthogonal_theta, PositiveRoot, RestrictedRootSystem, RootType,
    SymmetricSpacePreset,
};
use critflow_core::Error;
use nalgebra::DVector;

type Rs = RestrictedRootSystem<f64>;
type Preset = SymmetricSpacePreset<f64>;

fn v(coords: &[f64]) -> DVector<f64> {
    DVector::from_vec(coords.to_vec())
}

/// Irreducible split systems used in the exhaustive sweeps.
fn sweep_systems() -> Vec<(RootType, usize)> {
    let mut list = Vec::new();
    for r in 1..=8 {
        list.push((RootType::A, r));
    }
    for r in 2..=8 {
        list.push((RootType::B, r));
        list.push((RootType::C, r));
    }
    for r in 4..=9 {
        list.push((RootType::D, r));
    }
    for r in 1..=5 {
        list.push((RootType::BC, r));
    }
    list.extend([
        (RootType::E6, 6),
        (RootType::E7, 7),
        (RootType::E8, 8),
        (RootType::F4, 4),
        (RootType::G2, 2),
    ]);
    list
}

#[test]
fn classical_positive_root_counts() {
    assert_eq!(build_root_system::<f64>(RootType::A, 2).unwrap().positive_roots().len(), 3);
    assert_eq!(build_root_system::<f64>(RootType::B, 3).unwrap().positive_roots().len(), 9);
    assert_eq!(build_root_system::<f64>(RootType::G2, 2).unwrap().positive_roots().len(), 6);
    for (ty, r) in sweep_systems() {
        let rs: Rs = build_root_system(ty, r).unwrap();
        assert_eq!(rs.positive_roots().len(), ty.positive_count(r), "{ty}{r}");
        assert_eq!(rs.rank(), r);
        assert_eq!(rs.simple_roots().len(), r, "{ty}{r}");
    }
}

#[test]
fn invalid_type_rank_pairs_are_rejected() {
    for (ty, r) in [
        (RootType::B, 1),
        (RootType::C, 1),
        (RootType::D, 3),
        (RootType::E6, 5),
        (RootType::E7, 8),
        (RootType::F4, 3),
        (RootType::G2, 3),
        (RootType::A, 0),
    ] {
        assert!(matches!(build_root_system::<f64>(ty, r), Err(Error::Input(_))), "{ty}{r}");
    }
}

#[test]
fn chamber_generators_are_dual_to_simples() {
    for (ty, r) in sweep_systems() {
        let rs: Rs = build_root_system(ty, r).unwrap();
        let simples = rs.simple_roots();
        for (i, g) in rs.chamber_generators().iter().enumerate() {
            for (j, a) in simples.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(g) - expect).abs() <= 1e-9, "{ty}{r} ({i},{j})");
            }
        }
    }
}

#[test]
fn highest_root_dominates_every_positive_root() {
    for (ty, r) in sweep_systems() {
        let rs: Rs = build_root_system(ty, r).unwrap();
        let l = highest_root(&rs).unwrap();
        for a in rs.positive_roots() {
            let gap = rs.coefficients(&(&l - a.coords())).unwrap();
            assert!(gap.iter().all(|&c| c >= -1e-9), "{ty}{r}");
        }
    }
}

#[test]
fn highest_root_closed_forms() {
    // A_r: the sum of all simple roots, e1 - e_{r+1}.
    for r in 1..=8 {
        let rs: Rs = build_root_system(RootType::A, r).unwrap();
        let l = highest_root(&rs).unwrap();
        let mut expect = DVector::zeros(r + 1);
        expect[0] = 1.0;
        expect[r] = -1.0;
        assert_eq!(l, expect);
        let coeffs = rs.coefficients(&l).unwrap();
        assert!(coeffs.iter().all(|&c| (c - 1.0).abs() <= 1e-9));
    }
    // B2 in short-simple-last convention: alpha1 + 2*alpha2 = e1 + e2.
    let rs: Rs = build_root_system(RootType::B, 2).unwrap();
    assert_eq!(highest_root(&rs).unwrap(), v(&[1.0, 1.0]));
}

#[test]
fn highest_root_rejects_reducible_systems() {
    let preset: Preset = SymmetricSpacePreset::hyperbolic_product(3, 3).unwrap();
    assert!(matches!(
        highest_root(preset.root_system()),
        Err(Error::Input(_))
    ));
}

/// Golden table: (type, rank, system size, s(Theta), s(rho)).
fn golden() -> Vec<(RootType, usize, usize, usize, usize)> {
    vec![
        (RootType::A, 3, 2, 0, 1),
        (RootType::A, 4, 2, 0, 2),
        (RootType::A, 5, 3, 0, 2),
        (RootType::A, 6, 3, 0, 3),
        (RootType::A, 7, 4, 0, 3),
        (RootType::A, 8, 4, 0, 4),
        (RootType::B, 2, 2, 0, 1),
        (RootType::B, 3, 3, 0, 2),
        (RootType::B, 4, 4, 0, 3),
        (RootType::B, 5, 5, 1, 4),
        (RootType::B, 6, 6, 1, 5),
        (RootType::B, 7, 7, 1, 6),
        (RootType::B, 8, 8, 1, 7),
        (RootType::C, 3, 3, 0, 1),
        (RootType::C, 4, 4, 0, 2),
        (RootType::D, 4, 4, 0, 2),
        (RootType::D, 5, 4, 0, 3),
        (RootType::D, 6, 6, 1, 4),
        (RootType::D, 7, 6, 1, 5),
        (RootType::D, 8, 8, 1, 6),
        (RootType::D, 9, 8, 1, 7),
        (RootType::E6, 6, 4, 0, 5),
        (RootType::E7, 7, 7, 1, 8),
        (RootType::E8, 8, 8, 1, 14),
        (RootType::F4, 4, 4, 0, 4),
        (RootType::G2, 2, 2, 0, 1),
    ]
}

#[test]
fn strongly_orthogonal_system_matches_golden_table() {
    for (ty, r, size, s_theta, _) in golden() {
        let rs: Rs = build_root_system(ty, r).unwrap();
        let (system, theta) = strongly_orthogonal_theta(&rs).unwrap();
        assert_eq!(system.len(), size, "{ty}{r} system size");
        assert_eq!(s_eta(&rs, &theta).unwrap(), s_theta, "{ty}{r} s(Theta)");
        // Members are pairwise strongly orthogonal in particular
        // orthogonal in coordinates.
        for (i, a) in system.iter().enumerate() {
            for b in system.iter().skip(i + 1) {
                assert!(a.dot(b).abs() <= 1e-9, "{ty}{r} orthogonality");
            }
        }
    }
}

#[test]
fn strongly_orthogonal_closed_forms() {
    // A1: the single root; Theta = alpha/2.
    let rs: Rs = build_root_system(RootType::A, 1).unwrap();
    let (system, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(system.len(), 1);
    assert_eq!(theta, v(&[0.5, -0.5]));

    // A3: the nested pair {e1-e4, e2-e3}.
    let rs: Rs = build_root_system(RootType::A, 3).unwrap();
    let (system, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(system, vec![v(&[1.0, 0.0, 0.0, -1.0]), v(&[0.0, 1.0, -1.0, 0.0])]);
    assert_eq!(theta, v(&[0.5, 0.5, -0.5, -0.5]));

    // B5: Theta strictly above the highest root on the chamber.
    let rs: Rs = build_root_system(RootType::B, 5).unwrap();
    let (_, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(theta, v(&[1.0, 1.0, 0.5, 0.0, 0.0]));
    let l = highest_root(&rs).unwrap();
    let gap = rs.coefficients(&(&theta - &l)).unwrap();
    assert!(gap.iter().all(|&c| c >= -1e-9));
    assert!(gap.iter().any(|&c| c > 1e-9));

    // E6: Theta coincides with the highest root.
    let rs: Rs = build_root_system(RootType::E6, 6).unwrap();
    let (_, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(theta, highest_root(&rs).unwrap());

    // E7 and E8 half sums.
    let rs: Rs = build_root_system(RootType::E7, 7).unwrap();
    let (_, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(theta, v(&[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, -1.0, 1.0]));
    let rs: Rs = build_root_system(RootType::E8, 8).unwrap();
    let (_, theta) = strongly_orthogonal_theta(&rs).unwrap();
    assert_eq!(theta, v(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]));
}

#[test]
fn codimension_one_positive_list() {
    let mut listed = Vec::new();
    for (ty, r) in sweep_systems() {
        let rs: Rs = build_root_system(ty, r).unwrap();
        let (_, theta) = strongly_orthogonal_theta(&rs).unwrap();
        if s_eta(&rs, &theta).unwrap() >= 1 {
            listed.push((ty, r));
        }
    }
    let expect = vec![
        (RootType::B, 5),
        (RootType::B, 6),
        (RootType::B, 7),
        (RootType::B, 8),
        (RootType::D, 6),
        (RootType::D, 7),
        (RootType::D, 8),
        (RootType::D, 9),
        (RootType::E7, 7),
        (RootType::E8, 8),
    ];
    assert_eq!(listed, expect);
}

#[test]
fn s_eta_examples_and_sweep() {
    for (r, expect) in [(3usize, 1usize), (4, 2), (5, 2), (6, 3), (7, 3), (8, 4)] {
        let preset: Preset = SymmetricSpacePreset::split(RootType::A, r).unwrap();
        let rs = preset.root_system();
        assert_eq!(s_eta(rs, &rho(&preset)).unwrap(), expect, "A{r}");
        assert_eq!(expect, r / 2);
    }
    for (ty, r, _, _, s_rho) in golden() {
        let preset: Preset = SymmetricSpacePreset::split(ty, r).unwrap();
        assert_eq!(s_eta(preset.root_system(), &rho(&preset)).unwrap(), s_rho, "{ty}{r}");
    }
    // The highest root itself always gives 0: l - l vanishes identically.
    for (ty, r) in [(RootType::A, 4), (RootType::B, 5), (RootType::E7, 7), (RootType::G2, 2)] {
        let rs: Rs = build_root_system(ty, r).unwrap();
        let l = highest_root(&rs).unwrap();
        assert_eq!(s_eta(&rs, &l).unwrap(), 0, "{ty}{r}");
    }
}

#[test]
fn s_eta_rejects_bad_inputs() {
    let rs: Rs = build_root_system(RootType::A, 3).unwrap();
    // Negative on the chamber: minus a simple root.
    let bad = -rs.simple_roots()[1].clone();
    assert!(matches!(s_eta(&rs, &bad), Err(Error::Input(_))));
    // Reducible system.
    let preset: Preset = SymmetricSpacePreset::hyperbolic_product(3, 4).unwrap();
    let eta = v(&[1.0, 1.0]);
    assert!(matches!(s_eta(preset.root_system(), &eta), Err(Error::Input(_))));
}

#[test]
fn rho_closed_forms() {
    let preset: Preset = SymmetricSpacePreset::split(RootType::A, 1).unwrap();
    assert_eq!(rho(&preset), v(&[0.5, -0.5]));

    for r in 2..=8 {
        let preset: Preset = SymmetricSpacePreset::split(RootType::A, r).unwrap();
        let coeffs = preset.root_system().coefficients(&rho(&preset)).unwrap();
        for i in 1..=r {
            let expect = (i * (r + 1 - i)) as f64 / 2.0;
            assert!((coeffs[i - 1] - expect).abs() <= 1e-9, "A{r} coweight {i}");
        }
    }

    let preset: Preset = SymmetricSpacePreset::hyperbolic_product(3, 3).unwrap();
    assert_eq!(rho(&preset), v(&[1.0, 1.0]));
}

#[test]
fn preset_dimensions() {
    for r in 2..=5 {
        let preset: Preset = SymmetricSpacePreset::special_linear(r + 1).unwrap();
        assert_eq!(preset.dim(), r * (r + 3) / 2, "SL({},R)", r + 1);
        assert_eq!(preset.rank(), r);
    }
    assert_eq!(SymmetricSpacePreset::<f64>::hyperbolic_product(3, 4).unwrap().dim(), 7);
    assert_eq!(SymmetricSpacePreset::<f64>::real_hyperbolic(7).unwrap().dim(), 7);
    assert_eq!(SymmetricSpacePreset::<f64>::real_hyperbolic(7).unwrap().rank(), 1);
}

#[test]
fn busemann_spectrum_examples() {
    // Product H^4 x H^4 along the diagonal direction.
    let preset: Preset = SymmetricSpacePreset::hyperbolic_product(4, 4).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let spec = busemann_spectrum(&preset, &v(&[s, s])).unwrap();
    let eigs = spec.eigenvalues_ascending();
    assert_eq!(eigs.len(), 8);
    assert!(eigs[0].abs() <= 1e-12 && eigs[1].abs() <= 1e-12);
    for x in &eigs[2..] {
        assert!((x - s).abs() <= 1e-12);
    }

    // Real hyperbolic space: spectrum (0, 1, ..., 1).
    let preset: Preset = SymmetricSpacePreset::real_hyperbolic(5).unwrap();
    let spec = busemann_spectrum(&preset, &v(&[1.0])).unwrap();
    let eigs = spec.eigenvalues_ascending();
    assert_eq!(eigs.len(), 5);
    assert!(eigs[0].abs() <= 1e-12);
    for x in &eigs[1..] {
        assert!((x - 1.0).abs() <= 1e-12);
    }

    // SL(3,R)/SO(3) at u = (1,0,-1)/sqrt(2).
    let preset: Preset = SymmetricSpacePreset::special_linear(3).unwrap();
    let spec = busemann_spectrum(&preset, &v(&[s, 0.0, -s])).unwrap();
    let eigs = spec.eigenvalues_ascending();
    let expect = [0.0, 0.0, s, s, 2.0 * s];
    assert_eq!(eigs.len(), 5);
    for (x, e) in eigs.iter().zip(expect) {
        assert!((x - e).abs() <= 1e-12);
    }
}

#[test]
fn busemann_spectrum_rejects_bad_directions() {
    let preset: Preset = SymmetricSpacePreset::special_linear(3).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Not unit.
    assert!(busemann_spectrum(&preset, &v(&[1.0, 0.0, -1.0])).is_err());
    // Unit but outside the chamber (reversed order).
    assert!(busemann_spectrum(&preset, &v(&[-s, 0.0, s])).is_err());
    // Unit but outside the flat (not trace-zero).
    let t = 1.0 / 3.0f64.sqrt();
    assert!(busemann_spectrum(&preset, &v(&[t, t, t])).is_err());
    // Real hyperbolic with the negative direction.
    let preset: Preset = SymmetricSpacePreset::real_hyperbolic(4).unwrap();
    assert!(busemann_spectrum(&preset, &v(&[-1.0])).is_err());
}

#[test]
fn l_x_product_formula() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for n in [3usize, 4, 5] {
        let preset: Preset = SymmetricSpacePreset::hyperbolic_product(n, n).unwrap();
        let u = v(&[s, s]);
        for step in 0..(10 * (n - 1)) {
            // Integer delta_i sits exactly on the strict-inequality
            // boundary k_trace > delta, where float noise decides the
            // tie; the formula is only probed off that knife edge.
            let delta_i = step as f64 / 10.0 + 0.05;
            let expect = delta_i.floor() as usize + 3;
            assert_eq!(
                l_x(&preset, &u, delta_i / 2.0f64.sqrt()).unwrap(),
                expect,
                "n={n} d={delta_i}"
            );
        }
        // Just past an integer exponent the index steps up.
        assert_eq!(l_x(&preset, &u, 0.999 / 2.0f64.sqrt()).unwrap(), 3);
        assert_eq!(l_x(&preset, &u, 1.001 / 2.0f64.sqrt()).unwrap(), 4);
    }
}

#[test]
fn l_x_examples_and_monotonicity() {
    // Real hyperbolic encoding at delta = 1.3.
    let preset: Preset = SymmetricSpacePreset::real_hyperbolic(6).unwrap();
    assert_eq!(l_x(&preset, &v(&[1.0]), 1.3).unwrap(), 3);

    // Saturation: delta at least the full trace gives n + 1.
    let preset: Preset = SymmetricSpacePreset::real_hyperbolic(4).unwrap();
    assert_eq!(l_x(&preset, &v(&[1.0]), 3.0).unwrap(), 5);

    // Monotone in delta; value r + 1 at delta = 0 for a regular u.
    let preset: Preset = SymmetricSpacePreset::special_linear(3).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = v(&[s, 0.0, -s]);
    // u is on a chamber wall; use a regular direction for the r+1 check.
    let reg = v(&[2.0, 0.0, -2.0]);
    let reg = &reg / reg.norm();
    assert_eq!(l_x(&preset, &reg, 0.0).unwrap(), preset.rank() + 1);
    let mut last = 0;
    for step in 0..=30 {
        let delta = step as f64 / 10.0;
        let k = l_x(&preset, &u, delta).unwrap();
        assert!(k >= last);
        last = k;
    }
    assert!(matches!(l_x(&preset, &u, -0.5), Err(Error::Input(_))));
}

#[test]
fn gap_bound_examples() {
    let preset: Preset = SymmetricSpacePreset::special_linear(5).unwrap();
    assert_eq!(preset.dim(), 14);
    assert_eq!(gap_bound(&preset, &rho(&preset)).unwrap(), 12);

    let preset: Preset = SymmetricSpacePreset::split(RootType::B, 5).unwrap();
    let (_, theta) = strongly_orthogonal_theta(preset.root_system()).unwrap();
    let n = preset.dim();
    assert_eq!(gap_bound(&preset, &theta).unwrap(), n - 1);

    let l = highest_root(preset.root_system()).unwrap();
    assert_eq!(gap_bound(&preset, &l).unwrap(), n);
}

#[test]
fn json_round_trip_and_validation() {
    let rs: Rs = build_root_system(RootType::B, 3).unwrap();
    let json = serde_json::to_string(&rs).unwrap();
    assert!(json.contains("\"components\""));
    assert!(json.contains("\"positive_roots\""));
    assert!(json.contains("\"chamber_generators\""));
    let back: Rs = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rs);

    // A hand-written rank-one document.
    let doc = r#"{
        "components": [["A", 1]],
        "positive_roots": [{"coords": [1.0], "mult": 4}],
        "chamber_generators": [[1.0]]
    }"#;
    let rs: Rs = serde_json::from_str(doc).unwrap();
    assert_eq!(rs.total_multiplicity(), 4);

    // Wrong root count for the claimed component.
    let doc = r#"{
        "components": [["A", 2]],
        "positive_roots": [{"coords": [1.0, -1.0, 0.0], "mult": 1}],
        "chamber_generators": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    }"#;
    assert!(serde_json::from_str::<Rs>(doc).is_err());

    // Unknown component label.
    let doc = r#"{
        "components": [["H4", 2]],
        "positive_roots": [{"coords": [1.0], "mult": 1}],
        "chamber_generators": [[1.0]]
    }"#;
    assert!(serde_json::from_str::<Rs>(doc).is_err());

    // Zero multiplicity.
    let doc = r#"{
        "components": [["A", 1]],
        "positive_roots": [{"coords": [1.0], "mult": 0}],
        "chamber_generators": [[1.0]]
    }"#;
    assert!(serde_json::from_str::<Rs>(doc).is_err());
}

#[test]
fn from_parts_rejects_malformed_systems() {
    // Duplicate roots.
    let dup = vec![
        PositiveRoot::new(v(&[1.0, -1.0]), 1).unwrap(),
        PositiveRoot::new(v(&[1.0, -1.0]), 1).unwrap(),
        PositiveRoot::new(v(&[1.0, 1.0]), 1).unwrap(),
        PositiveRoot::new(v(&[1.0, 0.0]), 1).unwrap(),
    ];
    assert!(RestrictedRootSystem::from_parts(vec![(RootType::B, 2)], dup, None).is_err());

    // Off-grid coordinates.
    let off = vec![PositiveRoot::new(v(&[0.3]), 1).unwrap()];
    assert!(RestrictedRootSystem::from_parts(vec![(RootType::A, 1)], off, None).is_err());
}
