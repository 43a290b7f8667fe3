use std::collections::HashMap;

use critflow_core::hypmodel::{distance, mink_dot, Isometry, MinkPoint};
use critflow_core::schottky::{
    cyclic_fixture, enumerate_orbit, enumerate_orbit_capped, estimate_delta, estimate_from_orbit,
    orbit_to_json_lines, poincare_partial_sum, separated_fixture, spell_word, SchottkyGroupSpec,
};
use critflow_core::Error;

#[test]
fn word_counts_match_free_group_formula() {
    let spec = separated_fixture(2, 2.0f64, 0.0).unwrap();
    let orbit = enumerate_orbit(&spec, 4).unwrap();
    let mut per_len = [0usize; 5];
    for p in &orbit {
        per_len[p.word.len()] += 1;
    }
    assert_eq!(per_len[1..], [4, 12, 36, 108]);
    assert_eq!(orbit.len(), 160);

    let cyclic = cyclic_fixture(2, 1.0f64).unwrap();
    let orbit = enumerate_orbit(&cyclic, 5).unwrap();
    assert_eq!(orbit.len(), 10);
}

#[test]
fn words_are_reduced() {
    let spec = separated_fixture(2, 2.0f64, 0.0).unwrap();
    let orbit = enumerate_orbit(&spec, 5).unwrap();
    for p in &orbit {
        for pair in p.word.windows(2) {
            assert_ne!(pair[0], -pair[1], "unreduced word {:?}", p.word);
        }
        assert!(p.word.iter().all(|&l| l != 0));
    }
}

#[test]
fn cyclic_orbit_walks_the_axis() {
    let t = 1.5f64;
    let spec = cyclic_fixture(3, t).unwrap();
    let orbit = enumerate_orbit(&spec, 12).unwrap();
    assert_eq!(orbit.len(), 24);
    for p in &orbit {
        let k = p.word.len() as f64;
        assert!((p.dist - k * t).abs() <= 1e-9, "word {:?}", p.word);
        // Powers of one generator: constant-sign words only.
        let first = p.word[0];
        assert!(p.word.iter().all(|&l| l == first));
    }
}

#[test]
fn inverse_words_have_equal_distance() {
    let spec = separated_fixture(2, 4.0f64, 0.5).unwrap();
    let orbit = enumerate_orbit(&spec, 6).unwrap();
    let by_word: HashMap<Vec<i32>, f64> =
        orbit.iter().map(|p| (p.word.clone(), p.dist)).collect();
    for p in &orbit {
        let inverse: Vec<i32> = p.word.iter().rev().map(|l| -l).collect();
        let d = by_word.get(&inverse).expect("orbit is inverse-closed");
        assert!((d - p.dist).abs() <= 1e-9, "word {:?}", p.word);
    }
}

#[test]
fn stored_distance_matches_stored_point() {
    let spec = separated_fixture(3, 4.0f64, 0.5).unwrap();
    let orbit = enumerate_orbit(&spec, 6).unwrap();
    let p = spec.basepoint();
    for q in &orbit {
        assert!(
            (q.dist - distance(p, &q.point)).abs() <= 1e-9,
            "word {:?}",
            q.word
        );
        assert!(q.dist > 0.1, "fixture should be discrete; word {:?}", q.word);
    }
}

#[test]
fn near_elliptic_configurations_reproject_cleanly() {
    // Translation length 2 with axes pushed a full unit off the
    // basepoint admits words that collapse back near the origin; the
    // accumulated cancellation exceeds the point tolerance and the
    // enumerator has to repair it by radial projection.
    let spec = separated_fixture(2, 2.0f64, 1.0).unwrap();
    let orbit = enumerate_orbit(&spec, 10).unwrap();
    for q in &orbit {
        let x = q.point.coords();
        let err = (mink_dot(x, x) + 1.0).abs();
        assert!(err <= 1e-10 * (1.0 + x[0] * x[0]), "word {:?}", q.word);
    }
}

#[test]
fn poincare_sum_basics() {
    let spec = separated_fixture(2, 2.0f64, 0.0).unwrap();
    let orbit = enumerate_orbit(&spec, 4).unwrap();
    let at_zero = poincare_partial_sum(&orbit, 0.0).unwrap();
    assert_eq!(at_zero, orbit.len() as f64);

    let mut last = f64::INFINITY;
    for s in [0.1f64, 0.5, 1.0, 2.0] {
        let sum = poincare_partial_sum(&orbit, s).unwrap();
        assert!(sum < last);
        last = sum;
    }

    let single = &orbit[..1];
    let s = 0.7;
    let expected = (-s * orbit[0].dist).exp();
    assert!((poincare_partial_sum(single, s).unwrap() - expected).abs() <= 1e-15);

    assert!(poincare_partial_sum::<f64>(&[], 1.0).is_err());
    assert!(poincare_partial_sum(&orbit, -0.1).is_err());
}

#[test]
fn enumeration_cap_is_enforced() {
    let spec = separated_fixture(2, 4.0f64, 0.5).unwrap();
    let err = enumerate_orbit_capped(&spec, 10, 1000).unwrap_err();
    match err {
        Error::Resource(msg) => {
            assert!(msg.contains("78732"), "message should name the required cap: {msg}");
            assert!(msg.contains("1000"));
        }
        other => panic!("expected resource error, got {other:?}"),
    }
    assert!(enumerate_orbit_capped(&spec, 10, 78732).is_ok());
    assert!(matches!(
        enumerate_orbit(&spec, 0),
        Err(Error::Input(_))
    ));
}

#[test]
fn cyclic_estimate_is_near_zero() {
    // Polynomial orbit growth: the fitted exponent should be tiny.
    let spec = cyclic_fixture(2, 1.0f64).unwrap();
    let est = estimate_delta(&spec, 60).unwrap();
    assert!(est.value <= 0.05, "estimate {}", est.value);
    assert!(est.point_count >= 50);
}

#[test]
fn separated_estimates_match_log3_over_ell() {
    for ell in [4.0f64, 6.0] {
        let spec = separated_fixture(2, ell, 0.5).unwrap();
        let est = estimate_delta(&spec, 12).unwrap();
        let target = 3.0f64.ln() / ell;
        assert!(
            (est.value - target).abs() <= 0.15 * target,
            "ell={ell}: estimate {} vs {target}",
            est.value
        );
        assert!(est.point_count >= 50);
        assert!(est.window.0 < est.window.1);
        assert!(est.fit_residual.is_finite() && est.fit_residual >= 0.0);
    }
}

#[test]
fn doubling_length_halves_the_estimate() {
    let est4 = estimate_delta(&separated_fixture(2, 4.0f64, 0.5).unwrap(), 12)
        .unwrap()
        .value;
    let est8 = estimate_delta(&separated_fixture(2, 8.0f64, 0.5).unwrap(), 12)
        .unwrap()
        .value;
    let half = est4 / 2.0;
    assert!(
        (est8 - half).abs() <= 0.2 * half,
        "estimates {est4} and {est8}"
    );
}

#[test]
fn distances_bracketed_by_word_length() {
    // Every letter moves the basepoint by the same step (axes are
    // symmetric), words are at most the sum of their steps, and each
    // junction wastes at most the worst two-letter defect.
    let spec = separated_fixture(2, 4.0f64, 0.5).unwrap();
    let orbit = enumerate_orbit(&spec, 8).unwrap();
    let singles: Vec<f64> = orbit
        .iter()
        .filter(|p| p.word.len() == 1)
        .map(|p| p.dist)
        .collect();
    let step = singles[0];
    assert!(singles.iter().all(|d| (d - step).abs() <= 1e-9));
    let junction_defect = orbit
        .iter()
        .filter(|p| p.word.len() == 2)
        .map(|p| 2.0 * step - p.dist)
        .fold(0.0f64, f64::max);
    assert!(junction_defect > 0.0 && junction_defect < step);
    for p in &orbit {
        let k = p.word.len() as f64;
        assert!(p.dist <= k * step + 1e-9, "word {:?}", p.word);
        assert!(
            p.dist >= k * step - (k - 1.0) * junction_defect - 1e-9,
            "word {:?}: dist {} below bracket",
            p.word,
            p.dist
        );
    }
}

#[test]
fn estimates_refine_within_residual_band() {
    for ell in [2.0f64, 4.0] {
        let spec = separated_fixture(2, ell, 0.5).unwrap();
        let coarse = estimate_delta(&spec, 10).unwrap();
        let fine = estimate_delta(&spec, 12).unwrap();
        let band = coarse.fit_residual.max(fine.fit_residual);
        assert!(
            (fine.value - coarse.value).abs() < band,
            "ell={ell}: {} -> {} vs band {band}",
            coarse.value,
            fine.value
        );
    }
}

#[test]
fn poincare_sums_bracket_the_estimate() {
    let spec = separated_fixture(2, 2.0f64, 0.0).unwrap();
    let est = estimate_delta(&spec, 12).unwrap().value;
    let above = est + 0.5;
    let below = (est - 0.5).max(0.0);
    assert!(below < est);

    let sums: Vec<(f64, f64)> = [8usize, 10, 12]
        .iter()
        .map(|&len| {
            let orbit = enumerate_orbit(&spec, len).unwrap();
            (
                poincare_partial_sum(&orbit, above).unwrap(),
                poincare_partial_sum(&orbit, below).unwrap(),
            )
        })
        .collect();
    for pair in sums.windows(2) {
        let conv = pair[1].0 / pair[0].0;
        let div = pair[1].1 / pair[0].1;
        assert!(conv < 1.05, "convergent side grew by {conv}");
        assert!(div >= 1.5, "divergent side grew only by {div}");
    }
}

#[test]
fn spec_round_trips_through_json() {
    let spec = separated_fixture(3, 4.0f64, 0.5).unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    let back: SchottkyGroupSpec<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back.label(), spec.label());
    assert_eq!(back.free_asserted(), spec.free_asserted());
    assert_eq!(back.separation(), spec.separation());
    assert_eq!(back.generator_count(), 2);
    for (a, b) in back.generators().iter().zip(spec.generators()) {
        assert_eq!(a.matrix(), b.matrix());
    }
    assert_eq!(back.basepoint(), spec.basepoint());

    // A corrupted generator entry must fail the Lorentz re-check.
    let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    doc["generators"][0][0][0] = serde_json::json!(3.0);
    let res: Result<SchottkyGroupSpec<f64>, _> =
        serde_json::from_value(doc);
    assert!(res.is_err());
}

#[test]
fn spec_rejects_mismatched_dimensions() {
    let g2 = Isometry::<f64>::boost(2, 1.0);
    let p3 = MinkPoint::<f64>::basepoint(3);
    assert!(SchottkyGroupSpec::new("bad".into(), vec![g2], p3, true).is_err());
    let p2 = MinkPoint::<f64>::basepoint(2);
    assert!(SchottkyGroupSpec::new("empty".into(), vec![], p2, true).is_err());
}

#[test]
fn orbit_dump_is_valid_json_lines() {
    let spec = separated_fixture(2, 2.0f64, 0.0).unwrap();
    let orbit = enumerate_orbit(&spec, 3).unwrap();
    let dump = orbit_to_json_lines(&orbit);
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines.len(), orbit.len());
    for (line, p) in lines.iter().zip(&orbit) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["word"].as_str().unwrap(), spell_word(&p.word));
        assert!((v["dist"].as_f64().unwrap() - p.dist).abs() <= 1e-12);
    }
}

#[test]
fn estimate_reports_serialize() {
    let spec = separated_fixture(2, 4.0f64, 0.5).unwrap();
    let est = estimate_delta(&spec, 8).unwrap();
    let v = serde_json::to_value(&est).unwrap();
    assert!(v["value"].is_number());
    assert!(v["window"].is_array());
    assert!(v["point_count"].is_number());
    assert!(v["fit_residual"].is_number());
}

#[test]
fn estimate_needs_enough_points() {
    let spec = cyclic_fixture(2, 1.0f64).unwrap();
    // 2L = 16 points at L = 8: below the 50-point floor.
    match estimate_delta(&spec, 8) {
        Err(Error::Estimation(msg)) => assert!(msg.contains("few")),
        other => panic!("expected estimation error, got {other:?}"),
    }
    let orbit = enumerate_orbit(&spec, 8).unwrap();
    assert!(estimate_from_orbit(&orbit).is_err());
}

#[test]
fn fixture_parameter_validation() {
    assert!(cyclic_fixture::<f64>(1, 1.0).is_err());
    assert!(cyclic_fixture::<f64>(2, 0.0).is_err());
    assert!(separated_fixture::<f64>(2, -1.0, 0.0).is_err());
    assert!(separated_fixture::<f64>(2, 2.0, -0.5).is_err());
    assert!(separated_fixture::<f64>(1, 2.0, 0.0).is_err());
    let spec = separated_fixture::<f64>(2, 2.0, 0.75).unwrap();
    assert_eq!(spec.separation(), Some(0.75));
    assert!(spec.free_asserted());
}
