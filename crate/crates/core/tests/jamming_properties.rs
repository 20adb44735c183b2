mod common;

use common::*;
use nonlocality::{
    apply_jamming, binary_condition, builtin_boxes, check_unary, chsh, detect_causal_loops,
    validate_configuration, Event, JamScenario, JammingConfiguration,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn golden_section_matches_stationary_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2, 3] {
        for _ in 0..2000 {
            let cfg = random_canonical_valid(&mut rng, d);
            let jx = cfg.j.spatial()[0];
            let rho = cfg.j.spatial()[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let want = ridge_infimum(jx, rho, cfg.j.time());
            let got = binary_condition(&cfg, TOL).unwrap().margin;
            assert!((got - want).abs() <= 1e-9, "j = {}: {got} vs {want}", cfg.j);
        }
    }
}

#[test]
fn one_dimensional_margin_is_apex_slack() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let cfg = random_canonical_valid(&mut rng, 1);
        let got = binary_condition(&cfg, TOL).unwrap().margin;
        assert!((got - apex_slack_1d(&cfg)).abs() <= 1e-12);
    }
}

#[test]
fn verdicts_survive_poses() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    for d in 1..=3 {
        for _ in 0..300 {
            let cfg = random_canonical_valid(&mut rng, d);
            let base = binary_condition(&cfg, TOL).unwrap();
            if base.margin.abs() <= 1e-7 {
                continue;
            }
            let posed = Pose::random(&mut rng, d).apply_cfg(&cfg);
            assert!(validate_configuration(&posed, TOL).unwrap().valid);
            assert_eq!(binary_condition(&posed, TOL).unwrap().holds, base.holds, "{cfg:?}");
            checked += 1;
        }
    }
    assert!(checked > 800);
}

#[test]
fn overlap_samples_lie_in_jammer_cone() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for d in 1..=3 {
        for _ in 0..10 {
            let cfg = random_canonical_admissible(&mut rng, d);
            for _ in 0..10_000 {
                let p = sample_overlap(&mut rng, &cfg.a, &cfg.b, 50.0);
                assert!(future_slack(&cfg.j, &p) >= -TOL, "{p} escapes {}", cfg.j);
            }
        }
    }
}

#[test]
fn witnesses_are_genuine() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut seen = 0;
    for d in 1..=3 {
        while seen < 500 * d {
            let canonical = random_canonical_valid(&mut rng, d);
            let cfg = if rng.random_bool(0.5) {
                canonical
            } else {
                Pose::random(&mut rng, d).apply_cfg(&canonical)
            };
            let v = binary_condition(&cfg, TOL).unwrap();
            if v.holds {
                assert!(v.witness.is_none());
                continue;
            }
            let w = v.witness.expect("failing verdict carries a witness");
            let scale = 1.0 + w.to_coords().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            assert!(future_slack(&cfg.a, &w) >= -1e-9 * scale, "{w} not after a");
            assert!(future_slack(&cfg.b, &w) >= -1e-9 * scale, "{w} not after b");
            assert!(future_slack(&cfg.j, &w) < 0.0, "{w} inside J");
            seen += 1;
        }
    }
}

#[test]
fn earlier_jammers_inherit_the_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut checked = 0;
    for d in 1..=3 {
        for _ in 0..1000 {
            let cfg = random_canonical_admissible(&mut rng, d);
            let dt = rng.random_range(0.0..1.0);
            let step: Vec<f64> = random_unit(&mut rng, d)
                .iter()
                .map(|u| u * dt * rng.random_range(0.0..1.0))
                .collect();
            let x: Vec<f64> = cfg.j.spatial().iter().zip(&step).map(|(a, b)| a + b).collect();
            let earlier = cfg.with_jammer(Event::new(x, cfg.j.time() - dt).unwrap()).unwrap();
            if !validate_configuration(&earlier, TOL).unwrap().valid {
                continue;
            }
            assert!(binary_condition(&earlier, TOL).unwrap().holds, "{earlier:?}");
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn no_late_jammer_in_two_or_more_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [2, 3] {
        for _ in 0..10_000 {
            let mut c: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            c.push(rng.random_range(1e-3..2.0));
            let cfg = JammingConfiguration::canonical(ev(&c)).unwrap();
            if !validate_configuration(&cfg, TOL).unwrap().valid {
                continue;
            }
            assert!(!binary_condition(&cfg, TOL).unwrap().holds, "{cfg:?}");
        }
    }
}

#[test]
fn jamming_is_idempotent_and_classical() {
    for (name, b) in builtin_boxes() {
        let once = apply_jamming(&b);
        assert_eq!(apply_jamming(&once), once, "{name}");
        let u = check_unary(&b, &once, 0.0);
        assert!(u.holds && u.max_deviation == 0.0, "{name}: {u:?}");
        assert!(chsh(&once).value.abs() <= 2.0 + 1e-12, "{name}");
    }
}

#[test]
fn admissible_scenarios_are_acyclic() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut edges = 0;
    for round in 0..1000 {
        let d = 1 + round % 3;
        let size = rng.random_range(2..=6);
        let scenario = JamScenario::new(random_scenario(&mut rng, d, size)).unwrap();
        let verdict = detect_causal_loops(&scenario, TOL).unwrap();
        assert!(verdict.is_acyclic(), "{verdict:?}");
        edges += verdict.edges().len();
    }
    assert!(edges > 1000, "only {edges} edges");
}
