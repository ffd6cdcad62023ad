use proptest::prelude::*;
use tidal_core::fields::FieldSpec;
use tidal_core::scenario::{builtin_suite, EinsteinSource, Resolved, Scenario};
use tidal_core::verify::*;

fn builtins() -> Vec<Resolved> {
    builtin_suite().iter().map(|s| s.resolve().unwrap()).collect()
}

fn failures(checks: &[CheckResult]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            format!(
                "{} on {} at α={}: rel {:e}",
                c.check, c.scenario, c.alpha, c.rel_residual
            )
        })
        .collect()
}

#[test]
fn every_check_id_is_reported_somewhere() {
    let report = run_suite(
        &builtins(),
        &SuiteConfig {
            points: 2,
            alphas: Some(vec![0.0, 1.0]),
            seed: 3,
        },
    )
    .unwrap();
    assert!(report.passed(), "{:?}", failures(&report.checks));
    for id in CHECKS {
        assert!(report.summary.per_check.contains_key(*id), "{id} never ran");
    }
}

#[test]
fn extra_fixtures_pass() {
    let mut gauge = Scenario::minimal(
        "gauge",
        FieldSpec::new("schwarzschild").with("M", 1.0),
        FieldSpec::new("pure_gauge").with("c", 0.3),
        2.0,
    );
    gauge.einstein_source = None;
    let efield = Scenario::minimal(
        "efield",
        FieldSpec::new("minkowski"),
        FieldSpec::new("uniform_e").with("E", 0.4).with("axis", "x"),
        1.5,
    );
    let gauge = gauge.resolve().unwrap();
    let efield = efield.resolve().unwrap();
    assert_eq!(gauge.source, EinsteinSource::Vacuum);
    assert_eq!(efield.source, EinsteinSource::TestField);
    let report = run_suite(
        &[gauge, efield],
        &SuiteConfig {
            points: 6,
            alphas: None,
            seed: 11,
        },
    )
    .unwrap();
    assert!(report.passed(), "{:?}", failures(&report.checks));
    assert!(report.summary.per_check["einstein_ricci"].pass > 0);
}

#[test]
fn reports_are_reproducible() {
    let cfg = SuiteConfig {
        points: 3,
        alphas: Some(vec![-1.0, 0.5]),
        seed: 42,
    };
    let a = run_suite(&builtins(), &cfg).unwrap().to_json();
    let b = run_suite(&builtins(), &cfg).unwrap().to_json();
    assert_eq!(a, b);
    let other = run_suite(&builtins(), &SuiteConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, other.to_json());
    assert!(other.passed());
}

#[test]
fn empty_suite_gives_an_empty_passing_report() {
    let report = run_suite(&[], &SuiteConfig::default()).unwrap();
    assert!(report.passed());
    assert!(report.checks.is_empty() && report.scenarios.is_empty());
    let zero = run_suite(
        &builtins(),
        &SuiteConfig {
            points: 0,
            ..SuiteConfig::default()
        },
    )
    .unwrap();
    assert!(zero.checks.is_empty() && zero.passed());
}

#[test]
fn perturbed_connection_is_caught() {
    let mut s = builtin_suite().remove(0);
    let mut offset = [[0.0; 4]; 4];
    offset[0][1] = 0.01;
    offset[1][0] = 0.01;
    s.connection_offset = Some(offset);
    let report = run_suite(
        &[s.resolve().unwrap()],
        &SuiteConfig {
            points: 4,
            ..SuiteConfig::default()
        },
    )
    .unwrap();
    assert!(!report.passed());
    assert_eq!(report.summary.per_check["strong_torsion"].fail, 4);
}

#[test]
fn uniform_field_trace_scales_with_alpha_squared() {
    let s = Scenario::minimal(
        "b",
        FieldSpec::new("minkowski"),
        FieldSpec::new("uniform_b").with("B", 0.5).with("axis", "z"),
        1.0,
    );
    let alphas = [0.5, 1.0, 2.0, -2.0];
    let table = sweep(&s.resolve().unwrap(), &alphas, 3, 0).unwrap();
    let alpha = table.column("alpha").unwrap();
    let trace = table.column("tidal_trace").unwrap();
    let point = table.column("point").unwrap();
    for (k, a) in alpha.iter().enumerate() {
        let base = (0..alpha.len())
            .find(|&j| alpha[j] == 1.0 && point[j] == point[k])
            .unwrap();
        let expected = a * a * trace[base];
        assert!(
            (trace[k] - expected).abs() <= 1e-12 * expected.abs().max(1e-300),
            "α={a}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_points_pass_every_check(seed in any::<u64>(), alpha in -4.0..4.0f64, which in 0usize..4) {
        let resolved = builtin_suite()[which].resolve().unwrap();
        for (p, (x, y)) in sample_points(&resolved, 2, seed, 0).unwrap().iter().enumerate() {
            let checks = check_point(&resolved, alpha, p, x, y).unwrap();
            prop_assert!(checks.iter().all(|c| c.pass), "{:?}", failures(&checks));
        }
    }
}
