use std::f64::consts::PI;

use proptest::prelude::*;
use tidal_core::fields::*;
use tidal_core::tensor::{metric_inverse, Mat4, Tensor4, Vec4};
use tidal_core::GeometryError;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn minkowski_is_flat_everywhere() {
    let jet = Minkowski.jet(&[3.0, -1.0, 2.0, 0.5]).unwrap();
    assert_eq!(
        jet.g,
        [
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0]
        ]
    );
    assert!(jet.dg.iter().flatten().flatten().all(|v| *v == 0.0));
    assert!(jet.ddg.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    let (gamma, dgamma) = christoffel(&Minkowski, &[0.0, 1.0, 2.0, 3.0]).unwrap();
    assert!(gamma.iter().flatten().flatten().all(|v| *v == 0.0));
    assert!(dgamma.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    let (r, ric) = base_riemann(&Minkowski, &[0.0; 4]).unwrap();
    assert!(r.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    assert!(ric.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn schwarzschild_components_at_r10() {
    let s = SphericalStatic::schwarzschild(1.0).unwrap();
    let g = s.jet(&[0.0, 10.0, PI / 2.0, 0.0]).unwrap().g;
    assert!(close(g[0][0], -0.8, 1e-15));
    assert!(close(g[1][1], 1.25, 1e-15));
    assert!(close(g[2][2], 100.0, 1e-15));
    assert!(close(g[3][3], 100.0, 1e-15));
}

#[test]
fn schwarzschild_christoffels_match_closed_form() {
    let m = 1.3;
    let (r, th) = (7.5, 1.1);
    let s = SphericalStatic::schwarzschild(m).unwrap();
    let (gamma, _) = christoffel(&s, &[0.4, r, th, 2.0]).unwrap();
    let f = 1.0 - 2.0 * m / r;
    let expect = [
        (0, 0, 1, m / (r * r * f)),
        (1, 0, 0, m * f / (r * r)),
        (1, 1, 1, -m / (r * r * f)),
        (1, 2, 2, -r * f),
        (1, 3, 3, -r * f * th.sin().powi(2)),
        (2, 1, 2, 1.0 / r),
        (2, 3, 3, -th.sin() * th.cos()),
        (3, 1, 3, 1.0 / r),
        (3, 2, 3, th.cos() / th.sin()),
    ];
    for (i, j, k, v) in expect {
        assert!(
            close(gamma[i][j][k], v, 1e-13),
            "γ^{i}_{j}{k} = {} vs {v}",
            gamma[i][j][k]
        );
        assert_eq!(gamma[i][j][k], gamma[i][k][j]);
    }
    assert!(gamma[0][0][0].abs() < 1e-15 && gamma[2][0][0].abs() < 1e-15);
}

fn kretschmann(r: &Tensor4, g: &Mat4) -> f64 {
    let gi = metric_inverse(g).unwrap();
    // Diagonal metrics only: each index raises/lowers with a single factor.
    let mut k = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let v = r[i][j][a][b];
                    k += v * v * g[i][i] * gi[j][j] * gi[a][a] * gi[b][b];
                }
            }
        }
    }
    k
}

#[test]
fn schwarzschild_is_ricci_flat_with_known_kretschmann() {
    let m = 2.0;
    let s = SphericalStatic::schwarzschild(m).unwrap();
    for r in [5.0, 9.0, 40.0] {
        let x = [0.0, r, 0.9, 1.0];
        let (riem, ric) = base_riemann(&s, &x).unwrap();
        let g = s.jet(&x).unwrap().g;
        let k = kretschmann(&riem, &g);
        assert!(close(k, 48.0 * m * m / r.powi(6), 1e-11), "K = {k}");
        let scale = riem
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(ric.iter().flatten().all(|v| v.abs() < 1e-13 * scale.max(1.0)));
    }
}

#[test]
fn reissner_nordstrom_ricci_equals_em_stress_energy() {
    let (m, q) = (1.0, 0.7);
    let rn = SphericalStatic::reissner_nordstrom(m, q, false).unwrap();
    let coulomb = builtin_potential(&FieldSpec::new("coulomb").with("Q", q), Chart::Spherical).unwrap();
    for r in [3.0, 8.0, 25.0] {
        let x = [0.0, r, 1.2, 0.4];
        let sample = FieldSample::new(&rn, coulomb.as_ref(), &x).unwrap();
        let (_, ric) = sample.riemann();
        let t = sample.stress_energy_em().em;
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    close(ric[i][j], 8.0 * PI * t[i][j], 1e-11),
                    "[{i}][{j}] {} {}",
                    ric[i][j],
                    t[i][j]
                );
            }
        }
        // Positive energy density for a static observer.
        assert!(t[0][0] > 0.0);
        assert!(sample.current().iter().all(|j| j.abs() < 1e-13));
    }
}

#[test]
fn faraday_examples() {
    let b = builtin_potential(
        &FieldSpec::new("uniform_b").with("B", 0.7).with("axis", "z"),
        Chart::Cartesian,
    )
    .unwrap();
    let (f, df) = faraday(b.as_ref(), &[0.0, 1.0, -2.0, 3.0]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expect = match (i, j) {
                (1, 2) => 0.7,
                (2, 1) => -0.7,
                _ => 0.0,
            };
            assert_eq!(f[i][j], expect);
        }
    }
    assert!(df.iter().flatten().flatten().all(|v| *v == 0.0));

    let c = builtin_potential(&FieldSpec::new("coulomb").with("Q", 2.0), Chart::Spherical).unwrap();
    let (f, _) = faraday(c.as_ref(), &[0.0, 4.0, 1.0, 0.0]).unwrap();
    assert!(close(f[1][0], -2.0 / 16.0, 1e-15));
    assert!(close(f[0][1], 2.0 / 16.0, 1e-15));

    let (f, df) = faraday(&ZeroPotential, &[0.0; 4]).unwrap();
    assert!(f
        .iter()
        .flatten()
        .chain(df.iter().flatten().flatten())
        .all(|v| *v == 0.0));
}

#[test]
fn currents_vanish_away_from_sources() {
    let coulomb = builtin_potential(&FieldSpec::new("coulomb").with("Q", 1.5), Chart::Cartesian).unwrap();
    let j = current(coulomb.as_ref(), &Minkowski, &[0.0, 1.0, -0.5, 2.0]).unwrap();
    assert!(j.iter().all(|v| v.abs() < 1e-14), "{j:?}");
    let b = UniformB { strength: 3.0, axis: 1 };
    assert_eq!(current(&b, &Minkowski, &[0.0, 1.0, 1.0, 1.0]).unwrap(), [0.0; 4]);
    assert_eq!(current(&ZeroPotential, &Minkowski, &[0.0; 4]).unwrap(), [0.0; 4]);
}

#[test]
fn zero_field_has_zero_stress_energy() {
    let s = FieldSample::new(&Minkowski, &ZeroPotential, &[0.0; 4]).unwrap();
    assert_eq!(s.stress_energy_em().em, [[0.0; 4]; 4]);
}

#[test]
fn pure_gauge_has_no_field_strength() {
    let p = builtin_potential(&FieldSpec::new("pure_gauge").with("c", 0.8), Chart::Cartesian).unwrap();
    let jet = p.jet(&[0.3, 1.0, -2.0, 0.5]).unwrap();
    assert!(jet.a.iter().any(|v| *v != 0.0));
    let (f, df) = faraday(p.as_ref(), &[0.3, 1.0, -2.0, 0.5]).unwrap();
    assert!(f
        .iter()
        .flatten()
        .chain(df.iter().flatten().flatten())
        .all(|v| v.abs() < 1e-14));
}

#[test]
fn chart_guards_reject_singular_points() {
    let s = SphericalStatic::schwarzschild(1.0).unwrap();
    assert!(matches!(
        s.jet(&[0.0, 2.0, 1.0, 0.0]),
        Err(GeometryError::ChartViolation { .. })
    ));
    assert!(matches!(
        s.jet(&[0.0, 5.0, 0.0, 0.0]),
        Err(GeometryError::ChartViolation { .. })
    ));
    assert!(s.jet(&[0.0, 2.1, 1.0, 0.0]).is_ok());
    let c = builtin_potential(&FieldSpec::new("coulomb").with("Q", 1.0), Chart::Cartesian).unwrap();
    assert!(c.jet(&[0.0; 4]).is_err());
}

#[test]
fn catalog_rejects_bad_specs() {
    assert!(matches!(
        builtin_metric(&FieldSpec::new("kerr")),
        Err(GeometryError::UnknownField { .. })
    ));
    assert!(builtin_metric(&FieldSpec::new("schwarzschild").with("M", -1.0)).is_err());
    assert!(builtin_metric(&FieldSpec::new("schwarzschild").with("mass", 1.0)).is_err());
    assert!(builtin_metric(&FieldSpec::new("reissner_nordstrom").with("M", 1.0).with("Q", 2.0)).is_err());
    assert!(builtin_metric(
        &FieldSpec::new("reissner_nordstrom")
            .with("M", 1.0)
            .with("Q", 2.0)
            .with("allow_naked", true)
    )
    .is_ok());
    assert!(matches!(
        builtin_potential(&FieldSpec::new("uniform_b").with("B", 1.0), Chart::Spherical),
        Err(GeometryError::Unsupported(_))
    ));
    assert!(builtin_potential(
        &FieldSpec::new("uniform_b").with("B", 1.0).with("axis", "w"),
        Chart::Cartesian
    )
    .is_err());
    let names: Vec<_> = metric_catalog().iter().map(|e| e.name).collect();
    assert_eq!(names, ["minkowski", "schwarzschild", "reissner_nordstrom"]);
}

fn spherical_point() -> impl Strategy<Value = Vec4> {
    (-5.0..5.0f64, 3.0..60.0f64, 0.2..(PI - 0.2), 0.0..(2.0 * PI)).prop_map(|(t, r, th, ph)| [t, r, th, ph])
}

fn cartesian_point() -> impl Strategy<Value = Vec4> {
    (-3.0..3.0f64, 0.3..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(t, x, y, z)| [t, x, y, z])
}

fn jets_close(a: &MetricJet, b: &MetricJet) {
    let flat = |j: &MetricJet| -> Vec<f64> {
        j.g.iter()
            .flatten()
            .chain(j.dg.iter().flatten().flatten())
            .chain(j.ddg.iter().flatten().flatten().flatten())
            .copied()
            .collect()
    };
    for (u, v) in flat(a).iter().zip(flat(b)) {
        assert!(close(*u, v, 1e-12), "{u} vs {v}");
    }
}

/// Closed-form and autodiff jets of one potential at a point.
type JetPair = Box<dyn Fn(&Vec4) -> (PotentialJet, PotentialJet)>;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_metric_jets_match_autodiff(x in spherical_point(), m in 0.1..1.0f64, q in 0.0..0.9f64) {
        let rn = SphericalStatic::reissner_nordstrom(m, q * m, false).unwrap();
        jets_close(&rn.jet(&x).unwrap(), &metric_jet_autodiff(&rn, &x));
    }

    #[test]
    fn closed_form_potential_jets_match_autodiff(x in cartesian_point(), q in -2.0..2.0f64) {
        let potentials: Vec<JetPair> = vec![
            Box::new(move |x| { let c = Coulomb { charge: q, chart: Chart::Cartesian }; (c.jet_unchecked(x), potential_jet_autodiff(&c, x)) }),
            Box::new(move |x| { let c = UniformE { strength: q, axis: 2 }; (c.jet_unchecked(x), potential_jet_autodiff(&c, x)) }),
            Box::new(move |x| { let c = UniformB { strength: q, axis: 1 }; (c.jet_unchecked(x), potential_jet_autodiff(&c, x)) }),
            Box::new(move |x| { let c = PureGauge { scale: q }; (c.jet_unchecked(x), potential_jet_autodiff(&c, x)) }),
        ];
        for pair in potentials {
            let (a, b) = pair(&x);
            let fa: Vec<f64> = a.a.iter().chain(a.da.iter().flatten()).chain(a.dda.iter().flatten().flatten()).copied().collect();
            let fb: Vec<f64> = b.a.iter().chain(b.da.iter().flatten()).chain(b.dda.iter().flatten().flatten()).copied().collect();
            for (u, v) in fa.iter().zip(&fb) {
                prop_assert!(close(*u, *v, 1e-12), "{} vs {}", u, v);
            }
        }
    }

    #[test]
    fn riemann_symmetries(x in spherical_point(), q in 0.0..0.9f64) {
        let rn = SphericalStatic::reissner_nordstrom(1.0, q, false).unwrap();
        let (r, ric) = base_riemann(&rn, &x).unwrap();
        let scale = r.iter().flatten().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..4 { for j in 0..4 { for k in 0..4 { for l in 0..4 {
            prop_assert!((r[i][j][k][l] + r[i][j][l][k]).abs() <= 1e-10 * scale);
            // First Bianchi identity.
            prop_assert!((r[i][j][k][l] + r[i][k][l][j] + r[i][l][j][k]).abs() <= 1e-10 * scale);
        }}}}
        for i in 0..4 { for j in 0..4 {
            prop_assert!((ric[i][j] - ric[j][i]).abs() <= 1e-10 * scale);
        }}
    }

    #[test]
    fn faraday_is_closed(x in cartesian_point(), q in -2.0..2.0f64) {
        let c = Coulomb { charge: q, chart: Chart::Cartesian };
        let (f, df) = faraday(&c, &x).unwrap();
        let scale = df.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for i in 0..4 { for j in 0..4 {
            prop_assert_eq!(f[i][j], -f[j][i]);
            for k in 0..4 {
                prop_assert_eq!(df[i][j][k], -df[j][i][k]);
                prop_assert!((df[j][k][i] + df[i][j][k] + df[k][i][j]).abs() <= 1e-10 * scale);
            }
        }}
    }
}
