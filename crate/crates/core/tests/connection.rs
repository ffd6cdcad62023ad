use std::f64::consts::PI;

use proptest::prelude::*;
use tidal_core::connection::*;
use tidal_core::fields::*;
use tidal_core::scalar::Scalar;
use tidal_core::tensor::{norm_and_sign, quadratic, Mat4, Tensor3, Variance, Vec4};

fn geometry(m: &dyn MetricField, p: &dyn PotentialField, alpha: f64, x: &Vec4, y: &Vec4) -> LocalGeometry {
    let (_, sign) = norm_and_sign(&m.jet(x).unwrap().g, y).unwrap();
    LocalGeometry::new(m, p, ConnectionSpec::new(alpha), x, sign).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn flat(m: &Mat4) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn flat3(t: &Tensor3) -> Vec<f64> {
    t.iter().flatten().flatten().copied().collect()
}

fn coulomb(q: f64) -> Coulomb {
    Coulomb {
        charge: q,
        chart: Chart::Cartesian,
    }
}

#[test]
fn b_family_vanishes_without_coupling_or_field() {
    let y = [1.3, 0.2, -0.4, 0.1];
    let x = [0.0, 1.0, 2.0, 0.5];
    for geo in [
        geometry(&Minkowski, &coulomb(1.0), 0.0, &x, &y),
        geometry(&Minkowski, &ZeroPotential, 2.0, &x, &y),
    ] {
        let cd = ConnectionData::new(&geo, &y);
        assert!(cd.b.iter().all(|v| *v == 0.0));
        assert!(flat(&cd.b_first).iter().all(|v| *v == 0.0));
        assert!(flat3(&cd.b_second).iter().all(|v| *v == 0.0));
    }
}

#[test]
fn static_observer_in_magnetic_field() {
    let b = UniformB { strength: 0.5, axis: 3 };
    let alpha = 1.5;
    let y = [1.0, 0.0, 0.0, 0.0];
    let geo = geometry(&Minkowski, &b, alpha, &[0.0, 0.3, 0.2, 0.0], &y);
    let cd = ConnectionData::new(&geo, &y);
    assert_eq!(cd.norm, 1.0);
    assert!(cd.b.iter().all(|v| *v == 0.0));
    // Only the ‖y‖F^i_j term survives.
    for i in 0..4 {
        for j in 0..4 {
            assert!((cd.b_first[i][j] + 0.5 * alpha * geo.sample.f_up[i][j]).abs() < 1e-15);
        }
    }
    assert!(cd.b_first[1][2] != 0.0);
}

#[test]
fn pure_gravity_reductions() {
    let s = SphericalStatic::schwarzschild(1.0).unwrap();
    let x = [0.0, 8.0, 1.0, 0.3];
    let y = [1.2, 0.1, 0.02, -0.01];
    let geo = geometry(&s, &ZeroPotential, 0.0, &x, &y);
    let cd = ConnectionData::new(&geo, &y);
    let gamma = geo.sample.gamma;
    for i in 0..4 {
        let mut gyy = 0.0;
        for j in 0..4 {
            let mut gy = 0.0;
            for k in 0..4 {
                gy += gamma[i][j][k] * y[k];
                gyy += gamma[i][j][k] * y[j] * y[k];
                assert_eq!(cd.affine[i][j][k], gamma[i][j][k]);
            }
            assert!((cd.nonlinear[i][j] - gy).abs() < 1e-15);
        }
        assert!((2.0 * cd.spray[i] - gyy).abs() < 1e-15);
    }
    assert!(flat(&strong_torsion(&geo, &y)).iter().all(|v| *v == 0.0));
}

#[test]
fn flat_vacuum_has_trivial_connection() {
    let y = [2.0, 0.3, 0.1, -0.5];
    let geo = geometry(&Minkowski, &ZeroPotential, 1.0, &[0.0; 4], &y);
    let cd = ConnectionData::new(&geo, &y);
    assert!(cd.spray.iter().chain(flat(&cd.nonlinear).iter()).all(|v| *v == 0.0));
}

#[test]
fn offset_fixture_breaks_strong_torsion() {
    let y = [1.3, 0.2, 0.3, 0.0];
    let mut offset = [[0.0; 4]; 4];
    offset[1][0] = 0.02;
    let geo = geometry(&Minkowski, &UniformB { strength: 0.5, axis: 3 }, 1.0, &[0.0; 4], &y)
        .with_spec(ConnectionSpec::new(1.0).with_offset(offset));
    let t = strong_torsion(&geo, &y);
    assert!((t[1][0] + 0.02).abs() < 1e-15);
}

/// Central differences in y of a closed-form quantity.
fn fiber_fd<const N: usize>(f: impl Fn(&Vec4) -> [f64; N], y: &Vec4, h: f64) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; N];
    for k in 0..4 {
        let mut yp = *y;
        let mut ym = *y;
        yp[k] += h;
        ym[k] -= h;
        let (a, b) = (f(&yp), f(&ym));
        for i in 0..N {
            out[i][k] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    out
}

#[test]
fn closed_forms_match_fiber_finite_differences() {
    let c = coulomb(0.8);
    let x = [0.0, 1.2, -0.7, 0.9];
    let y = [1.4, 0.3, -0.2, 0.5];
    let alpha = 1.7;
    let geo = geometry(&Minkowski, &c, alpha, &x, &y);
    let base = BaseState::<f64>::constant(&geo.sample);
    let b_of = |v: &Vec4| b_vector(&base, v, alpha, geo.sign);
    let fd = fiber_fd(b_of, &y, 1e-5);
    let b1 = b_first(&base, &y, alpha, geo.sign);
    for i in 0..4 {
        assert!(max_diff(&fd[i], &b1[i]) < 1e-8, "row {i}");
    }
    let n_of = |v: &Vec4| -> [f64; 16] {
        let n = connection(&base, v, &geo.spec, geo.sign);
        std::array::from_fn(|e| n[e / 4][e % 4])
    };
    let fd = fiber_fd(n_of, &y, 1e-5);
    let g = affine(&base, &y, alpha, geo.sign);
    for e in 0..16 {
        assert!(max_diff(&fd[e], &g[e / 4][e % 4]) < 1e-8);
    }
}

/// `δ_k Q = ∂_k Q − N^j_k ∂Q/∂y^j` with base derivatives by central differences.
#[test]
fn adapted_derivative_matches_finite_differences() {
    let rn = SphericalStatic::reissner_nordstrom(1.0, 0.5, false).unwrap();
    let pot = Coulomb {
        charge: 0.5,
        chart: Chart::Spherical,
    };
    let x = [0.0, 7.0, 1.1, 0.3];
    let y = [1.3, 0.2, 0.05, 0.03];
    let geo = geometry(&rn, &pot, 1.0, &x, &y);
    let got = adapted_derivative(&FiberQuadratic, &geo, &[0.0; 4], &y);
    let g = geo.sample.g();
    let gy: Vec4 = std::array::from_fn(|j| (0..4).map(|m| g[j][m] * y[m]).sum());
    let n = ConnectionData::new(&geo, &y).nonlinear;
    let h = 1e-5;
    for k in 0..4 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        let qp = quadratic(&rn.jet(&xp).unwrap().g, &y, &y);
        let qm = quadratic(&rn.jet(&xm).unwrap().g, &y, &y);
        let mut expect = (qp - qm) / (2.0 * h);
        for j in 0..4 {
            expect -= n[j][k] * 2.0 * gy[j];
        }
        assert!(
            (got[k] - expect).abs() < 1e-8 * (1.0 + expect.abs()),
            "k={k}: {} vs {expect}",
            got[k]
        );
    }
}

struct Constant;

impl PhaseField for Constant {
    fn components(&self) -> usize {
        16
    }

    fn eval<S: Scalar>(&self, _: &LocalGeometry, _: &Vec4<S>, _: &Vec4<S>) -> Vec<S> {
        (0..16).map(|k| S::cst(k as f64 - 3.5)).collect()
    }
}

#[test]
fn constant_tensor_is_parallel_in_flat_pure_gravity() {
    let y = [1.0, 0.4, 0.0, 0.2];
    let geo = geometry(&Minkowski, &ZeroPotential, 0.0, &[0.0, 1.0, 1.0, 1.0], &y);
    let d = d_covariant_derivative(&Constant, &[Variance::Up, Variance::Down], &geo, &[0.0; 4], &y);
    assert_eq!(d.len(), 64);
    assert!(d.iter().all(|v| *v == 0.0));
}

#[test]
fn section_is_parallel_up_to_the_faraday_tensor() {
    let s = SphericalStatic::reissner_nordstrom(1.0, 0.4, false).unwrap();
    let pot = Coulomb {
        charge: 0.4,
        chart: Chart::Spherical,
    };
    let x = [0.0, 9.0, 0.8, 1.0];
    let y = [1.2, -0.1, 0.01, 0.02];
    for alpha in [0.0, 1.0, -2.0] {
        let geo = geometry(&s, &pot, alpha, &x, &y);
        let dl = section_derivative(&geo, &y);
        let f = geo.sample.f;
        let scale = max_abs(&flat(&f)).max(1e-3);
        for i in 0..4 {
            for j in 0..4 {
                assert!((dl[i][j] - 0.5 * alpha * f[i][j]).abs() < 1e-12 * scale);
            }
        }
    }
}

fn timelike() -> impl Strategy<Value = Vec4> {
    (0.8..2.0f64, -0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64).prop_map(|(a, b, c, d)| [a, b, c, d])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn connection_homogeneity(y in timelike(), lambda in 0.1..10.0f64, alpha in -3.0..3.0f64, q in -1.0..1.0f64) {
        let c = coulomb(q);
        let x = [0.0, 1.1, 0.7, -0.4];
        let geo = geometry(&Minkowski, &c, alpha, &x, &y);
        let base = BaseState::<f64>::constant(&geo.sample);
        let ly = y.map(|v| v * lambda);
        let (g1, g2) = (spray(&base, &y, alpha, geo.sign), spray(&base, &ly, alpha, geo.sign));
        let (n1, n2) = (connection(&base, &y, &geo.spec, geo.sign), connection(&base, &ly, &geo.spec, geo.sign));
        let (a1, a2) = (affine(&base, &y, alpha, geo.sign), affine(&base, &ly, alpha, geo.sign));
        let tol = 1e-12 * (1.0 + max_abs(&g2));
        for i in 0..4 {
            prop_assert!((g2[i] - lambda * lambda * g1[i]).abs() <= tol);
            for j in 0..4 {
                prop_assert!((n2[i][j] - lambda * n1[i][j]).abs() <= tol);
                for k in 0..4 {
                    prop_assert!((a2[i][j][k] - a1[i][j][k]).abs() <= 1e-12 * (1.0 + a1[i][j][k].abs()));
                }
            }
        }
    }

    #[test]
    fn strong_torsion_vanishes(y in timelike(), alpha in -3.0..3.0f64, r in 3.0..40.0f64, th in 0.3..(PI - 0.3)) {
        let s = SphericalStatic::reissner_nordstrom(1.0, 0.6, false).unwrap();
        let pot = Coulomb { charge: 0.6, chart: Chart::Spherical };
        let x = [0.0, r, th, 0.5];
        let g = s.jet(&x).unwrap().g;
        // Keep y timelike in the curved metric by scaling spatial parts.
        let y = [y[0] / (-g[0][0]).sqrt(), y[1] / g[1][1].sqrt(), y[2] / g[2][2].sqrt(), y[3] / g[3][3].sqrt()];
        let geo = geometry(&s, &pot, alpha, &x, &y);
        let t = strong_torsion(&geo, &y);
        let n = ConnectionData::new(&geo, &y).nonlinear;
        prop_assert!(max_abs(&flat(&t)) <= 1e-12 * max_abs(&flat(&n)).max(1e-300));
    }

    #[test]
    fn b_is_odd_in_alpha(y in timelike(), alpha in 0.1..3.0f64) {
        let c = coulomb(0.9);
        let x = [0.0, 1.0, 1.0, 0.5];
        let plus = ConnectionData::new(&geometry(&Minkowski, &c, alpha, &x, &y), &y);
        let minus = ConnectionData::new(&geometry(&Minkowski, &c, -alpha, &x, &y), &y);
        for i in 0..4 {
            prop_assert_eq!(plus.b[i], -minus.b[i]);
        }
    }
}
