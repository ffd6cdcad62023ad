//! Worldlines of the α-spray and their deviation fields.
//!
//! Worldlines solve `dy^i/dt + N^i_j(x, y) y^j = 0` with `y = dx/dt`, which
//! for the Randers spray is the Lorentz equation
//! `dy^i/dt + γ^i_jk y^j y^k − α‖y‖F^i_j y^j = 0` in an arbitrary parameter t.
//! When the initial velocity is normalized to `g(y, y) = −1` the norm is
//! conserved and t coincides with proper time.

mod deviation;
mod integrator;

pub use deviation::{
    convert_deviation_frame, integrate_deviation_classical, integrate_deviation_tidal, orthogonalize_rate,
    two_worldline_oracle, Deviation, DeviationInit, DeviationSample, RateFrame,
};
pub use integrator::{integrate, Integration, IntegratorConfig, Method, Truncation};

use serde::Serialize;

use crate::connection::{connection, BaseState, ConnectionSpec};
use crate::error::{GeometryError, Result};
use crate::fields::{MetricField, PotentialField};
use crate::table::Table;
use crate::tensor::{metric_inverse, norm_and_sign, quadratic, Mat4, Tensor3, Vec4};

/// Rescales `y` to `g(y', y') = target` with `target = ±1`.
pub fn normalize_velocity(g: &Mat4, y: &Vec4, target: f64) -> Result<Vec4> {
    let (n, sign) = norm_and_sign(g, y)?;
    if sign != target.signum() || target.abs() != 1.0 {
        return Err(GeometryError::SignMismatch { actual: sign, target });
    }
    Ok(y.map(|v| v / n))
}

/// Metric, Christoffel symbols and Faraday tensor at one point, without
/// the derivative layers the curvature pipeline needs.
pub(crate) fn point_fields(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    x: &Vec4,
) -> Result<BaseState<f64>> {
    let jet = metric.jet(x)?;
    let pj = potential.jet(x)?;
    let ginv = metric_inverse(&jet.g)?;
    let mut gamma: Tensor3 = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in j..4 {
                let mut s = 0.0;
                for m in 0..4 {
                    s += ginv[i][m] * (jet.dg[m][j][k] + jet.dg[m][k][j] - jet.dg[j][k][m]);
                }
                gamma[i][j][k] = 0.5 * s;
                gamma[i][k][j] = 0.5 * s;
            }
        }
    }
    let f: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| pj.da[j][i] - pj.da[i][j]));
    let f_up = std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|h| ginv[i][h] * f[h][j]).sum()));
    Ok(BaseState {
        g: jet.g,
        gamma,
        f,
        f_up,
    })
}

fn causal_sign_at(base: &BaseState<f64>, y: &Vec4, sign: f64) -> Result<()> {
    let q = quadratic(&base.g, y, y);
    if q * sign > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::NullFiber {
            quadratic: q,
            tolerance: 0.0,
        })
    }
}

/// `(dx/dt, dy/dt)` in the Lorentz form
/// `dy^i/dt = −γ^i_jk y^j y^k + α‖y‖F^i_j y^j`.
pub fn worldline_rhs(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    alpha: f64,
    x: &Vec4,
    y: &Vec4,
) -> Result<(Vec4, Vec4)> {
    let base = point_fields(metric, potential, x)?;
    let (n, _) = norm_and_sign(&base.g, y)?;
    let dy = std::array::from_fn(|i| {
        let mut s = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                s -= base.gamma[i][j][k] * y[j] * y[k];
            }
            s += alpha * n * base.f_up[i][j] * y[j];
        }
        s
    });
    Ok((*y, dy))
}

/// `(dx/dt, dy/dt)` in the autoparallel form `dy^i/dt = −N^i_j y^j`.
pub fn autoparallel_rhs(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    sign: f64,
    x: &Vec4,
    y: &Vec4,
) -> Result<(Vec4, Vec4)> {
    let base = point_fields(metric, potential, x)?;
    causal_sign_at(&base, y, sign)?;
    let n = connection(&base, y, spec, sign);
    let dy = std::array::from_fn(|i| -(0..4).map(|j| n[i][j] * y[j]).sum::<f64>());
    Ok((*y, dy))
}

/// Sampled worldline.
#[derive(Clone, Debug, Serialize)]
pub struct Worldline {
    pub t: Vec<f64>,
    pub x: Vec<Vec4>,
    pub y: Vec<Vec4>,
    pub truncation: Option<Truncation>,
    pub steps: usize,
}

impl Worldline {
    fn from_run(run: Integration<8>) -> Self {
        Self {
            x: run.states.iter().map(|s| [s[0], s[1], s[2], s[3]]).collect(),
            y: run.states.iter().map(|s| [s[4], s[5], s[6], s[7]]).collect(),
            t: run.times,
            truncation: run.truncation,
            steps: run.steps,
        }
    }

    pub fn to_table(&self) -> Table {
        let mut table = Table::new(state_header(false));
        for (i, t) in self.t.iter().enumerate() {
            let mut row = vec![*t];
            row.extend_from_slice(&self.x[i]);
            row.extend_from_slice(&self.y[i]);
            table.push(row);
        }
        if let Some(cut) = &self.truncation {
            table.footer.push(truncation_note(cut));
        }
        table
    }
}

pub(crate) fn state_header(deviation: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let groups: &[&str] = if deviation { &["x", "y", "w", "v"] } else { &["x", "y"] };
    for g in groups {
        for i in 0..4 {
            h.push(format!("{g}{i}"));
        }
    }
    h
}

pub(crate) fn truncation_note(cut: &Truncation) -> String {
    format!(
        "truncated: t={:?} x=[{:?},{:?},{:?},{:?}] reason: {}",
        cut.t, cut.point[0], cut.point[1], cut.point[2], cut.point[3], cut.reason
    )
}

fn pack(x: &Vec4, y: &Vec4) -> [f64; 8] {
    [x[0], x[1], x[2], x[3], y[0], y[1], y[2], y[3]]
}

fn split8(s: &[f64; 8]) -> (Vec4, Vec4) {
    ([s[0], s[1], s[2], s[3]], [s[4], s[5], s[6], s[7]])
}

/// Charged worldline from `(x₀, y₀)` as an autoparallel of the spray connection.
pub fn integrate_worldline(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    x0: &Vec4,
    y0: &Vec4,
    cfg: &IntegratorConfig,
) -> Result<Worldline> {
    let g0 = metric.jet(x0)?.g;
    potential.check_chart(x0)?;
    let (_, sign) = norm_and_sign(&g0, y0)?;
    let rhs = |_: f64, s: &[f64; 8]| {
        let (x, y) = split8(s);
        let (dx, dy) = autoparallel_rhs(metric, potential, spec, sign, &x, &y)?;
        Ok(pack(&dx, &dy))
    };
    Ok(Worldline::from_run(integrate(rhs, pack(x0, y0), cfg)?))
}

/// Metric geodesic `dy^i/dt = −γ^i_jk y^j y^k`, computed from the
/// Christoffel symbols alone. Reference path for the α = 0 reduction.
pub fn integrate_geodesic(metric: &dyn MetricField, x0: &Vec4, y0: &Vec4, cfg: &IntegratorConfig) -> Result<Worldline> {
    let rhs = |_: f64, s: &[f64; 8]| {
        let (x, y) = split8(s);
        let jet = metric.jet(&x)?;
        let gamma = crate::fields::christoffel_from_jet(&jet)?.0;
        let dy: Vec4 = std::array::from_fn(|i| {
            let mut a = 0.0;
            for j in 0..4 {
                for k in 0..4 {
                    a -= gamma[i][j][k] * y[j] * y[k];
                }
            }
            a
        });
        Ok(pack(&y, &dy))
    };
    Ok(Worldline::from_run(integrate(rhs, pack(x0, y0), cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Minkowski, SphericalStatic, UniformB, ZeroPotential};

    #[test]
    fn normalize_examples() {
        let eta = Minkowski.jet_unchecked(&[0.0; 4]).g;
        assert_eq!(
            normalize_velocity(&eta, &[2.0, 0.0, 0.0, 0.0], -1.0).unwrap(),
            [1.0, 0.0, 0.0, 0.0]
        );
        let s = SphericalStatic::schwarzschild(1.0).unwrap();
        let g = s.jet_unchecked(&[0.0, 10.0, 1.0, 0.0]).g;
        let y = normalize_velocity(&g, &[1.0, 0.0, 0.0, 0.0], -1.0).unwrap();
        assert!((y[0] - 1.0 / 0.8f64.sqrt()).abs() < 1e-15);
        assert!((quadratic(&g, &y, &y) + 1.0).abs() < 1e-13);
        assert!(matches!(
            normalize_velocity(&eta, &[0.0, 1.0, 0.0, 0.0], -1.0),
            Err(GeometryError::SignMismatch { .. })
        ));
    }

    #[test]
    fn lorentz_form_equals_autoparallel_form() {
        let b = UniformB { strength: 0.7, axis: 3 };
        let spec = ConnectionSpec::new(1.3);
        let x = [0.0, 0.3, -0.2, 0.1];
        let y = [1.4, 0.3, 0.5, -0.2];
        let (_, sign) = norm_and_sign(&Minkowski.jet_unchecked(&x).g, &y).unwrap();
        let (_, a) = worldline_rhs(&Minkowski, &b, spec.alpha, &x, &y).unwrap();
        let (_, c) = autoparallel_rhs(&Minkowski, &b, &spec, sign, &x, &y).unwrap();
        for i in 0..4 {
            assert!((a[i] - c[i]).abs() < 1e-14);
        }
        let (_, free) = worldline_rhs(&Minkowski, &ZeroPotential, 2.0, &x, &y).unwrap();
        assert_eq!(free, [0.0; 4]);
    }
}
