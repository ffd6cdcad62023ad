//! Deviation fields along worldlines.
//!
//! The tidal form integrates `D²w/dt² = E^i_j w^j` with D the affine
//! connection of the spray and reference vector y. Along the worldline
//! `D w^i/dt = dw^i/dt + N^i_j w^j =: v^i`, so the first-order system is
//!
//! ```text
//! dw/dt = v − N w,    dv/dt = E w − N v.
//! ```
//!
//! The classical form integrates the flat-space equation
//! `d²w^i/ds² = α(u^j ∂_k F^i_j w^k + F^i_k dw^k/ds)` including the velocity
//! term. The two describe the same family of worldlines when u is unit
//! timelike and the initial rate keeps the neighbor's normalization,
//! `g(u, dw/ds) = 0`; the classical form linearizes the Lorentz equation
//! at fixed `‖u‖ = 1` while the tidal form linearizes the spray, whose
//! force term scales with `‖y‖`.
//!
//! The deviation rate has two channels: the adapted rate `δw/dt` above and
//! the Levi-Civita rate `∇w/dt = dw/dt + γ^i_jk y^j w^k`. They differ by the
//! contortion, `∇w/dt = δw/dt − B^i_j w^j`.

use serde::{Deserialize, Serialize};

use super::integrator::{integrate, Integration, IntegratorConfig, Truncation};
use super::{autoparallel_rhs, state_header, truncation_note};
use crate::connection::{b_first, connection, BaseState, ConnectionSpec, LocalGeometry};
use crate::curvature::connection_and_tidal;
use crate::error::{GeometryError, Result};
use crate::fields::{Chart, FieldSample, MetricField, PotentialField};
use crate::table::Table;
use crate::tensor::{mat_vec, norm_and_sign, quadratic, Mat4, Vec4};

/// Which rate the `v` channel of a deviation sample holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFrame {
    /// `δw/dt`, the D-covariant rate.
    Adapted,
    /// `∇w/dt`, the Levi-Civita rate.
    LeviCivita,
}

/// Initial data for a worldline and its deviation. `v0` is the adapted rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationInit {
    pub x0: Vec4,
    pub y0: Vec4,
    pub w0: Vec4,
    pub v0: Vec4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviationSample {
    pub t: f64,
    pub x: Vec4,
    pub y: Vec4,
    pub w: Vec4,
    pub v: Vec4,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub samples: Vec<DeviationSample>,
    pub rate: RateFrame,
    pub truncation: Option<Truncation>,
    pub steps: usize,
}

impl Deviation {
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(state_header(true));
        for s in &self.samples {
            let mut row = vec![s.t];
            for part in [&s.x, &s.y, &s.w, &s.v] {
                row.extend_from_slice(part);
            }
            table.push(row);
        }
        if let Some(cut) = &self.truncation {
            table.footer.push(truncation_note(cut));
        }
        table
    }

    fn from_run(run: Integration<16>, rate: RateFrame) -> Self {
        let samples = run
            .times
            .iter()
            .zip(&run.states)
            .map(|(&t, s)| {
                let (x, y, w, v) = split16(s);
                DeviationSample { t, x, y, w, v }
            })
            .collect();
        Self {
            samples,
            rate,
            truncation: run.truncation,
            steps: run.steps,
        }
    }
}

fn split16(s: &[f64; 16]) -> (Vec4, Vec4, Vec4, Vec4) {
    let part = |o: usize| -> Vec4 { std::array::from_fn(|i| s[o + i]) };
    (part(0), part(4), part(8), part(12))
}

fn pack16(a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> [f64; 16] {
    std::array::from_fn(|i| match i / 4 {
        0 => a[i % 4],
        1 => b[i % 4],
        2 => c[i % 4],
        _ => d[i % 4],
    })
}

fn initial_sign(metric: &dyn MetricField, potential: &dyn PotentialField, init: &DeviationInit) -> Result<f64> {
    let g = metric.jet(&init.x0)?.g;
    potential.check_chart(&init.x0)?;
    for v in [&init.w0, &init.v0] {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite("deviation initial data".into()));
        }
    }
    Ok(norm_and_sign(&g, &init.y0)?.1)
}

fn checked_geometry(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    sign: f64,
    x: &Vec4,
    y: &Vec4,
) -> Result<LocalGeometry> {
    let geo = LocalGeometry::new(metric, potential, *spec, x, sign)?;
    let q = quadratic(geo.sample.g(), y, y);
    if q * sign > 0.0 {
        Ok(geo)
    } else {
        Err(GeometryError::NullFiber {
            quadratic: q,
            tolerance: 0.0,
        })
    }
}

/// Worldline and deviation in the tidal form, rate channel `δw/dt`.
pub fn integrate_deviation_tidal(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    init: &DeviationInit,
    cfg: &IntegratorConfig,
) -> Result<Deviation> {
    let sign = initial_sign(metric, potential, init)?;
    let rhs = |_: f64, s: &[f64; 16]| {
        let (x, y, w, v) = split16(s);
        let geo = checked_geometry(metric, potential, spec, sign, &x, &y)?;
        let (n, e) = connection_and_tidal(&geo, &y);
        let ny = mat_vec(&n, &y);
        let nw = mat_vec(&n, &w);
        let nv = mat_vec(&n, &v);
        let ew = mat_vec(&e, &w);
        let dy = ny.map(|c| -c);
        let dw = std::array::from_fn(|i| v[i] - nw[i]);
        let dv = std::array::from_fn(|i| ew[i] - nv[i]);
        Ok(pack16(&y, &dy, &dw, &dv))
    };
    let y0 = pack16(&init.x0, &init.y0, &init.w0, &init.v0);
    Ok(Deviation::from_run(integrate(rhs, y0, cfg)?, RateFrame::Adapted))
}

fn nonlinear_at(geo: &LocalGeometry, y: &Vec4) -> Mat4 {
    connection(&BaseState::<f64>::constant(&geo.sample), y, &geo.spec, geo.sign)
}

/// Finite-difference deviation from a reference worldline and a neighbor
/// started at `(x₀ + εw₀, y₀ + ε dw/dt(0))`, integrated as one system so both
/// share the same steps. Reports `w = (x' − x)/ε` and the adapted rate.
pub fn two_worldline_oracle(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    init: &DeviationInit,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<Deviation> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(GeometryError::InvalidParameter {
            name: "eps".into(),
            reason: "must be positive".into(),
        });
    }
    let sign = initial_sign(metric, potential, init)?;
    let geo0 = LocalGeometry::new(metric, potential, *spec, &init.x0, sign)?;
    let n0 = nonlinear_at(&geo0, &init.y0);
    let nw0 = mat_vec(&n0, &init.w0);
    let x1: Vec4 = std::array::from_fn(|i| init.x0[i] + eps * init.w0[i]);
    let y1: Vec4 = std::array::from_fn(|i| init.y0[i] + eps * (init.v0[i] - nw0[i]));
    let rhs = |_: f64, s: &[f64; 16]| {
        let (xa, ya, xb, yb) = split16(s);
        let (dxa, dya) = autoparallel_rhs(metric, potential, spec, sign, &xa, &ya)?;
        let (dxb, dyb) = autoparallel_rhs(metric, potential, spec, sign, &xb, &yb)?;
        Ok(pack16(&dxa, &dya, &dxb, &dyb))
    };
    let run = integrate(rhs, pack16(&init.x0, &init.y0, &x1, &y1), cfg)?;
    let mut samples = Vec::with_capacity(run.times.len());
    for (&t, s) in run.times.iter().zip(&run.states) {
        let (x, y, xb, yb) = split16(s);
        let w: Vec4 = std::array::from_fn(|i| (xb[i] - x[i]) / eps);
        let wdot: Vec4 = std::array::from_fn(|i| (yb[i] - y[i]) / eps);
        let geo = LocalGeometry::new(metric, potential, *spec, &x, sign)?;
        let nw = mat_vec(&nonlinear_at(&geo, &y), &w);
        let v = std::array::from_fn(|i| wdot[i] + nw[i]);
        samples.push(DeviationSample { t, x, y, w, v });
    }
    Ok(Deviation {
        samples,
        rate: RateFrame::Adapted,
        truncation: run.truncation,
        steps: run.steps,
    })
}

/// Tolerance on `g(u, u) = −1` demanded by the classical form.
const UNIT_TOLERANCE: f64 = 1e-10;

/// Flat-space deviation in the classical form, rate channel `∇w/ds`.
///
/// `init.v0` is an adapted rate and is converted with `∇w/ds = δw/ds − B w`.
/// Requires a flat metric in Cartesian coordinates and a unit timelike `y₀`.
pub fn integrate_deviation_classical(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    alpha: f64,
    init: &DeviationInit,
    cfg: &IntegratorConfig,
) -> Result<Deviation> {
    if !metric.is_flat() || metric.chart() != Chart::Cartesian {
        return Err(GeometryError::Unsupported(format!(
            "the classical deviation equation is only defined for flat Cartesian metrics, not '{}'",
            metric.name()
        )));
    }
    let sign = initial_sign(metric, potential, init)?;
    let g0 = metric.jet(&init.x0)?.g;
    let q = quadratic(&g0, &init.y0, &init.y0);
    if (q + 1.0).abs() > UNIT_TOLERANCE {
        return Err(GeometryError::InvalidParameter {
            name: "y0".into(),
            reason: format!("classical deviation needs g(u,u) = -1, got {q}"),
        });
    }
    let spec = ConnectionSpec::new(alpha);
    let geo0 = LocalGeometry::new(metric, potential, spec, &init.x0, sign)?;
    let b0 = b_first(&BaseState::<f64>::constant(&geo0.sample), &init.y0, alpha, sign);
    let bw0 = mat_vec(&b0, &init.w0);
    let rate0: Vec4 = std::array::from_fn(|i| init.v0[i] - bw0[i]);

    let rhs = |_: f64, s: &[f64; 16]| {
        let (x, u, w, wd) = split16(s);
        let f = FieldSample::new(metric, potential, &x)?;
        let du = std::array::from_fn(|i| alpha * (0..4).map(|j| f.f_up[i][j] * u[j]).sum::<f64>());
        let dwd = std::array::from_fn(|i| {
            let mut s = 0.0;
            for k in 0..4 {
                let mut tidal = 0.0;
                for j in 0..4 {
                    tidal += u[j] * f.df_up[i][j][k];
                }
                s += tidal * w[k] + f.f_up[i][k] * wd[k];
            }
            alpha * s
        });
        Ok(pack16(&u, &du, &wd, &dwd))
    };
    let run = integrate(rhs, pack16(&init.x0, &init.y0, &init.w0, &rate0), cfg)?;
    Ok(Deviation::from_run(run, RateFrame::LeviCivita))
}

/// Shifts `init.v0` along `y₀` so the Levi-Civita rate `v0 − B w0` is
/// g-orthogonal to a unit timelike `y₀`, the precondition under which the
/// classical and tidal forms describe the same neighbors.
pub fn orthogonalize_rate(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    alpha: f64,
    init: &DeviationInit,
) -> Result<DeviationInit> {
    let sign = initial_sign(metric, potential, init)?;
    let sample = FieldSample::new(metric, potential, &init.x0)?;
    let g = sample.g();
    let q = quadratic(g, &init.y0, &init.y0);
    if (q + 1.0).abs() > UNIT_TOLERANCE {
        return Err(GeometryError::InvalidParameter {
            name: "y0".into(),
            reason: format!("needs g(u,u) = -1, got {q}"),
        });
    }
    let b = b_first(&BaseState::<f64>::constant(&sample), &init.y0, alpha, sign);
    let bw = mat_vec(&b, &init.w0);
    let rate: Vec4 = std::array::from_fn(|i| init.v0[i] - bw[i]);
    let k = quadratic(g, &init.y0, &rate);
    let mut out = *init;
    for i in 0..4 {
        out.v0[i] += k * init.y0[i];
    }
    Ok(out)
}

/// Re-expresses the rate channel of a deviation run in the other frame.
pub fn convert_deviation_frame(
    metric: &dyn MetricField,
    potential: &dyn PotentialField,
    spec: &ConnectionSpec,
    dev: &Deviation,
    to: RateFrame,
) -> Result<Deviation> {
    if dev.rate == to {
        return Ok(dev.clone());
    }
    let direction = match to {
        RateFrame::LeviCivita => -1.0,
        RateFrame::Adapted => 1.0,
    };
    let mut out = dev.clone();
    out.rate = to;
    for s in &mut out.samples {
        let sample = FieldSample::new(metric, potential, &s.x)?;
        let (_, sign) = norm_and_sign(sample.g(), &s.y)?;
        let b = b_first(&BaseState::<f64>::constant(&sample), &s.y, spec.alpha, sign);
        let bw = mat_vec(&b, &s.w);
        for i in 0..4 {
            s.v[i] += direction * bw[i];
        }
    }
    Ok(out)
}
