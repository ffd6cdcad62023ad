//! Compiled-in metrics and potentials with closed-form derivatives.
//!
//! Units are geometric Gaussian (c = G = 1, Coulomb constant 1). Potentials
//! follow `A_0 = Φ`, so `coulomb(Q)` is `A_0 = Q/r` and `uniform_e(E)` has
//! `A_0 = −E x^a`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use super::{
    AnalyticMetric, AnalyticPotential, Chart, FieldSpec, MetricField, MetricJet, PotentialField, PotentialJet,
};
use crate::error::{GeometryError, Result};
use crate::scalar::Scalar;
use crate::tensor::{zero_mat, Mat4, Vec4};

/// Catalog listing entry.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub chart: &'static str,
    pub description: &'static str,
}

pub fn metric_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "minkowski",
            params: &[],
            chart: "cartesian",
            description: "flat metric diag(-1, 1, 1, 1)",
        },
        CatalogEntry {
            name: "schwarzschild",
            params: &["M"],
            chart: "spherical",
            description: "exterior Schwarzschild, guard r > 2M(1 + 1e-6)",
        },
        CatalogEntry {
            name: "reissner_nordstrom",
            params: &["M", "Q", "allow_naked"],
            chart: "spherical",
            description: "Reissner-Nordstrom exterior, f = 1 - 2M/r + Q^2/r^2",
        },
    ]
}

pub fn potential_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "zero",
            params: &[],
            chart: "any",
            description: "A = 0",
        },
        CatalogEntry {
            name: "uniform_b",
            params: &["B", "axis"],
            chart: "cartesian",
            description: "uniform magnetic field along axis; z-axis: A = B x dy",
        },
        CatalogEntry {
            name: "uniform_e",
            params: &["E", "axis"],
            chart: "cartesian",
            description: "uniform electric field along axis; A_0 = -E x^axis",
        },
        CatalogEntry {
            name: "coulomb",
            params: &["Q"],
            chart: "any",
            description: "point charge at the origin, A_0 = Q/r",
        },
        CatalogEntry {
            name: "pure_gauge",
            params: &["c"],
            chart: "any",
            description: "A = d(chi), chi = c (t x1 + x2^2 x3); F = 0",
        },
    ]
}

struct Params<'a> {
    field: &'a str,
    map: &'a BTreeMap<String, Value>,
    used: BTreeSet<&'a str>,
}

impl<'a> Params<'a> {
    fn new(field: &'a str, map: &'a BTreeMap<String, Value>) -> Self {
        Self {
            field,
            map,
            used: BTreeSet::new(),
        }
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> GeometryError {
        GeometryError::InvalidParameter {
            name: format!("{}.{}", self.field, key),
            reason: reason.into(),
        }
    }

    fn number(&mut self, key: &'a str, default: Option<f64>) -> Result<f64> {
        self.used.insert(key);
        match self.map.get(key) {
            None => default.ok_or_else(|| self.invalid(key, "missing")),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(x),
                _ => Err(self.invalid(key, "expected a finite number")),
            },
        }
    }

    fn flag(&mut self, key: &'a str) -> Result<bool> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.invalid(key, "expected a boolean")),
        }
    }

    fn axis(&mut self, key: &'a str) -> Result<usize> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(3),
            Some(Value::String(s)) => match s.as_str() {
                "x" => Ok(1),
                "y" => Ok(2),
                "z" => Ok(3),
                _ => Err(self.invalid(key, "expected one of \"x\", \"y\", \"z\"")),
            },
            Some(_) => Err(self.invalid(key, "expected one of \"x\", \"y\", \"z\"")),
        }
    }

    fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.used.contains(key.as_str()) {
                return Err(self.invalid(key, "unknown parameter"));
            }
        }
        Ok(())
    }
}

/// Looks up a metric by catalog name.
pub fn builtin_metric(spec: &FieldSpec) -> Result<Arc<dyn MetricField>> {
    let mut p = Params::new(&spec.name, &spec.params);
    let field: Arc<dyn MetricField> = match spec.name.as_str() {
        "minkowski" => Arc::new(Minkowski),
        "schwarzschild" => {
            let m = p.number("M", None)?;
            Arc::new(SphericalStatic::schwarzschild(m)?)
        }
        "reissner_nordstrom" => {
            let m = p.number("M", None)?;
            let q = p.number("Q", None)?;
            let naked = p.flag("allow_naked")?;
            Arc::new(SphericalStatic::reissner_nordstrom(m, q, naked)?)
        }
        other => {
            return Err(GeometryError::UnknownField {
                kind: "metric",
                name: other.to_string(),
            })
        }
    };
    p.finish()?;
    Ok(field)
}

/// Looks up a potential by catalog name, written in the given chart.
pub fn builtin_potential(spec: &FieldSpec, chart: Chart) -> Result<Arc<dyn PotentialField>> {
    let mut p = Params::new(&spec.name, &spec.params);
    let field: Arc<dyn PotentialField> = match spec.name.as_str() {
        "zero" => Arc::new(ZeroPotential),
        "uniform_b" => {
            let b = p.number("B", None)?;
            let axis = p.axis("axis")?;
            require_cartesian("uniform_b", chart)?;
            Arc::new(UniformB { strength: b, axis })
        }
        "uniform_e" => {
            let e = p.number("E", None)?;
            let axis = p.axis("axis")?;
            require_cartesian("uniform_e", chart)?;
            Arc::new(UniformE { strength: e, axis })
        }
        "coulomb" => {
            let q = p.number("Q", None)?;
            Arc::new(Coulomb { charge: q, chart })
        }
        "pure_gauge" => {
            let c = p.number("c", Some(1.0))?;
            Arc::new(PureGauge { scale: c })
        }
        other => {
            return Err(GeometryError::UnknownField {
                kind: "potential",
                name: other.to_string(),
            })
        }
    };
    p.finish()?;
    Ok(field)
}

fn require_cartesian(name: &str, chart: Chart) -> Result<()> {
    match chart {
        Chart::Cartesian => Ok(()),
        Chart::Spherical => Err(GeometryError::Unsupported(format!(
            "potential '{name}' is only defined in the cartesian chart"
        ))),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Minkowski;

const ETA: Mat4 = [
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

impl MetricField for Minkowski {
    fn name(&self) -> &str {
        "minkowski"
    }
    fn chart(&self) -> Chart {
        Chart::Cartesian
    }
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
    fn jet_unchecked(&self, _x: &Vec4) -> MetricJet {
        MetricJet {
            g: ETA,
            dg: [[[0.0; 4]; 4]; 4],
            ddg: [[[[0.0; 4]; 4]; 4]; 4],
        }
    }
    fn is_flat(&self) -> bool {
        true
    }
}

impl AnalyticMetric for Minkowski {
    fn components<S: Scalar>(&self, _x: &Vec4<S>) -> Mat4<S> {
        std::array::from_fn(|i| std::array::from_fn(|j| S::cst(ETA[i][j])))
    }
}

/// Static spherically symmetric metric
/// `−f dt² + dr²/f + r² dΩ²` with `f = 1 − 2M/r + Q²/r²`.
#[derive(Clone, Copy, Debug)]
pub struct SphericalStatic {
    pub mass: f64,
    pub charge: f64,
    name: &'static str,
    r_guard: f64,
}

/// Relative margin kept outside the outer horizon.
pub const HORIZON_MARGIN: f64 = 1e-6;
/// Minimum `sin θ` accepted by spherical charts.
pub const AXIS_GUARD: f64 = 1e-8;

impl SphericalStatic {
    pub fn schwarzschild(mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "schwarzschild.M".into(),
                reason: "mass must be positive".into(),
            });
        }
        Ok(Self {
            mass,
            charge: 0.0,
            name: "schwarzschild",
            r_guard: 2.0 * mass * (1.0 + HORIZON_MARGIN),
        })
    }

    pub fn reissner_nordstrom(mass: f64, charge: f64, allow_naked: bool) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "reissner_nordstrom.M".into(),
                reason: "mass must be positive".into(),
            });
        }
        let disc = mass * mass - charge * charge;
        let r_guard = if disc >= 0.0 {
            (mass + disc.sqrt()) * (1.0 + HORIZON_MARGIN)
        } else if allow_naked {
            HORIZON_MARGIN * mass.max(charge.abs())
        } else {
            return Err(GeometryError::InvalidParameter {
                name: "reissner_nordstrom.Q".into(),
                reason: "Q^2 > M^2 (naked singularity); set allow_naked to override".into(),
            });
        };
        Ok(Self {
            mass,
            charge,
            name: "reissner_nordstrom",
            r_guard,
        })
    }

    pub fn horizon_guard(&self) -> f64 {
        self.r_guard
    }

    /// `(f, f', f'')` as functions of r.
    fn lapse(&self, r: f64) -> (f64, f64, f64) {
        let (m, q2) = (self.mass, self.charge * self.charge);
        let f = 1.0 - 2.0 * m / r + q2 / (r * r);
        let f1 = 2.0 * m / (r * r) - 2.0 * q2 / r.powi(3);
        let f2 = -4.0 * m / r.powi(3) + 6.0 * q2 / r.powi(4);
        (f, f1, f2)
    }
}

fn check_spherical(name: &str, x: &Vec4, r_guard: f64) -> Result<()> {
    let violation = |reason: String| GeometryError::ChartViolation {
        field: name.to_string(),
        point: *x,
        reason,
    };
    if !x.iter().all(|v| v.is_finite()) {
        return Err(violation("non-finite coordinate".into()));
    }
    if !(x[1] > r_guard) {
        return Err(violation(format!("r = {} not above guard {}", x[1], r_guard)));
    }
    if x[2].sin().abs() < AXIS_GUARD {
        return Err(violation(format!("theta = {} on the polar axis", x[2])));
    }
    Ok(())
}

impl MetricField for SphericalStatic {
    fn name(&self) -> &str {
        self.name
    }

    fn chart(&self) -> Chart {
        Chart::Spherical
    }

    fn params(&self) -> Vec<(String, f64)> {
        let mut p = vec![("M".to_string(), self.mass)];
        if self.name == "reissner_nordstrom" {
            p.push(("Q".to_string(), self.charge));
        }
        p
    }

    fn check_chart(&self, x: &Vec4) -> Result<()> {
        check_spherical(self.name, x, self.r_guard)
    }

    fn jet_unchecked(&self, x: &Vec4) -> MetricJet {
        let (r, th) = (x[1], x[2]);
        let (f, f1, f2) = self.lapse(r);
        let (s, c) = th.sin_cos();
        let mut jet = MetricJet {
            g: zero_mat(),
            dg: [[[0.0; 4]; 4]; 4],
            ddg: [[[[0.0; 4]; 4]; 4]; 4],
        };
        jet.g[0][0] = -f;
        jet.g[1][1] = 1.0 / f;
        jet.g[2][2] = r * r;
        jet.g[3][3] = r * r * s * s;

        jet.dg[0][0][1] = -f1;
        jet.dg[1][1][1] = -f1 / (f * f);
        jet.dg[2][2][1] = 2.0 * r;
        jet.dg[3][3][1] = 2.0 * r * s * s;
        jet.dg[3][3][2] = 2.0 * r * r * s * c;

        jet.ddg[0][0][1][1] = -f2;
        jet.ddg[1][1][1][1] = -f2 / (f * f) + 2.0 * f1 * f1 / f.powi(3);
        jet.ddg[2][2][1][1] = 2.0;
        jet.ddg[3][3][1][1] = 2.0 * s * s;
        jet.ddg[3][3][1][2] = 4.0 * r * s * c;
        jet.ddg[3][3][2][1] = 4.0 * r * s * c;
        jet.ddg[3][3][2][2] = 2.0 * r * r * (c * c - s * s);
        jet
    }
}

impl AnalyticMetric for SphericalStatic {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Mat4<S> {
        let r = x[1];
        let f = S::one() - r.recip() * (2.0 * self.mass) + (r * r).recip() * (self.charge * self.charge);
        let s = x[2].sin();
        let mut g = zero_mat::<S>();
        g[0][0] = -f;
        g[1][1] = f.recip();
        g[2][2] = r * r;
        g[3][3] = r * r * s * s;
        g
    }

    fn check_chart(&self, x: &Vec4) -> Result<()> {
        check_spherical(self.name, x, self.r_guard)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPotential;

impl PotentialField for ZeroPotential {
    fn name(&self) -> &str {
        "zero"
    }
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
    fn jet_unchecked(&self, _x: &Vec4) -> PotentialJet {
        PotentialJet::zero()
    }
}

impl AnalyticPotential for ZeroPotential {
    fn components<S: Scalar>(&self, _x: &Vec4<S>) -> Vec4<S> {
        [S::zero(); 4]
    }
}

/// The two spatial indices (b, c) with (axis, b, c) cyclic.
fn transverse(axis: usize) -> (usize, usize) {
    match axis {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    }
}

/// Uniform magnetic field: `A_c = B x^b` with (axis, b, c) cyclic, so `F_bc = B`.
#[derive(Clone, Copy, Debug)]
pub struct UniformB {
    pub strength: f64,
    pub axis: usize,
}

impl PotentialField for UniformB {
    fn name(&self) -> &str {
        "uniform_b"
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("B".into(), self.strength), ("axis".into(), self.axis as f64)]
    }
    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet {
        let (b, c) = transverse(self.axis);
        let mut jet = PotentialJet::zero();
        jet.a[c] = self.strength * x[b];
        jet.da[c][b] = self.strength;
        jet
    }
}

impl AnalyticPotential for UniformB {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Vec4<S> {
        let (b, c) = transverse(self.axis);
        let mut a = [S::zero(); 4];
        a[c] = x[b] * self.strength;
        a
    }
}

/// Uniform electric field `E` along the axis: `A_0 = −E x^axis`.
#[derive(Clone, Copy, Debug)]
pub struct UniformE {
    pub strength: f64,
    pub axis: usize,
}

impl PotentialField for UniformE {
    fn name(&self) -> &str {
        "uniform_e"
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("E".into(), self.strength), ("axis".into(), self.axis as f64)]
    }
    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet {
        let mut jet = PotentialJet::zero();
        jet.a[0] = -self.strength * x[self.axis];
        jet.da[0][self.axis] = -self.strength;
        jet
    }
}

impl AnalyticPotential for UniformE {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Vec4<S> {
        let mut a = [S::zero(); 4];
        a[0] = x[self.axis] * (-self.strength);
        a
    }
}

/// Point charge at the spatial origin, `A_0 = Q/r`.
#[derive(Clone, Copy, Debug)]
pub struct Coulomb {
    pub charge: f64,
    pub chart: Chart,
}

impl Coulomb {
    fn radius(&self, x: &Vec4) -> f64 {
        match self.chart {
            Chart::Cartesian => (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt(),
            Chart::Spherical => x[1],
        }
    }
}

impl PotentialField for Coulomb {
    fn name(&self) -> &str {
        "coulomb"
    }

    fn params(&self) -> Vec<(String, f64)> {
        vec![("Q".into(), self.charge)]
    }

    fn check_chart(&self, x: &Vec4) -> Result<()> {
        let r = self.radius(x);
        let guard = HORIZON_MARGIN * self.charge.abs();
        if r.is_finite() && r > guard && r > 0.0 {
            Ok(())
        } else {
            Err(GeometryError::ChartViolation {
                field: "coulomb".into(),
                point: *x,
                reason: format!("r = {r} not above guard {guard}"),
            })
        }
    }

    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet {
        let q = self.charge;
        let mut jet = PotentialJet::zero();
        match self.chart {
            Chart::Spherical => {
                let r = x[1];
                jet.a[0] = q / r;
                jet.da[0][1] = -q / (r * r);
                jet.dda[0][1][1] = 2.0 * q / r.powi(3);
            }
            Chart::Cartesian => {
                let r = self.radius(x);
                let (r3, r5) = (r.powi(3), r.powi(5));
                jet.a[0] = q / r;
                for a in 1..4 {
                    jet.da[0][a] = -q * x[a] / r3;
                    for b in 1..4 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        jet.dda[0][a][b] = q * (3.0 * x[a] * x[b] / r5 - delta / r3);
                    }
                }
            }
        }
        jet
    }
}

impl AnalyticPotential for Coulomb {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Vec4<S> {
        let r = match self.chart {
            Chart::Cartesian => (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt(),
            Chart::Spherical => x[1],
        };
        let mut a = [S::zero(); 4];
        a[0] = r.recip() * self.charge;
        a
    }
}

/// Exact gauge potential `A = dχ`, `χ = c (x⁰ x¹ + (x²)² x³)`.
#[derive(Clone, Copy, Debug)]
pub struct PureGauge {
    pub scale: f64,
}

impl PotentialField for PureGauge {
    fn name(&self) -> &str {
        "pure_gauge"
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("c".into(), self.scale)]
    }
    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet {
        let c = self.scale;
        let mut jet = PotentialJet::zero();
        jet.a = [c * x[1], c * x[0], 2.0 * c * x[2] * x[3], c * x[2] * x[2]];
        jet.da[0][1] = c;
        jet.da[1][0] = c;
        jet.da[2][2] = 2.0 * c * x[3];
        jet.da[2][3] = 2.0 * c * x[2];
        jet.da[3][2] = 2.0 * c * x[2];
        jet.dda[2][2][3] = 2.0 * c;
        jet.dda[2][3][2] = 2.0 * c;
        jet.dda[3][2][2] = 2.0 * c;
        jet
    }
}

impl AnalyticPotential for PureGauge {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Vec4<S> {
        let c = self.scale;
        [x[1] * c, x[0] * c, x[2] * x[3] * (2.0 * c), x[2] * x[2] * c]
    }
}
