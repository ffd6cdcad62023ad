//! Metric and 4-potential fields with exact partial derivatives to order 2,
//! and the base-space objects derived from them.

mod catalog;
mod derived;

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GeometryError, Result};
use crate::scalar::{hyper_gradient, hyper_hessian, hyper_seed, Scalar};
use crate::tensor::{Mat4, Tensor3, Tensor4, Vec4};

pub use catalog::{
    builtin_metric, builtin_potential, metric_catalog, potential_catalog, CatalogEntry, Coulomb, Minkowski, PureGauge,
    SphericalStatic, UniformB, UniformE, ZeroPotential, AXIS_GUARD, HORIZON_MARGIN,
};
pub use derived::{
    base_riemann, base_riemann_from, christoffel, christoffel_from_jet, covariant_faraday, current, faraday,
    faraday_divergence, faraday_from_jet, inverse_derivative, stress_energy_em, FieldSample, StressEnergy,
};

/// Coordinate chart a field is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// (t, x, y, z)
    Cartesian,
    /// (t, r, θ, φ)
    Spherical,
}

/// `g_ij`, `∂_k g_ij` and `∂_l ∂_k g_ij` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Mat4,
    /// `dg[i][j][k] = ∂_k g_ij`
    pub dg: Tensor3,
    /// `ddg[i][j][k][l] = ∂_l ∂_k g_ij`
    pub ddg: Tensor4,
}

/// `A_i`, `∂_j A_i` and `∂_k ∂_j A_i` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialJet {
    pub a: Vec4,
    /// `da[i][j] = ∂_j A_i`
    pub da: Mat4,
    /// `dda[i][j][k] = ∂_k ∂_j A_i`
    pub dda: Tensor3,
}

impl PotentialJet {
    pub fn zero() -> Self {
        Self {
            a: [0.0; 4],
            da: [[0.0; 4]; 4],
            dda: [[[0.0; 4]; 4]; 4],
        }
    }
}

pub trait MetricField: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn chart(&self) -> Chart;
    fn params(&self) -> Vec<(String, f64)>;
    fn check_chart(&self, x: &Vec4) -> Result<()>;
    /// Jet without the chart guard; callers are expected to have checked it.
    fn jet_unchecked(&self, x: &Vec4) -> MetricJet;

    /// True when the metric is flat in its chart with vanishing Christoffel symbols.
    fn is_flat(&self) -> bool {
        false
    }

    fn jet(&self, x: &Vec4) -> Result<MetricJet> {
        self.check_chart(x)?;
        let jet = self.jet_unchecked(x);
        if jet.g.iter().flatten().all(|v| v.is_finite()) {
            Ok(jet)
        } else {
            Err(GeometryError::NonFinite(format!("metric '{}'", self.name())))
        }
    }
}

pub trait PotentialField: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn params(&self) -> Vec<(String, f64)>;
    fn check_chart(&self, x: &Vec4) -> Result<()>;
    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet;

    fn jet(&self, x: &Vec4) -> Result<PotentialJet> {
        self.check_chart(x)?;
        let jet = self.jet_unchecked(x);
        if jet.a.iter().chain(jet.da.iter().flatten()).all(|v| v.is_finite()) {
            Ok(jet)
        } else {
            Err(GeometryError::NonFinite(format!("potential '{}'", self.name())))
        }
    }
}

/// A metric written once as a generic function of the coordinates.
pub trait AnalyticMetric: Debug + Send + Sync {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Mat4<S>;

    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
}

/// A 4-potential written once as a generic function of the coordinates.
pub trait AnalyticPotential: Debug + Send + Sync {
    fn components<S: Scalar>(&self, x: &Vec4<S>) -> Vec4<S>;

    fn check_chart(&self, _x: &Vec4) -> Result<()> {
        Ok(())
    }
}

/// Jet of an analytic metric by nested forward differentiation.
pub fn metric_jet_autodiff<M: AnalyticMetric>(m: &M, x: &Vec4) -> MetricJet {
    let g = m.components(&hyper_seed(x));
    let mut jet = MetricJet {
        g: [[0.0; 4]; 4],
        dg: [[[0.0; 4]; 4]; 4],
        ddg: [[[[0.0; 4]; 4]; 4]; 4],
    };
    for i in 0..4 {
        for j in 0..4 {
            jet.g[i][j] = g[i][j].re.re;
            jet.dg[i][j] = hyper_gradient(&g[i][j]);
            jet.ddg[i][j] = hyper_hessian(&g[i][j]);
        }
    }
    jet
}

/// Jet of an analytic potential by nested forward differentiation.
pub fn potential_jet_autodiff<P: AnalyticPotential>(p: &P, x: &Vec4) -> PotentialJet {
    let a = p.components(&hyper_seed(x));
    let mut jet = PotentialJet::zero();
    for i in 0..4 {
        jet.a[i] = a[i].re.re;
        jet.da[i] = hyper_gradient(&a[i]);
        jet.dda[i] = hyper_hessian(&a[i]);
    }
    jet
}

/// Adapter exposing a user-written [`AnalyticMetric`] as a [`MetricField`].
#[derive(Debug)]
pub struct AutoDiffMetric<M> {
    pub name: String,
    pub chart: Chart,
    pub inner: M,
}

impl<M: AnalyticMetric> MetricField for AutoDiffMetric<M> {
    fn name(&self) -> &str {
        &self.name
    }
    fn chart(&self) -> Chart {
        self.chart
    }
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
    fn check_chart(&self, x: &Vec4) -> Result<()> {
        self.inner.check_chart(x)
    }
    fn jet_unchecked(&self, x: &Vec4) -> MetricJet {
        metric_jet_autodiff(&self.inner, x)
    }
}

/// Adapter exposing a user-written [`AnalyticPotential`] as a [`PotentialField`].
#[derive(Debug)]
pub struct AutoDiffPotential<P> {
    pub name: String,
    pub inner: P,
}

impl<P: AnalyticPotential> PotentialField for AutoDiffPotential<P> {
    fn name(&self) -> &str {
        &self.name
    }
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
    fn check_chart(&self, x: &Vec4) -> Result<()> {
        self.inner.check_chart(x)
    }
    fn jet_unchecked(&self, x: &Vec4) -> PotentialJet {
        potential_jet_autodiff(&self.inner, x)
    }
}

/// A catalog reference as it appears in scenario files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl FieldSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}
