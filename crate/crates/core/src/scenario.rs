//! Scenario files: which spacetime, which field, which α, where to start.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::ConnectionSpec;
use crate::dynamics::{normalize_velocity, DeviationInit, IntegratorConfig};
use crate::error::GeometryError;
use crate::fields::{builtin_metric, builtin_potential, Chart, FieldSpec, MetricField, PotentialField};
use crate::tensor::{norm_and_sign, Mat4, Vec4};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}{}", hint.as_deref().map(|h| format!(" ({h})")).unwrap_or_default())]
    Invalid {
        path: String,
        source: Box<GeometryError>,
        hint: Option<String>,
    },
}

fn invalid(path: &str, source: GeometryError) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.to_string(),
        source: Box::new(source),
        hint: None,
    }
}

/// Initial phase point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub x0: Vec4,
    pub y0: Vec4,
    /// Target causal sign for rescaling `y0` to unit norm, or null to keep it.
    #[serde(default)]
    pub normalize: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationBlock {
    pub w0: Vec4,
    /// Initial adapted rate `δw/dt`.
    #[serde(default)]
    pub v0: Vec4,
}

/// Coordinate box for random phase points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBox {
    pub lo: Vec4,
    pub hi: Vec4,
}

/// Which stress-energy the metric solves Einstein's equations for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EinsteinSource {
    /// Vacuum: the potential must carry no field strength.
    Vacuum,
    /// The potential's own electromagnetic stress-energy.
    Electromagnetic,
    /// The potential is a test field; the metric does not respond to it and
    /// Einstein-equation checks are skipped.
    TestField,
}

/// A scenario as written in JSON. Optional blocks are filled by [`Scenario::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// File format version; absent means the current one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub id: String,
    pub metric: FieldSpec,
    #[serde(default = "zero_potential")]
    pub potential: FieldSpec,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationBlock>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub einstein_source: Option<EinsteinSource>,
    /// Negative-control fixture: constant added to `N^i_j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection_offset: Option<Mat4>,
}

fn zero_potential() -> FieldSpec {
    FieldSpec::new("zero")
}

/// A validated scenario with its fields instantiated and defaults filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// The scenario with every default made explicit.
    pub scenario: Scenario,
    pub metric: Arc<dyn MetricField>,
    pub potential: Arc<dyn PotentialField>,
    pub spec: ConnectionSpec,
    pub x0: Vec4,
    /// Initial fiber vector after optional normalization.
    pub y0: Vec4,
    pub sampling: SamplingBox,
    pub source: EinsteinSource,
}

impl Resolved {
    pub fn deviation_init(&self) -> Option<DeviationInit> {
        self.scenario.deviation.as_ref().map(|d| DeviationInit {
            x0: self.x0,
            y0: self.y0,
            w0: d.w0,
            v0: d.v0,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.spec.alpha = alpha;
        out.scenario.alpha = alpha;
        out
    }
}

impl Scenario {
    pub fn minimal(id: &str, metric: FieldSpec, potential: FieldSpec, alpha: f64) -> Self {
        Self {
            version: None,
            id: id.to_string(),
            metric,
            potential,
            alpha,
            initial: None,
            deviation: None,
            integrator: IntegratorConfig::default(),
            sampling: None,
            einstein_source: None,
            connection_offset: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> Result<Resolved, ScenarioError> {
        if let Some(v) = self.version.filter(|v| *v != SCENARIO_VERSION) {
            return Err(ScenarioError::Parse(format!(
                "scenario format version {v} is not supported (expected {SCENARIO_VERSION})"
            )));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("alpha", GeometryError::NonFinite("alpha".into())));
        }
        let metric = builtin_metric(&self.metric).map_err(|e| invalid("metric", e))?;
        let potential = builtin_potential(&self.potential, metric.chart()).map_err(|e| invalid("potential", e))?;
        self.integrator.validate().map_err(|e| invalid("integrator", e))?;

        let sampling = match &self.sampling {
            Some(b) => b.clone(),
            None => default_box(metric.as_ref()),
        };
        for i in 0..4 {
            if !(sampling.lo[i].is_finite() && sampling.hi[i].is_finite() && sampling.lo[i] <= sampling.hi[i]) {
                return Err(invalid(
                    "sampling",
                    GeometryError::InvalidParameter {
                        name: format!("lo[{i}]/hi[{i}]"),
                        reason: "bounds must be finite with lo <= hi".into(),
                    },
                ));
            }
        }

        let initial = self.initial.clone().unwrap_or_else(|| Initial {
            x0: std::array::from_fn(|i| 0.5 * (sampling.lo[i] + sampling.hi[i])),
            y0: [1.0, 0.0, 0.0, 0.0],
            normalize: Some(-1.0),
        });
        let g = metric.jet(&initial.x0).map_err(|e| invalid("initial.x0", e))?.g;
        potential
            .check_chart(&initial.x0)
            .map_err(|e| invalid("initial.x0", e))?;
        if let Some(target) = initial.normalize {
            if target != 1.0 && target != -1.0 {
                return Err(invalid(
                    "initial.normalize",
                    GeometryError::InvalidParameter {
                        name: "normalize".into(),
                        reason: "must be -1, 1 or null".into(),
                    },
                ));
            }
        }
        let y0 = match initial.normalize {
            Some(target) => normalize_velocity(&g, &initial.y0, target),
            None => norm_and_sign(&g, &initial.y0).map(|_| initial.y0),
        }
        .map_err(|source| ScenarioError::Invalid {
            hint: matches!(source, GeometryError::NullFiber { .. })
                .then(|| "y0 must be timelike or spacelike at x0; the spray is undefined on null vectors".into()),
            path: "initial.y0".into(),
            source: Box::new(source),
        })?;

        if let Some(d) = &self.deviation {
            if d.w0.iter().chain(&d.v0).any(|v| !v.is_finite()) {
                return Err(invalid("deviation", GeometryError::NonFinite("w0/v0".into())));
            }
        }

        let has_field = potential.name() != "zero" && potential.name() != "pure_gauge";
        let source = self.einstein_source.unwrap_or(match (metric.name(), has_field) {
            ("reissner_nordstrom", _) => EinsteinSource::Electromagnetic,
            (_, false) => EinsteinSource::Vacuum,
            _ => EinsteinSource::TestField,
        });

        let mut spec = ConnectionSpec::new(self.alpha);
        if let Some(offset) = self.connection_offset {
            if offset.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid("connection_offset", GeometryError::NonFinite("offset".into())));
            }
            spec = spec.with_offset(offset);
        }

        let mut filled = self.clone();
        filled.version = Some(SCENARIO_VERSION);
        filled.initial = Some(initial.clone());
        filled.sampling = Some(sampling.clone());
        filled.einstein_source = Some(source);
        Ok(Resolved {
            scenario: filled,
            metric,
            potential,
            spec,
            x0: initial.x0,
            y0,
            sampling,
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Default sampling box per chart: a slab around the origin for Cartesian
/// charts and `r ∈ [4M, 50M]` away from the poles for spherical ones.
pub fn default_box(metric: &dyn MetricField) -> SamplingBox {
    match metric.chart() {
        Chart::Cartesian => SamplingBox {
            lo: [-1.0, -3.0, -3.0, -3.0],
            hi: [1.0, 3.0, 3.0, 3.0],
        },
        Chart::Spherical => {
            let m = metric
                .params()
                .iter()
                .find(|(k, _)| k == "M")
                .map(|(_, v)| *v)
                .unwrap_or(1.0);
            SamplingBox {
                lo: [-1.0, 4.0 * m, 0.3, 0.0],
                hi: [1.0, 50.0 * m, PI - 0.3, 2.0 * PI],
            }
        }
    }
}

/// The four reference scenarios of the verification suite.
pub fn builtin_suite() -> Vec<Scenario> {
    let mut cyclotron = Scenario::minimal(
        "cyclotron",
        FieldSpec::new("minkowski"),
        FieldSpec::new("uniform_b").with("B", 0.5).with("axis", "z"),
        1.0,
    );
    cyclotron.initial = Some(Initial {
        x0: [0.0, 1.0, 0.0, 0.0],
        y0: [1.0, 0.0, 0.6, 0.1],
        normalize: Some(-1.0),
    });

    let mut coulomb = Scenario::minimal(
        "flat_coulomb",
        FieldSpec::new("minkowski"),
        FieldSpec::new("coulomb").with("Q", 0.5),
        1.0,
    );
    coulomb.sampling = Some(SamplingBox {
        lo: [-1.0, 0.5, 0.5, -2.0],
        hi: [1.0, 3.0, 3.0, 2.0],
    });
    coulomb.initial = Some(Initial {
        x0: [0.0, 3.0, 0.5, 0.2],
        y0: [1.0, 0.0, 0.6, 0.1],
        normalize: Some(-1.0),
    });

    let mut schwarzschild = Scenario::minimal(
        "schwarzschild",
        FieldSpec::new("schwarzschild").with("M", 1.0),
        FieldSpec::new("zero"),
        1.0,
    );
    schwarzschild.initial = Some(Initial {
        x0: [0.0, 10.0, PI / 2.0, 0.0],
        y0: [1.0, 0.0, 0.0, 0.0],
        normalize: Some(-1.0),
    });

    let mut rn = Scenario::minimal(
        "reissner_nordstrom",
        FieldSpec::new("reissner_nordstrom").with("M", 1.0).with("Q", 0.5),
        FieldSpec::new("coulomb").with("Q", 0.5),
        1.0,
    );
    rn.initial = Some(Initial {
        x0: [0.0, 10.0, PI / 2.0, 0.0],
        y0: [1.0, 0.0, 0.0, 0.04],
        normalize: Some(-1.0),
    });

    vec![cyclotron, coulomb, schwarzschild, rn]
}
