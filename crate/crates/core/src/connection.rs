//! The α-family of spray connections on the tangent bundle.
//!
//! For a metric `g`, a Faraday tensor `F` and a real α the Randers spray is
//! `2G^i = γ^i_jk y^j y^k + 2B^i` with `2B^i = −α‖y‖F^i_j y^j`. Its fiber
//! derivatives give the Ehresmann connection `N^i_j = γ^i_jk y^k + B^i_j` and
//! the affine (Berwald-type) coefficients `G^i_jk = γ^i_jk + B^i_jk`.
//!
//! Every formula here is generic over [`Scalar`], so the same code is
//! evaluated plainly, with first or second fiber derivatives, or with base
//! derivatives threaded through a truncated Taylor expansion of the fields.
//! A base displacement `ξ` around the sample point plays the role of the
//! base coordinate: its dual parts select the base directions.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{FieldSample, MetricField, PotentialField};
use crate::scalar::{seed, Dual, Scalar};
use crate::tensor::{inverse, mat_vec, quadratic, zero_mat, zero_t3, Mat4, PhasePoint, Tensor3, Variance, Vec4};

/// Connection parameters shared by every phase point of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    /// Charge-to-mass ratio; 0 selects the pure-gravity connection.
    pub alpha: f64,
    /// Constant added to `N^i_j`. Breaks the spray property on purpose and
    /// exists only as a negative-control fixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Mat4>,
}

impl ConnectionSpec {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, offset: None }
    }

    pub fn with_offset(mut self, offset: Mat4) -> Self {
        self.offset = Some(offset);
        self
    }
}

/// Field data at one base point, the connection parameters and the causal
/// sign of the fiber direction being probed.
#[derive(Clone, Copy, Debug)]
pub struct LocalGeometry {
    pub sample: FieldSample,
    pub spec: ConnectionSpec,
    pub sign: f64,
}

impl LocalGeometry {
    pub fn new(
        metric: &dyn MetricField,
        potential: &dyn PotentialField,
        spec: ConnectionSpec,
        x: &Vec4,
        sign: f64,
    ) -> Result<Self> {
        Ok(Self {
            sample: FieldSample::new(metric, potential, x)?,
            spec,
            sign,
        })
    }

    /// Geometry at a phase point, taking the causal sign from it.
    pub fn at(
        metric: &dyn MetricField,
        potential: &dyn PotentialField,
        spec: ConnectionSpec,
        p: &PhasePoint,
    ) -> Result<Self> {
        Self::new(metric, potential, spec, p.x(), p.causal_sign)
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    /// Same fields and sign with a different connection.
    pub fn with_spec(&self, spec: ConnectionSpec) -> Self {
        Self { spec, ..*self }
    }
}

/// Base fields at `x₀ + ξ`.
#[derive(Clone, Copy, Debug)]
pub struct BaseState<S> {
    pub g: Mat4<S>,
    pub gamma: Tensor3<S>,
    /// `F_ij`
    pub f: Mat4<S>,
    /// `F^i_j`
    pub f_up: Mat4<S>,
}

fn cst_mat<S: Scalar>(m: &Mat4) -> Mat4<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| S::cst(m[i][j])))
}

fn cst_t3<S: Scalar>(t: &Tensor3) -> Tensor3<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| S::cst(t[i][j][k]))))
}

fn taylor1<S: Scalar>(value: f64, grad: &[f64; 4], xi: &Vec4<S>) -> S {
    let mut s = S::cst(value);
    for k in 0..4 {
        if grad[k] != 0.0 {
            s += xi[k] * grad[k];
        }
    }
    s
}

impl<S: Scalar> BaseState<S> {
    /// First-order expansion: exact values and first base derivatives.
    pub fn linear(sample: &FieldSample, xi: &Vec4<S>) -> Self {
        let g = std::array::from_fn(|i| {
            std::array::from_fn(|j| taylor1(sample.metric.g[i][j], &sample.metric.dg[i][j], xi))
        });
        let gamma = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| taylor1(sample.gamma[i][j][k], &sample.dgamma[i][j][k], xi))
            })
        });
        let f = std::array::from_fn(|i| std::array::from_fn(|j| taylor1(sample.f[i][j], &sample.df[i][j], xi)));
        let f_up =
            std::array::from_fn(|i| std::array::from_fn(|j| taylor1(sample.f_up[i][j], &sample.df_up[i][j], xi)));
        Self { g, gamma, f, f_up }
    }

    /// Second-order expansion of the metric with the Christoffel symbols
    /// rebuilt from it, so that `∂∂g` and `∂γ` are exact at any dual depth.
    /// `F` is carried to first order.
    pub fn quadratic(sample: &FieldSample, xi: &Vec4<S>) -> Self {
        let jet = &sample.metric;
        let mut g: Mat4<S> = zero_mat();
        let mut dg: Tensor3<S> = zero_t3();
        for i in 0..4 {
            for j in 0..4 {
                let mut v = taylor1(jet.g[i][j], &jet.dg[i][j], xi);
                for k in 0..4 {
                    let mut d = S::cst(jet.dg[i][j][k]);
                    for l in 0..4 {
                        let c = jet.ddg[i][j][k][l];
                        if c != 0.0 {
                            d += xi[l] * c;
                            v += xi[k] * xi[l] * (0.5 * c);
                        }
                    }
                    dg[i][j][k] = d;
                }
                g[i][j] = v;
            }
        }
        let ginv = inverse(&g);
        let mut low: Tensor3<S> = zero_t3();
        for m in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    low[m][j][k] = (dg[m][j][k] + dg[m][k][j] - dg[j][k][m]) * 0.5;
                }
            }
        }
        let mut gamma: Tensor3<S> = zero_t3();
        for i in 0..4 {
            for j in 0..4 {
                for k in j..4 {
                    let mut s = S::zero();
                    for m in 0..4 {
                        s += ginv[i][m] * low[m][j][k];
                    }
                    gamma[i][j][k] = s;
                    gamma[i][k][j] = s;
                }
            }
        }
        let f: Mat4<S> =
            std::array::from_fn(|i| std::array::from_fn(|j| taylor1(sample.f[i][j], &sample.df[i][j], xi)));
        let mut f_up: Mat4<S> = zero_mat();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = S::zero();
                for h in 0..4 {
                    s += ginv[i][h] * f[h][j];
                }
                f_up[i][j] = s;
            }
        }
        Self { g, gamma, f, f_up }
    }

    /// Fields at the sample point itself, as constants.
    pub fn constant(sample: &FieldSample) -> Self {
        Self {
            g: cst_mat(&sample.metric.g),
            gamma: cst_t3(&sample.gamma),
            f: cst_mat(&sample.f),
            f_up: cst_mat(&sample.f_up),
        }
    }
}

/// `‖y‖ = sqrt(ε g_ij y^i y^j)`.
pub fn norm<S: Scalar>(g: &Mat4<S>, y: &Vec4<S>, sign: f64) -> S {
    (quadratic(g, y, y) * sign).sqrt()
}

/// The B-family and its ingredients at one (possibly dual-valued) point.
struct Randers<S> {
    norm: S,
    /// `‖y‖_{·j} = ε l_j`
    dnorm: Vec4<S>,
    /// `F^i = F^i_j y^j`
    fy: Vec4<S>,
}

impl<S: Scalar> Randers<S> {
    fn new(base: &BaseState<S>, y: &Vec4<S>, sign: f64) -> Self {
        let gy = mat_vec(&base.g, y);
        let norm = (crate::tensor::dot(&gy, y) * sign).sqrt();
        let inv = norm.recip();
        let dnorm = std::array::from_fn(|j| gy[j] * inv * sign);
        let fy = mat_vec(&base.f_up, y);
        Self { norm, dnorm, fy }
    }
}

/// `B^i = −(α/2)‖y‖F^i`
pub fn b_vector<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, alpha: f64, sign: f64) -> Vec4<S> {
    let r = Randers::new(base, y, sign);
    std::array::from_fn(|i| r.norm * r.fy[i] * (-0.5 * alpha))
}

/// `B^i_j = −(α/2)(F^i ‖y‖_{·j} + ‖y‖F^i_j)`
pub fn b_first<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, alpha: f64, sign: f64) -> Mat4<S> {
    let r = Randers::new(base, y, sign);
    std::array::from_fn(|i| std::array::from_fn(|j| (r.fy[i] * r.dnorm[j] + r.norm * base.f_up[i][j]) * (-0.5 * alpha)))
}

/// `B^i_jk = −(α/2)(‖y‖_{·jk}F^i + ‖y‖_{·j}F^i_k + ‖y‖_{·k}F^i_j)` with
/// `‖y‖_{·jk} = (ε g_jk − ‖y‖_{·j}‖y‖_{·k})/‖y‖`.
pub fn b_second<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, alpha: f64, sign: f64) -> Tensor3<S> {
    let r = Randers::new(base, y, sign);
    let inv = r.norm.recip();
    let mut out: Tensor3<S> = zero_t3();
    for j in 0..4 {
        for k in j..4 {
            let ddnorm = (base.g[j][k] * sign - r.dnorm[j] * r.dnorm[k]) * inv;
            for i in 0..4 {
                let v =
                    (ddnorm * r.fy[i] + r.dnorm[j] * base.f_up[i][k] + r.dnorm[k] * base.f_up[i][j]) * (-0.5 * alpha);
                out[i][j][k] = v;
                out[i][k][j] = v;
            }
        }
    }
    out
}

/// `G^i = ½γ^i_jk y^j y^k + B^i`
pub fn spray<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, alpha: f64, sign: f64) -> Vec4<S> {
    let b = b_vector(base, y, alpha, sign);
    std::array::from_fn(|i| {
        let mut s = S::zero();
        for j in 0..4 {
            for k in 0..4 {
                s += base.gamma[i][j][k] * y[j] * y[k];
            }
        }
        s * 0.5 + b[i]
    })
}

/// `N^i_j = γ^i_jk y^k + B^i_j`, plus the negative-control offset if set.
pub fn connection<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, spec: &ConnectionSpec, sign: f64) -> Mat4<S> {
    let b = b_first(base, y, spec.alpha, sign);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = b[i][j];
            for k in 0..4 {
                s += base.gamma[i][j][k] * y[k];
            }
            if let Some(offset) = &spec.offset {
                s = s + offset[i][j];
            }
            s
        })
    })
}

/// `G^i_jk = γ^i_jk + B^i_jk`
pub fn affine<S: Scalar>(base: &BaseState<S>, y: &Vec4<S>, alpha: f64, sign: f64) -> Tensor3<S> {
    let b = b_second(base, y, alpha, sign);
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| base.gamma[i][j][k] + b[i][j][k])))
}

/// `N^i_j` at `(x₀ + ξ, y)` with its base and fiber derivatives,
/// `dx[i][j][k] = ∂N^i_j/∂x^k` and `dy[i][j][k] = ∂N^i_j/∂y^k`.
pub struct NJet<S> {
    pub n: Mat4<S>,
    pub dx: Tensor3<S>,
    pub dy: Tensor3<S>,
}

pub fn n_jet<S: Scalar>(geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> NJet<S> {
    let xd: Vec4<Dual<S, 8>> = std::array::from_fn(|k| Dual::variable(xi[k], k));
    let yd: Vec4<Dual<S, 8>> = seed(y, 4);
    let base = BaseState::linear(&geo.sample, &xd);
    let n = connection(&base, &yd, &geo.spec, geo.sign);
    let mut jet = NJet {
        n: zero_mat(),
        dx: zero_t3(),
        dy: zero_t3(),
    };
    for i in 0..4 {
        for j in 0..4 {
            jet.n[i][j] = n[i][j].re;
            for k in 0..4 {
                jet.dx[i][j][k] = n[i][j].eps[k];
                jet.dy[i][j][k] = n[i][j].eps[4 + k];
            }
        }
    }
    jet
}

/// All connection coefficients at one phase point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectionData {
    pub alpha: f64,
    pub norm: f64,
    pub causal_sign: f64,
    pub gamma: Tensor3,
    /// `F^i_j`
    pub faraday_mixed: Mat4,
    /// `F^i = F^i_j y^j`
    pub faraday_y: Vec4,
    pub b: Vec4,
    pub b_first: Mat4,
    pub b_second: Tensor3,
    pub spray: Vec4,
    pub nonlinear: Mat4,
    pub affine: Tensor3,
}

impl ConnectionData {
    pub fn new(geo: &LocalGeometry, y: &Vec4) -> Self {
        let base = BaseState::<f64>::constant(&geo.sample);
        let (alpha, sign) = (geo.alpha(), geo.sign);
        Self {
            alpha,
            norm: norm(&base.g, y, sign),
            causal_sign: sign,
            gamma: base.gamma,
            faraday_mixed: base.f_up,
            faraday_y: mat_vec(&base.f_up, y),
            b: b_vector(&base, y, alpha, sign),
            b_first: b_first(&base, y, alpha, sign),
            b_second: b_second(&base, y, alpha, sign),
            spray: spray(&base, y, alpha, sign),
            nonlinear: connection(&base, y, &geo.spec, sign),
            affine: affine(&base, y, alpha, sign),
        }
    }
}

/// `𝕋^i_j = y^k N^i_{k·j} − N^i_j`; vanishes for every spray connection.
pub fn strong_torsion(geo: &LocalGeometry, y: &Vec4) -> Mat4 {
    let base = BaseState::<Dual<f64, 4>>::constant(&geo.sample);
    let n = connection(&base, &seed(y, 0), &geo.spec, geo.sign);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = -n[i][j].re;
            for k in 0..4 {
                s += y[k] * n[i][k].eps[j];
            }
            s
        })
    })
}

/// `∂G^i/∂y^j` by forward differentiation of the spray, for comparison
/// with the closed-form connection.
pub fn spray_fiber_derivative(geo: &LocalGeometry, y: &Vec4) -> Mat4 {
    let base = BaseState::<Dual<f64, 4>>::constant(&geo.sample);
    let g = spray(&base, &seed(y, 0), geo.alpha(), geo.sign);
    std::array::from_fn(|i| g[i].eps)
}

/// `∂N^i_j/∂y^k` by forward differentiation, stored `[i][j][k]`.
pub fn connection_fiber_derivative(geo: &LocalGeometry, y: &Vec4) -> Tensor3 {
    let base = BaseState::<Dual<f64, 4>>::constant(&geo.sample);
    let n = connection(&base, &seed(y, 0), &geo.spec, geo.sign);
    std::array::from_fn(|i| std::array::from_fn(|j| n[i][j].eps))
}

/// `B^i_{·jkl}`, the fiber derivative of `B^i_jk`, stored `[i][j][k][l]`.
pub fn b_third(geo: &LocalGeometry, y: &Vec4) -> crate::tensor::Tensor4 {
    let base = BaseState::<Dual<f64, 4>>::constant(&geo.sample);
    let b = b_second(&base, &seed(y, 0), geo.alpha(), geo.sign);
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| b[i][j][k].eps)))
}

/// A function on the tangent bundle near a sample point, written once for
/// every scalar type so that base and fiber derivatives come out exact.
pub trait PhaseField: Sync {
    /// Number of output components.
    fn components(&self) -> usize;

    fn eval<S: Scalar>(&self, geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> Vec<S>;
}

/// `δ_k f = ∂_k f − N^j_k ∂f/∂y^j` for every component of `field`, stored
/// component-major with the direction index last.
pub fn adapted_derivative<F: PhaseField, S: Scalar>(
    field: &F,
    geo: &LocalGeometry,
    xi: &Vec4<S>,
    y: &Vec4<S>,
) -> Vec<S> {
    let xd: Vec4<Dual<S, 8>> = std::array::from_fn(|k| Dual::variable(xi[k], k));
    let yd: Vec4<Dual<S, 8>> = seed(y, 4);
    let values = field.eval(geo, &xd, &yd);
    let base = BaseState::quadratic(&geo.sample, xi);
    let n = connection(&base, y, &geo.spec, geo.sign);
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in &values {
        for k in 0..4 {
            let mut s = v.eps[k];
            for j in 0..4 {
                s -= n[j][k] * v.eps[4 + j];
            }
            out.push(s);
        }
    }
    out
}

/// D-covariant derivative of a horizontal tensor field in the adapted frame,
/// `D_{δk} T = δ_k T + G·T` per contravariant slot `− G·T` per covariant slot.
/// `slots` lists the variance of each index of `field` (row-major storage);
/// the derivative index is appended last.
pub fn d_covariant_derivative<F: PhaseField, S: Scalar>(
    field: &F,
    slots: &[Variance],
    geo: &LocalGeometry,
    xi: &Vec4<S>,
    y: &Vec4<S>,
) -> Vec<S> {
    let rank = slots.len();
    debug_assert_eq!(field.components(), 4usize.pow(rank as u32));
    let values = field.eval(geo, xi, y);
    let mut out = adapted_derivative(field, geo, xi, y);
    let base = BaseState::quadratic(&geo.sample, xi);
    let g = affine(&base, y, geo.alpha(), geo.sign);
    let strides: Vec<usize> = (0..rank).map(|s| 4usize.pow((rank - 1 - s) as u32)).collect();
    for flat in 0..values.len() {
        for (slot, variance) in slots.iter().enumerate() {
            let stride = strides[slot];
            let a = (flat / stride) % 4;
            let rest = flat - a * stride;
            for k in 0..4 {
                let mut s = S::zero();
                for m in 0..4 {
                    let other = values[rest + m * stride];
                    s += match variance {
                        Variance::Up => g[a][m][k] * other,
                        Variance::Down => -(g[m][a][k] * other),
                    };
                }
                out[flat * 4 + k] += s;
            }
        }
    }
    out
}

/// `l_i = g_ij y^j / ‖y‖`
pub struct LowerSection;

impl PhaseField for LowerSection {
    fn components(&self) -> usize {
        4
    }

    fn eval<S: Scalar>(&self, geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> Vec<S> {
        let base = BaseState::quadratic(&geo.sample, xi);
        let gy = mat_vec(&base.g, y);
        let inv = norm(&base.g, y, geo.sign).recip();
        gy.iter().map(|&v| v * inv).collect()
    }
}

/// `D_{δj} l_i`, stored `[i][j]`.
pub struct SectionDerivative;

impl PhaseField for SectionDerivative {
    fn components(&self) -> usize {
        16
    }

    fn eval<S: Scalar>(&self, geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> Vec<S> {
        d_covariant_derivative(&LowerSection, &[Variance::Down], geo, xi, y)
    }
}

/// The signed quadratic `g_ab y^a y^b`.
pub struct FiberQuadratic;

impl PhaseField for FiberQuadratic {
    fn components(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> Vec<S> {
        let base = BaseState::quadratic(&geo.sample, xi);
        vec![quadratic(&base.g, y, y)]
    }
}

/// `g^ih δ_h(g_ab y^a y^b)`
pub struct QuadraticGradient;

impl PhaseField for QuadraticGradient {
    fn components(&self) -> usize {
        4
    }

    fn eval<S: Scalar>(&self, geo: &LocalGeometry, xi: &Vec4<S>, y: &Vec4<S>) -> Vec<S> {
        let d = adapted_derivative(&FiberQuadratic, geo, xi, y);
        let base = BaseState::quadratic(&geo.sample, xi);
        let ginv = inverse(&base.g);
        (0..4)
            .map(|i| {
                let mut s = S::zero();
                for h in 0..4 {
                    s += ginv[i][h] * d[h];
                }
                s
            })
            .collect()
    }
}

/// Evaluates a phase field at the sample point itself.
pub fn eval_at<F: PhaseField>(field: &F, geo: &LocalGeometry, y: &Vec4) -> Vec<f64> {
    field.eval(geo, &[0.0; 4], y)
}

/// `D_{δj} l_i` at the sample point, `[i][j]`.
pub fn section_derivative(geo: &LocalGeometry, y: &Vec4) -> Mat4 {
    let v = SectionDerivative.eval(geo, &[0.0; 4], y);
    std::array::from_fn(|i| std::array::from_fn(|j| v[i * 4 + j]))
}

/// `D_{δk} D_{δj} l_i`, stored `[i][j][k]`.
pub fn section_second_derivative(geo: &LocalGeometry, y: &Vec4) -> Tensor3 {
    let v = d_covariant_derivative(&SectionDerivative, &[Variance::Down, Variance::Down], geo, &[0.0; 4], y);
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| v[(i * 4 + j) * 4 + k])))
}

/// `□l_i = g^jk D_{δk} D_{δj} l_i`
pub fn section_box(geo: &LocalGeometry, y: &Vec4) -> Vec4 {
    let dd = section_second_derivative(geo, y);
    let ginv = &geo.sample.ginv;
    std::array::from_fn(|i| {
        let mut s = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                s += ginv[j][k] * dd[i][j][k];
            }
        }
        s
    })
}

/// `D_{δi}(δ^i Q)` with `Q = g_ab y^a y^b` and `δ^i = g^ih δ_h`.
pub fn quadratic_laplacian(geo: &LocalGeometry, y: &Vec4) -> f64 {
    let v = d_covariant_derivative(&QuadraticGradient, &[Variance::Up], geo, &[0.0; 4], y);
    (0..4).map(|i| v[i * 4 + i]).sum()
}

/// Lifts f64 data into any scalar type; handy for callers mixing depths.
pub fn lift_vec<S: Scalar>(v: &Vec4) -> Vec4<S> {
    std::array::from_fn(|i| S::cst(v[i]))
}
