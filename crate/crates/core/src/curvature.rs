//! Curvature of the spray connection, tidal tensors and the curvature
//! blocks of the affine connection D.

use serde::Serialize;

use crate::connection::{b_first, b_third, n_jet, strong_torsion, BaseState, LocalGeometry};
use crate::scalar::{hyper_hessian, hyper_seed, seed, Dual, Scalar};
use crate::tensor::{
    angular_metric_generic, mat_mul, mat_vec, norm_and_sign, quadratic, zero_t3, Mat4, Tensor3, Tensor4, Vec4,
};

/// `R^i_jk = δ_k N^i_j − δ_j N^i_k` at `(x₀, y)`.
pub fn nonlinear_curvature<S: Scalar>(geo: &LocalGeometry, y: &Vec4<S>) -> Tensor3<S> {
    let jet = n_jet(geo, &[S::zero(); 4], y);
    let mut delta: Tensor3<S> = zero_t3();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut s = jet.dx[i][j][k];
                for m in 0..4 {
                    s -= jet.dy[i][j][m] * jet.n[m][k];
                }
                delta[i][j][k] = s;
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| delta[i][j][k] - delta[i][k][j])))
}

/// `E^i_j = R^i_jk y^k`
pub fn tidal<S: Scalar>(r: &Tensor3<S>, y: &Vec4<S>) -> Mat4<S> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = S::zero();
            for k in 0..4 {
                s += r[i][j][k] * y[k];
            }
            s
        })
    })
}

/// `Ẽ_ij = h_ik E^k_j`
pub fn tidal_tilde(g: &Mat4, y: &Vec4, sign: f64, e: &Mat4) -> Mat4 {
    mat_mul(&angular_metric_generic(g, y, sign), e)
}

/// `e^i_j = r^i_ljk y^l y^k`, the pure-gravity tidal tensor.
pub fn electrogravitic(riemann: &Tensor4, y: &Vec4) -> Mat4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for l in 0..4 {
                for k in 0..4 {
                    s += riemann[i][l][j][k] * y[l] * y[k];
                }
            }
            s
        })
    })
}

/// Curvature blocks of D and its Ricci tensor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DCurvature {
    /// `R_j^i_kl = ∂R^i_kl/∂y^j`, stored `[j][i][k][l]`.
    pub r_block: Tensor4,
    /// `B_j^i_kl = B^i_{·jkl}`, stored `[j][i][k][l]`.
    pub b_block: Tensor4,
    /// `R_jl = −½ ∂²E^i_i/∂y^j∂y^l`
    pub ricci: Mat4,
    /// `R_j^i_li`, the contraction of the block.
    pub ricci_contracted: Mat4,
}

pub fn d_curvature(geo: &LocalGeometry, y: &Vec4) -> DCurvature {
    let rd = nonlinear_curvature::<Dual<f64, 4>>(geo, &seed(y, 0));
    let mut r_block = [[[[0.0; 4]; 4]; 4]; 4];
    for j in 0..4 {
        for i in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    r_block[j][i][k][l] = rd[i][k][l].eps[j];
                }
            }
        }
    }
    let b3 = b_third(geo, y);
    let b_block = std::array::from_fn(|j| {
        std::array::from_fn(|i| std::array::from_fn(|k| std::array::from_fn(|l| b3[i][j][k][l])))
    });
    let ricci_contracted = std::array::from_fn(|j| std::array::from_fn(|l| (0..4).map(|i| r_block[j][i][l][i]).sum()));
    DCurvature {
        r_block,
        b_block,
        ricci: ricci_hessian(geo, y),
        ricci_contracted,
    }
}

/// `R_jl = −½ (E^i_i)_{·jl}` from a second-order fiber jet of the pipeline.
pub fn ricci_hessian(geo: &LocalGeometry, y: &Vec4) -> Mat4 {
    let yh = hyper_seed(y);
    let r = nonlinear_curvature(geo, &yh);
    let e = tidal(&r, &yh);
    let mut trace = e[0][0];
    for i in 1..4 {
        trace += e[i][i];
    }
    let h = hyper_hessian(&trace);
    std::array::from_fn(|j| std::array::from_fn(|l| -0.5 * h[j][l]))
}

/// Both sides of `E^i_i = e^i_i − D⁰_{δi}(2B^i) + B^l_i B^i_l`, computed
/// without sharing anything above the fields layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceDecomposition {
    pub lhs: f64,
    pub rhs: f64,
    /// `e^i_i`
    pub gravity: f64,
    /// `−D⁰_{δi}(2B^i) = α‖y‖ y^j ∇_i F^i_j`
    pub divergence: f64,
    /// `B^l_i B^i_l`
    pub b_quadratic: f64,
}

impl TraceDecomposition {
    /// Largest magnitude among the combined terms.
    pub fn scale(&self) -> f64 {
        [self.lhs, self.gravity, self.divergence, self.b_quadratic]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `B^l_i B^i_l` from the closed-form B-family.
pub fn b_quadratic(geo: &LocalGeometry, y: &Vec4) -> f64 {
    let base = BaseState::<f64>::constant(&geo.sample);
    let b = b_first(&base, y, geo.alpha(), geo.sign);
    let mut s = 0.0;
    for i in 0..4 {
        for l in 0..4 {
            s += b[l][i] * b[i][l];
        }
    }
    s
}

/// `D⁰_{δi} B^i = −½ α ‖y‖ y^j ∇_i F^i_j`, from the Levi-Civita divergence.
pub fn b_divergence(geo: &LocalGeometry, y: &Vec4) -> f64 {
    let (n, _) = match norm_and_sign(geo.sample.g(), y) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    let div = geo.sample.divergence();
    let yd: f64 = (0..4).map(|j| y[j] * div[j]).sum();
    -0.5 * geo.alpha() * n * yd
}

pub fn trace_decomposition(geo: &LocalGeometry, y: &Vec4) -> TraceDecomposition {
    let e = tidal(&nonlinear_curvature(geo, y), y);
    let lhs = e[0][0] + e[1][1] + e[2][2] + e[3][3];
    let (riemann, _) = geo.sample.riemann();
    let small = electrogravitic(&riemann, y);
    let gravity = small[0][0] + small[1][1] + small[2][2] + small[3][3];
    let divergence = -2.0 * b_divergence(geo, y);
    let b_quadratic = b_quadratic(geo, y);
    TraceDecomposition {
        lhs,
        rhs: gravity + divergence + b_quadratic,
        gravity,
        divergence,
        b_quadratic,
    }
}

/// Curvature and tidal quantities at one phase point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TidalPacket {
    pub alpha: f64,
    pub x: Vec4,
    pub y: Vec4,
    /// `R^i_jk`
    pub curvature: Tensor3,
    /// `E^i_j`
    pub tidal: Mat4,
    /// `Ẽ_ij`
    pub tidal_tilde: Mat4,
    pub tidal_trace: f64,
    /// `e^i_j`
    pub electrogravitic: Mat4,
    /// `𝕋^i_j`
    pub strong_torsion: Mat4,
    /// `R_j^i_kl`, `[j][i][k][l]`
    pub d_curvature: Tensor4,
    /// `B_j^i_kl`, `[j][i][k][l]`
    pub d_contortion: Tensor4,
    /// `R_jl`
    pub d_ricci: Mat4,
    /// `r^i_jkl`
    pub base_riemann: Tensor4,
    /// `r_jl`
    pub base_ricci: Mat4,
}

impl TidalPacket {
    pub fn new(geo: &LocalGeometry, y: &Vec4) -> Self {
        let curvature = nonlinear_curvature(geo, y);
        let e = tidal(&curvature, y);
        let g = geo.sample.g();
        let (base_riemann, base_ricci) = geo.sample.riemann();
        let d = d_curvature(geo, y);
        TidalPacket {
            alpha: geo.alpha(),
            x: geo.sample.x,
            y: *y,
            curvature,
            tidal: e,
            tidal_tilde: tidal_tilde(g, y, geo.sign, &e),
            tidal_trace: e[0][0] + e[1][1] + e[2][2] + e[3][3],
            electrogravitic: electrogravitic(&base_riemann, y),
            strong_torsion: strong_torsion(geo, y),
            d_curvature: d.r_block,
            d_contortion: d.b_block,
            d_ricci: d.ricci,
            base_riemann,
            base_ricci,
        }
    }
}

/// `l_k l^i E^k_i` (lowered with g); zero for every spray connection.
pub fn section_tidal(g: &Mat4, y: &Vec4, e: &Mat4) -> f64 {
    let q = quadratic(g, y, y).abs();
    let ey = mat_vec(e, y);
    let gy = mat_vec(g, y);
    (0..4).map(|k| gy[k] * ey[k]).sum::<f64>() / q
}

/// `N^i_j` and `E^i_j` at `(x₀, y)` from a single connection jet.
pub fn connection_and_tidal(geo: &LocalGeometry, y: &Vec4) -> (Mat4, Mat4) {
    let jet = n_jet(geo, &[0.0; 4], y);
    let mut e = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                let mut djk = jet.dx[i][j][k] - jet.dx[i][k][j];
                for m in 0..4 {
                    djk -= jet.dy[i][j][m] * jet.n[m][k] - jet.dy[i][k][m] * jet.n[m][j];
                }
                s += djk * y[k];
            }
            e[i][j] = s;
        }
    }
    (jet.n, e)
}
