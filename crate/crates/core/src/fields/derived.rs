//! Base-space objects built from field jets: Christoffel symbols, the
//! Faraday tensor, base curvature, current density and stress-energy.

use std::f64::consts::PI;

use serde::Serialize;

use super::{MetricField, MetricJet, PotentialField, PotentialJet};
use crate::error::Result;
use crate::tensor::{metric_inverse, zero_mat, Mat4, Tensor3, Tensor4, Vec4};

/// `∂_k g^ij = −g^ia ∂_k g_ab g^bj`, stored `[i][j][k]`.
pub fn inverse_derivative(ginv: &Mat4, dg: &Tensor3) -> Tensor3 {
    let mut out = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s -= ginv[i][a] * dg[a][b][k] * ginv[b][j];
                    }
                }
                out[i][j][k] = s;
            }
        }
    }
    out
}

/// Levi-Civita symbols `γ^i_jk` and their partials `∂_l γ^i_jk`.
pub fn christoffel_from_jet(jet: &MetricJet) -> Result<(Tensor3, Tensor4)> {
    let ginv = metric_inverse(&jet.g)?;
    let dginv = inverse_derivative(&ginv, &jet.dg);
    let (dg, ddg) = (&jet.dg, &jet.ddg);

    // Lowered symbols γ_mjk and their partials.
    let mut low = [[[0.0; 4]; 4]; 4];
    let mut dlow = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                low[m][j][k] = 0.5 * (dg[m][j][k] + dg[m][k][j] - dg[j][k][m]);
                for l in 0..4 {
                    dlow[m][j][k][l] = 0.5 * (ddg[m][j][k][l] + ddg[m][k][j][l] - ddg[j][k][m][l]);
                }
            }
        }
    }

    let mut gamma = [[[0.0; 4]; 4]; 4];
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut s = 0.0;
                for m in 0..4 {
                    s += ginv[i][m] * low[m][j][k];
                }
                gamma[i][j][k] = s;
                for l in 0..4 {
                    let mut d = 0.0;
                    for m in 0..4 {
                        d += dginv[i][m][l] * low[m][j][k] + ginv[i][m] * dlow[m][j][k][l];
                    }
                    dgamma[i][j][k][l] = d;
                }
            }
        }
    }
    Ok((gamma, dgamma))
}

pub fn christoffel(g: &dyn MetricField, x: &Vec4) -> Result<(Tensor3, Tensor4)> {
    christoffel_from_jet(&g.jet(x)?)
}

/// `F_ij = ∂_i A_j − ∂_j A_i` and `∂_k F_ij`, stored `[i][j]` and `[i][j][k]`.
pub fn faraday_from_jet(jet: &PotentialJet) -> (Mat4, Tensor3) {
    let mut f: Mat4 = zero_mat();
    let mut df = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            f[i][j] = jet.da[j][i] - jet.da[i][j];
            for k in 0..4 {
                df[i][j][k] = jet.dda[j][i][k] - jet.dda[i][j][k];
            }
        }
    }
    (f, df)
}

pub fn faraday(a: &dyn PotentialField, x: &Vec4) -> Result<(Mat4, Tensor3)> {
    Ok(faraday_from_jet(&a.jet(x)?))
}

/// `r^i_jkl = ∂_l γ^i_jk − ∂_k γ^i_jl + γ^h_jk γ^i_hl − γ^h_jl γ^i_hk` and
/// its contraction `r_jl = r^i_jli`.
pub fn base_riemann_from(gamma: &Tensor3, dgamma: &Tensor4) -> (Tensor4, Mat4) {
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut s = dgamma[i][j][k][l] - dgamma[i][j][l][k];
                    for h in 0..4 {
                        s += gamma[h][j][k] * gamma[i][h][l] - gamma[h][j][l] * gamma[i][h][k];
                    }
                    r[i][j][k][l] = s;
                }
            }
        }
    }
    let mut ric: Mat4 = zero_mat();
    for j in 0..4 {
        for l in 0..4 {
            ric[j][l] = (0..4).map(|i| r[i][j][l][i]).sum();
        }
    }
    (r, ric)
}

pub fn base_riemann(g: &dyn MetricField, x: &Vec4) -> Result<(Tensor4, Mat4)> {
    let (gamma, dgamma) = christoffel(g, x)?;
    Ok(base_riemann_from(&gamma, &dgamma))
}

/// `∇_k F_ij = ∂_k F_ij − γ^m_ik F_mj − γ^m_jk F_im`, stored `[i][j][k]`.
pub fn covariant_faraday(f: &Mat4, df: &Tensor3, gamma: &Tensor3) -> Tensor3 {
    let mut out = *df;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for m in 0..4 {
                    out[i][j][k] -= gamma[m][i][k] * f[m][j] + gamma[m][j][k] * f[i][m];
                }
            }
        }
    }
    out
}

/// Divergence `∇_i F^i_j` from the mixed components and their partials.
pub fn faraday_divergence(f_up: &Mat4, df_up: &Tensor3, gamma: &Tensor3) -> Vec4 {
    std::array::from_fn(|j| {
        let mut s = 0.0;
        for i in 0..4 {
            s += df_up[i][j][i];
            for k in 0..4 {
                s += gamma[i][i][k] * f_up[k][j] - gamma[k][j][i] * f_up[i][k];
            }
        }
        s
    })
}

/// Current density `J^j = (1/4π) ∇_i F^ij`.
pub fn current(a: &dyn PotentialField, g: &dyn MetricField, x: &Vec4) -> Result<Vec4> {
    Ok(FieldSample::new(g, a, x)?.current())
}

/// Stress-energy split into its electromagnetic and matter parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StressEnergy {
    pub em: Mat4,
    pub matter: Mat4,
}

impl StressEnergy {
    pub fn total(&self) -> Mat4 {
        std::array::from_fn(|i| std::array::from_fn(|j| self.em[i][j] + self.matter[i][j]))
    }

    /// `T^l_l` of the total tensor.
    pub fn trace(&self, ginv: &Mat4) -> f64 {
        let t = self.total();
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += ginv[i][j] * t[i][j];
            }
        }
        s
    }
}

/// `T^em_ij = (1/4π)(F_ih F_j^h − ¼ g_ij F^kh F_kh)` for signature (−,+,+,+).
pub fn stress_energy_em(f: &Mat4, g: &Mat4, ginv: &Mat4) -> StressEnergy {
    // f_mixed[j][h] = F_j^h
    let mut f_mixed: Mat4 = zero_mat();
    for j in 0..4 {
        for h in 0..4 {
            f_mixed[j][h] = (0..4).map(|m| f[j][m] * ginv[m][h]).sum();
        }
    }
    let mut invariant = 0.0;
    for k in 0..4 {
        for h in 0..4 {
            let f_kh_up: f64 = (0..4).map(|m| ginv[k][m] * f_mixed[m][h]).sum();
            invariant += f_kh_up * f[k][h];
        }
    }
    let mut em: Mat4 = zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            let ff: f64 = (0..4).map(|h| f[i][h] * f_mixed[j][h]).sum();
            em[i][j] = (ff - 0.25 * g[i][j] * invariant) / (4.0 * PI);
        }
    }
    StressEnergy { em, matter: zero_mat() }
}

/// Everything the tangent-bundle pipeline needs from the fields at one base point.
#[derive(Clone, Copy, Debug)]
pub struct FieldSample {
    pub x: Vec4,
    pub metric: MetricJet,
    pub ginv: Mat4,
    /// `∂_k g^ij`
    pub dginv: Tensor3,
    pub gamma: Tensor3,
    /// `∂_l γ^i_jk`
    pub dgamma: Tensor4,
    pub potential: PotentialJet,
    /// `F_ij`
    pub f: Mat4,
    /// `∂_k F_ij`
    pub df: Tensor3,
    /// `F^i_j = g^ih F_hj`
    pub f_up: Mat4,
    /// `∂_k F^i_j`
    pub df_up: Tensor3,
}

impl FieldSample {
    pub fn new(g: &dyn MetricField, a: &dyn PotentialField, x: &Vec4) -> Result<Self> {
        let metric = g.jet(x)?;
        let potential = a.jet(x)?;
        Self::from_jets(*x, metric, potential)
    }

    pub fn from_jets(x: Vec4, metric: MetricJet, potential: PotentialJet) -> Result<Self> {
        let ginv = metric_inverse(&metric.g)?;
        let dginv = inverse_derivative(&ginv, &metric.dg);
        let (gamma, dgamma) = christoffel_from_jet(&metric)?;
        let (f, df) = faraday_from_jet(&potential);
        let mut f_up: Mat4 = zero_mat();
        let mut df_up = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for h in 0..4 {
                    f_up[i][j] += ginv[i][h] * f[h][j];
                    for k in 0..4 {
                        df_up[i][j][k] += dginv[i][h][k] * f[h][j] + ginv[i][h] * df[h][j][k];
                    }
                }
            }
        }
        Ok(Self {
            x,
            metric,
            ginv,
            dginv,
            gamma,
            dgamma,
            potential,
            f,
            df,
            f_up,
            df_up,
        })
    }

    pub fn g(&self) -> &Mat4 {
        &self.metric.g
    }

    pub fn riemann(&self) -> (Tensor4, Mat4) {
        base_riemann_from(&self.gamma, &self.dgamma)
    }

    pub fn covariant_faraday(&self) -> Tensor3 {
        covariant_faraday(&self.f, &self.df, &self.gamma)
    }

    /// `∇_i F^i_j`
    pub fn divergence(&self) -> Vec4 {
        faraday_divergence(&self.f_up, &self.df_up, &self.gamma)
    }

    /// `J^j = (1/4π) g^jm ∇_i F^i_m`
    pub fn current(&self) -> Vec4 {
        let div = self.divergence();
        std::array::from_fn(|j| (0..4).map(|m| self.ginv[j][m] * div[m]).sum::<f64>() / (4.0 * PI))
    }

    pub fn stress_energy_em(&self) -> StressEnergy {
        stress_energy_em(&self.f, &self.metric.g, &self.ginv)
    }
}
