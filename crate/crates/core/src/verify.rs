//! Identity checks on random phase points.
//!
//! Every check compares two independently computed quantities. Residuals are
//! relative to the largest magnitude among the terms that enter the
//! comparison, so cancellations (vacuum traces, α = 0 reductions) are judged
//! against the size of what cancelled rather than against zero.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{
    connection_fiber_derivative, quadratic_laplacian, section_box, section_derivative, spray_fiber_derivative,
    strong_torsion, ConnectionData, LocalGeometry,
};
use crate::curvature::{
    b_divergence, d_curvature, electrogravitic, nonlinear_curvature, section_tidal, tidal, tidal_tilde,
};
use crate::error::{GeometryError, Result};
use crate::scenario::{EinsteinSource, Resolved};
use crate::table::Table;
use crate::tensor::{flatten_mat, mat_vec, max_abs, norm_and_sign, quadratic, Mat4, Vec4};

/// Below this every term counts as zero and the check passes on the absolute residual.
pub const ABSOLUTE_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Relative(f64),
    Absolute(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub scenario: String,
    pub point: usize,
    pub alpha: f64,
    pub x: Vec4,
    pub y: Vec4,
    /// Flattened index of the worst component (0 for scalar checks).
    pub component: usize,
    /// Components of lhs and rhs with the largest disagreement.
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub scale: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

/// Identifiers of every check, in report order.
pub const CHECKS: &[&str] = &[
    "ricci_hessian",
    "tidal_reconstruction",
    "trace_reconstruction",
    "dl_faraday",
    "faraday_from_dl",
    "strong_torsion",
    "ll_tidal",
    "tilde_trace",
    "homogeneity_b1",
    "homogeneity_b2",
    "homogeneity_b3",
    "homogeneity_n",
    "homogeneity_g",
    "spray_coherence",
    "affine_coherence",
    "alpha0_tidal",
    "alpha0_ricci",
    "alpha0_curvature",
    "homogeneous_maxwell",
    "homogeneous_maxwell_cyclic",
    "inhomogeneous_maxwell_contortion",
    "inhomogeneous_maxwell_laplacian",
    "inhomogeneous_variants_agree",
    "trace_decomposition",
    "einstein_trace",
    "einstein_ricci",
    "einstein_trace_box",
    "box_identity",
];

const STRUCTURAL: Tolerance = Tolerance::Relative(1e-9);

struct Outcome {
    check: &'static str,
    lhs: Vec<f64>,
    rhs: Vec<f64>,
    scale: f64,
    tolerance: Tolerance,
}

/// Worst component, absolute and relative residual, verdict.
fn judge(lhs: &[f64], rhs: &[f64], scale: f64, tolerance: Tolerance) -> (usize, f64, f64, bool) {
    let mut worst = 0;
    let mut abs = 0.0f64;
    for (k, (a, b)) in lhs.iter().zip(rhs).enumerate() {
        let d = (a - b).abs();
        if d.is_nan() {
            worst = k;
            abs = f64::NAN;
            break;
        }
        if d > abs {
            worst = k;
            abs = d;
        }
    }
    let rel = abs / scale.max(ABSOLUTE_FLOOR);
    let pass = match tolerance {
        _ if abs.is_nan() || !scale.is_finite() => false,
        Tolerance::Absolute(tol) => abs <= tol,
        Tolerance::Relative(_) if scale < ABSOLUTE_FLOOR => abs <= ABSOLUTE_FLOOR,
        Tolerance::Relative(tol) => rel <= tol,
    };
    (worst, abs, rel, pass)
}

/// Collects comparisons for one phase point.
struct Sink(Vec<Outcome>);

impl Sink {
    fn push(&mut self, check: &'static str, lhs: Vec<f64>, rhs: Vec<f64>, terms: f64, tolerance: Tolerance) {
        let scale = max_abs(lhs.iter().chain(&rhs).copied()).max(terms);
        self.0.push(Outcome {
            check,
            lhs,
            rhs,
            scale,
            tolerance,
        });
    }

    fn scalar(&mut self, check: &'static str, lhs: f64, rhs: f64, terms: f64, tolerance: Tolerance) {
        self.push(check, vec![lhs], vec![rhs], terms, tolerance);
    }
}

fn mat_max(m: &Mat4) -> f64 {
    max_abs(m.iter().flatten().copied())
}

/// Largest `Σ_k |a_k|` over the entries of a contraction given term by term.
fn contraction_scale(n: usize, term: impl Fn(usize, usize) -> f64, k: usize) -> f64 {
    (0..n)
        .map(|e| (0..k).map(|t| term(e, t).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn trace(m: &Mat4) -> f64 {
    m[0][0] + m[1][1] + m[2][2] + m[3][3]
}

/// Inputs for the gravitational-trace assembly with a general matter term.
#[derive(Clone, Copy, Debug)]
pub struct BoxTraceTerms {
    pub alpha: f64,
    pub sign: f64,
    pub norm: f64,
    /// `l^i □l_i`
    pub l_box: f64,
    /// `D⁰_{δi} B^i`
    pub d0b: f64,
    /// `B^l_i B^i_l`
    pub bb: f64,
    /// `T^m_ij l^i l^j`
    pub rho_m: f64,
    /// `T^m^l_l`
    pub matter_trace: f64,
}

impl BoxTraceTerms {
    /// `E^i_i/‖y‖²` reassembled from the section Laplacian and the matter terms.
    pub fn rhs(&self) -> f64 {
        let n2 = self.norm * self.norm;
        (2.0 * self.sign / (self.alpha * self.alpha)) * (self.l_box - self.d0b / n2) - 2.0 * self.d0b / n2
            + self.bb / n2
            - 8.0 * PI * (self.rho_m - 0.5 * self.sign * self.matter_trace)
    }

    fn terms(&self) -> f64 {
        let n2 = self.norm * self.norm;
        let k = 2.0 / (self.alpha * self.alpha);
        max_abs([
            k * self.l_box,
            k * self.d0b / n2,
            2.0 * self.d0b / n2,
            self.bb / n2,
            8.0 * PI * self.rho_m,
            4.0 * PI * self.matter_trace,
        ])
    }
}

/// Runs every applicable check at one phase point.
pub fn check_point(resolved: &Resolved, alpha: f64, point: usize, x: &Vec4, y: &Vec4) -> Result<Vec<CheckResult>> {
    let metric = resolved.metric.as_ref();
    let potential = resolved.potential.as_ref();
    let mut spec = resolved.spec;
    spec.alpha = alpha;
    let g0 = metric.jet(x)?.g;
    let (n, sign) = norm_and_sign(&g0, y)?;
    let geo = LocalGeometry::new(metric, potential, spec, x, sign)?;
    let s = &geo.sample;
    let g = s.g();
    let ginv = &s.ginv;
    let q = quadratic(g, y, y);
    let y_low = mat_vec(g, y);
    let l_low: Vec4 = y_low.map(|v| v / n);

    let r = nonlinear_curvature(&geo, y);
    let e = tidal(&r, y);
    let e_trace = trace(&e);
    let e_max = mat_max(&e);
    let (riemann, ric) = s.riemann();
    let riemann_max = max_abs(riemann.iter().flatten().flatten().flatten().copied());
    let small = electrogravitic(&riemann, y);
    let small_trace = trace(&small);
    let d = d_curvature(&geo, y);
    let cd = ConnectionData::new(&geo, y);
    let tilde = tidal_tilde(g, y, sign, &e);
    let mut sink = Sink(Vec::with_capacity(CHECKS.len()));

    // Curvature of D against the pipeline.
    let r_block_max = max_abs(d.r_block.iter().flatten().flatten().flatten().copied());
    sink.push(
        "ricci_hessian",
        flatten_mat(&d.ricci),
        flatten_mat(&d.ricci_contracted),
        r_block_max,
        STRUCTURAL,
    );
    let rebuilt: Mat4 = std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            let mut acc = 0.0;
            for j in 0..4 {
                for l in 0..4 {
                    acc += d.r_block[j][i][k][l] * y[j] * y[l];
                }
            }
            acc
        })
    });
    let rebuilt_terms = contraction_scale(
        16,
        |e, t| d.r_block[t / 4][e / 4][e % 4][t % 4] * y[t / 4] * y[t % 4],
        16,
    );
    sink.push(
        "tidal_reconstruction",
        flatten_mat(&rebuilt),
        flatten_mat(&e),
        rebuilt_terms,
        STRUCTURAL,
    );
    let ryy: f64 = (0..16).map(|t| d.ricci[t / 4][t % 4] * y[t / 4] * y[t % 4]).sum();
    let ryy_terms: f64 = (0..16)
        .map(|t| (d.ricci[t / 4][t % 4] * y[t / 4] * y[t % 4]).abs())
        .sum();
    sink.scalar("trace_reconstruction", e_trace, -ryy, e_max.max(ryy_terms), STRUCTURAL);

    // Distinguished section.
    let dl = section_derivative(&geo, y);
    let gl: Mat4 =
        std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| (cd.affine[k][i][j] * l_low[k]).abs()).sum()));
    let dl_terms = mat_max(&gl);
    let half_f: Mat4 = s.f.map(|row| row.map(|v| 0.5 * alpha * v));
    sink.push(
        "dl_faraday",
        flatten_mat(&dl),
        flatten_mat(&half_f),
        dl_terms,
        STRUCTURAL,
    );
    let anti: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| dl[i][j] - dl[j][i]));
    let af: Mat4 = s.f.map(|row| row.map(|v| alpha * v));
    sink.push(
        "faraday_from_dl",
        flatten_mat(&anti),
        flatten_mat(&af),
        dl_terms,
        STRUCTURAL,
    );

    sink.push(
        "strong_torsion",
        flatten_mat(&strong_torsion(&geo, y)),
        vec![0.0; 16],
        mat_max(&cd.nonlinear),
        STRUCTURAL,
    );
    let ll_terms: f64 = (0..16)
        .map(|t| (y_low[t / 4] * e[t / 4][t % 4] * y[t % 4]).abs())
        .sum::<f64>()
        / q.abs();
    sink.scalar("ll_tidal", section_tidal(g, y, &e), 0.0, ll_terms, STRUCTURAL);
    let tilde_trace: f64 = (0..16).map(|t| ginv[t / 4][t % 4] * tilde[t % 4][t / 4]).sum();
    sink.scalar("tilde_trace", tilde_trace, e_trace, e_max, STRUCTURAL);

    // Homogeneity ladder of the B-family and the connection.
    let contract_last = |t: &dyn Fn(usize, usize, usize) -> f64| -> (Mat4, f64) {
        let m = std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| t(i, j, k) * y[k]).sum()));
        let terms = contraction_scale(16, |e, k| t(e / 4, e % 4, k) * y[k], 4);
        (m, terms)
    };
    let (b1y, b1_terms): (Vec4, f64) = {
        let v = mat_vec(&cd.b_first, y);
        (v, contraction_scale(4, |i, k| cd.b_first[i][k] * y[k], 4))
    };
    sink.push(
        "homogeneity_b1",
        b1y.to_vec(),
        cd.b.map(|v| 2.0 * v).to_vec(),
        b1_terms,
        STRUCTURAL,
    );
    let (b2y, b2_terms) = contract_last(&|i, j, k| cd.b_second[i][j][k]);
    sink.push(
        "homogeneity_b2",
        flatten_mat(&b2y),
        flatten_mat(&cd.b_first),
        b2_terms,
        STRUCTURAL,
    );
    let b3 = crate::connection::b_third(&geo, y);
    let b3y: Vec<f64> = (0..64)
        .map(|e| (0..4).map(|l| b3[e / 16][(e / 4) % 4][e % 4][l] * y[l]).sum())
        .collect();
    let b3_terms = contraction_scale(64, |e, l| b3[e / 16][(e / 4) % 4][e % 4][l] * y[l], 4)
        .max(max_abs(cd.b_second.iter().flatten().flatten().copied()));
    sink.push("homogeneity_b3", b3y, vec![0.0; 64], b3_terms, STRUCTURAL);
    let ny = mat_vec(&cd.nonlinear, y);
    sink.push(
        "homogeneity_n",
        ny.to_vec(),
        cd.spray.map(|v| 2.0 * v).to_vec(),
        contraction_scale(4, |i, k| cd.nonlinear[i][k] * y[k], 4),
        STRUCTURAL,
    );
    let (gy, g_terms) = contract_last(&|i, j, k| cd.affine[i][j][k]);
    sink.push(
        "homogeneity_g",
        flatten_mat(&gy),
        flatten_mat(&cd.nonlinear),
        g_terms,
        STRUCTURAL,
    );
    sink.push(
        "spray_coherence",
        flatten_mat(&cd.nonlinear),
        flatten_mat(&spray_fiber_derivative(&geo, y)),
        0.0,
        STRUCTURAL,
    );
    let dn = connection_fiber_derivative(&geo, y);
    sink.push(
        "affine_coherence",
        cd.affine.iter().flatten().flatten().copied().collect(),
        dn.iter().flatten().flatten().copied().collect(),
        0.0,
        STRUCTURAL,
    );

    // Pure-gravity reductions.
    if alpha == 0.0 {
        let yy_scale = riemann_max * y.iter().map(|v| v.abs()).sum::<f64>().powi(2);
        sink.push(
            "alpha0_tidal",
            flatten_mat(&e),
            flatten_mat(&small),
            yy_scale,
            Tolerance::Relative(1e-10),
        );
        sink.push(
            "alpha0_ricci",
            flatten_mat(&d.ricci),
            flatten_mat(&ric),
            riemann_max,
            Tolerance::Relative(1e-10),
        );
        let ry: Vec<f64> = (0..64)
            .map(|e| (0..4).map(|l| riemann[e / 16][l][(e / 4) % 4][e % 4] * y[l]).sum())
            .collect();
        sink.push(
            "alpha0_curvature",
            r.iter().flatten().flatten().copied().collect(),
            ry,
            riemann_max * y.iter().map(|v| v.abs()).sum::<f64>(),
            Tolerance::Relative(1e-10),
        );
    }

    // Maxwell structure.
    let tilde_anti: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (tilde[i][j] - tilde[j][i])));
    let tilde_max = mat_max(&tilde);
    sink.push(
        "homogeneous_maxwell",
        flatten_mat(&tilde_anti),
        vec![0.0; 16],
        tilde_max,
        Tolerance::Relative(1e-9),
    );
    let nf = s.covariant_faraday();
    let mut cyc_terms = 0.0f64;
    let cyclic: Mat4 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = 0.0;
            for k in 0..4 {
                let parts = [nf[i][j][k], nf[k][i][j], nf[j][k][i]];
                acc += (parts[0] + parts[1] + parts[2]) * y[k];
                cyc_terms = cyc_terms.max(alpha.abs() * n * (parts[0] * y[k]).abs());
            }
            -alpha * n * acc
        })
    });
    sink.push(
        "homogeneous_maxwell_cyclic",
        flatten_mat(&tilde_anti),
        flatten_mat(&cyclic),
        tilde_max.max(cyc_terms),
        Tolerance::Relative(1e-8),
    );

    let current = s.current();
    let rho_c = -(0..4).map(|i| current[i] * l_low[i]).sum::<f64>();
    let charge_source = 4.0 * PI * alpha * rho_c * n * n;
    let bb = crate::curvature::b_quadratic(&geo, y);
    let d0b = b_divergence(&geo, y);
    let lap = quadratic_laplacian(&geo, y);
    let rhs_contortion = small_trace - charge_source + bb;
    let rhs_laplacian = small_trace - 0.5 * charge_source - 0.5 * lap;
    let small_max = mat_max(&small);
    let inhom_terms = max_abs([e_max, small_max, charge_source, bb, 0.5 * lap]);
    sink.scalar(
        "inhomogeneous_maxwell_contortion",
        e_trace,
        rhs_contortion,
        inhom_terms,
        Tolerance::Relative(1e-8),
    );
    sink.scalar(
        "inhomogeneous_maxwell_laplacian",
        e_trace,
        rhs_laplacian,
        inhom_terms,
        Tolerance::Relative(1e-8),
    );
    sink.scalar(
        "inhomogeneous_variants_agree",
        rhs_contortion,
        rhs_laplacian,
        inhom_terms,
        Tolerance::Relative(1e-9),
    );
    let div = s.divergence();
    let y_div: f64 = (0..4).map(|j| y[j] * div[j]).sum();
    let divergence_term = alpha * n * y_div;
    sink.scalar(
        "trace_decomposition",
        e_trace,
        small_trace + divergence_term + bb,
        max_abs([e_max, small_max, divergence_term, bb]),
        Tolerance::Relative(1e-8),
    );

    // Einstein's equations, when the metric has a known source.
    if resolved.source != EinsteinSource::TestField {
        let t = if resolved.source == EinsteinSource::Electromagnetic {
            s.stress_energy_em()
        } else {
            crate::fields::StressEnergy {
                em: [[0.0; 4]; 4],
                matter: [[0.0; 4]; 4],
            }
        };
        let total = t.total();
        let tyy = quadratic(&total, y, y);
        let tr = t.trace(ginv);
        let rhs_einstein = -8.0 * PI * (tyy - 0.5 * tr * q);
        let tol = match resolved.source {
            EinsteinSource::Vacuum => Tolerance::Absolute(1e-10),
            _ => Tolerance::Relative(1e-7),
        };
        let terms = max_abs([small_max, 8.0 * PI * tyy, 4.0 * PI * tr * q]);
        sink.scalar("einstein_trace", small_trace, rhs_einstein, terms, tol);
        let ric_yy = quadratic(&ric, y, y);
        sink.scalar("einstein_ricci", ric_yy, -rhs_einstein, terms, tol);

        if alpha != 0.0 {
            let b = section_box(&geo, y);
            let l_box: f64 = (0..4).map(|i| y[i] * b[i]).sum::<f64>() / n;
            let matter = t.matter;
            let l_up = y.map(|v| v / n);
            let trace_parts = BoxTraceTerms {
                alpha,
                sign,
                norm: n,
                l_box,
                d0b,
                bb,
                rho_m: quadratic(&matter, &l_up, &l_up),
                matter_trace: crate::fields::StressEnergy {
                    em: [[0.0; 4]; 4],
                    matter,
                }
                .trace(ginv),
            };
            sink.scalar(
                "einstein_trace_box",
                e_trace / (n * n),
                trace_parts.rhs(),
                trace_parts.terms().max(e_max / (n * n)),
                Tolerance::Relative(1e-7),
            );
        }
    }

    // Wave operator on the section.
    let b = section_box(&geo, y);
    let lhs_box: f64 = n * (0..4).map(|i| y[i] * b[i]).sum::<f64>();
    let fy = mat_vec(&s.f_up, y);
    let fy_low = mat_vec(g, &fy);
    let ff_y: f64 = (0..4).map(|h| fy[h] * fy_low[h]).sum();
    let invariant: f64 = (0..16)
        .map(|t| {
            let (k, h) = (t / 4, t % 4);
            let up: f64 = (0..4).map(|m| s.f_up[k][m] * ginv[m][h]).sum();
            up * s.f[k][h]
        })
        .sum();
    let a2 = alpha * alpha;
    // □l is assembled from ∂γ and γγ contracted with l; those set the size of the roundoff.
    let gamma_max = max_abs(s.gamma.iter().flatten().flatten().copied());
    let dgamma_max = max_abs(s.dgamma.iter().flatten().flatten().flatten().copied());
    let box_terms = n
        * y.iter().map(|v| v.abs()).sum::<f64>()
        * max_abs(l_low)
        * mat_max(ginv)
        * dgamma_max.max(gamma_max * gamma_max);
    let rhs_box = d0b + a2 * (-sign * ff_y + 0.25 * invariant * n * n);
    sink.scalar(
        "box_identity",
        lhs_box,
        rhs_box,
        max_abs([d0b, a2 * ff_y, 0.25 * a2 * invariant * n * n, box_terms]),
        Tolerance::Relative(1e-8),
    );

    Ok(sink
        .0
        .into_iter()
        .map(|o| {
            let (component, abs_residual, rel_residual, pass) = judge(&o.lhs, &o.rhs, o.scale, o.tolerance);
            CheckResult {
                check: o.check.to_string(),
                scenario: resolved.scenario.id.clone(),
                point,
                alpha,
                x: *x,
                y: *y,
                component,
                lhs: o.lhs[component],
                rhs: o.rhs[component],
                abs_residual,
                rel_residual,
                scale: o.scale,
                tolerance: o.tolerance,
                pass,
            }
        })
        .collect())
}

const MAX_ATTEMPTS: usize = 100_000;

/// Draws `count` phase points with timelike `g(y, y) ∈ [−4, −¼]` inside the
/// scenario's sampling box. `stream` separates scenarios sharing a seed.
pub fn sample_points(resolved: &Resolved, count: usize, seed: u64, stream: u64) -> Result<Vec<(Vec4, Vec4)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let b = &resolved.sampling;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS * (count.max(1)) {
            return Err(GeometryError::InvalidParameter {
                name: "sampling".into(),
                reason: format!("no valid phase points found in {attempts} attempts"),
            });
        }
        let x: Vec4 = std::array::from_fn(|i| {
            if b.hi[i] > b.lo[i] {
                rng.gen_range(b.lo[i]..b.hi[i])
            } else {
                b.lo[i]
            }
        });
        let Ok(jet) = resolved.metric.jet(&x) else { continue };
        if resolved.potential.check_chart(&x).is_err() {
            continue;
        }
        let g = jet.g;
        let u0: f64 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut u: Vec4 = [u0, 0.0, 0.0, 0.0];
        for v in u.iter_mut().skip(1) {
            *v = rng.gen_range(-1.5..1.5);
        }
        let y: Vec4 = std::array::from_fn(|i| u[i] / g[i][i].abs().sqrt());
        let q = quadratic(&g, &y, &y);
        if (-4.0..=-0.25).contains(&q) {
            out.push((x, y));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub id: String,
    pub metric: String,
    pub potential: String,
    pub einstein_source: EinsteinSource,
    pub points: usize,
    pub alphas: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub pass: usize,
    pub fail: usize,
    pub max_rel_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub max_rel_residual: f64,
    pub per_check: BTreeMap<String, CheckSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub scenarios: Vec<ScenarioInfo>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-check pass/fail table.
    pub fn summary_table(&self) -> String {
        let mut out = format!("{:<30} {:>6} {:>6} {:>12}\n", "check", "pass", "fail", "max_rel");
        for (name, s) in &self.summary.per_check {
            out.push_str(&format!(
                "{:<30} {:>6} {:>6} {:>12.3e}\n",
                name, s.pass, s.fail, s.max_rel_residual
            ));
        }
        out.push_str(&format!(
            "total: {} passed, {} failed, max relative residual {:.3e}\n",
            self.summary.pass, self.summary.fail, self.summary.max_rel_residual
        ));
        out
    }
}

/// Suite parameters; `alphas` of `None` uses each scenario's own α.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub points: usize,
    pub alphas: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            points: 50,
            alphas: None,
            seed: 0,
        }
    }
}

fn summarize(checks: &[CheckResult]) -> Summary {
    let mut summary = Summary::default();
    for c in checks {
        let entry = summary.per_check.entry(c.check.clone()).or_default();
        let rel = if c.rel_residual.is_nan() {
            f64::INFINITY
        } else {
            c.rel_residual
        };
        if c.pass {
            entry.pass += 1;
            summary.pass += 1;
        } else {
            entry.fail += 1;
            summary.fail += 1;
        }
        entry.max_rel_residual = entry.max_rel_residual.max(rel);
        summary.max_rel_residual = summary.max_rel_residual.max(rel);
    }
    summary
}

/// Runs every check on every scenario. Points are drawn sequentially and
/// evaluated in parallel; results come back in a fixed order.
pub fn run_suite(scenarios: &[Resolved], cfg: &SuiteConfig) -> Result<Report> {
    let mut jobs = Vec::new();
    let mut infos = Vec::new();
    for (k, r) in scenarios.iter().enumerate() {
        let alphas = cfg.alphas.clone().unwrap_or_else(|| vec![r.spec.alpha]);
        let points = sample_points(r, cfg.points, cfg.seed, k as u64)?;
        infos.push(ScenarioInfo {
            id: r.scenario.id.clone(),
            metric: r.metric.name().to_string(),
            potential: r.potential.name().to_string(),
            einstein_source: r.source,
            points: points.len(),
            alphas: alphas.clone(),
        });
        for &alpha in &alphas {
            for (p, (x, y)) in points.iter().enumerate() {
                jobs.push((k, alpha, p, *x, *y));
            }
        }
    }
    let results: Vec<Vec<CheckResult>> = jobs
        .par_iter()
        .map(|(k, alpha, p, x, y)| check_point(&scenarios[*k], *alpha, *p, x, y))
        .collect::<Result<_>>()?;
    let checks: Vec<CheckResult> = results.into_iter().flatten().collect();
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        scenarios: infos,
        summary: summarize(&checks),
        checks,
    })
}

/// Trace decomposition and `B^i` across α at the same sampled points of one scenario.
pub fn sweep(resolved: &Resolved, alphas: &[f64], points: usize, seed: u64) -> Result<Table> {
    let header = [
        "alpha",
        "point",
        "tidal_trace",
        "gravity",
        "divergence",
        "b_quadratic",
        "rel_residual",
        "b0",
        "b1",
        "b2",
        "b3",
    ];
    let mut table = Table::new(header.iter().map(|s| s.to_string()).collect());
    let pts = sample_points(resolved, points, seed, 0)?;
    for &alpha in alphas {
        for (p, (x, y)) in pts.iter().enumerate() {
            let (_, sign) = norm_and_sign(&resolved.metric.jet(x)?.g, y)?;
            let mut spec = resolved.spec;
            spec.alpha = alpha;
            let geo = LocalGeometry::new(resolved.metric.as_ref(), resolved.potential.as_ref(), spec, x, sign)?;
            let t = crate::curvature::trace_decomposition(&geo, y);
            let scale = t.scale();
            let rel = if scale > 0.0 {
                (t.lhs - t.rhs).abs() / scale
            } else {
                0.0
            };
            let b = ConnectionData::new(&geo, y).b;
            table.push(vec![
                alpha,
                p as f64,
                t.lhs,
                t.gravity,
                t.divergence,
                t.b_quadratic,
                rel,
                b[0],
                b[1],
                b[2],
                b[3],
            ]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_suite;

    #[test]
    fn judge_uses_relative_scale_and_floor() {
        let (_, _, rel, pass) = judge(&[1.0], &[1.0 + 1e-10], 1.0, Tolerance::Relative(1e-9));
        assert!(pass && rel < 1e-9);
        assert!(!judge(&[1.0], &[1.1], 1.1, Tolerance::Relative(1e-9)).3);
        let (_, _, rel, pass) = judge(&[1e-16], &[-1e-16], 1e-16, Tolerance::Relative(1e-12));
        assert!(pass && rel < 0.1);
        assert!(!judge(&[f64::NAN], &[0.0], 1.0, Tolerance::Relative(1.0)).3);
        assert!(judge(&[3e-11], &[0.0], 1.0, Tolerance::Absolute(1e-10)).3);
        assert_eq!(judge(&[0.0, 1.0, 2.0], &[0.0, 1.5, 2.1], 2.0, STRUCTURAL).0, 1);
    }

    #[test]
    fn box_trace_with_matter_is_plain_arithmetic() {
        let t = BoxTraceTerms {
            alpha: 2.0,
            sign: -1.0,
            norm: 2.0,
            l_box: 0.5,
            d0b: 1.0,
            bb: 4.0,
            rho_m: 0.1,
            matter_trace: -0.2,
        };
        // (2·−1/4)(0.5 − 0.25) − 0.5 + 1 − 8π(0.1 − 0.1)
        assert!((t.rhs() - (-0.125 - 0.5 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn builtin_points_pass() {
        let suite: Vec<_> = builtin_suite().iter().map(|s| s.resolve().unwrap()).collect();
        let report = run_suite(
            &suite,
            &SuiteConfig {
                points: 3,
                alphas: Some(vec![0.0, 1.0, -2.5]),
                seed: 11,
            },
        )
        .unwrap();
        let failures: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
        assert!(
            failures.is_empty(),
            "{}\n{:#?}",
            report.summary_table(),
            &failures[..failures.len().min(3)]
        );
        for id in CHECKS {
            assert!(report.summary.per_check.contains_key(*id), "{id} never ran");
        }
    }

    #[test]
    fn samples_are_timelike_and_reproducible() {
        let r = builtin_suite()[2].resolve().unwrap();
        let a = sample_points(&r, 20, 5, 2).unwrap();
        assert_eq!(a, sample_points(&r, 20, 5, 2).unwrap());
        assert_ne!(a, sample_points(&r, 20, 5, 3).unwrap());
        for (x, y) in &a {
            let q = quadratic(&r.metric.jet(x).unwrap().g, y, y);
            assert!((-4.0..=-0.25).contains(&q));
        }
    }
}
