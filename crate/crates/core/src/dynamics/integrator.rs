//! Explicit Runge-Kutta integrators: classical RK4 with a fixed step and
//! Dormand-Prince 5(4) with adaptive step control.
//!
//! Steps are clamped so that every requested sample time is hit exactly.
//! A right-hand side that reports a chart violation ends the run at the last
//! completed sample instead of failing it.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4,
    /// Dormand-Prince 5(4) with adaptive step.
    Rk45,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for rk4, initial step for rk45.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub t_end: f64,
    /// Number of equal intervals in `[0, t_end]`; output has `samples + 1` rows.
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            step: 1e-2,
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 1_000_000,
            t_end: 10.0,
            samples: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(GeometryError::InvalidParameter {
                name: format!("integrator.{name}"),
                reason: reason.into(),
            })
        };
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step", "must be positive and finite");
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol", "tolerances must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps", "must be at least 1");
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end", "must be positive and finite");
        }
        if self.samples == 0 {
            return bad("samples", "must be at least 1");
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.samples)
            .map(|i| self.t_end * i as f64 / self.samples as f64)
            .collect()
    }
}

/// Where and why a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Truncation {
    /// Parameter of the last accepted state.
    pub t: f64,
    /// Base point of the last accepted state.
    pub point: [f64; 4],
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Integration<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub truncation: Option<Truncation>,
    pub steps: usize,
}

enum Stage<const D: usize> {
    Ok([f64; D]),
    Exit(String),
}

fn eval<const D: usize, F>(f: &F, t: f64, y: &[f64; D]) -> Result<Stage<D>>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(Stage::Exit("state became non-finite".into()));
    }
    match f(t, y) {
        Ok(d) => Ok(Stage::Ok(d)),
        Err(e @ GeometryError::ChartViolation { .. }) => Ok(Stage::Exit(e.to_string())),
        // The spray is undefined once y drifts onto the light cone; near a
        // coordinate singularity this is how breakdown shows up first.
        Err(e @ GeometryError::NullFiber { .. }) => Ok(Stage::Exit(format!("fiber left its causal sector: {e}"))),
        Err(e) => Err(e),
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|i| {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        y[i] + h * s
    })
}

fn point_of<const D: usize>(y: &[f64; D]) -> [f64; 4] {
    std::array::from_fn(|i| if i < D { y[i] } else { f64::NAN })
}

/// Integrates `dy/dt = f(t, y)` from `t = 0` and records the sample times of `cfg`.
pub fn integrate<const D: usize, F>(f: F, y0: [f64; D], cfg: &IntegratorConfig) -> Result<Integration<D>>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    cfg.validate()?;
    let times = cfg.sample_times();
    let mut out = Integration {
        times: vec![0.0],
        states: vec![y0],
        truncation: None,
        steps: 0,
    };
    if let Stage::Exit(reason) = eval(&f, 0.0, &y0)? {
        out.truncation = Some(Truncation {
            t: 0.0,
            point: point_of(&y0),
            reason,
        });
        return Ok(out);
    }
    match cfg.method {
        Method::Rk4 => rk4(&f, y0, &times, cfg, &mut out)?,
        Method::Rk45 => dopri5(&f, y0, &times, cfg, &mut out)?,
    }
    Ok(out)
}

fn rk4<const D: usize, F>(
    f: &F,
    mut y: [f64; D],
    times: &[f64],
    cfg: &IntegratorConfig,
    out: &mut Integration<D>,
) -> Result<()>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut t = 0.0;
    for &target in &times[1..] {
        let n = ((target - t) / cfg.step).ceil().max(1.0) as usize;
        let h = (target - t) / n as f64;
        for s in 0..n {
            if out.steps >= cfg.max_steps {
                return Err(GeometryError::StepLimit(cfg.max_steps));
            }
            let ts = t + s as f64 * h;
            let mut k = [[0.0; D]; 4];
            let nodes = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
            for (stage, &(c, a)) in nodes.iter().enumerate() {
                let ys = if stage == 0 {
                    y
                } else {
                    axpy(&y, h, &[(a, &k[stage - 1])])
                };
                match eval(f, ts + c * h, &ys)? {
                    Stage::Ok(d) => k[stage] = d,
                    Stage::Exit(reason) => {
                        out.truncation = Some(Truncation {
                            t: ts,
                            point: point_of(&y),
                            reason,
                        });
                        return Ok(());
                    }
                }
            }
            y = axpy(
                &y,
                h,
                &[
                    (1.0 / 6.0, &k[0]),
                    (1.0 / 3.0, &k[1]),
                    (1.0 / 3.0, &k[2]),
                    (1.0 / 6.0, &k[3]),
                ],
            );
            out.steps += 1;
        }
        t = target;
        out.times.push(t);
        out.states.push(y);
    }
    Ok(())
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum Trial<const D: usize> {
    Step { y: [f64; D], err: f64 },
    Exit(String),
}

fn dopri_step<const D: usize, F>(f: &F, t: f64, y: &[f64; D], h: f64, cfg: &IntegratorConfig) -> Result<Trial<D>>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut k = [[0.0; D]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..D {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        match eval(f, t + C[s] * h, &ys)? {
            Stage::Ok(d) => k[s] = d,
            Stage::Exit(reason) => return Ok(Trial::Exit(reason)),
        }
    }
    let mut y5 = *y;
    let mut err = 0.0;
    for i in 0..D {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for s in 0..7 {
            s5 += B5[s] * k[s][i];
            s4 += B4[s] * k[s][i];
        }
        y5[i] += h * s5;
        let scale = cfg.atol + cfg.rtol * y[i].abs().max(y5[i].abs());
        let e = h * (s5 - s4) / scale;
        err += e * e;
    }
    Ok(Trial::Step {
        y: y5,
        err: (err / D as f64).sqrt(),
    })
}

fn dopri5<const D: usize, F>(
    f: &F,
    mut y: [f64; D],
    times: &[f64],
    cfg: &IntegratorConfig,
    out: &mut Integration<D>,
) -> Result<()>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut t = 0.0;
    let mut h = cfg.step;
    let mut attempts = 0usize;
    for &target in &times[1..] {
        while t < target {
            if attempts >= cfg.max_steps {
                return Err(GeometryError::StepLimit(cfg.max_steps));
            }
            attempts += 1;
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let floor = 1e-14 * (1.0 + t.abs());
            match dopri_step(f, t, &y, hs, cfg)? {
                Trial::Exit(reason) => {
                    if hs <= floor {
                        out.truncation = Some(Truncation {
                            t,
                            point: point_of(&y),
                            reason,
                        });
                        return Ok(());
                    }
                    h = hs * 0.25;
                }
                Trial::Step { y: y_new, err } => {
                    if err <= 1.0 {
                        y = y_new;
                        t = if last { target } else { t + hs };
                        out.steps += 1;
                    } else if hs <= floor {
                        // the solution is running into a singular locus
                        out.truncation = Some(Truncation {
                            t,
                            point: point_of(&y),
                            reason: format!("step size underflow at t = {t}"),
                        });
                        return Ok(());
                    }
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // A step shortened to land on a sample time says nothing
                    // about the natural step size; keep the previous one.
                    if !(last && err <= 1.0) || hs * factor > h {
                        h = hs * factor;
                    }
                }
            }
        }
        out.times.push(target);
        out.states.push(y);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method) -> IntegratorConfig {
        IntegratorConfig {
            method,
            step: 1e-3,
            t_end: 2.0,
            samples: 4,
            ..IntegratorConfig::default()
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        for method in [Method::Rk4, Method::Rk45] {
            let run = integrate(|_, y: &[f64; 1]| Ok([-y[0]]), [1.0], &cfg(method)).unwrap();
            assert_eq!(run.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
            for (t, y) in run.times.iter().zip(&run.states) {
                assert!((y[0] - (-t).exp()).abs() < 1e-10, "{method:?} t={t}");
            }
        }
    }

    #[test]
    fn harmonic_oscillator_keeps_energy() {
        let c = IntegratorConfig {
            t_end: 50.0,
            samples: 10,
            ..IntegratorConfig::default()
        };
        let run = integrate(|_, y: &[f64; 2]| Ok([y[1], -y[0]]), [1.0, 0.0], &c).unwrap();
        let last = run.states.last().unwrap();
        assert!((last[0] - 50f64.cos()).abs() < 1e-8);
        assert!((last[0].powi(2) + last[1].powi(2) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chart_exit_truncates_at_last_sample() {
        let rhs = |_: f64, y: &[f64; 4]| {
            if y[0] > 1.3 {
                Err(GeometryError::ChartViolation {
                    field: "test".into(),
                    point: *y,
                    reason: "beyond wall".into(),
                })
            } else {
                Ok([1.0, 0.0, 0.0, 0.0])
            }
        };
        for method in [Method::Rk4, Method::Rk45] {
            let run = integrate(rhs, [0.0; 4], &cfg(method)).unwrap();
            assert_eq!(run.times, vec![0.0, 0.5, 1.0]);
            let cut = run.truncation.expect("truncated");
            assert!(cut.t <= 1.3 + 1e-9 && cut.t >= 1.0, "{method:?}: {}", cut.t);
        }
    }

    #[test]
    fn step_limit_is_an_error() {
        let c = IntegratorConfig {
            max_steps: 3,
            ..cfg(Method::Rk4)
        };
        let err = integrate(|_, y: &[f64; 1]| Ok([y[0]]), [1.0], &c).unwrap_err();
        assert_eq!(err, GeometryError::StepLimit(3));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let c = IntegratorConfig {
            rtol: 0.0,
            ..IntegratorConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
