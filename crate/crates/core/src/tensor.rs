//! Fixed-dimension tensor arithmetic on the 4-D base and its tangent bundle.
//!
//! Storage convention: components are plain nested arrays whose index order
//! follows the written order of the symbol, so `E^i_j` is `e[i][j]`,
//! `γ^i_jk` is `gamma[i][j][k]` and `r^i_jkl` is `r[i][j][k][l]`. Partial
//! derivatives append their index last: `∂_l γ^i_jk` is `dgamma[i][j][k][l]`.
//! [`SmallTensor`] is the dynamically ranked, variance-tagged counterpart
//! used at API boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::scalar::Scalar;

pub type Vec4<S = f64> = [S; 4];
pub type Mat4<S = f64> = [[S; 4]; 4];
pub type Tensor3<S = f64> = [[[S; 4]; 4]; 4];
pub type Tensor4<S = f64> = [[[[S; 4]; 4]; 4]; 4];

pub const DIM: usize = 4;

pub fn zero_vec<S: Scalar>() -> Vec4<S> {
    [S::zero(); 4]
}

pub fn zero_mat<S: Scalar>() -> Mat4<S> {
    [[S::zero(); 4]; 4]
}

pub fn zero_t3<S: Scalar>() -> Tensor3<S> {
    [[[S::zero(); 4]; 4]; 4]
}

pub fn identity<S: Scalar>() -> Mat4<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { S::one() } else { S::zero() }))
}

pub fn mat_vec<S: Scalar>(m: &Mat4<S>, v: &Vec4<S>) -> Vec4<S> {
    std::array::from_fn(|i| dot(&m[i], v))
}

pub fn mat_mul<S: Scalar>(a: &Mat4<S>, b: &Mat4<S>) -> Mat4<S> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = S::zero();
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            s
        })
    })
}

pub fn transpose<S: Scalar>(m: &Mat4<S>) -> Mat4<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn dot<S: Scalar>(a: &Vec4<S>, b: &Vec4<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// `g_ij a^i b^j`.
pub fn quadratic<S: Scalar>(g: &Mat4<S>, a: &Vec4<S>, b: &Vec4<S>) -> S {
    dot(a, &mat_vec(g, b))
}

pub fn trace<S: Scalar>(m: &Mat4<S>) -> S {
    m[0][0] + m[1][1] + m[2][2] + m[3][3]
}

/// Antisymmetric part, `T_[ij] = ½(T_ij − T_ji)`.
pub fn antisymmetric_part(m: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] - m[j][i])))
}

pub fn determinant<S: Scalar>(m: &Mat4<S>) -> S {
    let c = cofactors(m);
    m[0][0] * c[0][0] + m[0][1] * c[0][1] + m[0][2] * c[0][2] + m[0][3] * c[0][3]
}

fn minor3<S: Scalar>(m: &Mat4<S>, row: usize, col: usize) -> S {
    let r: [usize; 3] = pick(row);
    let c: [usize; 3] = pick(col);
    let a = |i: usize, j: usize| m[r[i]][c[j]];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

fn pick(skip: usize) -> [usize; 3] {
    let mut out = [0; 3];
    let mut n = 0;
    for k in 0..4 {
        if k != skip {
            out[n] = k;
            n += 1;
        }
    }
    out
}

fn cofactors<S: Scalar>(m: &Mat4<S>) -> Mat4<S> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let c = minor3(m, i, j);
            if (i + j) % 2 == 0 {
                c
            } else {
                -c
            }
        })
    })
}

/// Inverse by cofactor expansion; generic so it differentiates exactly.
pub fn inverse<S: Scalar>(m: &Mat4<S>) -> Mat4<S> {
    let c = cofactors(m);
    let det = m[0][0] * c[0][0] + m[0][1] * c[0][1] + m[0][2] * c[0][2] + m[0][3] * c[0][3];
    let inv_det = det.recip();
    std::array::from_fn(|i| std::array::from_fn(|j| c[j][i] * inv_det))
}

/// Checked inverse of a metric at a point.
pub fn metric_inverse(g: &Mat4) -> Result<Mat4> {
    let det = determinant(g);
    if !det.is_finite() || det.abs() < 1e-10 {
        return Err(GeometryError::DegenerateMetric(det));
    }
    Ok(inverse(g))
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn flatten_mat(m: &Mat4) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

pub fn flatten_t3(t: &Tensor3) -> Vec<f64> {
    t.iter().flatten().flatten().copied().collect()
}

pub fn flatten_t4(t: &Tensor4) -> Vec<f64> {
    t.iter().flatten().flatten().flatten().copied().collect()
}

/// A point of the base manifold, in the chart of the active metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePoint(pub Vec4);

/// A fiber (velocity-like) vector over a base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberVector(pub Vec4);

impl BasePoint {
    pub fn new(x: Vec4) -> Result<Self> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(Self(x))
        } else {
            Err(GeometryError::NonFinite("base point".into()))
        }
    }
}

impl FiberVector {
    pub fn new(y: Vec4) -> Result<Self> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(Self(y))
        } else {
            Err(GeometryError::NonFinite("fiber vector".into()))
        }
    }
}

/// Relative null threshold: `|g(y,y)| < NULL_TOLERANCE · max|y^i|²` is null.
pub const NULL_TOLERANCE: f64 = 1e-12;

/// `(‖y‖, ε)` with `‖y‖ = sqrt(|g_ij y^i y^j|)` and `ε = sign(g_ij y^i y^j)`.
pub fn norm_and_sign(g: &Mat4, y: &Vec4) -> Result<(f64, f64)> {
    norm_and_sign_with(g, y, NULL_TOLERANCE)
}

pub fn norm_and_sign_with(g: &Mat4, y: &Vec4, null_tolerance: f64) -> Result<(f64, f64)> {
    let q = quadratic(g, y, y);
    let scale = max_abs(y.iter().copied());
    let tolerance = null_tolerance * scale * scale;
    if !q.is_finite() {
        return Err(GeometryError::NonFinite("g(y,y)".into()));
    }
    if q.abs() < tolerance || q == 0.0 {
        return Err(GeometryError::NullFiber {
            quadratic: q,
            tolerance,
        });
    }
    Ok((q.abs().sqrt(), q.signum()))
}

/// A non-null point `(x, y)` of the tangent bundle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub base: BasePoint,
    pub fiber: FiberVector,
    pub norm: f64,
    pub causal_sign: f64,
}

impl PhasePoint {
    /// Builds a phase point using the metric components at `x`.
    pub fn new(g: &Mat4, x: Vec4, y: Vec4) -> Result<Self> {
        let base = BasePoint::new(x)?;
        let fiber = FiberVector::new(y)?;
        let (norm, causal_sign) = norm_and_sign(g, &y)?;
        Ok(Self {
            base,
            fiber,
            norm,
            causal_sign,
        })
    }

    pub fn x(&self) -> &Vec4 {
        &self.base.0
    }

    pub fn y(&self) -> &Vec4 {
        &self.fiber.0
    }
}

/// `l^i = y^i/‖y‖` and `l_i = g_ij l^j`.
pub fn distinguished_section(p: &PhasePoint, g: &Mat4) -> (Vec4, Vec4) {
    let up: Vec4 = std::array::from_fn(|i| p.y()[i] / p.norm);
    let down = mat_vec(g, &up);
    (up, down)
}

/// Angular metric `h_ij = g_ij − ε l_i l_j`; annihilates `y` for either causal sign.
pub fn angular_metric(p: &PhasePoint, g: &Mat4) -> Mat4 {
    let (_, l) = distinguished_section(p, g);
    std::array::from_fn(|i| std::array::from_fn(|j| g[i][j] - p.causal_sign * l[i] * l[j]))
}

/// Generic angular metric, for evaluation under nested derivatives.
pub fn angular_metric_generic<S: Scalar>(g: &Mat4<S>, y: &Vec4<S>, sign: f64) -> Mat4<S> {
    let norm = (quadratic(g, y, y) * sign).sqrt();
    let l: Vec4<S> = std::array::from_fn(|i| mat_vec(g, y)[i] / norm);
    std::array::from_fn(|i| std::array::from_fn(|j| g[i][j] - l[i] * l[j] * sign))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

/// Which basis the components refer to. Horizontal tensors on the tangent
/// bundle are expressed in the adapted frame `δ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Coordinate,
    Adapted,
}

/// Rank 0–4 tensor with per-slot variance and a frame tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallTensor {
    variance: Vec<Variance>,
    frame: Frame,
    data: Vec<f64>,
}

impl SmallTensor {
    pub fn new(variance: Vec<Variance>, frame: Frame, data: Vec<f64>) -> Result<Self> {
        if variance.len() > 4 {
            return Err(GeometryError::SlotOutOfRange {
                slot: variance.len(),
                rank: 4,
            });
        }
        let expected = DIM.pow(variance.len() as u32);
        if data.len() != expected {
            return Err(GeometryError::InvalidParameter {
                name: "data".into(),
                reason: format!("expected {expected} components, got {}", data.len()),
            });
        }
        Ok(Self { variance, frame, data })
    }

    pub fn scalar(value: f64, frame: Frame) -> Self {
        Self {
            variance: Vec::new(),
            frame,
            data: vec![value],
        }
    }

    pub fn zeros(variance: Vec<Variance>, frame: Frame) -> Self {
        let n = DIM.pow(variance.len() as u32);
        Self {
            variance,
            frame,
            data: vec![0.0; n],
        }
    }

    pub fn vector(v: Vec4, variance: Variance, frame: Frame) -> Self {
        Self {
            variance: vec![variance],
            frame,
            data: v.to_vec(),
        }
    }

    pub fn matrix(m: &Mat4, variance: [Variance; 2], frame: Frame) -> Self {
        Self {
            variance: variance.to_vec(),
            frame,
            data: flatten_mat(m),
        }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.rank());
        index.iter().fold(0, |acc, &i| acc * DIM + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for s in (0..self.rank()).rev() {
            idx[s] = flat % DIM;
            flat /= DIM;
        }
        idx
    }

    /// Contracts `slot` with a 2-tensor, flipping its variance.
    fn transform_slot(&self, slot: usize, m: &Mat4, from: Variance, to: Variance) -> Result<Self> {
        if slot >= self.rank() {
            return Err(GeometryError::SlotOutOfRange {
                slot,
                rank: self.rank(),
            });
        }
        if self.variance[slot] != from {
            return Err(GeometryError::VarianceMismatch { slot });
        }
        let mut out = self.clone();
        out.variance[slot] = to;
        for flat in 0..self.data.len() {
            let idx = self.multi_index(flat);
            let mut src = idx.clone();
            let mut s = 0.0;
            for k in 0..DIM {
                src[slot] = k;
                s += m[idx[slot]][k] * self.get(&src);
            }
            out.data[flat] = s;
        }
        Ok(out)
    }

    pub fn lower_index(&self, slot: usize, g: &Mat4) -> Result<Self> {
        self.transform_slot(slot, g, Variance::Up, Variance::Down)
    }

    pub fn raise_index(&self, slot: usize, g_inv: &Mat4) -> Result<Self> {
        self.transform_slot(slot, g_inv, Variance::Down, Variance::Up)
    }

    /// Lowers every contravariant slot; the identity on scalars.
    pub fn lower_all(&self, g: &Mat4) -> Result<Self> {
        let mut out = self.clone();
        for slot in 0..self.rank() {
            if out.variance[slot] == Variance::Up {
                out = out.lower_index(slot, g)?;
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.frame != other.frame {
            return Err(GeometryError::FrameMismatch {
                left: self.frame,
                right: other.frame,
            });
        }
        if self.variance != other.variance {
            let slot = self
                .variance
                .iter()
                .zip(&other.variance)
                .position(|(a, b)| a != b)
                .unwrap_or(self.rank().min(other.rank()));
            return Err(GeometryError::VarianceMismatch { slot });
        }
        Ok(Self {
            variance: self.variance.clone(),
            frame: self.frame,
            data: self.data.iter().zip(&other.data).map(|(a, b)| op(*a, *b)).collect(),
        })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            variance: self.variance.clone(),
            frame: self.frame,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    /// Re-tags the frame. Horizontal components coincide with coordinate
    /// components of the projected base tensor, so this is a relabeling.
    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINKOWSKI: Mat4 = [
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];

    fn schwarzschild_diag(m: f64, r: f64) -> Mat4 {
        let f = 1.0 - 2.0 * m / r;
        let mut g = zero_mat();
        g[0][0] = -f;
        g[1][1] = 1.0 / f;
        g[2][2] = r * r;
        g[3][3] = r * r;
        g
    }

    #[test]
    fn lowering_minkowski_time_vector() {
        let t = SmallTensor::vector([1.0, 0.0, 0.0, 0.0], Variance::Up, Frame::Coordinate);
        let low = t.lower_index(0, &MINKOWSKI).unwrap();
        assert_eq!(low.data(), &[-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(low.variance(), &[Variance::Down]);
    }

    #[test]
    fn lowering_rank_zero_is_identity() {
        let s = SmallTensor::scalar(3.5, Frame::Coordinate);
        assert_eq!(s.lower_all(&MINKOWSKI).unwrap(), s);
        assert!(matches!(
            s.lower_index(0, &MINKOWSKI),
            Err(GeometryError::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn lowering_schwarzschild_static_vector() {
        let g = schwarzschild_diag(1.0, 10.0);
        let t = SmallTensor::vector([1.0, 0.0, 0.0, 0.0], Variance::Up, Frame::Coordinate);
        let low = t.lower_index(0, &g).unwrap();
        assert!((low.data()[0] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn lowering_a_covariant_slot_is_rejected() {
        let t = SmallTensor::vector([1.0, 0.0, 0.0, 0.0], Variance::Down, Frame::Coordinate);
        assert_eq!(
            t.lower_index(0, &MINKOWSKI),
            Err(GeometryError::VarianceMismatch { slot: 0 })
        );
    }

    #[test]
    fn mixing_frames_is_an_error() {
        let a = SmallTensor::vector([1.0; 4], Variance::Up, Frame::Coordinate);
        let b = SmallTensor::vector([1.0; 4], Variance::Up, Frame::Adapted);
        assert!(matches!(a.checked_add(&b), Err(GeometryError::FrameMismatch { .. })));
        assert!(a.checked_add(&b.with_frame(Frame::Coordinate)).is_ok());
    }

    #[test]
    fn norm_and_sign_minkowski_examples() {
        assert_eq!(norm_and_sign(&MINKOWSKI, &[0.0, 1.0, 0.0, 0.0]).unwrap(), (1.0, 1.0));
        assert_eq!(norm_and_sign(&MINKOWSKI, &[1.0, 0.0, 0.0, 0.0]).unwrap(), (1.0, -1.0));
        let (n, e) = norm_and_sign(&MINKOWSKI, &[2.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((n - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(e, -1.0);
    }

    #[test]
    fn null_vector_is_rejected() {
        assert!(matches!(
            norm_and_sign(&MINKOWSKI, &[1.0, 1.0, 0.0, 0.0]),
            Err(GeometryError::NullFiber { .. })
        ));
    }

    #[test]
    fn distinguished_section_examples() {
        let p = PhasePoint::new(&MINKOWSKI, [0.0; 4], [0.0, 2.0, 0.0, 0.0]).unwrap();
        let (up, down) = distinguished_section(&p, &MINKOWSKI);
        assert_eq!(up, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(down, [0.0, 1.0, 0.0, 0.0]);

        let g = schwarzschild_diag(1.0, 10.0);
        let p = PhasePoint::new(&g, [0.0, 10.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0]).unwrap();
        let (up, down) = distinguished_section(&p, &g);
        assert!((up[0] - 1.0 / 0.8f64.sqrt()).abs() < 1e-15);
        assert!((p.causal_sign * dot(&up, &down) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angular_metric_spacelike_minkowski() {
        let p = PhasePoint::new(&MINKOWSKI, [0.0; 4], [0.0, 1.0, 0.0, 0.0]).unwrap();
        let h = angular_metric(&p, &MINKOWSKI);
        let mut expected = zero_mat();
        expected[0][0] = -1.0;
        expected[2][2] = 1.0;
        expected[3][3] = 1.0;
        assert_eq!(h, expected);
    }

    #[test]
    fn angular_metric_annihilates_timelike_fiber() {
        let g = schwarzschild_diag(1.0, 7.0);
        let y = [1.3, 0.2, 0.05, 0.03];
        let p = PhasePoint::new(&g, [0.0, 7.0, 1.0, 0.0], y).unwrap();
        let h = angular_metric(&p, &g);
        for hy in mat_vec(&h, &y) {
            assert!(hy.abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_of_generic_matrix() {
        let m = [
            [2.0, 0.3, -0.1, 0.0],
            [0.3, -1.5, 0.2, 0.4],
            [-0.1, 0.2, 3.0, 0.1],
            [0.0, 0.4, 0.1, 1.2],
        ];
        let p = mat_mul(&m, &inverse(&m));
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-14);
            }
        }
    }
}
