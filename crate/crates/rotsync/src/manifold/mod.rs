//! Geometry of SO(D): rotations, tangent spaces, exponential/logarithm maps,
//! the bi-invariant distance, Haar sampling, and smallest enclosing balls.
//!
//! Two metric conventions live side by side, by design:
//!
//! * the SO(D) path measures distance as the Frobenius norm of the matrix
//!   logarithm, `d(A, B) = ||log(A B^T)||_F`;
//! * the SO(2) path, via [`UnitComplex`], uses the angular distance
//!   `d_ang(z, w) = |arg(z conj(w))|`.
//!
//! For 2x2 rotations the two are related by `d = sqrt(2) * d_ang`; that
//! conversion is owned here and asserted in tests. Tangent vectors carry
//! coordinates in a fixed basis of the skew-symmetric matrices, scaled so
//! that the Euclidean norm of the coordinates equals the Frobenius norm of
//! the ambient logarithm. Depth computations downstream therefore see an
//! isometric copy of the tangent space with no extra weighting.

mod ball;

pub use ball::{enclosing_arc, smallest_enclosing_ball};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, SyncError};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Angle tolerance around pi inside which the logarithm is refused.
pub const CUT_TOLERANCE: f64 = 1e-9;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    if -std::f64::consts::PI < x && x <= std::f64::consts::PI {
        return x;
    }
    // wrap -x into [-pi, pi) and negate, so that +pi is kept and -pi is not
    let y = -x;
    let wrapped = y - TWO_PI * ((y + std::f64::consts::PI) / TWO_PI).floor();
    -wrapped
}

/// Number of tangent coordinates for SO(dim).
pub fn tangent_dim(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

/// Fixed enumeration of the basis 2-planes: pairs (i, j) with i < j in
/// lexicographic order.
pub fn basis_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(tangent_dim(dim));
    for i in 0..dim {
        for j in (i + 1)..dim {
            pairs.push((i, j));
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// Rotation
// ---------------------------------------------------------------------------

/// An element of SO(D), stored as a D x D orthogonal matrix with det +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    dim: usize,
    entries: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 2, "rotation dimension must be at least 2");
        Rotation {
            dim,
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Validates orthogonality (1e-12 per entry) and det +1 (1e-12).
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim < 2 || entries.ncols() != dim {
            return Err(SyncError::InvalidInput(format!(
                "rotation matrix must be square with D >= 2, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let gram = entries.transpose() * &entries;
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - expected).abs() > 1e-12 {
                    return Err(SyncError::InvalidInput(format!(
                        "matrix is not orthogonal: |(R^T R - I)[{i},{j}]| = {:e}",
                        (gram[(i, j)] - expected).abs()
                    )));
                }
            }
        }
        let det = entries.clone().lu().determinant();
        if (det - 1.0).abs() > 1e-12 {
            return Err(SyncError::InvalidInput(format!(
                "matrix determinant is {det}, expected +1"
            )));
        }
        Ok(Rotation { dim, entries })
    }

    /// Skips validation; for internal construction from known-good data.
    pub(crate) fn from_matrix_unchecked(entries: DMatrix<f64>) -> Self {
        let dim = entries.nrows();
        Rotation { dim, entries }
    }

    /// 2x2 rotation by `theta` (counterclockwise).
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Rotation {
            dim: 2,
            entries: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
        }
    }

    /// Principal angle of a 2x2 rotation, in (-pi, pi].
    pub fn angle(&self) -> f64 {
        assert_eq!(self.dim, 2, "angle() requires D = 2");
        let m = &self.entries;
        f64::atan2(m[(1, 0)], m[(0, 0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn transpose(&self) -> Rotation {
        Rotation {
            dim: self.dim,
            entries: self.entries.transpose(),
        }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        assert_eq!(self.dim, other.dim, "rotation dimension mismatch");
        Rotation {
            dim: self.dim,
            entries: &self.entries * &other.entries,
        }
    }

    /// Row-major flattening, the serialization order of the JSON formats.
    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.push(self.entries[(i, j)]);
            }
        }
        out
    }

    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(SyncError::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} rotation, got {}",
                dim * dim,
                data.len()
            )));
        }
        Rotation::from_matrix(DMatrix::from_row_slice(dim, dim, data))
    }
}

// ---------------------------------------------------------------------------
// TangentVector
// ---------------------------------------------------------------------------

/// An element of the tangent space at a base rotation, in coordinates of
/// length D(D-1)/2. The coordinate norm equals the Frobenius norm of the
/// corresponding skew-symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Rotation,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Rotation, coords: Vec<f64>) -> Result<Self> {
        let expected = tangent_dim(base.dim());
        if coords.len() != expected {
            return Err(SyncError::DimensionMismatch {
                expected,
                got: coords.len(),
            });
        }
        Ok(TangentVector { base, coords })
    }

    pub fn zero(base: Rotation) -> Self {
        let d = tangent_dim(base.dim());
        TangentVector {
            base,
            coords: vec![0.0; d],
        }
    }

    pub fn base(&self) -> &Rotation {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    /// The so(D) element: skew matrix S with coordinates c_(i,j) stored as
    /// S[j,i] = c / sqrt(2), S[i,j] = -c / sqrt(2).
    pub fn skew(&self) -> DMatrix<f64> {
        let dim = self.base.dim();
        let mut s = DMatrix::zeros(dim, dim);
        for (idx, (i, j)) in basis_pairs(dim).into_iter().enumerate() {
            let v = self.coords[idx] / SQRT2;
            s[(j, i)] = v;
            s[(i, j)] = -v;
        }
        s
    }

    /// The ambient tangent matrix Delta = base * skew.
    pub fn ambient(&self) -> DMatrix<f64> {
        self.base.matrix() * self.skew()
    }

    /// Projects an ambient tangent matrix back to coordinates.
    pub fn from_ambient(base: Rotation, delta: &DMatrix<f64>) -> Result<Self> {
        let dim = base.dim();
        if delta.nrows() != dim || delta.ncols() != dim {
            return Err(SyncError::DimensionMismatch {
                expected: dim,
                got: delta.nrows(),
            });
        }
        let skew = base.matrix().transpose() * delta;
        Ok(Self::from_skew(base, &skew))
    }

    /// Reads coordinates off a skew matrix, antisymmetrizing first.
    pub fn from_skew(base: Rotation, skew: &DMatrix<f64>) -> Self {
        let dim = base.dim();
        let coords = basis_pairs(dim)
            .into_iter()
            .map(|(i, j)| (skew[(j, i)] - skew[(i, j)]) / SQRT2)
            .collect();
        TangentVector { base, coords }
    }

    /// Uniform sample from the closed coordinate ball of the given radius.
    pub fn random_in_ball<R: Rng + ?Sized>(base: Rotation, radius: f64, rng: &mut R) -> Self {
        let d = tangent_dim(base.dim());
        let dir: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
        let coords = if norm == 0.0 {
            vec![0.0; d]
        } else {
            dir.iter().map(|x| x / norm * r).collect()
        };
        TangentVector { base, coords }
    }
}

// ---------------------------------------------------------------------------
// Exponential and logarithm maps
// ---------------------------------------------------------------------------

/// `Exp_base(v) = base * exp(base^T Delta(v))`.
///
/// D = 2 composes angles, D = 3 goes through unit quaternions, D > 3 uses a
/// scaled-and-squared power series.
pub fn exp_map(base: &Rotation, v: &TangentVector) -> Result<Rotation> {
    if base.dim() != v.base().dim() {
        return Err(SyncError::DimensionMismatch {
            expected: base.dim(),
            got: v.base().dim(),
        });
    }
    if base != v.base() {
        return Err(SyncError::InvalidInput(
            "tangent vector is rooted at a different base rotation".into(),
        ));
    }
    match base.dim() {
        2 => {
            let delta = v.coords()[0] / SQRT2;
            Ok(Rotation::from_angle(wrap_angle(base.angle() + delta)))
        }
        3 => {
            let omega = coords_to_axis_angle(v.coords());
            let q_base = mat3_to_quat(base.matrix());
            let q_delta = axis_angle_to_quat(&omega);
            let q = quat_normalize(quat_mul(&q_base, &q_delta));
            Ok(Rotation::from_matrix_unchecked(quat_to_mat3(&q)))
        }
        _ => {
            let m = base.matrix() * exp_series(&v.skew());
            Ok(Rotation::from_matrix_unchecked(m))
        }
    }
}

/// `Log_base(target)`, the inverse of [`exp_map`] away from the cut locus.
///
/// Fails with [`SyncError::CutLocus`] when the relative rotation angle is
/// within [`CUT_TOLERANCE`] of pi (principal-branch instability); callers
/// decide whether to perturb or drop the offending measurement.
pub fn log_map(base: &Rotation, target: &Rotation) -> Result<TangentVector> {
    if base.dim() != target.dim() {
        return Err(SyncError::DimensionMismatch {
            expected: base.dim(),
            got: target.dim(),
        });
    }
    match base.dim() {
        2 => {
            let delta = wrap_angle(target.angle() - base.angle());
            if delta.abs() > std::f64::consts::PI - CUT_TOLERANCE {
                return Err(SyncError::CutLocus { tol: CUT_TOLERANCE });
            }
            TangentVector::new(base.clone(), vec![SQRT2 * delta])
        }
        3 => {
            let rel = base.matrix().transpose() * target.matrix();
            let q = mat3_to_quat(&rel);
            // canonical sign: w >= 0 puts the angle in [0, pi]
            let q = if q[0] < 0.0 { [-q[0], -q[1], -q[2], -q[3]] } else { q };
            let vnorm = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            let theta = 2.0 * f64::atan2(vnorm, q[0]);
            if theta > std::f64::consts::PI - CUT_TOLERANCE {
                return Err(SyncError::CutLocus { tol: CUT_TOLERANCE });
            }
            let omega = if vnorm < 1e-300 {
                [0.0, 0.0, 0.0]
            } else {
                [
                    q[1] / vnorm * theta,
                    q[2] / vnorm * theta,
                    q[3] / vnorm * theta,
                ]
            };
            TangentVector::new(base.clone(), axis_angle_to_coords(&omega))
        }
        _ => {
            let rel = base.matrix().transpose() * target.matrix();
            let skew = orthogonal_log(&rel)?;
            Ok(TangentVector::from_skew(base.clone(), &skew))
        }
    }
}

/// Point at parameter `t` on the geodesic from `a` to `b`.
pub fn geodesic_point(a: &Rotation, b: &Rotation, t: f64) -> Result<Rotation> {
    let v = log_map(a, b)?;
    exp_map(a, &v.scaled(t))
}

/// Bi-invariant distance `||log(a b^T)||_F`, in [0, floor(D/2) * pi].
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    assert_eq!(a.dim(), b.dim(), "rotation dimension mismatch");
    if a.matrix() == b.matrix() {
        return 0.0;
    }
    match a.dim() {
        2 => {
            let m = a.matrix() * b.matrix().transpose();
            let theta = f64::atan2(m[(1, 0)], m[(0, 0)]);
            SQRT2 * theta.abs()
        }
        3 => {
            let m = a.matrix() * b.matrix().transpose();
            let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
            let c = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
            let mut skew_sq = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let e = m[(i, j)] - m[(j, i)];
                    skew_sq += e * e;
                }
            }
            let s = (skew_sq.sqrt() / (2.0 * SQRT2)).clamp(-1.0, 1.0);
            SQRT2 * f64::atan2(s, c)
        }
        _ => {
            // evaluate on a byte-canonical ordering so d(a, b) == d(b, a) exactly
            let swap = matrix_bytes_less(b.matrix(), a.matrix());
            let (x, y) = if swap { (b, a) } else { (a, b) };
            let rel = x.matrix() * y.matrix().transpose();
            let angles = rotation_angles(&rel);
            SQRT2 * angles.iter().map(|t| t * t).sum::<f64>().sqrt()
        }
    }
}

fn matrix_bytes_less(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        let (bx, by) = (x.to_bits(), y.to_bits());
        if bx != by {
            return bx < by;
        }
    }
    false
}

/// Haar-distributed random rotation.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Rotation {
    assert!(dim >= 2);
    match dim {
        2 => {
            let theta = std::f64::consts::PI - rng.gen::<f64>() * TWO_PI;
            Rotation::from_angle(theta)
        }
        3 => {
            let q = quat_normalize([
                standard_normal(rng),
                standard_normal(rng),
                standard_normal(rng),
                standard_normal(rng),
            ]);
            Rotation::from_matrix_unchecked(quat_to_mat3(&q))
        }
        _ => {
            let g = DMatrix::from_fn(dim, dim, |_, _| standard_normal(rng));
            let qr = g.qr();
            let mut q = qr.q();
            let r = qr.r();
            for i in 0..dim {
                if r[(i, i)] < 0.0 {
                    for k in 0..dim {
                        q[(k, i)] = -q[(k, i)];
                    }
                }
            }
            if q.clone().lu().determinant() < 0.0 {
                for k in 0..dim {
                    q[(k, dim - 1)] = -q[(k, dim - 1)];
                }
            }
            Rotation::from_matrix_unchecked(q)
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u clamped away from 0
    let u: f64 = rng.gen::<f64>().max(1e-300);
    let v: f64 = rng.gen::<f64>();
    (-2.0 * u.ln()).sqrt() * (TWO_PI * v).cos()
}

// ---------------------------------------------------------------------------
// Ball
// ---------------------------------------------------------------------------

/// A metric ball in SO(D); the radius is in the Frobenius-log metric.
/// Only balls with radius < pi/2 certify geodesic convexity.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Rotation,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, point: &Rotation, slack: f64) -> bool {
        geodesic_distance(&self.center, point) <= self.radius + slack
    }
}

// ---------------------------------------------------------------------------
// UnitComplex: the SO(2) fast path
// ---------------------------------------------------------------------------

/// A unit complex number stored by its angle in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitComplex {
    angle: f64,
}

impl UnitComplex {
    pub fn from_angle(angle: f64) -> Self {
        UnitComplex {
            angle: wrap_angle(angle),
        }
    }

    pub fn identity() -> Self {
        UnitComplex { angle: 0.0 }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn mul(&self, other: &UnitComplex) -> UnitComplex {
        UnitComplex::from_angle(self.angle + other.angle)
    }

    pub fn conj(&self) -> UnitComplex {
        UnitComplex::from_angle(-self.angle)
    }

    /// `Exp_z(theta) = e^{i theta} z`.
    pub fn exp(&self, theta: f64) -> UnitComplex {
        UnitComplex::from_angle(self.angle + theta)
    }

    /// `Log_z(y) = arg(y conj(z))`, in (-pi, pi].
    pub fn log(&self, target: &UnitComplex) -> f64 {
        wrap_angle(target.angle - self.angle)
    }

    /// `d_ang(z, w) = |arg(z conj(w))|`, in [0, pi].
    pub fn angular_distance(&self, other: &UnitComplex) -> f64 {
        wrap_angle(self.angle - other.angle).abs()
    }

    pub fn to_rotation(&self) -> Rotation {
        Rotation::from_angle(self.angle)
    }

    pub fn from_rotation(r: &Rotation) -> Self {
        UnitComplex {
            angle: r.angle(),
        }
    }
}

// ---------------------------------------------------------------------------
// Quaternion helpers (D = 3), [w, x, y, z] convention
// ---------------------------------------------------------------------------

pub(crate) fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub(crate) fn quat_normalize(q: [f64; 4]) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

fn axis_angle_to_quat(omega: &[f64; 3]) -> [f64; 4] {
    let theta = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if theta < 1e-300 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let (s, c) = (theta / 2.0).sin_cos();
    [
        c,
        s * omega[0] / theta,
        s * omega[1] / theta,
        s * omega[2] / theta,
    ]
}

/// Shepperd's method: stable for all rotation angles.
pub(crate) fn mat3_to_quat(m: &DMatrix<f64>) -> [f64; 4] {
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let (w, x, y, z);
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (m[(2, 1)] - m[(1, 2)]) / s;
        y = (m[(0, 2)] - m[(2, 0)]) / s;
        z = (m[(1, 0)] - m[(0, 1)]) / s;
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        w = (m[(2, 1)] - m[(1, 2)]) / s;
        x = 0.25 * s;
        y = (m[(0, 1)] + m[(1, 0)]) / s;
        z = (m[(0, 2)] + m[(2, 0)]) / s;
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        w = (m[(0, 2)] - m[(2, 0)]) / s;
        x = (m[(0, 1)] + m[(1, 0)]) / s;
        y = 0.25 * s;
        z = (m[(1, 2)] + m[(2, 1)]) / s;
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        w = (m[(1, 0)] - m[(0, 1)]) / s;
        x = (m[(0, 2)] + m[(2, 0)]) / s;
        y = (m[(1, 2)] + m[(2, 1)]) / s;
        z = 0.25 * s;
    }
    quat_normalize([w, x, y, z])
}

pub(crate) fn quat_to_mat3(q: &[f64; 4]) -> DMatrix<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// Axis-angle vector omega (angular velocity) -> tangent coordinates.
///
/// With basis pairs (0,1), (0,2), (1,2), the skew entries are
/// S[1,0] = w_z, S[2,0] = -w_y, S[2,1] = w_x, each scaled by sqrt(2)
/// in coordinates.
fn axis_angle_to_coords(omega: &[f64; 3]) -> Vec<f64> {
    vec![SQRT2 * omega[2], -SQRT2 * omega[1], SQRT2 * omega[0]]
}

fn coords_to_axis_angle(coords: &[f64]) -> [f64; 3] {
    [
        coords[2] / SQRT2,
        -coords[1] / SQRT2,
        coords[0] / SQRT2,
    ]
}

// ---------------------------------------------------------------------------
// General-D machinery: power series exponential, Schur logarithm
// ---------------------------------------------------------------------------

/// Matrix exponential by scaling and squaring of the Taylor series.
fn exp_series(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a / 2f64.powi(scale);
    let mut result = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    for k in 1..=24 {
        term = &term * &b / k as f64;
        result += &term;
        if term.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..scale {
        result = &result * &result;
    }
    result
}

/// Principal rotation angles of an orthogonal matrix via real Schur form.
fn rotation_angles(m: &DMatrix<f64>) -> Vec<f64> {
    let dim = m.nrows();
    let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    let mut angles = Vec::new();
    let mut i = 0;
    while i < dim {
        if i + 1 < dim && t[(i + 1, i)].abs() > 1e-12 {
            let c = (t[(i, i)] + t[(i + 1, i + 1)]) / 2.0;
            let s = (t[(i + 1, i)] - t[(i, i + 1)]) / 2.0;
            angles.push(f64::atan2(s, c).abs());
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                angles.push(std::f64::consts::PI);
            }
            i += 1;
        }
    }
    angles
}

/// Principal matrix logarithm of a special orthogonal matrix, as a skew
/// matrix, via the real Schur decomposition.
fn orthogonal_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    let (q, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    let mut log_t = DMatrix::zeros(dim, dim);
    let mut i = 0;
    while i < dim {
        if i + 1 < dim && t[(i + 1, i)].abs() > 1e-12 {
            let c = (t[(i, i)] + t[(i + 1, i + 1)]) / 2.0;
            let s = (t[(i + 1, i)] - t[(i, i + 1)]) / 2.0;
            let theta = f64::atan2(s, c);
            if theta.abs() > std::f64::consts::PI - CUT_TOLERANCE {
                return Err(SyncError::CutLocus { tol: CUT_TOLERANCE });
            }
            log_t[(i + 1, i)] = theta;
            log_t[(i, i + 1)] = -theta;
            i += 2;
        } else {
            // a diagonal -1 means an angle-pi plane (paired eigenvalue): cut locus
            if t[(i, i)] < 0.0 {
                return Err(SyncError::CutLocus { tol: CUT_TOLERANCE });
            }
            i += 1;
        }
    }
    let raw = &q * log_t * q.transpose();
    // antisymmetrize to clean Schur round-off
    Ok((&raw - raw.transpose()) / 2.0)
}
