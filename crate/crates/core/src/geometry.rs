//! Planar ellipses in general, quadratic and standard form, plus oriented boxes.
//!
//! The three ellipse forms describe the same point set:
//!
//! * general: `{x : ||A x + b|| <= 1}` with `A` symmetric positive definite,
//! * quadratic: `{x : xᵀ Aq x + 2 bqᵀ x + cq <= 0}`,
//! * standard: `{x : (x - xc)ᵀ R(θ)ᵀ H(r1, r2) R(θ) (x - xc) <= 1}`.
//!
//! `R(θ)` maps world coordinates into the ellipse body frame, so the body
//! x-axis (semi-axis `r1`) points along `(cos θ, sin θ)` and the body y-axis
//! (semi-axis `r2`) along `(-sin θ, cos θ)`. Standard ellipses are kept in
//! canonical form: `r1 <= r2` and `θ ∈ [0, π)`. A counter-clockwise rotation
//! of the shape therefore increases `θ`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point or vector in the plane, in meters.
pub type Point = Vector2<f64>;

/// Shared numeric tolerances for ellipse geometry.
pub mod tol {
    /// Width of the band around an ellipse boundary where membership
    /// predicates of different forms may disagree.
    pub const BOUNDARY_BAND: f64 = 1e-9;
    /// Parameter error allowed for a round trip through all three forms.
    pub const ROUND_TRIP: f64 = 1e-8;
    /// Axis ratio excess `r2 / r1 - 1` below which orientation is undefined.
    pub const NEAR_CIRCULAR: f64 = 1e-9;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is not symmetric positive definite (eigenvalues {0:e}, {1:e})")]
    NotPositiveDefinite(f64, f64),
    #[error("quadratic form has an empty interior (bᵀA⁻¹b - c = {0:e})")]
    EmptyInterior(f64),
    #[error("semi-axes must be positive and finite, got ({0}, {1})")]
    InvalidAxes(f64, f64),
    #[error("non-finite ellipse parameter")]
    NonFinite,
}

/// World-to-body rotation `R(θ)`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Reduces an orientation into `[0, π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Signed shortest difference `a - b` between two orientations defined
/// modulo π, in `[-π/2, π/2)`.
pub fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b + PI / 2.0).rem_euclid(PI) - PI / 2.0;
    if d >= PI / 2.0 {
        d - PI
    } else {
        d
    }
}

/// Eigen-decomposition of a symmetric 2×2 matrix.
///
/// Returns `(λ_max, λ_min, φ)` where `(cos φ, sin φ)` spans the eigenspace
/// of `λ_max`.
pub(crate) fn sym2_eigen(m: &Matrix2<f64>) -> (f64, f64, f64) {
    let a = m[(0, 0)];
    let c = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let phi = 0.5 * (2.0 * b).atan2(a - c);
    (mean + radius, mean - radius, phi)
}

fn check_spd(m: &Matrix2<f64>) -> Result<Matrix2<f64>, GeometryError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let sym = 0.5 * (m + m.transpose());
    let (hi, lo, _) = sym2_eigen(&sym);
    if lo <= 0.0 {
        return Err(GeometryError::NotPositiveDefinite(hi, lo));
    }
    Ok(sym)
}

/// `{x : ||A x + b|| <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralEllipse {
    a: Matrix2<f64>,
    b: Vector2<f64>,
}

impl GeneralEllipse {
    pub fn new(a: Matrix2<f64>, b: Vector2<f64>) -> Result<Self, GeometryError> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { a: check_spd(&a)?, b })
    }

    pub fn a(&self) -> &Matrix2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Vector2<f64> {
        &self.b
    }

    /// `Aq = AᵀA`, `bq = Aᵀb`, `cq = bᵀb - 1`.
    pub fn to_quadratic(&self) -> QuadraticEllipse {
        let at = self.a.transpose();
        QuadraticEllipse {
            a: at * self.a,
            b: at * self.b,
            c: self.b.dot(&self.b) - 1.0,
        }
    }

    pub fn to_standard(&self) -> StandardEllipse {
        StandardEllipse::from_shape_matrix(self.center(), &(self.a.transpose() * self.a))
    }

    pub fn center(&self) -> Point {
        -(self.a.try_inverse().expect("validated SPD matrix")) * self.b
    }

    pub fn contains(&self, p: &Point, inflate: f64) -> bool {
        self.norm_at(p) <= 1.0 + inflate
    }

    /// `||A p + b||`; at most one inside the ellipse.
    pub fn norm_at(&self, p: &Point) -> f64 {
        (self.a * p + self.b).norm()
    }

    /// `π / det(A)`.
    pub fn area(&self) -> f64 {
        PI / self.a.determinant()
    }
}

/// `{x : xᵀ Aq x + 2 bqᵀ x + cq <= 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEllipse {
    a: Matrix2<f64>,
    b: Vector2<f64>,
    c: f64,
}

impl QuadraticEllipse {
    pub fn new(a: Matrix2<f64>, b: Vector2<f64>, c: f64) -> Result<Self, GeometryError> {
        if b.iter().any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let a = check_spd(&a)?;
        let inv = a.try_inverse().ok_or(GeometryError::NotPositiveDefinite(0.0, 0.0))?;
        let k = b.dot(&(inv * b)) - c;
        if k <= 0.0 {
            return Err(GeometryError::EmptyInterior(k));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Matrix2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Vector2<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Value of the quadratic form at `p`; non-positive inside.
    pub fn eval(&self, p: &Point) -> f64 {
        p.dot(&(self.a * p)) + 2.0 * self.b.dot(p) + self.c
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.eval(p) <= 0.0
    }

    /// Center `-Aq⁻¹ bq` and the normalized shape matrix `Aq / (bqᵀAq⁻¹bq - cq)`.
    fn center_and_shape(&self) -> (Point, Matrix2<f64>) {
        let inv = self.a.try_inverse().expect("validated SPD matrix");
        let center = -(inv * self.b);
        // The form is stationary at the center, so evaluating it there is
        // insensitive to rounding in the center; `-bq·xc - cq` is not.
        let k = -self.eval(&center);
        (center, self.a / k)
    }

    /// Converts to canonical standard form. Near-circular ellipses get
    /// `θ = 0`; check [`StandardEllipse::is_near_circular`].
    pub fn to_standard(&self) -> StandardEllipse {
        let (center, shape) = self.center_and_shape();
        StandardEllipse::from_shape_matrix(center, &shape)
    }

    pub fn to_general(&self) -> GeneralEllipse {
        let (center, shape) = self.center_and_shape();
        let a = spd_sqrt(&shape);
        GeneralEllipse { a, b: -(a * center) }
    }
}

/// Symmetric square root of an SPD 2×2 matrix.
pub(crate) fn spd_sqrt(m: &Matrix2<f64>) -> Matrix2<f64> {
    let (hi, lo, phi) = sym2_eigen(m);
    let r = rotation(phi);
    r.transpose() * Matrix2::new(hi.sqrt(), 0.0, 0.0, lo.sqrt()) * r
}

/// Canonical standard-form ellipse: center, semi-axes `r1 <= r2`, and
/// orientation `θ ∈ [0, π)` of the `r1` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardEllipse {
    pub center: Point,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
}

impl StandardEllipse {
    /// Builds a canonical ellipse from semi-axis `a` along `(cos θ, sin θ)`
    /// and semi-axis `b` perpendicular to it. The axes are reordered so that
    /// `r1 <= r2`.
    pub fn new(center: Point, a: f64, b: f64, theta: f64) -> Result<Self, GeometryError> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(GeometryError::InvalidAxes(a, b));
        }
        if !(center.x.is_finite() && center.y.is_finite() && theta.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let (r1, r2, theta) = if a <= b {
            (a, b, theta)
        } else {
            (b, a, theta + PI / 2.0)
        };
        let theta = if r2 / r1 - 1.0 < tol::NEAR_CIRCULAR {
            0.0
        } else {
            reduce_angle(theta)
        };
        Ok(Self {
            center,
            r1,
            r2,
            theta,
        })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self, GeometryError> {
        Self::new(center, radius, radius, 0.0)
    }

    fn from_shape_matrix(center: Point, shape: &Matrix2<f64>) -> Self {
        let (hi, lo, phi) = sym2_eigen(shape);
        let r1 = 1.0 / hi.sqrt();
        let r2 = 1.0 / lo.sqrt();
        let theta = if r2 / r1 - 1.0 < tol::NEAR_CIRCULAR {
            0.0
        } else {
            reduce_angle(phi)
        };
        Self {
            center,
            r1,
            r2,
            theta,
        }
    }

    /// True when orientation is undefined and `θ` was fixed to zero.
    pub fn is_near_circular(&self) -> bool {
        self.r2 / self.r1 - 1.0 < tol::NEAR_CIRCULAR
    }

    /// Unit vector of the minor (`r1`) axis.
    pub fn minor_axis(&self) -> Point {
        Point::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit vector of the major (`r2`) axis.
    pub fn major_axis(&self) -> Point {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    /// `R(θ)ᵀ H(r1, r2) R(θ)`.
    pub fn shape_matrix(&self) -> Matrix2<f64> {
        let r = rotation(self.theta);
        let h = Matrix2::new(1.0 / (self.r1 * self.r1), 0.0, 0.0, 1.0 / (self.r2 * self.r2));
        r.transpose() * h * r
    }

    /// `(p - xc)ᵀ R(θ)ᵀ H R(θ) (p - xc)`; at most one inside.
    pub fn quad_at(&self, p: &Point) -> f64 {
        let r = rotation(self.theta) * (p - self.center);
        (r.x / self.r1).powi(2) + (r.y / self.r2).powi(2)
    }

    /// Membership with the boundary scaled by `1 + inflate` about the center.
    pub fn contains(&self, p: &Point, inflate: f64) -> bool {
        self.quad_at(p) <= (1.0 + inflate).powi(2)
    }

    pub fn area(&self) -> f64 {
        PI * self.r1 * self.r2
    }

    pub fn to_general(&self) -> GeneralEllipse {
        let r = rotation(self.theta);
        let a = r.transpose() * Matrix2::new(1.0 / self.r1, 0.0, 0.0, 1.0 / self.r2) * r;
        let a = 0.5 * (a + a.transpose());
        GeneralEllipse {
            a,
            b: -(a * self.center),
        }
    }

    pub fn to_quadratic(&self) -> QuadraticEllipse {
        self.to_general().to_quadratic()
    }

    /// Point at body-frame parameter `phi`, optionally pushed out by `scale`.
    fn point_at(&self, phi: f64, scale: f64) -> Point {
        let (s, c) = phi.sin_cos();
        let local = Point::new(scale * self.r1 * c, scale * self.r2 * s);
        self.center + rotation(self.theta).transpose() * local
    }

    /// `n` points `xc + R(θ)ᵀ (r1 cos φk, r2 sin φk)` with `φk = 2πk/n`.
    pub fn boundary_sample(&self, n: usize) -> Vec<Point> {
        self.scaled_boundary_sample(n, 1.0)
    }

    /// Vertices of the polygon with `n` vertices circumscribed about the
    /// ellipse (boundary samples pushed out by `sec(π/n)`). Any set that
    /// contains these vertices contains the whole ellipse.
    pub fn circumscribed_polygon(&self, n: usize) -> Vec<Point> {
        let n = n.max(3);
        self.scaled_boundary_sample(n, 1.0 / (PI / n as f64).cos())
    }

    fn scaled_boundary_sample(&self, n: usize, scale: f64) -> Vec<Point> {
        (0..n)
            .map(|k| self.point_at(2.0 * PI * k as f64 / n as f64, scale))
            .collect()
    }

    /// Support function `max_{x ∈ E} x·u`.
    pub fn support(&self, u: &Point) -> f64 {
        let local = rotation(self.theta) * u;
        let reach = (self.r1 * local.x).hypot(self.r2 * local.y);
        self.center.dot(u) + reach
    }

    /// The same ellipse with both semi-axes grown by `margin`.
    pub fn enlarged(&self, margin: f64) -> Self {
        Self {
            r1: self.r1 + margin,
            r2: self.r2 + margin,
            ..*self
        }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.center
            .x
            .total_cmp(&other.center.x)
            .then(self.center.y.total_cmp(&other.center.y))
            .then(self.r1.total_cmp(&other.r1))
            .then(self.r2.total_cmp(&other.r2))
            .then(self.theta.total_cmp(&other.theta))
    }
}

/// Rectangle with arbitrary orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point,
    pub half_extents: Vector2<f64>,
    /// Angle of the first box axis from the world x-axis.
    pub angle: f64,
}

impl OrientedBox {
    pub fn new(center: Point, half_extents: Vector2<f64>, angle: f64) -> Result<Self, GeometryError> {
        if !(half_extents.x > 0.0 && half_extents.y > 0.0) {
            return Err(GeometryError::InvalidAxes(half_extents.x, half_extents.y));
        }
        Ok(Self {
            center,
            half_extents,
            angle,
        })
    }

    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.angle.sin_cos();
        (Point::new(c, s), Point::new(-s, c))
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (u, w) = self.axes();
        let d = p - self.center;
        d.dot(&u).abs() <= self.half_extents.x && d.dot(&w).abs() <= self.half_extents.y
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }

    pub fn corners(&self) -> [Point; 4] {
        let (u, w) = self.axes();
        let hu = u * self.half_extents.x;
        let hw = w * self.half_extents.y;
        [
            self.center + hu + hw,
            self.center - hu + hw,
            self.center - hu - hw,
            self.center + hu - hw,
        ]
    }
}

/// Boundary samples per ellipse used to orient the pair box.
pub const OBB_SAMPLES: usize = 64;

/// Oriented bounding box of two ellipses.
///
/// The box axis is the principal direction of the pooled boundary samples;
/// the extents along that axis are then taken from the exact ellipse
/// support functions, so the box encloses both ellipses entirely.
pub fn obb_of_pair(e1: &StandardEllipse, e2: &StandardEllipse) -> OrientedBox {
    // A fixed argument order makes the result independent of call order.
    let (first, second) = match e1.canonical_cmp(e2) {
        Ordering::Greater => (e2, e1),
        _ => (e1, e2),
    };
    let samples: Vec<Point> = first
        .boundary_sample(OBB_SAMPLES)
        .into_iter()
        .chain(second.boundary_sample(OBB_SAMPLES))
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().fold(Point::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix2::zeros();
    for p in &samples {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let (_, _, angle) = sym2_eigen(&(cov / n));

    let (s, c) = angle.sin_cos();
    let u = Point::new(c, s);
    let w = Point::new(-s, c);
    let reach = |dir: &Point| first.support(dir).max(second.support(dir));
    let (u_hi, u_lo) = (reach(&u), -reach(&-u));
    let (w_hi, w_lo) = (reach(&w), -reach(&-w));
    let center = u * (0.5 * (u_hi + u_lo)) + w * (0.5 * (w_hi + w_lo));
    // Absorb rounding in the center reconstruction.
    let pad = 1e-12 * (1.0 + center.norm() + (u_hi - u_lo) + (w_hi - w_lo));
    OrientedBox {
        center,
        half_extents: Vector2::new(0.5 * (u_hi - u_lo) + pad, 0.5 * (w_hi - w_lo) + pad),
        angle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_disk() -> StandardEllipse {
        StandardEllipse::disk(Point::zeros(), 1.0).unwrap()
    }

    #[test]
    fn identity_general_to_quadratic() {
        let g = GeneralEllipse::new(Matrix2::identity(), Vector2::zeros()).unwrap();
        let q = g.to_quadratic();
        assert_eq!(*q.a(), Matrix2::identity());
        assert_eq!(*q.b(), Vector2::zeros());
        assert_eq!(q.c(), -1.0);
    }

    #[test]
    fn diagonal_general_to_quadratic() {
        let g = GeneralEllipse::new(Matrix2::new(0.5, 0.0, 0.0, 1.0), Vector2::zeros()).unwrap();
        let q = g.to_quadratic();
        assert_eq!(*q.a(), Matrix2::new(0.25, 0.0, 0.0, 1.0));
        assert_eq!(q.c(), -1.0);
    }

    #[test]
    fn unit_disk_quadratic_to_standard() {
        let q = QuadraticEllipse::new(Matrix2::identity(), Vector2::zeros(), -1.0).unwrap();
        let s = q.to_standard();
        assert_eq!(s.center, Point::zeros());
        assert_relative_eq!(s.r1, 1.0);
        assert_relative_eq!(s.r2, 1.0);
        assert_eq!(s.theta, 0.0);
        assert!(s.is_near_circular());
    }

    #[test]
    fn major_axis_along_x_has_theta_half_pi() {
        let q = QuadraticEllipse::new(Matrix2::new(0.25, 0.0, 0.0, 1.0), Vector2::zeros(), -1.0)
            .unwrap();
        let s = q.to_standard();
        assert_relative_eq!(s.r1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.r2, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.theta, PI / 2.0, epsilon = 1e-12);
        for p in s.boundary_sample(32) {
            assert_relative_eq!(q.eval(&p), 0.0, epsilon = 1e-12);
        }
        assert_relative_eq!(s.major_axis().x.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_invalid_forms() {
        assert!(GeneralEllipse::new(Matrix2::new(1.0, 0.0, 0.0, -1.0), Vector2::zeros()).is_err());
        assert!(matches!(
            QuadraticEllipse::new(Matrix2::identity(), Vector2::zeros(), 1.0),
            Err(GeometryError::EmptyInterior(_))
        ));
        assert!(StandardEllipse::new(Point::zeros(), 0.0, 1.0, 0.0).is_err());
        assert!(StandardEllipse::new(Point::zeros(), f64::NAN, 1.0, 0.0).is_err());
    }

    #[test]
    fn canonicalizes_axis_order_and_angle() {
        let e = StandardEllipse::new(Point::zeros(), 2.0, 1.0, 0.0).unwrap();
        assert_eq!((e.r1, e.r2), (1.0, 2.0));
        assert_relative_eq!(e.theta, PI / 2.0);
        let e = StandardEllipse::new(Point::zeros(), 1.0, 2.0, PI + 0.25).unwrap();
        assert_relative_eq!(e.theta, 0.25, epsilon = 1e-12);
        let e = StandardEllipse::new(Point::zeros(), 1.0, 2.0, -0.25).unwrap();
        assert_relative_eq!(e.theta, PI - 0.25, epsilon = 1e-12);
        assert_eq!(reduce_angle(PI), 0.0);
    }

    #[test]
    fn angle_difference_wraps_mod_pi() {
        assert_relative_eq!(angle_diff_mod_pi(0.05, PI - 0.05), 0.1, epsilon = 1e-12);
        assert_relative_eq!(angle_diff_mod_pi(PI - 0.05, 0.05), -0.1, epsilon = 1e-12);
        assert_relative_eq!(angle_diff_mod_pi(1.0, 0.5), 0.5, epsilon = 1e-12);
        assert_relative_eq!(angle_diff_mod_pi(3.0 + PI, 3.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn contains_margin() {
        let e = unit_disk();
        assert!(e.contains(&Point::zeros(), 0.0));
        assert!(!e.contains(&Point::new(1.001, 0.0), 0.0));
        assert!(e.contains(&Point::new(1.001, 0.0), 0.05));
    }

    #[test]
    fn areas() {
        assert_relative_eq!(unit_disk().area(), PI);
        let e = StandardEllipse::new(Point::new(3.0, -1.0), 1.0, 2.0, 0.4).unwrap();
        assert_relative_eq!(e.area(), 2.0 * PI);
        assert_relative_eq!(e.to_general().area(), e.area(), max_relative = 1e-9);
    }

    #[test]
    fn unit_disk_four_samples() {
        let pts = unit_disk().boundary_sample(4);
        let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in pts.iter().zip(expected) {
            assert_relative_eq!(p.x, x, epsilon = 1e-12);
            assert_relative_eq!(p.y, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn circumscribed_polygon_contains_ellipse() {
        let e = StandardEllipse::new(Point::new(1.0, 2.0), 0.5, 3.0, 1.1).unwrap();
        let poly = e.circumscribed_polygon(16);
        // Edge midpoints of the circumscribed polygon touch the ellipse.
        for k in 0..poly.len() {
            let mid = 0.5 * (poly[k] + poly[(k + 1) % poly.len()]);
            assert_relative_eq!(e.quad_at(&mid), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn support_matches_samples() {
        let e = StandardEllipse::new(Point::new(-2.0, 0.5), 0.7, 1.9, 2.3).unwrap();
        let u = Point::new(0.6, -0.8);
        let best = e
            .boundary_sample(4096)
            .iter()
            .map(|p| p.dot(&u))
            .fold(f64::MIN, f64::max);
        assert!(e.support(&u) >= best);
        assert_relative_eq!(e.support(&u), best, epsilon = 1e-5);
    }

    #[test]
    fn obb_of_coincident_disks_is_square() {
        let b = obb_of_pair(&unit_disk(), &unit_disk());
        assert_relative_eq!(b.half_extents.x, 1.0, max_relative = 0.01);
        assert_relative_eq!(b.half_extents.y, 1.0, max_relative = 0.01);
    }

    #[test]
    fn obb_of_separated_disks() {
        let far = StandardEllipse::disk(Point::new(4.0, 0.0), 1.0).unwrap();
        let b = obb_of_pair(&unit_disk(), &far);
        let (long, short) = if b.half_extents.x > b.half_extents.y {
            (b.half_extents.x, b.half_extents.y)
        } else {
            (b.half_extents.y, b.half_extents.x)
        };
        assert_relative_eq!(long, 3.0, max_relative = 0.02);
        assert_relative_eq!(short, 1.0, max_relative = 0.02);
        assert_relative_eq!(b.center.x, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn obb_is_order_independent() {
        let e1 = StandardEllipse::new(Point::new(0.3, 1.0), 0.5, 2.0, 0.3).unwrap();
        let e2 = StandardEllipse::new(Point::new(2.0, -1.0), 0.2, 1.0, 2.0).unwrap();
        assert_eq!(obb_of_pair(&e1, &e2), obb_of_pair(&e2, &e1));
    }
}
