//! Small vector types and angle helpers.
//!
//! Conventions used across the crate: `y` is up, the ground plane is `(x, z)`,
//! and a positive yaw turns local `+z` toward world `+x` (clockwise when the
//! ground plane is drawn with `x` to the right and `z` up). An object's
//! "right" is `up × front`, so an unrotated object faces `+z` with its right
//! side toward `+x`.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Absolute tolerance used by geometric predicates.
pub const GEOM_EPS: f64 = 1e-9;

/// Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 3]", into = "[f64; 3]"))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UNIT_Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Componentwise product.
    pub fn hadamard(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn with_component(mut self, axis: usize, v: f64) -> Vec3 {
        match axis {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
        self
    }

    /// Projection onto the ground plane.
    pub fn ground(self) -> Point2 {
        Point2::new(self.x, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point (or vector) on the ground plane. `z` is the world z coordinate.
/// Serialized as `[x, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 2]", into = "[f64; 2]"))]
pub struct Point2 {
    pub x: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Point2 { x, z }
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.z - self.z * o.x
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.z)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.z]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.z + o.z)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.z - o.z)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.z * s)
    }
}

/// `(sin, cos)` of an angle in degrees. Multiples of 90° are exact.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let q = deg / 90.0;
    if q == libm::floor(q) && q.is_finite() {
        return match (q as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    let r = deg.to_radians();
    (libm::sin(r), libm::cos(r))
}

/// Wraps an angle into `[0, 360)`.
pub fn wrap_360(deg: f64) -> f64 {
    let mut r = deg % 360.0;
    if r < 0.0 {
        r += 360.0;
    }
    // tiny negatives round up to exactly 360
    if r >= 360.0 {
        r = 0.0;
    }
    r
}

/// Wraps an angle into `[-180, 180)`.
pub fn wrap_180(deg: f64) -> f64 {
    let r = wrap_360(deg + 180.0) - 180.0;
    if r >= 180.0 {
        -180.0
    } else {
        r
    }
}

/// Bearing of a ground-plane direction in degrees, using the yaw convention:
/// `+z` is 0°, `+x` is 90°. Returns a value in `[0, 360)`.
pub fn bearing_deg(v: Point2) -> f64 {
    wrap_360(libm::atan2(v.x, v.z).to_degrees())
}

/// Unsigned angle between two yaw angles, in `[0, 180]`.
pub fn yaw_gap(a: f64, b: f64) -> f64 {
    libm::fabs(wrap_180(a - b))
}

/// Ground-plane unit direction for a yaw angle.
pub fn yaw_dir(yaw_deg: f64) -> Point2 {
    let (s, c) = sin_cos_deg(yaw_deg);
    Point2::new(s, c)
}

/// Right-hand side direction for a ground-plane front direction.
pub fn right_of(front: Point2) -> Point2 {
    Point2::new(front.z, -front.x)
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn rot_y(deg: f64) -> Mat3 {
        let (s, c) = sin_cos_deg(deg);
        Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rot_x(deg: f64) -> Mat3 {
        let (s, c) = sin_cos_deg(deg);
        Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn rot_z(deg: f64) -> Mat3 {
        let (s, c) = sin_cos_deg(deg);
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_ranges() {
        assert_eq!(wrap_360(360.0), 0.0);
        assert_eq!(wrap_360(-90.0), 270.0);
        assert_eq!(wrap_360(370.0), 10.0);
        assert_eq!(wrap_180(180.0), -180.0);
        assert_eq!(wrap_180(-180.0), -180.0);
        assert_eq!(wrap_180(190.0), -170.0);
        assert_eq!(wrap_360(-1e-20), 0.0);
    }

    #[test]
    fn yaw_turns_front_toward_plus_x() {
        let f = Mat3::rot_y(90.0).apply(Vec3::UNIT_Z);
        assert_eq!(f, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(bearing_deg(Point2::new(1.0, 0.0)), 90.0);
        assert_eq!(bearing_deg(Point2::new(0.0, 1.0)), 0.0);
        assert_eq!(right_of(Point2::new(0.0, 1.0)), Point2::new(1.0, 0.0));
    }

    #[test]
    fn exact_quarter_turns() {
        assert_eq!(sin_cos_deg(-90.0), (-1.0, 0.0));
        assert_eq!(sin_cos_deg(540.0), (0.0, -1.0));
        let (s, c) = sin_cos_deg(30.0);
        assert!((s - 0.5).abs() < 1e-15 && (c - 0.75f64.sqrt()).abs() < 1e-15);
    }
}
