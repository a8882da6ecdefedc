//! Minimal 3-vector and quaternion algebra.
//!
//! Quaternions are scalar-first `(w, x, y, z)` and map body coordinates into
//! the world frame: `world = q * body * q⁻¹`.

use crate::num::Real;

pub type Vec3<T> = [T; 3];

pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm_sq<T: Real>(a: Vec3<T>) -> T {
    dot(a, a)
}

/// Euclidean norm, scaled by the largest component so that a vector with a
/// single non-zero entry returns that entry's magnitude exactly.
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    let m = a[0].abs().max(a[1].abs()).max(a[2].abs());
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let s = [a[0] / m, a[1] / m, a[2] / m];
    m * norm_sq(s).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quat<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    /// Rotation of `angle` radians about a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let n = norm(axis);
        if n == T::zero() {
            return Self::identity();
        }
        let half = angle / T::lit(2.0);
        let s = half.sin() / n;
        Self::new(half.cos(), axis[0] * s, axis[1] * s, axis[2] * s)
    }

    /// Inverse of [`Quat::log_vec`]: rotation vector (axis · angle) to quaternion.
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        Self::from_axis_angle(v, norm(v))
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self ⊗ o`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    pub fn is_unit(self, tol: T) -> bool {
        (self.norm() - T::one()).abs() <= tol
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Row-major 3×3 rotation matrix of a unit quaternion.
    pub fn to_matrix(self) -> [[T; 3]; 3] {
        let two = T::lit(2.0);
        let one = T::one();
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }

    /// Rotates a vector from body to world coordinates.
    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let u = [self.x, self.y, self.z];
        let t = scale(cross(u, v), T::lit(2.0));
        add(add(v, scale(t, self.w)), cross(u, t))
    }

    /// Rotates a vector from world to body coordinates.
    pub fn inverse_rotate(self, v: Vec3<T>) -> Vec3<T> {
        self.conj().rotate(v)
    }

    /// Rotation vector (axis · angle) of a unit quaternion, angle in `[0, π]`.
    pub fn log_vec(self) -> Vec3<T> {
        let q = if self.w < T::zero() { self.neg() } else { self };
        let v = [q.x, q.y, q.z];
        let s = norm(v);
        if s == T::zero() {
            return [T::zero(); 3];
        }
        let angle = T::lit(2.0) * s.atan2(q.w);
        scale(v, angle / s)
    }
}

/// Geodesic angle between two unit quaternions, in `[0, π]`.
/// Invariant under the sign of either argument.
pub fn geodesic_angle<T: Real>(a: Quat<T>, b: Quat<T>) -> T {
    let d = a.dot(b).abs().min(T::one()).max(T::zero());
    T::lit(2.0) * d.acos()
}
