//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Vec2<T> = [T; 2];
pub type Vec3<T> = [T; 3];

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
pub type Mat2<T> = [[T; 2]; 2];

#[inline]
pub fn sub3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale3<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<T: Real>(a: Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

#[inline]
pub fn normalize3<T: Real>(a: Vec3<T>) -> Vec3<T> {
    let n = norm3(a);
    if n > T::zero() {
        scale3(a, T::one() / n)
    } else {
        a
    }
}

#[inline]
pub fn dist3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    norm3(sub3(a, b))
}

#[inline]
pub fn sub2<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn norm2<T: Real>(a: Vec2<T>) -> T {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

#[inline]
pub fn mat2_det<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[inline]
pub fn mat2_mul_vec<T: Real>(m: &Mat2<T>, v: Vec2<T>) -> Vec2<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Singular values `(σ1, σ2)` with `σ1 ≥ σ2 ≥ 0` of a 2x2 matrix, closed form.
pub fn singular_values2<T: Real>(m: &Mat2<T>) -> (T, T) {
    let half = T::lit(0.5);
    let e = (m[0][0] + m[1][1]) * half;
    let f = (m[0][0] - m[1][1]) * half;
    let g = (m[1][0] + m[0][1]) * half;
    let h = (m[1][0] - m[0][1]) * half;
    let q = (e * e + h * h).sqrt();
    let r = (f * f + g * g).sqrt();
    (q + r, (q - r).abs())
}

/// Closest proper rotation (det = +1) to `m` in the Frobenius norm.
///
/// Reflected inputs (negative determinant) still return a rotation; the
/// reflection component is discarded.
pub fn closest_rotation2<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    let e = m[0][0] + m[1][1];
    let h = m[1][0] - m[0][1];
    let q = (e * e + h * h).sqrt();
    if q <= T::epsilon() {
        return [[T::one(), T::zero()], [T::zero(), T::one()]];
    }
    let (c, s) = (e / q, h / q);
    [[c, -s], [s, c]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_of_diagonal_and_rotation() {
        let (s1, s2) = singular_values2(&[[2.0, 0.0], [0.0, 1.0]]);
        assert!((s1 - 2.0f64).abs() < 1e-15 && (s2 - 1.0).abs() < 1e-15);
        let t = 0.7f64;
        let r = [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
        let (s1, s2) = singular_values2(&r);
        assert!((s1 - 1.0).abs() < 1e-14 && (s2 - 1.0).abs() < 1e-14);
        let rr = closest_rotation2(&[
            [3.0 * t.cos(), -3.0 * t.sin()],
            [3.0 * t.sin(), 3.0 * t.cos()],
        ]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rr[i][j] - r[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_matches_eigen_of_gram() {
        let m = [[1.3f64, -0.4], [2.1, 0.7]];
        let (s1, s2) = singular_values2(&m);
        // σ1² + σ2² = ‖m‖², σ1 σ2 = |det m|
        let fro: f64 = m.iter().flatten().map(|x| x * x).sum();
        assert!((s1 * s1 + s2 * s2 - fro).abs() < 1e-12);
        assert!((s1 * s2 - mat2_det(&m).abs()).abs() < 1e-12);
    }

    #[test]
    fn reflection_yields_proper_rotation() {
        let r = closest_rotation2(&[[1.0f64, 0.0], [0.0, -2.0]]);
        assert!((mat2_det(&r) - 1.0).abs() < 1e-14);
    }
}
