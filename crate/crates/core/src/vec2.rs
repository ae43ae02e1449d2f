//! Planar vectors and symmetric 2x2 matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{Float, Num};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T: Num + Copy> Vec2<T> {
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3d cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    /// Counter-clockwise quarter turn: `(a, b)^⊥ = (-b, a)`.
    pub fn perp(self) -> Self
    where
        T: Neg<Output = T>,
    {
        Self::new(-self.y, self.x)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }
}

impl<T: Float> Vec2<T> {
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn lerp(self, other: Self, t: T) -> Self {
        self + (other - self).scale(t)
    }

    pub fn max_abs_diff(self, other: Self) -> T {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Num> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Num> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Num + Copy> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Num + Copy> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Num + Neg<Output = T>> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Num + Copy> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Dense 2x2 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Num + Copy> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self { m: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// `u vᵀ`
    pub fn outer(u: Vec2<T>, v: Vec2<T>) -> Self {
        Self::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    pub fn scale(self, s: T) -> Self {
        let m = self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn transpose(self) -> Self {
        let m = self.m;
        Self::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn mul_vec(self, v: Vec2<T>) -> Vec2<T> {
        let m = self.m;
        Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.m[r][c]
    }
}

impl<T: Num + Copy> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.m, o.m);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl<T: Num + Copy> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.m, o.m);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}
