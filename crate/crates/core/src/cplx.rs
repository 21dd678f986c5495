//! Small fixed-size complex linear algebra: spinors and 2x2 matrices.

use num_complex::Complex64;
use serde::Serialize;

pub type C64 = Complex64;

/// Complex 2-vector (spinor). Inner products conjugate the left argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Vec2C {
    pub c0: C64,
    pub c1: C64,
}

impl Vec2C {
    pub const fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }

    pub fn zero() -> Self {
        Self::new(C64::ZERO, C64::ZERO)
    }

    /// ⟨self|other⟩ with the physicist convention (left side conjugated).
    pub fn dot(&self, other: &Vec2C) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn norm_sq(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: C64) -> Vec2C {
        Vec2C::new(self.c0 * s, self.c1 * s)
    }

    pub fn add(&self, other: &Vec2C) -> Vec2C {
        Vec2C::new(self.c0 + other.c0, self.c1 + other.c1)
    }

    pub fn sub(&self, other: &Vec2C) -> Vec2C {
        Vec2C::new(self.c0 - other.c0, self.c1 - other.c1)
    }

    pub fn normalized(&self) -> Vec2C {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.c0.re.is_finite()
            && self.c0.im.is_finite()
            && self.c1.re.is_finite()
            && self.c1.im.is_finite()
    }
}

/// Dense complex 2x2 matrix, row-major entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Matrix2C {
    pub m: [[C64; 2]; 2],
}

impl Matrix2C {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    pub fn zero() -> Self {
        Self::new(C64::ZERO, C64::ZERO, C64::ZERO, C64::ZERO)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn adjoint(&self) -> Matrix2C {
        Matrix2C::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn mul_vec(&self, v: &Vec2C) -> Vec2C {
        Vec2C::new(
            self.m[0][0] * v.c0 + self.m[0][1] * v.c1,
            self.m[1][0] * v.c0 + self.m[1][1] * v.c1,
        )
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// exp(-i tau M) in closed form.
    ///
    /// Splits M = s I + T with T traceless; T^2 = w^2 I, so
    /// exp(-i tau T) = cos(w tau) I - i sin(w tau)/w T, with the series
    /// limit of sin(z)/z when |w tau| is tiny. The branch of w is
    /// irrelevant since cos and sin(z)/z are even.
    pub fn exp_neg_i(&self, tau: f64) -> Matrix2C {
        let s = self.trace() * 0.5;
        let t00 = self.m[0][0] - s;
        let t01 = self.m[0][1];
        let t10 = self.m[1][0];
        let w = (t00 * t00 + t01 * t10).sqrt();
        let z = w * tau;
        let cosz = z.cos();
        let sinc = if z.norm() < 1e-8 {
            C64::new(1.0, 0.0) - z * z / 6.0
        } else {
            z.sin() / z
        };
        let phase = (-C64::i() * s * tau).exp();
        let a = phase * (cosz - C64::i() * tau * sinc * t00);
        let b = phase * (-C64::i() * tau * sinc * t01);
        let c = phase * (-C64::i() * tau * sinc * t10);
        let d = phase * (cosz + C64::i() * tau * sinc * t00);
        Matrix2C::new(a, b, c, d)
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = x.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Distance between two angles on the circle, in (-pi, pi].
pub fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dot_conjugates_left() {
        let u = Vec2C::new(C64::new(0.0, 1.0), C64::new(1.0, 0.0));
        let v = Vec2C::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        assert_eq!(u.dot(&v), C64::new(0.0, -1.0));
    }

    #[test]
    fn exp_of_hermitian_is_unitary() {
        let h = Matrix2C::new(
            C64::new(0.3, 0.0),
            C64::new(0.2, -0.5),
            C64::new(0.2, 0.5),
            C64::new(-0.3, 0.0),
        );
        let u = h.exp_neg_i(0.7);
        let udu = {
            let ad = u.adjoint();
            let mut prod = Matrix2C::zero();
            for i in 0..2 {
                for j in 0..2 {
                    prod.m[i][j] = ad.m[i][0] * u.m[0][j] + ad.m[i][1] * u.m[1][j];
                }
            }
            prod
        };
        assert!((udu.m[0][0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(udu.m[0][1].norm() < 1e-14);
        assert!((udu.m[1][1] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exp_matches_scalar_diagonal() {
        let m = Matrix2C::new(C64::new(2.0, 0.5), C64::ZERO, C64::ZERO, C64::new(-1.0, 0.25));
        let u = m.exp_neg_i(0.31);
        let e0 = (-C64::i() * m.m[0][0] * 0.31).exp();
        let e1 = (-C64::i() * m.m[1][1] * 0.31).exp();
        assert!((u.m[0][0] - e0).norm() < 1e-13);
        assert!((u.m[1][1] - e1).norm() < 1e-13);
        assert!(u.m[0][1].norm() < 1e-15);
    }

    #[test]
    fn wrap_lands_in_half_open_interval() {
        assert!((wrap_to_pi(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_to_pi(-3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_to_pi(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_to_pi(2.0 * PI + 0.25) - 0.25).abs() < 1e-12);
    }
}
