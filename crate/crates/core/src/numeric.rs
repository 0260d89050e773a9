//! Forward-mode dual numbers in z and truncated power series in hbar.

use num_complex::Complex64 as C;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by `Dual` and `Jet`, enough to build R-matrix entries generically.
pub trait Field:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> + Mul<C, Output = Self>
{
}

impl Field for Dual {}
impl Field for Jet {}

/// value + derivative * dz
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: C,
    pub d: C,
}

impl Dual {
    pub fn new(v: C, d: C) -> Self {
        Dual { v, d }
    }
    pub fn cst(v: C) -> Self {
        Dual { v, d: C::new(0.0, 0.0) }
    }
    pub fn var(v: C) -> Self {
        Dual { v, d: C::new(1.0, 0.0) }
    }
    pub fn zero() -> Self {
        Self::cst(C::new(0.0, 0.0))
    }
    pub fn one() -> Self {
        Self::cst(C::new(1.0, 0.0))
    }
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, e * self.d)
    }
    pub fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.v.cos() * self.d)
    }
    pub fn cos(self) -> Self {
        Dual::new(self.v.cos(), -self.v.sin() * self.d)
    }
    /// pi cot(pi x)
    pub fn pcot(self) -> Self {
        let s = (PI * self.v).sin();
        Dual::new(PI * (PI * self.v).cos() / s, -PI * PI / (s * s) * self.d)
    }
    /// pi / sin(pi x)
    pub fn pcsc(self) -> Self {
        let s = (PI * self.v).sin();
        let c = (PI * self.v).cos();
        Dual::new(PI / s, -PI * PI * c / (s * s) * self.d)
    }
    pub fn scale(self, k: C) -> Self {
        Dual::new(self.v * k, self.d * k)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}
impl Add<C> for Dual {
    type Output = Dual;
    fn add(self, o: C) -> Dual {
        Dual::new(self.v + o, self.d)
    }
}
impl Mul<C> for Dual {
    type Output = Dual;
    fn mul(self, o: C) -> Dual {
        self.scale(o)
    }
}
impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual::new(self.v * o, self.d * o)
    }
}

/// c0 + c1 h + c2 h^2, coefficients dual in z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [Dual; 3],
}

impl Jet {
    pub fn new(c0: Dual, c1: Dual, c2: Dual) -> Self {
        Jet { c: [c0, c1, c2] }
    }
    pub fn cst(x: Dual) -> Self {
        Jet::new(x, Dual::zero(), Dual::zero())
    }
    pub fn num(x: C) -> Self {
        Self::cst(Dual::cst(x))
    }
    pub fn zero() -> Self {
        Self::num(C::new(0.0, 0.0))
    }
    /// h * x
    pub fn h_times(x: Dual) -> Self {
        Jet::new(Dual::zero(), x, Dual::zero())
    }
    /// h pi cot(pi h)
    pub fn h_pcot() -> Self {
        Jet::new(Dual::one(), Dual::zero(), Dual::cst(C::new(-PI * PI / 3.0, 0.0)))
    }
    /// h pi / sin(pi h)
    pub fn h_pcsc() -> Self {
        Jet::new(Dual::one(), Dual::zero(), Dual::cst(C::new(PI * PI / 6.0, 0.0)))
    }
    /// exp(k h)
    pub fn exp_h(k: C) -> Self {
        Jet::new(Dual::one(), Dual::cst(k), Dual::cst(k * k / 2.0))
    }
    /// exp(x + k h) for x dual in z
    pub fn exp_shift(x: Dual, k: C) -> Self {
        let e = x.exp();
        Jet::new(e, e.scale(k), e.scale(k * k / 2.0))
    }
    /// sin(x + k h) for x dual in z
    pub fn sin_shift(x: Dual, k: C) -> Self {
        let s = x.sin();
        let c = x.cos();
        Jet::new(s, c.scale(k), s.scale(-k * k / 2.0))
    }
    pub fn scale(self, k: C) -> Self {
        Jet::new(self.c[0].scale(k), self.c[1].scale(k), self.c[2].scale(k))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2])
    }
}
impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2])
    }
}
impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let a = self.c;
        let b = o.c;
        Jet::new(a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[0] * b[2] + a[1] * b[1] + a[2] * b[0])
    }
}
impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let a = self.c;
        let b = o.c;
        let q0 = a[0] / b[0];
        let q1 = (a[1] - q0 * b[1]) / b[0];
        let q2 = (a[2] - q0 * b[2] - q1 * b[1]) / b[0];
        Jet::new(q0, q1, q2)
    }
}
impl Mul<C> for Jet {
    type Output = Jet;
    fn mul(self, o: C) -> Jet {
        self.scale(o)
    }
}
impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C::new(-1.0, 0.0))
    }
}
