//! Odd theta function, Kronecker function and the Eisenstein/Weierstrass family.

use crate::error::{Error, Result};
use crate::numeric::Dual;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

pub const POLE_GUARD: f64 = 1e-6;
const MAX_TERMS: usize = 64;
const REL_STOP: f64 = 1e-17;
const EXP_LIMIT: f64 = 700.0;

fn i() -> C {
    C::new(0.0, 1.0)
}

/// Distance from `z` to the nearest point of Z + tau Z.
pub fn lattice_distance(z: C, tau: C) -> f64 {
    let n2 = (z.im / tau.im).round();
    let w = z - tau * n2;
    let n1 = w.re.round();
    let w = w - n1;
    let mut best = f64::INFINITY;
    for a in -1..=1 {
        for b in -1..=1 {
            let d = (w - C::new(a as f64, 0.0) - tau * b as f64).norm();
            best = best.min(d);
        }
    }
    best
}

pub fn guard(z: C, tau: C, what: &str) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::PoleProximity(format!("{what}={z} is not finite")));
    }
    if lattice_distance(z, tau) < POLE_GUARD {
        return Err(Error::PoleProximity(format!("{what}={z}")));
    }
    Ok(())
}

fn guard_int(z: C, what: &str) -> Result<()> {
    let d = (z - z.re.round()).norm();
    if !z.is_finite() || d < POLE_GUARD {
        return Err(Error::PoleProximity(format!("{what}={z}")));
    }
    Ok(())
}

/// Theta and its first three z-derivatives from one pass over the series.
pub fn theta_all(z: C, tau: C) -> Result<[C; 4]> {
    if tau.im.is_nan() || tau.im <= 0.0 {
        return Err(Error::NonConvergent(format!("Im tau = {} <= 0", tau.im)));
    }
    let peak = z.im.abs() / tau.im;
    let mut acc = [C::new(0.0, 0.0); 4];
    let mut largest = [0.0f64; 4];
    for m in 0..=MAX_TERMS {
        let mut small = true;
        for n in [m as f64 + 0.5, -(m as f64) - 0.5] {
            let ex = i() * PI * tau * n * n + 2.0 * PI * i() * (z + 0.5) * n;
            if ex.re > EXP_LIMIT {
                return Err(Error::Overflow(format!("z={z}, tau={tau}")));
            }
            let t = ex.exp();
            let f = 2.0 * PI * i() * n;
            let mut w = t;
            for o in 0..4 {
                acc[o] -= w;
                let a = w.norm();
                if a >= REL_STOP * largest[o] {
                    small = false;
                }
                largest[o] = largest[o].max(a);
                w *= f;
            }
        }
        if small && (m as f64) > peak + 1.0 {
            return Ok(acc);
        }
    }
    Err(Error::NonConvergent(format!("more than {MAX_TERMS} terms at z={z}, tau={tau}")))
}

pub fn theta(z: C, tau: C) -> Result<C> {
    Ok(theta_all(z, tau)?[0])
}

pub fn theta_d(z: C, tau: C, order: usize) -> Result<C> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParams(format!("derivative order {order}")));
    }
    Ok(theta_all(z, tau)?[order])
}

/// Elliptic evaluator bound to one modulus; stores theta'(0) and theta'''(0)/theta'(0).
#[derive(Clone, Copy, Debug)]
pub struct Elliptic {
    pub tau: C,
    th1: C,
    c3: C,
}

impl Elliptic {
    pub fn new(tau: C) -> Result<Self> {
        let t = theta_all(C::new(0.0, 0.0), tau)?;
        Ok(Elliptic { tau, th1: t[1], c3: t[3] / t[1] })
    }

    /// theta'(0)
    pub fn theta_prime0(&self) -> C {
        self.th1
    }

    pub fn theta(&self, z: C) -> Result<C> {
        theta(z, self.tau)
    }

    pub fn phi(&self, z: C, u: C) -> Result<C> {
        guard(z, self.tau, "z")?;
        guard(u, self.tau, "u")?;
        Ok(self.th1 * theta(z + u, self.tau)? / (theta(z, self.tau)? * theta(u, self.tau)?))
    }

    pub fn e1(&self, z: C) -> Result<C> {
        guard(z, self.tau, "z")?;
        let t = theta_all(z, self.tau)?;
        Ok(t[1] / t[0])
    }

    pub fn e2(&self, z: C) -> Result<C> {
        guard(z, self.tau, "z")?;
        let t = theta_all(z, self.tau)?;
        Ok((t[1] * t[1] - t[0] * t[2]) / (t[0] * t[0]))
    }

    /// Second z-derivative of E1.
    pub fn e1_dd(&self, z: C) -> Result<C> {
        guard(z, self.tau, "z")?;
        let t = theta_all(z, self.tau)?;
        let l = t[1] / t[0];
        Ok(t[3] / t[0] - 3.0 * l * t[2] / t[0] + 2.0 * l * l * l)
    }

    /// Weierstrass p, fixed by E1 = zeta + z theta'''(0)/(3 theta'(0)).
    pub fn wp(&self, z: C) -> Result<C> {
        Ok(self.e2(z)? + self.c3 / 3.0)
    }

    pub fn wp_d(&self, z: C) -> Result<C> {
        Ok(-self.e1_dd(z)?)
    }

    pub fn phi_weighted(&self, _a1: i64, a2: i64, m: usize, z: C, arg: C) -> Result<C> {
        Ok((2.0 * PI * i() * a2 as f64 * z / m as f64).exp() * self.phi(z, arg)?)
    }

    pub fn omega(&self, a1: i64, a2: i64, m: usize) -> C {
        (C::new(a1 as f64, 0.0) + self.tau * a2 as f64) / m as f64
    }

    pub fn e1_dual(&self, z: Dual) -> Result<Dual> {
        Ok(Dual::new(self.e1(z.v)?, -self.e2(z.v)? * z.d))
    }

    pub fn wp_dual(&self, z: Dual) -> Result<Dual> {
        Ok(Dual::new(self.wp(z.v)?, self.wp_d(z.v)? * z.d))
    }

    /// phi(z, u) with z dual, u constant.
    pub fn phi_dual(&self, z: Dual, u: C) -> Result<Dual> {
        guard(z.v, self.tau, "z")?;
        guard(u, self.tau, "u")?;
        let a = theta_all(z.v, self.tau)?;
        let b = theta_all(z.v + u, self.tau)?;
        let tu = theta(u, self.tau)?;
        let p = self.th1 * b[0] / (a[0] * tu);
        let d = self.th1 * (b[1] * a[0] - b[0] * a[1]) / (a[0] * a[0] * tu);
        Ok(Dual::new(p, d * z.d))
    }

    /// ∂_u phi(z, u) with z dual; finite where z + u is a lattice point.
    pub fn phi_du_dual(&self, z: Dual, u: C) -> Result<Dual> {
        guard(z.v, self.tau, "z")?;
        guard(u, self.tau, "u")?;
        let a = theta_all(z.v, self.tau)?;
        let b = theta_all(z.v + u, self.tau)?;
        let c = theta_all(u, self.tau)?;
        let num = b[1] * c[0] - b[0] * c[1];
        let v = self.th1 * num / (a[0] * c[0] * c[0]);
        let dnum = b[2] * c[0] - b[1] * c[1];
        let d = self.th1 * (dnum * a[0] - num * a[1]) / (a[0] * a[0] * c[0] * c[0]);
        Ok(Dual::new(v, d * z.d))
    }
}

pub fn kronecker_phi(z: C, u: C, tau: C) -> Result<C> {
    Elliptic::new(tau)?.phi(z, u)
}

pub fn eisenstein_e1(z: C, tau: C) -> Result<C> {
    Elliptic::new(tau)?.e1(z)
}

pub fn eisenstein_e2(z: C, tau: C) -> Result<C> {
    Elliptic::new(tau)?.e2(z)
}

pub fn weierstrass_p(z: C, tau: C) -> Result<C> {
    Elliptic::new(tau)?.wp(z)
}

/// exp(2 pi i a2 z / M) phi(z, arg)
pub fn phi_weighted(a1: i64, a2: i64, z: C, arg: C, tau: C, m: usize) -> Result<C> {
    Elliptic::new(tau)?.phi_weighted(a1, a2, m, z, arg)
}

/// omega_a = (a1 + a2 tau)/M
pub fn omega(a1: i64, a2: i64, tau: C, m: usize) -> C {
    (C::new(a1 as f64, 0.0) + tau * a2 as f64) / m as f64
}

pub fn trig_phi(z: C, hbar: C) -> Result<C> {
    Trig.phi(z, hbar)
}

/// a(u) = 2 pi i (u t - 1)/((u - 1)(t - 1))
pub fn trig_phi_mult(u: C, t: C) -> Result<C> {
    let den = (u - 1.0) * (t - 1.0);
    if den.norm() < POLE_GUARD {
        return Err(Error::PoleProximity(format!("u={u}, t={t}")));
    }
    Ok(2.0 * PI * i() * (u * t - 1.0) / den)
}

/// Trigonometric degeneration of the elliptic family.
#[derive(Clone, Copy, Debug)]
pub struct Trig;

impl Trig {
    pub fn cot(z: C) -> C {
        (PI * z).cos() / (PI * z).sin()
    }

    pub fn phi(&self, z: C, u: C) -> Result<C> {
        guard_int(z, "z")?;
        guard_int(u, "u")?;
        Ok(PI * (Self::cot(z) + Self::cot(u)))
    }

    pub fn e1(&self, z: C) -> Result<C> {
        guard_int(z, "z")?;
        Ok(PI * Self::cot(z))
    }

    pub fn e2(&self, z: C) -> Result<C> {
        guard_int(z, "z")?;
        let s = (PI * z).sin();
        Ok(PI * PI / (s * s))
    }

    pub fn wp(&self, z: C) -> Result<C> {
        Ok(self.e2(z)? - PI * PI / 3.0)
    }

    pub fn wp_d(&self, z: C) -> Result<C> {
        guard_int(z, "z")?;
        let s = (PI * z).sin();
        Ok(-2.0 * PI * PI * PI * (PI * z).cos() / (s * s * s))
    }
}

/// Scalar kernel used by the many-body coefficients: elliptic or trigonometric.
#[derive(Clone, Copy, Debug)]
pub enum Kernel {
    Elliptic(Elliptic),
    Trig,
}

impl Kernel {
    pub fn phi(&self, z: C, u: C) -> Result<C> {
        match self {
            Kernel::Elliptic(e) => e.phi(z, u),
            Kernel::Trig => Trig.phi(z, u),
        }
    }

    pub fn e1(&self, z: C) -> Result<C> {
        match self {
            Kernel::Elliptic(e) => e.e1(z),
            Kernel::Trig => Trig.e1(z),
        }
    }

    pub fn e2(&self, z: C) -> Result<C> {
        match self {
            Kernel::Elliptic(e) => e.e2(z),
            Kernel::Trig => Trig.e2(z),
        }
    }

    pub fn wp(&self, z: C) -> Result<C> {
        match self {
            Kernel::Elliptic(e) => e.wp(z),
            Kernel::Trig => Trig.wp(z),
        }
    }

    /// g(x) = E1(hbar + x) - E1(x)
    pub fn g(&self, x: C, hbar: C) -> Result<C> {
        Ok(self.e1(hbar + x)? - self.e1(x)?)
    }

    /// f(x) = g(x) - g(-x)
    pub fn f(&self, x: C, hbar: C) -> Result<C> {
        Ok(self.g(x, hbar)? - self.g(-x, hbar)?)
    }

    pub fn wp_d(&self, z: C) -> Result<C> {
        match self {
            Kernel::Elliptic(e) => e.wp_d(z),
            Kernel::Trig => Trig.wp_d(z),
        }
    }

    pub fn e1_dual(&self, z: Dual) -> Result<Dual> {
        Ok(Dual::new(self.e1(z.v)?, -self.e2(z.v)? * z.d))
    }

    pub fn wp_dual(&self, z: Dual) -> Result<Dual> {
        Ok(Dual::new(self.wp(z.v)?, self.wp_d(z.v)? * z.d))
    }

    pub fn phi_dual(&self, z: Dual, u: C) -> Result<Dual> {
        match self {
            Kernel::Elliptic(e) => e.phi_dual(z, u),
            // π(cot πz + cot πu): the z-derivative is -E2(z)
            Kernel::Trig => Ok(Dual::new(Trig.phi(z.v, u)?, -Trig.e2(z.v)? * z.d)),
        }
    }

    pub fn guard(&self, z: C, what: &str) -> Result<()> {
        match self {
            Kernel::Elliptic(e) => guard(z, e.tau, what),
            Kernel::Trig => guard_int(z, what),
        }
    }
}

pub fn g_fn(x: C, hbar: C, tau: C) -> Result<C> {
    Kernel::Elliptic(Elliptic::new(tau)?).g(x, hbar)
}

pub fn f_fn(x: C, hbar: C, tau: C) -> Result<C> {
    Kernel::Elliptic(Elliptic::new(tau)?).f(x, hbar)
}

/// f'(z) by the trapezoid rule on a circle of radius r (n nodes).
pub fn contour_derivative(f: impl Fn(C) -> Result<C>, z: C, r: f64, n: usize) -> Result<C> {
    let mut acc = C::new(0.0, 0.0);
    for k in 0..n {
        let w = (2.0 * PI * i() * k as f64 / n as f64).exp();
        acc += f(z + w * r)? / w;
    }
    Ok(acc / (n as f64 * r))
}

/// Distance from the nearest lattice point of the worst argument.
fn margin(args: &[C], tau: C) -> f64 {
    args.iter().map(|&a| lattice_distance(a, tau)).fold(f64::INFINITY, f64::min)
}

fn rel_to(d: C, terms: &[C]) -> f64 {
    d.norm() / terms.iter().fold(1.0f64, |a, t| a.max(t.norm()))
}

/// Residuals of the addition formula, quasi-periodicity, φφ = ℘ - ℘,
/// ∂_u φ, parity and periodicity of f, and ∂_z φ = φ g over seeded random
/// admissible points. Returns (name, max residual) pairs and the sample count.
pub fn identity_suite(samples: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    let mut rng = crate::rng::Sampler::new(seed);
    let mut worst = [0.0f64; 7];
    let mut done = 0;
    while done < samples {
        let tau = rng.complex((-0.5, 0.5), (0.7, 1.5));
        let mut pt = || rng.complex((-0.5, 0.5), (-0.3, 0.3));
        let (z1, z2, u1, u2) = (pt(), pt(), pt(), pt());
        let req = [z1, z2, u1, u2, u1 + u2, z2 - z1, z1 + u1, z1 - u1, z1 + u2, z1 + 1.0, z1 + tau];
        if margin(&req, tau) < 0.05 {
            continue;
        }
        done += 1;
        let e = Elliptic::new(tau)?;
        let a = e.phi(z1, u1)? * e.phi(z2, u2)?;
        let b = e.phi(z1, u1 + u2)? * e.phi(z2 - z1, u2)?;
        let c = e.phi(z2, u1 + u2)? * e.phi(z1 - z2, u1)?;
        worst[0] = worst[0].max(rel_to(a - b - c, &[a, b, c]));

        let p = e.phi(z1, u1)?;
        let q1 = e.phi(z1 + 1.0, u1)?;
        let qt = e.phi(z1 + tau, u1)?;
        let w = (-2.0 * PI * i() * u1).exp() * p;
        worst[1] = worst[1].max(rel_to(q1 - p, &[p]).max(rel_to(qt - w, &[w])));

        let l = p * e.phi(z1, -u1)?;
        let r = e.wp(z1)? - e.wp(u1)?;
        worst[2] = worst[2].max(rel_to(l - r, &[l, e.wp(z1)?, e.wp(u1)?]));

        let rad = 0.25 * margin(&[z1, u1, z1 + u1], tau).min(0.08);
        let du = contour_derivative(|v| e.phi(z1, v), u1, rad, 64)?;
        let want = p * (e.e1(z1 + u1)? - e.e1(u1)?);
        worst[3] = worst[3].max(rel_to(du - want, &[du, want]));

        let h = u2;
        let f = Kernel::Elliptic(e).f(z1, h)?;
        let fp = Kernel::Elliptic(e).f(z1 + 1.0, h)?;
        let fm = Kernel::Elliptic(e).f(-z1, h)?;
        worst[4] = worst[4].max(rel_to(fp - f, &[f]));
        worst[5] = worst[5].max(rel_to(f + fm, &[f]));

        let rad = 0.25 * margin(&[z1, h, z1 + h], tau).min(0.08);
        let dz = contour_derivative(|v| e.phi(v, h), z1, rad, 64)?;
        let want = e.phi(z1, h)? * Kernel::Elliptic(e).g(z1, h)?;
        worst[6] = worst[6].max(rel_to(dz - want, &[dz, want]));
    }
    let names = [
        "addition formula",
        "quasi-periodicity",
        "phi(z,u)phi(z,-u) = wp(z) - wp(u)",
        "d/du phi = phi (E1(z+u) - E1(u))",
        "f(x+1) = f(x)",
        "f(-x) = -f(x)",
        "d/dz phi(z, hbar) = phi g",
    ];
    Ok(names.iter().map(|n| n.to_string()).zip(worst).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm().max(1.0)
    }

    // plain summation over a fixed symmetric window, no stopping rule
    fn theta_long(z: C, tau: C) -> C {
        let mut s = c(0.0, 0.0);
        for k in -200i64..200 {
            let n = k as f64 + 0.5;
            s -= (i() * PI * tau * n * n + 2.0 * PI * i() * (z + 0.5) * n).exp();
        }
        s
    }

    #[test]
    fn theta_odd_and_zero() {
        let tau = c(0.0, 1.0);
        assert!(theta(c(0.0, 0.0), tau).unwrap().norm() < 1e-16);
        let a = theta(c(0.3, 0.0), tau).unwrap();
        let b = theta(c(-0.3, 0.0), tau).unwrap();
        assert!((a + b).norm() < 1e-15 * a.norm());
        assert!(theta_d(c(0.0, 0.0), tau, 2).unwrap().norm() < 1e-14);
        assert!(theta_d(c(0.0, 0.0), tau, 1).unwrap().norm() > 0.1);
    }

    #[test]
    fn theta_matches_long_sum() {
        let z = c(0.17, 0.05);
        let tau = c(0.0, 0.8);
        assert!(rel(theta(z, tau).unwrap(), theta_long(z, tau)) < 1e-15);
        let z = c(-0.4, 0.6);
        let tau = c(0.3, 0.7);
        assert!(rel(theta(z, tau).unwrap(), theta_long(z, tau)) < 1e-14);
    }

    #[test]
    fn theta_derivatives_fd() {
        let tau = c(0.0, 1.0);
        let z = c(0.2, 0.0);
        let h = 1e-5;
        for o in 1..=3 {
            let p = theta_all(z + h, tau).unwrap()[o - 1];
            let m = theta_all(z - h, tau).unwrap()[o - 1];
            let fd = (p - m) / (2.0 * h);
            assert!(rel(theta_d(z, tau, o).unwrap(), fd) < 1e-9, "order {o}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(theta(c(0.1, 0.0), c(0.0, -1.0)), Err(Error::NonConvergent(_))));
        assert!(matches!(theta(c(0.1, 500.0), c(0.0, 1.0)), Err(Error::Overflow(_))));
        assert!(matches!(kronecker_phi(c(1.0, 1e-8), c(0.2, 0.0), c(0.0, 1.0)), Err(Error::PoleProximity(_))));
        let tau = c(0.3, 0.9);
        assert!(matches!(kronecker_phi(c(0.2, 0.0), tau + 2.0 + 1e-7, tau), Err(Error::PoleProximity(_))));
    }

    #[test]
    fn phi_symmetric_and_periodic() {
        let tau = c(0.0, 1.0);
        let e = Elliptic::new(tau).unwrap();
        let z = c(0.21, 0.0);
        let u = c(0.1, 0.37);
        assert!(rel(e.phi(z, u).unwrap(), e.phi(u, z).unwrap()) < 1e-13);
        assert!(rel(e.phi(z + 1.0, u).unwrap(), e.phi(z, u).unwrap()) < 1e-13);
        let q = (-2.0 * PI * i() * u).exp();
        assert!(rel(e.phi(z + tau, u).unwrap(), q * e.phi(z, u).unwrap()) < 1e-12);
    }

    #[test]
    fn wp_identities() {
        let tau = c(0.0, 0.9);
        let e = Elliptic::new(tau).unwrap();
        let z = c(0.31, 0.0);
        let h = c(0.12, 0.0);
        let lhs = e.wp(h).unwrap() - e.wp(z).unwrap();
        let rhs = e.phi(h, z).unwrap() * e.phi(h, -z).unwrap();
        assert!(rel(lhs, rhs) < 1e-12);
        let z = c(0.2, 0.0);
        assert!(rel(e.wp(-z).unwrap(), e.wp(z).unwrap()) < 1e-13);
        assert!(rel(e.wp(z + tau).unwrap(), e.wp(z).unwrap()) < 1e-11);
    }

    // Laurent coefficient of phi(z,u) at z^1 gives (E1^2 - wp)/2
    #[test]
    fn wp_matches_laurent_extraction() {
        let tau = c(0.1, 1.1);
        let e = Elliptic::new(tau).unwrap();
        let u = c(0.1, 0.0) + 0.1 * tau;
        let lin = |h: f64| (e.phi(c(h, 0.0), u).unwrap() - e.phi(c(-h, 0.0), u).unwrap() - 2.0 / h) / (2.0 * h);
        let h = 1e-2;
        let c1 = (4.0 * lin(h / 2.0) - lin(h)) / 3.0;
        let e1 = e.e1(u).unwrap();
        let wp = e1 * e1 - 2.0 * c1;
        assert!(rel(wp, e.wp(u).unwrap()) < 1e-7);
    }

    #[test]
    fn e1_e2() {
        let tau = c(0.0, 1.0);
        let e = Elliptic::new(tau).unwrap();
        let z = c(0.3, 0.1);
        assert!((e.e1(-z).unwrap() + e.e1(z).unwrap()).norm() < 1e-13);
        assert!(rel(e.e1(z + 1.0).unwrap(), e.e1(z).unwrap()) < 1e-13);
        let z = c(0.25, 0.0);
        let h = 1e-5;
        let fd = -(e.e1(z + h).unwrap() - e.e1(z - h).unwrap()) / (2.0 * h);
        assert!(rel(e.e2(z).unwrap(), fd) < 1e-8);
        let fd = (e.wp(z + h).unwrap() - e.wp(z - h).unwrap()) / (2.0 * h);
        assert!(rel(e.wp_d(z).unwrap(), fd) < 1e-8);
    }

    #[test]
    fn weighted_phi() {
        let tau = c(0.0, 1.0);
        let e = Elliptic::new(tau).unwrap();
        let z = c(0.3, 0.0);
        let h = c(0.11, 0.0);
        assert_eq!(e.phi_weighted(0, 0, 2, z, h).unwrap(), e.phi(z, h).unwrap());
        let w = e.omega(1, 0, 2);
        let a = e.phi_weighted(1, 0, 2, z, w + h / 2.0).unwrap();
        assert!(rel(a, e.phi(z, 0.5 + h / 2.0).unwrap()) < 1e-15);
        let w = e.omega(2, 1, 3);
        let a = e.phi_weighted(2, 1, 3, z, w + h).unwrap();
        let b = (2.0 * PI * i() * z / 3.0).exp() * e.phi(z, w + h).unwrap();
        assert!(rel(a, b) < 1e-15);
    }

    #[test]
    fn g_and_f() {
        let tau = c(0.0, 1.0);
        let h = c(0.13, 0.04);
        let x = c(0.23, 0.0);
        let f = f_fn(x, h, tau).unwrap();
        assert!((f + f_fn(-x, h, tau).unwrap()).norm() < 1e-12);
        assert!(rel(f_fn(x + 1.0, h, tau).unwrap(), f) < 1e-12);
        let e = Elliptic::new(tau).unwrap();
        let x = c(0.3, 0.0);
        let d = 1e-5;
        let fd = (e.phi(x + d, h).unwrap() - e.phi(x - d, h).unwrap()) / (2.0 * d);
        assert!(rel(fd, e.phi(x, h).unwrap() * g_fn(x, h, tau).unwrap()) < 1e-9);
    }

    #[test]
    fn trig_forms() {
        let z = c(0.21, 0.0);
        let h = c(0.07, 0.0);
        let u = (2.0 * PI * i() * z).exp();
        let t = (2.0 * PI * i() * h).exp();
        assert!(rel(trig_phi(z, h).unwrap(), trig_phi_mult(u, t).unwrap()) < 1e-12);
        let p = trig_phi(z, h).unwrap() * trig_phi(-z, h).unwrap();
        let q = PI * PI / ((PI * h).sin().powi(2)) - PI * PI / ((PI * z).sin().powi(2));
        assert!(rel(p, q) < 1e-12);
        let e = Elliptic::new(c(0.0, 40.0)).unwrap();
        assert!(rel(e.phi(z, h).unwrap(), trig_phi(z, h).unwrap()) < 1e-10);
        assert!(rel(e.wp(z).unwrap(), Trig.wp(z).unwrap()) < 1e-10);
    }

    #[test]
    fn suite_small() {
        for (name, r) in identity_suite(40, 3).unwrap() {
            assert!(r < 1e-11, "{name}: {r}");
        }
    }

    #[test]
    fn contour_derivative_of_exp() {
        let d = contour_derivative(|z| Ok(z.exp()), c(0.3, 0.2), 0.05, 32).unwrap();
        assert!(rel(d, c(0.3, 0.2).exp()) < 1e-14);
    }

    #[test]
    fn local_expansion() {
        let e = Elliptic::new(c(0.1, 1.0)).unwrap();
        let u = c(0.2, 0.1);
        let z = c(1e-6, 0.0);
        assert!((z * e.phi(z, u).unwrap() - 1.0).norm() < 1e-5);
    }
}
