//! Quantum R-matrices: Baxter-Belavin, its M=2 eight-vertex table, and five
//! trigonometric families. Entry R_{ab,cd} of sum e_ab⊗e_cd R_{ab,cd} sits at
//! row (a-1)M+(c-1), column (b-1)M+(d-1).

use crate::error::{Error, Result};
use crate::numeric::{Dual, Field, Jet};
use crate::special_fn::{trig_phi_mult, Elliptic, Kernel};
use crate::tensor::{flip, max_abs, Mat, Space};
use num_complex::Complex64 as C;
use std::f64::consts::PI;
use std::str::FromStr;

fn ii() -> C {
    C::new(0.0, 1.0)
}

fn zero() -> C {
    C::new(0.0, 0.0)
}

/// R-matrix family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    EllipticBB,
    EightVertex,
    SevenVertex(C),
    ZnInvariant,
    CremmerGervais,
    NonStandard,
    UqXXZ,
}

impl Kind {
    pub fn is_elliptic(&self) -> bool {
        matches!(self, Kind::EllipticBB | Kind::EightVertex)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::EllipticBB => "elliptic",
            Kind::EightVertex => "eight-vertex",
            Kind::SevenVertex(_) => "seven-vertex",
            Kind::ZnInvariant => "zn",
            Kind::CremmerGervais => "cremmer-gervais",
            Kind::NonStandard => "non-standard",
            Kind::UqXXZ => "uq-xxz",
        }
    }

    /// Every kind, with c7 for the seven-vertex one.
    pub fn all(c7: C) -> [Kind; 7] {
        [
            Kind::EllipticBB,
            Kind::EightVertex,
            Kind::SevenVertex(c7),
            Kind::ZnInvariant,
            Kind::CremmerGervais,
            Kind::NonStandard,
            Kind::UqXXZ,
        ]
    }

    /// Kinds defined for every rank.
    pub fn any_rank(&self) -> bool {
        !matches!(self, Kind::EightVertex | Kind::SevenVertex(_))
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Kind> {
        Ok(match s {
            "elliptic" | "elliptic-bb" => Kind::EllipticBB,
            "eight-vertex" => Kind::EightVertex,
            "seven-vertex" => Kind::SevenVertex(zero()),
            "zn" | "zn-invariant" => Kind::ZnInvariant,
            "cremmer-gervais" => Kind::CremmerGervais,
            "non-standard" => Kind::NonStandard,
            "uq-xxz" => Kind::UqXXZ,
            _ => return Err(Error::InvalidParams(format!("unknown kind '{s}'"))),
        })
    }
}

/// Scalar parameters. t, q, x are derived on demand and never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub tau: C,
    pub hbar: C,
    pub eta: C,
    pub m: usize,
    pub n: usize,
}

impl ModelParams {
    pub fn new(tau: C, hbar: C, eta: C, m: usize, n: usize) -> Result<Self> {
        let p = ModelParams { tau, hbar, eta, m, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau.im <= 0.0 {
            return Err(Error::InvalidParams(format!("Im tau must be positive, got {}", self.tau)));
        }
        if !self.hbar.is_finite() || !self.eta.is_finite() {
            return Err(Error::InvalidParams("hbar and eta must be finite".into()));
        }
        if self.m < 1 || self.n < 2 {
            return Err(Error::InvalidParams(format!("need M >= 1 and N >= 2, got M={} N={}", self.m, self.n)));
        }
        Ok(())
    }

    /// t = exp(2 pi i hbar)
    pub fn t(&self) -> C {
        (2.0 * PI * ii() * self.hbar).exp()
    }

    /// principal t^{1/2} = exp(pi i hbar)
    pub fn sqrt_t(&self) -> C {
        (PI * ii() * self.hbar).exp()
    }

    /// q = exp(2 pi i eta)
    pub fn q(&self) -> C {
        (2.0 * PI * ii() * self.eta).exp()
    }

    /// x = exp(2 pi i eta)
    pub fn x(&self) -> C {
        self.q()
    }

    pub fn with_hbar(mut self, hbar: C) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_eta(mut self, eta: C) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_tau(mut self, tau: C) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_mn(mut self, m: usize, n: usize) -> Self {
        self.m = m;
        self.n = n;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RSpec {
    pub kind: Kind,
    pub params: ModelParams,
}

impl RSpec {
    pub fn new(kind: Kind, params: ModelParams) -> Self {
        RSpec { kind, params }
    }
}

/// Matrix of duals kept as value and z-derivative.
#[derive(Clone, Debug)]
pub struct DualMat {
    pub v: Mat,
    pub d: Mat,
}

impl DualMat {
    fn zeros(k: usize) -> Self {
        DualMat { v: Mat::zeros(k, k), d: Mat::zeros(k, k) }
    }

    fn add_scaled(&mut self, w: Dual, b: &Mat) {
        self.v += b * w.v;
        self.d += b * w.d;
    }

    fn add_at(&mut self, r: usize, c: usize, w: Dual) {
        self.v[(r, c)] += w.v;
        self.d[(r, c)] += w.d;
    }

    fn div_scalar(&self, s: Dual) -> DualMat {
        let v = &self.v / s.v;
        let d = (&self.d - &v * s.d) / s.v;
        DualMat { v, d }
    }
}

/// r̄, m̄ of R̄ = Id + ħ r̄ + ħ² m̄ + O(ħ³), with z-derivatives.
#[derive(Clone, Debug)]
pub struct Classical {
    pub r: Mat,
    pub dr: Mat,
    pub m: Mat,
    pub dm: Mat,
}

/// Q = diag(exp(2 pi i k / M)), k = 1..M.
pub fn basis_q(m: usize) -> Mat {
    Mat::from_fn(m, m, |r, c| if r == c { (2.0 * PI * ii() * (r + 1) as f64 / m as f64).exp() } else { zero() })
}

/// Λ_{kl} = 1 iff l = k+1 mod M.
pub fn basis_lambda(m: usize) -> Mat {
    Mat::from_fn(m, m, |r, c| if c == (r + 1) % m { C::new(1.0, 0.0) } else { zero() })
}

fn mat_pow(a: &Mat, k: usize) -> Mat {
    let mut out = Mat::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// T_a = exp(a1 a2 pi i / M) Q^{a1} Λ^{a2}; the phase uses a1, a2 as given.
pub fn t_alpha(a1: i64, a2: i64, m: usize) -> Mat {
    let mi = m as i64;
    let ph = (ii() * PI * (a1 * a2) as f64 / m as f64).exp();
    let q = mat_pow(&basis_q(m), a1.rem_euclid(mi) as usize);
    let l = mat_pow(&basis_lambda(m), a2.rem_euclid(mi) as usize);
    q * l * ph
}

/// T_a ⊗ T_{-a}
pub fn tt_alpha(a1: i64, a2: i64, m: usize) -> Mat {
    t_alpha(a1, a2, m).kronecker(&t_alpha(-a1, -a2, m))
}

fn sign(x: i64) -> f64 {
    if x > 0 {
        1.0
    } else if x < 0 {
        -1.0
    } else {
        0.0
    }
}

/// Either evaluation at finite ħ, or the series ħ·R in powers of ħ.
trait TrigCtx {
    type S: Field;
    fn zero(&self) -> Self::S;
    /// π cot πħ
    fn sing_cot(&self) -> Self::S;
    /// π / sin πħ
    fn sing_csc(&self) -> Self::S;
    /// regular quantity into the representation used for entries
    fn lift(&self, r: Self::S) -> Self::S;
    fn zf(&self, d: Dual) -> Self::S;
    /// exp(x(z) + kħ)
    fn exp_h(&self, x: Dual, k: C) -> Self::S;
    /// sin(x(z) + kħ)
    fn sin_h(&self, x: Dual, k: C) -> Self::S;
}

struct Finite {
    h: C,
}

impl TrigCtx for Finite {
    type S = Dual;
    fn zero(&self) -> Dual {
        Dual::zero()
    }
    fn sing_cot(&self) -> Dual {
        Dual::cst(self.h).pcot()
    }
    fn sing_csc(&self) -> Dual {
        Dual::cst(self.h).pcsc()
    }
    fn lift(&self, r: Dual) -> Dual {
        r
    }
    fn zf(&self, d: Dual) -> Dual {
        d
    }
    fn exp_h(&self, x: Dual, k: C) -> Dual {
        (x + k * self.h).exp()
    }
    fn sin_h(&self, x: Dual, k: C) -> Dual {
        (x + k * self.h).sin()
    }
}

struct Series;

impl TrigCtx for Series {
    type S = Jet;
    fn zero(&self) -> Jet {
        Jet::zero()
    }
    fn sing_cot(&self) -> Jet {
        Jet::h_pcot()
    }
    fn sing_csc(&self) -> Jet {
        Jet::h_pcsc()
    }
    fn lift(&self, r: Jet) -> Jet {
        Jet::new(Dual::zero(), r.c[0], r.c[1])
    }
    fn zf(&self, d: Dual) -> Jet {
        Jet::cst(d)
    }
    fn exp_h(&self, x: Dual, k: C) -> Jet {
        Jet::exp_shift(x, k)
    }
    fn sin_h(&self, x: Dual, k: C) -> Jet {
        Jet::sin_shift(x, k)
    }
}

/// Entries of a trigonometric R (times ħ in series mode), row-major M²×M².
fn trig_entries<X: TrigCtx>(cx: &X, kind: Kind, m: usize, z: Dual) -> Result<Vec<X::S>> {
    let k2 = m * m;
    let mut e = vec![cx.zero(); k2 * k2];
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a - 1) * m + (c - 1)) * k2 + (b - 1) * m + (d - 1);
    let diag = cx.sing_cot() + cx.lift(cx.zf(z.pcot()));
    let mi = m as i64;
    match kind {
        Kind::ZnInvariant | Kind::CremmerGervais | Kind::NonStandard => {
            for a in 1..=m {
                e[idx(a, a, a, a)] = diag;
                for c in 1..=m {
                    if a == c {
                        continue;
                    }
                    let s = (a as i64 - c as i64, sign(a as i64 - c as i64));
                    let w = (2 * s.0) as f64 - m as f64 * s.1;
                    let kh = ii() * PI * w / m as f64;
                    e[idx(a, a, c, c)] = e[idx(a, a, c, c)] + cx.sing_csc() * cx.exp_h(Dual::zero(), kh);
                    let ez = (z * kh).exp() * z.pcsc();
                    e[idx(a, c, c, a)] = e[idx(a, c, c, a)] + cx.lift(cx.zf(ez));
                }
            }
            if kind != Kind::ZnInvariant {
                for a in 1..=mi {
                    for b in 1..=mi {
                        for c in 1..=mi {
                            let d = a + c - b;
                            if d < 1 || d > mi {
                                continue;
                            }
                            let eps = ((a < b && b < c) as i64 - (c < b && b < a) as i64) as f64;
                            if eps == 0.0 {
                                continue;
                            }
                            let x = z * (2.0 * PI * ii() * (a - b) as f64 / m as f64);
                            let t = cx.exp_h(x, 2.0 * PI * ii() * (b - c) as f64 / m as f64);
                            let i = idx(a as usize, b as usize, c as usize, d as usize);
                            e[i] = e[i] + cx.lift(t) * (2.0 * PI * ii() * eps);
                        }
                    }
                }
            }
            if kind == Kind::NonStandard {
                for a in 1..=mi {
                    for b in 1..=mi {
                        for c in 1..=mi {
                            let d = a + c - b - mi;
                            if d < 1 || d > mi {
                                continue;
                            }
                            let i = idx(a as usize, b as usize, c as usize, d as usize);
                            let tp = 2.0 * PI * ii() / m as f64;
                            if a == mi {
                                let t = cx.exp_h(z * (-tp * b as f64), -tp * d as f64);
                                e[i] = e[i] + cx.lift(t) * (-2.0 * PI * ii());
                            }
                            if c == mi {
                                let t = cx.exp_h(z * (tp * d as f64), tp * b as f64);
                                e[i] = e[i] + cx.lift(t) * (2.0 * PI * ii());
                            }
                        }
                    }
                }
            }
        }
        Kind::SevenVertex(c7) => {
            e[idx(1, 1, 1, 1)] = diag;
            e[idx(2, 2, 2, 2)] = diag;
            e[idx(1, 1, 2, 2)] = cx.sing_csc();
            e[idx(2, 2, 1, 1)] = cx.sing_csc();
            e[idx(1, 2, 2, 1)] = cx.lift(cx.zf(z.pcsc()));
            e[idx(2, 1, 1, 2)] = cx.lift(cx.zf(z.pcsc()));
            e[idx(2, 1, 2, 1)] = cx.lift(cx.sin_h(z * PI, C::new(PI, 0.0))) * c7;
        }
        Kind::UqXXZ => {
            for i in 1..=m {
                e[idx(i, i, i, i)] = diag;
                for j in 1..=m {
                    if i == j {
                        continue;
                    }
                    e[idx(i, i, j, j)] = cx.sing_csc();
                    let ph = if i < j { 1.0 } else { -1.0 };
                    let w = (z * (PI * ii() * ph)).exp() * z.pcsc();
                    e[idx(i, j, j, i)] = cx.lift(cx.zf(w));
                }
            }
        }
        Kind::EllipticBB | Kind::EightVertex => {
            return Err(Error::InvalidParams("elliptic kind in trigonometric builder".into()))
        }
    }
    Ok(e)
}

/// Evaluator bound to one spec.
#[derive(Clone, Debug)]
pub struct RMatrix {
    pub spec: RSpec,
    ell: Option<Elliptic>,
    kernel: Kernel,
}

impl RMatrix {
    pub fn new(spec: RSpec) -> Result<Self> {
        spec.params.validate()?;
        let m = spec.params.m;
        if !spec.kind.any_rank() && m != 2 {
            return Err(Error::IncompatibleRank(format!("{} needs M=2, got M={m}", spec.kind.name())));
        }
        let (ell, kernel) = if spec.kind.is_elliptic() {
            let e = Elliptic::new(spec.params.tau)?;
            (Some(e), Kernel::Elliptic(e))
        } else {
            (None, Kernel::Trig)
        };
        Ok(RMatrix { spec, ell, kernel })
    }

    pub fn from_kind(kind: Kind, params: ModelParams) -> Result<Self> {
        Self::new(RSpec::new(kind, params))
    }

    pub fn m(&self) -> usize {
        self.spec.params.m
    }

    pub fn hbar(&self) -> C {
        self.spec.params.hbar
    }

    /// Scalar kernel φ(·, ħ) matching this family.
    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn ell(&self) -> &Elliptic {
        self.ell.as_ref().expect("elliptic kind")
    }

    fn trig_dual(&self, z: C) -> Result<DualMat> {
        let m = self.m();
        self.kernel.guard(z, "z")?;
        self.kernel.guard(self.hbar(), "hbar")?;
        let e = trig_entries(&Finite { h: self.hbar() }, self.spec.kind, m, Dual::var(z))?;
        let k2 = m * m;
        let mut out = DualMat::zeros(k2);
        for (n, x) in e.iter().enumerate() {
            out.add_at(n / k2, n % k2, *x);
        }
        Ok(out)
    }

    fn bb_dual(&self, z: C) -> Result<DualMat> {
        let m = self.m();
        let e = self.ell();
        let mut out = DualMat::zeros(m * m);
        let zd = Dual::var(z);
        for a1 in 0..m as i64 {
            for a2 in 0..m as i64 {
                let w = (zd * (2.0 * PI * ii() * a2 as f64 / m as f64)).exp();
                let arg = self.hbar() / m as f64 + e.omega(a1, a2, m);
                let f = w * e.phi_dual(zd, arg)? * (1.0 / m as f64);
                out.add_scaled(f, &tt_alpha(a1, a2, m));
            }
        }
        Ok(out)
    }

    fn eight_dual(&self, z: C) -> Result<DualMat> {
        let e = self.ell();
        let h = self.hbar();
        let tau = e.tau;
        let zd = Dual::var(z);
        let ez = (zd * (PI * ii())).exp();
        let p00 = e.phi_dual(zd, h / 2.0)?;
        let p10 = e.phi_dual(zd, 0.5 + h / 2.0)?;
        let p01 = ez * e.phi_dual(zd, tau / 2.0 + h / 2.0)?;
        let p11 = ez * e.phi_dual(zd, (1.0 + tau) / 2.0 + h / 2.0)?;
        let mut out = eight_table(p10, p01, p11);
        for k in 0..4 {
            out.add_at(k, k, p00);
        }
        out.v *= C::new(0.5, 0.0);
        out.d *= C::new(0.5, 0.0);
        Ok(out)
    }

    /// Un-normalized R with its z-derivative.
    pub fn build_dual(&self, z: C) -> Result<DualMat> {
        match self.spec.kind {
            Kind::EllipticBB => self.bb_dual(z),
            Kind::EightVertex => self.eight_dual(z),
            _ => self.trig_dual(z),
        }
    }

    pub fn build(&self, z: C) -> Result<Mat> {
        Ok(self.build_dual(z)?.v)
    }

    /// φ(z, ħ) with z-derivative.
    pub fn phi_dual(&self, z: C) -> Result<Dual> {
        self.kernel.phi_dual(Dual::var(z), self.hbar())
    }

    /// R̄ and F̄ = ∂_z R̄.
    pub fn normalized_dual(&self, z: C) -> Result<DualMat> {
        let r = self.build_dual(z)?;
        Ok(r.div_scalar(self.phi_dual(z)?))
    }

    pub fn normalized(&self, z: C) -> Result<Mat> {
        Ok(self.normalized_dual(z)?.v)
    }

    pub fn deriv(&self, z: C) -> Result<Mat> {
        Ok(self.normalized_dual(z)?.d)
    }

    pub fn classical(&self, z: C) -> Result<Classical> {
        match self.spec.kind {
            Kind::EllipticBB => self.classical_bb(z),
            Kind::EightVertex => self.classical_eight(z),
            _ => self.classical_trig(z),
        }
    }

    fn id_coeff(&self, e1: Dual, wp: Dual, m: f64) -> Dual {
        let e1s = e1 * e1;
        (e1s - wp) * (1.0 / (2.0 * m * m)) - e1s * (1.0 / m) + (e1s + wp) * 0.5
    }

    fn classical_bb(&self, z: C) -> Result<Classical> {
        let m = self.m();
        let mf = m as f64;
        let e = self.ell();
        let zd = Dual::var(z);
        let e1 = e.e1_dual(zd)?;
        let wp = e.wp_dual(zd)?;
        let k2 = m * m;
        let mut s0 = DualMat::zeros(k2);
        let mut s1 = DualMat::zeros(k2);
        for a1 in 0..m as i64 {
            for a2 in 0..m as i64 {
                if a1 == 0 && a2 == 0 {
                    continue;
                }
                let om = e.omega(a1, a2, m);
                let w = (zd * (2.0 * PI * ii() * a2 as f64 / mf)).exp();
                let p = w * e.phi_dual(zd, om)?;
                let tt = tt_alpha(a1, a2, m);
                s0.add_scaled(p * (1.0 / mf), &tt);
                // φ (E1(z+ω) - E1(ω)) = ∂_u φ(z, u) at u = ω
                s1.add_scaled(w * e.phi_du_dual(zd, om)? * (1.0 / (mf * mf)), &tt);
            }
        }
        Ok(assemble(e1, self.id_coeff(e1, wp, mf), (1.0 - mf) / mf, &s0, &s1))
    }

    fn classical_eight(&self, z: C) -> Result<Classical> {
        let e = self.ell();
        let tau = e.tau;
        let zd = Dual::var(z);
        let ez = (zd * (PI * ii())).exp();
        let e1 = e.e1_dual(zd)?;
        let wp = e.wp_dual(zd)?;
        let om = [C::new(0.5, 0.0), tau / 2.0, (1.0 + tau) / 2.0];
        let w = [Dual::one(), ez, ez];
        let mut p = [Dual::zero(); 3];
        let mut q = [Dual::zero(); 3];
        for k in 0..3 {
            p[k] = w[k] * e.phi_dual(zd, om[k])?;
            q[k] = w[k] * e.phi_du_dual(zd, om[k])?;
        }
        let mut s0 = eight_table(p[0], p[1], p[2]);
        s0.v *= C::new(0.5, 0.0);
        s0.d *= C::new(0.5, 0.0);
        let mut s1 = eight_table(q[0], q[1], q[2]);
        s1.v *= C::new(0.25, 0.0);
        s1.d *= C::new(0.25, 0.0);
        Ok(assemble(e1, self.id_coeff(e1, wp, 2.0), -0.5, &s0, &s1))
    }

    fn classical_trig(&self, z: C) -> Result<Classical> {
        let m = self.m();
        self.kernel.guard(z, "z")?;
        let e = trig_entries(&Series, self.spec.kind, m, Dual::var(z))?;
        let norm = Series.sing_cot() + Series.lift(Jet::cst(Dual::var(z).pcot()));
        let k2 = m * m;
        let mut c = Classical { r: Mat::zeros(k2, k2), dr: Mat::zeros(k2, k2), m: Mat::zeros(k2, k2), dm: Mat::zeros(k2, k2) };
        for (n, x) in e.iter().enumerate() {
            let q = *x / norm;
            let (r, col) = (n / k2, n % k2);
            c.r[(r, col)] = q.c[1].v;
            c.dr[(r, col)] = q.c[1].d;
            c.m[(r, col)] = q.c[2].v;
            c.dm[(r, col)] = q.c[2].d;
        }
        Ok(c)
    }

    /// max |R̄12(z) R̄21(-z) - Id|
    pub fn unitarity_residual(&self, z: C) -> Result<f64> {
        let a = self.normalized(z)?;
        let b = flip(&self.normalized(-z)?, self.m());
        let k2 = self.m() * self.m();
        Ok(max_abs(&(a * b - Mat::identity(k2, k2))))
    }

    /// R12(u) R13(u+v) R23(v) - R23(v) R13(u+v) R12(u) on three sites, normalized R,
    /// relative to max(1, largest entry of the left side).
    pub fn qybe_residual(&self, u: C, v: C) -> Result<f64> {
        let sp = Space::new(3, self.m());
        let a = self.normalized(u)?;
        let b = self.normalized(u + v)?;
        let c = self.normalized(v)?;
        let id = sp.identity();
        let l = sp.lmul2(&a, 1, 2, &sp.lmul2(&b, 1, 3, &sp.lmul2(&c, 2, 3, &id)?)?)?;
        let r = sp.lmul2(&c, 2, 3, &sp.lmul2(&b, 1, 3, &sp.lmul2(&a, 1, 2, &id)?)?)?;
        Ok(max_abs(&(&l - &r)) / max_abs(&l).max(1.0))
    }
}

/// Classical r̄, m̄ against symmetric ħ-differences of R̄ (ħ = ±1e-3, ±5e-4,
/// one Richardson step). Relative max-entry residuals (r, m).
pub fn classical_expansion_residual(kind: Kind, p: ModelParams, z: C) -> Result<(f64, f64)> {
    let cl = RMatrix::from_kind(kind, p)?.classical(z)?;
    let at = |h: f64| RMatrix::from_kind(kind, p.with_hbar(C::new(h, 0.0)))?.normalized(z);
    let k2 = p.m * p.m;
    let id = Mat::identity(k2, k2);
    let (h1, h2) = (1e-3, 5e-4);
    let (a1, b1, a2, b2) = (at(h1)?, at(-h1)?, at(h2)?, at(-h2)?);
    let odd = |a: &Mat, b: &Mat, h: f64| (a - b) / C::new(2.0 * h, 0.0);
    let even = |a: &Mat, b: &Mat, h: f64| (a + b - &id * C::new(2.0, 0.0)) / C::new(2.0 * h * h, 0.0);
    let r = (odd(&a2, &b2, h2) * C::new(4.0, 0.0) - odd(&a1, &b1, h1)) / C::new(3.0, 0.0);
    let m = (even(&a2, &b2, h2) * C::new(4.0, 0.0) - even(&a1, &b1, h1)) / C::new(3.0, 0.0);
    Ok((
        max_abs(&(&cl.r - r)) / max_abs(&cl.r).max(1.0),
        max_abs(&(&cl.m - m)) / max_abs(&cl.m).max(1.0),
    ))
}

/// z R(z) at z → 0 (Richardson in both directions) against P.
pub fn residue_residual(r: &RMatrix) -> Result<f64> {
    let h = 1e-5;
    let f = |s: f64| -> Result<Mat> { Ok(r.build(C::new(s, 0.0))? * C::new(s, 0.0)) };
    let two = C::new(2.0, 0.0);
    let res = ((f(h)? * two - f(2.0 * h)?) + (f(-h)? * two - f(-2.0 * h)?)) / two;
    Ok(max_abs(&(res - crate::tensor::perm2(r.m()))))
}

fn eight_table(a10: Dual, a01: Dual, a11: Dual) -> DualMat {
    let mut t = DualMat::zeros(4);
    t.add_at(0, 0, a10);
    t.add_at(3, 3, a10);
    t.add_at(1, 1, -a10);
    t.add_at(2, 2, -a10);
    t.add_at(0, 3, a01 - a11);
    t.add_at(3, 0, a01 - a11);
    t.add_at(1, 2, a01 + a11);
    t.add_at(2, 1, a01 + a11);
    t
}

/// r̄ = k E1 Id + S0, m̄ = c Id + S1 - E1 S0, with derivatives.
fn assemble(e1: Dual, c: Dual, k: f64, s0: &DualMat, s1: &DualMat) -> Classical {
    let n = s0.v.nrows();
    let id = Mat::identity(n, n);
    let r = &id * (e1.v * k) + &s0.v;
    let dr = &id * (e1.d * k) + &s0.d;
    let m = &id * c.v + &s1.v - &s0.v * e1.v;
    let dm = &id * c.d + &s1.d - &s0.d * e1.v - &s0.v * e1.d;
    Classical { r, dr, m, dm }
}

/// Multiplicative U_q(gl_M) R-matrix in u = exp(2πiz); `sqrt_t` = t^{1/2}.
pub fn uq_mult(u: C, sqrt_t: C, m: usize) -> Result<Mat> {
    let t = sqrt_t * sqrt_t;
    if (u - 1.0).norm() < crate::special_fn::POLE_GUARD || (t - 1.0).norm() < crate::special_fn::POLE_GUARD {
        return Err(Error::DegenerateT(format!("u={u}, t={t}")));
    }
    let k2 = m * m;
    let tp = 2.0 * PI * ii();
    let mut r = Mat::zeros(k2, k2);
    for i in 0..m {
        r[(i * m + i, i * m + i)] = PI * ii() * ((u + 1.0) / (u - 1.0) + (t + 1.0) / (t - 1.0));
        for j in 0..m {
            if i == j {
                continue;
            }
            r[(i * m + j, i * m + j)] = tp * sqrt_t / (t - 1.0);
            let w = if i < j { u / (u - 1.0) } else { 1.0 / (u - 1.0) };
            r[(i * m + j, j * m + i)] = tp * w;
        }
    }
    Ok(r)
}

/// `uq_mult` divided by a(u).
pub fn uq_mult_normalized(u: C, sqrt_t: C, m: usize) -> Result<Mat> {
    let a = trig_phi_mult(u, sqrt_t * sqrt_t).map_err(|e| Error::DegenerateT(e.to_string()))?;
    if a.norm() < crate::special_fn::POLE_GUARD {
        return Err(Error::DegenerateT(format!("a(u) vanishes at u={u}")));
    }
    Ok(uq_mult(u, sqrt_t, m)? / a)
}

/// The constant matrix with middle block (1, -√t; -√t, t).
pub fn c_matrix(params: &ModelParams) -> Result<Mat> {
    if params.m != 2 {
        return Err(Error::IncompatibleRank(format!("C matrix needs M=2, got {}", params.m)));
    }
    let s = params.sqrt_t();
    let mut c = Mat::zeros(4, 4);
    c[(1, 1)] = C::new(1.0, 0.0);
    c[(1, 2)] = -s;
    c[(2, 1)] = -s;
    c[(2, 2)] = s * s;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::perm2;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn params(m: usize) -> ModelParams {
        ModelParams::new(c(0.1, 0.9), c(0.11, 0.02), c(0.05, 0.0), m, 3).unwrap()
    }

    #[test]
    fn basis_tables() {
        for m in 1..=4 {
            let id = Mat::identity(m, m);
            assert!(max_abs(&(mat_pow(&basis_q(m), m) - &id)) < 1e-13);
            assert!(max_abs(&(mat_pow(&basis_lambda(m), m) - &id)) < 1e-13);
            let mut p = Mat::zeros(m * m, m * m);
            for a1 in 0..m as i64 {
                for a2 in 0..m as i64 {
                    p += tt_alpha(a1, a2, m);
                }
            }
            assert!(max_abs(&(p / C::new(m as f64, 0.0) - perm2(m))) < 1e-13);
        }
    }

    #[test]
    fn scalar_case() {
        let p = params(1);
        let r = RMatrix::from_kind(Kind::EllipticBB, p).unwrap();
        let z = c(0.27, 0.03);
        let e = Elliptic::new(p.tau).unwrap();
        assert!((r.build(z).unwrap()[(0, 0)] - e.phi(z, p.hbar).unwrap()).norm() < 1e-13);
        assert!((r.normalized(z).unwrap()[(0, 0)] - 1.0).norm() < 1e-14);
        assert!(r.deriv(z).unwrap()[(0, 0)].norm() < 1e-12);
        assert_eq!(r.qybe_residual(z, c(0.1, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn rank_checks() {
        assert!(matches!(RMatrix::from_kind(Kind::EightVertex, params(3)), Err(Error::IncompatibleRank(_))));
        assert!(matches!(RMatrix::from_kind(Kind::SevenVertex(c(0.0, 0.0)), params(1)), Err(Error::IncompatibleRank(_))));
        assert!(matches!(c_matrix(&params(3)), Err(Error::IncompatibleRank(_))));
        assert!(ModelParams::new(c(0.0, -1.0), c(0.1, 0.0), c(0.0, 0.0), 2, 3).is_err());
        assert!(ModelParams::new(c(0.0, 1.0), c(0.1, 0.0), c(0.0, 0.0), 2, 1).is_err());
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in Kind::all(c(0.0, 0.0)) {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
        assert!("bogus".parse::<Kind>().is_err());
    }

    #[test]
    fn bb_equals_eight_vertex() {
        let p = params(2);
        let a = RMatrix::from_kind(Kind::EllipticBB, p).unwrap();
        let b = RMatrix::from_kind(Kind::EightVertex, p).unwrap();
        for z in [c(0.23, 0.0), c(-0.31, 0.12), c(0.6, -0.2)] {
            let (x, y) = (a.build_dual(z).unwrap(), b.build_dual(z).unwrap());
            assert!(max_abs(&(&x.v - &y.v)) < 1e-13);
            assert!(max_abs(&(&x.d - &y.d)) < 1e-11);
            let (x, y) = (a.classical(z).unwrap(), b.classical(z).unwrap());
            assert!(max_abs(&(&x.r - &y.r)) < 1e-12);
            assert!(max_abs(&(&x.m - &y.m)) < 1e-12);
            assert!(max_abs(&(&x.dm - &y.dm)) < 1e-10);
        }
    }

    #[test]
    fn unitarity_and_qybe_all_kinds() {
        for m in 1..=3 {
            for k in Kind::all(c(0.7, -0.3)) {
                let Ok(r) = RMatrix::from_kind(k, params(m)) else { continue };
                let z = c(0.23, 0.04);
                assert!(r.unitarity_residual(z).unwrap() < 1e-12, "{k:?} M={m}");
                assert!(r.qybe_residual(z, c(0.17, -0.05)).unwrap() < 1e-11, "{k:?} M={m}");
            }
        }
    }

    #[test]
    fn residue_is_permutation() {
        let p = params(3);
        for k in [Kind::EllipticBB, Kind::ZnInvariant, Kind::UqXXZ] {
            let r = RMatrix::from_kind(k, p).unwrap();
            let h = 1e-5;
            let f = |s: f64| r.build(c(s, 0.0)).unwrap() * C::new(s, 0.0);
            let res = (f(h) * C::new(2.0, 0.0) - f(2.0 * h)) + (f(-h) * C::new(2.0, 0.0) - f(-2.0 * h));
            let res = res / C::new(2.0, 0.0);
            assert!(max_abs(&(res - perm2(3))) < 1e-8, "{k:?}");
            assert!(residue_residual(&r).unwrap() < 1e-8);
        }
    }

    #[test]
    fn derivative_matches_fd() {
        for (k, m) in [(Kind::EllipticBB, 2), (Kind::EllipticBB, 3), (Kind::CremmerGervais, 3), (Kind::NonStandard, 3), (Kind::SevenVertex(c(0.4, 0.1)), 2)] {
            let p = ModelParams::new(c(0.0, 0.9), c(0.11, 0.0), c(0.05, 0.0), m, 3).unwrap();
            let r = RMatrix::from_kind(k, p).unwrap();
            let z = c(0.23, 0.0);
            let h = 1e-5;
            let fd = (r.normalized(z + h).unwrap() - r.normalized(z - h).unwrap()) / C::new(2.0 * h, 0.0);
            let d = r.deriv(z).unwrap();
            assert!(max_abs(&(&d - &fd)) < 1e-8 * max_abs(&d).max(1.0), "{k:?}");
        }
    }

    #[test]
    fn xxz_normalized_table() {
        let p = ModelParams::new(c(0.0, 1.0), c(0.07, 0.03), c(0.0, 0.0), 2, 3).unwrap();
        let r = RMatrix::from_kind(Kind::UqXXZ, p).unwrap();
        let z = c(0.31, 0.02);
        let u = (2.0 * PI * ii() * z).exp();
        let (t, s) = (p.t(), p.sqrt_t());
        let rb = r.normalized(z).unwrap();
        let den = u * t - 1.0;
        let want = [
            (0, 0, c(1.0, 0.0)),
            (1, 1, s * (u - 1.0) / den),
            (1, 2, u * (t - 1.0) / den),
            (2, 1, (t - 1.0) / den),
            (2, 2, s * (u - 1.0) / den),
            (3, 3, c(1.0, 0.0)),
        ];
        for (i, j, w) in want {
            assert!((rb[(i, j)] - w).norm() < 1e-13, "({i},{j})");
        }
        assert!(max_abs(&(uq_mult_normalized(u, s, 2).unwrap() - &rb)) < 1e-13);
    }

    #[test]
    fn c_matrix_values() {
        let p = params(2).with_hbar(c(0.0, -(4.0f64).ln() / (2.0 * PI)));
        let cm = c_matrix(&p).unwrap();
        assert!((cm[(1, 1)] - 1.0).norm() < 1e-14);
        assert!((cm[(1, 2)] + 2.0).norm() < 1e-14);
        assert!((cm[(2, 2)] - 4.0).norm() < 1e-13);
        let one = c_matrix(&params(2).with_hbar(c(0.0, 0.0))).unwrap();
        let want = Mat::identity(4, 4) - perm2(2);
        let mut mid = want.clone();
        for k in [0, 3] {
            for l in 0..4 {
                mid[(k, l)] = c(0.0, 0.0);
                mid[(l, k)] = c(0.0, 0.0);
            }
        }
        assert!(max_abs(&(one - mid)) < 1e-15);
    }

    // symmetric differences in ħ with one Richardson step
    fn hbar_expansion(k: Kind, p: ModelParams, z: C) -> (Mat, Mat) {
        let at = |h: f64| RMatrix::from_kind(k, p.with_hbar(c(h, 0.0))).unwrap().normalized(z).unwrap();
        let id = Mat::identity(p.m * p.m, p.m * p.m);
        let odd = |h: f64| (at(h) - at(-h)) / C::new(2.0 * h, 0.0);
        let even = |h: f64| (at(h) + at(-h) - &id * C::new(2.0, 0.0)) / C::new(2.0 * h * h, 0.0);
        let (h1, h2) = (1e-3, 5e-4);
        let r = (odd(h2) * C::new(4.0, 0.0) - odd(h1)) / C::new(3.0, 0.0);
        let m = (even(h2) * C::new(4.0, 0.0) - even(h1)) / C::new(3.0, 0.0);
        (r, m)
    }

    #[test]
    fn classical_matches_hbar_expansion() {
        let z = c(0.27, 0.05);
        for m in 1..=3 {
            for k in Kind::all(c(0.6, 0.2)) {
                let p = ModelParams::new(c(0.1, 0.9), c(0.1, 0.0), c(0.0, 0.0), m, 3).unwrap();
                let Ok(r) = RMatrix::from_kind(k, p) else { continue };
                let cl = r.classical(z).unwrap();
                let (ro, mo) = hbar_expansion(k, p, z);
                assert!(max_abs(&(&cl.r - ro)) < 1e-7, "r {k:?} M={m}");
                assert!(max_abs(&(&cl.m - mo)) < 1e-5, "m {k:?} M={m}");
                let (er, em) = classical_expansion_residual(k, p, z).unwrap();
                assert!(er < 1e-7 && em < 1e-5, "{k:?} M={m}: {er} {em}");
                let hz = 1e-5;
                let zp = r.classical(z + hz).unwrap();
                let zm = r.classical(z - hz).unwrap();
                let s = C::new(2.0 * hz, 0.0);
                assert!(max_abs(&(&cl.dr - (&zp.r - &zm.r) / s)) < 1e-8 * max_abs(&cl.dr).max(1.0), "dr {k:?} M={m}");
                assert!(max_abs(&(&cl.dm - (&zp.m - &zm.m) / s)) < 1e-8 * max_abs(&cl.dm).max(1.0), "dm {k:?} M={m}");
            }
        }
    }

    #[test]
    fn elliptic_dr_closed_form() {
        let p = params(3);
        let r = RMatrix::from_kind(Kind::EllipticBB, p).unwrap();
        let e = Elliptic::new(p.tau).unwrap();
        let z = c(0.31, -0.07);
        let mut want = Mat::identity(9, 9) * (e.e2(z).unwrap() * (2.0 / 3.0));
        for a1 in 0..3i64 {
            for a2 in 0..3i64 {
                if a1 == 0 && a2 == 0 {
                    continue;
                }
                let om = e.omega(a1, a2, 3);
                let f = e.phi_weighted(a1, a2, 3, z, om).unwrap()
                    * (2.0 * PI * ii() * a2 as f64 / 3.0 + e.e1(z + om).unwrap() - e.e1(z).unwrap());
                want += tt_alpha(a1, a2, 3) * (f / 3.0);
            }
        }
        assert!(max_abs(&(r.classical(z).unwrap().dr - want)) < 1e-12);
    }

    #[test]
    fn eight_vertex_classical_derivatives() {
        let p = params(2);
        let e = Elliptic::new(p.tau).unwrap();
        let z = c(0.21, 0.04);
        let ez = (PI * ii() * z).exp();
        let om = [c(0.5, 0.0), p.tau / 2.0, (1.0 + p.tau) / 2.0];
        let w = [c(1.0, 0.0), ez, ez];
        let ph = |k: usize, z: C| {
            let ez = (PI * ii() * z).exp();
            let w = [c(1.0, 0.0), ez, ez];
            w[k] * e.phi(z, om[k]).unwrap()
        };
        for k in 0..3 {
            let h = 1e-5;
            let fd = (ph(k, z + h) - ph(k, z - h)) / (2.0 * h);
            let other = ph((k + 1) % 3, z) * ph((k + 2) % 3, z);
            assert!((fd + other).norm() < 1e-8 * other.norm().max(1.0), "{k} {}", w[k]);
        }
    }

    #[test]
    fn parity_and_cybe() {
        for (k, m) in [(Kind::EllipticBB, 2), (Kind::EllipticBB, 3), (Kind::ZnInvariant, 3), (Kind::UqXXZ, 3), (Kind::SevenVertex(c(0.5, 0.0)), 2)] {
            let r = RMatrix::from_kind(k, params(m)).unwrap();
            let z = c(0.3, 0.02);
            let a = r.classical(z).unwrap();
            let b = r.classical(-z).unwrap();
            assert!(max_abs(&(&a.r + flip(&b.r, m))) < 1e-10, "{k:?}");
            assert!(max_abs(&(&a.dr - flip(&b.dr, m))) < 1e-10, "{k:?}");
            if k.is_elliptic() || matches!(k, Kind::ZnInvariant | Kind::UqXXZ) {
                assert!(max_abs(&(&a.m - flip(&b.m, m))) < 1e-10, "{k:?}");
            }
            let sp = Space::new(3, m);
            let z = [c(0.11, 0.03), c(0.47, -0.02), c(0.79, 0.05)];
            let r12 = sp.embed(&r.classical(z[0] - z[1]).unwrap().r, 1, 2).unwrap();
            let r13 = sp.embed(&r.classical(z[0] - z[2]).unwrap().r, 1, 3).unwrap();
            let r23 = sp.embed(&r.classical(z[1] - z[2]).unwrap().r, 2, 3).unwrap();
            use crate::tensor::commutator as cm;
            let res = cm(&r12, &r23) + cm(&r12, &r13) + cm(&r13, &r23);
            assert!(max_abs(&res) < 1e-11 * max_abs(&r12).max(1.0).powi(2), "{k:?}");
        }
    }

    #[test]
    fn skew_symmetry_elliptic() {
        let p = params(3);
        let a = RMatrix::from_kind(Kind::EllipticBB, p).unwrap();
        let b = RMatrix::from_kind(Kind::EllipticBB, p.with_hbar(-p.hbar)).unwrap();
        let z = c(0.29, 0.06);
        assert!(max_abs(&(b.build(-z).unwrap() + flip(&a.build(z).unwrap(), 3))) < 1e-12);
    }
}
