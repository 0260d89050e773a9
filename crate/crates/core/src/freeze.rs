//! Freezing: first η-order of the spin operators at the equidistant point
//! x_j = j/N, the classical velocities and forces there, and the identities
//! that make the resulting Hamiltonians commute.

pub mod golden;

use crate::diffop::{subsets, Form, SpinModel};
use crate::error::{Error, Result};
use crate::special_fn::Kernel;
use crate::tensor::{commutator, max_abs, Mat};
use nalgebra::DVector;
use num_complex::Complex64 as C;
use std::sync::Arc;

/// x_j = j/N, j = 1..N.
pub fn equilibrium(n: usize) -> Vec<C> {
    (1..=n).map(|j| C::new(j as f64 / n as f64, 0.0)).collect()
}

/// Scalar data at a configuration: kernel φ(·, ħ) and g, f built from E1.
#[derive(Clone, Copy, Debug)]
pub struct Scalars {
    pub kernel: Kernel,
    pub hbar: C,
}

impl Scalars {
    pub fn new(kernel: Kernel, hbar: C) -> Self {
        Scalars { kernel, hbar }
    }

    fn phi(&self, x: C) -> Result<C> {
        self.kernel.phi(x, self.hbar)
    }

    fn g(&self, x: C) -> Result<C> {
        self.kernel.g(x, self.hbar)
    }

    fn f(&self, x: C) -> Result<C> {
        self.kernel.f(x, self.hbar)
    }

    /// Π_{i∈I, j∉I} φ(z_j - z_i)
    pub fn a(&self, set: &[usize], z: &[C]) -> Result<C> {
        let mut p = C::new(1.0, 0.0);
        for &i in set {
            for j in 1..=z.len() {
                if !set.contains(&j) {
                    p *= self.phi(z[j - 1] - z[i - 1])?;
                }
            }
        }
        Ok(p)
    }

    /// Π_{i∈I, j∉I} √(φ(z_j - z_i) φ(z_i - z_j)), principal root per pair.
    pub fn a_sym(&self, set: &[usize], z: &[C]) -> Result<C> {
        let mut p = C::new(1.0, 0.0);
        for &i in set {
            for j in 1..=z.len() {
                if !set.contains(&j) {
                    let d = z[j - 1] - z[i - 1];
                    p *= (self.phi(d)? * self.phi(-d)?).sqrt();
                }
            }
        }
        Ok(p)
    }

    /// u^{k}_m for m = 1..N; primed uses the symmetric root product.
    pub fn velocities_u(&self, k: usize, z: &[C], primed: bool) -> Result<Vec<C>> {
        let n = z.len();
        let mut u = vec![C::new(0.0, 0.0); n];
        for set in subsets(n, k) {
            let a = if primed { self.a_sym(&set, z)? } else { self.a(&set, z)? };
            for &m in &set {
                u[m - 1] -= a;
            }
        }
        Ok(u)
    }

    /// w^{k}_m = ∂h_k/∂z_m at v = 0, valid at any z; primed form is the
    /// equilibrium expression with f.
    pub fn momenta_w(&self, k: usize, z: &[C], primed: bool) -> Result<Vec<C>> {
        let n = z.len();
        let mut w = vec![C::new(0.0, 0.0); n];
        let sets = subsets(n, k);
        if primed {
            let mut total = C::new(0.0, 0.0);
            for set in &sets {
                total += self.a_sym(set, z)?;
            }
            for m in 1..=n {
                let mut s = C::new(0.0, 0.0);
                for l in (1..=n).filter(|&l| l != m) {
                    s += self.f(z[m - 1] - z[l - 1])?;
                }
                w[m - 1] = total * s * 0.5;
            }
            return Ok(w);
        }
        for set in &sets {
            let a = self.a(set, z)?;
            for m in 1..=n {
                let mut s = C::new(0.0, 0.0);
                if set.contains(&m) {
                    for l in (1..=n).filter(|l| !set.contains(l)) {
                        s -= self.g(z[l - 1] - z[m - 1])?;
                    }
                } else {
                    for &l in set {
                        s += self.g(z[m - 1] - z[l - 1])?;
                    }
                }
                w[m - 1] += a * s;
            }
        }
        Ok(w)
    }
}

/// Named residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub name: String,
    pub residual: f64,
}

fn item(name: impl Into<String>, residual: f64) -> Item {
    Item { name: name.into(), residual }
}

/// Subset-shift equality of velocity sums, Σ_{l≠m} f_lm = 0, its weighted
/// version, and the ratio product over I×Iᶜ, all at x_j = j/N.
pub fn identity_suite(n: usize, s: &Scalars) -> Result<Vec<Item>> {
    let x = equilibrium(n);
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for k in 1..=n {
        let u = s.velocities_u(k, &x, false)?;
        let scale = u.iter().fold(1.0f64, |a, v| a.max(v.norm()));
        for a in &u {
            for b in &u {
                worst = worst.max((a - b).norm() / scale);
            }
        }
    }
    out.push(item("velocity-sum shift invariance", worst));

    let mut worst = 0.0f64;
    for m in 1..=n {
        let mut sum = C::new(0.0, 0.0);
        let mut scale = 1.0f64;
        for l in (1..=n).filter(|&l| l != m) {
            let f = s.f(x[l - 1] - x[m - 1])?;
            scale = scale.max(f.norm());
            sum += f;
        }
        worst = worst.max(sum.norm() / scale);
    }
    out.push(item("sum of f over l != m", worst));

    let mut worst = 0.0f64;
    for k in 1..=n {
        for m in 1..=n {
            let mut sum = C::new(0.0, 0.0);
            let mut scale = 1.0f64;
            for set in subsets(n, k).into_iter().filter(|s| s.contains(&m)) {
                let a = s.a(&set, &x)?;
                let mut fs = C::new(0.0, 0.0);
                for &l in set.iter().filter(|&&l| l != m) {
                    fs += s.f(x[l - 1] - x[m - 1])?;
                }
                scale = scale.max((a * fs).norm()).max(a.norm());
                sum += a * fs;
            }
            worst = worst.max(sum.norm() / scale);
        }
    }
    out.push(item("velocity-weighted sum of f", worst));

    let mut worst = 0.0f64;
    for k in 1..n {
        for set in subsets(n, k) {
            let mut p = C::new(1.0, 0.0);
            for &i in &set {
                for j in (1..=n).filter(|j| !set.contains(j)) {
                    let d = x[j - 1] - x[i - 1];
                    p *= s.phi(d)? / s.phi(-d)?;
                }
            }
            worst = worst.max((p - 1.0).norm());
        }
    }
    out.push(item("ratio product over I x complement", worst));
    Ok(out)
}

/// Velocity and force tables at equilibrium, rows k = 1..N.
#[derive(Clone, Debug)]
pub struct EquilibriumReport {
    pub u: Vec<Vec<C>>,
    pub w: Vec<Vec<C>>,
    pub u_primed: Vec<Vec<C>>,
    pub w_primed: Vec<Vec<C>>,
}

impl EquilibriumReport {
    /// Largest spread within a row of u, relative to max(1, |u|).
    pub fn u_spread(&self, primed: bool) -> f64 {
        let t = if primed { &self.u_primed } else { &self.u };
        t.iter()
            .map(|row| {
                let scale = row.iter().fold(1.0f64, |a, v| a.max(v.norm()));
                let mut s = 0.0f64;
                for a in row {
                    for b in row {
                        s = s.max((a - b).norm());
                    }
                }
                s / scale
            })
            .fold(0.0, f64::max)
    }

    /// Largest |w| relative to the matching row scale of u (at least 1).
    pub fn w_max(&self, primed: bool) -> f64 {
        let (u, w) = if primed { (&self.u_primed, &self.w_primed) } else { (&self.u, &self.w) };
        u.iter()
            .zip(w)
            .map(|(ur, wr)| {
                let scale = ur.iter().fold(1.0f64, |a, v| a.max(v.norm()));
                wr.iter().fold(0.0f64, |a, v| a.max(v.norm())) / scale
            })
            .fold(0.0, f64::max)
    }
}

pub fn classical_equilibrium_report(n: usize, s: &Scalars) -> Result<EquilibriumReport> {
    let x = equilibrium(n);
    let mut r = EquilibriumReport { u: vec![], w: vec![], u_primed: vec![], w_primed: vec![] };
    for k in 1..=n {
        r.u.push(s.velocities_u(k, &x, false)?);
        r.w.push(s.momenta_w(k, &x, false)?);
        r.u_primed.push(s.velocities_u(k, &x, true)?);
        r.w_primed.push(s.momenta_w(k, &x, true)?);
    }
    Ok(r)
}

/// Reject ħ within 1e-4 of an equilibrium spacing modulo the lattice.
pub fn check_hbar(model: &SpinModel) -> Result<()> {
    let n = model.n();
    let h = model.r.hbar();
    let k = model.kernel();
    for s in 0..n {
        let d = C::new(s as f64 / n as f64, 0.0);
        for x in [h - d, h + d] {
            let near = match k {
                Kernel::Elliptic(e) => crate::special_fn::lattice_distance(x, e.tau),
                Kernel::Trig => (x - x.re.round()).norm(),
            };
            if near < 1e-4 {
                return Err(Error::PoleProximity(format!("hbar={h} is within 1e-4 of spacing {}/{n}", s)));
            }
        }
    }
    Ok(())
}

/// H_k = H̃_k at equilibrium for k = 1..N-1.
pub fn build_hamiltonians(model: &SpinModel, form: Form) -> Result<Vec<Mat>> {
    check_hbar(model)?;
    let x = equilibrium(model.n());
    (1..model.n()).map(|k| model.htilde(k, &x, form)).collect()
}

/// 𝐇1 = -H1/u^{1}.
pub fn normalized_h1(model: &SpinModel, h1: &Mat) -> Result<Mat> {
    let s = Scalars::new(model.kernel(), model.r.hbar());
    let u = s.velocities_u(1, &equilibrium(model.n()), false)?[0];
    if u.norm() < 1e-300 || !u.is_finite() {
        return Err(Error::DivisionDegenerate(format!("u^1 = {u}")));
    }
    Ok(h1 * (-1.0 / u))
}

/// 𝐇2 = Σ_{m<l} (℘(ħ) - ℘(x_m - x_l))^{-1} 𝐑_I Σ_p chain_p(F̄), I = {m, l}.
pub fn normalized_h2(model: &SpinModel) -> Result<Mat> {
    check_hbar(model)?;
    let n = model.n();
    let x = equilibrium(n);
    let k = model.kernel();
    let wh = k.wp(model.r.hbar())?;
    let d = model.space.dim();
    let mut out = Mat::zeros(d, d);
    for set in subsets(n, 2) {
        let den = wh - k.wp(x[set[0] - 1] - x[set[1] - 1])?;
        if den.norm() < 1e-300 {
            return Err(Error::DivisionDegenerate(format!("wp(hbar) = wp(x_m - x_l) for {set:?}")));
        }
        let cf = SpinModel::chain_factors(&set);
        if cf.is_empty() {
            continue;
        }
        out += model.build_ri(&set, &x)? * model.product_deriv(&cf, &x)? / den;
    }
    Ok(out)
}

/// 𝐇_{N-1} = H_{N-1} / Π_{s=1}^{N-1} φ(s/N).
pub fn normalized_last(model: &SpinModel, h: &Mat) -> Result<Mat> {
    let n = model.n();
    let k = model.kernel();
    let mut p = C::new(1.0, 0.0);
    for s in 1..n {
        p *= k.phi(C::new(s as f64 / n as f64, 0.0), model.r.hbar())?;
    }
    if p.norm() < 1e-300 {
        return Err(Error::DivisionDegenerate("vanishing phi product".into()));
    }
    Ok(h / p)
}

/// max over pairs of |[H_i, H_j]| / max(|H_i||H_j|, 1), max-entry norms.
pub fn max_commutator(hs: &[Mat]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let s = (max_abs(&hs[i]) * max_abs(&hs[j])).max(1.0);
            worst = worst.max(max_abs(&commutator(&hs[i], &hs[j])) / s);
        }
    }
    worst
}

/// |H - H^†| / max(|H|, 1)
pub fn hermiticity_residual(h: &Mat) -> f64 {
    max_abs(&(h - h.adjoint())) / max_abs(h).max(1.0)
}

/// -[𝒟_k(η)v - D_k(η)v]/η for a constant vector v at z.
pub fn eta_quotient(model: &SpinModel, k: usize, form: Form, eta: f64, v: &DVector<C>, z: &[C]) -> Result<DVector<C>> {
    let mut sm = model.clone();
    sm.eta = C::new(eta, 0.0);
    let sm = Arc::new(sm);
    let a = sm.build_spin_dk(k, form)?.apply_to_constant(v, z)?;
    let b = sm.build_scalar_dk(k, form)?.apply_to_constant(v, z)?;
    Ok((a - b) * C::new(-1.0 / eta, 0.0))
}

/// Symmetrized quotient at ±η, Richardson over η ∈ {1e-3, 5e-4}.
pub fn eta_extract(model: &SpinModel, k: usize, form: Form, v: &DVector<C>, z: &[C]) -> Result<DVector<C>> {
    let cen = |t: f64| -> Result<DVector<C>> {
        Ok((eta_quotient(model, k, form, t, v, z)? + eta_quotient(model, k, form, -t, v, z)?) * C::new(0.5, 0.0))
    };
    Ok((cen(5e-4)? * C::new(4.0, 0.0) - cen(1e-3)?) * C::new(1.0 / 3.0, 0.0))
}

/// One-sided quotient with two-step Richardson, for comparison.
pub fn eta_extract_forward(model: &SpinModel, k: usize, form: Form, v: &DVector<C>, z: &[C]) -> Result<DVector<C>> {
    Ok(eta_quotient(model, k, form, 5e-4, v, z)? * C::new(2.0, 0.0) - eta_quotient(model, k, form, 1e-3, v, z)?)
}

/// General constructor against the literal term tables (N = 3, 4), relative
/// max-entry residual per operator.
pub fn golden_check(model: &SpinModel, form: Form) -> Result<Vec<Item>> {
    let n = model.n();
    let hs = build_hamiltonians(model, form)?;
    let mut out = Vec::new();
    for (target, table) in golden::tables(n) {
        let want = golden::evaluate(model, table)?;
        let (name, got) = match target {
            golden::Target::Plain(k) => (format!("H{k}"), hs[k - 1].clone()),
            golden::Target::Normalized(1) => ("bold H1".to_string(), normalized_h1(model, &hs[0])?),
            golden::Target::Normalized(2) => ("bold H2".to_string(), normalized_h2(model)?),
            golden::Target::Normalized(k) if k == n - 1 => (format!("bold H{k}"), normalized_last(model, &hs[k - 1])?),
            golden::Target::Normalized(k) => return Err(Error::InvalidParams(format!("no normalization for k={k}"))),
        };
        let r = max_abs(&(&got - &want)) / max_abs(&want).max(1.0);
        out.push(item(format!("N={n} {name}"), r));
    }
    Ok(out)
}
