//! Degenerations: the trigonometric q-deformed Haldane-Shastry chain in
//! multiplicative variables, elliptic-to-trigonometric spectra, and the
//! non-relativistic ħ → 0 Hamiltonians.

use crate::diffop::{subsets, SpinModel};
use crate::error::{Error, Result};
use crate::freeze::{equilibrium, normalized_h1, normalized_h2, Item};
use crate::rmat::{uq_mult, uq_mult_normalized, Classical, Kind, ModelParams, RMatrix};
use crate::special_fn::POLE_GUARD;
use crate::tensor::{commutator, flip, max_abs, rel_diff as rel, Mat, Space};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn ii() -> C {
    C::new(0.0, 1.0)
}

/// y_j = exp(2πij/N)
pub fn multiplicative_eq(n: usize) -> Vec<C> {
    (1..=n).map(|j| (2.0 * PI * ii() * j as f64 / n as f64).exp()).collect()
}

/// [n]_{√t}; `s` = √t.
pub fn qint(n: usize, s: C) -> Result<C> {
    let den = s - 1.0 / s;
    if den.norm() < POLE_GUARD {
        return Err(Error::DegenerateT(format!("sqrt t = {s}")));
    }
    Ok((s.powi(n as i32) - s.powi(-(n as i32))) / den)
}

/// q-binomial [n choose k] at q = √t.
pub fn qbinom(n: usize, k: usize, s: C) -> Result<C> {
    if k > n {
        return Ok(C::new(0.0, 0.0));
    }
    let mut v = C::new(1.0, 0.0);
    for j in 0..k {
        let d = qint(j + 1, s)?;
        if d.norm() < POLE_GUARD {
            return Err(Error::DegenerateT(format!("[{}] vanishes at sqrt t = {s}", j + 1)));
        }
        v *= qint(n - j, s)? / d;
    }
    Ok(v)
}

/// Closed form for Σ_{|I|=k, I∋l} A_I at the multiplicative equilibrium,
/// (2πi/(t^{-1/2} - t^{1/2}))^{k(N-k)} (k/N) [N choose k]. `flip_base` uses
/// (t^{1/2} - t^{-1/2}) in the base instead.
pub fn coefficient_sum_closed(n: usize, k: usize, s: C, flip_base: bool) -> Result<C> {
    let d = if flip_base { s - 1.0 / s } else { 1.0 / s - s };
    if d.norm() < POLE_GUARD {
        return Err(Error::DegenerateT(format!("sqrt t = {s}")));
    }
    Ok((2.0 * PI * ii() / d).powi((k * (n - k)) as i32) * (k as f64 / n as f64) * qbinom(n, k, s)?)
}

/// a(u) = 2πi (ut - 1)/((u - 1)(t - 1)), t = s².
fn a_mult(u: C, s: C) -> Result<C> {
    let t = s * s;
    let den = (u - 1.0) * (t - 1.0);
    if den.norm() < POLE_GUARD {
        return Err(Error::DegenerateT(format!("u={u}, t={t}")));
    }
    Ok(2.0 * PI * ii() * (u * t - 1.0) / den)
}

/// Brute-force Σ_{|I|=k, I∋l} Π_{i∈I, j∉I} a(y_j/y_i), one value per l.
pub fn coefficient_sums(n: usize, k: usize, s: C) -> Result<Vec<C>> {
    let y = multiplicative_eq(n);
    let mut out = vec![C::new(0.0, 0.0); n];
    for set in subsets(n, k) {
        let mut p = C::new(1.0, 0.0);
        for &i in &set {
            for j in (1..=n).filter(|j| !set.contains(j)) {
                p *= a_mult(y[j - 1] / y[i - 1], s)?;
            }
        }
        for &l in &set {
            out[l - 1] += p;
        }
    }
    Ok(out)
}

/// Largest relative deviation of the brute-force sums from the closed form.
pub fn coefficient_sum_check(n: usize, k: usize, s: C, flip_base: bool) -> Result<f64> {
    let want = coefficient_sum_closed(n, k, s, flip_base)?;
    let got = coefficient_sums(n, k, s)?;
    Ok(got.iter().map(|g| (g - want).norm() / want.norm().max(1.0)).fold(0.0, f64::max))
}

/// The M = 2 constant matrix with middle block (1, -√t; -√t, t).
pub fn c_mat(s: C) -> Mat {
    let mut c = Mat::zeros(4, 4);
    c[(1, 1)] = C::new(1.0, 0.0);
    c[(1, 2)] = -s;
    c[(2, 1)] = -s;
    c[(2, 2)] = s * s;
    c
}

/// R̄_12(1/u) u∂_u R̄_21(u) - f(u) C, where f(u) = (1-t)u/((t-u)(tu-1)) and C
/// is C_12 or, with `swap`, C_21. Relative max-entry residual.
pub fn proportionality_residual(u: C, s: C, swap: bool) -> Result<f64> {
    let t = s * s;
    let r_inv = uq_mult_normalized(1.0 / u, s, 2)?;
    // u d/du by complex step on log u
    let h = 1e-4;
    let d = |w: C| -> Result<Mat> { Ok(flip(&uq_mult_normalized(u * w.exp(), s, 2)?, 2)) };
    let e = C::new(8.0, 0.0);
    let du = (d(C::new(h, 0.0))? * e - d(C::new(-h, 0.0))? * e - d(C::new(2.0 * h, 0.0))? + d(C::new(-2.0 * h, 0.0))?)
        / C::new(12.0 * h, 0.0);
    let lhs = r_inv * du;
    let den = (t - u) * (t * u - 1.0);
    if den.norm() < POLE_GUARD {
        return Err(Error::DegenerateT(format!("u={u}, t={t}")));
    }
    let c = if swap { flip(&c_mat(s), 2) } else { c_mat(s) };
    let rhs = c * ((1.0 - t) * u / den);
    Ok(rel(&lhs, &rhs))
}

/// Same identity through the additive derivative, exact up to rounding.
pub fn proportionality_residual_exact(z: C, hbar: C, swap: bool) -> Result<f64> {
    let p = ModelParams::new(C::new(0.0, 1.0), hbar, C::new(0.0, 0.0), 2, 2)?;
    let r = RMatrix::from_kind(Kind::UqXXZ, p)?;
    let u = (2.0 * PI * ii() * z).exp();
    let (s, t) = (p.sqrt_t(), p.t());
    let lhs = r.normalized(-z)? * flip(&r.normalized_dual(z)?.d, 2) / (2.0 * PI * ii());
    let den = (t - u) * (t * u - 1.0);
    if den.norm() < POLE_GUARD {
        return Err(Error::DegenerateT(format!("u={u}, t={t}")));
    }
    let c = if swap { flip(&c_mat(s), 2) } else { c_mat(s) };
    Ok(rel(&lhs, &(c * ((1.0 - t) * u / den))))
}

/// Orientation of the constant insertion in the double chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum COrient {
    /// C acting with its first factor on site i (the later site).
    Ik,
    /// C acting with its first factor on site k.
    Ki,
}

/// Uglov-Lamers first Hamiltonian (M = 2) at the multiplicative equilibrium:
/// 2πi(1-t) Σ_{k<i} y_i y_k/((t y_k - y_i)(t y_i - y_k)) ×
/// R̄_{i-1,i}..R̄_{k+1,i} C R̄_{i,k+1}..R̄_{i,i-1}.
pub fn uglov_lamers_h1(n: usize, s: C, orient: COrient) -> Result<Mat> {
    let t = s * s;
    let y = multiplicative_eq(n);
    let sp = Space::new(n, 2);
    let c = c_mat(s);
    let mut out = Mat::zeros(sp.dim(), sp.dim());
    for i in 1..=n {
        for k in 1..i {
            let (yi, yk) = (y[i - 1], y[k - 1]);
            let den = (t * yk - yi) * (t * yi - yk);
            if den.norm() < POLE_GUARD {
                return Err(Error::DegenerateT(format!("t y_{k} = y_{i} or t y_{i} = y_{k}")));
            }
            let coef = 2.0 * PI * ii() * (1.0 - t) * yi * yk / den;
            let mut acc = sp.identity();
            for j in (k + 1..i).rev() {
                acc = sp.rmul2(&acc, &uq_mult_normalized(y[j - 1] / yi, s, 2)?, j, i)?;
            }
            acc = match orient {
                COrient::Ik => sp.rmul2(&acc, &c, i, k)?,
                COrient::Ki => sp.rmul2(&acc, &c, k, i)?,
            };
            for j in k + 1..i {
                acc = sp.rmul2(&acc, &uq_mult_normalized(yi / y[j - 1], s, 2)?, i, j)?;
            }
            out += acc * coef;
        }
    }
    Ok(out)
}

/// 2πi Σ_{k<i} -y_i y_k/(y_k - y_i)² (1 - P_ik).
pub fn haldane_shastry(n: usize, m: usize) -> Result<Mat> {
    let y = multiplicative_eq(n);
    let sp = Space::new(n, m);
    let mut out = Mat::zeros(sp.dim(), sp.dim());
    for i in 1..=n {
        for k in 1..i {
            let (yi, yk) = (y[i - 1], y[k - 1]);
            let w = -yi * yk / ((yk - yi) * (yk - yi));
            out += (sp.identity() - sp.perm(i, k)?) * (2.0 * PI * ii() * w);
        }
    }
    Ok(out)
}

/// 𝐇1 of the Uglov-Lamers chain divided by (1-t), t = 1 + δ.
pub fn hs_ratio(n: usize, delta: f64, orient: COrient) -> Result<Mat> {
    let t = C::new(1.0 + delta, 0.0);
    Ok(uglov_lamers_h1(n, t.sqrt(), orient)? / (1.0 - t))
}

/// Relative distance of 𝐇1/(1-t) from the permutation-form limit at t = 1 + δ.
pub fn hs_limit_error(n: usize, delta: f64, orient: COrient) -> Result<f64> {
    Ok(rel(&hs_ratio(n, delta, orient)?, &haldane_shastry(n, 2)?))
}

/// Hungarian assignment on a square cost matrix; returns the column for
/// each row.
pub fn assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    let (mut p, mut way) = (vec![0usize; n + 1], vec![0usize; n + 1]);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Eigenvalues via complex Schur form, sorted lexicographically.
pub fn eigenvalues(h: &Mat) -> Result<Vec<C>> {
    let s = h
        .clone()
        .try_schur(1e-14, 10_000)
        .ok_or_else(|| Error::NonConvergentEigensolve(format!("{}x{}", h.nrows(), h.ncols())))?;
    let (_, t) = s.unpack();
    let mut ev: Vec<C> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Optimal matching distance max|λ - μ| / max(1, spectral radius).
pub fn spectral_distance(a: &[C], b: &[C]) -> f64 {
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let m = assignment(&cost);
    let radius = a.iter().chain(b).fold(1.0f64, |r, x| r.max(x.norm()));
    a.iter().enumerate().map(|(i, x)| (x - b[m[i]]).norm()).fold(0.0, f64::max) / radius
}

/// Per-k spectral distance between H_k from the elliptic family at
/// τ = τ_re + 20i and H_k from a trigonometric kind, same ħ.
pub fn elliptic_to_trig_spectrum_check(params: ModelParams, kind: Kind) -> Result<Vec<f64>> {
    let ell = params.with_tau(C::new(params.tau.re, 20.0));
    let a = SpinModel::new(RMatrix::from_kind(Kind::EllipticBB, ell)?);
    let b = SpinModel::new(RMatrix::from_kind(kind, params)?);
    let x = equilibrium(params.n);
    let mut out = Vec::new();
    for k in 1..params.n {
        let ha = a.htilde(k, &x, crate::diffop::Form::Macdonald)?;
        let hb = b.htilde(k, &x, crate::diffop::Form::Macdonald)?;
        out.push(spectral_distance(&eigenvalues(&ha)?, &eigenvalues(&hb)?));
    }
    Ok(out)
}

/// Classical pieces embedded on N sites at x_j = j/N.
pub struct NonRel {
    pub space: Space,
    x: Vec<C>,
    r: RMatrix,
}

/// Embedded r̄, ∂r̄, m̄, ∂m̄ on sites (a, b) at x_a - x_b.
struct Pair {
    r: Mat,
    dr: Mat,
    dm: Mat,
}

impl NonRel {
    pub fn new(r: RMatrix) -> Self {
        let p = r.spec.params;
        NonRel { space: Space::new(p.n, p.m), x: equilibrium(p.n), r }
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    fn pair(&self, a: usize, b: usize) -> Result<Pair> {
        let Classical { r, dr, dm, .. } = self.r.classical(self.x[a - 1] - self.x[b - 1])?;
        let e = |op: &Mat| self.space.embed(op, a, b);
        Ok(Pair { r: e(&r)?, dr: e(&dr)?, dm: e(&dm)? })
    }

    fn zero(&self) -> Mat {
        Mat::zeros(self.space.dim(), self.space.dim())
    }

    /// ℋ2 = 𝐇1^{(1)} = Σ_{i>j} ∂r̄_ij
    pub fn h2(&self) -> Result<Mat> {
        let mut out = self.zero();
        for i in 1..=self.n() {
            for j in 1..i {
                out += self.pair(i, j)?.dr;
            }
        }
        Ok(out)
    }

    /// ℋ3 = Σ_{i<j<k} [r̄_ij + r̄_kj, ∂r̄_ki]
    pub fn h3(&self) -> Result<Mat> {
        let mut out = self.zero();
        for (i, j, k) in triples(self.n()) {
            let a = self.pair(i, j)?.r + self.pair(k, j)?.r;
            out += commutator(&a, &self.pair(k, i)?.dr);
        }
        Ok(out)
    }

    /// Σ_{i>j} (r̄_ji ∂r̄_ij + ∂m̄_ij)
    fn s_pair(&self) -> Result<Mat> {
        let mut out = self.zero();
        for i in 1..=self.n() {
            for j in 1..i {
                let p = self.pair(i, j)?;
                out += self.pair(j, i)?.r * &p.dr + p.dm;
            }
        }
        Ok(out)
    }

    /// Σ_{i<j<k} [r̄_ab, ∂r̄_ki] with (a, b) picked from (i, j, k).
    fn s_comm(&self, pick: fn(usize, usize, usize) -> (usize, usize)) -> Result<Mat> {
        let mut out = self.zero();
        for (i, j, k) in triples(self.n()) {
            let (a, b) = pick(i, j, k);
            out += commutator(&self.pair(a, b)?.r, &self.pair(k, i)?.dr);
        }
        Ok(out)
    }

    /// 𝐇1^{(2)}
    pub fn h1_2(&self) -> Result<Mat> {
        Ok(self.s_pair()? + self.s_comm(|_, j, k| (j, k))?)
    }

    /// 𝐇2^{(1)} = Σ_{i<k<l} (∂r̄_ki + ∂r̄_li + ∂r̄_lk)
    pub fn h2_1(&self) -> Result<Mat> {
        let mut out = self.zero();
        for (i, k, l) in triples(self.n()) {
            out += self.pair(k, i)?.dr + self.pair(l, i)?.dr + self.pair(l, k)?.dr;
        }
        Ok(out)
    }

    /// 𝐇2^{(2)}
    pub fn h2_2(&self) -> Result<Mat> {
        let n = self.n() as f64;
        Ok(self.s_pair()? * C::new(n - 2.0, 0.0)
            + self.s_comm(|_, j, k| (j, k))? * C::new(n - 3.0, 0.0)
            + self.s_comm(|i, j, _| (i, j))?)
    }

    /// Residuals of the ħ → 0 structure.
    pub fn expansion_check(&self) -> Result<Vec<Item>> {
        let n = self.n() as f64;
        let h2 = self.h2()?;
        let h3 = self.h3()?;
        let h11 = h2.clone();
        let h12 = self.h1_2()?;
        let h21 = self.h2_1()?;
        let h22 = self.h2_2()?;
        let d = &h22 - &h12 * C::new(n - 2.0, 0.0);
        let s = (max_abs(&h2) * max_abs(&d)).max(1.0);
        let s3 = (max_abs(&h2) * max_abs(&h3)).max(1.0);
        Ok(vec![
            Item { name: "H2(1) = (N-2) H1(1)".into(), residual: rel(&h21, &(&h11 * C::new(n - 2.0, 0.0))) },
            Item { name: "[H1(1), H2(2) - (N-2) H1(2)]".into(), residual: max_abs(&commutator(&h2, &d)) / s },
            Item { name: "[h2, h3]".into(), residual: max_abs(&commutator(&h2, &h3)) / s3 },
            Item { name: "h3 = H2(2) - (N-2) H1(2)".into(), residual: rel(&d, &h3) },
        ])
    }
}

fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// CYBE, parity and the differentiated-CYBE triple identity for the
/// classical r-matrix at random points; one residual each.
pub fn classical_identities(r: &RMatrix, points: &[(C, C)]) -> Result<Vec<Item>> {
    let m = r.m();
    let sp = Space::new(3, m);
    let (mut cybe, mut par, mut tri) = (0.0f64, 0.0f64, 0.0f64);
    for &(a, b) in points {
        let (x1, x2, x3) = (a, b, C::new(0.0, 0.0));
        let z = [x1, x2, x3];
        let cl = |i: usize, j: usize| -> Result<(Mat, Mat)> {
            let c = r.classical(z[i - 1] - z[j - 1])?;
            Ok((sp.embed(&c.r, i, j)?, sp.embed(&c.dr, i, j)?))
        };
        let (r12, _) = cl(1, 2)?;
        let (r13, _) = cl(1, 3)?;
        let (r23, _) = cl(2, 3)?;
        let lhs = commutator(&r12, &r13) + commutator(&r12, &r23) + commutator(&r13, &r23);
        let sc = (max_abs(&r12) * max_abs(&r13)).max(max_abs(&r23) * max_abs(&r13)).max(1.0);
        cybe = cybe.max(max_abs(&lhs) / sc);

        let p = r.classical(a)?;
        let q = r.classical(-a)?;
        let d1 = max_abs(&(&p.r + flip(&q.r, m))) / max_abs(&p.r).max(1.0);
        let d2 = max_abs(&(&p.m - flip(&q.m, m))) / max_abs(&p.m).max(1.0);
        let d3 = max_abs(&(&p.dr - flip(&q.dr, m))) / max_abs(&p.dr).max(1.0);
        par = par.max(d1).max(d2).max(d3);

        // [r̄_ki + r̄_kj, ∂r̄_ij] = [r̄_jk + r̄_ji, ∂r̄_ki] = [r̄_ij + r̄_ik, ∂r̄_jk]
        let (i, j, k) = (1, 2, 3);
        let t1 = commutator(&(cl(k, i)?.0 + cl(k, j)?.0), &cl(i, j)?.1);
        let t2 = commutator(&(cl(j, k)?.0 + cl(j, i)?.0), &cl(k, i)?.1);
        let t3 = commutator(&(cl(i, j)?.0 + cl(i, k)?.0), &cl(j, k)?.1);
        let s = max_abs(&t1).max(max_abs(&t2)).max(1.0);
        tri = tri.max(max_abs(&(&t1 - &t2)) / s).max(max_abs(&(&t2 - &t3)) / s);
    }
    Ok(vec![
        Item { name: "classical Yang-Baxter".into(), residual: cybe },
        Item { name: "parity of r, m, dr".into(), residual: par },
        Item { name: "triple commutator identity".into(), residual: tri },
    ])
}

/// Finite-ħ normalized Hamiltonians against the closed-form expansion:
/// 𝐇1/ħ → ℋ2 and ħ^{-3}𝐇2 → 𝐇2^{(1)}, Richardson over ħ ∈ {h0, h0/2}.
pub fn hbar_expansion_check(params: ModelParams, kind: Kind, h0: C) -> Result<Vec<Item>> {
    let nr = NonRel::new(RMatrix::from_kind(kind, params)?);
    let h1 = |h: C| -> Result<Mat> {
        let m = SpinModel::new(RMatrix::from_kind(kind, params.with_hbar(h))?);
        let x = equilibrium(params.n);
        Ok(normalized_h1(&m, &m.htilde(1, &x, crate::diffop::Form::Macdonald)?)? / h)
    };
    let h2 = |h: C| -> Result<Mat> {
        let m = SpinModel::new(RMatrix::from_kind(kind, params.with_hbar(h))?);
        Ok(normalized_h2(&m)? / (h * h * h))
    };
    let r1 = h1(h0 / 2.0)? * C::new(2.0, 0.0) - h1(h0)?;
    let mut out = vec![Item { name: "H1/hbar -> h2".into(), residual: rel(&r1, &nr.h2()?) }];
    if params.n >= 3 {
        let r2 = h2(h0 / 2.0)? * C::new(2.0, 0.0) - h2(h0)?;
        out.push(Item { name: "H2/hbar^3 -> H2(1)".into(), residual: rel(&r2, &nr.h2_1()?) });
    }
    Ok(out)
}

/// Second-order check: (𝐇1/ħ - ℋ2)/ħ → 𝐇1^{(2)}, Richardson over {h0, h0/2}.
pub fn second_order_check(params: ModelParams, kind: Kind, h0: C) -> Result<f64> {
    let nr = NonRel::new(RMatrix::from_kind(kind, params)?);
    let lead = nr.h2()?;
    let f = |h: C| -> Result<Mat> {
        let m = SpinModel::new(RMatrix::from_kind(kind, params.with_hbar(h))?);
        let x = equilibrium(params.n);
        let b = normalized_h1(&m, &m.htilde(1, &x, crate::diffop::Form::Macdonald)?)?;
        Ok((b / h - &lead) / h)
    };
    let r = f(h0 / 2.0)? * C::new(2.0, 0.0) - f(h0)?;
    Ok(rel(&r, &nr.h1_2()?))
}

/// σ-form 7-vertex Hamiltonian on N sites at x_j = j/N.
pub fn seven_vertex_sigma(n: usize, c7: C) -> Result<Mat> {
    let sp = Space::new(n, 2);
    let x = equilibrium(n);
    let o = C::new(0.0, 0.0);
    let l = C::new(1.0, 0.0);
    let s1 = Mat::from_row_slice(2, 2, &[o, l, l, o]);
    let s2 = Mat::from_row_slice(2, 2, &[o, -ii(), ii(), o]);
    let s3 = Mat::from_row_slice(2, 2, &[l, o, o, -l]);
    let sm = Mat::from_row_slice(2, 2, &[o, o, l, o]);
    let mut out = Mat::zeros(sp.dim(), sp.dim());
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let d = x[i - 1] - x[j - 1];
            let (sn, cs) = ((PI * d).sin(), (PI * d).cos());
            let a = (s1.kronecker(&s1) + s2.kronecker(&s2)) * cs + s3.kronecker(&s3);
            let term = a / (sn * sn) - sm.kronecker(&sm) * (c7 / PI * cs);
            out += sp.identity() * (PI * PI / (2.0 * sn * sn)) - sp.embed(&term, i, j)? * C::new(PI * PI / 2.0, 0.0);
        }
    }
    Ok(out)
}

/// Least-squares (α, β) with target ≈ α a + β Id, and the relative residual.
pub fn fit_affine(target: &Mat, a: &Mat) -> (C, C, f64) {
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let dot = |x: &Mat, y: &Mat| x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum::<C>();
    let (aa, ai, ii_) = (dot(a, a), dot(a, &id), dot(&id, &id));
    let (at, it) = (dot(a, target), dot(&id, target));
    let det = aa * ii_ - ai.conj() * ai;
    let alpha = (at * ii_ - ai * it) / det;
    let beta = (aa * it - ai.conj() * at) / det;
    let res = a * alpha + id * beta;
    (alpha, beta, rel(&res, target))
}

/// ℋ2 from the 7-vertex classical r-matrix against the σ form.
pub fn seven_vertex_fit(params: ModelParams, c7: C) -> Result<(C, C, f64)> {
    let nr = NonRel::new(RMatrix::from_kind(Kind::SevenVertex(c7), params)?);
    Ok(fit_affine(&nr.h2()?, &seven_vertex_sigma(params.n, c7)?))
}

/// Σ_{i<j} (1 - P_ij)/sin²(π(x_i - x_j)) at x_j = j/N.
pub fn hs_exchange(n: usize, m: usize) -> Result<Mat> {
    let sp = Space::new(n, m);
    let x = equilibrium(n);
    let mut out = Mat::zeros(sp.dim(), sp.dim());
    for i in 1..=n {
        for j in i + 1..=n {
            let s = (PI * (x[i - 1] - x[j - 1])).sin();
            out += (sp.identity() - sp.perm(i, j)?) / (s * s);
        }
    }
    Ok(out)
}

/// Product of embedded R-matrices on `sp`, listed as (a, b, argument).
fn chain_product(sp: &Space, m: usize, s: C, fs: &[(usize, usize, C)]) -> Result<Mat> {
    let mut acc = sp.identity();
    for &(a, b, w) in fs {
        acc = sp.rmul2(&acc, &uq_mult(w, s, m)?, a, b)?;
    }
    Ok(acc)
}

/// Two-sum identity for k = 1 with the unnormalized multiplicative U_q R-matrix;
/// R_ij = R_ij(u_i/u_j), R^-_ij = R_ij(u_i/(x u_j)). Relative residual.
pub fn k1_identity_residual(m: usize, u: &[C], x: C, s: C) -> Result<f64> {
    let n = u.len();
    let sp = Space::new(n, m);
    let plain = |i: usize, j: usize| (i, j, u[i - 1] / u[j - 1]);
    let minus = |i: usize, j: usize| (i, j, u[i - 1] / (x * u[j - 1]));
    let mut lhs = Mat::zeros(sp.dim(), sp.dim());
    let mut rhs = Mat::zeros(sp.dim(), sp.dim());
    for k in 1..=n {
        let mut a = Vec::new();
        a.extend((k + 1..=n).map(|i| plain(k, i)));
        a.extend((1..=n).rev().filter(|&j| j != k).map(|j| minus(j, k)));
        a.extend((1..k).map(|l| plain(k, l)));
        lhs += chain_product(&sp, m, s, &a)?;
        let mut b = Vec::new();
        b.extend((1..k).rev().map(|l| plain(l, k)));
        b.extend((1..=n).filter(|&j| j != k).map(|j| minus(k, j)));
        b.extend((k + 1..=n).rev().map(|i| plain(i, k)));
        rhs += chain_product(&sp, m, s, &b)?;
    }
    Ok(max_abs(&(&lhs - &rhs)) / max_abs(&lhs).max(max_abs(&rhs)).max(1.0))
}

/// Braid-chain identity at x = u_i/u_j, i < j.
pub fn braid_chain_residual(m: usize, u: &[C], i: usize, j: usize, s: C) -> Result<f64> {
    if !(i < j && j <= u.len()) {
        return Err(Error::IndexOutOfRange(format!("need i < j <= N, got ({i}, {j})")));
    }
    braid_chain_at(m, u, i, j, u[i - 1] / u[j - 1], s)
}

fn braid_chain_at(m: usize, u: &[C], i: usize, j: usize, x: C, s: C) -> Result<f64> {
    let sp = Space::new(u.len(), m);
    let minus = |a: usize, b: usize| (a, b, u[a - 1] / (x * u[b - 1]));
    let mid = (i, j, u[j - 1] / u[i - 1]);
    let left: Vec<_> = (i + 1..j).rev().map(|k| minus(k, j)).collect();
    let right: Vec<_> = (i + 1..j).map(|k| minus(i, k)).collect();
    let mut a = left.clone();
    a.push(mid);
    a.extend(right.iter().copied());
    let mut b = right;
    b.push(mid);
    b.extend(left);
    let l = chain_product(&sp, m, s, &a)?;
    let r = chain_product(&sp, m, s, &b)?;
    Ok(max_abs(&(&l - &r)) / max_abs(&l).max(1.0))
}

/// Max residual of the two-sum and braid-chain identities over random multiplicative points.
pub fn k1_identity_check(m: usize, n: usize, s: C, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = crate::rng::Sampler::new(seed);
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let u: Vec<C> = (0..n).map(|_| (2.0 * PI * ii() * rng.complex((0.0, 1.0), (-0.1, 0.1))).exp()).collect();
        let x = (2.0 * PI * ii() * rng.complex((0.0, 1.0), (-0.1, 0.1))).exp();
        w1 = w1.max(k1_identity_residual(m, &u, x, s)?);
        if n >= 2 {
            let i = 1 + (rng.unit() * (n - 1) as f64) as usize;
            let j = i + 1 + (rng.unit() * (n - i) as f64) as usize;
            w2 = w2.max(braid_chain_residual(m, &u, i, j.min(n), s)?);
        }
    }
    Ok((w1, w2))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::Form;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn params(m: usize, n: usize) -> ModelParams {
        ModelParams::new(c(0.0, 1.0), c(0.13, 0.04), c(0.0, 0.0), m, n).unwrap()
    }

    #[test]
    fn q_numbers() {
        assert!((qint(2, c(2.0, 0.0)).unwrap() - 2.5).norm() < 1e-15);
        let s = c(0.0, 1e-3).exp();
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for k in 0..=6 {
            let q = qbinom(6, k, s).unwrap();
            assert!((q - binom[k]).norm() < 1e-4 * binom[k], "k={k}");
        }
        assert!(matches!(qint(3, c(1.0, 0.0)), Err(Error::DegenerateT(_))));
    }

    #[test]
    fn coefficient_sums_are_q_binomials() {
        let s = params(2, 2).sqrt_t();
        for t in [s, c(0.3, 0.1).sqrt()] {
            for n in 2..=6 {
                for k in 1..n {
                    assert!(coefficient_sum_check(n, k, t, true).unwrap() < 1e-11, "n={n} k={k}");
                    // the other base differs exactly by (-1)^{k(N-k)}
                    let a = coefficient_sum_closed(n, k, t, false).unwrap();
                    let b = coefficient_sum_closed(n, k, t, true).unwrap();
                    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((a - b * sign).norm() < 1e-12 * a.norm());
                }
            }
        }
    }

    #[test]
    fn derivative_chain_is_constant_matrix() {
        for z in [c(0.31, 0.05), c(0.77, -0.1), c(0.05, 0.2)] {
            assert!(proportionality_residual_exact(z, c(0.13, 0.04), false).unwrap() < 1e-11);
            assert!(proportionality_residual_exact(z, c(0.13, 0.04), true).unwrap() > 1e-2);
            let u = (2.0 * PI * ii() * z).exp();
            assert!(proportionality_residual(u, params(2, 2).sqrt_t(), false).unwrap() < 1e-9);
        }
    }

    #[test]
    fn uglov_lamers_two_sites() {
        let s = params(2, 2).sqrt_t();
        let t = s * s;
        let h = uglov_lamers_h1(2, s, COrient::Ki).unwrap();
        let want = c_mat(s) * (2.0 * PI * ii() * (1.0 - t) / ((1.0 + t) * (1.0 + t)));
        assert!(max_abs(&(h - want)) < 1e-14);
    }

    #[test]
    fn uglov_lamers_is_frozen_h1() {
        for n in 2..=4 {
            let p = params(2, n);
            let m = SpinModel::new(RMatrix::from_kind(Kind::UqXXZ, p).unwrap());
            let b = normalized_h1(&m, &m.htilde(1, &equilibrium(n), Form::Macdonald).unwrap()).unwrap();
            assert!(rel(&uglov_lamers_h1(n, p.sqrt_t(), COrient::Ki).unwrap(), &b) < 1e-10, "n={n}");
            assert!(rel(&uglov_lamers_h1(n, p.sqrt_t(), COrient::Ik).unwrap(), &b) > 1e-2);
        }
    }

    #[test]
    fn degenerate_t() {
        // t y_1 = y_2 for N = 2 at t = -1
        assert!(matches!(uglov_lamers_h1(2, c(0.0, 1.0), COrient::Ki), Err(Error::DegenerateT(_))));
    }

    #[test]
    fn haldane_shastry_limit_is_linear() {
        for n in 2..=4 {
            let e4 = hs_limit_error(n, 1e-4, COrient::Ki).unwrap();
            let e5 = hs_limit_error(n, 1e-5, COrient::Ki).unwrap();
            assert!(e4 < 1e-3);
            assert!((e4 / e5 - 10.0).abs() < 0.1, "n={n}");
        }
    }

    #[test]
    fn hungarian() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
        let x = [c(1.0, 0.0), c(-2.0, 1.0), c(0.5, 0.5)];
        let y = [x[2], x[0], x[1]];
        assert_eq!(spectral_distance(&x, &y), 0.0);
    }

    #[test]
    fn trig_spectra_match_elliptic() {
        for d in elliptic_to_trig_spectrum_check(params(1, 3), Kind::ZnInvariant).unwrap() {
            assert!(d < 1e-10);
        }
        for d in elliptic_to_trig_spectrum_check(params(2, 3), Kind::SevenVertex(c(0.0, 0.0))).unwrap() {
            assert!(d < 1e-6);
        }
    }

    #[test]
    fn nonrel_structure() {
        for (kind, m) in [(Kind::EllipticBB, 2), (Kind::EllipticBB, 3), (Kind::NonStandard, 3)] {
            let nr = NonRel::new(RMatrix::from_kind(kind, params(m, 4)).unwrap());
            let it = nr.expansion_check().unwrap();
            assert!(it[0].residual < 1e-12);
            for i in &it[1..] {
                assert!(i.residual < 1e-9, "{kind:?} {i:?}");
            }
        }
        let nr = NonRel::new(RMatrix::from_kind(Kind::EllipticBB, params(2, 3)).unwrap());
        assert!(rel(&nr.h2_1().unwrap(), &nr.h2().unwrap()) < 1e-14);
    }

    #[test]
    fn classical_identity_suite() {
        let pts = [(c(0.21, 0.03), c(0.57, -0.02)), (c(0.4, -0.1), c(0.13, 0.2))];
        for kind in Kind::all(c(0.3, 0.1)) {
            let m = if kind.any_rank() { 3 } else { 2 };
            let r = RMatrix::from_kind(kind, params(m, 3)).unwrap();
            for i in classical_identities(&r, &pts).unwrap() {
                assert!(i.residual < 1e-10, "{kind:?} {i:?}");
            }
        }
    }

    #[test]
    fn small_hbar_limit() {
        let it = hbar_expansion_check(params(2, 4), Kind::EllipticBB, c(1e-3, 0.0)).unwrap();
        assert!(it[0].residual < 1e-5, "{it:?}");
        assert!(it[1].residual < 1e-4, "{it:?}");
        assert!(second_order_check(params(2, 3), Kind::EllipticBB, c(1e-3, 0.0)).unwrap() < 1e-4);
    }

    #[test]
    fn seven_vertex_sigma_form() {
        let (a, b, r) = seven_vertex_fit(params(2, 4), c(0.0, 0.0)).unwrap();
        assert!(r < 1e-12 && (a - 0.5).norm() < 1e-12 && b.norm() < 1e-11);
        // with c7 != 0 the σ form needs its c7 term doubled
        let c7 = c(0.5, 0.1);
        let nr = NonRel::new(RMatrix::from_kind(Kind::SevenVertex(c7), params(2, 4)).unwrap());
        let (a, _, r) = fit_affine(&nr.h2().unwrap(), &seven_vertex_sigma(4, c7 * 2.0).unwrap());
        assert!(r < 1e-12 && (a - 0.5).norm() < 1e-12);
        assert!(seven_vertex_fit(params(2, 4), c7).unwrap().2 > 1e-3);
    }

    #[test]
    fn uq_classical_is_isotropic_exchange() {
        let nr = NonRel::new(RMatrix::from_kind(Kind::UqXXZ, params(2, 4)).unwrap());
        let (a, b, r) = fit_affine(&nr.h2().unwrap(), &hs_exchange(4, 2).unwrap());
        assert!(r < 1e-12 && (a - PI * PI).norm() < 1e-10 && b.norm() < 1e-10);
    }

    #[test]
    fn k1_chain_identities() {
        let s = params(3, 3).sqrt_t();
        let (a, b) = k1_identity_check(3, 3, s, 20, 11).unwrap();
        assert!(a < 1e-9 && b < 1e-10);
        let (a, b) = k1_identity_check(1, 3, s, 5, 12).unwrap();
        assert!(a < 1e-12 && b < 1e-12);
        let u = [c(1.0, 0.0), (2.0 * PI * ii() * c(0.3, 0.02)).exp(), (2.0 * PI * ii() * c(0.71, -0.03)).exp()];
        assert!(braid_chain_residual(2, &u, 1, 3, s).unwrap() < 1e-12);
        assert!(braid_chain_at(2, &u, 1, 3, c(0.4, 0.9), s).unwrap() > 1e-3);
    }
}
