//! Matrix-valued difference operators Σ_μ C_μ(z) p^μ with p_i: z_i -> z_i - η,
//! and the spin Ruijsenaars-Macdonald family built from normalized R-matrices.

use crate::error::{Error, Result};
use crate::rmat::RMatrix;
use crate::rng::Sampler;
use crate::special_fn::Kernel;
use crate::tensor::{max_abs, Mat, Space};
use nalgebra::DVector;
use num_complex::Complex64 as C;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Number of η-shifts applied to each coordinate.
pub type ShiftIndex = Vec<u32>;

/// Coefficient evaluator z -> matrix.
pub type Coef = Arc<dyn Fn(&[C]) -> Result<Mat> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Macdonald,
    Ruijsenaars,
}

impl std::str::FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Form> {
        match s {
            "macdonald" => Ok(Form::Macdonald),
            "ruijsenaars" => Ok(Form::Ruijsenaars),
            _ => Err(Error::InvalidParams(format!("unknown form '{s}'"))),
        }
    }
}

/// All k-subsets of 1..=n, increasing.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, n, k, &mut Vec::new(), &mut out);
    out
}

fn indicator(n: usize, set: &[usize]) -> ShiftIndex {
    let mut mu = vec![0; n];
    for &i in set {
        mu[i - 1] = 1;
    }
    mu
}

/// z - η·μ
pub fn shifted(z: &[C], eta: C, mu: &[u32]) -> Vec<C> {
    z.iter().zip(mu).map(|(x, &k)| x - eta * k as f64).collect()
}

#[derive(Clone)]
pub struct DifferenceOperator {
    pub space: Space,
    pub eta: C,
    terms: BTreeMap<ShiftIndex, Vec<Coef>>,
}

impl DifferenceOperator {
    pub fn new(space: Space, eta: C) -> Self {
        DifferenceOperator { space, eta, terms: BTreeMap::new() }
    }

    pub fn identity(space: Space, eta: C) -> Self {
        let mut d = Self::new(space, eta);
        let id = space.identity();
        d.push(vec![0; space.n], Arc::new(move |_| Ok(id.clone())));
        d
    }

    pub fn push(&mut self, mu: ShiftIndex, c: Coef) {
        self.terms.entry(mu).or_default().push(c);
    }

    pub fn shifts(&self) -> impl Iterator<Item = &ShiftIndex> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Summed coefficient at shift μ (zero if absent).
    pub fn coefficient(&self, mu: &[u32], z: &[C]) -> Result<Mat> {
        let d = self.space.dim();
        let mut out = Mat::zeros(d, d);
        if let Some(cs) = self.terms.get(mu) {
            for c in cs {
                out += c(z)?;
            }
        }
        Ok(out)
    }

    /// Σ_μ C_μ(z) v: shifts act trivially on constants.
    pub fn apply_to_constant(&self, v: &DVector<C>, z: &[C]) -> Result<DVector<C>> {
        let mut out = DVector::zeros(v.len());
        for mu in self.terms.keys() {
            out += self.coefficient(mu, z)? * v;
        }
        Ok(out)
    }
}

/// Normal-ordered product: (AB)_{μ+ν}(z) = Σ A_μ(z) B_ν(z - ημ).
pub fn compose(a: &DifferenceOperator, b: &DifferenceOperator) -> DifferenceOperator {
    let mut out = DifferenceOperator::new(a.space, a.eta);
    let eta = a.eta;
    for (mu, fa) in &a.terms {
        for (nu, fb) in &b.terms {
            let key: ShiftIndex = mu.iter().zip(nu).map(|(x, y)| x + y).collect();
            for ca in fa {
                for cb in fb {
                    let (ca, cb, mu) = (ca.clone(), cb.clone(), mu.clone());
                    out.push(key.clone(), Arc::new(move |z: &[C]| Ok(ca(z)? * cb(&shifted(z, eta, &mu))?)));
                }
            }
        }
    }
    out
}

/// Per-sample scale-free residual of the commutator, maximized over total shifts.
pub fn commutator_residual(a: &DifferenceOperator, b: &DifferenceOperator, samples: &[Vec<C>]) -> Result<Vec<f64>> {
    let ab = compose(a, b);
    let ba = compose(b, a);
    let mut keys: Vec<ShiftIndex> = ab.shifts().cloned().collect();
    keys.extend(ba.shifts().cloned());
    keys.sort();
    keys.dedup();
    let mut out = Vec::with_capacity(samples.len());
    for z in samples {
        let mut scale = 0.0f64;
        let mut worst = 0.0f64;
        for k in &keys {
            let x = ab.coefficient(k, z)?;
            let y = ba.coefficient(k, z)?;
            scale = scale.max(max_abs(&x));
            worst = worst.max(max_abs(&(x - y)));
        }
        out.push(if scale > 0.0 { worst / scale } else { worst });
    }
    Ok(out)
}

/// Pairwise differences and their ±η, ±ħ translates stay off the poles.
pub fn sample_points(n: usize, count: usize, seed: u64, kernel: &Kernel, eta: C, hbar: C) -> Vec<Vec<C>> {
    let mut s = Sampler::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<C> = (1..=n).map(|i| C::new(i as f64 / n as f64 + s.uniform(-0.1, 0.1), s.uniform(-0.05, 0.05))).collect();
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = z[i] - z[j];
                for sh in [C::new(0.0, 0.0), eta, -eta, hbar, -hbar] {
                    if kernel.guard(d + sh, "difference").is_err() {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok {
            out.push(z);
        }
    }
    out
}

/// One R̄_{ab}(z_a - z_b) factor in an ordered product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub a: usize,
    pub b: usize,
}

/// Spin operators for one R-matrix family on N sites.
#[derive(Clone)]
pub struct SpinModel {
    pub r: RMatrix,
    pub space: Space,
    pub eta: C,
    gauge: Option<(Mat, Mat)>,
}

impl SpinModel {
    pub fn new(r: RMatrix) -> Self {
        let p = r.spec.params;
        SpinModel { space: Space::new(p.n, p.m), eta: p.eta, r, gauge: None }
    }

    /// Conjugate every R̄ by G⊗G.
    pub fn with_gauge(mut self, g: &Mat) -> Result<Self> {
        let gi = g.clone().try_inverse().ok_or_else(|| Error::InvalidParams("gauge matrix is singular".into()))?;
        self.gauge = Some((g.kronecker(g), gi.kronecker(&gi)));
        Ok(self)
    }

    pub fn kernel(&self) -> Kernel {
        self.r.kernel()
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    fn gauged(&self, x: Mat) -> Mat {
        match &self.gauge {
            Some((g, gi)) => g * x * gi,
            None => x,
        }
    }

    /// R̄ and F̄ at z.
    pub fn rbar(&self, z: C) -> Result<(Mat, Mat)> {
        let d = self.r.normalized_dual(z)?;
        Ok((self.gauged(d.v), self.gauged(d.d)))
    }

    /// Π_{i∈I, j∉I} φ(z_j - z_i), or φ(z_i - z_j) when primed.
    pub fn coeff_a(&self, set: &[usize], z: &[C], primed: bool) -> Result<C> {
        let k = self.kernel();
        let h = self.r.hbar();
        let mut p = C::new(1.0, 0.0);
        for &i in set {
            for j in 1..=self.n() {
                if set.contains(&j) {
                    continue;
                }
                let x = if primed { z[i - 1] - z[j - 1] } else { z[j - 1] - z[i - 1] };
                p *= k.phi(x, h)?;
            }
        }
        Ok(p)
    }

    /// Per-pair principal square roots of the same product.
    pub fn coeff_a_sqrt(&self, set: &[usize], z: &[C], primed: bool) -> Result<C> {
        let k = self.kernel();
        let h = self.r.hbar();
        let mut p = C::new(1.0, 0.0);
        for &i in set {
            for j in 1..=self.n() {
                if set.contains(&j) {
                    continue;
                }
                let x = if primed { z[i - 1] - z[j - 1] } else { z[j - 1] - z[i - 1] };
                let f = k.phi(x, h)?;
                if f.re <= 0.0 {
                    return Err(Error::BranchCut(format!("phi({x}) = {f} has non-positive real part")));
                }
                p *= f.sqrt();
            }
        }
        Ok(p)
    }

    /// Factor list of 𝐑_I, left to right.
    pub fn ri_factors(set: &[usize]) -> Vec<Factor> {
        let mut out = Vec::new();
        for &i in set {
            for j in (1..i).rev() {
                if !set.contains(&j) {
                    out.push(Factor { a: j, b: i });
                }
            }
        }
        out
    }

    /// Factor list of the trailing chain (the inverse of 𝐑_I), left to right.
    pub fn chain_factors(set: &[usize]) -> Vec<Factor> {
        let mut out = Vec::new();
        for &i in set.iter().rev() {
            for j in 1..i {
                if !set.contains(&j) {
                    out.push(Factor { a: i, b: j });
                }
            }
        }
        out
    }

    /// Ordered product of R̄ factors.
    pub fn product(&self, fs: &[Factor], z: &[C]) -> Result<Mat> {
        let mut acc = self.space.identity();
        for f in fs {
            let (r, _) = self.rbar(z[f.a - 1] - z[f.b - 1])?;
            acc = self.space.rmul2(&acc, &r, f.a, f.b)?;
        }
        Ok(acc)
    }

    /// Σ_p (product with factor p replaced by its z-derivative F̄).
    pub fn product_deriv(&self, fs: &[Factor], z: &[C]) -> Result<Mat> {
        let mut v = self.space.identity();
        let d = self.space.dim();
        let mut acc = Mat::zeros(d, d);
        for f in fs {
            let (r, dr) = self.rbar(z[f.a - 1] - z[f.b - 1])?;
            acc = self.space.rmul2(&acc, &r, f.a, f.b)? + self.space.rmul2(&v, &dr, f.a, f.b)?;
            v = self.space.rmul2(&v, &r, f.a, f.b)?;
        }
        Ok(acc)
    }

    pub fn build_ri(&self, set: &[usize], z: &[C]) -> Result<Mat> {
        self.product(&Self::ri_factors(set), z)
    }

    pub fn chain(&self, set: &[usize], z: &[C]) -> Result<Mat> {
        self.product(&Self::chain_factors(set), z)
    }

    /// Coefficient of p_I evaluated at z (shift normal-ordered to the right).
    pub fn coefficient(&self, set: &[usize], z: &[C], form: Form) -> Result<Mat> {
        let zs = shifted(z, self.eta, &indicator(self.n(), set));
        let core = self.build_ri(set, z)? * self.chain(set, &zs)?;
        Ok(match form {
            Form::Macdonald => core * self.coeff_a(set, z, false)?,
            Form::Ruijsenaars => core * (self.coeff_a_sqrt(set, z, false)? * self.coeff_a_sqrt(set, &zs, true)?),
        })
    }

    /// Scalar part of the same coefficient times Id.
    pub fn scalar_coefficient(&self, set: &[usize], z: &[C], form: Form) -> Result<C> {
        let zs = shifted(z, self.eta, &indicator(self.n(), set));
        match form {
            Form::Macdonald => self.coeff_a(set, z, false),
            Form::Ruijsenaars => Ok(self.coeff_a_sqrt(set, z, false)? * self.coeff_a_sqrt(set, &zs, true)?),
        }
    }

    pub fn build_spin_dk(self: &Arc<Self>, k: usize, form: Form) -> Result<DifferenceOperator> {
        self.check_k(k)?;
        let mut d = DifferenceOperator::new(self.space, self.eta);
        for set in subsets(self.n(), k) {
            let me = self.clone();
            let s = set.clone();
            d.push(indicator(self.n(), &set), Arc::new(move |z: &[C]| me.coefficient(&s, z, form)));
        }
        Ok(d)
    }

    pub fn build_scalar_dk(self: &Arc<Self>, k: usize, form: Form) -> Result<DifferenceOperator> {
        self.check_k(k)?;
        let mut d = DifferenceOperator::new(self.space, self.eta);
        for set in subsets(self.n(), k) {
            let me = self.clone();
            let s = set.clone();
            let id = self.space.identity();
            d.push(indicator(self.n(), &set), Arc::new(move |z: &[C]| Ok(&id * me.scalar_coefficient(&s, z, form)?)));
        }
        Ok(d)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k < 1 || k > self.n() {
            return Err(Error::InvalidParams(format!("k={k} outside 1..={}", self.n())));
        }
        Ok(())
    }

    /// Σ_I A_I 𝐑_I Σ_p chain_p(F̄), everything at unshifted z. The Ruijsenaars
    /// form uses √A_I √A'_I as prefactor.
    pub fn htilde(&self, k: usize, z: &[C], form: Form) -> Result<Mat> {
        self.check_k(k)?;
        let d = self.space.dim();
        let mut out = Mat::zeros(d, d);
        for set in subsets(self.n(), k) {
            let pre = match form {
                Form::Macdonald => self.coeff_a(&set, z, false)?,
                Form::Ruijsenaars => self.coeff_a_sqrt(&set, z, false)? * self.coeff_a_sqrt(&set, z, true)?,
            };
            let cf = Self::chain_factors(&set);
            if cf.is_empty() {
                continue;
            }
            out += self.build_ri(&set, z)? * self.product_deriv(&cf, z)? * pre;
        }
        Ok(out)
    }
}
