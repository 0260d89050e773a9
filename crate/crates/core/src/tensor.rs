//! Dense operators on (C^M)^{⊗N}. Basis is lexicographic with site 1 slowest;
//! site labels in the public API are 1-based.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

pub type Mat = DMatrix<C>;

/// N sites of local dimension M.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Space {
    pub n: usize,
    pub m: usize,
}

impl Space {
    pub fn new(n: usize, m: usize) -> Self {
        Space { n, m }
    }

    pub fn dim(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Stride of 1-based site `i` in the flat index.
    pub fn stride(&self, i: usize) -> usize {
        self.m.pow((self.n - i) as u32)
    }

    pub fn identity(&self) -> Mat {
        Mat::identity(self.dim(), self.dim())
    }

    fn check(&self, i: usize, j: usize, op: &Mat) -> Result<()> {
        if i == 0 || j == 0 || i > self.n || j > self.n || i == j {
            return Err(Error::IndexOutOfRange(format!("sites ({i},{j}) with N={}", self.n)));
        }
        let d = self.m * self.m;
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::IncompatibleRank(format!(
                "two-site operator is {}x{}, expected {d}x{d}",
                op.nrows(),
                op.ncols()
            )));
        }
        Ok(())
    }

    /// Kronecker embedding of a two-site operator on sites i, j.
    pub fn embed(&self, op: &Mat, i: usize, j: usize) -> Result<Mat> {
        self.lmul2(op, i, j, &self.identity())
    }

    /// embed(op, i, j) * a, without forming the embedding.
    pub fn lmul2(&self, op: &Mat, i: usize, j: usize, a: &Mat) -> Result<Mat> {
        self.check(i, j, op)?;
        let m = self.m;
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut out = Mat::zeros(a.nrows(), a.ncols());
        for r in 0..self.dim() {
            let (x, y) = ((r / si) % m, (r / sj) % m);
            let base = r - x * si - y * sj;
            let row = x * m + y;
            for b in 0..m {
                for d in 0..m {
                    let w = op[(row, b * m + d)];
                    if w == C::new(0.0, 0.0) {
                        continue;
                    }
                    let src = base + b * si + d * sj;
                    for col in 0..a.ncols() {
                        out[(r, col)] += w * a[(src, col)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// a * embed(op, i, j).
    pub fn rmul2(&self, a: &Mat, op: &Mat, i: usize, j: usize) -> Result<Mat> {
        self.check(i, j, op)?;
        let m = self.m;
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut out = Mat::zeros(a.nrows(), a.ncols());
        for s in 0..self.dim() {
            let (x, y) = ((s / si) % m, (s / sj) % m);
            let base = s - x * si - y * sj;
            let col = x * m + y;
            for b in 0..m {
                for d in 0..m {
                    let w = op[(b * m + d, col)];
                    if w == C::new(0.0, 0.0) {
                        continue;
                    }
                    let src = base + b * si + d * sj;
                    for r in 0..a.nrows() {
                        out[(r, s)] += a[(r, src)] * w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Transposition of tensor factors i and j.
    pub fn perm(&self, i: usize, j: usize) -> Result<Mat> {
        self.embed(&perm2(self.m), i, j)
    }
}

/// P_12 on C^M ⊗ C^M.
pub fn perm2(m: usize) -> Mat {
    let mut p = Mat::zeros(m * m, m * m);
    for a in 0..m {
        for b in 0..m {
            p[(a * m + b, b * m + a)] = C::new(1.0, 0.0);
        }
    }
    p
}

/// Swap the two factors of a two-site operator: A_21 = P A_12 P.
pub fn flip(op: &Mat, m: usize) -> Mat {
    let mut out = Mat::zeros(m * m, m * m);
    for a in 0..m {
        for c in 0..m {
            for b in 0..m {
                for d in 0..m {
                    out[(c * m + a, d * m + b)] = op[(a * m + c, b * m + d)];
                }
            }
        }
    }
    out
}

/// Largest entry modulus.
pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

/// max|a - b| / max(max|b|, 1)
pub fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(1.0)
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_mat(d: usize, seed: u64) -> Mat {
        let mut s = crate::rng::Sampler::new(seed);
        Mat::from_fn(d, d, |_, _| s.complex((-1.0, 1.0), (-1.0, 1.0)))
    }

    #[test]
    fn identity_embeds_to_identity() {
        let sp = Space::new(3, 2);
        let e = sp.embed(&Mat::identity(4, 4), 1, 3).unwrap();
        assert_eq!(e, sp.identity());
    }

    #[test]
    fn perm_swaps_factors() {
        let sp = Space::new(3, 2);
        let p = sp.perm(1, 2).unwrap();
        // a⊗b⊗c with a=e0, b=e1, c=e1 is index 0*4+1*2+1 = 3; swapped is 1*4+0*2+1 = 5
        let mut v = nalgebra::DVector::<C>::zeros(8);
        v[3] = C::new(1.0, 0.0);
        let w = &p * v;
        assert_eq!(w[5], C::new(1.0, 0.0));
        assert_eq!(max_abs(&(&p * &p - sp.identity())), 0.0);
    }

    #[test]
    fn embed_matches_kron() {
        let sp = Space::new(3, 2);
        let a = rand_mat(4, 1);
        let e = sp.embed(&a, 1, 2).unwrap();
        let k = a.kronecker(&Mat::identity(2, 2));
        assert!(max_abs(&(e - k)) < 1e-15);
        // on sites (2,1) the operator is conjugated by P
        let e21 = sp.embed(&a, 2, 1).unwrap();
        let k21 = flip(&a, 2).kronecker(&Mat::identity(2, 2));
        assert!(max_abs(&(e21 - k21)) < 1e-15);
    }

    #[test]
    fn lmul_rmul_agree_with_dense() {
        let sp = Space::new(3, 3);
        let a = rand_mat(9, 2);
        let x = rand_mat(27, 3);
        let e = sp.embed(&a, 3, 1).unwrap();
        assert!(max_abs(&(sp.lmul2(&a, 3, 1, &x).unwrap() - &e * &x)) < 1e-12);
        assert!(max_abs(&(sp.rmul2(&x, &a, 3, 1).unwrap() - &x * &e)) < 1e-12);
    }

    #[test]
    fn disjoint_supports_commute_exactly() {
        let sp = Space::new(4, 2);
        let a = sp.embed(&rand_mat(4, 4), 1, 3).unwrap();
        let b = sp.embed(&rand_mat(4, 5), 4, 2).unwrap();
        assert_eq!(max_abs(&commutator(&a, &b)), 0.0);
    }

    #[test]
    fn bad_sites() {
        let sp = Space::new(3, 2);
        assert!(matches!(sp.embed(&Mat::identity(4, 4), 2, 2), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(sp.embed(&Mat::identity(4, 4), 0, 2), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(sp.embed(&Mat::identity(9, 9), 1, 2), Err(Error::IncompatibleRank(_))));
    }
}
