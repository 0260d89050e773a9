//! Hand-expanded Hamiltonians at N = 3 and N = 4, kept as literal term
//! tables. Each term is (coefficient, operator word).
//!
//! Coefficient: either a product of φ pairs, "12 32" = φ(x1-x2)φ(x3-x2), or
//! a sum of weights, "w1/2+w1/4" with w p/q = 1/(℘(ħ) - ℘(p/q)), or "1".
//! Word: "R12 F21" = R̄_12(x1-x2) F̄_21(x2-x1), multiplied left to right.

use super::equilibrium;
use crate::diffop::SpinModel;
use crate::error::{Error, Result};
use crate::tensor::Mat;
use num_complex::Complex64 as C;

pub type Table = &'static [(&'static str, &'static str)];

pub const N3_H1: Table = &[("12 32", "R12 F21"), ("13 23", "R23 R13 F31 R32"), ("13 23", "R23 F32")];

pub const N3_H2: Table = &[("21 23", "R23 F32"), ("12 13", "R12 R13 F31 R21"), ("12 13", "R12 F21")];

pub const N3_BH1: Table = &[("1", "R12 F21"), ("1", "R23 F32"), ("1", "R23 R13 F31 R32")];

pub const N3_BH2: Table = &[("w1/3", "R23 F32"), ("w1/3", "R12 F21"), ("w1/3", "R12 R13 F31 R21")];

pub const N4_H1: Table = &[
    ("12 32 42", "R12 F21"),
    ("13 23 43", "R23 F32"),
    ("13 23 43", "R23 R13 F31 R32"),
    ("14 24 34", "R34 F43"),
    ("14 24 34", "R34 R24 F42 R43"),
    ("14 24 34", "R34 R24 R14 F41 R42 R43"),
];

pub const N4_H2: Table = &[
    ("21 23 41 43", "R23 F32"),
    ("21 24 31 34", "R34 F43"),
    ("21 24 31 34", "R34 R24 F42 R43"),
    ("12 13 42 43", "R12 F21"),
    ("12 13 42 43", "R12 R13 F31 R21"),
    ("12 14 32 34", "R12 F21"),
    ("12 14 32 34", "R34 F43"),
    ("12 14 32 34", "R12 R34 R14 F41 R43 R21"),
    ("13 14 23 24", "R23 F32"),
    ("13 14 23 24", "R23 R13 F31 R32"),
    ("13 14 23 24", "R23 R24 F42 R32"),
    ("13 14 23 24", "R23 R13 R24 R14 F41 R42 R31 R32"),
];

pub const N4_H3: Table = &[
    ("31 32 34", "R34 F43"),
    ("21 23 24", "R23 F32"),
    ("21 23 24", "R23 R24 F42 R32"),
    ("12 13 14", "R12 F21"),
    ("12 13 14", "R12 R13 F31 R21"),
    ("12 13 14", "R12 R13 R14 F41 R31 R21"),
];

pub const N4_BH1: Table = &[
    ("1", "R12 F21"),
    ("1", "R23 F32"),
    ("1", "R34 F43"),
    ("1", "R23 R13 F31 R32"),
    ("1", "R34 R24 F42 R43"),
    ("1", "R34 R24 R14 F41 R42 R43"),
];

pub const N4_BH2: Table = &[
    ("w1/2+w1/4", "R12 F21"),
    ("w1/2+w1/4", "R23 F32"),
    ("w1/2+w1/4", "R34 F43"),
    ("w1/4", "R12 R13 F31 R21"),
    ("w1/4", "R34 R24 F42 R43"),
    ("w1/4", "R23 R13 F31 R32"),
    ("w1/4", "R23 R24 F42 R32"),
    ("w1/2", "R12 R34 R14 F41 R43 R21"),
    ("w1/4", "R23 R13 R24 R14 F41 R42 R31 R32"),
];

pub const N4_BH3: Table = &[
    ("1", "R34 F43"),
    ("1", "R23 F32"),
    ("1", "R12 F21"),
    ("1", "R23 R24 F42 R32"),
    ("1", "R12 R13 F31 R21"),
    ("1", "R12 R13 R14 F41 R31 R21"),
];

/// Which operator a table encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// H_k
    Plain(usize),
    /// normalized 𝐇_k
    Normalized(usize),
}

/// All tables for a given N (3 or 4).
pub fn tables(n: usize) -> Vec<(Target, Table)> {
    match n {
        3 => vec![
            (Target::Plain(1), N3_H1),
            (Target::Plain(2), N3_H2),
            (Target::Normalized(1), N3_BH1),
            (Target::Normalized(2), N3_BH2),
        ],
        4 => vec![
            (Target::Plain(1), N4_H1),
            (Target::Plain(2), N4_H2),
            (Target::Plain(3), N4_H3),
            (Target::Normalized(1), N4_BH1),
            (Target::Normalized(2), N4_BH2),
            (Target::Normalized(3), N4_BH3),
        ],
        _ => vec![],
    }
}

fn bad(s: &str) -> Error {
    Error::InvalidParams(format!("malformed golden token '{s}'"))
}

fn pair(tok: &str) -> Result<(usize, usize)> {
    let d: Vec<usize> = tok.chars().map(|c| c.to_digit(10).map(|v| v as usize)).collect::<Option<_>>().ok_or_else(|| bad(tok))?;
    match d.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(bad(tok)),
    }
}

fn coefficient(model: &SpinModel, s: &str, x: &[C]) -> Result<C> {
    let k = model.kernel();
    let h = model.r.hbar();
    let s = s.trim();
    if s == "1" {
        return Ok(C::new(1.0, 0.0));
    }
    if s.starts_with('w') {
        let mut sum = C::new(0.0, 0.0);
        for w in s.split('+') {
            let frac = w.trim().strip_prefix('w').ok_or_else(|| bad(w))?;
            let (p, q) = frac.split_once('/').ok_or_else(|| bad(w))?;
            let p: f64 = p.parse().map_err(|_| bad(w))?;
            let q: f64 = q.parse().map_err(|_| bad(w))?;
            sum += 1.0 / (k.wp(h)? - k.wp(C::new(p / q, 0.0))?);
        }
        return Ok(sum);
    }
    let mut p = C::new(1.0, 0.0);
    for tok in s.split_whitespace() {
        let (a, b) = pair(tok)?;
        p *= k.phi(x[a - 1] - x[b - 1], h)?;
    }
    Ok(p)
}

fn word(model: &SpinModel, s: &str, x: &[C]) -> Result<Mat> {
    let mut acc = model.space.identity();
    for tok in s.split_whitespace() {
        let (head, rest) = tok.split_at(1);
        let (a, b) = pair(rest)?;
        let (r, f) = model.rbar(x[a - 1] - x[b - 1])?;
        let op = match head {
            "R" => r,
            "F" => f,
            _ => return Err(bad(tok)),
        };
        acc = model.space.rmul2(&acc, &op, a, b)?;
    }
    Ok(acc)
}

/// Sum of the table's terms at x_j = j/N.
pub fn evaluate(model: &SpinModel, table: Table) -> Result<Mat> {
    let x = equilibrium(model.n());
    let d = model.space.dim();
    let mut out = Mat::zeros(d, d);
    for (c, w) in table {
        out += word(model, w, &x)? * coefficient(model, c, &x)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmat::{Kind, ModelParams, RMatrix};

    #[test]
    fn parse_errors() {
        let p = ModelParams::new(C::new(0.0, 1.0), C::new(0.05, 0.01), C::new(0.0, 0.0), 2, 3).unwrap();
        let m = SpinModel::new(RMatrix::from_kind(Kind::EllipticBB, p).unwrap());
        assert!(evaluate(&m, &[("1", "Q12")]).is_err());
        assert!(evaluate(&m, &[("123", "R12")]).is_err());
        assert!(evaluate(&m, &[("wx/2", "R12")]).is_err());
        assert!(evaluate(&m, &[("1", "R11")]).is_err());
    }
}
