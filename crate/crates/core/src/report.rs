//! Residual reports, JSON/CSV emission and spectra.
//!
//! Floats are written with 17 significant digits so that equal runs give
//! equal bytes. Complex numbers are `[re, im]`, matrices row-major nested
//! arrays.

use crate::error::Result;
use crate::limits::eigenvalues;
use crate::tensor::Mat;
use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::{self, Write};

pub const SCHEMA_VERSION: u32 = 1;

/// One named residual with the tolerance it is judged against.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Entry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Entry {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Entry { name: name.into(), residual, tolerance, pass: residual <= tolerance }
    }
}

/// Numerical failure, with the input that triggered it.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub sample: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub check: String,
    pub params: Map<String, Value>,
    pub tolerance: f64,
    pub items: Vec<Entry>,
    pub max_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: &str, check: &str, params: Map<String, Value>, tolerance: f64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            check: check.into(),
            params,
            tolerance,
            items: Vec::new(),
            max_residual: 0.0,
            pass: true,
            samples: None,
            data: None,
            error: None,
            wall_time_s: None,
        }
    }

    /// Item judged against the report tolerance.
    pub fn push(&mut self, name: impl Into<String>, residual: f64) {
        let t = self.tolerance;
        self.push_tol(name, residual, t);
    }

    /// Item with its own tolerance.
    pub fn push_tol(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        let e = Entry::new(name, residual, tol);
        // NaN compares false both ways; treat it as the worst case
        self.max_residual = if residual.is_nan() || self.max_residual.is_nan() {
            f64::NAN
        } else {
            self.max_residual.max(residual)
        };
        self.pass &= e.pass;
        self.items.push(e);
    }

    pub fn fail(&mut self, f: Failure) {
        self.pass = false;
        self.error = Some(f);
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    /// Flat CSV: one row per item, then a summary row, then `data` leaves
    /// as path/value pairs.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["section", "name", "residual", "tolerance", "pass"])?;
        for e in &self.items {
            out.write_record(["item", &e.name, &fmt_f64(e.residual), &fmt_f64(e.tolerance), &e.pass.to_string()])?;
        }
        out.write_record(["summary", &self.check, &fmt_f64(self.max_residual), &fmt_f64(self.tolerance), &self.pass.to_string()])?;
        if let Some(f) = &self.error {
            out.write_record(["error", &f.kind, &f.message, &compact(&f.sample), ""])?;
        }
        if let Some(d) = &self.data {
            let mut leaves = Vec::new();
            flatten("data", d, &mut leaves);
            for (k, v) in leaves {
                out.write_record(["data", &k, &v, "", ""])?;
            }
        }
        out.flush()
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn compact(v: &Value) -> String {
    to_json_inner(v, false).unwrap_or_default()
}

fn flatten(path: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{path}/{i}"), x, out);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{path}/{k}"), x, out);
            }
        }
        Value::Number(n) => out.push((path.into(), n.as_f64().filter(|_| n.is_f64()).map(fmt_f64).unwrap_or(n.to_string()))),
        other => out.push((path.into(), other.to_string())),
    }
}

/// serde_json formatter writing every f64 as `{:.16e}`.
struct Fixed<F> {
    inner: F,
}

impl<F: serde_json::ser::Formatter> serde_json::ser::Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

fn to_json_inner<T: Serialize + ?Sized>(v: &T, pretty: bool) -> Result<String> {
    let mut buf = Vec::new();
    let r = if pretty {
        let f = Fixed { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
        v.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, f))
    } else {
        let f = Fixed { inner: serde_json::ser::CompactFormatter };
        v.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, f))
    };
    r.map_err(|e| crate::Error::InvalidParams(format!("serialization: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Pretty JSON with 17-significant-digit floats.
pub fn to_json_string<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    to_json_inner(v, true)
}

pub fn cjson(z: C) -> Value {
    json!([z.re, z.im])
}

pub fn cvec_json(v: &[C]) -> Value {
    Value::Array(v.iter().map(|&z| cjson(z)).collect())
}

/// Row-major nested arrays of [re, im].
pub fn mat_json(m: &Mat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

/// Eigenvalues sorted by (re, im) and grouped into degeneracy classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C>,
    /// (representative, multiplicity), in order of first appearance.
    pub degeneracies: Vec<(C, usize)>,
}

/// Clustering radius, relative to max(1, spectral radius).
pub const DEGENERACY_TOL: f64 = 1e-8;

pub fn emit_spectrum(h: &Mat) -> Result<Spectrum> {
    let ev = eigenvalues(h)?;
    let scale = ev.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let mut classes: Vec<(C, usize)> = Vec::new();
    for &z in &ev {
        match classes.iter_mut().find(|(c, _)| (c - z).norm() <= DEGENERACY_TOL * scale) {
            Some(c) => c.1 += 1,
            None => classes.push((z, 1)),
        }
    }
    Ok(Spectrum { eigenvalues: ev, degeneracies: classes })
}

impl Spectrum {
    pub fn to_json(&self) -> Value {
        json!({
            "eigenvalues": cvec_json(&self.eigenvalues),
            "degeneracies": self.degeneracies.iter().map(|(z, m)| json!({"value": cjson(*z), "multiplicity": m})).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        let s = to_json_string(&json!({"a": 0.1, "b": [1.0, -2.5e-300], "n": 3})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn nan_becomes_null() {
        let s = to_json_string(&json!({"x": 1.0})).unwrap();
        assert!(s.contains("1.0000000000000000e0"));
        let mut r = Report::new("x", "y", Map::new(), 1e-9);
        r.push("bad", f64::NAN);
        assert!(!r.pass && r.max_residual.is_nan());
        assert!(r.to_json().unwrap().contains("\"max_residual\": null"));
    }

    #[test]
    fn pass_iff_within_tolerance() {
        let mut r = Report::new("x", "y", Map::new(), 1e-9);
        r.push("a", 1e-10);
        assert!(r.pass);
        r.push("b", 2e-9);
        assert!(!r.pass);
        assert_eq!(r.max_residual, 2e-9);
    }

    #[test]
    fn identity_spectrum() {
        let s = emit_spectrum(&Mat::identity(4, 4)).unwrap();
        assert_eq!(s.eigenvalues.len(), 4);
        assert!(s.eigenvalues.iter().all(|z| (z - C::new(1.0, 0.0)).norm() < 1e-14));
        assert_eq!(s.degeneracies.len(), 1);
        assert_eq!(s.degeneracies[0].1, 4);
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new("rmat", "qybe", Map::new(), 1e-9);
        r.push("pt, 1", 0.5e-9);
        r.data = Some(json!({"m": [[1.5, 0.0]]}));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "section,name,residual,tolerance,pass");
        assert!(lines[1].starts_with("item,\"pt, 1\",5.0000000000000003e-10"));
        assert!(lines[2].starts_with("summary,qybe,"));
        assert_eq!(lines[3], "data,data/m/0/0,1.5000000000000000e0,,");
    }
}
