//! Command-line front end. Every subcommand prints one residual report.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad flags,
//! 3 numerical error (the offending sample is echoed in the report).

use crate::diffop::{commutator_residual, sample_points, Form, SpinModel};
use crate::error::Error;
use crate::freeze::{self, Scalars};
use crate::limits::{self, COrient, NonRel};
use crate::report::{cjson, cvec_json, emit_spectrum, mat_json, Failure, Report};
use crate::rmat::{self, Kind, ModelParams, RMatrix};
use crate::rng::Sampler;
use crate::special_fn::{lattice_distance, Elliptic, Kernel};
use crate::tensor::rel_diff;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64 as C;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ellchain", version, about = "Residual checks for elliptic and trigonometric spin chains")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau_re: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub tau_im: f64,
    #[arg(long, global = true, default_value_t = 0.05, allow_negative_numbers = true)]
    pub hbar_re: f64,
    #[arg(long, global = true, default_value_t = 0.01, allow_negative_numbers = true)]
    pub hbar_im: f64,
    #[arg(long, global = true, default_value_t = 0.03, allow_negative_numbers = true)]
    pub eta_re: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta_im: f64,
    /// rank (local dimension)
    #[arg(long = "M", global = true, default_value_t = 2)]
    pub m: usize,
    /// number of sites
    #[arg(long = "N", global = true, default_value_t = 3)]
    pub n: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// add wall time to the report (breaks byte-identical output)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// theta, Kronecker and Weierstrass function identities
    SpecialFn(SpecialFnArgs),
    /// Yang-Baxter, unitarity, classical limit and residue of an R-matrix
    Rmat(RmatArgs),
    /// commutativity of the spin difference operators and the eta-oracle
    Diffop(DiffopArgs),
    /// frozen Hamiltonians, spectra, equilibrium tables and golden comparisons
    Freeze(FreezeArgs),
    /// trigonometric, Haldane-Shastry and non-relativistic limits
    Limits(LimitsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialCheck {
    Identities,
    Values,
}

#[derive(Args, Debug)]
pub struct SpecialFnArgs {
    #[arg(long, value_enum, default_value_t = SpecialCheck::Identities)]
    pub check: SpecialCheck,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub z_re: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub z_im: f64,
}

#[derive(Args, Debug, Clone)]
pub struct KindArgs {
    /// elliptic, eight-vertex, seven-vertex, zn, cremmer-gervais, non-standard, uq-xxz
    #[arg(long, default_value = "elliptic")]
    pub kind: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c7_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c7_im: f64,
}

impl KindArgs {
    fn parse(&self) -> Result<Kind, String> {
        match self.kind.parse::<Kind>().map_err(|e| e.to_string())? {
            Kind::SevenVertex(_) => Ok(Kind::SevenVertex(C::new(self.c7_re, self.c7_im))),
            k => Ok(k),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmatCheck {
    Qybe,
    Unitarity,
    Classical,
    Residue,
}

#[derive(Args, Debug)]
pub struct RmatArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, value_enum, default_value_t = RmatCheck::Qybe)]
    pub check: RmatCheck,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffopCheck {
    Commute,
    EtaOracle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormArg {
    Macdonald,
    Ruijsenaars,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Macdonald => Form::Macdonald,
            FormArg::Ruijsenaars => Form::Ruijsenaars,
        }
    }
}

#[derive(Args, Debug)]
pub struct DiffopArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, value_enum, default_value_t = DiffopCheck::Commute)]
    pub check: DiffopCheck,
    /// same as --check commute
    #[arg(long, conflicts_with = "check")]
    pub check_commute: bool,
    #[arg(long, value_enum, default_value_t = FormArg::Macdonald)]
    pub form: FormArg,
    /// first operator index; all pairs when omitted
    #[arg(long)]
    pub k1: Option<usize>,
    #[arg(long)]
    pub k2: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Hamiltonians,
    Spectra,
    Equilibrium,
    Identities,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Golden {
    N3,
    N4,
}

#[derive(Args, Debug)]
pub struct FreezeArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, value_enum, default_value_t = Emit::Hamiltonians)]
    pub emit: Emit,
    #[arg(long, value_enum)]
    pub golden: Option<Golden>,
    #[arg(long, value_enum, default_value_t = FormArg::Macdonald)]
    pub form: FormArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Uglov,
    SpectrumMatch,
    Nonrel,
    /// k = 1 two-sum and braid-chain identities
    #[value(name = "appendix-c")]
    K1Identity,
}

#[derive(Args, Debug)]
pub struct LimitsArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// trigonometric kind for spectrum-match (default zn), R-matrix kind for nonrel (default elliptic)
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c7_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c7_im: f64,
}

/// Parse argv (program name first), run, write the report. Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_PASS { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute(&cli, stdout, stderr)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let g = &cli.global;
    let start = Instant::now();
    let report = match dispatch(g, &cli.command) {
        Ok(r) => r,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut report = report;
    if g.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let body = match g.format {
        Format::Json => match report.to_json() {
            Ok(s) => (s + "\n").into_bytes(),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_NUMERIC;
            }
        },
        Format::Csv => {
            let mut buf = Vec::new();
            if let Err(e) = report.write_csv(&mut buf) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_FAIL;
            }
            buf
        }
    };
    let written = match &g.out {
        Some(p) => std::fs::write(p, &body).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(&body).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_FAIL;
    }
    if let Some(f) = &report.error {
        let _ = writeln!(stderr, "numerical error ({}): {}", f.kind, f.message);
        EXIT_NUMERIC
    } else if report.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Flag-level problems come back as Err (exit 2); numerical ones live in the report.
fn dispatch(g: &Global, cmd: &Command) -> Result<Report, String> {
    if g.tol.is_nan() || g.tol < 0.0 {
        return Err(format!("--tol must be non-negative, got {}", g.tol));
    }
    match cmd {
        Command::SpecialFn(a) => special_fn(g, a),
        Command::Rmat(a) => rmat_cmd(g, a),
        Command::Diffop(a) => diffop_cmd(g, a),
        Command::Freeze(a) => freeze_cmd(g, a),
        Command::Limits(a) => limits_cmd(g, a),
    }
}

fn params(g: &Global) -> Result<ModelParams, String> {
    ModelParams::new(C::new(g.tau_re, g.tau_im), C::new(g.hbar_re, g.hbar_im), C::new(g.eta_re, g.eta_im), g.m, g.n)
        .map_err(|e| e.to_string())
}

fn echo(g: &Global, p: &ModelParams) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tau".into(), cjson(p.tau));
    m.insert("hbar".into(), cjson(p.hbar));
    m.insert("eta".into(), cjson(p.eta));
    m.insert("t".into(), cjson(p.t()));
    m.insert("q".into(), cjson(p.q()));
    m.insert("M".into(), json!(p.m));
    m.insert("N".into(), json!(p.n));
    m.insert("samples".into(), json!(g.samples));
    m.insert("seed".into(), json!(g.seed));
    m
}

fn kind_echo(m: &mut Map<String, Value>, k: Kind) {
    m.insert("kind".into(), json!(k.name()));
    if let Kind::SevenVertex(c7) = k {
        m.insert("c7".into(), cjson(c7));
    }
}

/// Run `f`; on a numerical error record it with `sample` and return None.
fn attempt<T>(r: &mut Report, sample: impl FnOnce() -> Value, f: impl FnOnce() -> crate::Result<T>) -> Option<T> {
    match f() {
        Ok(v) => Some(v),
        Err(e) => {
            r.fail(failure(&e, sample()));
            None
        }
    }
}

fn failure(e: &Error, sample: Value) -> Failure {
    Failure { kind: e.kind().into(), message: e.to_string(), sample }
}

fn build_r(r: &mut Report, kind: Kind, p: ModelParams) -> Option<RMatrix> {
    attempt(r, || json!(null), || RMatrix::from_kind(kind, p))
}

/// Distance of z from the period lattice of the kernel.
fn lattice_gap(k: &Kernel, z: C) -> f64 {
    match k {
        Kernel::Elliptic(e) => lattice_distance(z, e.tau),
        Kernel::Trig => (z - z.re.round()).norm(),
    }
}

/// Points away from the lattice and from ∓ħ by `margin`.
fn random_points(k: &Kernel, hbar: C, count: usize, per: usize, seed: u64, margin: f64) -> Vec<Vec<C>> {
    let mut rng = Sampler::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pts: Vec<C> = (0..per).map(|_| rng.complex((0.0, 1.0), (-0.2, 0.2))).collect();
        let mut args = pts.clone();
        if per == 2 {
            args.push(pts[0] + pts[1]);
        }
        let ok = args.iter().all(|&z| [z, z + hbar, z - hbar].iter().all(|&w| lattice_gap(k, w) >= margin));
        if ok {
            out.push(pts);
        }
    }
    out
}

fn points_json(pts: &[Vec<C>]) -> Value {
    Value::Array(pts.iter().map(|p| cvec_json(p)).collect())
}

fn special_fn(g: &Global, a: &SpecialFnArgs) -> Result<Report, String> {
    let p = params(g)?;
    let mut params = echo(g, &p);
    match a.check {
        SpecialCheck::Identities => {
            params.insert("note".into(), json!("tau is drawn per sample; --tau flags are ignored"));
            let mut r = Report::new("special-fn", "identities", params, g.tol);
            if let Some(items) = attempt(&mut r, || json!({"seed": g.seed}), || crate::special_fn::identity_suite(g.samples, g.seed)) {
                for (name, v) in items {
                    r.push(name, v);
                }
            }
            Ok(r)
        }
        SpecialCheck::Values => {
            let z = C::new(a.z_re, a.z_im);
            params.insert("z".into(), cjson(z));
            let mut r = Report::new("special-fn", "values", params, g.tol);
            let vals = attempt(
                &mut r,
                || json!({"z": cjson(z)}),
                || -> crate::Result<_> {
                    let e = Elliptic::new(p.tau)?;
                    let (th, thm) = (e.theta(z)?, e.theta(-z)?);
                    let (phi, phis) = (e.phi(z, p.hbar)?, e.phi(p.hbar, z)?);
                    let (wp, wpm) = (e.wp(z)?, e.wp(-z)?);
                    let data = json!({
                        "theta": cjson(th),
                        "theta_prime_0": cjson(e.theta_prime0()),
                        "e1": cjson(e.e1(z)?),
                        "e2": cjson(e.e2(z)?),
                        "wp": cjson(wp),
                        "wp_prime": cjson(e.wp_d(z)?),
                        "phi_z_hbar": cjson(phi),
                    });
                    let rel = |a: C, b: C| (a - b).norm() / b.norm().max(1.0);
                    Ok((data, rel(th, -thm), rel(phi, phis), rel(wp, wpm)))
                },
            );
            if let Some((data, odd, sym, even)) = vals {
                r.push("theta odd", odd);
                r.push("phi symmetric", sym);
                r.push("wp even", even);
                r.data = Some(data);
            }
            Ok(r)
        }
    }
}

fn rmat_cmd(g: &Global, a: &RmatArgs) -> Result<Report, String> {
    let p = params(g)?;
    let kind = a.kind.parse()?;
    let mut params = echo(g, &p);
    kind_echo(&mut params, kind);
    let name = match a.check {
        RmatCheck::Qybe => "qybe",
        RmatCheck::Unitarity => "unitarity",
        RmatCheck::Classical => "classical",
        RmatCheck::Residue => "residue",
    };
    let mut r = Report::new("rmat", name, params, g.tol);
    let Some(rm) = build_r(&mut r, kind, p) else { return Ok(r) };
    let kernel = rm.kernel();
    match a.check {
        RmatCheck::Qybe | RmatCheck::Unitarity => {
            let per = if a.check == RmatCheck::Qybe { 2 } else { 1 };
            let pts = random_points(&kernel, p.hbar, g.samples, per, g.seed, 0.05);
            r.samples = Some(points_json(&pts));
            let mut worst = 0.0f64;
            for pt in &pts {
                let res = attempt(&mut r, || cvec_json(pt), || if per == 2 { rm.qybe_residual(pt[0], pt[1]) } else { rm.unitarity_residual(pt[0]) });
                match res {
                    Some(v) => worst = worst.max(v),
                    None => return Ok(r),
                }
            }
            r.push(name, worst);
        }
        RmatCheck::Classical => {
            let pts = random_points(&kernel, C::new(0.0, 0.0), g.samples, 2, g.seed, 0.05);
            r.samples = Some(points_json(&pts));
            let pairs: Vec<(C, C)> = pts.iter().map(|v| (v[0], v[1])).collect();
            let Some(items) = attempt(&mut r, || points_json(&pts), || limits::classical_identities(&rm, &pairs)) else { return Ok(r) };
            for i in items {
                r.push(i.name, i.residual);
            }
            // finite differences in ħ: truncation error ~1e-7 (r), ~1e-5 (m)
            let (mut er, mut em) = (0.0f64, 0.0f64);
            for pt in &pts {
                let Some((x, y)) = attempt(&mut r, || cvec_json(pt), || rmat::classical_expansion_residual(kind, p, pt[0])) else { return Ok(r) };
                er = er.max(x);
                em = em.max(y);
            }
            r.push_tol("r vs hbar expansion", er, 1e-6);
            r.push_tol("m vs hbar expansion", em, 1e-4);
        }
        RmatCheck::Residue => {
            // Richardson in z → 0 at step 1e-5: error ~1e-9
            if let Some(v) = attempt(&mut r, || json!(null), || rmat::residue_residual(&rm)) {
                r.push_tol("z R(z) -> P", v, g.tol.max(1e-8));
            }
        }
    }
    Ok(r)
}

fn diffop_cmd(g: &Global, a: &DiffopArgs) -> Result<Report, String> {
    let p = params(g)?;
    let kind = a.kind.parse()?;
    let form: Form = a.form.into();
    let check = if a.check_commute { DiffopCheck::Commute } else { a.check };
    let n = p.n;
    let mut params = echo(g, &p);
    kind_echo(&mut params, kind);
    params.insert("form".into(), json!(form_name(form)));
    let valid = |k: usize| (1..=n).contains(&k);
    if let Some(k) = a.k1.iter().chain(a.k2.iter()).find(|&&k| !valid(k)) {
        return Err(format!("operator index {k} outside 1..={n}"));
    }
    match check {
        DiffopCheck::Commute => {
            let pairs: Vec<(usize, usize)> = match (a.k1, a.k2) {
                (Some(i), Some(j)) => vec![(i, j)],
                (Some(i), None) | (None, Some(i)) => (1..=n).filter(|&j| j != i).map(|j| (i, j)).collect(),
                (None, None) => (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect(),
            };
            params.insert("pairs".into(), json!(pairs));
            let mut r = Report::new("diffop", "commute", params, g.tol);
            let Some(rm) = build_r(&mut r, kind, p) else { return Ok(r) };
            let model = Arc::new(SpinModel::new(rm));
            let pts = sample_points(n, g.samples, g.seed, &model.kernel(), p.eta, p.hbar);
            r.samples = Some(points_json(&pts));
            for (i, j) in pairs {
                let ops = attempt(&mut r, || json!({"k1": i, "k2": j}), || Ok((model.build_spin_dk(i, form)?, model.build_spin_dk(j, form)?)));
                let Some((di, dj)) = ops else { return Ok(r) };
                let mut worst = 0.0f64;
                for z in &pts {
                    let Some(v) = attempt(&mut r, || cvec_json(z), || commutator_residual(&di, &dj, std::slice::from_ref(z))) else { return Ok(r) };
                    worst = v.into_iter().fold(worst, f64::max);
                }
                r.push(format!("[D{i}, D{j}]"), worst);
            }
            Ok(r)
        }
        DiffopCheck::EtaOracle => {
            let ks: Vec<usize> = match (a.k1, a.k2) {
                (None, None) => (1..n).collect(),
                _ => a.k1.iter().chain(a.k2.iter()).copied().collect(),
            };
            let mut r = Report::new("diffop", "eta-oracle", params, g.tol);
            let Some(rm) = build_r(&mut r, kind, p) else { return Ok(r) };
            let model = SpinModel::new(rm);
            // η is replaced by ±1e-3, ±5e-4 inside the extraction
            let z = sample_points(n, 1, g.seed, &model.kernel(), C::new(1e-3, 0.0), p.hbar).remove(0);
            let dim = model.space.dim();
            let mut rng = Sampler::new(g.seed.wrapping_add(1));
            let vs: Vec<DVector<C>> =
                (0..g.samples).map(|_| DVector::from_fn(dim, |_, _| rng.complex((-1.0, 1.0), (-1.0, 1.0)))).collect();
            r.samples = Some(json!({"z": cvec_json(&z)}));
            let mut one_sided = Map::new();
            for k in ks {
                let Some(h) = attempt(&mut r, || json!({"z": cvec_json(&z), "k": k}), || model.htilde(k, &z, form)) else { return Ok(r) };
                let (mut worst, mut fwd) = (0.0f64, 0.0f64);
                for v in &vs {
                    let hv = &h * v;
                    let scale = hv.camax().max(1.0);
                    let got = attempt(&mut r, || json!({"z": cvec_json(&z), "k": k}), || {
                        Ok((freeze::eta_extract(&model, k, form, v, &z)?, freeze::eta_extract_forward(&model, k, form, v, &z)?))
                    });
                    let Some((c, f)) = got else { return Ok(r) };
                    worst = worst.max((c - &hv).camax() / scale);
                    fwd = fwd.max((f - &hv).camax() / scale);
                }
                r.push(format!("H{k} extraction"), worst);
                one_sided.insert(format!("H{k}"), json!(fwd));
            }
            r.data = Some(json!({ "one_sided_richardson": one_sided }));
            Ok(r)
        }
    }
}

fn form_name(f: Form) -> &'static str {
    match f {
        Form::Macdonald => "macdonald",
        Form::Ruijsenaars => "ruijsenaars",
    }
}

fn freeze_cmd(g: &Global, a: &FreezeArgs) -> Result<Report, String> {
    let p = params(g)?;
    let kind = a.kind.parse()?;
    let form: Form = a.form.into();
    if let Some(gold) = a.golden {
        let want = if gold == Golden::N3 { 3 } else { 4 };
        if p.n != want {
            return Err(format!("--golden n{want} needs --N {want}, got --N {}", p.n));
        }
    }
    let mut params = echo(g, &p);
    kind_echo(&mut params, kind);
    params.insert("form".into(), json!(form_name(form)));
    let check = match (a.golden, a.emit) {
        (Some(Golden::N3), _) => "golden-n3",
        (Some(Golden::N4), _) => "golden-n4",
        (None, Emit::Hamiltonians) => "hamiltonians",
        (None, Emit::Spectra) => "spectra",
        (None, Emit::Equilibrium) => "equilibrium",
        (None, Emit::Identities) => "identities",
    };
    let mut r = Report::new("freeze", check, params, g.tol);
    let Some(rm) = build_r(&mut r, kind, p) else { return Ok(r) };
    let model = SpinModel::new(rm);
    let x = freeze::equilibrium(p.n);
    r.samples = Some(json!({ "equilibrium": cvec_json(&x) }));
    let hb = || json!({ "hbar": cjson(p.hbar), "x": cvec_json(&x) });
    if a.golden.is_some() {
        if attempt(&mut r, hb, || freeze::check_hbar(&model)).is_none() {
            return Ok(r);
        }
        if let Some(items) = attempt(&mut r, hb, || freeze::golden_check(&model, form)) {
            for i in items {
                r.push(i.name, i.residual);
            }
        }
        return Ok(r);
    }
    match a.emit {
        Emit::Hamiltonians | Emit::Spectra => {
            if attempt(&mut r, hb, || freeze::check_hbar(&model)).is_none() {
                return Ok(r);
            }
            let other = if form == Form::Macdonald { Form::Ruijsenaars } else { Form::Macdonald };
            let Some((hs, alt)) = attempt(&mut r, hb, || Ok((freeze::build_hamiltonians(&model, form)?, freeze::build_hamiltonians(&model, other)?))) else {
                return Ok(r);
            };
            r.push("commutators", freeze::max_commutator(&hs));
            let eq = hs.iter().zip(&alt).map(|(a, b)| rel_diff(a, b)).fold(0.0, f64::max);
            r.push("macdonald vs ruijsenaars", eq);
            let mut data = Map::new();
            if a.emit == Emit::Hamiltonians {
                for (k, h) in hs.iter().enumerate() {
                    data.insert(format!("H{}", k + 1), mat_json(h));
                }
                let norm = attempt(&mut r, hb, || {
                    let mut m = vec![("bold H1".to_string(), freeze::normalized_h1(&model, &hs[0])?)];
                    if p.n >= 3 {
                        m.push(("bold H2".into(), freeze::normalized_h2(&model)?));
                    }
                    if p.n >= 4 {
                        m.push((format!("bold H{}", p.n - 1), freeze::normalized_last(&model, &hs[p.n - 2])?));
                    }
                    Ok(m)
                });
                let Some(norm) = norm else { return Ok(r) };
                for (name, h) in norm {
                    data.insert(name, mat_json(&h));
                }
            } else {
                for (k, h) in hs.iter().enumerate() {
                    let Some(s) = attempt(&mut r, || json!({ "k": k + 1 }), || emit_spectrum(h)) else { return Ok(r) };
                    data.insert(format!("H{}", k + 1), s.to_json());
                }
            }
            r.data = Some(Value::Object(data));
        }
        Emit::Equilibrium => {
            let s = Scalars::new(model.kernel(), p.hbar);
            let Some(t) = attempt(&mut r, hb, || freeze::classical_equilibrium_report(p.n, &s)) else { return Ok(r) };
            r.push("u row spread", t.u_spread(false));
            r.push("|w|", t.w_max(false));
            r.push("u' row spread", t.u_spread(true));
            r.push("|w'|", t.w_max(true));
            let tab = |v: &Vec<Vec<C>>| Value::Array(v.iter().map(|row| cvec_json(row)).collect());
            r.data = Some(json!({"u": tab(&t.u), "w": tab(&t.w), "u_primed": tab(&t.u_primed), "w_primed": tab(&t.w_primed)}));
        }
        Emit::Identities => {
            let s = Scalars::new(model.kernel(), p.hbar);
            if let Some(items) = attempt(&mut r, hb, || freeze::identity_suite(p.n, &s)) {
                for i in items {
                    r.push(i.name, i.residual);
                }
            }
        }
    }
    Ok(r)
}

fn limits_cmd(g: &Global, a: &LimitsArgs) -> Result<Report, String> {
    let p = params(g)?;
    let kind_for = |default: &str| -> Result<Kind, String> {
        KindArgs { kind: a.kind.clone().unwrap_or_else(|| default.into()), c7_re: a.c7_re, c7_im: a.c7_im }.parse()
    };
    let mut params = echo(g, &p);
    match a.mode {
        Mode::Uglov => {
            let mut r = Report::new("limits", "uglov", params, g.tol);
            let s = p.sqrt_t();
            let pts = random_points(&Kernel::Trig, p.hbar, g.samples, 1, g.seed, 0.05);
            r.samples = Some(points_json(&pts));
            let mut worst = 0.0f64;
            for z in &pts {
                let Some(v) = attempt(&mut r, || cvec_json(z), || limits::proportionality_residual_exact(z[0], p.hbar, false)) else { return Ok(r) };
                worst = worst.max(v);
            }
            r.push("derivative chain proportional to C", worst);
            for n in 2..=p.n {
                let mut w = 0.0f64;
                for k in 1..n {
                    let Some(v) = attempt(&mut r, || json!({"N": n, "k": k}), || limits::coefficient_sum_check(n, k, s, true)) else { return Ok(r) };
                    w = w.max(v);
                }
                r.push(format!("coefficient sums N={n}"), w);
            }
            if p.m == 2 {
                let frozen = attempt(&mut r, || json!(null), || {
                    let model = SpinModel::new(RMatrix::from_kind(Kind::UqXXZ, p)?);
                    freeze::check_hbar(&model)?;
                    let h = model.htilde(1, &freeze::equilibrium(p.n), Form::Macdonald)?;
                    Ok(rel_diff(&limits::uglov_lamers_h1(p.n, s, COrient::Ki)?, &freeze::normalized_h1(&model, &h)?))
                });
                let Some(v) = frozen else { return Ok(r) };
                r.push("closed form vs frozen H1", v);
            }
            let hs = attempt(&mut r, || json!(null), || Ok((limits::hs_limit_error(p.n, 1e-4, COrient::Ki)?, limits::hs_limit_error(p.n, 1e-5, COrient::Ki)?)));
            let Some((e4, e5)) = hs else { return Ok(r) };
            r.push_tol("Haldane-Shastry limit at t-1 = 1e-4", e4, 1e-3);
            r.push_tol("Haldane-Shastry error ratio 1e-4/1e-5 vs 10", (e4 / e5 / 10.0 - 1.0).abs(), 0.05);
            r.data = Some(json!({"hs_error_1e-4": e4, "hs_error_1e-5": e5}));
            Ok(r)
        }
        Mode::SpectrumMatch => {
            let kind = kind_for("zn")?;
            kind_echo(&mut params, kind);
            params.insert("elliptic_tau".into(), cjson(C::new(p.tau.re, 20.0)));
            let mut r = Report::new("limits", "spectrum-match", params, g.tol);
            if let Some(d) = attempt(&mut r, || json!(null), || limits::elliptic_to_trig_spectrum_check(p, kind)) {
                for (k, v) in d.into_iter().enumerate() {
                    r.push(format!("H{} spectra", k + 1), v);
                }
            }
            Ok(r)
        }
        Mode::Nonrel => {
            let kind = kind_for("elliptic")?;
            kind_echo(&mut params, kind);
            let mut r = Report::new("limits", "nonrel", params, g.tol);
            let Some(rm) = build_r(&mut r, kind, p) else { return Ok(r) };
            let pts = random_points(&rm.kernel(), C::new(0.0, 0.0), g.samples, 2, g.seed, 0.05);
            r.samples = Some(points_json(&pts));
            let pairs: Vec<(C, C)> = pts.iter().map(|v| (v[0], v[1])).collect();
            let Some(items) = attempt(&mut r, || points_json(&pts), || limits::classical_identities(&rm, &pairs)) else { return Ok(r) };
            for i in items {
                r.push(i.name, i.residual);
            }
            let nr = NonRel::new(rm);
            let Some(items) = attempt(&mut r, || json!({"x": cvec_json(&freeze::equilibrium(p.n))}), || nr.expansion_check()) else { return Ok(r) };
            for i in items {
                r.push(i.name, i.residual);
            }
            let mut data = Map::new();
            let fit = match kind {
                Kind::SevenVertex(c7) => Some(("seven-vertex sigma form", limits::seven_vertex_sigma(p.n, c7))),
                Kind::UqXXZ if p.m == 2 => Some(("isotropic exchange", limits::hs_exchange(p.n, 2))),
                _ => None,
            };
            if let Some((name, target)) = fit {
                let got = attempt(&mut r, || json!(null), || Ok(limits::fit_affine(&nr.h2()?, &target?)));
                let Some((alpha, beta, res)) = got else { return Ok(r) };
                data.insert("affine_fit".into(), json!({"against": name, "alpha": cjson(alpha), "beta": cjson(beta), "relative_residual": res}));
            }
            if !data.is_empty() {
                r.data = Some(Value::Object(data));
            }
            Ok(r)
        }
        Mode::K1Identity => {
            let mut r = Report::new("limits", "appendix-c", params, g.tol);
            let got = attempt(&mut r, || json!({"seed": g.seed}), || limits::k1_identity_check(p.m, p.n, p.sqrt_t(), g.samples, g.seed));
            if let Some((a, b)) = got {
                r.push("k=1 two-sum identity", a);
                r.push("braid chain identity", b);
            }
            Ok(r)
        }
    }
}
