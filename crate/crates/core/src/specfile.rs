//! TOML document format for models: a typed or raw triplet plus an optional application.
//!
//! ```toml
//! version = "1"
//! space = "interval"            # or "simplex:3"
//!
//! [typed]
//! type = "interval-type-2"
//! a = 0.3
//! kappa = 2
//! theta = "7/10"
//! q = 0.5
//! side = 0
//! mu = { atoms = [{ point = [0.4], weight = 1.2 }] }
//! ```
//!
//! Numbers are floats, integers, `"a/b"` strings or `"inf"`. Polynomials are an
//! expression string in `x` (or `x1..xd`) or a list of `{ exponents, coeff }` records
//! over the free coordinates. Simplex indices in files are one-based.

use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use crate::apps::{spt_build, Payoff, RecoveryModel, SptJump, SptModel};
use crate::polyalg::{parse_expr, MultiIndex, PolyError, Polynomial, StateSpace};
use crate::specmodel::{
    construct, AffineJumpMap, Atom, JumpSpec, LevyTriplet, MeasureRep, ModelError, MomentTable, PoleCorrection,
    RationalFn, TypedSpec,
};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("TOML syntax: {0}")]
    Syntax(String),
    #[error("{path}: {msg}")]
    Field { path: String, msg: String },
    #[error("{path}: {source}")]
    Poly { path: String, source: PolyError },
    #[error("I/O: {0}")]
    Io(String),
}

fn field(path: &str, msg: impl Into<String>) -> SpecError {
    SpecError::Field { path: path.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSection {
    Typed(TypedSpec),
    Raw(LevyTriplet),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Application {
    Recovery { payoff: Payoff },
    Spt(SptModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecDocument {
    pub space: StateSpace,
    /// Absent only for SPT documents, whose triplet is built from the application.
    pub model: Option<ModelSection>,
    pub application: Option<Application>,
    pub metadata: Table,
}

impl SpecDocument {
    pub fn typed(t: TypedSpec) -> Self {
        SpecDocument { space: t.space(), model: Some(ModelSection::Typed(t)), application: None, metadata: Table::new() }
    }

    pub fn raw(t: LevyTriplet) -> Self {
        SpecDocument { space: t.space, model: Some(ModelSection::Raw(t)), application: None, metadata: Table::new() }
    }

    pub fn read(path: &Path) -> Result<Self, SpecError> {
        let s = std::fs::read_to_string(path).map_err(|e| SpecError::Io(format!("{}: {e}", path.display())))?;
        SpecDocument::parse(&s)
    }

    pub fn parse(s: &str) -> Result<Self, SpecError> {
        let doc: Table = s.parse().map_err(|e: toml::de::Error| SpecError::Syntax(e.to_string()))?;
        for key in doc.keys() {
            if !["version", "space", "typed", "raw", "application", "metadata"].contains(&key.as_str()) {
                return Err(field(key, "unknown top-level key"));
            }
        }
        let version = get_str(&doc, "version", "version")?;
        if version != FORMAT_VERSION {
            return Err(field("version", format!("unsupported version {version:?}")));
        }
        let space: StateSpace =
            get_str(&doc, "space", "space")?.parse().map_err(|e| SpecError::Poly { path: "space".into(), source: e })?;
        let typed = opt_table(&doc, "typed", "typed")?;
        let raw = opt_table(&doc, "raw", "raw")?;
        let model = match (typed, raw) {
            (Some(_), Some(_)) => return Err(field("typed", "exactly one of [typed] and [raw] may be present")),
            (Some(t), None) => Some(ModelSection::Typed(read_typed(t, space)?)),
            (None, Some(r)) => Some(ModelSection::Raw(read_raw(r, space)?)),
            (None, None) => None,
        };
        let application = opt_table(&doc, "application", "application")?.map(|t| read_app(t, space)).transpose()?;
        match (&model, &application) {
            (None, Some(Application::Spt(_))) => {}
            (Some(_), Some(Application::Spt(_))) => {
                return Err(field("application", "an spt application carries its own model; drop [typed]/[raw]"))
            }
            (None, _) => return Err(field("typed", "exactly one of [typed] and [raw] must be present")),
            (Some(m), Some(Application::Recovery { .. })) => {
                if !matches!(m, ModelSection::Typed(TypedSpec::IntervalType2 { side: 0, .. })) {
                    return Err(field("application", "recovery needs an interval-type-2 model with side = 0"));
                }
            }
            _ => {}
        }
        if let Some(ModelSection::Typed(t)) = &model {
            if t.space() != space {
                return Err(field("space", format!("typed section lives on {}", t.space())));
            }
        }
        let metadata = opt_table(&doc, "metadata", "metadata")?.cloned().unwrap_or_default();
        Ok(SpecDocument { space, model, application, metadata })
    }

    /// The Lévy triplet (constructed from typed parameters when needed).
    pub fn triplet(&self) -> Result<LevyTriplet, ModelError> {
        match (&self.model, &self.application) {
            (Some(ModelSection::Typed(t)), _) => construct(t),
            (Some(ModelSection::Raw(t)), _) => Ok(t.clone()),
            (None, Some(Application::Spt(m))) => spt_build(m).map_err(|e| match e {
                crate::apps::AppError::Model(m) => m,
                other => ModelError::Shape(other.to_string()),
            }),
            (None, _) => Err(ModelError::Shape("document has no model".into())),
        }
    }

    pub fn typed_spec(&self) -> Option<&TypedSpec> {
        match &self.model {
            Some(ModelSection::Typed(t)) => Some(t),
            _ => None,
        }
    }

    pub fn recovery_model(&self) -> Option<Result<RecoveryModel, crate::apps::AppError>> {
        match (&self.application, self.typed_spec()) {
            (Some(Application::Recovery { payoff }), Some(t)) => Some(RecoveryModel::new(t.clone(), payoff.clone())),
            _ => None,
        }
    }

    pub fn spt_model(&self) -> Option<&SptModel> {
        match &self.application {
            Some(Application::Spt(m)) => Some(m),
            _ => None,
        }
    }

    pub fn to_toml_string(&self) -> String {
        let mut doc = Table::new();
        doc.insert("version".into(), Value::String(FORMAT_VERSION.into()));
        doc.insert("space".into(), Value::String(self.space.to_string()));
        match &self.model {
            Some(ModelSection::Typed(t)) => {
                doc.insert("typed".into(), Value::Table(write_typed(t)));
            }
            Some(ModelSection::Raw(t)) => {
                doc.insert("raw".into(), Value::Table(write_raw(t)));
            }
            None => {}
        }
        if let Some(a) = &self.application {
            doc.insert("application".into(), Value::Table(write_app(a)));
        }
        if !self.metadata.is_empty() {
            doc.insert("metadata".into(), Value::Table(self.metadata.clone()));
        }
        toml::to_string(&doc).expect("TOML tables always serialize")
    }
}

// ---- reading helpers

fn get<'a>(t: &'a Table, key: &str, path: &str) -> Result<&'a Value, SpecError> {
    t.get(key).ok_or_else(|| field(path, "missing"))
}

fn get_str<'a>(t: &'a Table, key: &str, path: &str) -> Result<&'a str, SpecError> {
    get(t, key, path)?.as_str().ok_or_else(|| field(path, "expected a string"))
}

fn opt_table<'a>(t: &'a Table, key: &str, path: &str) -> Result<Option<&'a Table>, SpecError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Table(x)) => Ok(Some(x)),
        Some(_) => Err(field(path, "expected a table")),
    }
}

/// A number: float, integer, `"a/b"`, `"inf"` or a decimal string.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if b == 0.0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(a / b);
    }
    s.parse().map_err(|_| format!("not a number: {s:?}"))
}

fn num_value(v: &Value, path: &str) -> Result<f64, SpecError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => parse_number(s).map_err(|m| field(path, m)),
        _ => Err(field(path, "expected a number")),
    }
}

fn num(t: &Table, key: &str, path: &str) -> Result<f64, SpecError> {
    num_value(get(t, key, &format!("{path}.{key}"))?, &format!("{path}.{key}"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, SpecError> {
    v.as_array().ok_or_else(|| field(path, "expected an array"))
}

fn num_vec(v: &Value, path: &str) -> Result<Vec<f64>, SpecError> {
    array(v, path)?.iter().enumerate().map(|(k, x)| num_value(x, &format!("{path}[{k}]"))).collect()
}

fn num_matrix(v: &Value, path: &str) -> Result<Vec<Vec<f64>>, SpecError> {
    array(v, path)?.iter().enumerate().map(|(k, r)| num_vec(r, &format!("{path}[{k}]"))).collect()
}

fn index(t: &Table, key: &str, path: &str, d: usize) -> Result<usize, SpecError> {
    let p = format!("{path}.{key}");
    let v = get(t, key, &p)?.as_integer().ok_or_else(|| field(&p, "expected an integer"))?;
    if v < 1 || v as usize > d {
        return Err(field(&p, format!("index {v} outside 1..={d}")));
    }
    Ok(v as usize - 1)
}

fn poly_value(v: &Value, space: StateSpace, path: &str) -> Result<Polynomial, SpecError> {
    let n = space.n_free();
    match v {
        Value::String(s) => parse_expr(s, space).map_err(|e| SpecError::Poly { path: path.into(), source: e }),
        Value::Integer(_) | Value::Float(_) => Ok(Polynomial::constant(n, num_value(v, path)?)),
        Value::Array(terms) => {
            let mut p = Polynomial::zero(n);
            for (k, term) in terms.iter().enumerate() {
                let tp = format!("{path}[{k}]");
                let t = term.as_table().ok_or_else(|| field(&tp, "expected {exponents, coeff}"))?;
                let ex: Vec<u32> = array(get(t, "exponents", &tp)?, &tp)?
                    .iter()
                    .map(|e| e.as_integer().filter(|&e| e >= 0).map(|e| e as u32))
                    .collect::<Option<_>>()
                    .ok_or_else(|| field(&tp, "exponents must be nonnegative integers"))?;
                if ex.len() != n {
                    return Err(field(&tp, format!("expected {n} exponents (free coordinates), got {}", ex.len())));
                }
                p.add_term(MultiIndex::new(ex), num(t, "coeff", &tp)?);
            }
            Ok(p)
        }
        _ => Err(field(path, "expected a polynomial")),
    }
}

fn poly_vec(v: &Value, space: StateSpace, path: &str) -> Result<Vec<Polynomial>, SpecError> {
    array(v, path)?.iter().enumerate().map(|(k, x)| poly_value(x, space, &format!("{path}[{k}]"))).collect()
}

fn poly_matrix(v: &Value, space: StateSpace, path: &str) -> Result<Vec<Vec<Polynomial>>, SpecError> {
    array(v, path)?.iter().enumerate().map(|(k, r)| poly_vec(r, space, &format!("{path}[{k}]"))).collect()
}

fn measure(v: &Value, dim: usize, path: &str) -> Result<MeasureRep, SpecError> {
    let t = v.as_table().ok_or_else(|| field(path, "expected a measure table"))?;
    match (t.get("atoms"), t.get("moments")) {
        (Some(a), None) => {
            let mut atoms = Vec::new();
            for (k, atom) in array(a, path)?.iter().enumerate() {
                let ap = format!("{path}.atoms[{k}]");
                let at = atom.as_table().ok_or_else(|| field(&ap, "expected {point, weight}"))?;
                let point = num_vec(get(at, "point", &ap)?, &ap)?;
                if point.len() != dim {
                    return Err(field(&ap, format!("point must have {dim} coordinates")));
                }
                atoms.push(Atom::new(point, num(at, "weight", &ap)?));
            }
            Ok(MeasureRep::atoms(dim, atoms))
        }
        (None, Some(m)) => {
            let mut table = MomentTable::new(dim);
            for (k, e) in array(m, path)?.iter().enumerate() {
                let ep = format!("{path}.moments[{k}]");
                let et = e.as_table().ok_or_else(|| field(&ep, "expected {k, value}"))?;
                let idx: Vec<u32> = array(get(et, "k", &ep)?, &ep)?
                    .iter()
                    .map(|e| e.as_integer().filter(|&e| e >= 0).map(|e| e as u32))
                    .collect::<Option<_>>()
                    .ok_or_else(|| field(&ep, "k must be nonnegative integers"))?;
                if idx.len() != dim {
                    return Err(field(&ep, format!("k must have {dim} entries")));
                }
                let val = num(et, "value", &ep)?;
                table.insert(MultiIndex::new(idx), val.is_finite().then_some(val));
            }
            Ok(MeasureRep::Moments(table))
        }
        _ => Err(field(path, "measure needs exactly one of atoms or moments")),
    }
}

fn simplex_d(space: StateSpace, path: &str) -> Result<usize, SpecError> {
    match space {
        StateSpace::Simplex(d) => Ok(d),
        StateSpace::Interval => Err(field(path, "simplex type on an interval space")),
    }
}

fn square(m: Vec<Vec<f64>>, d: usize, path: &str) -> Result<Vec<Vec<f64>>, SpecError> {
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(field(path, format!("expected a {d}x{d} matrix")));
    }
    Ok(m)
}

fn read_typed(t: &Table, space: StateSpace) -> Result<TypedSpec, SpecError> {
    let p = "typed";
    let kind = get_str(t, "type", "typed.type")?;
    let mu = |dim: usize| measure(get(t, "mu", "typed.mu")?, dim, "typed.mu");
    let interval = || -> Result<(), SpecError> {
        if space != StateSpace::Interval {
            return Err(field("typed.type", format!("{kind} needs space = \"interval\"")));
        }
        Ok(())
    };
    let n = |k: &str| num(t, k, p);
    Ok(match kind {
        "interval-type-0" => {
            interval()?;
            TypedSpec::IntervalType0 { a: n("a")?, kappa: n("kappa")?, theta: n("theta")? }
        }
        "interval-type-1" => {
            interval()?;
            TypedSpec::IntervalType1 { a: n("a")?, kappa: n("kappa")?, theta: n("theta")?, mu: mu(2)? }
        }
        "interval-type-2" => {
            interval()?;
            let side = match t.get("side").map(|v| v.as_integer()) {
                None => 0,
                Some(Some(s @ (0 | 1))) => s as u8,
                Some(_) => return Err(field("typed.side", "expected 0 or 1")),
            };
            TypedSpec::IntervalType2 { a: n("a")?, kappa: n("kappa")?, theta: n("theta")?, q: n("q")?, side, mu: mu(1)? }
        }
        "interval-type-3" => {
            interval()?;
            TypedSpec::IntervalType3 {
                x_star: n("x_star")?,
                kappa: n("kappa")?,
                theta: n("theta")?,
                a: n("a")?,
                q0: n("q0")?,
                q1: n("q1")?,
                q2: n("q2")?,
                mu: mu(1)?,
            }
        }
        "interval-type-4" => {
            interval()?;
            TypedSpec::IntervalType4 {
                alpha_re: n("alpha_re")?,
                alpha_im: n("alpha_im")?,
                kappa: n("kappa")?,
                theta: n("theta")?,
                a: n("a")?,
                l: n("l")?,
                mu: mu(1)?,
            }
        }
        "simplex-type-0" | "simplex-type-1" | "simplex-type-2" | "simplex-type-3" => {
            let d = simplex_d(space, "typed.type")?;
            let alpha = square(num_matrix(get(t, "alpha", "typed.alpha")?, "typed.alpha")?, d, "typed.alpha")?;
            let b = square(num_matrix(get(t, "b", "typed.b")?, "typed.b")?, d, "typed.b")?;
            let vec_d = |k: &str| -> Result<Vec<f64>, SpecError> {
                let path = format!("typed.{k}");
                let v = num_vec(get(t, k, &path)?, &path)?;
                if v.len() != d {
                    return Err(field(&path, format!("expected {d} entries")));
                }
                Ok(v)
            };
            match kind {
                "simplex-type-0" => TypedSpec::SimplexType0 { alpha, b },
                "simplex-type-1" => TypedSpec::SimplexType1 { alpha, b, mu: mu(d * d)? },
                "simplex-type-2" => {
                    TypedSpec::SimplexType2 { i: index(t, "i", p, d)?, alpha, b, q1: vec_d("q1")?, mu: mu(d)? }
                }
                _ => TypedSpec::SimplexType3 {
                    i: index(t, "i", p, d)?,
                    j: index(t, "j", p, d)?,
                    c: n("c")?,
                    b,
                    alpha,
                    qi: vec_d("qi")?,
                    qj: vec_d("qj")?,
                    mu: mu(1)?,
                },
            }
        }
        other => return Err(field("typed.type", format!("unknown type {other:?}"))),
    })
}

fn read_raw(t: &Table, space: StateSpace) -> Result<LevyTriplet, SpecError> {
    let d = space.dim();
    let n = space.n_free();
    let mut out = LevyTriplet::zero(space);
    if let Some(v) = t.get("diffusion") {
        let m = poly_matrix(v, space, "raw.diffusion")?;
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            return Err(field("raw.diffusion", format!("expected a {d}x{d} matrix")));
        }
        out.diffusion = m;
    }
    if let Some(v) = t.get("drift") {
        let b = poly_vec(v, space, "raw.drift")?;
        if b.len() != d {
            return Err(field("raw.drift", format!("expected {d} entries")));
        }
        out.drift = b;
    }
    if let Some(v) = t.get("jumps") {
        for (k, j) in array(v, "raw.jumps")?.iter().enumerate() {
            let jp = format!("raw.jumps[{k}]");
            let jt = j.as_table().ok_or_else(|| field(&jp, "expected a table"))?;
            let lp = format!("{jp}.lambda");
            let lt = get(jt, "lambda", &lp)?.as_table().ok_or_else(|| field(&lp, "expected {num, den, excluded}"))?;
            let num_p = poly_value(get(lt, "num", &lp)?, space, &format!("{lp}.num"))?;
            let den_p = match lt.get("den") {
                Some(v) => poly_value(v, space, &format!("{lp}.den"))?,
                None => Polynomial::constant(n, 1.0),
            };
            let excl = lt.get("excluded").map(|v| poly_value(v, space, &format!("{lp}.excluded"))).transpose()?;
            let lambda = RationalFn::new(num_p, den_p, excl).map_err(|e| field(&lp, e.to_string()))?;
            let dirs = poly_matrix(get(jt, "directions", &format!("{jp}.directions"))?, space, &format!("{jp}.directions"))?;
            if dirs.is_empty() || dirs.iter().any(|g| g.len() != d) {
                return Err(field(&format!("{jp}.directions"), format!("expected rows of {d} polynomials")));
            }
            let mu = measure(get(jt, "mu", &format!("{jp}.mu"))?, dirs.len(), &format!("{jp}.mu"))?;
            out.jumps.push(JumpSpec { lambda, gamma: AffineJumpMap::new(dirs), mu });
        }
    }
    if let Some(v) = t.get("pole_corrections") {
        for (k, c) in array(v, "raw.pole_corrections")?.iter().enumerate() {
            let cp = format!("raw.pole_corrections[{k}]");
            let ct = c.as_table().ok_or_else(|| field(&cp, "expected {locus, matrix}"))?;
            let locus = poly_value(get(ct, "locus", &cp)?, space, &format!("{cp}.locus"))?;
            let matrix = poly_matrix(get(ct, "matrix", &cp)?, space, &format!("{cp}.matrix"))?;
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return Err(field(&format!("{cp}.matrix"), format!("expected a {d}x{d} matrix")));
            }
            out.pole_corrections.push(PoleCorrection { locus, matrix });
        }
    }
    for key in t.keys() {
        if !["diffusion", "drift", "jumps", "pole_corrections"].contains(&key.as_str()) {
            return Err(field(&format!("raw.{key}"), "unknown key"));
        }
    }
    Ok(out)
}

fn read_app(t: &Table, space: StateSpace) -> Result<Application, SpecError> {
    match get_str(t, "kind", "application.kind")? {
        "recovery" => {
            let payoff = match t.get("payoff") {
                None => Payoff::Identity,
                Some(Value::String(s)) if s == "identity" => Payoff::Identity,
                Some(Value::String(s)) if s == "square" => Payoff::Square,
                Some(v) => Payoff::General(poly_value(v, StateSpace::Interval, "application.payoff")?),
            };
            Ok(Application::Recovery { payoff })
        }
        "spt" => {
            let d = simplex_d(space, "application.kind")?;
            let beta = num(t, "beta", "application")?;
            let mut jumps = vec![None; d];
            if let Some(v) = t.get("jumps") {
                for (k, j) in array(v, "application.jumps")?.iter().enumerate() {
                    let jp = format!("application.jumps[{k}]");
                    let jt = j.as_table().ok_or_else(|| field(&jp, "expected {i, q, mu}"))?;
                    let i = index(jt, "i", &jp, d)?;
                    let q = num_vec(get(jt, "q", &format!("{jp}.q"))?, &format!("{jp}.q"))?;
                    let mu = measure(get(jt, "mu", &format!("{jp}.mu"))?, d, &format!("{jp}.mu"))?;
                    if jumps[i].is_some() {
                        return Err(field(&jp, format!("duplicate jumps for coordinate {}", i + 1)));
                    }
                    jumps[i] = Some(SptJump { q, mu });
                }
            }
            Ok(Application::Spt(SptModel { d, beta, jumps }))
        }
        other => Err(field("application.kind", format!("unknown application {other:?}"))),
    }
}

// ---- writing helpers

fn num_out(x: f64) -> Value {
    if x.is_finite() {
        Value::Float(x)
    } else if x > 0.0 {
        Value::String("inf".into())
    } else if x < 0.0 {
        Value::String("-inf".into())
    } else {
        Value::String("nan".into())
    }
}

fn vec_out(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num_out(x)).collect())
}

fn matrix_out(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| vec_out(r)).collect())
}

fn poly_out(p: &Polynomial) -> Value {
    Value::Array(
        p.terms()
            .map(|(k, c)| {
                let mut t = Table::new();
                t.insert(
                    "exponents".into(),
                    Value::Array(k.exponents().iter().map(|&e| Value::Integer(e as i64)).collect()),
                );
                t.insert("coeff".into(), num_out(c));
                Value::Table(t)
            })
            .collect(),
    )
}

fn poly_matrix_out(m: &[Vec<Polynomial>]) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(poly_out).collect())).collect())
}

fn measure_out(mu: &MeasureRep) -> Value {
    let mut t = Table::new();
    match mu {
        MeasureRep::Atoms { atoms, .. } => {
            let list = atoms
                .iter()
                .map(|a| {
                    let mut at = Table::new();
                    at.insert("point".into(), vec_out(&a.point));
                    at.insert("weight".into(), num_out(a.weight));
                    Value::Table(at)
                })
                .collect();
            t.insert("atoms".into(), Value::Array(list));
        }
        MeasureRep::Moments(m) => {
            let list = m
                .entries()
                .map(|(k, v)| {
                    let mut et = Table::new();
                    et.insert("k".into(), Value::Array(k.exponents().iter().map(|&e| Value::Integer(e as i64)).collect()));
                    et.insert("value".into(), num_out(v.unwrap_or(f64::INFINITY)));
                    Value::Table(et)
                })
                .collect();
            t.insert("moments".into(), Value::Array(list));
        }
    }
    Value::Table(t)
}

fn write_typed(s: &TypedSpec) -> Table {
    let mut t = Table::new();
    t.insert("type".into(), Value::String(s.type_name().into()));
    let mut put = |k: &str, v: Value| {
        t.insert(k.into(), v);
    };
    match s {
        TypedSpec::IntervalType0 { a, kappa, theta } => {
            put("a", num_out(*a));
            put("kappa", num_out(*kappa));
            put("theta", num_out(*theta));
        }
        TypedSpec::IntervalType1 { a, kappa, theta, mu } => {
            put("a", num_out(*a));
            put("kappa", num_out(*kappa));
            put("theta", num_out(*theta));
            put("mu", measure_out(mu));
        }
        TypedSpec::IntervalType2 { a, kappa, theta, q, side, mu } => {
            put("a", num_out(*a));
            put("kappa", num_out(*kappa));
            put("theta", num_out(*theta));
            put("q", num_out(*q));
            put("side", Value::Integer(*side as i64));
            put("mu", measure_out(mu));
        }
        TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, mu } => {
            put("x_star", num_out(*x_star));
            put("kappa", num_out(*kappa));
            put("theta", num_out(*theta));
            put("a", num_out(*a));
            put("q0", num_out(*q0));
            put("q1", num_out(*q1));
            put("q2", num_out(*q2));
            put("mu", measure_out(mu));
        }
        TypedSpec::IntervalType4 { alpha_re, alpha_im, kappa, theta, a, l, mu } => {
            put("alpha_re", num_out(*alpha_re));
            put("alpha_im", num_out(*alpha_im));
            put("kappa", num_out(*kappa));
            put("theta", num_out(*theta));
            put("a", num_out(*a));
            put("l", num_out(*l));
            put("mu", measure_out(mu));
        }
        TypedSpec::SimplexType0 { alpha, b } => {
            put("alpha", matrix_out(alpha));
            put("b", matrix_out(b));
        }
        TypedSpec::SimplexType1 { alpha, b, mu } => {
            put("alpha", matrix_out(alpha));
            put("b", matrix_out(b));
            put("mu", measure_out(mu));
        }
        TypedSpec::SimplexType2 { i, alpha, b, q1, mu } => {
            put("i", Value::Integer(*i as i64 + 1));
            put("alpha", matrix_out(alpha));
            put("b", matrix_out(b));
            put("q1", vec_out(q1));
            put("mu", measure_out(mu));
        }
        TypedSpec::SimplexType3 { i, j, c, b, alpha, qi, qj, mu } => {
            put("i", Value::Integer(*i as i64 + 1));
            put("j", Value::Integer(*j as i64 + 1));
            put("c", num_out(*c));
            put("alpha", matrix_out(alpha));
            put("b", matrix_out(b));
            put("qi", vec_out(qi));
            put("qj", vec_out(qj));
            put("mu", measure_out(mu));
        }
    }
    t
}

fn write_raw(tr: &LevyTriplet) -> Table {
    let mut t = Table::new();
    t.insert("diffusion".into(), poly_matrix_out(&tr.diffusion));
    t.insert("drift".into(), Value::Array(tr.drift.iter().map(poly_out).collect()));
    if !tr.jumps.is_empty() {
        let jumps = tr
            .jumps
            .iter()
            .map(|j| {
                let mut jt = Table::new();
                let mut lt = Table::new();
                lt.insert("num".into(), poly_out(&j.lambda.num));
                lt.insert("den".into(), poly_out(&j.lambda.den));
                if let Some(e) = &j.lambda.excluded {
                    lt.insert("excluded".into(), poly_out(e));
                }
                jt.insert("lambda".into(), Value::Table(lt));
                jt.insert("directions".into(), poly_matrix_out(&j.gamma.directions));
                jt.insert("mu".into(), measure_out(&j.mu));
                Value::Table(jt)
            })
            .collect();
        t.insert("jumps".into(), Value::Array(jumps));
    }
    if !tr.pole_corrections.is_empty() {
        let cs = tr
            .pole_corrections
            .iter()
            .map(|c| {
                let mut ct = Table::new();
                ct.insert("locus".into(), poly_out(&c.locus));
                ct.insert("matrix".into(), poly_matrix_out(&c.matrix));
                Value::Table(ct)
            })
            .collect();
        t.insert("pole_corrections".into(), Value::Array(cs));
    }
    t
}

fn write_app(a: &Application) -> Table {
    let mut t = Table::new();
    match a {
        Application::Recovery { payoff } => {
            t.insert("kind".into(), Value::String("recovery".into()));
            let p = match payoff {
                Payoff::Identity => Value::String("identity".into()),
                Payoff::Square => Value::String("square".into()),
                Payoff::General(p) => poly_out(p),
            };
            t.insert("payoff".into(), p);
        }
        Application::Spt(m) => {
            t.insert("kind".into(), Value::String("spt".into()));
            t.insert("beta".into(), num_out(m.beta));
            let jumps: Vec<Value> = m
                .jumps
                .iter()
                .enumerate()
                .filter_map(|(i, j)| {
                    j.as_ref().map(|j| {
                        let mut jt = Table::new();
                        jt.insert("i".into(), Value::Integer(i as i64 + 1));
                        jt.insert("q".into(), vec_out(&j.q));
                        jt.insert("mu".into(), measure_out(&j.mu));
                        Value::Table(jt)
                    })
                })
                .collect();
            if !jumps.is_empty() {
                t.insert("jumps".into(), Value::Array(jumps));
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    const JACOBI: &str = r#"
version = "1"
space = "interval"
[typed]
type = "interval-type-0"
a = 0.2
kappa = 1
theta = "1/2"
"#;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("9/2"), Ok(4.5));
        assert_eq!(parse_number(" inf"), Ok(f64::INFINITY));
        assert_eq!(parse_number("-0.25"), Ok(-0.25));
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
    }

    #[test]
    fn typed_round_trip() {
        let doc = SpecDocument::parse(JACOBI).unwrap();
        assert_eq!(doc.typed_spec(), Some(&TypedSpec::IntervalType0 { a: 0.2, kappa: 1.0, theta: 0.5 }));
        let again = SpecDocument::parse(&doc.to_toml_string()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn raw_round_trip() {
        let doc = SpecDocument::parse(
            r#"
version = "1"
space = "interval"
[raw]
diffusion = [["0"]]
drift = ["1 - 2*x"]
[[raw.jumps]]
lambda = { num = "1", den = "x*(x+1)", excluded = "x" }
directions = [["-x"], ["1-x"]]
mu = { atoms = [{ point = [1, 0], weight = 1 }] }
"#,
        )
        .unwrap();
        let t = doc.triplet().unwrap();
        assert_eq!(t.jumps.len(), 1);
        assert!((t.jumps[0].lambda.eval(&[0.5]) - 1.0 / 0.75).abs() < 1e-15);
        let again = SpecDocument::parse(&doc.to_toml_string()).unwrap();
        assert_eq!(again.triplet().unwrap(), t);
    }

    #[test]
    fn malformed() {
        assert!(matches!(SpecDocument::parse("version = "), Err(SpecError::Syntax(_))));
        let both = format!("{JACOBI}\n[raw]\ndrift = [\"0\"]\n");
        assert!(SpecDocument::parse(&both).is_err());
        let wrong_version = JACOBI.replace("\"1\"", "\"2\"");
        assert!(SpecDocument::parse(&wrong_version).is_err());
        let missing = JACOBI.replace("kappa = 1\n", "");
        let e = SpecDocument::parse(&missing).unwrap_err();
        assert!(e.to_string().contains("typed.kappa"), "{e}");
    }

    #[test]
    fn spt_document() {
        let doc = SpecDocument::parse(
            r#"
version = "1"
space = "simplex:3"
[application]
kind = "spt"
beta = 0.5
[[application.jumps]]
i = 1
q = [0.5, 0.5, 0.5]
mu = { atoms = [{ point = [0.7, 0.15, 0.15], weight = 1 }] }
"#,
        )
        .unwrap();
        let m = doc.spt_model().unwrap();
        assert!(m.jumps[0].is_some() && m.jumps[1].is_none());
        assert_eq!(doc.triplet().unwrap().jumps.len(), 1);
        assert_eq!(SpecDocument::parse(&doc.to_toml_string()).unwrap(), doc);
    }
}
