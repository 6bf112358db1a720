//! JSON operator configs, criterion requests and vector specs.
//!
//! An operator config is
//! `{"index_set": "N" | "Z" | "none", "norm": <norm>, "family": <family>}`.
//! With `"none"` the family must be constant and the config describes that
//! single operator (no `norm`). Families:
//!
//! - `{"kind": "scalar_weights", "weights": {"k": w}, "tail": w | {"formula": name, ..}}`
//! - `{"kind": "constant_T", "T": <component>}`
//! - `{"kind": "matrix_table", "table": {"k": <component>}, "tail": <component>}`
//! - `{"kind": "tree", "tree": name, "overrides": {..}, "norm": <norm>}`
//! - `{"kind": "graph_shift", "truncation": M}`
//!
//! Components are `scalar`, `matrix`, `tree`, `graph_shift` or `block`
//! (a nested operator config). Unknown keys are rejected everywhere.
//! Scalars are strings (`"3/4"`, `"0.125"`, `"f:0.1"`) or integers.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::criteria::{IntSet, TailClaim};
use crate::dynamics::{Operator, Target};
use crate::error::{Error, Result};
use crate::graph::GraphShift;
use crate::linalg::Matrix;
use crate::scalar::{format_f64_17, Scalar};
use crate::shift::{BlockShift, ComponentOperator, Family, Tail, WeightFormula};
use crate::spaces::{check_keys, Address, IndexSet, NormKind, SeqVector, SpaceSpec};
use crate::tree::{SegmentedTreeShift, TreeKind};

fn cfg(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| cfg(path, "expected an object"))
}

fn keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    check_keys(obj, allowed, path).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => other,
    })
}

fn field<'a>(obj: &'a Map<String, Value>, k: &str, path: &str) -> Result<&'a Value> {
    obj.get(k).ok_or_else(|| cfg(path, format!("missing field `{k}`")))
}

fn str_field<'a>(obj: &'a Map<String, Value>, k: &str, path: &str) -> Result<&'a str> {
    field(obj, k, path)?
        .as_str()
        .ok_or_else(|| cfg(&format!("{path}.{k}"), "expected a string"))
}

/// Scalar from a config value.
pub fn scalar_from(v: &Value, path: &str) -> Result<Scalar> {
    match v {
        Value::String(s) => Scalar::parse(s).map_err(|e| cfg(path, e)),
        Value::Number(n) if n.is_i64() => Ok(Scalar::int(n.as_i64().unwrap())),
        Value::Number(n) => Scalar::parse(&n.to_string()).map_err(|e| cfg(path, e)),
        _ => Err(cfg(path, "expected a scalar")),
    }
}

/// Lossless text form: exact values as decimals or `p/q`, floats as
/// `f:` plus 17 significant digits.
pub fn scalar_to(x: &Scalar) -> Value {
    match x {
        Scalar::Exact(_) => Value::String(x.to_decimal_string()),
        Scalar::Float(f) => Value::String(format!("f:{}", format_f64_17(*f))),
    }
}

fn norm_from(v: &Value, path: &str) -> Result<NormKind> {
    NormKind::from_json(v).map_err(|e| cfg(path, e))
}

fn index_from(s: &str, path: &str) -> Result<Option<IndexSet>> {
    if s == "none" {
        return Ok(None);
    }
    IndexSet::parse(s).map(Some).map_err(|e| cfg(path, e))
}

fn index_key(k: &str, path: &str) -> Result<i64> {
    k.trim()
        .parse::<i64>()
        .map_err(|_| cfg(path, format!("table key `{k}` is not an integer")))
}

// ---------------------------------------------------------------- parsing

/// Builds an operator from a config value.
pub fn operator_from_json(v: &Value) -> Result<Operator> {
    operator_at(v, "$")
}

/// Parses config text; syntax errors carry line and column.
pub fn load_operator(text: &str) -> Result<Operator> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    operator_from_json(&v)
}

fn operator_at(v: &Value, path: &str) -> Result<Operator> {
    let obj = object(v, path)?;
    keys(obj, &["index_set", "norm", "family"], path)?;
    let set = index_from(str_field(obj, "index_set", path)?, &format!("{path}.index_set"))?;
    let fpath = format!("{path}.family");
    match set {
        None => {
            if obj.contains_key("norm") {
                return Err(cfg(path, "`norm` applies to sums only; drop it with index_set \"none\""));
            }
            let fam = family_at(field(obj, "family", path)?, &fpath)?;
            match fam {
                Family::Constant(op) => Operator::new(op).map_err(|e| cfg(&fpath, e)),
                Family::Table { .. } => Err(cfg(&fpath, "index_set \"none\" needs a constant family")),
            }
        }
        Some(set) => {
            let outer = norm_from(field(obj, "norm", path)?, &format!("{path}.norm"))?;
            let fam = family_at(field(obj, "family", path)?, &fpath)?;
            BlockShift::new(set, fam, outer).map(Operator::block).map_err(|e| cfg(path, e))
        }
    }
}

fn family_at(v: &Value, path: &str) -> Result<Family> {
    let obj = object(v, path)?;
    match str_field(obj, "kind", path)? {
        "scalar_weights" => {
            keys(obj, &["kind", "weights", "tail"], path)?;
            let mut table = BTreeMap::new();
            if let Some(w) = obj.get("weights") {
                for (k, x) in object(w, &format!("{path}.weights"))? {
                    let p = format!("{path}.weights.{k}");
                    table.insert(index_key(k, &p)?, scalar_from(x, &p)?);
                }
            }
            let tpath = format!("{path}.tail");
            let tail = match field(obj, "tail", path)? {
                t @ Value::Object(_) => formula_tail(t, &tpath)?,
                t => Tail::Constant(ComponentOperator::scalar(scalar_from(t, &tpath)?)),
            };
            Ok(Family::scalar_table(table, tail))
        }
        "constant_T" => {
            keys(obj, &["kind", "T"], path)?;
            Ok(Family::Constant(component_at(field(obj, "T", path)?, &format!("{path}.T"))?))
        }
        "matrix_table" => {
            keys(obj, &["kind", "table", "tail"], path)?;
            let mut entries = BTreeMap::new();
            for (k, c) in object(field(obj, "table", path)?, &format!("{path}.table"))? {
                let p = format!("{path}.table.{k}");
                entries.insert(index_key(k, &p)?, component_at(c, &p)?);
            }
            let tail = Tail::Constant(component_at(field(obj, "tail", path)?, &format!("{path}.tail"))?);
            Ok(Family::Table { entries, tail })
        }
        "tree" | "graph_shift" => Ok(Family::Constant(component_at(v, path)?)),
        other => Err(cfg(path, format!("unknown family kind `{other}`"))),
    }
}

fn formula_tail(v: &Value, path: &str) -> Result<Tail> {
    let obj = object(v, path)?;
    keys(obj, &["formula", "p", "space"], path)?;
    let formula = match str_field(obj, "formula", path)? {
        "chaos_gap" => WeightFormula::ChaosGap,
        "one_plus_inverse" => WeightFormula::OnePlusInverse,
        "root_ratio" => {
            let p = scalar_from(field(obj, "p", path)?, &format!("{path}.p"))?;
            match p {
                Scalar::Exact(q) => WeightFormula::RootRatio { p: q },
                Scalar::Float(_) => return Err(cfg(&format!("{path}.p"), "p must be rational")),
            }
        }
        other => return Err(cfg(path, format!("unknown formula `{other}`"))),
    };
    if !matches!(formula, WeightFormula::RootRatio { .. }) && obj.contains_key("p") {
        return Err(cfg(path, "`p` only applies to root_ratio"));
    }
    let space = match obj.get("space") {
        None => Arc::new(SpaceSpec::Scalar),
        Some(s) => Arc::new(SpaceSpec::from_json(s).map_err(|e| cfg(&format!("{path}.space"), e))?),
    };
    Ok(Tail::Formula { formula, space })
}

fn component_at(v: &Value, path: &str) -> Result<ComponentOperator> {
    let obj = object(v, path)?;
    match str_field(obj, "kind", path)? {
        "scalar" => {
            keys(obj, &["kind", "w", "space"], path)?;
            let w = scalar_from(field(obj, "w", path)?, &format!("{path}.w"))?;
            let space = match obj.get("space") {
                None => Arc::new(SpaceSpec::Scalar),
                Some(s) => Arc::new(SpaceSpec::from_json(s).map_err(|e| cfg(&format!("{path}.space"), e))?),
            };
            Ok(ComponentOperator::ScalarWeight { w, space })
        }
        "matrix" => {
            keys(obj, &["kind", "rows", "dom", "cod"], path)?;
            let rows = field(obj, "rows", path)?
                .as_array()
                .ok_or_else(|| cfg(&format!("{path}.rows"), "expected an array of rows"))?;
            let mut data = Vec::new();
            let mut cols = None;
            for (i, r) in rows.iter().enumerate() {
                let rp = format!("{path}.rows[{i}]");
                let r = r.as_array().ok_or_else(|| cfg(&rp, "expected an array"))?;
                if *cols.get_or_insert(r.len()) != r.len() {
                    return Err(cfg(&rp, "rows differ in length"));
                }
                for (j, x) in r.iter().enumerate() {
                    data.push(scalar_from(x, &format!("{rp}[{j}]"))?);
                }
            }
            let m = Matrix::new(rows.len(), cols.unwrap_or(0), data).map_err(|e| cfg(path, e))?;
            let dom = norm_from(field(obj, "dom", path)?, &format!("{path}.dom"))?;
            let cod = norm_from(field(obj, "cod", path)?, &format!("{path}.cod"))?;
            Ok(ComponentOperator::matrix(m, dom, cod))
        }
        "tree" => {
            keys(obj, &["kind", "tree", "overrides", "norm"], path)?;
            let kind = TreeKind::from_json(str_field(obj, "tree", path)?, obj.get("overrides")).map_err(|e| cfg(path, e))?;
            let norm = norm_from(field(obj, "norm", path)?, &format!("{path}.norm"))?;
            let t = SegmentedTreeShift::build(kind, norm).map_err(|e| cfg(path, e))?;
            Ok(ComponentOperator::Tree(Arc::new(t)))
        }
        "graph_shift" => {
            keys(obj, &["kind", "truncation"], path)?;
            let g = match obj.get("truncation") {
                None => GraphShift::default(),
                Some(m) => {
                    let m = m
                        .as_u64()
                        .ok_or_else(|| cfg(&format!("{path}.truncation"), "expected a positive integer"))?;
                    GraphShift::new(m).map_err(|e| cfg(path, e))?
                }
            };
            Ok(ComponentOperator::Graph(Arc::new(g)))
        }
        "block" => {
            keys(obj, &["kind", "index_set", "norm", "family"], path)?;
            let mut inner = obj.clone();
            inner.remove("kind");
            let op = operator_at(&Value::Object(inner), path)?;
            Ok(op.component().clone())
        }
        other => Err(cfg(path, format!("unknown component kind `{other}`"))),
    }
}

// ---------------------------------------------------------------- export

/// Config JSON reproducing `op`. Custom formulas and custom trees have no
/// config form.
pub fn operator_to_json(op: &Operator) -> Result<Value> {
    match op.component() {
        ComponentOperator::Nested(b) => block_to_json(b),
        c => Ok(json!({"index_set": "none", "family": constant_family(c)?})),
    }
}

fn block_to_json(b: &BlockShift) -> Result<Value> {
    let family = match b.family() {
        Family::Constant(c) => constant_family(c)?,
        Family::Table { entries, tail } => table_family(entries, tail)?,
    };
    Ok(json!({
        "index_set": b.index_set().as_str(),
        "norm": b.outer_norm().to_json(),
        "family": family,
    }))
}

fn constant_family(c: &ComponentOperator) -> Result<Value> {
    Ok(match c {
        ComponentOperator::Tree(_) | ComponentOperator::Graph(_) => component_to_json(c)?,
        _ => json!({"kind": "constant_T", "T": component_to_json(c)?}),
    })
}

fn table_family(entries: &BTreeMap<i64, ComponentOperator>, tail: &Tail) -> Result<Value> {
    let scalar_only = entries
        .values()
        .all(|c| matches!(c, ComponentOperator::ScalarWeight { space, .. } if **space == SpaceSpec::Scalar));
    match tail {
        Tail::Formula { formula, space } if scalar_only => {
            let mut t = match formula {
                WeightFormula::ChaosGap => json!({"formula": "chaos_gap"}),
                WeightFormula::OnePlusInverse => json!({"formula": "one_plus_inverse"}),
                WeightFormula::RootRatio { p } => json!({"formula": "root_ratio", "p": scalar_to(&Scalar::Exact(p.clone()))}),
                WeightFormula::Custom { name, .. } => {
                    return Err(Error::Unsupported(format!("custom formula `{name}` has no config form")))
                }
            };
            if **space != SpaceSpec::Scalar {
                t["space"] = space.to_json();
            }
            Ok(json!({"kind": "scalar_weights", "weights": scalar_weights(entries), "tail": t}))
        }
        Tail::Constant(ComponentOperator::ScalarWeight { w, space }) if scalar_only && **space == SpaceSpec::Scalar => {
            Ok(json!({"kind": "scalar_weights", "weights": scalar_weights(entries), "tail": scalar_to(w)}))
        }
        Tail::Constant(c) => {
            let mut table = Map::new();
            for (k, e) in entries {
                table.insert(k.to_string(), component_to_json(e)?);
            }
            Ok(json!({"kind": "matrix_table", "table": table, "tail": component_to_json(c)?}))
        }
        Tail::Formula { .. } => Err(Error::Unsupported("formula tails need scalar table entries".into())),
    }
}

fn scalar_weights(entries: &BTreeMap<i64, ComponentOperator>) -> Value {
    let m: Map<String, Value> = entries
        .iter()
        .filter_map(|(k, c)| match c {
            ComponentOperator::ScalarWeight { w, .. } => Some((k.to_string(), scalar_to(w))),
            _ => None,
        })
        .collect();
    Value::Object(m)
}

fn component_to_json(c: &ComponentOperator) -> Result<Value> {
    Ok(match c {
        ComponentOperator::ScalarWeight { w, space } => {
            let mut v = json!({"kind": "scalar", "w": scalar_to(w)});
            if **space != SpaceSpec::Scalar {
                v["space"] = space.to_json();
            }
            v
        }
        ComponentOperator::Matrix { m, dom, cod } => {
            let rows: Vec<Value> = (0..m.rows())
                .map(|i| Value::Array((0..m.cols()).map(|j| scalar_to(m.get(i, j))).collect()))
                .collect();
            json!({"kind": "matrix", "rows": rows, "dom": dom.to_json(), "cod": cod.to_json()})
        }
        ComponentOperator::Tree(t) => {
            if matches!(t.kind(), TreeKind::Custom(_)) {
                return Err(Error::Unsupported("custom trees have no config form".into()));
            }
            let tk = t.kind().to_json();
            json!({"kind": "tree", "tree": tk["tree"], "overrides": tk["overrides"], "norm": t.norm().to_json()})
        }
        ComponentOperator::Graph(g) => json!({"kind": "graph_shift", "truncation": g.truncation()}),
        ComponentOperator::Nested(b) => {
            let mut v = block_to_json(b)?;
            v["kind"] = json!("block");
            v
        }
    })
}

// ---------------------------------------------------------------- vectors

/// Parses a vector spec against `space`:
///
/// - `delta:ADDR` or `delta:ADDR:VALUE`
/// - `ADDR=VALUE;ADDR=VALUE;..`
/// - a JSON array of `{address, value}` objects
///
/// Addresses use the `3/v(1,2)@4/c1` text form.
pub fn parse_vector_spec(space: &Arc<SpaceSpec>, spec: &str) -> Result<SeqVector> {
    let s = spec.trim();
    if s.starts_with('[') {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(format!("vector JSON: {e}")))?;
        return SeqVector::from_json(space.clone(), &v);
    }
    if let Some(rest) = s.strip_prefix("delta:") {
        // the address may itself contain ':' only inside v(..)@.., which it never does
        let (addr, value) = match rest.rsplit_once(':') {
            Some((a, v)) => (a, Scalar::parse(v)?),
            None => (rest, Scalar::one()),
        };
        return SeqVector::delta(space.clone(), Address::parse(addr)?, value);
    }
    let mut items = Vec::new();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (a, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("vector entry `{part}` needs ADDR=VALUE")))?;
        items.push((Address::parse(a)?, Scalar::parse(v)?));
    }
    if items.is_empty() {
        return Err(Error::Parse("empty vector spec".into()));
    }
    SeqVector::from_entries(space.clone(), items)
}

// ---------------------------------------------------------------- requests

/// A criterion invocation:
/// `{"criterion": name, "horizon": n, "targets": [..], "vector": spec,
///   "claims": {"backward": claim, "forward": claim}, "n0": n, "sets": [..]}`.
///
/// Targets are `{"index": j | null, "center": vector, "radius": r}`; the
/// center is a vector spec string or a JSON vector, in the component space
/// when `index` is given.
#[derive(Clone, Debug)]
pub struct CriterionRequest {
    pub criterion: String,
    pub horizon: u64,
    pub targets: Vec<Target>,
    pub vector: Option<SeqVector>,
    pub backward: Option<TailClaim>,
    pub forward: Option<TailClaim>,
    pub n0: Option<u64>,
    pub sets: Vec<IntSet>,
}

pub const CRITERIA: [&str; 7] = [
    "transitivity",
    "mixing",
    "chaos",
    "fhc-necessary",
    "kitai",
    "fhc-criterion",
    "d-criterion",
];

impl CriterionRequest {
    pub fn from_json(op: &Operator, v: &Value) -> Result<Self> {
        let obj = object(v, "$")?;
        keys(obj, &["criterion", "horizon", "targets", "vector", "claims", "n0", "sets"], "$")?;
        let criterion = str_field(obj, "criterion", "$")?.to_string();
        if !CRITERIA.contains(&criterion.as_str()) {
            return Err(cfg("$.criterion", format!("unknown criterion `{criterion}`")));
        }
        let horizon = field(obj, "horizon", "$")?
            .as_u64()
            .filter(|h| *h >= 1)
            .ok_or_else(|| cfg("$.horizon", "expected an integer >= 1"))?;
        let mut targets = Vec::new();
        if let Some(ts) = obj.get("targets") {
            let ts = ts.as_array().ok_or_else(|| cfg("$.targets", "expected an array"))?;
            for (i, t) in ts.iter().enumerate() {
                targets.push(target_at(op, t, &format!("$.targets[{i}]"))?);
            }
        }
        let vector = match obj.get("vector") {
            None => None,
            Some(v) => Some(vector_value(op.space(), v, "$.vector")?),
        };
        let (mut backward, mut forward) = (None, None);
        if let Some(c) = obj.get("claims") {
            let co = object(c, "$.claims")?;
            keys(co, &["backward", "forward"], "$.claims")?;
            if let Some(b) = co.get("backward") {
                backward = Some(TailClaim::from_json(b).map_err(|e| cfg("$.claims.backward", e))?);
            }
            if let Some(f) = co.get("forward") {
                forward = Some(TailClaim::from_json(f).map_err(|e| cfg("$.claims.forward", e))?);
            }
        }
        let n0 = match obj.get("n0") {
            None => None,
            Some(n) => Some(n.as_u64().ok_or_else(|| cfg("$.n0", "expected an integer"))?),
        };
        let mut sets = Vec::new();
        if let Some(ss) = obj.get("sets") {
            for (i, s) in ss
                .as_array()
                .ok_or_else(|| cfg("$.sets", "expected an array"))?
                .iter()
                .enumerate()
            {
                sets.push(IntSet::from_json(s).map_err(|e| cfg(&format!("$.sets[{i}]"), e))?);
            }
        }
        Ok(CriterionRequest {
            criterion,
            horizon,
            targets,
            vector,
            backward,
            forward,
            n0,
            sets,
        })
    }
}

fn vector_value(space: &Arc<SpaceSpec>, v: &Value, path: &str) -> Result<SeqVector> {
    match v {
        Value::String(s) => parse_vector_spec(space, s).map_err(|e| cfg(path, e)),
        Value::Array(_) => SeqVector::from_json(space.clone(), v).map_err(|e| cfg(path, e)),
        _ => Err(cfg(path, "expected a vector spec string or array")),
    }
}

fn target_at(op: &Operator, v: &Value, path: &str) -> Result<Target> {
    let obj = object(v, path)?;
    keys(obj, &["index", "center", "radius"], path)?;
    let index = match obj.get("index") {
        None | Some(Value::Null) => None,
        Some(i) => Some(i.as_i64().ok_or_else(|| cfg(&format!("{path}.index"), "expected an integer"))?),
    };
    let space = match (index, op.as_block()) {
        (Some(j), Some(b)) => b.component_space(j),
        (Some(_), None) => return Err(cfg(&format!("{path}.index"), "component targets need a block shift")),
        (None, _) => op.space().clone(),
    };
    let center = vector_value(&space, field(obj, "center", path)?, &format!("{path}.center"))?;
    let radius = scalar_from(field(obj, "radius", path)?, &format!("{path}.radius"))?;
    Target::new(index, center, radius).map_err(|e| cfg(path, e))
}
