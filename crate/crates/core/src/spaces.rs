//! Component spaces, hierarchical addresses and finitely supported vectors.
//!
//! A vector in a nested sum such as `l^2(l^1(V), Z)` is stored as a sparse
//! map from addresses (`[Seq(k), Vertex{..}]`) to nonzero scalars. Norms are
//! evaluated recursively, innermost component first.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Scalar};
use crate::tree::SegmentedTreeShift;

/// Norm of an l^p-sum (`1 <= p < inf`) or of a c_0-sum (sup norm).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormKind {
    Lp(BigRational),
    Sup,
}

impl NormKind {
    pub fn lp(p: BigRational) -> Result<Self> {
        if p < BigRational::one() {
            return Err(Error::Argument(format!("l^p needs p >= 1, got {p}")));
        }
        Ok(NormKind::Lp(p))
    }

    pub fn l1() -> Self {
        NormKind::Lp(BigRational::one())
    }

    pub fn lp_int(p: i64) -> Self {
        Self::lp(BigRational::from_integer(p.into())).expect("p >= 1")
    }

    pub fn is_l1(&self) -> bool {
        matches!(self, NormKind::Lp(p) if p.is_one())
    }

    /// `p` as a float; `inf` for the sup norm.
    pub fn p_f64(&self) -> f64 {
        match self {
            NormKind::Lp(p) => rational_to_f64(p),
            NormKind::Sup => f64::INFINITY,
        }
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1` (`inf` for `p = 1`).
    pub fn dual_exponent(&self) -> f64 {
        match self {
            NormKind::Sup => 1.0,
            NormKind::Lp(p) if p.is_one() => f64::INFINITY,
            NormKind::Lp(p) => {
                let p = rational_to_f64(p);
                p / (p - 1.0)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            NormKind::Lp(p) => json!({"kind": "lp", "p": Scalar::Exact(p.clone()).to_decimal_string()}),
            NormKind::Sup => json!({"kind": "sup"}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("norm must be an object".into()))?;
        check_keys(obj, &["kind", "p"], "norm")?;
        match obj.get("kind").and_then(Value::as_str) {
            Some("sup") => Ok(NormKind::Sup),
            Some("lp") => {
                let p = match obj.get("p") {
                    Some(Value::String(s)) => Scalar::parse(s)?,
                    Some(Value::Number(n)) => Scalar::parse(&n.to_string())?,
                    _ => return Err(Error::Config("norm.p missing".into())),
                };
                match p {
                    Scalar::Exact(q) => NormKind::lp(q),
                    Scalar::Float(_) => Err(Error::Config("norm.p must be rational".into())),
                }
            }
            other => Err(Error::Config(format!("unknown norm kind {other:?}"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Lp(p) => write!(f, "l^{}", Scalar::Exact(p.clone())),
            NormKind::Sup => f.write_str("c0"),
        }
    }
}

/// `N = {1, 2, ...}` or `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexSet {
    Unilateral,
    Bilateral,
}

impl IndexSet {
    pub fn contains(&self, k: i64) -> bool {
        match self {
            IndexSet::Unilateral => k >= 1,
            IndexSet::Bilateral => true,
        }
    }

    /// Whether `T_k` exists (`J* = {2,3,..}` in the unilateral case).
    pub fn has_operator(&self, k: i64) -> bool {
        match self {
            IndexSet::Unilateral => k >= 2,
            IndexSet::Bilateral => true,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            IndexSet::Unilateral => "N",
            IndexSet::Bilateral => "Z",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(IndexSet::Unilateral),
            "Z" => Ok(IndexSet::Bilateral),
            _ => Err(Error::Config(format!("index_set must be \"N\" or \"Z\", got {s:?}"))),
        }
    }
}

/// One coordinate of an address.
///
/// Graph vertices reuse `Vertex`: the spine vector `e_n` is `branch = []`,
/// `pos = n`, and `e^{(n,k)}_j` is `branch = [n, k]`, `pos = j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Seq(i64),
    Vertex { branch: Vec<u64>, pos: u64 },
    Coord(u32),
}

impl Token {
    pub fn vertex(branch: &[u64], pos: u64) -> Token {
        Token::Vertex {
            branch: branch.to_vec(),
            pos,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Token::Seq(k) => json!({ "seq": k }),
            Token::Vertex { branch, pos } => json!({ "branch": branch, "pos": pos }),
            Token::Coord(i) => json!({ "coord": i }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Token> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse(format!("address token must be an object: {v}")))?;
        if let Some(k) = obj.get("seq") {
            check_keys(obj, &["seq"], "token")?;
            return k
                .as_i64()
                .map(Token::Seq)
                .ok_or_else(|| Error::Parse("seq must be an integer".into()));
        }
        if let Some(i) = obj.get("coord") {
            check_keys(obj, &["coord"], "token")?;
            return i
                .as_u64()
                .and_then(|i| u32::try_from(i).ok())
                .map(Token::Coord)
                .ok_or_else(|| Error::Parse("coord must be a positive integer".into()));
        }
        check_keys(obj, &["branch", "pos"], "token")?;
        let branch = obj
            .get("branch")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("vertex needs a branch array".into()))?
            .iter()
            .map(|b| b.as_u64().ok_or_else(|| Error::Parse("branch entries must be integers".into())))
            .collect::<Result<Vec<_>>>()?;
        let pos = obj
            .get("pos")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("vertex needs pos".into()))?;
        Ok(Token::Vertex { branch, pos })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Seq(k) => write!(f, "{k}"),
            Token::Vertex { branch, pos } => {
                let b: Vec<String> = branch.iter().map(u64::to_string).collect();
                write!(f, "v({})@{pos}", b.join(","))
            }
            Token::Coord(i) => write!(f, "c{i}"),
        }
    }
}

/// Hierarchical address: outermost token first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub Vec<Token>);

impl Address {
    pub fn new(tokens: Vec<Token>) -> Self {
        Address(tokens)
    }

    pub fn seq(k: i64) -> Self {
        Address(vec![Token::Seq(k)])
    }

    pub fn vertex(branch: &[u64], pos: u64) -> Self {
        Address(vec![Token::vertex(branch, pos)])
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn prefixed(&self, head: Token) -> Address {
        let mut t = Vec::with_capacity(self.0.len() + 1);
        t.push(head);
        t.extend(self.0.iter().cloned());
        Address(t)
    }

    /// Outer sum index and the remaining address, if the head is `Seq`.
    pub fn split_seq(&self) -> Option<(i64, Address)> {
        match self.0.first() {
            Some(Token::Seq(k)) => Some((*k, Address(self.0[1..].to_vec()))),
            _ => None,
        }
    }

    /// Parses `3/v(1,2)@4/c1`; the empty string is the scalar address.
    pub fn parse(s: &str) -> Result<Address> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Address::default());
        }
        s.split('/').map(parse_token).collect::<Result<Vec<_>>>().map(Address)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(Token::to_json).collect())
    }

    pub fn from_json(v: &Value) -> Result<Address> {
        v.as_array()
            .ok_or_else(|| Error::Parse("address must be an array".into()))?
            .iter()
            .map(Token::from_json)
            .collect::<Result<Vec<_>>>()
            .map(Address)
    }
}

fn parse_token(t: &str) -> Result<Token> {
    let t = t.trim();
    let bad = || Error::Parse(format!("bad address token `{t}`"));
    if let Some(rest) = t.strip_prefix('c') {
        return rest.parse::<u32>().map(Token::Coord).map_err(|_| bad());
    }
    if let Some(rest) = t.strip_prefix("v(") {
        let (inside, pos) = rest.split_once(")@").ok_or_else(bad)?;
        let branch = if inside.trim().is_empty() {
            Vec::new()
        } else {
            inside
                .split(',')
                .map(|b| b.trim().parse::<u64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        let pos = pos.trim().parse::<u64>().map_err(|_| bad())?;
        return Ok(Token::Vertex { branch, pos });
    }
    t.parse::<i64>().map(Token::Seq).map_err(|_| bad())
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("()");
        }
        let parts: Vec<String> = self.0.iter().map(Token::to_string).collect();
        f.write_str(&parts.join("/"))
    }
}

/// Component family of a sum space.
#[derive(Clone, Debug)]
pub enum Components {
    Uniform(Arc<SpaceSpec>),
    /// `X_k` from the table, `default` elsewhere.
    Table {
        entries: BTreeMap<i64, Arc<SpaceSpec>>,
        default: Arc<SpaceSpec>,
    },
}

impl Components {
    pub fn get(&self, k: i64) -> &Arc<SpaceSpec> {
        match self {
            Components::Uniform(x) => x,
            Components::Table { entries, default } => entries.get(&k).unwrap_or(default),
        }
    }
}

/// Recursive description of a Banach space built from scalars,
/// finite-dimensional blocks, trees and countable sums.
#[derive(Clone, Debug)]
pub enum SpaceSpec {
    Scalar,
    FiniteDim { dim: u32, norm: NormKind },
    Tree(Arc<SegmentedTreeShift>),
    /// `l^1` over the vertex set of the graph shift.
    Graph,
    Sum {
        components: Components,
        index_set: IndexSet,
        norm: NormKind,
    },
}

impl PartialEq for SpaceSpec {
    fn eq(&self, other: &Self) -> bool {
        use SpaceSpec::*;
        match (self, other) {
            (Scalar, Scalar) | (Graph, Graph) => true,
            (FiniteDim { dim: a, norm: na }, FiniteDim { dim: b, norm: nb }) => a == b && na == nb,
            (Tree(a), Tree(b)) => a.same_tree(b),
            (
                Sum {
                    components: ca,
                    index_set: ia,
                    norm: na,
                },
                Sum {
                    components: cb,
                    index_set: ib,
                    norm: nb,
                },
            ) => {
                ia == ib
                    && na == nb
                    && match (ca, cb) {
                        (Components::Uniform(x), Components::Uniform(y)) => x == y,
                        (
                            Components::Table { entries: ea, default: da },
                            Components::Table { entries: eb, default: db },
                        ) => ea == eb && da == db,
                        _ => false,
                    }
            }
            _ => false,
        }
    }
}

impl SpaceSpec {
    pub fn sum(component: SpaceSpec, index_set: IndexSet, norm: NormKind) -> SpaceSpec {
        SpaceSpec::Sum {
            components: Components::Uniform(Arc::new(component)),
            index_set,
            norm,
        }
    }

    /// Norm used to combine the entries at this level.
    pub fn norm_kind(&self) -> NormKind {
        match self {
            SpaceSpec::Scalar => NormKind::l1(),
            SpaceSpec::FiniteDim { norm, .. } => norm.clone(),
            SpaceSpec::Tree(t) => t.norm().clone(),
            SpaceSpec::Graph => NormKind::l1(),
            SpaceSpec::Sum { norm, .. } => norm.clone(),
        }
    }

    pub fn index_set(&self) -> Option<IndexSet> {
        match self {
            SpaceSpec::Sum { index_set, .. } => Some(*index_set),
            _ => None,
        }
    }

    pub fn component(&self, k: i64) -> Option<&Arc<SpaceSpec>> {
        match self {
            SpaceSpec::Sum { components, .. } => Some(components.get(k)),
            _ => None,
        }
    }

    /// Nesting depth of sums (0 for leaf spaces).
    pub fn depth(&self) -> usize {
        match self {
            SpaceSpec::Sum { components, .. } => {
                let inner = match components {
                    Components::Uniform(x) => x.depth(),
                    Components::Table { entries, default } => entries
                        .values()
                        .map(|x| x.depth())
                        .chain(std::iter::once(default.depth()))
                        .max()
                        .unwrap_or(0),
                };
                1 + inner
            }
            _ => 0,
        }
    }

    /// Checks that `tokens` addresses a basis element of this space.
    pub fn validate(&self, tokens: &[Token]) -> Result<()> {
        let fail = |reason: &str| Error::Address {
            address: Address(tokens.to_vec()).to_string(),
            reason: reason.to_string(),
        };
        match self {
            SpaceSpec::Scalar => {
                if tokens.is_empty() {
                    Ok(())
                } else {
                    Err(fail("scalar space takes the empty address"))
                }
            }
            SpaceSpec::FiniteDim { dim, .. } => match tokens {
                [Token::Coord(i)] if *i >= 1 && *i <= *dim => Ok(()),
                _ => Err(fail(&format!("expected one coordinate in 1..={dim}"))),
            },
            SpaceSpec::Tree(t) => match tokens {
                [Token::Vertex { branch, pos }] => t
                    .validate_vertex(branch, *pos)
                    .map_err(|e| fail(&e.to_string())),
                _ => Err(fail("expected one tree vertex")),
            },
            SpaceSpec::Graph => match tokens {
                [Token::Vertex { branch, pos }] => {
                    let ok = *pos >= 1
                        && (branch.is_empty() || (branch.len() == 2 && branch.iter().all(|b| *b >= 1)));
                    if ok {
                        Ok(())
                    } else {
                        Err(fail("graph vertices are v()@n or v(n,k)@j with n,k,j >= 1"))
                    }
                }
                _ => Err(fail("expected one graph vertex")),
            },
            SpaceSpec::Sum {
                components,
                index_set,
                ..
            } => match tokens.split_first() {
                Some((Token::Seq(k), rest)) => {
                    if !index_set.contains(*k) {
                        return Err(fail(&format!("index {k} outside {}", index_set.as_str())));
                    }
                    components.get(*k).validate(rest).map_err(|e| match e {
                        Error::Address { reason, .. } => fail(&reason),
                        other => other,
                    })
                }
                _ => Err(fail("sum space expects a leading sequence index")),
            },
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            SpaceSpec::Scalar => json!({"kind": "scalar"}),
            SpaceSpec::FiniteDim { dim, norm } => {
                json!({"kind": "finite", "dim": dim, "norm": norm.to_json()})
            }
            SpaceSpec::Tree(t) => {
                let mut v = t.kind().to_json();
                v["kind"] = json!("tree");
                v["norm"] = t.norm().to_json();
                v
            }
            SpaceSpec::Graph => json!({"kind": "graph"}),
            SpaceSpec::Sum {
                components,
                index_set,
                norm,
            } => {
                let mut v = json!({"kind": "sum", "index_set": index_set.as_str(), "norm": norm.to_json()});
                match components {
                    Components::Uniform(x) => v["component"] = x.to_json(),
                    Components::Table { entries, default } => {
                        let table: serde_json::Map<String, Value> =
                            entries.iter().map(|(k, x)| (k.to_string(), x.to_json())).collect();
                        v["components"] = json!({"table": table, "default": default.to_json()});
                    }
                }
                v
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<SpaceSpec> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("space must be an object".into()))?;
        let norm = || -> Result<NormKind> {
            NormKind::from_json(obj.get("norm").ok_or_else(|| Error::Config("space.norm missing".into()))?)
        };
        match obj.get("kind").and_then(Value::as_str) {
            Some("scalar") => {
                check_keys(obj, &["kind"], "space")?;
                Ok(SpaceSpec::Scalar)
            }
            Some("graph") => {
                check_keys(obj, &["kind"], "space")?;
                Ok(SpaceSpec::Graph)
            }
            Some("finite") => {
                check_keys(obj, &["kind", "dim", "norm"], "space")?;
                let dim = obj
                    .get("dim")
                    .and_then(Value::as_u64)
                    .filter(|d| *d >= 1)
                    .ok_or_else(|| Error::Config("finite space needs dim >= 1".into()))?;
                Ok(SpaceSpec::FiniteDim {
                    dim: dim as u32,
                    norm: norm()?,
                })
            }
            Some("tree") => {
                check_keys(obj, &["kind", "tree", "overrides", "norm"], "space")?;
                let name = obj
                    .get("tree")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Config("tree space needs `tree`".into()))?;
                let kind = crate::tree::TreeKind::from_json(name, obj.get("overrides"))?;
                Ok(SpaceSpec::Tree(Arc::new(SegmentedTreeShift::build(kind, norm()?)?)))
            }
            Some("sum") => {
                check_keys(obj, &["kind", "index_set", "norm", "component", "components"], "space")?;
                let index_set = IndexSet::parse(
                    obj.get("index_set")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Config("sum needs index_set".into()))?,
                )?;
                let components = if let Some(c) = obj.get("component") {
                    Components::Uniform(Arc::new(SpaceSpec::from_json(c)?))
                } else {
                    let c = obj
                        .get("components")
                        .and_then(Value::as_object)
                        .ok_or_else(|| Error::Config("sum needs component or components".into()))?;
                    check_keys(c, &["table", "default"], "components")?;
                    let mut entries = BTreeMap::new();
                    if let Some(t) = c.get("table").and_then(Value::as_object) {
                        for (k, x) in t {
                            let k: i64 = k
                                .parse()
                                .map_err(|_| Error::Config(format!("bad component index {k}")))?;
                            entries.insert(k, Arc::new(SpaceSpec::from_json(x)?));
                        }
                    }
                    let default = Arc::new(SpaceSpec::from_json(
                        c.get("default").ok_or_else(|| Error::Config("components.default missing".into()))?,
                    )?);
                    Components::Table { entries, default }
                };
                Ok(SpaceSpec::Sum {
                    components,
                    index_set,
                    norm: norm()?,
                })
            }
            other => Err(Error::Config(format!("unknown space kind {other:?}"))),
        }
    }
}

pub(crate) fn check_keys(obj: &serde_json::Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown field `{k}` in {what}")));
        }
    }
    Ok(())
}

/// Combines component norms with an l^p or sup rule.
///
/// Stays exact for `p = 1`, sup, a single part, and integer `p` whenever the
/// root happens to be rational.
pub fn combine_norms(norm: &NormKind, parts: &[Scalar]) -> Scalar {
    if parts.is_empty() {
        return Scalar::zero();
    }
    if parts.len() == 1 {
        return parts[0].abs();
    }
    match norm {
        NormKind::Sup => parts.iter().map(Scalar::abs).reduce(Scalar::max).unwrap(),
        NormKind::Lp(p) if p.is_one() => parts.iter().fold(Scalar::zero(), |acc, x| acc + x.abs()),
        NormKind::Lp(p) => {
            let all_exact = parts.iter().all(Scalar::is_exact);
            if p.is_integer() && all_exact {
                let e = p.to_integer().to_u32().unwrap_or(u32::MAX);
                if e <= 64 {
                    let mut s = BigRational::zero();
                    for x in parts {
                        let q = x.as_exact().unwrap().abs();
                        s += num_traits::pow(q, e as usize);
                    }
                    if let Some(r) = exact_root(&s, e) {
                        return Scalar::Exact(r);
                    }
                    return Scalar::Float(float_root(&Scalar::Exact(s), e as f64));
                }
            }
            float_lp(parts, rational_to_f64(p))
        }
    }
}

fn exact_root(s: &BigRational, e: u32) -> Option<BigRational> {
    let n = s.numer().nth_root(e);
    let d = s.denom().nth_root(e);
    if num_traits::pow(n.clone(), e as usize) == *s.numer() && num_traits::pow(d.clone(), e as usize) == *s.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn float_root(s: &Scalar, p: f64) -> f64 {
    let f = s.to_f64();
    if f.is_finite() && f > 0.0 && f > f64::MIN_POSITIVE {
        f.powf(1.0 / p)
    } else {
        (s.log2_abs() / p).exp2()
    }
}

fn float_lp(parts: &[Scalar], p: f64) -> Scalar {
    // scale by the largest log-magnitude so huge or tiny entries survive
    let logs: Vec<f64> = parts.iter().map(Scalar::log2_abs).collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Scalar::Float(0.0);
    }
    let s: f64 = logs.iter().map(|l| ((l - m) * p).exp2()).sum();
    Scalar::Float((m + s.log2() / p).exp2())
}

/// Finitely supported vector; zero entries are never stored.
#[derive(Clone, Debug)]
pub struct SeqVector {
    space: Arc<SpaceSpec>,
    entries: BTreeMap<Address, Scalar>,
    downgraded: bool,
}

impl PartialEq for SeqVector {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|((a, x), (b, y))| a == b && x == y)
    }
}

impl SeqVector {
    pub fn zero(space: Arc<SpaceSpec>) -> Self {
        SeqVector {
            space,
            entries: BTreeMap::new(),
            downgraded: false,
        }
    }

    /// Validates every address; repeated addresses are summed.
    pub fn from_entries<I>(space: Arc<SpaceSpec>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Address, Scalar)>,
    {
        let mut v = SeqVector::zero(space);
        for (a, x) in entries {
            v.space.validate(a.tokens())?;
            v.add_at(a, x);
        }
        Ok(v)
    }

    pub fn delta(space: Arc<SpaceSpec>, address: Address, value: Scalar) -> Result<Self> {
        Self::from_entries(space, [(address, value)])
    }

    /// Builds without validation; callers guarantee the addresses.
    pub(crate) fn from_map_unchecked(space: Arc<SpaceSpec>, entries: BTreeMap<Address, Scalar>, downgraded: bool) -> Self {
        let entries = entries.into_iter().filter(|(_, x)| !x.is_zero()).collect();
        SeqVector {
            space,
            entries,
            downgraded,
        }
    }

    pub fn space(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    pub fn entries(&self) -> &BTreeMap<Address, Scalar> {
        &self.entries
    }

    pub fn get(&self, a: &Address) -> Scalar {
        self.entries.get(a).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn support(&self) -> Vec<Address> {
        self.entries.keys().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(Scalar::is_exact)
    }

    /// Set once any mixed exact/float arithmetic has touched this vector.
    pub fn precision_downgraded(&self) -> bool {
        self.downgraded
    }

    pub(crate) fn mark_downgraded(&mut self, flag: bool) {
        self.downgraded |= flag;
    }

    pub(crate) fn add_at(&mut self, a: Address, x: Scalar) {
        if x.is_zero() {
            return;
        }
        match self.entries.remove(&a) {
            Some(old) => {
                if old.is_exact() != x.is_exact() {
                    self.downgraded = true;
                }
                let s = old + x;
                if !s.is_zero() {
                    self.entries.insert(a, s);
                }
            }
            None => {
                self.entries.insert(a, x);
            }
        }
    }

    pub fn add(&self, other: &SeqVector) -> Result<SeqVector> {
        if !Arc::ptr_eq(&self.space, &other.space) && *self.space != *other.space {
            return Err(Error::SpaceMismatch("adding vectors of different spaces".into()));
        }
        let mut out = self.clone();
        out.downgraded |= other.downgraded;
        for (a, x) in &other.entries {
            out.add_at(a.clone(), x.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SeqVector) -> Result<SeqVector> {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    pub fn scale(&self, c: &Scalar) -> SeqVector {
        if c.is_zero() {
            return SeqVector::zero(self.space.clone());
        }
        let mixed = self.entries.values().any(|x| x.is_exact() != c.is_exact());
        SeqVector {
            space: self.space.clone(),
            entries: self.entries.iter().map(|(a, x)| (a.clone(), x * c)).collect(),
            downgraded: self.downgraded || mixed,
        }
    }

    /// Same entries, re-attached to another (equal) space handle.
    pub fn with_space(&self, space: Arc<SpaceSpec>) -> SeqVector {
        SeqVector {
            space,
            entries: self.entries.clone(),
            downgraded: self.downgraded,
        }
    }

    /// Groups a sum-space vector by its outer index.
    pub fn split_outer(&self) -> BTreeMap<i64, BTreeMap<Address, Scalar>> {
        let mut out: BTreeMap<i64, BTreeMap<Address, Scalar>> = BTreeMap::new();
        for (a, x) in &self.entries {
            if let Some((k, rest)) = a.split_seq() {
                out.entry(k).or_default().insert(rest, x.clone());
            }
        }
        out
    }

    /// Recursive l^p / sup norm.
    pub fn norm(&self) -> Scalar {
        let items: Vec<(&[Token], &Scalar)> = self.entries.iter().map(|(a, x)| (a.tokens(), x)).collect();
        norm_rec(&self.space, &items)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|(a, x)| json!({"address": a.to_json(), "value": scalar_json(x)}))
                .collect(),
        )
    }

    pub fn from_json(space: Arc<SpaceSpec>, v: &Value) -> Result<SeqVector> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Parse("vector must be an array of {address, value}".into()))?;
        let mut items = Vec::with_capacity(arr.len());
        for e in arr {
            let obj = e
                .as_object()
                .ok_or_else(|| Error::Parse("vector entry must be an object".into()))?;
            check_keys(obj, &["address", "value"], "vector entry")?;
            let a = Address::from_json(obj.get("address").unwrap_or(&Value::Null))?;
            let x = match obj.get("value") {
                Some(Value::String(s)) => Scalar::parse(s)?,
                Some(Value::Number(n)) => Scalar::Float(n.as_f64().unwrap_or(f64::NAN)),
                _ => return Err(Error::Parse("vector entry needs a value".into())),
            };
            items.push((a, x));
        }
        SeqVector::from_entries(space, items)
    }
}

/// Exact scalars as decimal strings, floats as JSON numbers.
pub fn scalar_json(x: &Scalar) -> Value {
    match x {
        Scalar::Exact(_) => Value::String(x.to_decimal_string()),
        Scalar::Float(f) => serde_json::Number::from_f64(*f)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(x.to_decimal_string())),
    }
}

fn norm_rec(space: &SpaceSpec, items: &[(&[Token], &Scalar)]) -> Scalar {
    match space {
        SpaceSpec::Sum {
            components, norm, ..
        } => {
            let mut parts = Vec::new();
            let mut i = 0;
            while i < items.len() {
                let k = match items[i].0.first() {
                    Some(Token::Seq(k)) => *k,
                    _ => {
                        i += 1;
                        continue;
                    }
                };
                let mut j = i;
                let mut group = Vec::new();
                while j < items.len() && items[j].0.first() == Some(&Token::Seq(k)) {
                    group.push((&items[j].0[1..], items[j].1));
                    j += 1;
                }
                parts.push(norm_rec(components.get(k), &group));
                i = j;
            }
            combine_norms(norm, &parts)
        }
        leaf => {
            let parts: Vec<Scalar> = items.iter().map(|(_, x)| (*x).clone()).collect();
            combine_norms(&leaf.norm_kind(), &parts)
        }
    }
}

/// Deterministic random vector with small exact rational entries.
pub fn random_finitely_supported(space: &Arc<SpaceSpec>, seed: u64, max_support: usize, max_depth: usize) -> SeqVector {
    assert!(max_support >= 1, "max_support must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = rng.gen_range(1..=max_support);
    let mut v = SeqVector::zero(space.clone());
    for _ in 0..size {
        let a = random_address(space, &mut rng, max_depth);
        let num = loop {
            let n: i64 = rng.gen_range(-9..=9);
            if n != 0 {
                break n;
            }
        };
        let den: i64 = rng.gen_range(1..=4);
        v.add_at(a, Scalar::ratio(num, den));
    }
    v
}

pub(crate) fn random_address(space: &SpaceSpec, rng: &mut ChaCha8Rng, max_depth: usize) -> Address {
    match space {
        SpaceSpec::Scalar => Address::default(),
        SpaceSpec::FiniteDim { dim, .. } => Address(vec![Token::Coord(rng.gen_range(1..=*dim))]),
        SpaceSpec::Tree(t) => {
            let (branch, pos) = t.sample_vertex(rng, max_depth);
            Address::vertex(&branch, pos)
        }
        SpaceSpec::Graph => {
            if rng.gen_bool(0.3) {
                Address::vertex(&[], rng.gen_range(1..=6))
            } else {
                let n = rng.gen_range(1..=4);
                let k = rng.gen_range(1..=4);
                Address::vertex(&[n, k], rng.gen_range(1..=10))
            }
        }
        SpaceSpec::Sum {
            components,
            index_set,
            ..
        } => {
            let span = (max_depth as i64).max(1) + 3;
            let k = match index_set {
                IndexSet::Unilateral => rng.gen_range(1..=span),
                IndexSet::Bilateral => rng.gen_range(-span..=span),
            };
            random_address(components.get(k), rng, max_depth).prefixed(Token::Seq(k))
        }
    }
}

/// Integer `p` for exact p-th power sums, when the norm has one.
pub fn integer_exponent(norm: &NormKind) -> Option<u32> {
    match norm {
        NormKind::Lp(p) if p.is_integer() => p.to_integer().to_u32(),
        _ => None,
    }
}

/// `|x|^p` for a norm exponent; exact for integer `p`.
pub fn pow_p(x: &Scalar, norm: &NormKind) -> Scalar {
    match (norm, integer_exponent(norm)) {
        (_, Some(e)) if x.is_exact() => x.abs().powi(e as i32),
        (NormKind::Lp(p), _) => Scalar::Float((x.log2_abs() * rational_to_f64(p)).exp2()),
        (NormKind::Sup, _) => x.abs(),
    }
}
