//! Operator-weighted backward shifts `B (x_k)_k = (T_{k+1} x_{k+1})_k`.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::graph::GraphShift;
use crate::linalg::{matrix_norm, Matrix, NormFlag};
use crate::scalar::{Scalar, WeightProduct};
use crate::spaces::{Address, Components, IndexSet, NormKind, SeqVector, SpaceSpec, Token};
use crate::tree::SegmentedTreeShift;

/// Running sup above which a family is declared unbounded.
pub const NORM_CAP: f64 = 1e12;

/// A bounded operator between two component spaces.
#[derive(Clone, Debug)]
pub enum ComponentOperator {
    /// `w * Id` on `space`.
    ScalarWeight { w: Scalar, space: Arc<SpaceSpec> },
    Matrix { m: Matrix, dom: NormKind, cod: NormKind },
    Tree(Arc<SegmentedTreeShift>),
    Graph(Arc<GraphShift>),
    Nested(Arc<BlockShift>),
}

impl ComponentOperator {
    pub fn scalar(w: Scalar) -> Self {
        ComponentOperator::ScalarWeight {
            w,
            space: Arc::new(SpaceSpec::Scalar),
        }
    }

    pub fn matrix(m: Matrix, dom: NormKind, cod: NormKind) -> Self {
        ComponentOperator::Matrix { m, dom, cod }
    }

    pub fn dom_space(&self) -> Arc<SpaceSpec> {
        match self {
            ComponentOperator::ScalarWeight { space, .. } => space.clone(),
            ComponentOperator::Matrix { m, dom, .. } => Arc::new(SpaceSpec::FiniteDim {
                dim: m.cols() as u32,
                norm: dom.clone(),
            }),
            ComponentOperator::Tree(t) => Arc::new(SpaceSpec::Tree(t.clone())),
            ComponentOperator::Graph(_) => Arc::new(SpaceSpec::Graph),
            ComponentOperator::Nested(b) => b.space().clone(),
        }
    }

    pub fn cod_space(&self) -> Arc<SpaceSpec> {
        match self {
            ComponentOperator::Matrix { m, cod, .. } => Arc::new(SpaceSpec::FiniteDim {
                dim: m.rows() as u32,
                norm: cod.clone(),
            }),
            _ => self.dom_space(),
        }
    }

    /// True when domain and codomain are one-dimensional.
    pub fn is_one_dimensional(&self) -> bool {
        match self {
            ComponentOperator::ScalarWeight { space, .. } => is_one_dim(space),
            ComponentOperator::Matrix { m, .. } => m.rows() == 1 && m.cols() == 1,
            _ => false,
        }
    }

    /// Operator norm with an exactness flag.
    pub fn norm(&self) -> (Scalar, NormFlag) {
        match self {
            ComponentOperator::ScalarWeight { w, .. } => (w.abs(), NormFlag::Exact),
            ComponentOperator::Matrix { m, dom, cod } => matrix_norm(m, dom, cod),
            ComponentOperator::Tree(t) => (t.norm_bound(), NormFlag::Exact),
            ComponentOperator::Graph(g) => (g.norm_bound(), NormFlag::Exact),
            ComponentOperator::Nested(b) => (b.norm_bound().value.clone(), b.norm_bound().flag),
        }
    }

    /// Applies the operator to a vector of its domain; the result lives in
    /// `cod_space`.
    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        match self {
            ComponentOperator::ScalarWeight { w, .. } => Ok(x.scale(w)),
            ComponentOperator::Matrix { m, .. } => {
                let v = to_coords(x, m.cols())?;
                Ok(from_coords(self.cod_space(), &m.apply(&v), x.precision_downgraded()))
            }
            ComponentOperator::Tree(t) => t.apply(x),
            ComponentOperator::Graph(g) => g.apply(x),
            ComponentOperator::Nested(b) => b.apply(x),
        }
    }

    /// One-step right inverse `R` with `T R y = y`; `y` lives in the
    /// codomain, the result in the domain.
    pub fn right_inverse(&self, y: &SeqVector) -> Result<SeqVector> {
        match self {
            ComponentOperator::ScalarWeight { w, .. } => {
                let r = w
                    .recip()
                    .ok_or_else(|| Error::Unsupported("zero weight has no right inverse".into()))?;
                Ok(y.scale(&r))
            }
            ComponentOperator::Matrix { m, .. } => {
                let r = m
                    .right_inverse()
                    .ok_or_else(|| Error::Unsupported("matrix without full row rank".into()))?;
                let v = to_coords(y, m.rows())?;
                Ok(from_coords(self.dom_space(), &r.apply(&v), y.precision_downgraded()))
            }
            ComponentOperator::Tree(t) => t.backward_lift(y, 1),
            ComponentOperator::Graph(g) => g.right_inverse(y),
            ComponentOperator::Nested(b) => b.lift(y, 1),
        }
    }

    /// `n`-step lift `S_n` with `T^n S_n y = y` (square operators only).
    ///
    /// Trees use their own lifts, which are not powers of a single map.
    pub fn lift(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        match self {
            ComponentOperator::Tree(t) => t.backward_lift(y, n),
            ComponentOperator::Nested(b) => b.lift(y, n),
            ComponentOperator::ScalarWeight { w, .. } => {
                let r = w
                    .recip()
                    .ok_or_else(|| Error::Unsupported("zero weight has no right inverse".into()))?;
                Ok(y.scale(&r.powi(n as i32)))
            }
            _ => {
                let mut z = y.clone();
                for _ in 0..n {
                    z = self.right_inverse(&z)?;
                }
                Ok(z)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ComponentOperator::ScalarWeight { .. } => "scalar",
            ComponentOperator::Matrix { .. } => "matrix",
            ComponentOperator::Tree(_) => "tree",
            ComponentOperator::Graph(_) => "graph",
            ComponentOperator::Nested(_) => "shift",
        }
    }
}

fn is_one_dim(s: &SpaceSpec) -> bool {
    matches!(s, SpaceSpec::Scalar | SpaceSpec::FiniteDim { dim: 1, .. })
}

/// Coordinates of a finite-dimensional (or scalar) vector.
pub(crate) fn to_coords(x: &SeqVector, dim: usize) -> Result<Vec<Scalar>> {
    let mut v = vec![Scalar::zero(); dim];
    for (a, val) in x.entries() {
        let i = match a.tokens() {
            [] => 0,
            [Token::Coord(i)] => *i as usize - 1,
            _ => {
                return Err(Error::Address {
                    address: a.to_string(),
                    reason: "expected a coordinate".into(),
                })
            }
        };
        if i >= dim {
            return Err(Error::Address {
                address: a.to_string(),
                reason: format!("coordinate outside 1..={dim}"),
            });
        }
        v[i] = val.clone();
    }
    Ok(v)
}

pub(crate) fn from_coords(space: Arc<SpaceSpec>, v: &[Scalar], downgraded: bool) -> SeqVector {
    let scalar_space = matches!(*space, SpaceSpec::Scalar);
    let mut map = BTreeMap::new();
    for (i, x) in v.iter().enumerate() {
        if !x.is_zero() {
            let a = if scalar_space {
                Address::new(vec![])
            } else {
                Address::new(vec![Token::Coord(i as u32 + 1)])
            };
            map.insert(a, x.clone());
        }
    }
    let mixed = v.iter().any(|x| !x.is_exact()) && v.iter().any(|x| x.is_exact() && !x.is_zero());
    SeqVector::from_map_unchecked(space, map, downgraded || mixed)
}

/// Closed-form scalar weight rules.
#[derive(Clone)]
pub enum WeightFormula {
    /// `w_n = 2` for `n >= -1`, `(n+1)/n` otherwise.
    ChaosGap,
    /// `w_n = ((n+1)/n)^{1/p}` for `n >= 2`.
    RootRatio { p: BigRational },
    /// `w_n = 1 + 1/n` for `n >= 2`.
    OnePlusInverse,
    Custom {
        name: String,
        f: Arc<dyn Fn(i64) -> Scalar + Send + Sync>,
        sup: Option<Scalar>,
    },
}

impl fmt::Debug for WeightFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl WeightFormula {
    pub fn name(&self) -> String {
        match self {
            WeightFormula::ChaosGap => "chaos_gap".into(),
            WeightFormula::RootRatio { p } => format!("root_ratio(p={p})"),
            WeightFormula::OnePlusInverse => "one_plus_inverse".into(),
            WeightFormula::Custom { name, .. } => name.clone(),
        }
    }

    pub fn weight(&self, n: i64) -> Result<Scalar> {
        match self {
            WeightFormula::ChaosGap => Ok(if n >= -1 { Scalar::int(2) } else { Scalar::ratio(n + 1, n) }),
            WeightFormula::RootRatio { p } => {
                if n < 1 {
                    return Err(Error::Argument(format!("root-ratio weight undefined at {n}")));
                }
                let r = Scalar::ratio(n + 1, n);
                Ok(if p.is_one() { r } else { r.powf(1.0 / crate::scalar::rational_to_f64(p)) })
            }
            WeightFormula::OnePlusInverse => {
                if n == 0 {
                    return Err(Error::Argument("1 + 1/n undefined at 0".into()));
                }
                Ok(Scalar::ratio(n + 1, n))
            }
            WeightFormula::Custom { f, .. } => Ok(f(n)),
        }
    }

    /// Declared supremum of `|w_n|` over the index set, if known.
    pub fn declared_sup(&self, index_set: IndexSet) -> Option<Scalar> {
        match self {
            WeightFormula::ChaosGap => Some(Scalar::int(2)),
            WeightFormula::RootRatio { .. } | WeightFormula::OnePlusInverse => match index_set {
                IndexSet::Unilateral => Some(self.weight(2).ok()?.abs()),
                IndexSet::Bilateral => None,
            },
            WeightFormula::Custom { sup, .. } => sup.clone(),
        }
    }

    fn check_domain(&self, index_set: IndexSet) -> Result<()> {
        match (self, index_set) {
            (WeightFormula::RootRatio { .. } | WeightFormula::OnePlusInverse, IndexSet::Bilateral) => Err(
                Error::Argument(format!("{} is only defined on the unilateral index set", self.name())),
            ),
            _ => Ok(()),
        }
    }
}

/// Rule for the operators `T_k` beyond an explicit table.
#[derive(Clone, Debug)]
pub enum Tail {
    Constant(ComponentOperator),
    /// Scalar weights `w_k = formula(k)` acting on `space`.
    Formula { formula: WeightFormula, space: Arc<SpaceSpec> },
}

/// `k -> T_k` on `J*`.
#[derive(Clone, Debug)]
pub enum Family {
    /// `T_k = T` for every `k`: the lift `B_T`.
    Constant(ComponentOperator),
    Table {
        entries: BTreeMap<i64, ComponentOperator>,
        tail: Tail,
    },
}

impl Family {
    pub fn scalar_table(weights: BTreeMap<i64, Scalar>, tail: Tail) -> Family {
        Family::Table {
            entries: weights
                .into_iter()
                .map(|(k, w)| (k, ComponentOperator::scalar(w)))
                .collect(),
            tail,
        }
    }

    pub fn formula(formula: WeightFormula) -> Family {
        Family::Table {
            entries: BTreeMap::new(),
            tail: Tail::Formula {
                formula,
                space: Arc::new(SpaceSpec::Scalar),
            },
        }
    }
}

/// Operator norm with provenance.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub value: Scalar,
    pub flag: NormFlag,
}

/// `B_{(T_k)}` on an `l^p` or `c_0` sum.
#[derive(Clone, Debug)]
pub struct BlockShift {
    index_set: IndexSet,
    family: Family,
    outer: NormKind,
    space: Arc<SpaceSpec>,
    bound: NormReport,
}

impl BlockShift {
    pub fn new(index_set: IndexSet, family: Family, outer: NormKind) -> Result<Self> {
        let space = build_space(index_set, &family, &outer)?;
        let mut b = BlockShift {
            index_set,
            family,
            outer,
            space,
            bound: NormReport {
                value: Scalar::zero(),
                flag: NormFlag::Exact,
            },
        };
        b.check_chain()?;
        b.bound = b.operator_norm(None)?;
        Ok(b)
    }

    /// The lift `B_T` of a single operator.
    pub fn lift_of(op: ComponentOperator, index_set: IndexSet, outer: NormKind) -> Result<Self> {
        Self::new(index_set, Family::Constant(op), outer)
    }

    pub fn index_set(&self) -> IndexSet {
        self.index_set
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn outer_norm(&self) -> &NormKind {
        &self.outer
    }

    pub fn space(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    pub fn norm_bound(&self) -> &NormReport {
        &self.bound
    }

    /// `T_k` for `k` in `J*`.
    pub fn component(&self, k: i64) -> Result<Cow<'_, ComponentOperator>> {
        if !self.index_set.has_operator(k) {
            return Err(Error::Argument(format!("no operator T_{k} on {}", self.index_set.as_str())));
        }
        Ok(match &self.family {
            Family::Constant(op) => Cow::Borrowed(op),
            Family::Table { entries, tail } => match entries.get(&k) {
                Some(op) => Cow::Borrowed(op),
                None => match tail {
                    Tail::Constant(op) => Cow::Borrowed(op),
                    Tail::Formula { formula, space } => Cow::Owned(ComponentOperator::ScalarWeight {
                        w: formula.weight(k)?,
                        space: space.clone(),
                    }),
                },
            },
        })
    }

    /// Component space `X_k`.
    pub fn component_space(&self, k: i64) -> Arc<SpaceSpec> {
        self.space.component(k).cloned().unwrap_or_else(|| self.space.clone())
    }

    /// True when every component is one-dimensional.
    pub fn is_scalar_chain(&self) -> bool {
        match &self.family {
            Family::Constant(op) => op.is_one_dimensional(),
            Family::Table { entries, tail } => {
                entries.values().all(ComponentOperator::is_one_dimensional)
                    && match tail {
                        Tail::Constant(op) => op.is_one_dimensional(),
                        Tail::Formula { space, .. } => is_one_dim(space),
                    }
            }
        }
    }

    fn check_chain(&self) -> Result<()> {
        if let Family::Table { entries, .. } = &self.family {
            let ks: std::collections::BTreeSet<i64> =
                entries.keys().flat_map(|&k| [k - 1, k, k + 1]).collect();
            for k in ks {
                if !self.index_set.has_operator(k) {
                    if entries.contains_key(&k) {
                        return Err(Error::Argument(format!("table entry T_{k} outside J*")));
                    }
                    continue;
                }
                let t = self.component(k)?;
                if *t.cod_space() != *self.component_space(k - 1) {
                    return Err(Error::SpaceMismatch(format!("codomain of T_{k} differs from X_{}", k - 1)));
                }
                if *t.dom_space() != *self.component_space(k) {
                    return Err(Error::SpaceMismatch(format!("domain of T_{k} differs from X_{k}")));
                }
            }
        }
        if let Family::Table {
            tail: Tail::Formula { formula, .. },
            ..
        } = &self.family
        {
            formula.check_domain(self.index_set)?;
        }
        Ok(())
    }

    /// `sup_k ||T_k||`: table entries plus the declared tail supremum, or
    /// the running sup over `window` (flagged as a lower bound) when the
    /// tail has no declared supremum.
    pub fn operator_norm(&self, window: Option<(i64, i64)>) -> Result<NormReport> {
        let mut value = Scalar::zero();
        let mut flag = NormFlag::Exact;
        let mut take = |v: Scalar, f: NormFlag, k: Option<i64>| -> Result<()> {
            if v.to_f64() > NORM_CAP {
                return Err(Error::NotAnOperator(match k {
                    Some(k) => format!("||T_{k}|| = {v} exceeds the cap {NORM_CAP:e}"),
                    None => format!("norm {v} exceeds the cap {NORM_CAP:e}"),
                }));
            }
            if f == NormFlag::LowerBound {
                flag = NormFlag::LowerBound;
            }
            value = value.clone().max(v);
            Ok(())
        };
        let in_window = |k: i64| window.is_none_or(|(a, b)| a <= k && k <= b);
        match &self.family {
            Family::Constant(op) => {
                let (v, f) = op.norm();
                take(v, f, None)?;
            }
            Family::Table { entries, tail } => {
                for (k, op) in entries {
                    if in_window(*k) {
                        let (v, f) = op.norm();
                        take(v, f, Some(*k))?;
                    }
                }
                match tail {
                    Tail::Constant(op) => {
                        let (v, f) = op.norm();
                        take(v, f, None)?;
                    }
                    Tail::Formula { formula, .. } => {
                        let declared = formula.declared_sup(self.index_set);
                        let (lo, hi) = window.unwrap_or_else(|| {
                            let start = match self.index_set {
                                IndexSet::Unilateral => 2,
                                IndexSet::Bilateral => -200,
                            };
                            (start, start + 400)
                        });
                        for k in lo..=hi {
                            if self.index_set.has_operator(k) && !entries.contains_key(&k) {
                                let w = formula.weight(k)?.abs();
                                take(w, NormFlag::Exact, Some(k))?;
                            }
                        }
                        match declared {
                            Some(s) => take(s, NormFlag::Exact, None)?,
                            None => flag = NormFlag::LowerBound,
                        }
                    }
                }
            }
        }
        Ok(NormReport { value, flag })
    }

    /// `B x`.
    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        self.check_space(x)?;
        let mut out: BTreeMap<Address, Scalar> = BTreeMap::new();
        let mut downgraded = x.precision_downgraded();
        for (k, inner) in x.split_outer() {
            if !self.index_set.contains(k - 1) {
                continue;
            }
            let t = self.component(k)?;
            let v = SeqVector::from_map_unchecked(self.component_space(k), inner, false);
            let img = t.apply(&v)?;
            downgraded |= img.precision_downgraded();
            for (a, val) in img.entries() {
                out.insert(a.prefixed(Token::Seq(k - 1)), val.clone());
            }
        }
        Ok(SeqVector::from_map_unchecked(self.space.clone(), out, downgraded))
    }

    fn check_space(&self, x: &SeqVector) -> Result<()> {
        if !Arc::ptr_eq(x.space(), &self.space) && **x.space() != *self.space {
            return Err(Error::SpaceMismatch("vector does not belong to the shift's space".into()));
        }
        Ok(())
    }

    /// `T_{k,n} = T_{k+1} ... T_n`.
    pub fn compose_window(&self, k: i64, n: i64) -> Result<Window> {
        if k > n {
            return Err(Error::Argument(format!("window needs k <= n, got k={k}, n={n}")));
        }
        if !self.index_set.contains(k) || !self.index_set.contains(n) {
            return Err(Error::Argument(format!("window ({k},{n}) outside {}", self.index_set.as_str())));
        }
        if k == n {
            return Ok(Window::Identity(self.component_space(k)));
        }
        let ops: Vec<ComponentOperator> = (k + 1..=n)
            .map(|j| self.component(j).map(Cow::into_owned))
            .collect::<Result<_>>()?;
        if ops.iter().all(|o| matches!(o, ComponentOperator::ScalarWeight { .. })) {
            let mut p = WeightProduct::identity();
            for o in &ops {
                if let ComponentOperator::ScalarWeight { w, .. } = o {
                    p.mul_assign(w, true);
                }
            }
            return Ok(Window::Weight {
                product: p,
                space: self.component_space(k),
            });
        }
        if ops.iter().all(|o| matches!(o, ComponentOperator::Matrix { .. })) {
            let mut acc: Option<(Matrix, NormKind, NormKind)> = None;
            for o in &ops {
                if let ComponentOperator::Matrix { m, dom, cod } = o {
                    acc = Some(match acc {
                        None => (m.clone(), dom.clone(), cod.clone()),
                        Some((a, _, c)) => (a.mul(m)?, dom.clone(), c),
                    });
                }
            }
            let (m, dom, cod) = acc.unwrap();
            return Ok(Window::Matrix { m, dom, cod });
        }
        Ok(Window::Chain(ops))
    }

    /// `||B^n x||` for `n = 0..=steps`.
    pub fn orbit_norms(&self, x: &SeqVector, steps: usize) -> Result<Vec<Scalar>> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut cur = x.clone();
        out.push(cur.norm());
        for _ in 0..steps {
            cur = if cur.is_zero() { cur } else { self.apply(&cur)? };
            out.push(cur.norm());
        }
        Ok(out)
    }

    /// Lifts a component vector `y` of `X_k` to `X_{k+n}` through right
    /// inverses so that `T_{k,k+n} z = y`.
    pub fn lift_component(&self, k: i64, y: &SeqVector, n: u64) -> Result<SeqVector> {
        if let Family::Constant(op) = &self.family {
            return op.lift(y, n);
        }
        let mut z = y.clone();
        for j in k + 1..=k + n as i64 {
            z = self.component(j)?.right_inverse(&z)?.with_space(self.component_space(j));
        }
        Ok(z)
    }

    /// `T_{j-n,j} y` for a component vector `y` of `X_j`.
    pub fn forward_component(&self, j: i64, y: &SeqVector, n: u64) -> Result<SeqVector> {
        let mut z = y.clone();
        for i in (j - n as i64 + 1..=j).rev() {
            z = self.component(i)?.apply(&z)?.with_space(self.component_space(i - 1));
        }
        Ok(z)
    }

    /// `S_n y` on the whole space: every component lifted `n` places.
    pub fn lift(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        self.check_space(y)?;
        let mut out = BTreeMap::new();
        let mut downgraded = y.precision_downgraded();
        for (k, inner) in y.split_outer() {
            let v = SeqVector::from_map_unchecked(self.component_space(k), inner, false);
            let z = self.lift_component(k, &v, n)?;
            downgraded |= z.precision_downgraded();
            for (a, val) in z.entries() {
                out.insert(a.prefixed(Token::Seq(k + n as i64)), val.clone());
            }
        }
        Ok(SeqVector::from_map_unchecked(self.space.clone(), out, downgraded))
    }

    /// Embeds a component vector at outer index `k`.
    pub fn embed(&self, k: i64, v: &SeqVector) -> Result<SeqVector> {
        let entries = v.entries().iter().map(|(a, x)| (a.prefixed(Token::Seq(k)), x.clone()));
        SeqVector::from_entries(self.space.clone(), entries)
    }

    /// Component `k` of a vector of the sum space.
    pub fn extract(&self, k: i64, x: &SeqVector) -> SeqVector {
        let inner = x.split_outer().remove(&k).unwrap_or_default();
        SeqVector::from_map_unchecked(self.component_space(k), inner, x.precision_downgraded())
    }
}

fn build_space(index_set: IndexSet, family: &Family, outer: &NormKind) -> Result<Arc<SpaceSpec>> {
    match family {
        Family::Constant(op) => {
            if *op.dom_space() != *op.cod_space() {
                return Err(Error::SpaceMismatch("a constant family needs T: X -> X".into()));
            }
            Ok(Arc::new(SpaceSpec::Sum {
                components: Components::Uniform(op.dom_space()),
                index_set,
                norm: outer.clone(),
            }))
        }
        Family::Table { entries, tail } => {
            let default = match tail {
                Tail::Constant(op) => op.dom_space(),
                Tail::Formula { space, .. } => space.clone(),
            };
            let mut table = BTreeMap::new();
            for (k, op) in entries {
                if *op.dom_space() != *default {
                    table.insert(*k, op.dom_space());
                }
            }
            for (k, op) in entries {
                if !entries.contains_key(&(k - 1)) && index_set.contains(k - 1) && *op.cod_space() != *default {
                    table.insert(k - 1, op.cod_space());
                }
            }
            let components = if table.is_empty() {
                Components::Uniform(default)
            } else {
                Components::Table { entries: table, default }
            };
            Ok(Arc::new(SpaceSpec::Sum {
                components,
                index_set,
                norm: outer.clone(),
            }))
        }
    }
}

/// The composed operator `T_{k,n}`.
#[derive(Clone, Debug)]
pub enum Window {
    Identity(Arc<SpaceSpec>),
    /// Product of scalar weights, exact and in log-magnitude.
    Weight { product: WeightProduct, space: Arc<SpaceSpec> },
    Matrix { m: Matrix, dom: NormKind, cod: NormKind },
    /// `ops[0] o ops[1] o ...`, so the last operator acts first.
    Chain(Vec<ComponentOperator>),
}

impl Window {
    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        match self {
            Window::Identity(_) => Ok(x.clone()),
            Window::Weight { product, .. } => Ok(x.scale(&product.to_scalar())),
            Window::Matrix { m, dom, cod } => ComponentOperator::matrix(m.clone(), dom.clone(), cod.clone()).apply(x),
            Window::Chain(ops) => {
                let mut z = x.clone();
                for op in ops.iter().rev() {
                    z = op.apply(&z)?;
                }
                Ok(z)
            }
        }
    }

    /// Exact matrix of a finite-dimensional window, when available.
    pub fn as_matrix(&self) -> Option<Matrix> {
        match self {
            Window::Identity(s) => match **s {
                SpaceSpec::Scalar => Some(Matrix::scaled_identity(1, &Scalar::one())),
                SpaceSpec::FiniteDim { dim, .. } => Some(Matrix::scaled_identity(dim as usize, &Scalar::one())),
                _ => None,
            },
            Window::Weight { product, space } => {
                let n = match **space {
                    SpaceSpec::Scalar => 1,
                    SpaceSpec::FiniteDim { dim, .. } => dim as usize,
                    _ => return None,
                };
                Some(Matrix::scaled_identity(n, &product.to_scalar()))
            }
            Window::Matrix { m, .. } => Some(m.clone()),
            Window::Chain(_) => None,
        }
    }

    /// The scalar weight product, for scalar windows.
    pub fn weight(&self) -> Option<Scalar> {
        match self {
            Window::Identity(_) => Some(Scalar::one()),
            Window::Weight { product, .. } => Some(product.to_scalar()),
            _ => None,
        }
    }
}

/// The two contractions intertwining a lift with its base operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiKind {
    /// `(x_{n,m}) -> (x_{n,n})`.
    Diagonal,
    /// `(x_n)_{n in Z} -> sum_n x_n`.
    Summing,
}

#[derive(Clone, Debug)]
pub struct QuasiConjugacy {
    kind: PhiKind,
    source: Arc<SpaceSpec>,
    target: Arc<SpaceSpec>,
}

impl QuasiConjugacy {
    /// `phi` for `B_T` where `T` is itself a shift on a sum over the same
    /// index set.
    pub fn diagonal(lift: &BlockShift) -> Result<Self> {
        match lift.family() {
            Family::Constant(ComponentOperator::Nested(inner)) if inner.index_set() == lift.index_set() => {
                Ok(QuasiConjugacy {
                    kind: PhiKind::Diagonal,
                    source: lift.space().clone(),
                    target: inner.space().clone(),
                })
            }
            _ => Err(Error::SpaceMismatch(
                "diagonal map needs a lift of a shift over the same index set".into(),
            )),
        }
    }

    /// `phi` for `B_T` on `l^1(X, Z)`.
    pub fn summing(lift: &BlockShift) -> Result<Self> {
        match lift.family() {
            Family::Constant(op) if lift.index_set() == IndexSet::Bilateral && lift.outer_norm().is_l1() => {
                Ok(QuasiConjugacy {
                    kind: PhiKind::Summing,
                    source: lift.space().clone(),
                    target: op.dom_space(),
                })
            }
            _ => Err(Error::SpaceMismatch("summing map needs a lift on l^1(X, Z)".into())),
        }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn target(&self) -> &Arc<SpaceSpec> {
        &self.target
    }

    pub fn apply(&self, y: &SeqVector) -> Result<SeqVector> {
        if **y.space() != *self.source {
            return Err(Error::SpaceMismatch("input is not in the source space".into()));
        }
        let mut out = SeqVector::zero(self.target.clone());
        out.mark_downgraded(y.precision_downgraded());
        for (a, x) in y.entries() {
            let (n, rest) = a.split_seq().expect("sum-space address");
            match self.kind {
                PhiKind::Diagonal => {
                    if let Some((m, _)) = rest.split_seq() {
                        if m == n {
                            out.add_at(rest, x.clone());
                        }
                    }
                }
                PhiKind::Summing => out.add_at(rest, x.clone()),
            }
        }
        Ok(out)
    }
}
