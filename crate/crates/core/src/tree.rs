//! Weighted backward shifts on segmented rooted trees.
//!
//! Vertices are `e^{b}_j` where `b = (1, n1, .., nk)` is a branch address and
//! `1 <= j <= l(b)` a position in that branch's segment. Inside a segment
//! `e_j` maps to `w_seg(b, j) e_{j-1}`. The first vertex of a non-root
//! branch maps to the last vertex of its parent segment with weight
//! `w_join(b)`; the root `e^{(1)}_1` maps to 0. The children of the last
//! vertex of `b` are the first vertices of `(b, c)` for every `c >= 1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, WeightProduct};
use crate::spaces::{check_keys, Address, NormKind, SeqVector, SpaceSpec, Token};

type BranchFn<T> = Box<dyn Fn(&[u64]) -> T + Send + Sync>;
type SegFn = Box<dyn Fn(&[u64], u64) -> Scalar + Send + Sync>;
/// A vertex `(branch, position)` paired with the weight reaching it.
pub type WeightedVertex = ((Vec<u64>, u64), Scalar);

/// User-supplied segment and junction rules.
pub struct CustomTree {
    pub name: String,
    pub seg_len: BranchFn<u64>,
    /// Weight of the edge from position `j` to `j - 1`, for `2 <= j <= l(b)`.
    pub w_seg: SegFn,
    pub w_join: BranchFn<Scalar>,
    /// Declared closed-form value of `sum_c |w_join(b, c)|^q` (`q = 1` for
    /// the sup norm), or `None` when the sum diverges.
    pub join_sum: BranchFn<Option<Scalar>>,
    /// Declared operator norm bound.
    pub norm_bound: Scalar,
    pub audit_depth: usize,
}

impl fmt::Debug for CustomTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomTree({})", self.name)
    }
}

/// The named constructions plus user-defined trees.
#[derive(Clone, Debug)]
pub enum TreeKind {
    /// Segment of `(.., n_k)` has length `n_k`, weights 4, join weight
    /// `2^{-N}` with `N(b, n) = N(b, 1) + n - 1` and
    /// `N(b, 1) = max(2 n_k, 2) + n1_offset`.
    MixC0 { n1_offset: u64 },
    /// Quadratic recurrences for `a`, `N`, `l`; weights 1 up to `a`, 4 after,
    /// join weight `2^{-N}`.
    PropTree,
    /// `l = n_k + 2` (root: `root_len`), `N = 2l + n_k`, weights 4 except
    /// the last edge of each segment (`2^{-N}`), join weight 4.
    FhcTree { root_len: u64 },
    Custom(Arc<CustomTree>),
}

impl PartialEq for TreeKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TreeKind::MixC0 { n1_offset: a }, TreeKind::MixC0 { n1_offset: b }) => a == b,
            (TreeKind::PropTree, TreeKind::PropTree) => true,
            (TreeKind::FhcTree { root_len: a }, TreeKind::FhcTree { root_len: b }) => a == b,
            (TreeKind::Custom(a), TreeKind::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl TreeKind {
    pub fn mixc0() -> Self {
        TreeKind::MixC0 { n1_offset: 0 }
    }

    pub fn fhc() -> Self {
        TreeKind::FhcTree { root_len: 3 }
    }

    pub fn name(&self) -> &str {
        match self {
            TreeKind::MixC0 { .. } => "mixc0",
            TreeKind::PropTree => "proptree",
            TreeKind::FhcTree { .. } => "fhctree",
            TreeKind::Custom(c) => &c.name,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            TreeKind::MixC0 { n1_offset } => json!({"tree": "mixc0", "overrides": {"n1_offset": n1_offset}}),
            TreeKind::PropTree => json!({"tree": "proptree", "overrides": {}}),
            TreeKind::FhcTree { root_len } => json!({"tree": "fhctree", "overrides": {"root_len": root_len}}),
            TreeKind::Custom(c) => json!({"tree": format!("custom:{}", c.name), "overrides": {}}),
        }
    }

    pub fn from_json(name: &str, overrides: Option<&Value>) -> Result<Self> {
        let empty = serde_json::Map::new();
        let ov = match overrides {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(Error::Config("tree overrides must be an object".into())),
        };
        let get_u64 = |k: &str, default: u64| -> Result<u64> {
            match ov.get(k) {
                None => Ok(default),
                Some(v) => v
                    .as_u64()
                    .ok_or_else(|| Error::Config(format!("override `{k}` must be a non-negative integer"))),
            }
        };
        match name {
            "mixc0" => {
                check_keys(ov, &["n1_offset"], "mixc0 overrides")?;
                Ok(TreeKind::MixC0 {
                    n1_offset: get_u64("n1_offset", 0)?,
                })
            }
            "proptree" => {
                check_keys(ov, &[], "proptree overrides")?;
                Ok(TreeKind::PropTree)
            }
            "fhctree" => {
                check_keys(ov, &["root_len"], "fhctree overrides")?;
                let root_len = get_u64("root_len", 3)?;
                if root_len < 2 {
                    return Err(Error::Config("fhctree root_len must be >= 2".into()));
                }
                Ok(TreeKind::FhcTree { root_len })
            }
            other => Err(Error::Config(format!("unknown tree `{other}`"))),
        }
    }
}

/// Recurrence values of the proportional tree at one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropParams {
    pub a: BigInt,
    pub n: BigInt,
    pub l: BigInt,
}

/// Lazy weighted backward shift on a segmented tree.
#[derive(Debug)]
pub struct SegmentedTreeShift {
    kind: TreeKind,
    norm: NormKind,
    prop_memo: RwLock<HashMap<Vec<u64>, Arc<PropParams>>>,
}

impl SegmentedTreeShift {
    /// Builds the shift and audits boundedness on sampled junctions.
    pub fn build(kind: TreeKind, norm: NormKind) -> Result<Self> {
        let t = SegmentedTreeShift {
            kind,
            norm,
            prop_memo: RwLock::new(HashMap::new()),
        };
        t.audit()?;
        Ok(t)
    }

    pub fn kind(&self) -> &TreeKind {
        &self.kind
    }

    pub fn norm(&self) -> &NormKind {
        &self.norm
    }

    pub fn same_tree(&self, other: &SegmentedTreeShift) -> bool {
        self.kind == other.kind && self.norm == other.norm
    }

    /// Wraps the tree in its own space spec.
    pub fn into_space(self) -> Arc<SpaceSpec> {
        Arc::new(SpaceSpec::Tree(Arc::new(self)))
    }

    fn audit(&self) -> Result<()> {
        let sum_matters = !self.norm.is_l1();
        let depth = match &self.kind {
            TreeKind::Custom(c) => c.audit_depth,
            _ => 2,
        };
        let mut frontier = vec![vec![1u64]];
        for _ in 0..depth {
            let mut next = Vec::new();
            for b in &frontier {
                let junction = branch_string(b);
                if sum_matters {
                    let declared = self.join_sum(b)?.ok_or_else(|| Error::TreeAudit {
                        junction: junction.clone(),
                        reason: format!("join weights are not summable, the shift is unbounded on {}", self.norm),
                    })?;
                    // partial sums of the declared series never exceed its value
                    let mut partial = Scalar::zero();
                    for c in 1..=12u64 {
                        let child = child_of(b, c);
                        partial = partial + self.join_q(&child)?;
                        if declared.lt(&partial) {
                            return Err(Error::TreeAudit {
                                junction,
                                reason: format!("partial join sum {partial} exceeds declared bound {declared}"),
                            });
                        }
                    }
                }
                for c in 1..=3u64 {
                    let child = child_of(b, c);
                    let w = self.w_join(&child)?.abs();
                    if self.norm_bound().lt(&w) {
                        return Err(Error::TreeAudit {
                            junction: branch_string(&child),
                            reason: format!("join weight {w} exceeds declared norm bound"),
                        });
                    }
                    next.push(child);
                }
            }
            frontier = next;
        }
        Ok(())
    }

    /// `|w_join|^q` for the current norm (`q = 1` under sup).
    fn join_q(&self, b: &[u64]) -> Result<Scalar> {
        let w = self.w_join(b)?.abs();
        Ok(match &self.norm {
            NormKind::Sup => w,
            _ => {
                let q = self.norm.dual_exponent();
                if q.fract() == 0.0 && w.is_exact() {
                    w.powi(q as i32)
                } else {
                    Scalar::Float((w.log2_abs() * q).exp2())
                }
            }
        })
    }

    /// Closed form of `sum_c |w_join(b, c)|^q`.
    pub fn join_sum(&self, b: &[u64]) -> Result<Option<Scalar>> {
        let q = match &self.norm {
            NormKind::Sup => 1.0,
            n => n.dual_exponent(),
        };
        let geometric = |first_exp: i64| -> Scalar {
            // sum_{c>=1} 2^{-q (first + c - 1)} = 2^{-q first} / (1 - 2^{-q})
            if q == 1.0 {
                Scalar::pow2(-first_exp + 1)
            } else if q.fract() == 0.0 {
                let r = Scalar::pow2(-(q as i64));
                Scalar::pow2(-(q as i64) * first_exp) * Scalar::one().checked_div(&(Scalar::one() - r)).unwrap()
            } else {
                Scalar::Float((-q * first_exp as f64).exp2() / (1.0 - (-q).exp2()))
            }
        };
        match &self.kind {
            TreeKind::MixC0 { .. } => Ok(Some(geometric(self.mix_n1(b)))),
            TreeKind::PropTree => {
                let first = self.prop(&child_of(b, 1))?.n.clone();
                let e = first
                    .to_i64()
                    .ok_or_else(|| Error::Unsupported("exponent too large".into()))?;
                Ok(Some(geometric(e)))
            }
            TreeKind::FhcTree { .. } => Ok(None),
            TreeKind::Custom(c) => Ok((c.join_sum)(b)),
        }
    }

    /// Declared operator norm (exact for the named kinds).
    pub fn norm_bound(&self) -> Scalar {
        match &self.kind {
            TreeKind::Custom(c) => c.norm_bound.clone(),
            _ => Scalar::int(4),
        }
    }

    fn mix_n1(&self, parent: &[u64]) -> i64 {
        let off = match &self.kind {
            TreeKind::MixC0 { n1_offset } => *n1_offset,
            _ => 0,
        };
        (2 * last(parent)).max(2) as i64 + off as i64
    }

    /// `N(b, 1)` for the children of `b` in the MixC0 construction.
    pub fn mixc0_first_child_exponent(&self, b: &[u64]) -> i64 {
        self.mix_n1(b)
    }

    /// Recurrence values `(a, N, l)` of the proportional tree.
    pub fn prop(&self, b: &[u64]) -> Result<Arc<PropParams>> {
        if let Some(p) = self.prop_memo.read().unwrap().get(b) {
            return Ok(p.clone());
        }
        let p = if b.len() <= 1 {
            PropParams {
                a: BigInt::one(),
                n: BigInt::zero(),
                l: BigInt::one(),
            }
        } else {
            let parent = self.prop(&b[..b.len() - 1])?;
            let d = &parent.l - &parent.a;
            let s: BigInt = b[1..].iter().map(|x| BigInt::from(*x)).sum();
            let nk = BigInt::from(last(b));
            let (a, n) = prop_a_n(&s, &d, &nk);
            let (a_sib, n_sib) = prop_a_n(&(&s + 1), &d, &(&nk + 1));
            let l = a_sib + n_sib + &nk + 1;
            PropParams { a, n, l }
        };
        let p = Arc::new(p);
        self.prop_memo
            .write()
            .unwrap()
            .entry(b.to_vec())
            .or_insert_with(|| p.clone());
        Ok(p)
    }

    /// Segment length as a big integer.
    pub fn seg_len_big(&self, b: &[u64]) -> Result<BigInt> {
        Ok(match &self.kind {
            TreeKind::MixC0 { .. } => BigInt::from(last(b)),
            TreeKind::PropTree => self.prop(b)?.l.clone(),
            TreeKind::FhcTree { root_len } => BigInt::from(if b.len() <= 1 { *root_len } else { last(b) + 2 }),
            TreeKind::Custom(c) => BigInt::from((c.seg_len)(b)),
        })
    }

    pub fn seg_len(&self, b: &[u64]) -> Result<u64> {
        self.seg_len_big(b)?
            .to_u64()
            .ok_or_else(|| Error::Unsupported(format!("segment of {} is longer than 2^64", branch_string(b))))
    }

    /// `N` of a non-root branch (exponent of its small weight).
    pub fn branch_exponent(&self, b: &[u64]) -> Result<BigInt> {
        Ok(match &self.kind {
            TreeKind::MixC0 { .. } => {
                let parent = &b[..b.len() - 1];
                BigInt::from(self.mix_n1(parent) + last(b) as i64 - 1)
            }
            TreeKind::PropTree => self.prop(b)?.n.clone(),
            TreeKind::FhcTree { .. } => 2 * self.seg_len_big(b)? + BigInt::from(last(b)),
            TreeKind::Custom(_) => return Err(Error::Unsupported("custom trees have no exponent rule".into())),
        })
    }

    fn exponent_i64(&self, b: &[u64]) -> Result<i64> {
        self.branch_exponent(b)?
            .to_i64()
            .ok_or_else(|| Error::Unsupported(format!("exponent at {} too large", branch_string(b))))
    }

    pub fn validate_vertex(&self, b: &[u64], pos: u64) -> Result<()> {
        if b.first() != Some(&1) || b[1..].contains(&0) {
            return Err(Error::Argument(format!(
                "branch {} must start with 1 and have positive entries",
                branch_string(b)
            )));
        }
        if pos == 0 || BigInt::from(pos) > self.seg_len_big(b)? {
            return Err(Error::Argument(format!(
                "position {pos} outside segment of {} (length {})",
                branch_string(b),
                self.seg_len_big(b)?
            )));
        }
        Ok(())
    }

    /// Weight of the edge `e^b_j -> e^b_{j-1}`, `2 <= j <= l(b)`.
    pub fn w_seg(&self, b: &[u64], j: u64) -> Result<Scalar> {
        Ok(match &self.kind {
            TreeKind::MixC0 { .. } => Scalar::int(4),
            TreeKind::PropTree => {
                if BigInt::from(j) <= self.prop(b)?.a {
                    Scalar::one()
                } else {
                    Scalar::int(4)
                }
            }
            TreeKind::FhcTree { .. } => {
                if j == self.seg_len(b)? {
                    Scalar::pow2(-self.exponent_i64(b)?)
                } else {
                    Scalar::int(4)
                }
            }
            TreeKind::Custom(c) => (c.w_seg)(b, j),
        })
    }

    /// Weight of the edge from `e^b_1` into the parent's last vertex.
    pub fn w_join(&self, b: &[u64]) -> Result<Scalar> {
        if b.len() <= 1 {
            return Err(Error::Argument("the root has no parent".into()));
        }
        Ok(match &self.kind {
            TreeKind::MixC0 { .. } | TreeKind::PropTree => Scalar::pow2(-self.exponent_i64(b)?),
            TreeKind::FhcTree { .. } => Scalar::int(4),
            TreeKind::Custom(c) => (c.w_join)(b),
        })
    }

    /// `prod_{t=2}^{j} w_seg(b, t)`, closed form for the named kinds.
    pub fn seg_prod(&self, b: &[u64], j: u64) -> Result<Scalar> {
        if j <= 1 {
            return Ok(Scalar::one());
        }
        Ok(match &self.kind {
            TreeKind::MixC0 { .. } => Scalar::pow2(2 * (j as i64 - 1)),
            TreeKind::PropTree => {
                let a = self.prop(b)?.a.clone();
                let e = (BigInt::from(j) - a).max(BigInt::zero());
                Scalar::pow2(2 * e.to_i64().ok_or_else(|| Error::Unsupported("exponent too large".into()))?)
            }
            TreeKind::FhcTree { .. } => {
                let l = self.seg_len(b)?;
                if j < l {
                    Scalar::pow2(2 * (j as i64 - 1))
                } else {
                    Scalar::pow2(2 * (l as i64 - 2) - self.exponent_i64(b)?)
                }
            }
            TreeKind::Custom(c) => {
                let mut p = Scalar::one();
                for t in 2..=j {
                    p = p * (c.w_seg)(b, t);
                }
                p
            }
        })
    }

    /// Image of one basis vector: `(target, weight)`, or `None` at the root.
    pub fn apply_vertex(&self, b: &[u64], j: u64) -> Result<Option<WeightedVertex>> {
        if j >= 2 {
            return Ok(Some(((b.to_vec(), j - 1), self.w_seg(b, j)?)));
        }
        if b.len() <= 1 {
            return Ok(None);
        }
        let parent = &b[..b.len() - 1];
        Ok(Some(((parent.to_vec(), self.seg_len(parent)?), self.w_join(b)?)))
    }

    /// Product of edge weights from `e^b_j` down to the root.
    pub fn path_weight_product(&self, b: &[u64], j: u64) -> Result<WeightProduct> {
        self.validate_vertex(b, j)?;
        let mut p = WeightProduct::identity().times(&self.seg_prod(b, j)?);
        let mut cur = b.to_vec();
        while cur.len() > 1 {
            p = p.times(&self.w_join(&cur)?);
            cur.pop();
            let l = self.seg_len(&cur)?;
            p = p.times(&self.seg_prod(&cur, l)?);
        }
        Ok(p)
    }

    /// Child whose segment receives a lift that leaves `b` with `r >= 1`
    /// steps to go (landing at position `r` of the child).
    fn lift_child(&self, b: &[u64], r: u64) -> Result<u64> {
        match &self.kind {
            TreeKind::MixC0 { .. } | TreeKind::FhcTree { .. } => Ok(r),
            TreeKind::PropTree => {
                let mut c = 1u64;
                loop {
                    if BigInt::from(r) <= self.prop(&child_of(b, c))?.l {
                        return Ok(c);
                    }
                    c += 1;
                }
            }
            TreeKind::Custom(_) => Err(Error::Unsupported("custom trees have no lift rule".into())),
        }
    }

    /// Vertex reached by the canonical lift of `e^b_j` over `n` steps and the
    /// lift coefficient (reciprocal of the path product).
    pub fn lift_vertex(&self, b: &[u64], j: u64, n: u64) -> Result<WeightedVertex> {
        if n == 0 {
            return Ok(((b.to_vec(), j), Scalar::one()));
        }
        let l = self.seg_len(b)?;
        if j + n <= l {
            let c = self.seg_prod(b, j)?.checked_div(&self.seg_prod(b, j + n)?).unwrap();
            return Ok(((b.to_vec(), j + n), c));
        }
        let r = j + n - l;
        let child = child_of(b, self.lift_child(b, r)?);
        let prod = self.seg_prod(&child, r)? * self.w_join(&child)? * self.seg_prod(b, l)?;
        let coef = self.seg_prod(b, j)?.checked_div(&prod).unwrap();
        Ok(((child, r), coef))
    }

    /// `T x` on a tree-space vector.
    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        let mut out = SeqVector::zero(x.space().clone());
        out.mark_downgraded(x.precision_downgraded());
        for (a, v) in x.entries() {
            let (b, j) = vertex_of(a)?;
            if let Some(((tb, tj), w)) = self.apply_vertex(b, j)? {
                out.add_at(Address::vertex(&tb, tj), &w * v);
            }
        }
        Ok(out)
    }

    /// `S_n y` with `T^n S_n y = y`: every basis vector is lifted along a
    /// single path that crosses at most one junction.
    pub fn backward_lift(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        let mut out = SeqVector::zero(y.space().clone());
        out.mark_downgraded(y.precision_downgraded());
        for (a, v) in y.entries() {
            let (b, j) = vertex_of(a)?;
            let ((tb, tj), c) = self.lift_vertex(b, j, n)?;
            out.add_at(Address::vertex(&tb, tj), &c * v);
        }
        Ok(out)
    }

    /// Bounds on `inf ||z||` over `T^m z = e^b_j`, searching descendants at
    /// distance `m` with child indices and junction crossings capped by
    /// `budget`.
    pub fn min_preimage_norm(&self, b: &[u64], j: u64, m: u64, budget: u64) -> Result<PreimageBounds> {
        self.validate_vertex(b, j)?;
        if m == 0 {
            return Ok(PreimageBounds {
                lower: Scalar::one(),
                upper: Scalar::one(),
                truncated: false,
                descendants: 1,
                best: Some((b.to_vec(), j)),
            });
        }
        let q = match &self.norm {
            NormKind::Sup => 1.0,
            n => n.dual_exponent(),
        };
        let mut memo = HashMap::new();
        let agg = self.descend(b, j, m, budget.min(u32::MAX as u64) as u32, budget, q, &mut memo)?;
        let Some((suffix, pos)) = agg.best.clone() else {
            return Ok(PreimageBounds {
                lower: Scalar::Float(f64::INFINITY),
                upper: Scalar::Float(f64::INFINITY),
                truncated: true,
                descendants: 0,
                best: None,
            });
        };
        let mut ub = b.to_vec();
        ub.extend_from_slice(&suffix);
        // exact product along the best path
        let prod = self.path_between(&ub, pos, b, j)?;
        let upper = prod.abs().recip().unwrap_or(Scalar::Float(f64::INFINITY));
        let lower = if q.is_infinite() {
            upper.clone()
        } else {
            Scalar::Float((-agg.log_sum_q / q).exp2())
        };
        Ok(PreimageBounds {
            lower,
            upper,
            truncated: agg.truncated,
            descendants: agg.count,
            best: Some((ub, pos)),
        })
    }

    /// Exact weight product from `e^u_i` down to its ancestor `e^b_j`.
    pub fn path_between(&self, u: &[u64], i: u64, b: &[u64], j: u64) -> Result<Scalar> {
        if !u.starts_with(b) {
            return Err(Error::Argument("not a descendant".into()));
        }
        let mut cur = u.to_vec();
        let mut p = self.seg_prod(&cur, i)?;
        while cur.len() > b.len() {
            p = p * self.w_join(&cur)?;
            cur.pop();
            let l = self.seg_len(&cur)?;
            p = p * self.seg_prod(&cur, l)?;
        }
        Ok(p.checked_div(&self.seg_prod(b, j)?).unwrap())
    }

    fn memo_key(&self, b: &[u64]) -> Vec<u64> {
        match &self.kind {
            TreeKind::MixC0 { .. } | TreeKind::FhcTree { .. } => vec![(b.len() <= 1) as u64, last(b)],
            _ => b.to_vec(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        b: &[u64],
        pos: u64,
        r: u64,
        crossings: u32,
        budget: u64,
        q: f64,
        memo: &mut HashMap<(Vec<u64>, u64, u64, u32), Agg>,
    ) -> Result<Agg> {
        let key = (self.memo_key(b), pos, r, crossings);
        if let Some(a) = memo.get(&key) {
            return Ok(a.clone());
        }
        let l = self.seg_len(b)?;
        let agg = if pos + r <= l {
            let lg = self.seg_prod(b, pos + r)?.log2_abs() - self.seg_prod(b, pos)?.log2_abs();
            Agg::single(lg, q, (Vec::new(), pos + r))
        } else if crossings == 0 {
            Agg::empty(true)
        } else {
            let base = self.seg_prod(b, l)?.log2_abs() - self.seg_prod(b, pos)?.log2_abs();
            let rem = r - (l - pos) - 1;
            let mut acc = Agg::empty(true);
            for c in 1..=budget {
                let child = child_of(b, c);
                let sub = self.descend(&child, 1, rem, crossings - 1, budget, q, memo)?;
                let shift = base + self.w_join(&child)?.log2_abs();
                acc.merge(sub.shifted(shift, q, c));
            }
            acc.truncated = true;
            acc
        };
        memo.insert(key, agg.clone());
        Ok(agg)
    }

    /// Random valid vertex at most `max_depth` generations below the root.
    pub fn sample_vertex(&self, rng: &mut ChaCha8Rng, max_depth: usize) -> (Vec<u64>, u64) {
        let depth_cap = match self.kind {
            TreeKind::PropTree => max_depth.min(3),
            _ => max_depth,
        };
        let depth = rng.gen_range(0..=depth_cap);
        let mut b = vec![1u64];
        for _ in 0..depth {
            b.push(rng.gen_range(1..=4));
        }
        let l = self.seg_len(&b).unwrap_or(1);
        let pos = if rng.gen_bool(0.5) {
            rng.gen_range(1..=l.min(6))
        } else {
            l - rng.gen_range(0..l.min(3))
        };
        (b, pos)
    }

    /// Intervals `[a_c + N_c + c, l_c]` of the children of `b` covering
    /// `[a_1 + N_1 + 1, m]`; the chain has no gaps when each start equals the
    /// previous end.
    pub fn covering(&self, b: &[u64], m: &BigInt) -> Result<CoveringReport> {
        if !matches!(self.kind, TreeKind::PropTree) {
            return Err(Error::Unsupported("covering is defined for the proportional tree".into()));
        }
        let mut intervals = Vec::new();
        let mut gaps = Vec::new();
        let mut c = 1u64;
        loop {
            let p = self.prop(&child_of(b, c))?;
            let start = &p.a + &p.n + BigInt::from(c);
            if c == 1 && &start > m {
                break;
            }
            if let Some((_, prev_end)) = intervals.last() {
                gaps.push(&start - prev_end);
            }
            let end = p.l.clone();
            let done = &end >= m;
            intervals.push((start, end));
            if done {
                break;
            }
            c += 1;
        }
        let chained = gaps.iter().all(Zero::is_zero);
        Ok(CoveringReport {
            branch: b.to_vec(),
            intervals,
            gaps,
            chained,
        })
    }

    /// Instantiates the no-fixed-point inequality along
    /// `b, (b, c1), (b, c1, c2), ..`, one step per branch.
    pub fn fixed_point_cascade(&self, b: &[u64], children: &[u64]) -> Result<CascadeReport> {
        let mut steps = Vec::new();
        let mut cur = b.to_vec();
        for (i, &c) in children.iter().enumerate() {
            if i > 0 {
                cur.push(c);
            }
            let nk = last(&cur) as i64;
            let (exponent, formula) = match &self.kind {
                TreeKind::MixC0 { .. } => {
                    let n1 = self.mix_n1(&cur);
                    (n1 - 2 * nk, format!("2^(N(b,1) - 2 n_k) = 2^({n1} - {})", 2 * nk))
                }
                TreeKind::FhcTree { .. } => {
                    let l = self.seg_len(&cur)? as i64;
                    let n = if cur.len() <= 1 {
                        2 * l + nk
                    } else {
                        self.exponent_i64(&cur)?
                    };
                    (
                        -2 * (l - 2) + n - nk - 2,
                        format!("4^(-{l}+2) 2^{n} 2^(-{nk}-2)"),
                    )
                }
                _ => return Err(Error::Unsupported("cascade is defined for mixc0 and fhctree".into())),
            };
            let bound = Scalar::pow2(exponent);
            steps.push(CascadeStep {
                branch: cur.clone(),
                exponent,
                holds: !bound.lt(&Scalar::one()),
                bound,
                formula,
            });
        }
        Ok(CascadeReport { steps })
    }
}

fn prop_a_n(s: &BigInt, d: &BigInt, nk: &BigInt) -> (BigInt, BigInt) {
    let base: BigInt = s + 2 * d + 3;
    (&base * &base, nk + 2 * d + 1)
}

#[derive(Clone, Debug)]
struct Agg {
    best_log: f64,
    best: Option<(Vec<u64>, u64)>,
    log_sum_q: f64,
    count: u64,
    truncated: bool,
}

impl Agg {
    fn empty(truncated: bool) -> Self {
        Agg {
            best_log: f64::NEG_INFINITY,
            best: None,
            log_sum_q: f64::NEG_INFINITY,
            count: 0,
            truncated,
        }
    }

    fn single(lg: f64, q: f64, at: (Vec<u64>, u64)) -> Self {
        Agg {
            best_log: lg,
            best: Some(at),
            log_sum_q: if q.is_infinite() { lg } else { lg * q },
            count: 1,
            truncated: false,
        }
    }

    fn shifted(&self, s: f64, q: f64, child: u64) -> Agg {
        let best = self.best.as_ref().map(|(suffix, pos)| {
            let mut v = vec![child];
            v.extend_from_slice(suffix);
            (v, *pos)
        });
        Agg {
            best_log: self.best_log + s,
            best,
            log_sum_q: if q.is_infinite() {
                self.log_sum_q + s
            } else {
                self.log_sum_q + s * q
            },
            count: self.count,
            truncated: self.truncated,
        }
    }

    fn merge(&mut self, o: Agg) {
        if o.best.is_some() && (self.best.is_none() || o.best_log > self.best_log) {
            self.best_log = o.best_log;
            self.best = o.best;
        }
        self.log_sum_q = log2_add(self.log_sum_q, o.log_sum_q);
        self.count += o.count;
        self.truncated |= o.truncated;
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Result of [`SegmentedTreeShift::min_preimage_norm`].
///
/// `upper` comes from the best single descendant and is attained. `lower` is
/// the dual-norm value over the enumerated descendants; it is a true lower
/// bound only when `truncated` is false.
#[derive(Clone, Debug)]
pub struct PreimageBounds {
    pub lower: Scalar,
    pub upper: Scalar,
    pub truncated: bool,
    pub descendants: u64,
    pub best: Option<(Vec<u64>, u64)>,
}

#[derive(Clone, Debug)]
pub struct CoveringReport {
    pub branch: Vec<u64>,
    pub intervals: Vec<(BigInt, BigInt)>,
    /// `start_{c+1} - end_c` for consecutive intervals.
    pub gaps: Vec<BigInt>,
    pub chained: bool,
}

#[derive(Clone, Debug)]
pub struct CascadeStep {
    pub branch: Vec<u64>,
    pub exponent: i64,
    pub bound: Scalar,
    pub holds: bool,
    pub formula: String,
}

#[derive(Clone, Debug)]
pub struct CascadeReport {
    pub steps: Vec<CascadeStep>,
}

impl CascadeReport {
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }
}

pub fn child_of(b: &[u64], c: u64) -> Vec<u64> {
    let mut v = b.to_vec();
    v.push(c);
    v
}

pub(crate) fn last(b: &[u64]) -> u64 {
    *b.last().unwrap_or(&1)
}

pub fn branch_string(b: &[u64]) -> String {
    let parts: Vec<String> = b.iter().map(u64::to_string).collect();
    format!("({})", parts.join(","))
}

pub(crate) fn vertex_of(a: &Address) -> Result<(&[u64], u64)> {
    match a.tokens() {
        [Token::Vertex { branch, pos }] => Ok((branch, *pos)),
        _ => Err(Error::Address {
            address: a.to_string(),
            reason: "expected a tree vertex".into(),
        }),
    }
}

/// Ratio `l / a` of the proportional tree and the upper bound
/// `((s+1)/s)^2 + 2/s`, both exact.
pub fn prop_density_ratio(t: &SegmentedTreeShift, b: &[u64]) -> Result<(Scalar, Scalar)> {
    let p = t.prop(b)?;
    let s: i64 = b[1..].iter().map(|x| *x as i64).sum();
    let ratio = Scalar::Exact(num_rational::BigRational::new(p.l.clone(), p.a.clone()));
    let bound = Scalar::ratio((s + 1) * (s + 1), s * s) + Scalar::ratio(2, s);
    Ok((ratio, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(kind: TreeKind, norm: NormKind) -> Arc<SegmentedTreeShift> {
        Arc::new(SegmentedTreeShift::build(kind, norm).unwrap())
    }

    fn space(t: &Arc<SegmentedTreeShift>) -> Arc<SpaceSpec> {
        Arc::new(SpaceSpec::Tree(t.clone()))
    }

    fn e(t: &Arc<SegmentedTreeShift>, b: &[u64], j: u64) -> SeqVector {
        SeqVector::delta(space(t), Address::vertex(b, j), Scalar::one()).unwrap()
    }

    #[test]
    fn mixc0_default_weights() {
        let t = tree(TreeKind::mixc0(), NormKind::Sup);
        assert_eq!(t.w_join(&[1, 1]).unwrap(), Scalar::ratio(1, 4));
        assert_eq!(t.seg_len(&[1, 2]).unwrap(), 2);
        let y = t.apply(&e(&t, &[1, 2], 2)).unwrap();
        assert_eq!(y, e(&t, &[1, 2], 1).scale(&Scalar::int(4)));
        let z = t.apply(&e(&t, &[1, 1], 1)).unwrap();
        assert_eq!(z, e(&t, &[1], 1).scale(&Scalar::ratio(1, 4)));
        assert!(t.apply(&e(&t, &[1], 1)).unwrap().is_zero());
    }

    #[test]
    fn proptree_recurrences() {
        let t = tree(TreeKind::PropTree, NormKind::l1());
        let p = t.prop(&[1, 1]).unwrap();
        assert_eq!((p.a.clone(), p.n.clone(), p.l.clone()), (16.into(), 2.into(), 30.into()));
        let p = t.prop(&[1, 2]).unwrap();
        assert_eq!((p.a.clone(), p.n.clone(), p.l.clone()), (25.into(), 3.into(), 43.into()));
        for n1 in 1..20i64 {
            let p = t.prop(&[1, n1 as u64]).unwrap();
            assert_eq!(p.a, BigInt::from((n1 + 3) * (n1 + 3)));
            assert_eq!(p.n, BigInt::from(n1 + 1));
            assert_eq!(p.l, BigInt::from((n1 + 4) * (n1 + 4) + 2 * n1 + 3));
        }
    }

    #[test]
    fn fhctree_parameters() {
        let t = tree(TreeKind::fhc(), NormKind::l1());
        assert_eq!(t.seg_len(&[1, 1]).unwrap(), 3);
        assert_eq!(t.branch_exponent(&[1, 1]).unwrap(), BigInt::from(7));
        assert_eq!(t.seg_len(&[1]).unwrap(), 3);
        assert_eq!(t.w_seg(&[1, 1], 3).unwrap(), Scalar::pow2(-7));
        assert_eq!(t.w_seg(&[1, 1], 2).unwrap(), Scalar::int(4));
        assert_eq!(t.w_join(&[1, 1]).unwrap(), Scalar::int(4));
    }

    #[test]
    fn fhctree_is_unbounded_off_l1() {
        let err = SegmentedTreeShift::build(TreeKind::fhc(), NormKind::Sup).unwrap_err();
        assert!(matches!(err, Error::TreeAudit { .. }), "{err}");
        assert!(SegmentedTreeShift::build(TreeKind::fhc(), NormKind::lp_int(2)).is_err());
    }

    #[test]
    fn custom_tree_audit_catches_divergent_joins() {
        let c = CustomTree {
            name: "flat".into(),
            seg_len: Box::new(|_| 1),
            w_seg: Box::new(|_, _| Scalar::one()),
            w_join: Box::new(|_| Scalar::ratio(1, 2)),
            join_sum: Box::new(|_| Some(Scalar::int(1))),
            norm_bound: Scalar::int(1),
            audit_depth: 1,
        };
        let err = SegmentedTreeShift::build(TreeKind::Custom(Arc::new(c)), NormKind::Sup).unwrap_err();
        assert!(err.to_string().contains("(1)"), "{err}");
    }

    #[test]
    fn path_products() {
        let t = tree(TreeKind::mixc0(), NormKind::Sup);
        assert_eq!(t.path_weight_product(&[1], 1).unwrap().to_scalar(), Scalar::one());
        for n1 in 1..6u64 {
            for j in 1..=n1 {
                let n = t.branch_exponent(&[1, n1]).unwrap().to_i64().unwrap();
                let expect = Scalar::pow2(2 * (j as i64 - 1) - n);
                assert_eq!(t.path_weight_product(&[1, n1], j).unwrap().to_scalar(), expect);
            }
        }
        let p = tree(TreeKind::PropTree, NormKind::l1());
        for j in 1..=16 {
            assert_eq!(p.path_weight_product(&[1, 1], j).unwrap().to_scalar(), Scalar::pow2(-2));
        }
    }

    #[test]
    fn lifts_invert_exactly() {
        for kind in [TreeKind::mixc0(), TreeKind::PropTree, TreeKind::fhc()] {
            let norm = if matches!(kind, TreeKind::MixC0 { .. }) { NormKind::Sup } else { NormKind::l1() };
            let t = tree(kind, norm);
            for (b, j) in [(vec![1], 1), (vec![1, 2], 1), (vec![1, 3, 1], 1)] {
                let y = e(&t, &b, j);
                for n in 0..40 {
                    let mut z = t.backward_lift(&y, n).unwrap();
                    for _ in 0..n {
                        z = t.apply(&z).unwrap();
                    }
                    assert_eq!(z, y, "{} n={n}", t.kind().name());
                }
            }
        }
    }

    #[test]
    fn mixc0_root_lift_decays() {
        let t = tree(TreeKind::mixc0(), NormKind::Sup);
        let y = e(&t, &[1], 1);
        assert_eq!(t.backward_lift(&y, 1).unwrap(), e(&t, &[1, 1], 1).scale(&Scalar::int(4)));
        for n in 1..30 {
            assert_eq!(t.backward_lift(&y, n).unwrap().norm(), Scalar::pow2(3 - n as i64));
        }
    }

    #[test]
    fn fhc_lift_magnitude() {
        let t = tree(TreeKind::fhc(), NormKind::l1());
        for (b, j) in [(vec![1u64], 1u64), (vec![1, 2], 2), (vec![1, 1, 3], 1)] {
            let l = t.seg_len(&b).unwrap();
            let n_exp = if b.len() == 1 { 7 } else { t.branch_exponent(&b).unwrap().to_i64().unwrap() };
            for n in (l - j + 1)..(l - j + 12) {
                let z = t.backward_lift(&e(&t, &b, j), n).unwrap();
                assert_eq!(z.norm(), Scalar::pow2(n_exp - 2 * (n as i64 - 1)));
            }
        }
    }

    #[test]
    fn preimage_bounds_on_a_segment() {
        let t = tree(TreeKind::PropTree, NormKind::l1());
        let b = t.min_preimage_norm(&[1, 1], 3, 5, 8).unwrap();
        assert!(!b.truncated);
        assert_eq!(b.upper, Scalar::one());
        assert_eq!(b.lower, b.upper);
        let z = t.min_preimage_norm(&[1, 1], 3, 0, 8).unwrap();
        assert_eq!((z.lower, z.upper), (Scalar::one(), Scalar::one()));
    }

    #[test]
    fn preimage_upper_in_covering_window() {
        let t = tree(TreeKind::PropTree, NormKind::l1());
        // root has l = 1, so m steps land at position m of a child
        for m in 19..=43u64 {
            let c = if m <= 30 { 1 } else { 2 };
            let p = t.prop(&[1, c]).unwrap();
            let bound = Scalar::pow2(p.n.to_i64().unwrap() - 2 * (m as i64 - p.a.to_i64().unwrap()));
            let r = t.min_preimage_norm(&[1], 1, m, 16).unwrap();
            assert!(r.upper.le(&bound), "m={m}");
            assert!(r.lower.le(&r.upper));
        }
    }

    #[test]
    fn preimage_upper_nonincreasing_in_budget() {
        let t = tree(TreeKind::mixc0(), NormKind::Sup);
        for m in 1..12 {
            let mut prev = Scalar::Float(f64::INFINITY);
            for budget in 1..8 {
                let r = t.min_preimage_norm(&[1], 1, m, budget).unwrap();
                assert!(r.upper.le(&prev), "m={m} budget={budget}");
                assert!(r.lower.le(&r.upper));
                prev = r.upper;
            }
        }
    }

    #[test]
    fn covering_root() {
        let t = tree(TreeKind::PropTree, NormKind::l1());
        let r = t.covering(&[1], &BigInt::from(43)).unwrap();
        let iv: Vec<(i64, i64)> = r
            .intervals
            .iter()
            .map(|(a, b)| (a.to_i64().unwrap(), b.to_i64().unwrap()))
            .collect();
        assert_eq!(iv, vec![(19, 30), (30, 43)]);
        assert!(r.chained);
        let empty = t.covering(&[1], &BigInt::from(10)).unwrap();
        assert!(empty.intervals.is_empty() && empty.chained);
    }

    #[test]
    fn cascades() {
        let m = tree(TreeKind::mixc0(), NormKind::Sup);
        let r = m.fixed_point_cascade(&[1, 3], &[1, 2, 5]).unwrap();
        assert!(r.steps.iter().all(|s| s.exponent == 0 && s.holds));
        let f = tree(TreeKind::fhc(), NormKind::l1());
        let r = f.fixed_point_cascade(&[1, 1], &[1]).unwrap();
        assert_eq!(r.steps[0].bound, Scalar::int(4));
        assert!(m.fixed_point_cascade(&[1], &[]).unwrap().steps.is_empty());
    }

    #[test]
    fn density_ratio_bound() {
        let t = tree(TreeKind::PropTree, NormKind::l1());
        for n1 in 1..=30u64 {
            let (ratio, bound) = prop_density_ratio(&t, &[1, n1]).unwrap();
            assert!(Scalar::one().le(&ratio) && ratio.le(&bound));
        }
    }
}
