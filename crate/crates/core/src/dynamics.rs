//! Operators seen as dynamical systems: orbits, lifts and the least-norm
//! problems behind return sets `N_T(U, V)`.

use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::graph::GraphShift;
use crate::linalg::{solve_hit, HitMode, Matrix};
use crate::scalar::Scalar;
use crate::shift::{from_coords, to_coords, BlockShift, ComponentOperator, Family};
use crate::spaces::{IndexSet, NormKind, SeqVector, SpaceSpec, Token};
use crate::tree::{vertex_of, SegmentedTreeShift};

type Q = BigRational;

/// A bounded operator `T: X -> X`.
#[derive(Clone, Debug)]
pub struct Operator {
    inner: ComponentOperator,
    space: Arc<SpaceSpec>,
}

impl Operator {
    pub fn new(op: ComponentOperator) -> Result<Self> {
        let space = op.dom_space();
        if *space != *op.cod_space() {
            return Err(Error::SpaceMismatch("an operator needs T: X -> X".into()));
        }
        Ok(Operator { inner: op, space })
    }

    pub fn block(b: BlockShift) -> Self {
        let b = Arc::new(b);
        Operator {
            space: b.space().clone(),
            inner: ComponentOperator::Nested(b),
        }
    }

    pub fn tree(t: SegmentedTreeShift) -> Self {
        let t = Arc::new(t);
        Operator {
            space: Arc::new(SpaceSpec::Tree(t.clone())),
            inner: ComponentOperator::Tree(t),
        }
    }

    pub fn graph(g: GraphShift) -> Self {
        Operator {
            space: Arc::new(SpaceSpec::Graph),
            inner: ComponentOperator::Graph(Arc::new(g)),
        }
    }

    pub fn component(&self) -> &ComponentOperator {
        &self.inner
    }

    pub fn space(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    pub fn as_block(&self) -> Option<&Arc<BlockShift>> {
        match &self.inner {
            ComponentOperator::Nested(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_tree(&self) -> Option<&Arc<SegmentedTreeShift>> {
        match &self.inner {
            ComponentOperator::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_graph(&self) -> Option<&Arc<GraphShift>> {
        match &self.inner {
            ComponentOperator::Graph(g) => Some(g),
            _ => None,
        }
    }

    /// The tree `T` when this operator is `T` or its lift `B_T`.
    pub fn underlying_tree(&self) -> Option<&Arc<SegmentedTreeShift>> {
        match &self.inner {
            ComponentOperator::Tree(t) => Some(t),
            ComponentOperator::Nested(b) => match b.family() {
                Family::Constant(ComponentOperator::Tree(t)) => Some(t),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn index_set(&self) -> Option<IndexSet> {
        self.as_block().map(|b| b.index_set())
    }

    pub fn is_bilateral(&self) -> bool {
        self.index_set() == Some(IndexSet::Bilateral)
    }

    /// Norm of the ambient space at the outermost level.
    pub fn ambient_norm(&self) -> NormKind {
        self.space.norm_kind()
    }

    /// Every component (or the operator itself) acts on a line.
    pub fn is_scalar_chain(&self) -> bool {
        match &self.inner {
            ComponentOperator::Nested(b) => b.is_scalar_chain(),
            op => op.is_one_dimensional(),
        }
    }

    pub fn norm_bound(&self) -> Scalar {
        self.inner.norm().0
    }

    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        self.inner.apply(x)
    }

    pub fn power(&self, x: &SeqVector, n: u64) -> Result<SeqVector> {
        let mut z = x.clone();
        for _ in 0..n {
            if z.is_zero() {
                break;
            }
            z = self.apply(&z)?;
        }
        Ok(z)
    }

    /// `||T^n x||` for `n = 0..=steps`.
    pub fn orbit_norms(&self, x: &SeqVector, steps: usize) -> Result<Vec<Scalar>> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut z = x.clone();
        out.push(z.norm());
        for _ in 0..steps {
            if !z.is_zero() {
                z = self.apply(&z)?;
            }
            out.push(z.norm());
        }
        Ok(out)
    }

    /// One-step right inverse.
    pub fn right_inverse(&self, y: &SeqVector) -> Result<SeqVector> {
        self.inner.right_inverse(y).map(|z| z.with_space(self.space.clone()))
    }

    /// The canonical `S_n` with `T^n S_n y = y`.
    pub fn lift(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        self.inner.lift(y, n).map(|z| z.with_space(self.space.clone()))
    }

    pub fn describe(&self) -> String {
        match &self.inner {
            ComponentOperator::Nested(b) => {
                let fam = match b.family() {
                    Family::Constant(op) => format!("B_T, T = {}", op.kind_name()),
                    Family::Table { .. } => "B_(T_k)".to_string(),
                };
                format!("{fam} on {}", space_label(&self.space))
            }
            op => format!("{} on {}", op.kind_name(), space_label(&self.space)),
        }
    }
}

pub fn space_label(s: &SpaceSpec) -> String {
    let norm = |n: &NormKind| match n {
        NormKind::Sup => "c0".to_string(),
        NormKind::Lp(p) => format!("l^{p}"),
    };
    match s {
        SpaceSpec::Scalar => "K".into(),
        SpaceSpec::FiniteDim { dim, norm: n } => format!("{}(K^{dim})", norm(n)),
        SpaceSpec::Tree(t) => format!("{}({})", norm(t.norm()), t.kind().name()),
        SpaceSpec::Graph => "l^1(V)".into(),
        SpaceSpec::Sum {
            components,
            index_set,
            norm: n,
        } => {
            let set = match index_set {
                IndexSet::Unilateral => "N",
                IndexSet::Bilateral => "Z",
            };
            format!("{}({},{set})", norm(n), space_label(components.get(1)))
        }
    }
}

/// An open ball `U`: component-level (`index = Some(j)`, center in `X_j`)
/// for block shifts, or in the whole space.
#[derive(Clone, Debug)]
pub struct Target {
    pub index: Option<i64>,
    pub center: SeqVector,
    pub radius: Scalar,
}

impl Target {
    pub fn new(index: Option<i64>, center: SeqVector, radius: Scalar) -> Result<Self> {
        if !Scalar::zero().lt(&radius) {
            return Err(Error::Argument("target radius must be positive".into()));
        }
        Ok(Target { index, center, radius })
    }
}

/// Bounds on a least-norm value, with an attaining witness for `upper`.
#[derive(Clone, Debug)]
pub struct HitReport {
    pub n: u64,
    pub lower: Scalar,
    pub upper: Scalar,
    pub witness: Option<SeqVector>,
    pub exact: bool,
    pub method: &'static str,
}

enum Reduced {
    Finite {
        a: Matrix,
        y: Vec<Scalar>,
        dom: NormKind,
        cod: NormKind,
        dom_space: Arc<SpaceSpec>,
    },
    Lifted {
        candidates: Vec<SeqVector>,
        a_bound: Scalar,
    },
}

fn to_q(x: &Scalar) -> Result<Q> {
    match x {
        Scalar::Exact(q) => Ok(q.clone()),
        Scalar::Float(f) => {
            BigRational::from_float(*f).ok_or_else(|| Error::Argument(format!("non-finite value {f}")))
        }
    }
}

fn finite_dim(s: &SpaceSpec) -> Option<usize> {
    match s {
        SpaceSpec::Scalar => Some(1),
        SpaceSpec::FiniteDim { dim, .. } => Some(*dim as usize),
        _ => None,
    }
}

fn matrix_power(m: &Matrix, n: u64) -> Result<Matrix> {
    let mut acc = Matrix::scaled_identity(m.rows(), &Scalar::one());
    for _ in 0..n {
        acc = acc.mul(m)?;
    }
    Ok(acc)
}

impl Operator {
    fn check_target(&self, t: &Target) -> Result<Arc<SpaceSpec>> {
        let expect = match (t.index, self.as_block()) {
            (Some(j), Some(b)) => {
                if !b.index_set().contains(j) {
                    return Err(Error::Argument(format!("target index {j} outside {}", b.index_set().as_str())));
                }
                b.component_space(j)
            }
            (Some(_), None) => return Err(Error::Argument("component targets need a block shift".into())),
            (None, _) => self.space.clone(),
        };
        if **t.center.space() != *expect {
            return Err(Error::SpaceMismatch("target center is not in the expected space".into()));
        }
        Ok(expect)
    }

    fn tree_candidate(&self, tree: &SegmentedTreeShift, y: &SeqVector, n: u64, space: &Arc<SpaceSpec>) -> Option<SeqVector> {
        let (a, c) = match y.entries().iter().collect::<Vec<_>>().as_slice() {
            [(a, c)] => ((*a).clone(), (*c).clone()),
            _ => return None,
        };
        let (b, j) = vertex_of(&a).ok()?;
        let pb = tree.min_preimage_norm(b, j, n, 64).ok()?;
        let (ub, pos) = pb.best?;
        let coef = tree.path_between(&ub, pos, b, j).ok()?.recip()?;
        SeqVector::from_entries(space.clone(), [(crate::spaces::Address::vertex(&ub, pos), coef * c)]).ok()
    }

    fn reduce(&self, t: &Target, n: u64) -> Result<Reduced> {
        let y = &t.center;
        match (t.index, &self.inner) {
            (Some(j), ComponentOperator::Nested(b)) => {
                let window = b.compose_window(j, j + n as i64)?;
                let dom_space = b.component_space(j + n as i64);
                let cod_space = b.component_space(j);
                if let (Some(a), Some(_), Some(_)) = (window.as_matrix(), finite_dim(&dom_space), finite_dim(&cod_space))
                {
                    return Ok(Reduced::Finite {
                        y: to_coords(y, a.rows())?,
                        a,
                        dom: dom_space.norm_kind(),
                        cod: cod_space.norm_kind(),
                        dom_space,
                    });
                }
                let mut candidates = vec![b.lift_component(j, y, n)?.with_space(dom_space.clone())];
                if let Family::Constant(ComponentOperator::Tree(tree)) = b.family() {
                    candidates.extend(self.tree_candidate(tree, y, n, &dom_space));
                }
                Ok(Reduced::Lifted {
                    candidates,
                    a_bound: b.norm_bound().value.powi(n as i32),
                })
            }
            (None, ComponentOperator::Matrix { m, dom, cod }) => Ok(Reduced::Finite {
                a: matrix_power(m, n)?,
                y: to_coords(y, m.rows())?,
                dom: dom.clone(),
                cod: cod.clone(),
                dom_space: self.space.clone(),
            }),
            (None, ComponentOperator::ScalarWeight { w, space }) if finite_dim(space).is_some() => {
                let d = finite_dim(space).unwrap();
                Ok(Reduced::Finite {
                    a: Matrix::scaled_identity(d, &w.powi(n as i32)),
                    y: to_coords(y, d)?,
                    dom: space.norm_kind(),
                    cod: space.norm_kind(),
                    dom_space: space.clone(),
                })
            }
            (None, op) => {
                let mut candidates = vec![self.lift(y, n)?];
                if let ComponentOperator::Tree(tree) = op {
                    candidates.extend(self.tree_candidate(tree, y, n, &self.space));
                }
                Ok(Reduced::Lifted {
                    candidates,
                    a_bound: self.norm_bound().powi(n as i32),
                })
            }
            (Some(_), _) => Err(Error::Argument("component targets need a block shift".into())),
        }
    }

    /// `u*(n) = inf_z max(||z||, ||T^n z - y|| / eps)`; the ball `U` meets
    /// `T^n B(0,1)` iff `u*(n) < 1`.
    pub fn hit_value(&self, t: &Target, n: u64) -> Result<HitReport> {
        self.check_target(t)?;
        let ynorm = t.center.norm();
        match self.reduce(t, n)? {
            Reduced::Finite {
                a,
                y,
                dom,
                cod,
                dom_space,
            } => {
                let aq = exact_rows(&a)?;
                let yq = y.iter().map(to_q).collect::<Result<Vec<_>>>()?;
                let hb = solve_hit(&aq, &yq, &dom, &cod, &HitMode::Joint(to_q(&t.radius)?));
                Ok(HitReport {
                    n,
                    lower: hb.lower,
                    upper: hb.upper,
                    witness: hb.witness.map(|w| from_coords(dom_space, &w, false)),
                    exact: hb.exact,
                    method: "linear program",
                })
            }
            Reduced::Lifted { candidates, a_bound } => {
                let lower = ynorm
                    .checked_div(&(a_bound + t.radius.clone()))
                    .unwrap_or_else(Scalar::zero);
                let z = best(candidates);
                let a = z.norm();
                let b = ynorm.checked_div(&t.radius).unwrap();
                let sum = a.clone() + b.clone();
                if sum.is_zero() {
                    return Ok(HitReport {
                        n,
                        lower: Scalar::zero(),
                        upper: Scalar::zero(),
                        witness: Some(z),
                        exact: true,
                        method: "zero target",
                    });
                }
                let tt = b.checked_div(&sum).unwrap();
                Ok(HitReport {
                    n,
                    lower,
                    upper: (a * b).checked_div(&sum).unwrap(),
                    witness: Some(z.scale(&tt)),
                    exact: false,
                    method: "scaled lift",
                })
            }
        }
    }

    /// `v(n) = inf { ||z|| : T^n z in B(y, eps) }`.
    pub fn ball_preimage(&self, t: &Target, n: u64) -> Result<HitReport> {
        self.check_target(t)?;
        let ynorm = t.center.norm();
        let slack = (ynorm.clone() - t.radius.clone()).max(Scalar::zero());
        match self.reduce(t, n)? {
            Reduced::Finite {
                a,
                y,
                dom,
                cod,
                dom_space,
            } => {
                let aq = exact_rows(&a)?;
                let yq = y.iter().map(to_q).collect::<Result<Vec<_>>>()?;
                let hb = solve_hit(&aq, &yq, &dom, &cod, &HitMode::Ball(to_q(&t.radius)?));
                Ok(HitReport {
                    n,
                    lower: hb.lower,
                    upper: hb.upper,
                    witness: hb.witness.map(|w| from_coords(dom_space, &w, false)),
                    exact: hb.exact,
                    method: "linear program",
                })
            }
            Reduced::Lifted { candidates, a_bound } => {
                let lower = slack.checked_div(&a_bound).unwrap_or_else(Scalar::zero);
                let z = best(candidates);
                let tt = slack.checked_div(&ynorm).unwrap_or_else(Scalar::zero);
                let w = z.scale(&tt);
                Ok(HitReport {
                    n,
                    lower,
                    upper: w.norm(),
                    witness: Some(w),
                    exact: false,
                    method: "scaled lift",
                })
            }
        }
    }

    /// Bilateral forward condition: bounds on
    /// `inf { ||T_{j-n,j} u|| : u in B(y, eps) }`.
    pub fn forward_value(&self, t: &Target, n: u64) -> Result<HitReport> {
        self.check_target(t)?;
        let (j, b) = match (t.index, self.as_block()) {
            (Some(j), Some(b)) if b.index_set() == IndexSet::Bilateral => (j, b),
            _ => return Err(Error::Unsupported("forward values need a component target of a bilateral shift".into())),
        };
        let y = &t.center;
        let ynorm = y.norm();
        let img = b.forward_component(j, y, n)?;
        let p = img.norm();
        let tt = (ynorm.clone() - t.radius.clone())
            .max(Scalar::zero())
            .checked_div(&ynorm)
            .unwrap_or_else(Scalar::zero);
        let upper = tt.clone() * p.clone();
        let one_dim = b.is_scalar_chain();
        let lower = if one_dim {
            upper.clone()
        } else {
            let a_bound = b.norm_bound().value.powi(n as i32);
            (p - a_bound * t.radius.clone()).max(Scalar::zero())
        };
        Ok(HitReport {
            n,
            lower,
            upper,
            witness: Some(y.scale(&tt)),
            exact: one_dim,
            method: if one_dim { "closed form" } else { "scaled center" },
        })
    }

    /// Re-applies the operator to a witness: returns `(||z||, ||T^n z - y||)`
    /// (component-wise for component targets).
    pub fn check_witness(&self, t: &Target, n: u64, z: &SeqVector) -> Result<(Scalar, Scalar)> {
        let img = match (t.index, self.as_block()) {
            (Some(j), Some(b)) => {
                let full = b.embed(j + n as i64, z)?;
                b.extract(j, &self.power(&full, n)?)
            }
            _ => self.power(&z.with_space(self.space.clone()), n)?,
        };
        Ok((z.norm(), img.sub(&t.center.with_space(img.space().clone()))?.norm()))
    }
}

fn exact_rows(a: &Matrix) -> Result<Vec<Vec<Q>>> {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| to_q(a.get(i, j))).collect())
        .collect()
}

fn best(candidates: Vec<SeqVector>) -> SeqVector {
    candidates
        .into_iter()
        .min_by(|a, b| a.norm().cmp_value(&b.norm()))
        .expect("at least one candidate")
}

/// Vector `c * delta_k` in a sum of scalars.
pub fn scalar_delta(space: &Arc<SpaceSpec>, k: i64, c: Scalar) -> Result<SeqVector> {
    SeqVector::delta(space.clone(), crate::spaces::Address::new(vec![Token::Seq(k)]), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::WeightFormula;
    use crate::tree::TreeKind;

    fn doubling() -> Operator {
        Operator::block(
            BlockShift::lift_of(ComponentOperator::scalar(Scalar::int(2)), IndexSet::Unilateral, NormKind::l1())
                .unwrap(),
        )
    }

    fn scalar_target(op: &Operator, j: i64, y: Scalar, eps: Scalar) -> Target {
        let b = op.as_block().unwrap();
        let c = SeqVector::from_entries(b.component_space(j), [(crate::spaces::Address::default(), y)]).unwrap();
        Target::new(Some(j), c, eps).unwrap()
    }

    #[test]
    fn doubling_hits_eight_at_three() {
        let op = doubling();
        let t = scalar_target(&op, 1, Scalar::int(8), Scalar::ratio(1, 2));
        let v2 = op.hit_value(&t, 2).unwrap();
        let v3 = op.hit_value(&t, 3).unwrap();
        assert!(v2.exact && Scalar::one().lt(&v2.lower));
        // |z| = u, 8 - 8z = u/2 gives u = 16/17
        assert_eq!(v3.upper, Scalar::ratio(16, 17));
        let (zn, dist) = op.check_witness(&t, 3, v3.witness.as_ref().unwrap()).unwrap();
        assert!(zn.lt(&Scalar::one()) && dist.le(&Scalar::ratio(1, 2)));
    }

    #[test]
    fn scalar_ball_preimage_closed_form() {
        let op = doubling();
        let t = scalar_target(&op, 2, Scalar::int(3), Scalar::one());
        for n in 0..6u64 {
            let r = op.ball_preimage(&t, n).unwrap();
            assert_eq!(r.upper, Scalar::ratio(2, 1 << n));
            assert_eq!(r.lower, r.upper);
        }
    }

    #[test]
    fn bilateral_forward_values() {
        let b = BlockShift::new(IndexSet::Bilateral, Family::formula(WeightFormula::ChaosGap), NormKind::l1()).unwrap();
        let op = Operator::block(b);
        let t = scalar_target(&op, 0, Scalar::one(), Scalar::ratio(1, 2));
        // T_{-n,0} on X_0 multiplies by 4/(n-1) for n >= 3
        for n in 3..20u64 {
            let f = op.forward_value(&t, n).unwrap();
            assert_eq!(f.upper, Scalar::ratio(2, n as i64 - 1));
        }
    }

    #[test]
    fn tree_hits_use_lifts() {
        let tree = SegmentedTreeShift::build(TreeKind::mixc0(), NormKind::Sup).unwrap();
        let op = Operator::tree(tree);
        let y = SeqVector::delta(op.space().clone(), crate::spaces::Address::vertex(&[1], 1), Scalar::one()).unwrap();
        let t = Target::new(None, y, Scalar::ratio(1, 2)).unwrap();
        for n in [3u64, 6, 12] {
            let r = op.hit_value(&t, n).unwrap();
            let (zn, dist) = op.check_witness(&t, n, r.witness.as_ref().unwrap()).unwrap();
            assert!(zn.le(&r.upper));
            assert!(dist.le(&(t.radius.clone() * r.upper.clone())));
            assert!(r.lower.le(&r.upper));
        }
    }

    #[test]
    fn matrix_operator_powers() {
        let m = Matrix::from_ints(2, 2, &[2, 1, 0, 2]).unwrap();
        let op = Operator::new(ComponentOperator::matrix(m, NormKind::l1(), NormKind::l1())).unwrap();
        let y = from_coords(op.space().clone(), &[Scalar::int(4), Scalar::int(4)], false);
        let t = Target::new(None, y, Scalar::ratio(1, 4)).unwrap();
        let r = op.hit_value(&t, 3).unwrap();
        assert!(r.exact);
        let (zn, dist) = op.check_witness(&t, 3, r.witness.as_ref().unwrap()).unwrap();
        assert!(zn.le(&r.upper) && dist.le(&(t.radius.clone() * r.upper.clone())));
    }
}
