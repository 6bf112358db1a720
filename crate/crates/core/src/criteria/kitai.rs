//! Audits of supplied right-inverse data: the Kitai criterion, its
//! sequence variant, and the frequent hypercyclicity criterion.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use super::density::IntSet;
use super::series::{audit_decay, audit_series, le_upper, SeriesState, TailClaim};
use super::verdict::{Certificate, DiagnosticVerdict, VerdictState};
use crate::dynamics::Operator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shift::ComponentOperator;
use crate::spaces::{pow_p, NormKind, SeqVector};

type SingleFn = dyn Fn(&SeqVector) -> Result<SeqVector> + Send + Sync;
type SequenceFn = dyn Fn(&SeqVector, u64) -> Result<SeqVector> + Send + Sync;

/// A right-inverse rule: one map `S` with `TS = I`, or maps `S_n` with
/// `T^n S_n = I`.
#[derive(Clone)]
pub enum SRule {
    Single { name: String, map: Arc<SingleFn> },
    Sequence { name: String, map: Arc<SequenceFn> },
}

impl SRule {
    pub fn single(name: impl Into<String>, f: impl Fn(&SeqVector) -> Result<SeqVector> + Send + Sync + 'static) -> Self {
        SRule::Single {
            name: name.into(),
            map: Arc::new(f),
        }
    }

    pub fn sequence(
        name: impl Into<String>,
        f: impl Fn(&SeqVector, u64) -> Result<SeqVector> + Send + Sync + 'static,
    ) -> Self {
        SRule::Sequence {
            name: name.into(),
            map: Arc::new(f),
        }
    }

    /// The operator's own one-step right inverse.
    pub fn canonical_single(op: &Operator) -> Self {
        let op = op.clone();
        Self::single("canonical right inverse", move |y| op.right_inverse(y))
    }

    /// The operator's own `S_n` (least-norm lifts).
    pub fn canonical_sequence(op: &Operator) -> Self {
        let op = op.clone();
        Self::sequence("canonical lifts", move |y, n| op.lift(y, n))
    }

    pub fn name(&self) -> &str {
        match self {
            SRule::Single { name, .. } | SRule::Sequence { name, .. } => name,
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self, SRule::Single { .. })
    }

    /// `S^n y` or `S_n y`.
    pub fn eval(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        match self {
            SRule::Single { map, .. } => {
                let mut z = y.clone();
                for _ in 0..n {
                    if z.is_zero() {
                        break;
                    }
                    z = map(&z)?;
                }
                Ok(z)
            }
            SRule::Sequence { map, .. } => map(y, n),
        }
    }
}

impl fmt::Debug for SRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = if self.is_single() { "single" } else { "sequence" };
        write!(f, "SRule({mode}: {})", self.name())
    }
}

/// A sample vector with optional declared tails: `forward` for the terms
/// `||T^n x||`, `backward` for `||S^n y||` (or `||S_n y||`).
#[derive(Clone, Debug)]
pub struct Sample {
    pub label: String,
    pub vector: SeqVector,
    pub forward: Option<TailClaim>,
    pub backward: Option<TailClaim>,
}

impl Sample {
    pub fn new(label: impl Into<String>, vector: SeqVector) -> Self {
        Sample {
            label: label.into(),
            vector,
            forward: None,
            backward: None,
        }
    }

    pub fn forward(mut self, c: TailClaim) -> Self {
        self.forward = Some(c);
        self
    }

    pub fn backward(mut self, c: TailClaim) -> Self {
        self.backward = Some(c);
        self
    }
}

/// Samples, a right-inverse rule and (for the density criterion) sets.
#[derive(Clone, Debug)]
pub struct CriterionData {
    pub x0: Vec<Sample>,
    pub y0: Vec<Sample>,
    /// `X_0 = Y_0`: `y0` is ignored and `x0` serves both roles.
    pub single_set: bool,
    pub s: SRule,
    pub a_sets: Vec<IntSet>,
}

impl CriterionData {
    pub fn two_sets(x0: Vec<Sample>, y0: Vec<Sample>, s: SRule) -> Self {
        CriterionData {
            x0,
            y0,
            single_set: false,
            s,
            a_sets: Vec::new(),
        }
    }

    pub fn one_set(samples: Vec<Sample>, s: SRule) -> Self {
        CriterionData {
            x0: samples,
            y0: Vec::new(),
            single_set: true,
            s,
            a_sets: Vec::new(),
        }
    }

    pub fn with_sets(mut self, sets: Vec<IntSet>) -> Self {
        self.a_sets = sets;
        self
    }

    pub fn ys(&self) -> &[Sample] {
        if self.single_set {
            &self.x0
        } else {
            &self.y0
        }
    }
}

fn close(a: &SeqVector, b: &SeqVector) -> Result<(bool, Scalar)> {
    let d = a.sub(b)?;
    if d.is_zero() {
        return Ok((true, Scalar::zero()));
    }
    let dn = d.norm();
    let exact = a.is_exact() && b.is_exact();
    let ok = !exact && dn.to_f64() <= 1e-9 * b.norm().to_f64().max(1.0);
    Ok((ok, dn))
}

/// `T^n S_n y - y` (or `T S y - y`), checked for `n <= n_max`.
fn identity_defect(op: &Operator, s: &SRule, y: &SeqVector, n_max: u64) -> Result<Option<(u64, Scalar)>> {
    let y = y.with_space(op.space().clone());
    let range = if s.is_single() { 1..=1 } else { 1..=n_max.max(1) };
    for n in range {
        let back = s.eval(&y, n)?.with_space(op.space().clone());
        let img = op.power(&back, n)?;
        let (ok, d) = close(&img, &y)?;
        if !ok {
            return Ok(Some((n, d)));
        }
    }
    Ok(None)
}

fn eager_identity(op: &Operator, data: &CriterionData, horizon: u64) -> Result<()> {
    for y in data.ys() {
        if let Some((n, d)) = identity_defect(op, &data.s, &y.vector, horizon.min(64))? {
            return Err(Error::Argument(format!(
                "sample `{}`: the rule `{}` fails its right-inverse identity at n = {n} (defect {})",
                y.label,
                data.s.name(),
                d.to_f64()
            )));
        }
    }
    Ok(())
}

/// A scalar operator with `|lambda| >= 1` has no nonzero orbit tending to 0.
fn plain_growth(op: &Operator) -> Option<Scalar> {
    match op.component() {
        ComponentOperator::ScalarWeight { w, .. } if !w.abs().lt(&Scalar::one()) => Some(w.abs()),
        _ => None,
    }
}

fn orbit(op: &Operator, x: &SeqVector, h: u64) -> Result<Vec<Scalar>> {
    op.orbit_norms(&x.with_space(op.space().clone()), h as usize)
}

fn back_orbit(op: &Operator, s: &SRule, y: &SeqVector, h: u64) -> Result<Vec<Scalar>> {
    let y = y.with_space(op.space().clone());
    match s {
        SRule::Single { map, .. } => {
            let mut out = Vec::with_capacity(h as usize);
            let mut z = y;
            for _ in 0..h {
                if !z.is_zero() {
                    z = map(&z)?;
                }
                out.push(z.norm());
            }
            Ok(out)
        }
        SRule::Sequence { map, .. } => (1..=h).map(|n| map(&y, n).map(|z| z.norm())).collect(),
    }
}

/// Checks `T^n x -> 0` on `X_0`, `S^n y -> 0` (or `S_n y -> 0`) on `Y_0`,
/// and the right-inverse identity.
///
/// A refutation only concerns the supplied data unless `T` is a scalar
/// with `|T| >= 1`, where no nonzero orbit tends to 0.
pub fn check_kitai(op: &Operator, data: &CriterionData, horizon: u64, tol: f64) -> Result<DiagnosticVerdict> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    eager_identity(op, data, horizon)?;
    let mut v = DiagnosticVerdict::new("kitai", horizon);
    v.note(format!(
        "{} mode with rule `{}`; {}",
        if data.s.is_single() { "single-map" } else { "sequence" },
        data.s.name(),
        if data.single_set { "X0 = Y0" } else { "X0 and Y0 separate" }
    ));
    let growth = plain_growth(op);
    let mut all_ok = !data.x0.is_empty() || !data.ys().is_empty();
    let mut refuted = false;
    for (i, x) in data.x0.iter().enumerate() {
        let terms = orbit(op, &x.vector, horizon)?;
        let auto;
        let claim = match (&x.forward, &growth) {
            (Some(c), _) => Some(c),
            (None, Some(_)) if !x.vector.is_zero() => {
                auto = TailClaim::NonDecaying {
                    c: x.vector.norm(),
                    n0: 0,
                };
                Some(&auto)
            }
            _ => None,
        };
        let d = audit_decay(&terms, 0, claim, true, tol);
        v.cert(Certificate::scalar(format!("x{i}.orbit_last"), Some(horizon), &d.last));
        v.cert(Certificate::value(format!("x{i}.orbit_check"), None, json!(d.reason)));
        match d.state {
            SeriesState::Converges => {}
            SeriesState::Diverges => {
                refuted = true;
                if growth.is_some() {
                    v.note(format!(
                        "sample `{}`: |T^n x| >= |x| for every n, and the same holds for every nonzero x",
                        x.label
                    ));
                } else {
                    v.note(format!("sample `{}`: T^n x does not tend to 0; this refutes the supplied data", x.label));
                }
            }
            SeriesState::Unknown => all_ok = false,
        }
    }
    for (i, y) in data.ys().iter().enumerate() {
        let terms = back_orbit(op, &data.s, &y.vector, horizon)?;
        let d = audit_decay(&terms, 1, y.backward.as_ref(), false, tol);
        v.cert(Certificate::scalar(format!("y{i}.inverse_last"), Some(horizon), &d.last));
        v.cert(Certificate::value(format!("y{i}.inverse_check"), None, json!(d.reason)));
        if let Some(c) = &y.backward {
            v.cert(Certificate::value(format!("y{i}.inverse_claim"), None, c.to_json()));
            let from = c.n0().max(1) as usize - 1;
            if let Some(m) = terms.get(from..).and_then(|t| t.iter().cloned().reduce(|a, b| if b.lt(&a) { b } else { a })) {
                v.cert(Certificate::scalar(format!("y{i}.inverse_min_from_n0"), Some(c.n0()), &m));
            }
        }
        match d.state {
            SeriesState::Converges => {}
            SeriesState::Diverges => {
                refuted = true;
                v.note(format!(
                    "sample `{}`: S^n y stays bounded below; this refutes the supplied data",
                    y.label
                ));
            }
            SeriesState::Unknown => all_ok = false,
        }
    }
    v.cert(Certificate::value("identity", None, json!("exact")));
    v.state = if refuted {
        VerdictState::Refutes
    } else if all_ok {
        VerdictState::Supports
    } else {
        VerdictState::Indeterminate
    };
    if v.state == VerdictState::Supports {
        v.note("checked on the samples only; the criterion needs dense X0 and Y0");
    }
    Ok(v)
}

/// p-th powers are used when the series pieces live in disjoint outer
/// blocks, where they decide unconditional convergence; otherwise plain
/// norms, whose summability is only sufficient.
fn series_terms(op: &Operator, x: &SeqVector, norms: Vec<Scalar>) -> (Vec<Scalar>, bool) {
    let kind = op.ambient_norm();
    let disjoint = op.as_block().is_some() && x.split_outer().len() <= 1;
    if disjoint && kind != NormKind::Sup {
        (norms.iter().map(|t| pow_p(t, &kind)).collect(), true)
    } else {
        (norms, false)
    }
}

/// Single-map mode: summability of `||T^n x||` and `||S^n x||`. Sequence
/// mode: the four conditions for a family `S_n`, uniform in `k` up to
/// `K = min(horizon, 32)`.
pub fn check_fhc_criterion(op: &Operator, data: &CriterionData, horizon: u64) -> Result<DiagnosticVerdict> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    eager_identity(op, data, horizon)?;
    let mut v = DiagnosticVerdict::new("fhc-criterion", horizon);
    v.note(format!("rule `{}`", data.s.name()));
    let state = if data.s.is_single() {
        fhc_single(op, data, horizon, &mut v)?
    } else {
        fhc_sequence(op, data, horizon, &mut v)?
    };
    v.state = state;
    if state == VerdictState::Supports {
        v.note("checked on the samples only; the criterion needs a dense set");
    }
    Ok(v)
}

fn fold(states: &[SeriesState], can_refute: bool) -> VerdictState {
    if can_refute && states.contains(&SeriesState::Diverges) {
        VerdictState::Refutes
    } else if !states.is_empty() && states.iter().all(|s| *s == SeriesState::Converges) {
        VerdictState::Supports
    } else {
        VerdictState::Indeterminate
    }
}

fn fhc_single(op: &Operator, data: &CriterionData, h: u64, v: &mut DiagnosticVerdict) -> Result<VerdictState> {
    let mut states = Vec::new();
    let mut can_refute = op.is_scalar_chain();
    for (i, x) in data.x0.iter().enumerate() {
        let norms = orbit(op, &x.vector, h)?.split_off(1);
        let (terms, exact_test) = series_terms(op, &x.vector, norms);
        let a = audit_series(&terms, 1, x.forward.as_ref(), true);
        v.certificates.extend(a.certificates(&format!("x{i}.forward.")));
        can_refute &= exact_test;
        states.push(a.state);
    }
    for (i, y) in data.ys().iter().enumerate() {
        let norms = back_orbit(op, &data.s, &y.vector, h)?;
        let (terms, exact_test) = series_terms(op, &y.vector, norms);
        let a = audit_series(&terms, 1, y.backward.as_ref(), false);
        v.certificates.extend(a.certificates(&format!("y{i}.inverse.")));
        can_refute &= exact_test;
        states.push(a.state);
    }
    let st = fold(&states, can_refute);
    if states.contains(&SeriesState::Diverges) && st != VerdictState::Refutes {
        v.note("a divergence claim held, but the terms do not decide unconditional convergence here");
    }
    if st == VerdictState::Refutes {
        v.note("a series of the supplied rule diverges on disjoint blocks; this refutes the supplied data");
    }
    Ok(st)
}

fn fhc_sequence(op: &Operator, data: &CriterionData, h: u64, v: &mut DiagnosticVerdict) -> Result<VerdictState> {
    let k_max = h.min(32);
    let sp = op.space().clone();
    let mut states = Vec::new();
    for (i, x) in data.ys().iter().enumerate() {
        let x_vec = x.vector.with_space(sp.clone());
        let lifts: Vec<SeqVector> = (0..=2 * k_max)
            .map(|m| data.s.eval(&x_vec, m).map(|z| z.with_space(sp.clone())))
            .collect::<Result<_>>()?;
        // (a) T^k S_{k-n} x for n <= k: uniformly zero from some n on
        let mut zero_from = 0u64;
        let mut a_sum_max = Scalar::zero();
        for k in 0..=k_max {
            let mut last_nonzero = None;
            let mut row = Scalar::zero();
            for n in 1..=k {
                let t = op.power(&lifts[(k - n) as usize], k)?.norm();
                if !t.is_zero() {
                    last_nonzero = Some(n);
                }
                row = row + t;
            }
            if let Some(n) = last_nonzero {
                zero_from = zero_from.max(n + 1);
            }
            a_sum_max = a_sum_max.max(row);
        }
        let a_ok = zero_from <= k_max / 2;
        v.cert(Certificate::value(format!("x{i}.a.zero_from"), None, json!(zero_from)));
        v.cert(Certificate::scalar(format!("x{i}.a.max_row_sum"), Some(k_max), &a_sum_max));
        states.push(if a_ok { SeriesState::Converges } else { SeriesState::Unknown });
        // (b) T^k S_{k+n} x below the declared comparator for every k
        let b_state = match &x.backward {
            Some(c) if c.decays() => {
                let mut worst: Option<(u64, u64)> = None;
                let mut checked = 0;
                'outer: for k in 0..=k_max {
                    for n in c.n0().max(1)..=k_max {
                        let t = op.power(&lifts[(k + n) as usize], k)?.norm();
                        checked += 1;
                        if !le_upper(&t, &c.comparator(n).expect("decaying claim")) {
                            worst = Some((k, n));
                            break 'outer;
                        }
                    }
                }
                v.cert(Certificate::value(format!("x{i}.b.checked_pairs"), None, json!(checked)));
                match worst {
                    None => SeriesState::Converges,
                    Some((k, n)) => {
                        v.cert(Certificate::value(format!("x{i}.b.first_violation"), None, json!([k, n])));
                        SeriesState::Unknown
                    }
                }
            }
            _ => SeriesState::Unknown,
        };
        states.push(b_state);
        // (c) the series of S_n x
        let norms: Vec<Scalar> = lifts[1..=k_max as usize].iter().map(SeqVector::norm).collect();
        let mut norms = norms;
        for n in k_max + 1..=h {
            norms.push(data.s.eval(&x_vec, n)?.norm());
        }
        let (terms, _) = series_terms(op, &x_vec, norms);
        let a = audit_series(&terms, 1, x.backward.as_ref(), false);
        v.certificates.extend(a.certificates(&format!("x{i}.c.")));
        states.push(a.state);
    }
    // (d) is the eager identity, exact up to min(horizon, 64)
    v.cert(Certificate::value("d.identity", Some(h.min(64)), json!("exact")));
    v.note(format!("uniform-in-k conditions checked for k <= {k_max}"));
    Ok(fold(&states, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{BlockShift, Family, Tail, WeightFormula};
    use crate::spaces::{Address, IndexSet};
    use num_rational::BigRational;
    use std::collections::BTreeMap;

    fn doubling(norm: NormKind) -> Operator {
        let fam = Family::scalar_table(BTreeMap::new(), Tail::Constant(ComponentOperator::scalar(Scalar::int(2))));
        Operator::block(BlockShift::new(IndexSet::Unilateral, fam, norm).unwrap())
    }

    fn delta(op: &Operator, k: i64) -> SeqVector {
        SeqVector::delta(op.space().clone(), Address::seq(k), Scalar::one()).unwrap()
    }

    fn half() -> TailClaim {
        TailClaim::Geometric {
            c: Scalar::one(),
            r: Scalar::ratio(1, 2),
            n0: 1,
        }
    }

    #[test]
    fn doubling_satisfies_kitai() {
        let op = doubling(NormKind::l1());
        let samples = vec![Sample::new("d3", delta(&op, 3)).backward(half())];
        let data = CriterionData::one_set(samples, SRule::canonical_single(&op));
        let v = check_kitai(&op, &data, 30, 1e-6).unwrap();
        assert_eq!(v.state, VerdictState::Supports, "{:?}", v.notes);
    }

    #[test]
    fn scalar_doubling_refutes() {
        let op = Operator::new(ComponentOperator::scalar(Scalar::int(2))).unwrap();
        let x = SeqVector::from_entries(op.space().clone(), [(Address::default(), Scalar::one())]).unwrap();
        let s = SRule::single("halve", |y: &SeqVector| Ok(y.scale(&Scalar::ratio(1, 2))));
        let data = CriterionData::one_set(vec![Sample::new("one", x)], s);
        let v = check_kitai(&Operator::new(ComponentOperator::scalar(Scalar::int(2))).unwrap(), &data, 20, 1e-6).unwrap();
        assert_eq!(v.state, VerdictState::Refutes);
    }

    #[test]
    fn inconsistent_rule_is_an_argument_error() {
        let op = doubling(NormKind::l1());
        let s = SRule::single("identity", |y: &SeqVector| Ok(y.clone()));
        let data = CriterionData::one_set(vec![Sample::new("bad", delta(&op, 2))], s);
        match check_kitai(&op, &data, 10, 1e-6) {
            Err(Error::Argument(m)) => assert!(m.contains("bad"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fhc_criterion_doubling_and_root_ratio() {
        let op = doubling(NormKind::l1());
        let data = CriterionData::one_set(
            vec![Sample::new("d1", delta(&op, 1)).backward(half())],
            SRule::canonical_single(&op),
        );
        assert_eq!(check_fhc_criterion(&op, &data, 40).unwrap().state, VerdictState::Supports);

        let f = WeightFormula::RootRatio {
            p: BigRational::from_integer(2.into()),
        };
        let op = Operator::block(BlockShift::new(IndexSet::Unilateral, Family::formula(f), NormKind::lp_int(2)).unwrap());
        // ||S^n d_1||^2 = 1/(n+1)
        let claim = TailClaim::Harmonic {
            c: Scalar::ratio(1, 2),
            n0: 1,
        };
        let data = CriterionData::one_set(
            vec![Sample::new("d1", delta(&op, 1)).backward(claim)],
            SRule::canonical_single(&op),
        );
        assert_eq!(check_fhc_criterion(&op, &data, 500).unwrap().state, VerdictState::Refutes);
    }

    #[test]
    fn sequence_mode_on_doubling() {
        let op = doubling(NormKind::l1());
        let data = CriterionData::one_set(
            vec![Sample::new("d1", delta(&op, 1)).backward(half())],
            SRule::canonical_sequence(&op),
        );
        let v = check_fhc_criterion(&op, &data, 40).unwrap();
        assert_eq!(v.state, VerdictState::Supports, "{:?}", v.certificates);
        let v = check_kitai(&op, &data, 40, 1e-6).unwrap();
        assert_eq!(v.state, VerdictState::Supports);
    }
}
