use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use proptest::prelude::*;

use opshift::criteria::{chaos_backward_summability, transitivity_witness, SeriesClaims, TailClaim, VerdictState};
use opshift::dynamics::{Operator, Target};
use opshift::linalg::Matrix;
use opshift::scalar::Scalar;
use opshift::shift::{BlockShift, ComponentOperator, Family, QuasiConjugacy, Tail, WeightFormula};
use opshift::spaces::{random_finitely_supported, Address, IndexSet, NormKind, SeqVector, SpaceSpec};
use opshift::tree::{SegmentedTreeShift, TreeKind};

fn rat() -> impl Strategy<Value = (i64, i64)> {
    (-20i64..=20, 1i64..=8)
}

fn scalar_sum(norm: NormKind) -> Arc<SpaceSpec> {
    Arc::new(SpaceSpec::sum(SpaceSpec::Scalar, IndexSet::Unilateral, norm))
}

fn vector(space: &Arc<SpaceSpec>, entries: &BTreeMap<i64, (i64, i64)>) -> SeqVector {
    SeqVector::from_entries(space.clone(), entries.iter().map(|(k, (n, d))| (Address::seq(*k), Scalar::ratio(*n, *d))))
        .unwrap()
}

fn entries() -> impl Strategy<Value = BTreeMap<i64, (i64, i64)>> {
    prop::collection::btree_map(1i64..=12, rat(), 1..=8)
}

fn p_norm(xs: &[f64], p: f64) -> f64 {
    xs.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn scalar_family(weights: &[(i64, i64)], tail: (i64, i64), set: IndexSet, norm: NormKind) -> BlockShift {
    let lo = if set == IndexSet::Bilateral { -(weights.len() as i64) / 2 } else { 2 };
    let table = weights
        .iter()
        .enumerate()
        .map(|(i, (n, d))| (lo + i as i64, Scalar::ratio(*n, *d)))
        .collect();
    let fam = Family::scalar_table(table, Tail::Constant(ComponentOperator::scalar(Scalar::ratio(tail.0, tail.1))));
    BlockShift::new(set, fam, norm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norms_are_homogeneous(c in rat(), e in entries(), which in 0usize..3) {
        let norm = [NormKind::l1(), NormKind::Sup, NormKind::lp_int(2)][which].clone();
        let sp = scalar_sum(norm);
        let v = vector(&sp, &e);
        let c = Scalar::ratio(c.0, c.1);
        let lhs = v.scale(&c).norm();
        let rhs = c.abs() * v.norm();
        if which < 2 {
            prop_assert!(lhs == rhs);
        } else {
            let (a, b) = (lhs.to_f64(), rhs.to_f64());
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn triangle_inequality(a in entries(), b in entries(), which in 0usize..4) {
        let norm = [NormKind::l1(), NormKind::Sup, NormKind::lp_int(2), NormKind::lp_int(3)][which].clone();
        let sp = scalar_sum(norm);
        let (u, v) = (vector(&sp, &a), vector(&sp, &b));
        let s = u.add(&v).unwrap().norm().to_f64();
        prop_assert!(s <= u.norm().to_f64() + v.norm().to_f64() + 1e-12);
    }

    #[test]
    fn lp_norms_decrease_in_p(e in prop::collection::btree_map(1i64..=12, rat(), 2..=8)) {
        let ps = [
            NormKind::l1(),
            NormKind::lp(BigRational::new(3.into(), 2.into())).unwrap(),
            NormKind::lp_int(2),
            NormKind::lp_int(4),
        ];
        let vals: Vec<f64> = ps.iter().map(|p| vector(&scalar_sum(p.clone()), &e).norm().to_f64()).collect();
        let sup = vector(&scalar_sum(NormKind::Sup), &e).norm().to_f64();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(vals[3] >= sup * (1.0 - 1e-12));
    }

    #[test]
    fn norms_match_the_definition(e in entries(), which in 0usize..4) {
        let xs: Vec<f64> = e.values().map(|(n, d)| *n as f64 / *d as f64).collect();
        let (norm, direct) = match which {
            0 => (NormKind::l1(), xs.iter().map(|x| x.abs()).sum::<f64>()),
            1 => (NormKind::Sup, xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))),
            2 => (NormKind::lp_int(2), p_norm(&xs, 2.0)),
            _ => (NormKind::lp(BigRational::new(5.into(), 2.into())).unwrap(), p_norm(&xs, 2.5)),
        };
        let got = vector(&scalar_sum(norm), &e).norm().to_f64();
        prop_assert!((got - direct).abs() <= 1e-14 * direct.max(1e-300) * 4.0, "{got} vs {direct}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn apply_is_bounded_by_the_norm(
        kind in 0usize..3,
        ws in prop::collection::vec(rat(), 1..8),
        tail in rat(),
        m in prop::collection::vec(-6i64..=6, 4),
        seed in 0u64..10_000,
    ) {
        let op = match kind {
            0 => Operator::block(scalar_family(&ws, tail, IndexSet::Bilateral, NormKind::lp_int(2))),
            1 => {
                let data = m.iter().map(|x| Scalar::ratio(*x, 2)).collect();
                let t = ComponentOperator::matrix(Matrix::new(2, 2, data).unwrap(), NormKind::l1(), NormKind::l1());
                Operator::block(BlockShift::lift_of(t, IndexSet::Unilateral, NormKind::l1()).unwrap())
            }
            _ => {
                let (k, n) = [
                    (TreeKind::mixc0(), NormKind::Sup),
                    (TreeKind::PropTree, NormKind::l1()),
                    (TreeKind::fhc(), NormKind::l1()),
                ][seed as usize % 3].clone();
                Operator::tree(SegmentedTreeShift::build(k, n).unwrap())
            }
        };
        let x = random_finitely_supported(op.space(), seed, 5, 3);
        let lhs = op.apply(&x).unwrap().norm();
        let rhs = op.norm_bound() * x.norm();
        if lhs.is_exact() && rhs.is_exact() {
            prop_assert!(lhs.le(&rhs), "{} > {}", lhs.to_decimal_string(), rhs.to_decimal_string());
        } else {
            prop_assert!(lhs.to_f64() <= rhs.to_f64() * (1.0 + 1e-10) + 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_agree_with_powers(
        mats in prop::collection::vec(prop::collection::vec(-4i64..=4, 4), 12),
        seed in 0u64..10_000,
    ) {
        let to_op = |m: &Vec<i64>| {
            let data = m.iter().map(|x| Scalar::ratio(*x, 2)).collect();
            ComponentOperator::matrix(Matrix::new(2, 2, data).unwrap(), NormKind::Sup, NormKind::Sup)
        };
        let fam = Family::Table {
            entries: mats[1..].iter().enumerate().map(|(i, m)| (i as i64 + 2, to_op(m))).collect(),
            tail: Tail::Constant(to_op(&mats[0])),
        };
        let b = BlockShift::new(IndexSet::Unilateral, fam, NormKind::l1()).unwrap();
        let x = random_finitely_supported(b.space(), seed, 6, 8);
        let mut bx = x.clone();
        for n in 0..=8u64 {
            for k in 1..=6i64 {
                let w = b.compose_window(k, k + n as i64).unwrap();
                let rhs = w.apply(&b.extract(k + n as i64, &x)).unwrap();
                let lhs = b.extract(k, &bx);
                prop_assert!(lhs.sub(&rhs.with_space(lhs.space().clone())).unwrap().is_zero(), "n = {n}, k = {k}");
            }
            bx = b.apply(&bx).unwrap();
        }
    }

    #[test]
    fn quasi_conjugacies_intertwine(
        ws in prop::collection::vec(rat(), 1..7),
        tail in rat(),
        m in prop::collection::vec(-6i64..=6, 9),
        seed in 0u64..10_000,
    ) {
        let inner = scalar_family(&ws, tail, IndexSet::Bilateral, NormKind::l1());
        let lift = BlockShift::lift_of(
            ComponentOperator::Nested(Arc::new(inner.clone())),
            IndexSet::Bilateral,
            NormKind::lp_int(2),
        )
        .unwrap();
        let phi = QuasiConjugacy::diagonal(&lift).unwrap();
        let x = random_finitely_supported(lift.space(), seed, 5, 3);
        prop_assert_eq!(phi.apply(&lift.apply(&x).unwrap()).unwrap(), inner.apply(&phi.apply(&x).unwrap()).unwrap());

        let data = m.iter().map(|x| Scalar::ratio(*x, 3)).collect();
        let t = ComponentOperator::matrix(Matrix::new(3, 3, data).unwrap(), NormKind::l1(), NormKind::l1());
        let lift = BlockShift::lift_of(t.clone(), IndexSet::Bilateral, NormKind::l1()).unwrap();
        let psi = QuasiConjugacy::summing(&lift).unwrap();
        let x = random_finitely_supported(lift.space(), seed, 5, 3);
        prop_assert_eq!(psi.apply(&lift.apply(&x).unwrap()).unwrap(), t.apply(&psi.apply(&x).unwrap()).unwrap());
    }

    #[test]
    fn norm_of_scalar_family_is_max_weight(ws in prop::collection::vec(rat(), 1..12), tail in rat(), bil in any::<bool>()) {
        let set = if bil { IndexSet::Bilateral } else { IndexSet::Unilateral };
        let b = scalar_family(&ws, tail, set, NormKind::l1());
        let expect = ws
            .iter()
            .chain(std::iter::once(&tail))
            .map(|(n, d)| Scalar::ratio(n.abs(), *d))
            .fold(Scalar::zero(), Scalar::max);
        prop_assert!(b.operator_norm(None).unwrap().value == expect);
    }

    #[test]
    fn witnesses_land_in_the_target_and_persist(
        ws in prop::collection::vec((1i64..=12, 1i64..=4), 6),
        tail in (1i64..=12, 1i64..=4),
        j in 1i64..=3,
        c in rat(),
        r in prop::sample::select(vec![(1i64, 8i64), (1, 2), (1, 1)]),
        h in 1u64..=12,
        extra in 1u64..=8,
    ) {
        let op = Operator::block(scalar_family(&ws, tail, IndexSet::Unilateral, NormKind::l1()));
        let cs = op.as_block().unwrap().component_space(j);
        let center = SeqVector::from_entries(cs, [(Address::default(), Scalar::ratio(c.0, c.1))]).unwrap();
        let t = Target::new(Some(j), center, Scalar::ratio(r.0, r.1)).unwrap();
        let short = transitivity_witness(&op, std::slice::from_ref(&t), 1..=h).unwrap();
        let long = transitivity_witness(&op, std::slice::from_ref(&t), 1..=h + extra).unwrap();
        if short.state == VerdictState::Supports {
            let n = short.witness_n.unwrap();
            prop_assert_eq!(long.state, VerdictState::Supports);
            prop_assert_eq!(long.witness_n, Some(n));
            let z = op.hit_value(&t, n).unwrap().witness.unwrap();
            let (zn, dist) = op.check_witness(&t, n, &z).unwrap();
            prop_assert!(zn.lt(&Scalar::one()), "witness norm {}", zn.to_decimal_string());
            prop_assert!(dist.lt(&t.radius), "distance {}", dist.to_decimal_string());
        }
    }

    #[test]
    fn chaos_verdicts_are_stable_in_the_horizon(c in 2i64..=5, h in 5u64..=40, extra in 1u64..=40) {
        let geo = scalar_family(&[], (c, 1), IndexSet::Unilateral, NormKind::l1());
        let op = Operator::block(geo);
        let y = SeqVector::delta(op.space().clone(), Address::seq(1), Scalar::one()).unwrap();
        let claims = SeriesClaims {
            backward: Some(TailClaim::Geometric { c: Scalar::one(), r: Scalar::ratio(1, c), n0: 0 }),
            forward: None,
        };
        let a = chaos_backward_summability(&op, &y, h, &claims).unwrap();
        let b = chaos_backward_summability(&op, &y, h + extra, &claims).unwrap();
        prop_assert_eq!(a.state, VerdictState::Supports);
        prop_assert_eq!(b.state, VerdictState::Supports);

        let rr = BlockShift::new(IndexSet::Unilateral, Family::formula(WeightFormula::OnePlusInverse), NormKind::l1()).unwrap();
        let op = Operator::block(rr);
        let y = SeqVector::delta(op.space().clone(), Address::seq(1), Scalar::one()).unwrap();
        let claims = SeriesClaims { backward: Some(TailClaim::Harmonic { c: Scalar::one(), n0: 2 }), forward: None };
        let a = chaos_backward_summability(&op, &y, h, &claims).unwrap();
        let b = chaos_backward_summability(&op, &y, h + extra, &claims).unwrap();
        prop_assert_eq!(a.state, VerdictState::Refutes);
        prop_assert_eq!(b.state, VerdictState::Refutes);
    }
}

/// A unilateral scalar shift, its weights as plain numbers, a claim, and
/// the verdict the backward series should give.
struct Case {
    name: &'static str,
    op: Operator,
    weight: Box<dyn Fn(i64) -> f64>,
    p: i32,
    claim: TailClaim,
    expect: VerdictState,
}

fn table_case(name: &'static str, table: Vec<(i64, Scalar)>, tail: Scalar, claim: TailClaim, expect: VerdictState) -> Case {
    let plain: BTreeMap<i64, f64> = table.iter().map(|(k, w)| (*k, w.to_f64())).collect();
    let t = tail.to_f64();
    let fam = Family::scalar_table(table.into_iter().collect(), Tail::Constant(ComponentOperator::scalar(tail)));
    Case {
        name,
        op: Operator::block(BlockShift::new(IndexSet::Unilateral, fam, NormKind::l1()).unwrap()),
        weight: Box::new(move |k| *plain.get(&k).unwrap_or(&t)),
        p: 1,
        claim,
        expect,
    }
}

fn geometric(c: Scalar, r: Scalar) -> TailClaim {
    TailClaim::Geometric { c, r, n0: 0 }
}

fn corpus() -> Vec<Case> {
    use VerdictState::{Refutes, Supports};
    let constant = |name, w: Scalar, claim, expect| table_case(name, vec![], w, claim, expect);
    let formula = |name, f: WeightFormula, p: i32, weight: Box<dyn Fn(i64) -> f64>, claim, expect| Case {
        name,
        op: Operator::block(BlockShift::new(IndexSet::Unilateral, Family::formula(f), NormKind::lp_int(p as i64)).unwrap()),
        weight,
        p,
        claim,
        expect,
    };
    vec![
        constant("w = 2", Scalar::int(2), geometric(Scalar::one(), Scalar::ratio(1, 2)), Supports),
        constant("w = 3", Scalar::int(3), geometric(Scalar::one(), Scalar::ratio(1, 3)), Supports),
        constant("w = 3/2", Scalar::ratio(3, 2), geometric(Scalar::one(), Scalar::ratio(2, 3)), Supports),
        constant("w = -2", Scalar::int(-2), geometric(Scalar::one(), Scalar::ratio(1, 2)), Supports),
        constant("w = 1", Scalar::one(), TailClaim::NonDecaying { c: Scalar::one(), n0: 0 }, Refutes),
        constant("w = 1/2", Scalar::ratio(1, 2), TailClaim::NonDecaying { c: Scalar::one(), n0: 0 }, Refutes),
        formula(
            "(n+1)/n on l^1",
            WeightFormula::OnePlusInverse,
            1,
            Box::new(|k| (k + 1) as f64 / k as f64),
            TailClaim::Harmonic { c: Scalar::one(), n0: 2 },
            Refutes,
        ),
        formula(
            "(n+1)/n on l^2",
            WeightFormula::OnePlusInverse,
            2,
            Box::new(|k| (k + 1) as f64 / k as f64),
            TailClaim::PowerLaw { c: Scalar::int(4), s: Scalar::int(2), n0: 1 },
            Supports,
        ),
        formula(
            "sqrt((n+1)/n) on l^2",
            WeightFormula::RootRatio { p: BigRational::from_integer(2.into()) },
            2,
            Box::new(|k| ((k + 1) as f64 / k as f64).sqrt()),
            TailClaim::Harmonic { c: Scalar::one(), n0: 3 },
            Refutes,
        ),
        table_case(
            "four quarters, then 2",
            (2..=5).map(|k| (k, Scalar::ratio(1, 4))).collect(),
            Scalar::int(2),
            geometric(Scalar::int(4096), Scalar::ratio(1, 2)),
            Supports,
        ),
        table_case(
            "alternating 2 and 1",
            (2..=80).map(|k| (k, if k % 2 == 0 { Scalar::int(2) } else { Scalar::one() })).collect(),
            Scalar::int(2),
            geometric(Scalar::one(), Scalar::ratio(3, 4)),
            Supports,
        ),
        table_case(
            "nineteen ones, then 2",
            (2..=20).map(|k| (k, Scalar::one())).collect(),
            Scalar::int(2),
            geometric(Scalar::pow2(19), Scalar::ratio(1, 2)),
            Supports,
        ),
    ]
}

#[test]
fn scalar_shift_chaos_corpus() {
    let h = 60u64;
    let corpus = corpus();
    assert_eq!(corpus.len(), 12);
    for case in corpus {
        let y = SeqVector::delta(case.op.space().clone(), Address::seq(1), Scalar::one()).unwrap();
        let claims = SeriesClaims { backward: Some(case.claim.clone()), forward: None };
        let v = chaos_backward_summability(&case.op, &y, h, &claims).unwrap();
        assert_eq!(v.state, case.expect, "{}: {:?}", case.name, v.notes);

        // direct terms 1 / |w_2 .. w_{n+1}|^p
        let mut prod = 1.0f64;
        let mut terms = vec![1.0f64];
        for n in 1..=h as i64 {
            prod *= (case.weight)(n + 1);
            terms.push(1.0 / prod.abs().powi(case.p));
        }
        let direct: f64 = terms.iter().sum();
        let reported = v.find("backward.partial_sum").unwrap().as_f64().unwrap();
        assert!((reported - direct).abs() <= 1e-9 * direct, "{}: {reported} vs {direct}", case.name);

        // a refutation re-verifies: every term past n0 beats the comparator
        if v.state == VerdictState::Refutes {
            for (n, t) in terms.iter().enumerate().skip(case.claim.n0() as usize) {
                let c = case.claim.comparator(n as u64).unwrap().to_f64();
                assert!(*t >= c * (1.0 - 1e-9), "{}: term {n} = {t} below {c}", case.name);
            }
        }
    }
}
