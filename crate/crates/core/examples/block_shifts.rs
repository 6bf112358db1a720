//! Building B_(T_k) from scalar weights, matrices and formulas: norms,
//! windows, orbits and the two quasi-conjugacies.

use std::collections::BTreeMap;

use opshift::dynamics::Operator;
use opshift::linalg::Matrix;
use opshift::scalar::Scalar;
use opshift::shift::{BlockShift, ComponentOperator, Family, QuasiConjugacy, Tail, WeightFormula};
use opshift::spaces::{Address, IndexSet, NormKind, SeqVector};

fn main() -> opshift::error::Result<()> {
    // 2 Id lifted to l^1(K, N)
    let fam = Family::scalar_table(BTreeMap::new(), Tail::Constant(ComponentOperator::scalar(Scalar::int(2))));
    let op = Operator::block(BlockShift::new(IndexSet::Unilateral, fam, NormKind::l1())?);
    let x = SeqVector::delta(op.space().clone(), Address::seq(5), Scalar::one())?;
    let norms: Vec<String> = op.orbit_norms(&x, 6)?.iter().map(Scalar::to_decimal_string).collect();
    println!("{}: ||B^n e_5|| = {}", op.describe(), norms.join(", "));

    // the bilateral chaos-gap weights: w_n = 2 for n >= -1, (n+1)/n below
    let gap = BlockShift::new(IndexSet::Bilateral, Family::formula(WeightFormula::ChaosGap), NormKind::l1())?;
    println!("chaos gap: ||B|| = {}", gap.operator_norm(None)?.value.to_decimal_string());
    for n in [2i64, 10, 1000] {
        let w = gap.compose_window(-n - 1, -2)?.weight().unwrap();
        println!("  w_-{n} .. w_-2 = {}", w.to_decimal_string());
    }

    // a matrix family with a table and a constant tail
    let rot = Matrix::from_ints(2, 2, &[0, -2, 2, 0])?;
    let half = Matrix::new(2, 2, vec![Scalar::ratio(1, 2), Scalar::zero(), Scalar::zero(), Scalar::int(3)])?;
    let entries = BTreeMap::from([(2, ComponentOperator::matrix(half, NormKind::lp_int(2), NormKind::lp_int(2)))]);
    let fam = Family::Table {
        entries,
        tail: Tail::Constant(ComponentOperator::matrix(rot, NormKind::lp_int(2), NormKind::lp_int(2))),
    };
    let b = BlockShift::new(IndexSet::Unilateral, fam, NormKind::lp_int(2))?;
    let r = b.operator_norm(None)?;
    println!("matrix family: ||B|| = {} ({})", r.value.to_decimal_string(), r.flag.as_str());

    // phi(x)_n = sum_k x_{k,n} intertwines B_T on l^1(X, Z) with T
    let t = ComponentOperator::Nested(std::sync::Arc::new(gap.clone()));
    let lift = BlockShift::lift_of(t, IndexSet::Bilateral, NormKind::l1())?;
    let phi = QuasiConjugacy::summing(&lift)?;
    let x = opshift::spaces::random_finitely_supported(lift.space(), 3, 4, 2);
    let lhs = phi.apply(&lift.apply(&x)?)?;
    let rhs = gap.apply(&phi.apply(&x)?)?;
    println!("summing map intertwines: {}", lhs == rhs);
    let diag = QuasiConjugacy::diagonal(&lift)?;
    println!("diagonal map intertwines: {}", diag.apply(&lift.apply(&x)?)? == gap.apply(&diag.apply(&x)?)?);
    Ok(())
}
