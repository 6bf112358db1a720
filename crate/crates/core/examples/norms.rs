//! Vectors and norms on l^p-sums and c_0-sums, exact where the exponent allows.

use std::sync::Arc;

use opshift::scalar::Scalar;
use opshift::spaces::{Address, IndexSet, NormKind, SeqVector, SpaceSpec};

fn main() -> opshift::error::Result<()> {
    for norm in [NormKind::l1(), NormKind::lp_int(2), NormKind::lp_int(3), NormKind::Sup] {
        let space = Arc::new(SpaceSpec::sum(SpaceSpec::Scalar, IndexSet::Unilateral, norm.clone()));
        let x = SeqVector::from_entries(
            space,
            [
                (Address::seq(1), Scalar::ratio(3, 4)),
                (Address::seq(2), Scalar::int(-1)),
                (Address::seq(5), Scalar::ratio(1, 2)),
            ],
        )?;
        let n = x.norm();
        println!("{:<28} ||x|| = {} (exact: {})", norm.to_json().to_string(), n.to_decimal_string(), n.is_exact());
    }

    // a nested sum: l^1 over N of c_0-sums over Z
    let inner = SpaceSpec::sum(SpaceSpec::Scalar, IndexSet::Bilateral, NormKind::Sup);
    let space = Arc::new(SpaceSpec::sum(inner, IndexSet::Unilateral, NormKind::l1()));
    let y = SeqVector::from_entries(
        space,
        [
            (Address::parse("1/-2")?, Scalar::int(3)),
            (Address::parse("1/4")?, Scalar::int(-5)),
            (Address::parse("2/0")?, Scalar::ratio(1, 8)),
        ],
    )?;
    println!("nested ||y|| = {}  (max 3,5 plus 1/8)", y.norm().to_decimal_string());
    println!("{}", serde_json::to_string(&y.to_json()).unwrap());
    Ok(())
}
