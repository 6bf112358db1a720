//! Hit problems behind hypercyclicity and mixing: least n with
//! T^n B(0,1) meeting a target ball, and the cofinite return set.

use opshift::criteria::{mixing_cofiniteness, transitivity_witness};
use opshift::dynamics::Target;
use opshift::scalar::Scalar;
use opshift::spaces::{Address, SeqVector};
use opshift::zoo::{zoo_entry, Side};

fn main() -> opshift::error::Result<()> {
    let built = zoo_entry("double_identity_lift")?.build()?;
    let op = &built.primary;
    let cs = op.as_block().unwrap().component_space(1);
    let t = Target::new(Some(1), SeqVector::delta(cs, Address::default(), Scalar::int(8))?, Scalar::ratio(1, 2))?;
    for n in 1..=4 {
        let h = op.hit_value(&t, n)?;
        println!("n={n}: u*(n) = {} ({})", h.upper.to_decimal_string(), h.method);
    }
    let v = transitivity_witness(op, std::slice::from_ref(&t), 1..=10)?;
    println!("transitivity: {} at n = {:?}", v.state.as_str(), v.witness_n);
    let v = mixing_cofiniteness(op, std::slice::from_ref(&t), 40, Some(3))?;
    println!("mixing: {}", v.state.as_str());

    // the unweighted bilateral shift never hits
    let built = zoo_entry("bilateral_constant_scalar")?.build()?;
    let op = built.side(Side::Primary)?;
    let cs = op.as_block().unwrap().component_space(0);
    let t = Target::new(Some(0), SeqVector::delta(cs, Address::default(), Scalar::int(2))?, Scalar::ratio(1, 10))?;
    let v = transitivity_witness(op, &[t], 1..=40)?;
    println!("w = 1 on Z: {} ({})", v.state.as_str(), v.notes.join("; "));
    Ok(())
}
