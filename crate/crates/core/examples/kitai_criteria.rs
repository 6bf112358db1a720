//! The Kitai, FHC and density criteria as finite-horizon audits.

use opshift::criteria::{
    check_d_criterion, check_fhc_criterion, check_kitai, CriterionData, IntSet, SRule, Sample, TailClaim, D_TOL,
};
use opshift::scalar::Scalar;
use opshift::spaces::{Address, SeqVector};
use opshift::zoo::{graph_basis_samples, graph_kernel_samples, zoo_entry};

fn main() -> opshift::error::Result<()> {
    let built = zoo_entry("double_identity_lift")?.build()?;
    let op = &built.primary;
    let y = SeqVector::delta(op.space().clone(), Address::seq(1), Scalar::one())?;
    let s = Sample::new("e_1", y).backward(TailClaim::Geometric { c: Scalar::one(), r: Scalar::ratio(1, 2), n0: 1 });
    let data = CriterionData::one_set(vec![s], SRule::canonical_single(op));
    println!("kitai:         {}", check_kitai(op, &data, 30, 1e-6)?.state.as_str());
    println!("fhc criterion: {}", check_fhc_criterion(op, &data, 60)?.state.as_str());
    let sets = (1..=3).map(|k| IntSet::SeparatedDyadic { k }).collect();
    let v = check_d_criterion(op, &data.with_sets(sets), 1024, D_TOL)?;
    println!("d criterion:   {} (D_2 ~ {:.2e})", v.state.as_str(), v.find("y0.D2").and_then(|c| c.as_f64()).unwrap());

    // graph shift: kernel vectors against finitely supported ones
    let built = zoo_entry("graph_shift_kitai")?.build()?;
    let op = &built.primary;
    let g = op.as_graph().unwrap();
    let two = CriterionData::two_sets(graph_kernel_samples(g)?, graph_basis_samples(g), SRule::canonical_single(op));
    println!("graph, X0 = kernel, Y0 = basis: {}", check_kitai(op, &two, 40, 1e-6)?.state.as_str());
    let (z, _) = g.spine_kernel_vector(4, 4)?;
    let one = CriterionData::one_set(
        vec![Sample::new("z_4(1)", z).backward(TailClaim::NonDecaying { c: Scalar::ratio(1, 4), n0: 4 })],
        SRule::canonical_single(op),
    );
    let v = check_kitai(op, &one, 40, 1e-6)?;
    println!("graph, one set of kernel vectors: {} ({})", v.state.as_str(), v.notes.join("; "));
    Ok(())
}
