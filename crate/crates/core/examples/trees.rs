//! The three segmented-tree shifts: weights, exact backward lifts, the
//! no-fixed-point cascade, the covering chain and the density ratio.

use num_bigint::BigInt;
use opshift::dynamics::Operator;
use opshift::scalar::Scalar;
use opshift::spaces::{Address, NormKind, SeqVector};
use opshift::tree::{branch_string, prop_density_ratio, SegmentedTreeShift, TreeKind};
use opshift::zoo::cascade_children;

fn main() -> opshift::error::Result<()> {
    let kinds = [
        (TreeKind::mixc0(), NormKind::Sup),
        (TreeKind::PropTree, NormKind::l1()),
        (TreeKind::fhc(), NormKind::l1()),
    ];
    for (kind, norm) in kinds {
        let op = Operator::tree(SegmentedTreeShift::build(kind, norm)?);
        let root = SeqVector::delta(op.space().clone(), Address::vertex(&[1], 1), Scalar::one())?;
        let lifts: Vec<String> = [1u64, 5, 20, 60]
            .iter()
            .map(|&n| {
                let z = op.lift(&root, n).unwrap();
                assert_eq!(op.power(&z, n).unwrap(), root);
                format!("n={n}: {:.4e}", z.norm().to_f64())
            })
            .collect();
        println!("{:<10} ||lift_n e_root||  {}", op.describe(), lifts.join("  "));
    }

    let mix = SegmentedTreeShift::build(TreeKind::mixc0(), NormKind::Sup)?;
    let r = mix.fixed_point_cascade(&[1], &cascade_children(7, 8))?;
    for s in &r.steps {
        println!("cascade {:<20} {} = {}", branch_string(&s.branch), s.formula, s.bound.to_decimal_string());
    }

    let prop = SegmentedTreeShift::build(TreeKind::PropTree, NormKind::l1())?;
    let cov = prop.covering(&[1], &BigInt::from(2000))?;
    println!("covering of [19, 2000]: {} intervals, chained = {}", cov.intervals.len(), cov.chained);
    for (s, e) in cov.intervals.iter().take(4) {
        println!("  [{s}, {e}]");
    }
    for b in [vec![1, 1], vec![1, 3], vec![1, 2, 5], vec![1, 30]] {
        let (ratio, bound) = prop_density_ratio(&prop, &b)?;
        println!("l/a at {} = {:.6} <= {:.6}", branch_string(&b), ratio.to_f64(), bound.to_f64());
    }
    Ok(())
}
