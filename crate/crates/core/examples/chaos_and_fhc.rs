//! Backward-orbit summability and the least-preimage series, with
//! declared tail claims deciding what a finite horizon cannot.

use opshift::criteria::{chaos_backward_summability, fhc_necessary_series, SeriesClaims, TailClaim};
use opshift::dynamics::Target;
use opshift::scalar::Scalar;
use opshift::spaces::{Address, SeqVector};
use opshift::zoo::{zoo_entry, Side};

fn show(v: &opshift::criteria::DiagnosticVerdict) {
    let sum = v.find("backward.partial_sum").or(v.find("preimage.partial_sum"));
    println!(
        "  {:<14} {:<13} partial sum ~ {:.6}",
        v.criterion,
        v.state.as_str(),
        sum.and_then(|c| c.as_f64()).unwrap_or(f64::NAN)
    );
}

fn main() -> opshift::error::Result<()> {
    // w_n = sqrt((n+1)/n) on l^2: mixing, but the backward orbit is harmonic
    let built = zoo_entry("unilateral_mixing_not_chaotic_lp")?.build()?;
    let op = &built.primary;
    let y = SeqVector::delta(op.space().clone(), Address::seq(1), Scalar::one())?;
    println!("{}", op.describe());
    for claim in [None, Some(TailClaim::Harmonic { c: Scalar::one(), n0: 3 })] {
        let claims = SeriesClaims { backward: claim, forward: None };
        show(&chaos_backward_summability(op, &y, 2000, &claims)?);
    }

    // bilateral chaos gap: backward part geometric, forward part harmonic
    let built = zoo_entry("bilateral_chaos_gap")?.build()?;
    let base = built.side(Side::Base)?;
    let y = SeqVector::delta(base.space().clone(), Address::seq(0), Scalar::one())?;
    let claims = SeriesClaims {
        backward: Some(TailClaim::Geometric { c: Scalar::one(), r: Scalar::ratio(1, 2), n0: 0 }),
        forward: Some(TailClaim::Harmonic { c: Scalar::int(4), n0: 3 }),
    };
    println!("{}", base.describe());
    show(&chaos_backward_summability(base, &y, 500, &claims)?);

    // proportional tree: the preimage series stays bounded
    let built = zoo_entry("proptree")?.build()?;
    let op = &built.primary;
    let e = SeqVector::delta(op.space().clone(), Address::vertex(&[1], 1), Scalar::one())?;
    let t = Target::new(None, e, Scalar::ratio(1, 2))?;
    let claims = SeriesClaims { backward: Some(opshift::zoo::proptree_claim()), forward: None };
    println!("{}", op.describe());
    show(&fhc_necessary_series(op, &t, 300, &claims)?);
    Ok(())
}
