//! Return-set searches: `T^n B(0,1)` meeting target balls, and tails of
//! such `n` for mixing.

use std::ops::RangeInclusive;

use serde_json::json;

use super::verdict::{Certificate, DiagnosticVerdict, VerdictState};
use crate::dynamics::{Operator, Target};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{scalar_json, SeqVector};

const OPEN_SETS_NOTE: &str =
    "only the listed targets were examined; the property quantifies over all open sets";

/// Per-target outcome at one `n`.
#[derive(Clone, Debug)]
pub struct HitCheck {
    pub upper: Scalar,
    pub lower: Scalar,
    pub forward: Option<Scalar>,
    pub witness_norm: Option<Scalar>,
    pub distance: Option<Scalar>,
    pub holds: bool,
}

fn forward_witness(op: &Operator, t: &Target, n: u64) -> Result<Option<(SeqVector, Scalar, Scalar)>> {
    let (Some(j), Some(b)) = (t.index, op.as_block()) else {
        return Ok(None);
    };
    let y = &t.center;
    let ynorm = y.norm();
    if ynorm.is_zero() {
        return Ok(Some((y.clone(), Scalar::zero(), Scalar::zero())));
    }
    // u_s = (1 - s eps/|y|) y, with s halfway between the threshold and 1
    let full = b.embed(j, y)?;
    let img = b.extract(j - n as i64, &op.power(&full, n)?);
    let p = img.norm();
    let ratio = ynorm.checked_div(&t.radius).unwrap();
    let s0 = match p.recip() {
        Some(ip) => ((Scalar::one() - ip) * ratio).max(Scalar::zero()),
        None => Scalar::zero(),
    };
    let s = (s0 + Scalar::one()) * Scalar::ratio(1, 2);
    let scale = Scalar::one() - s * t.radius.checked_div(&ynorm).unwrap();
    let u = y.scale(&scale);
    // independent re-check through the shift itself
    let full = b.embed(j, &u)?;
    let val = b.extract(j - n as i64, &op.power(&full, n)?).norm();
    let dist = u.sub(y)?.norm();
    Ok(Some((u, val, dist)))
}

/// Evaluates the return condition for every target at `n`.
pub fn check_targets(op: &Operator, targets: &[Target], n: u64) -> Result<Vec<HitCheck>> {
    let bilateral = op.is_bilateral();
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        let h = op.hit_value(t, n)?;
        let mut check = HitCheck {
            upper: h.upper.clone(),
            lower: h.lower.clone(),
            forward: None,
            witness_norm: None,
            distance: None,
            holds: false,
        };
        if h.upper.lt(&Scalar::one()) {
            if let Some(z) = &h.witness {
                let (zn, dist) = op.check_witness(t, n, z)?;
                check.witness_norm = Some(zn.clone());
                check.distance = Some(dist.clone());
                check.holds = zn.lt(&Scalar::one()) && dist.lt(&t.radius);
            }
        }
        if bilateral && t.index.is_some() {
            let f = op.forward_value(t, n)?;
            check.forward = Some(f.upper.clone());
            if check.holds && f.upper.lt(&Scalar::one()) {
                let (_, val, dist) = forward_witness(op, t, n)?.expect("component target");
                check.holds = val.lt(&Scalar::one()) && dist.lt(&t.radius);
            } else {
                check.holds = false;
            }
        }
        out.push(check);
    }
    Ok(out)
}

/// Least `n` in `n_range` such that every target ball meets `T^n B(0,1)`
/// (and, bilaterally, `T_{j-n,j} U_j` meets the unit ball).
pub fn transitivity_witness(op: &Operator, targets: &[Target], n_range: RangeInclusive<u64>) -> Result<DiagnosticVerdict> {
    if targets.is_empty() {
        return Err(Error::Argument("transitivity needs at least one target".into()));
    }
    let mut v = DiagnosticVerdict::new("transitivity", *n_range.end());
    v.note(OPEN_SETS_NOTE);
    let mut best: Vec<Option<Scalar>> = vec![None; targets.len()];
    for n in n_range.clone() {
        let checks = check_targets(op, targets, n)?;
        for (b, c) in best.iter_mut().zip(&checks) {
            if b.as_ref().is_none_or(|x| c.upper.lt(x)) {
                *b = Some(c.upper.clone());
            }
        }
        if checks.iter().all(|c| c.holds) {
            v.state = VerdictState::Supports;
            v.witness_n = Some(n);
            for (i, c) in checks.iter().enumerate() {
                v.cert(Certificate::scalar(format!("target{i}.hit_value"), Some(n), &c.upper));
                if let Some(z) = &c.witness_norm {
                    v.cert(Certificate::scalar(format!("target{i}.witness_norm"), Some(n), z));
                }
                if let Some(d) = &c.distance {
                    v.cert(Certificate::scalar(format!("target{i}.witness_distance"), Some(n), d));
                }
                if let Some(f) = &c.forward {
                    v.cert(Certificate::scalar(format!("target{i}.forward_value"), Some(n), f));
                }
            }
            return Ok(v);
        }
    }
    for (i, b) in best.iter().enumerate() {
        if let Some(b) = b {
            v.cert(Certificate::scalar(format!("target{i}.best_hit_value"), None, b));
        }
    }
    v.note(format!(
        "no n in {}..={} worked; the condition ranges over all n, so this is not a refutation",
        n_range.start(),
        n_range.end()
    ));
    Ok(v)
}

/// The set of `n <= n_max` where the return condition holds, and whether it
/// contains the tail `[n0, n_max]`.
///
/// Without a declared `n0` the longest verified tail is used when it
/// covers at least half of the window.
pub fn mixing_cofiniteness(op: &Operator, targets: &[Target], n_max: u64, n0: Option<u64>) -> Result<DiagnosticVerdict> {
    if targets.is_empty() {
        return Err(Error::Argument("mixing needs at least one target".into()));
    }
    if n_max == 0 {
        return Err(Error::Argument("mixing needs n_max >= 1".into()));
    }
    let mut v = DiagnosticVerdict::new("mixing", n_max);
    v.note(OPEN_SETS_NOTE);
    let mut holds = Vec::new();
    let mut worst_tail = Scalar::zero();
    for n in 0..=n_max {
        let checks = check_targets(op, targets, n)?;
        if checks.iter().all(|c| c.holds) {
            holds.push(n);
        }
        if n0.is_none_or(|n0| n >= n0) {
            for c in &checks {
                worst_tail = worst_tail.clone().max(c.upper.clone());
            }
        }
    }
    let mut tail_start = n_max + 1;
    for n in (0..=n_max).rev() {
        if holds.binary_search(&n).is_ok() {
            tail_start = n;
        } else {
            break;
        }
    }
    v.cert(Certificate::value("return_set", None, json!(holds)));
    v.cert(Certificate::value("tail_start", None, json!(tail_start)));
    match n0 {
        Some(n0) => {
            v.cert(Certificate::value("declared_n0", None, json!(n0)));
            if tail_start <= n0 {
                v.state = VerdictState::Supports;
                v.witness_n = Some(n0);
                v.cert(Certificate::value("max_hit_value_on_tail", None, scalar_json(&worst_tail)));
            } else {
                v.note(format!("condition fails inside the declared tail [{n0}, {n_max}]"));
            }
        }
        None => {
            if tail_start <= n_max / 2 {
                v.state = VerdictState::Supports;
                v.witness_n = Some(tail_start);
                v.note("n0 not declared; the verified tail covers at least half of the window");
            } else {
                v.note("no declared n0 and no tail covering half of the window");
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{BlockShift, ComponentOperator, Family, Tail};
    use crate::spaces::{Address, IndexSet, NormKind};
    use std::collections::BTreeMap;

    fn scalar_op(set: IndexSet, w: Scalar) -> Operator {
        let fam = Family::scalar_table(BTreeMap::new(), Tail::Constant(ComponentOperator::scalar(w)));
        Operator::block(BlockShift::new(set, fam, NormKind::l1()).unwrap())
    }

    fn target(op: &Operator, j: i64, y: Scalar, eps: Scalar) -> Target {
        let sp = op.as_block().unwrap().component_space(j);
        Target::new(Some(j), SeqVector::from_entries(sp, [(Address::default(), y)]).unwrap(), eps).unwrap()
    }

    #[test]
    fn doubling_witness_three() {
        let op = scalar_op(IndexSet::Unilateral, Scalar::int(2));
        let t = target(&op, 1, Scalar::int(8), Scalar::ratio(1, 2));
        let v = transitivity_witness(&op, std::slice::from_ref(&t), 1..=10).unwrap();
        assert_eq!((v.state, v.witness_n), (VerdictState::Supports, Some(3)));
        let m = mixing_cofiniteness(&op, &[t], 30, Some(3)).unwrap();
        assert_eq!(m.state, VerdictState::Supports);
        assert_eq!(m.find("tail_start").unwrap().value, json!(3));
    }

    #[test]
    fn zero_target_hits_at_start() {
        let op = scalar_op(IndexSet::Unilateral, Scalar::int(2));
        let t = target(&op, 2, Scalar::zero(), Scalar::ratio(1, 10));
        let v = transitivity_witness(&op, &[t], 4..=9).unwrap();
        assert_eq!(v.witness_n, Some(4));
    }

    #[test]
    fn unweighted_bilateral_never_hits() {
        let op = scalar_op(IndexSet::Bilateral, Scalar::one());
        // every window product is 1, so |y| / (1 + eps) < 1 decides the matter
        let t = target(&op, 0, Scalar::int(2), Scalar::ratio(1, 10));
        let v = transitivity_witness(&op, &[t], 1..=40).unwrap();
        assert_eq!(v.state, VerdictState::Indeterminate);
    }

    #[test]
    fn empty_targets_rejected() {
        let op = scalar_op(IndexSet::Unilateral, Scalar::int(2));
        assert!(transitivity_witness(&op, &[], 1..=3).is_err());
    }
}
