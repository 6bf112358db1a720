//! The density hypercyclicity criterion along disjoint sets `A_k`.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use super::density::lower_density;
use super::kitai::{CriterionData, SRule};
use super::series::{audit_series, le_upper, SeriesState};
use super::verdict::{Certificate, DiagnosticVerdict, VerdictState};
use crate::dynamics::Operator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{pow_p, SeqVector};

/// Default smallness threshold for the double sums.
pub const D_TOL: f64 = 1e-3;

/// `||T^n S_i y||` for `n, i` up to the horizon.
struct Cross {
    /// single map: `||S^m y||` and `||T^m y||` for `m <= h`
    back: Vec<Scalar>,
    fwd: Vec<Scalar>,
    cache: BTreeMap<(u64, u64), Scalar>,
}

impl Cross {
    fn get(&mut self, op: &Operator, s: &SRule, y: &SeqVector, n: u64, i: u64) -> Result<Scalar> {
        if s.is_single() {
            // T^n S^i = S^{i-n} for i >= n, T^{n-i} otherwise
            return Ok(if i >= n {
                self.back[(i - n) as usize].clone()
            } else {
                self.fwd[(n - i) as usize].clone()
            });
        }
        if let Some(t) = self.cache.get(&(n, i)) {
            return Ok(t.clone());
        }
        let z = s.eval(y, i)?.with_space(op.space().clone());
        let t = op.power(&z, n)?.norm();
        self.cache.insert((n, i), t.clone());
        Ok(t)
    }
}

/// Audits the three conditions on every sample of `Y_0`:
/// uniform convergence of `sum_{n in A_k} S_n y`, smallness of
/// `sum_{i in A_k, i != n} ||T^n S_i y||` decreasing in `k`, and
/// `T^n S_n y = y` on `A_k`; plus positive lower density of each `A_k`.
/// Never refutes: failing on a finite window says nothing about the limit.
pub fn check_d_criterion(op: &Operator, data: &CriterionData, horizon: u64, tol: f64) -> Result<DiagnosticVerdict> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    let mut v = DiagnosticVerdict::new("d-criterion", horizon);
    let sets: Vec<Vec<u64>> = data
        .a_sets
        .iter()
        .map(|a| a.elements_upto(horizon).into_iter().filter(|&n| n >= 1).collect())
        .collect();
    let mut seen = BTreeSet::new();
    for (k, s) in sets.iter().enumerate() {
        for &n in s {
            if !seen.insert(n) {
                return Err(Error::Argument(format!("sets overlap at n = {n} (set {k})")));
            }
        }
    }
    if sets.is_empty() {
        v.state = VerdictState::Supports;
        v.note("no sets supplied; the conditions hold vacuously");
        return Ok(v);
    }
    let union: Vec<u64> = seen.into_iter().collect();
    let sp = op.space().clone();
    let mut ok = true;
    for (k, a) in data.a_sets.iter().enumerate() {
        let d = lower_density(a, horizon)?;
        let positive = d > num_rational::BigRational::from_integer(0.into());
        ok &= positive;
        v.cert(Certificate::value(
            format!("A{k}.lower_density"),
            Some(horizon),
            json!(num_traits::ToPrimitive::to_f64(&d).unwrap_or(0.0)),
        ));
        v.cert(Certificate::value(format!("A{k}.set"), None, json!(a.name())));
    }
    for (yi, y) in data.ys().iter().enumerate() {
        let yv = y.vector.with_space(sp.clone());
        let (back, fwd) = if data.s.is_single() {
            let mut back = vec![yv.norm()];
            let mut z = yv.clone();
            for _ in 0..horizon {
                if !z.is_zero() {
                    z = data.s.eval(&z, 1)?.with_space(sp.clone());
                }
                back.push(z.norm());
            }
            (back, op.orbit_norms(&yv, horizon as usize)?)
        } else {
            (Vec::new(), Vec::new())
        };
        let mut cross = Cross {
            back,
            fwd,
            cache: BTreeMap::new(),
        };
        // (1) the full series of S_n y dominates every sum over A_k
        let norms: Vec<Scalar> = (1..=horizon).map(|i| cross.get(op, &data.s, &yv, 0, i)).collect::<Result<_>>()?;
        let terms: Vec<Scalar> = norms.iter().map(|t| pow_p(t, &op.ambient_norm())).collect();
        let plain = op.ambient_norm().is_l1() || op.ambient_norm() == crate::spaces::NormKind::Sup;
        let audit = audit_series(if plain { &norms } else { &terms }, 1, y.backward.as_ref(), false);
        v.certificates.extend(audit.certificates(&format!("y{yi}.series.")));
        if audit.state != SeriesState::Converges {
            ok = false;
        }
        // (2) D_k = max_n sum_{i in A_k, i != n} ||T^n S_i y||
        let mut d_vals = Vec::with_capacity(sets.len());
        for a in &sets {
            let mut worst = Scalar::zero();
            for &n in &union {
                let mut s = Scalar::zero();
                for &i in a {
                    if i != n {
                        s = s + cross.get(op, &data.s, &yv, n, i)?;
                    }
                }
                worst = worst.max(s);
            }
            d_vals.push(worst);
        }
        for (k, d) in d_vals.iter().enumerate() {
            v.cert(Certificate::scalar(format!("y{yi}.D{k}"), Some(horizon), d));
        }
        let nonincreasing = d_vals.windows(2).all(|w| le_upper(&w[1], &w[0]));
        let small = d_vals.last().is_some_and(|d| d.to_f64() <= tol);
        if !nonincreasing {
            v.note(format!("sample `{}`: D_k is not nonincreasing", y.label));
        }
        if !small {
            v.note(format!("sample `{}`: the last D_k exceeds {tol}", y.label));
        }
        ok &= nonincreasing && small;
        // (3) T^n S_n y = y on every A_k
        let mut worst_defect = Scalar::zero();
        for &n in &union {
            let z = data.s.eval(&yv, n)?.with_space(sp.clone());
            let d = op.power(&z, n)?.sub(&yv)?.norm();
            worst_defect = worst_defect.max(d);
        }
        v.cert(Certificate::scalar(format!("y{yi}.identity_defect"), None, &worst_defect));
        ok &= worst_defect.is_zero();
    }
    v.cert(Certificate::value("tolerance", None, json!(tol)));
    if ok {
        v.state = VerdictState::Supports;
        v.note("checked on the samples and sets up to the horizon only");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::density::IntSet;
    use crate::criteria::kitai::Sample;
    use crate::criteria::series::TailClaim;
    use crate::shift::{BlockShift, ComponentOperator, Family, Tail};
    use crate::spaces::{Address, IndexSet, NormKind};

    fn doubling() -> Operator {
        let fam = Family::scalar_table(BTreeMap::new(), Tail::Constant(ComponentOperator::scalar(Scalar::int(2))));
        Operator::block(BlockShift::new(IndexSet::Unilateral, fam, NormKind::l1()).unwrap())
    }

    fn data(op: &Operator, sets: Vec<IntSet>) -> CriterionData {
        let y = SeqVector::delta(op.space().clone(), Address::seq(1), Scalar::one()).unwrap();
        let claim = TailClaim::Geometric {
            c: Scalar::one(),
            r: Scalar::ratio(1, 2),
            n0: 1,
        };
        CriterionData::one_set(vec![Sample::new("d1", y).backward(claim)], SRule::canonical_single(op)).with_sets(sets)
    }

    #[test]
    fn separated_dyadic_sets_pass() {
        let op = doubling();
        let sets = (1..=3).map(|k| IntSet::SeparatedDyadic { k }).collect();
        let v = check_d_criterion(&op, &data(&op, sets), 1024, D_TOL).unwrap();
        assert_eq!(v.state, VerdictState::Supports, "{:?} {:?}", v.notes, v.certificates);
        let d3 = v.find("y0.D2").unwrap().as_f64().unwrap();
        assert!(d3 <= 1e-3, "{d3}");
    }

    #[test]
    fn empty_sets_are_vacuous() {
        let op = doubling();
        let v = check_d_criterion(&op, &data(&op, vec![]), 50, D_TOL).unwrap();
        assert_eq!(v.state, VerdictState::Supports);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let op = doubling();
        let sets = vec![IntSet::Evens, IntSet::All];
        assert!(matches!(check_d_criterion(&op, &data(&op, sets), 50, D_TOL), Err(Error::Argument(_))));
    }
}
