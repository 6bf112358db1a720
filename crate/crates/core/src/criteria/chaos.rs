//! Backward-orbit summability for chaos and the least-preimage series
//! necessary for frequent hypercyclicity.

use super::series::{audit_decay, audit_series, SeriesState, TailClaim};
use super::verdict::{Certificate, DiagnosticVerdict, VerdictState};
use crate::dynamics::{Operator, Target};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{pow_p, NormKind, SeqVector};

/// Declared tails for the two halves of a two-sided series.
#[derive(Clone, Debug, Default)]
pub struct SeriesClaims {
    /// Backward orbit / preimage terms.
    pub backward: Option<TailClaim>,
    /// Forward terms (bilateral shifts only).
    pub forward: Option<TailClaim>,
}

fn is_sup(op: &Operator) -> bool {
    op.ambient_norm() == NormKind::Sup
}

fn power(op: &Operator, x: &Scalar) -> Scalar {
    pow_p(x, &op.ambient_norm())
}

/// Combines two series states into a verdict state.
fn combine(states: &[SeriesState], scalar_chain: bool, v: &mut DiagnosticVerdict) -> VerdictState {
    if states.contains(&SeriesState::Diverges) {
        if scalar_chain {
            return VerdictState::Refutes;
        }
        v.note("a divergence claim held, but other backward orbits may exist for non-scalar components");
        return VerdictState::Indeterminate;
    }
    if states.iter().all(|s| *s == SeriesState::Converges) {
        VerdictState::Supports
    } else {
        VerdictState::Indeterminate
    }
}

/// Audits the canonical backward orbit `x_0 = y`, `x_n = R x_{n-1}` built
/// from one-step right inverses, plus the forward orbit of bilateral
/// shifts. Terms are `||x_n||^p` on `l^p` sums; on `c_0` sums the norms
/// must tend to zero.
pub fn chaos_backward_summability(op: &Operator, y: &SeqVector, horizon: u64, claims: &SeriesClaims) -> Result<DiagnosticVerdict> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    let mut v = DiagnosticVerdict::new("chaos", horizon);
    let sup = is_sup(op);
    let mut back = Vec::with_capacity(horizon as usize + 1);
    let mut x = y.with_space(op.space().clone());
    back.push(power(op, &x.norm()));
    for _ in 0..horizon {
        x = op.right_inverse(&x).map_err(|e| match e {
            Error::Unsupported(m) => Error::Unsupported(format!("no backward-orbit rule: {m}")),
            other => other,
        })?;
        back.push(power(op, &x.norm()));
    }
    let mut states = Vec::new();
    if sup {
        let d = audit_decay(&back, 0, claims.backward.as_ref(), false, 0.0);
        v.cert(Certificate::scalar("backward.last_norm", Some(horizon), &d.last));
        v.note(format!("backward orbit: {}", d.reason));
        states.push(d.state);
    } else {
        let a = audit_series(&back, 0, claims.backward.as_ref(), false);
        v.certificates.extend(a.certificates("backward."));
        states.push(a.state);
    }
    if op.is_bilateral() {
        let fwd: Vec<Scalar> = op
            .orbit_norms(y, horizon as usize)?
            .iter()
            .skip(1)
            .map(|t| power(op, t))
            .collect();
        if sup {
            let d = audit_decay(&fwd, 1, claims.forward.as_ref(), true, 0.0);
            v.cert(Certificate::scalar("forward.last_norm", Some(horizon), &d.last));
            v.note(format!("forward orbit: {}", d.reason));
            states.push(d.state);
        } else {
            let a = audit_series(&fwd, 1, claims.forward.as_ref(), true);
            v.certificates.extend(a.certificates("forward."));
            states.push(a.state);
        }
    }
    if !sup {
        v.note("terms are p-th powers of the ambient norm");
    }
    v.state = combine(&states, op.is_scalar_chain(), &mut v);
    if v.state == VerdictState::Supports {
        v.note("a summable backward orbit of one vector; chaos also needs such orbits for a dense set");
    }
    Ok(v)
}

/// Partial sums of `inf { ||z||^p : T^n z in U }` (and of the forward
/// infima for bilateral shifts). The condition is only necessary: Supports
/// means consistency, never a proof of frequent hypercyclicity.
pub fn fhc_necessary_series(op: &Operator, target: &Target, horizon: u64, claims: &SeriesClaims) -> Result<DiagnosticVerdict> {
    if is_sup(op) {
        return Err(Error::Unsupported("the preimage series applies to l^p sums only".into()));
    }
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    let mut v = DiagnosticVerdict::new("fhc-necessary", horizon);
    let mut upper = Vec::with_capacity(horizon as usize);
    let mut lower = Vec::with_capacity(horizon as usize);
    let mut all_exact = true;
    for n in 1..=horizon {
        let h = op.ball_preimage(target, n)?;
        all_exact &= h.exact;
        upper.push(power(op, &h.upper));
        lower.push(power(op, &h.lower));
    }
    let mut states = Vec::new();
    let state_of = |up: &[Scalar], lo: &[Scalar], claim: Option<&TailClaim>, v: &mut DiagnosticVerdict, prefix: &str| {
        match claim {
            Some(c) if c.is_divergent() => {
                let a = audit_series(lo, 1, Some(c), false);
                v.certificates.extend(a.certificates(prefix));
                v.cert(Certificate::scalar(format!("{prefix}upper_partial_sum"), Some(horizon), &sum(up)));
                a.state
            }
            _ => {
                let a = audit_series(up, 1, claim, false);
                v.certificates.extend(a.certificates(prefix));
                a.state
            }
        }
    };
    states.push(state_of(&upper, &lower, claims.backward.as_ref(), &mut v, "preimage."));
    if op.is_bilateral() && target.index.is_some() {
        let mut fu = Vec::new();
        let mut fl = Vec::new();
        for n in 1..=horizon {
            let f = op.forward_value(target, n)?;
            all_exact &= f.exact;
            fu.push(power(op, &f.upper));
            fl.push(power(op, &f.lower));
        }
        states.push(state_of(&fu, &fl, claims.forward.as_ref(), &mut v, "forward."));
    }
    v.state = combine(&states, op.is_scalar_chain() && all_exact, &mut v);
    v.note("terms are p-th powers of least norms; upper bounds for sums, lower bounds for divergence");
    if v.state == VerdictState::Supports {
        v.note("consistent with frequent hypercyclicity; the condition is necessary, not sufficient");
    }
    Ok(v)
}

fn sum(xs: &[Scalar]) -> Scalar {
    xs.iter().fold(Scalar::zero(), |a, t| a + t.clone())
}
