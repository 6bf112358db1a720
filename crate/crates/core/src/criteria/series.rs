//! Partial sums and declared tail claims.
//!
//! Numerics alone cannot settle convergence. A claim states the symbolic
//! behaviour of a series beyond the horizon; it is verified term-wise on
//! the computed window and only then used to conclude.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{check_keys, scalar_json};

/// Relative slack granted to floating-point terms when checking upper
/// claims; divergence claims must hold with this margin the other way.
pub const FLOAT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum TailClaim {
    /// `t_n <= c r^n` for `n >= n0`, `0 <= r < 1`.
    Geometric { c: Scalar, r: Scalar, n0: u64 },
    /// `t_n <= c n^{-s}` for `n >= n0`, `s > 1`.
    PowerLaw { c: Scalar, s: Scalar, n0: u64 },
    /// `sum_{n >= n0} t_n <= total`.
    SumBound { n0: u64, total: Scalar },
    /// `t_n >= c / n` for `n >= n0`: divergent.
    Harmonic { c: Scalar, n0: u64 },
    /// `t_n >= c > 0` for `n >= n0`: no decay.
    NonDecaying { c: Scalar, n0: u64 },
}

impl TailClaim {
    pub fn n0(&self) -> u64 {
        match self {
            TailClaim::Geometric { n0, .. }
            | TailClaim::PowerLaw { n0, .. }
            | TailClaim::SumBound { n0, .. }
            | TailClaim::Harmonic { n0, .. }
            | TailClaim::NonDecaying { n0, .. } => *n0,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, TailClaim::Harmonic { .. } | TailClaim::NonDecaying { .. })
    }

    /// True when the claimed terms tend to zero.
    pub fn decays(&self) -> bool {
        matches!(self, TailClaim::Geometric { .. } | TailClaim::PowerLaw { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailClaim::Geometric { .. } => "geometric",
            TailClaim::PowerLaw { .. } => "power_law",
            TailClaim::SumBound { .. } => "sum_bound",
            TailClaim::Harmonic { .. } => "harmonic",
            TailClaim::NonDecaying { .. } => "non_decaying",
        }
    }

    /// Term-wise comparator at `n`.
    pub fn comparator(&self, n: u64) -> Option<Scalar> {
        match self {
            TailClaim::Geometric { c, r, .. } => Some(c.clone() * r.powi(n as i32)),
            TailClaim::PowerLaw { c, s, .. } => Some(c.clone() * Scalar::Float((n as f64).powf(-s.to_f64()))),
            TailClaim::Harmonic { c, .. } => c.checked_div(&Scalar::int(n as i64)),
            TailClaim::NonDecaying { c, .. } => Some(c.clone()),
            TailClaim::SumBound { .. } => None,
        }
    }

    /// Upper bound on `sum_{n > h} t_n` implied by the claim.
    pub fn tail_after(&self, h: u64) -> Option<Scalar> {
        match self {
            TailClaim::Geometric { c, r, n0 } => {
                let from = (h + 1).max(*n0);
                (c.clone() * r.powi(from as i32)).checked_div(&(Scalar::one() - r.clone()))
            }
            TailClaim::PowerLaw { c, s, n0 } => {
                // sum_{n > m} n^{-s} <= m^{1-s} / (s - 1)
                let m = h.max(n0.saturating_sub(1)).max(1) as f64;
                let s = s.to_f64();
                Some(c.clone() * Scalar::Float(m.powf(1.0 - s) / (s - 1.0)))
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(format!("{} claim: {m}", self.name())));
        match self {
            TailClaim::Geometric { c, r, .. } => {
                if c.is_negative() || r.is_negative() || !r.lt(&Scalar::one()) {
                    return bad("needs c >= 0 and 0 <= r < 1");
                }
            }
            TailClaim::PowerLaw { c, s, .. } => {
                if c.is_negative() || !Scalar::one().lt(s) {
                    return bad("needs c >= 0 and s > 1");
                }
            }
            TailClaim::SumBound { total, .. } => {
                if total.is_negative() {
                    return bad("needs total >= 0");
                }
            }
            TailClaim::Harmonic { c, .. } | TailClaim::NonDecaying { c, .. } => {
                if !Scalar::zero().lt(c) {
                    return bad("needs c > 0");
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        match self {
            TailClaim::Geometric { c, r, n0 } => {
                json!({"kind": "geometric", "c": scalar_json(c), "r": scalar_json(r), "n0": n0})
            }
            TailClaim::PowerLaw { c, s, n0 } => {
                json!({"kind": "power_law", "c": scalar_json(c), "s": scalar_json(s), "n0": n0})
            }
            TailClaim::SumBound { n0, total } => json!({"kind": "sum_bound", "n0": n0, "total": scalar_json(total)}),
            TailClaim::Harmonic { c, n0 } => json!({"kind": "harmonic", "c": scalar_json(c), "n0": n0}),
            TailClaim::NonDecaying { c, n0 } => json!({"kind": "non_decaying", "c": scalar_json(c), "n0": n0}),
        }
    }

    pub fn from_json(v: &Value) -> Result<TailClaim> {
        let obj = v.as_object().ok_or_else(|| Error::Config("claim must be an object".into()))?;
        let num = |k: &str| -> Result<Scalar> {
            let x = obj.get(k).ok_or_else(|| Error::Config(format!("claim needs `{k}`")))?;
            match x {
                Value::String(s) => Scalar::parse(s),
                Value::Number(_) => Scalar::parse(&x.to_string()),
                _ => Err(Error::Config(format!("claim field `{k}` must be a number"))),
            }
        };
        let n0 = obj.get("n0").and_then(Value::as_u64).unwrap_or(1);
        let (claim, keys): (TailClaim, &[&str]) = match obj.get("kind").and_then(Value::as_str) {
            Some("geometric") => (
                TailClaim::Geometric {
                    c: num("c")?,
                    r: num("r")?,
                    n0,
                },
                &["kind", "c", "r", "n0"],
            ),
            Some("power_law") => (
                TailClaim::PowerLaw {
                    c: num("c")?,
                    s: num("s")?,
                    n0,
                },
                &["kind", "c", "s", "n0"],
            ),
            Some("sum_bound") => (TailClaim::SumBound { n0, total: num("total")? }, &["kind", "total", "n0"]),
            Some("harmonic") => (TailClaim::Harmonic { c: num("c")?, n0 }, &["kind", "c", "n0"]),
            Some("non_decaying") => (TailClaim::NonDecaying { c: num("c")?, n0 }, &["kind", "c", "n0"]),
            other => return Err(Error::Config(format!("unknown claim kind {other:?}"))),
        };
        check_keys(obj, keys, "claim")?;
        claim.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(claim)
    }
}

/// `a <= b`, loosened by [`FLOAT_SLACK`] when either side is a float.
pub fn le_upper(a: &Scalar, b: &Scalar) -> bool {
    if a.is_exact() && b.is_exact() {
        a.le(b)
    } else {
        a.to_f64() <= b.to_f64() * (1.0 + FLOAT_SLACK) + f64::MIN_POSITIVE
    }
}

/// `a >= b`, tightened by [`FLOAT_SLACK`] when either side is a float.
pub fn ge_lower(a: &Scalar, b: &Scalar) -> bool {
    if a.is_exact() && b.is_exact() {
        b.le(a)
    } else {
        a.to_f64() >= b.to_f64() * (1.0 + FLOAT_SLACK)
    }
}

/// What the computed terms establish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesState {
    Converges,
    Diverges,
    Unknown,
}

/// Result of auditing `t_n`, `n in [first, H]`.
#[derive(Clone, Debug)]
pub struct SeriesAudit {
    pub state: SeriesState,
    pub partial_sum: Scalar,
    pub horizon: u64,
    /// Index from which every computed term is exactly zero.
    pub zero_from: Option<u64>,
    pub claim: Option<TailClaim>,
    /// `None` if no claim, else whether it held on the window.
    pub claim_holds: Option<bool>,
    pub first_violation: Option<u64>,
    /// Upper bound on the whole series (partial sum plus claimed tail).
    pub total_bound: Option<Scalar>,
    /// Smallest term-to-comparator ratio seen when checking a divergence claim.
    pub min_ratio: Option<f64>,
}

impl SeriesAudit {
    pub fn certificates(&self, prefix: &str) -> Vec<super::Certificate> {
        use super::Certificate;
        let mut out = vec![Certificate::scalar(format!("{prefix}partial_sum"), Some(self.horizon), &self.partial_sum)];
        if let Some(z) = self.zero_from {
            out.push(Certificate::value(format!("{prefix}eventually_zero"), Some(z), json!(true)));
        }
        if let (Some(c), Some(ok)) = (&self.claim, self.claim_holds) {
            let mut v = c.to_json();
            v["verified"] = json!(ok);
            if let Some(f) = self.first_violation {
                v["first_violation"] = json!(f);
            }
            if let Some(r) = self.min_ratio {
                v["min_ratio"] = json!(r);
            }
            out.push(Certificate::value(format!("{prefix}claim"), Some(c.n0()), v));
        }
        if let Some(t) = &self.total_bound {
            out.push(Certificate::scalar(format!("{prefix}total_bound"), None, t));
        }
        out
    }
}

/// Audits `sum_n t_n` where `terms[i]` is `t_{first + i}`.
///
/// `zero_is_final`: a zero term forces all later ones to vanish (forward
/// orbits), so exact zeros up to the horizon settle convergence.
pub fn audit_series(terms: &[Scalar], first: u64, claim: Option<&TailClaim>, zero_is_final: bool) -> SeriesAudit {
    let horizon = first + terms.len() as u64 - 1;
    let partial_sum = terms.iter().fold(Scalar::zero(), |a, t| a + t.clone());
    let zero_from = if zero_is_final {
        terms.iter().position(Scalar::is_zero).map(|i| first + i as u64)
    } else {
        None
    };
    let mut audit = SeriesAudit {
        state: SeriesState::Unknown,
        partial_sum: partial_sum.clone(),
        horizon,
        zero_from,
        claim: claim.cloned(),
        claim_holds: None,
        first_violation: None,
        total_bound: None,
        min_ratio: None,
    };
    if zero_from.is_some() {
        audit.state = SeriesState::Converges;
        audit.total_bound = Some(partial_sum.clone());
    }
    let Some(c) = claim else { return audit };
    let window = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (first + i as u64, t))
        .filter(|(n, _)| *n >= c.n0());
    let mut holds = true;
    let mut checked = 0u64;
    match c {
        TailClaim::SumBound { total, .. } => {
            let s = window.fold(Scalar::zero(), |a, (_, t)| a + t.clone());
            holds = le_upper(&s, total);
            if holds {
                let prefix = terms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| first + (*i as u64) < c.n0())
                    .fold(Scalar::zero(), |a, (_, t)| a + t.clone());
                audit.total_bound = Some(prefix + total.clone());
            }
        }
        _ => {
            let mut min_ratio = f64::INFINITY;
            for (n, t) in window {
                checked += 1;
                let cmp = c.comparator(n).expect("term-wise claim");
                let ok = if c.is_divergent() { ge_lower(t, &cmp) } else { le_upper(t, &cmp) };
                if c.is_divergent() && cmp.to_f64() > 0.0 {
                    min_ratio = min_ratio.min(t.to_f64() / cmp.to_f64());
                }
                if !ok {
                    holds = false;
                    audit.first_violation = Some(n);
                    break;
                }
            }
            if c.is_divergent() {
                audit.min_ratio = Some(min_ratio);
                holds &= checked > 0;
            } else if holds {
                audit.total_bound = c.tail_after(horizon).map(|tail| partial_sum.clone() + tail);
            }
        }
    }
    audit.claim_holds = Some(holds);
    if holds {
        audit.state = if c.is_divergent() { SeriesState::Diverges } else { SeriesState::Converges };
    }
    audit
}

/// Audits `t_n -> 0` on the window.
pub fn audit_decay(terms: &[Scalar], first: u64, claim: Option<&TailClaim>, zero_is_final: bool, tol: f64) -> DecayAudit {
    let horizon = first + terms.len() as u64 - 1;
    let last = terms.last().cloned().unwrap_or_else(Scalar::zero);
    let mut out = DecayAudit {
        state: SeriesState::Unknown,
        last: last.clone(),
        horizon,
        reason: "no decay certificate",
        claim_holds: None,
    };
    if zero_is_final {
        if let Some(i) = terms.iter().position(Scalar::is_zero) {
            out.state = SeriesState::Converges;
            out.reason = "orbit reaches 0";
            let _ = i;
            return out;
        }
    }
    if let Some(c) = claim {
        if matches!(c, TailClaim::SumBound { .. } | TailClaim::Harmonic { .. }) {
            // neither says anything about the terms' limit here
        } else {
            let a = audit_series(terms, first, Some(c), false);
            out.claim_holds = a.claim_holds;
            if a.claim_holds == Some(true) {
                out.state = if c.is_divergent() { SeriesState::Diverges } else { SeriesState::Converges };
                out.reason = if c.is_divergent() { "terms stay above a positive constant" } else { "claimed decay verified" };
                return out;
            }
        }
    }
    let q = terms.len() / 4;
    let tail = &terms[terms.len() - q.max(1)..];
    let monotone = tail.windows(2).all(|w| le_upper(&w[1], &w[0]));
    if last.to_f64() <= tol && monotone {
        out.state = SeriesState::Converges;
        out.reason = "below tolerance with a nonincreasing final stretch";
    }
    out
}

#[derive(Clone, Debug)]
pub struct DecayAudit {
    pub state: SeriesState,
    pub last: Scalar,
    pub horizon: u64,
    pub reason: &'static str,
    pub claim_holds: Option<bool>,
}
