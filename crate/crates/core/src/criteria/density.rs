//! Integer sets and finite-horizon lower densities.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// A rule `n -> [n in A]` on the positive integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntSet {
    All,
    Evens,
    /// `{start + i * step : i >= 0}`.
    ArithmeticProgression { start: u64, step: u64 },
    /// `union_k [2^{2k}, 2^{2k+1})`.
    DyadicUnion,
    /// Inside each block `[2^t, 2^{t+1})` the `k`-th sub-interval
    /// `2^t + [2^t - 2^{t+1-k}, 2^t - 2^{t-k})`, entered `2^{k+1}` deep and
    /// sampled every `2^{k+1}`. Sets with different `k` are disjoint and far
    /// apart.
    SeparatedDyadic { k: u32 },
    Explicit(BTreeSet<u64>),
}

impl IntSet {
    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match self {
            IntSet::All => true,
            IntSet::Evens => n.is_multiple_of(2),
            IntSet::ArithmeticProgression { start, step } => {
                n >= *start && (*step == 0 && n == *start || *step > 0 && (n - start).is_multiple_of(*step))
            }
            IntSet::DyadicUnion => (63 - n.leading_zeros()).is_multiple_of(2),
            IntSet::SeparatedDyadic { k } => {
                let k = *k as u64;
                let t = 63 - n.leading_zeros() as u64;
                if k == 0 || t < k || k + 1 >= 63 {
                    return false;
                }
                let block = 1u64 << t;
                let start = block - (block >> (k - 1));
                let end = block - (block >> k);
                let o = n - block;
                let step = 1u64 << (k + 1);
                o > start && o < end && (o - start).is_multiple_of(step)
            }
            IntSet::Explicit(s) => s.contains(&n),
        }
    }

    pub fn elements_upto(&self, h: u64) -> Vec<u64> {
        match self {
            IntSet::Explicit(s) => s.range(1..=h).copied().collect(),
            _ => (1..=h).filter(|&n| self.contains(n)).collect(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            IntSet::All => "all".into(),
            IntSet::Evens => "evens".into(),
            IntSet::ArithmeticProgression { start, step } => format!("{start}+{step}N"),
            IntSet::DyadicUnion => "dyadic_union".into(),
            IntSet::SeparatedDyadic { k } => format!("separated_dyadic({k})"),
            IntSet::Explicit(s) => format!("explicit({})", s.len()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            IntSet::All => json!({"kind": "all"}),
            IntSet::Evens => json!({"kind": "evens"}),
            IntSet::ArithmeticProgression { start, step } => {
                json!({"kind": "progression", "start": start, "step": step})
            }
            IntSet::DyadicUnion => json!({"kind": "dyadic_union"}),
            IntSet::SeparatedDyadic { k } => json!({"kind": "separated_dyadic", "k": k}),
            IntSet::Explicit(s) => json!({"kind": "explicit", "elements": s}),
        }
    }

    pub fn from_json(v: &Value) -> Result<IntSet> {
        let obj = v.as_object().ok_or_else(|| Error::Config("integer set must be an object".into()))?;
        let int = |key: &str| {
            obj.get(key)
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Config(format!("integer set needs `{key}`")))
        };
        let (set, keys): (IntSet, &[&str]) = match obj.get("kind").and_then(Value::as_str) {
            Some("all") => (IntSet::All, &["kind"]),
            Some("evens") => (IntSet::Evens, &["kind"]),
            Some("dyadic_union") => (IntSet::DyadicUnion, &["kind"]),
            Some("progression") => (
                IntSet::ArithmeticProgression {
                    start: int("start")?,
                    step: int("step")?,
                },
                &["kind", "start", "step"],
            ),
            Some("separated_dyadic") => (IntSet::SeparatedDyadic { k: int("k")? as u32 }, &["kind", "k"]),
            Some("explicit") => {
                let els = obj
                    .get("elements")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Config("explicit set needs `elements`".into()))?
                    .iter()
                    .map(|x| x.as_u64().ok_or_else(|| Error::Config("set elements are integers".into())))
                    .collect::<Result<BTreeSet<u64>>>()?;
                (IntSet::Explicit(els), &["kind", "elements"])
            }
            other => return Err(Error::Config(format!("unknown integer set {other:?}"))),
        };
        crate::spaces::check_keys(obj, keys, "integer set")?;
        Ok(set)
    }
}

/// `min |A ∩ [1,n]| / n` over the tail window `N - ceil(sqrt N) < n <= N`,
/// the finite proxy for the lower density.
pub fn lower_density(a: &IntSet, big_n: u64) -> Result<BigRational> {
    if big_n == 0 {
        return Err(Error::Argument("lower density needs N >= 1".into()));
    }
    let w = (big_n as f64).sqrt().ceil() as u64;
    let from = big_n.saturating_sub(w) + 1;
    let mut count = 0u64;
    let mut best: Option<BigRational> = None;
    for n in 1..=big_n {
        if a.contains(n) {
            count += 1;
        }
        if n >= from {
            let r = BigRational::new(BigInt::from(count), BigInt::from(n));
            if best.as_ref().is_none_or(|b| r < *b) {
                best = Some(r);
            }
        }
    }
    Ok(best.unwrap_or_else(BigRational::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational_to_f64;

    #[test]
    fn densities() {
        assert_eq!(lower_density(&IntSet::All, 500).unwrap(), BigRational::from_integer(1.into()));
        let d = rational_to_f64(&lower_density(&IntSet::Evens, 1000).unwrap());
        assert!((d - 0.4995).abs() < 1e-4, "{d}");
        let d = rational_to_f64(&lower_density(&IntSet::Evens, 10_000).unwrap());
        assert!((d - 0.5).abs() < 1e-3);
        let d = rational_to_f64(&lower_density(&IntSet::DyadicUnion, 1 << 20).unwrap());
        assert!(d <= 1.0 / 3.0 + 1e-3, "{d}");
    }

    #[test]
    fn separated_dyadic_sets_are_disjoint_and_dense() {
        let sets: Vec<IntSet> = (1..=4).map(|k| IntSet::SeparatedDyadic { k }).collect();
        for n in 1..1u64 << 14 {
            assert!(sets.iter().filter(|s| s.contains(n)).count() <= 1, "{n}");
        }
        for s in &sets[..3] {
            let els = s.elements_upto(1 << 14);
            assert!(els.windows(2).all(|w| w[1] - w[0] >= 4));
            assert!(lower_density(s, 1 << 14).unwrap() > BigRational::zero(), "{}", s.name());
        }
    }

    #[test]
    fn json_round_trip() {
        for s in [
            IntSet::All,
            IntSet::ArithmeticProgression { start: 3, step: 5 },
            IntSet::SeparatedDyadic { k: 2 },
            IntSet::Explicit([1, 4, 9].into_iter().collect()),
        ] {
            assert_eq!(IntSet::from_json(&s.to_json()).unwrap(), s);
        }
        assert!(IntSet::from_json(&json!({"kind": "evens", "x": 1})).is_err());
    }
}
