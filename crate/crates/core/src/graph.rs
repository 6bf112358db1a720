//! Weighted shift on a graph: a spine `e_n` feeding countably many
//! branches `e^{(n,k)}_j`.
//!
//! The operator satisfies the Kitai criterion with two different dense
//! sets but not with a single one. `T e_1` is an infinite sum; it is cut
//! at `m <= M` and the dropped `l^1` mass `2^{-M}` is reported.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{Address, SeqVector, SpaceSpec, Token};

pub const DEFAULT_TRUNCATION: u64 = 64;

/// A vertex of the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphVertex {
    /// `e_n`.
    Spine(u64),
    /// `e^{(n,k)}_j`.
    Branch { n: u64, k: u64, j: u64 },
}

impl GraphVertex {
    pub fn address(self) -> Address {
        match self {
            GraphVertex::Spine(n) => Address::vertex(&[], n),
            GraphVertex::Branch { n, k, j } => Address::vertex(&[n, k], j),
        }
    }

    pub fn from_address(a: &Address) -> Result<GraphVertex> {
        let bad = |reason: &str| Error::Address {
            address: a.to_string(),
            reason: reason.into(),
        };
        match a.tokens() {
            [Token::Vertex { branch, pos }] if *pos >= 1 => match branch.as_slice() {
                [] => Ok(GraphVertex::Spine(*pos)),
                [n, k] if *n >= 1 && *k >= 1 => Ok(GraphVertex::Branch { n: *n, k: *k, j: *pos }),
                _ => Err(bad("branch label must be (n,k) with n,k >= 1")),
            },
            _ => Err(bad("expected one graph vertex")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphShift {
    truncation: u64,
}

impl Default for GraphShift {
    fn default() -> Self {
        GraphShift {
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

impl GraphShift {
    pub fn new(truncation: u64) -> Result<Self> {
        if !(1..=4096).contains(&truncation) {
            return Err(Error::Argument(format!("truncation {truncation} outside 1..=4096")));
        }
        Ok(GraphShift { truncation })
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn space(&self) -> Arc<SpaceSpec> {
        Arc::new(SpaceSpec::Graph)
    }

    /// `w_{n,k,j}` for `j >= 2`.
    pub fn weight(&self, n: u64, k: u64, j: u64) -> Scalar {
        assert!(j >= 2, "weights start at j = 2");
        if k > n + 1 || j <= n + k + 1 {
            Scalar::int(4)
        } else if j == n + k + 2 {
            // 1 / ((n+1) 4^{n+k} 2^{n-k+1})
            let e = 2 * (n + k) as i64 + n as i64 - k as i64 + 1;
            Scalar::pow2(-e) * Scalar::ratio(1, n as i64 + 1)
        } else {
            Scalar::int(2)
        }
    }

    /// `prod_{i=a}^{b} w_{n,k,i}`.
    pub fn weight_product(&self, n: u64, k: u64, a: u64, b: u64) -> Scalar {
        (a..=b).fold(Scalar::one(), |acc, i| acc * self.weight(n, k, i))
    }

    /// Exact `l^1` operator norm: the largest column sum is `w = 4`.
    pub fn norm_bound(&self) -> Scalar {
        Scalar::int(4)
    }

    /// Image of a single vertex.
    fn image(&self, v: GraphVertex) -> Vec<(GraphVertex, Scalar)> {
        match v {
            GraphVertex::Spine(1) => (1..=self.truncation)
                .map(|m| (GraphVertex::Branch { n: m, k: 1, j: 1 }, Scalar::pow2(-(m as i64))))
                .collect(),
            GraphVertex::Spine(n) => vec![(GraphVertex::Spine(n - 1), Scalar::int(2))],
            GraphVertex::Branch { n, k, j: 1 } => vec![(GraphVertex::Branch { n, k: k + 1, j: 1 }, Scalar::int(2))],
            GraphVertex::Branch { n, k, j } => vec![(GraphVertex::Branch { n, k, j: j - 1 }, self.weight(n, k, j))],
        }
    }

    /// `T x` together with the `l^1` mass dropped by the truncation of
    /// `T e_1`.
    pub fn apply_with_tail(&self, x: &SeqVector) -> Result<(SeqVector, Scalar)> {
        let mut out = SeqVector::zero(self.space());
        out.mark_downgraded(x.precision_downgraded());
        let mut tail = Scalar::zero();
        for (a, c) in x.entries() {
            let v = GraphVertex::from_address(a)?;
            if v == GraphVertex::Spine(1) {
                tail = tail + c.abs() * Scalar::pow2(-(self.truncation as i64));
            }
            for (u, w) in self.image(v) {
                out.add_at(u.address(), c.clone() * w);
            }
        }
        Ok((out, tail))
    }

    pub fn apply(&self, x: &SeqVector) -> Result<SeqVector> {
        Ok(self.apply_with_tail(x)?.0)
    }

    /// `T^n x` and the accumulated truncation mass, bounded through
    /// `||T|| = 4`.
    pub fn power_with_tail(&self, x: &SeqVector, n: u64) -> Result<(SeqVector, Scalar)> {
        let mut cur = x.clone();
        let mut tail = Scalar::zero();
        for _ in 0..n {
            let (next, t) = self.apply_with_tail(&cur)?;
            tail = tail * self.norm_bound() + t;
            cur = next;
        }
        Ok((cur, tail))
    }

    /// `S y` with `S e_n = e_{n+1}/2` and `S e^{(n,k)}_j = e^{(n,k)}_{j+1} / w_{n,k,j+1}`.
    pub fn right_inverse(&self, y: &SeqVector) -> Result<SeqVector> {
        let mut out = BTreeMap::new();
        for (a, c) in y.entries() {
            let (u, f) = match GraphVertex::from_address(a)? {
                GraphVertex::Spine(n) => (GraphVertex::Spine(n + 1), Scalar::ratio(1, 2)),
                GraphVertex::Branch { n, k, j } => (
                    GraphVertex::Branch { n, k, j: j + 1 },
                    self.weight(n, k, j + 1).recip().expect("weights are nonzero"),
                ),
            };
            out.insert(u.address(), c.clone() * f);
        }
        Ok(SeqVector::from_map_unchecked(self.space(), out, y.precision_downgraded()))
    }

    /// `S^n y`.
    pub fn lift(&self, y: &SeqVector, n: u64) -> Result<SeqVector> {
        let mut z = y.clone();
        for _ in 0..n {
            z = self.right_inverse(&z)?;
        }
        Ok(z)
    }

    pub fn basis(&self, v: GraphVertex) -> SeqVector {
        SeqVector::from_map_unchecked(self.space(), BTreeMap::from([(v.address(), Scalar::one())]), false)
    }

    /// Generalized-kernel approximant `y_K` of `e^{(n,k)}_j`, valid for
    /// `K > max(k, n+1)`; `T^{j+K-k-1} y_K = 0`.
    pub fn branch_kernel_vector(&self, n: u64, k: u64, j: u64, big_k: u64) -> Result<SeqVector> {
        if big_k <= k.max(n + 1) || j == 0 {
            return Err(Error::Argument(format!("y_K needs K > max(k, n+1), got K={big_k}")));
        }
        let top = j + big_k - k;
        let c = (Scalar::pow2((big_k - k) as i64) * self.weight_product(n, k, 2, j))
            .checked_div(&self.weight_product(n, big_k, 2, top))
            .expect("weights are nonzero");
        let mut out = BTreeMap::new();
        out.insert(GraphVertex::Branch { n, k, j }.address(), Scalar::one());
        out.insert(GraphVertex::Branch { n, k: big_k, j: top }.address(), -c);
        Ok(SeqVector::from_map_unchecked(self.space(), out, false))
    }

    /// Generalized-kernel approximant `z_K` of `e_n`, valid for `K >= n`,
    /// cut at branches `m <= M`. Returns the vector and the `l^1` mass of
    /// the dropped terms.
    pub fn spine_kernel_vector(&self, n: u64, big_k: u64) -> Result<(SeqVector, Scalar)> {
        if big_k < n || n == 0 {
            return Err(Error::Argument(format!("z_K needs K >= n >= 1, got n={n}, K={big_k}")));
        }
        let top = n + big_k;
        let scale = Scalar::pow2((n + big_k) as i64 - 2);
        let mut out = BTreeMap::new();
        out.insert(GraphVertex::Spine(n).address(), Scalar::one());
        for m in 1..=self.truncation {
            let c = (scale.clone() * Scalar::pow2(-(m as i64)))
                .checked_div(&self.weight_product(m, big_k, 2, top))
                .expect("weights are nonzero");
            out.insert(GraphVertex::Branch { n: m, k: big_k, j: top }.address(), -c);
        }
        // beyond the cut every product equals 4^{n+K-1}
        let tail = scale * Scalar::pow2(-(self.truncation as i64)) * Scalar::pow2(-2 * (top as i64 - 1));
        Ok((SeqVector::from_map_unchecked(self.space(), out, false), tail))
    }
}
