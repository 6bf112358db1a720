//! Catalog of explicit operators with known dynamical properties and the
//! diagnostics that corroborate them.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::criteria::{
    chaos_backward_summability, check_d_criterion, check_fhc_criterion, check_kitai, fhc_necessary_series,
    mixing_cofiniteness, transitivity_witness, Certificate, CriterionData, DiagnosticVerdict, IntSet, SRule,
    Sample, SeriesClaims, TailClaim, VerdictState, D_TOL,
};
use crate::dynamics::{Operator, Target};
use crate::error::{Error, Result};
use crate::graph::{GraphShift, GraphVertex};
use crate::scalar::Scalar;
use crate::shift::{BlockShift, ComponentOperator, Family, WeightFormula};
use crate::spaces::{Address, IndexSet, NormKind, SeqVector};
use crate::tree::{SegmentedTreeShift, TreeKind};

/// Truth value of one property.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    /// Not settled for this operator; never guessed.
    NA,
}

impl Truth {
    pub fn as_str(self) -> &'static str {
        match self {
            Truth::True => "T",
            Truth::False => "F",
            Truth::NA => "NA",
        }
    }
}

/// The five properties in a fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Property {
    Hc,
    Wm,
    Mix,
    Chaos,
    Fhc,
}

impl Property {
    pub const ALL: [Property; 5] = [Property::Hc, Property::Wm, Property::Mix, Property::Chaos, Property::Fhc];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Hc => "HC",
            Property::Wm => "WM",
            Property::Mix => "MIX",
            Property::Chaos => "CHAOS",
            Property::Fhc => "FHC",
        }
    }
}

/// Which operator of an entry a row or diagnostic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The headline operator (usually a lift `B_T`).
    Primary,
    /// The operator it is built from.
    Base,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Primary => "primary",
            Side::Base => "base",
        }
    }
}

/// Ground-truth flags for one operator, with a reason per flag.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub side: Side,
    /// `true` on `c_0`-type spaces, where FHC does not imply mixing.
    pub sup_norm: bool,
    pub flags: [(Truth, &'static str); 5],
    /// Flags transported along a quasi-conjugacy rather than proved directly.
    pub derived_by_conjugacy: bool,
}

impl GroundTruth {
    pub fn get(&self, p: Property) -> Truth {
        self.flags[p as usize].0
    }

    pub fn to_json(&self) -> Value {
        let flags: serde_json::Map<String, Value> = Property::ALL
            .iter()
            .map(|p| {
                let (t, why) = self.flags[*p as usize];
                (p.as_str().to_string(), json!({"value": t.as_str(), "reason": why}))
            })
            .collect();
        json!({
            "side": self.side.as_str(),
            "space": if self.sup_norm { "c0" } else { "lp" },
            "flags": flags,
            "derived_by_conjugacy": self.derived_by_conjugacy,
        })
    }
}

/// Operators of an entry.
#[derive(Clone)]
pub struct Built {
    pub primary: Operator,
    pub base: Option<Operator>,
}

impl Built {
    pub fn side(&self, s: Side) -> Result<&Operator> {
        match s {
            Side::Primary => Ok(&self.primary),
            Side::Base => self
                .base
                .as_ref()
                .ok_or_else(|| Error::Argument("entry has no base operator".into())),
        }
    }
}

type RunFn = fn(&Operator, u64) -> Result<DiagnosticVerdict>;

/// One criteria call with its expected outcome.
#[derive(Clone)]
pub struct Diagnostic {
    pub name: &'static str,
    pub criterion: &'static str,
    pub side: Side,
    pub horizon: u64,
    pub expected: VerdictState,
    run: RunFn,
}

impl Diagnostic {
    pub fn run(&self, built: &Built, horizon: u64) -> Result<DiagnosticVerdict> {
        (self.run)(built.side(self.side)?, horizon)
    }
}

impl fmt::Debug for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Diagnostic({} on {}, expect {})", self.name, self.side.as_str(), self.expected.as_str())
    }
}

pub struct ZooEntry {
    pub id: &'static str,
    pub description: &'static str,
    build: fn() -> Result<Built>,
    pub truths: Vec<GroundTruth>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ZooEntry {
    pub fn build(&self) -> Result<Built> {
        (self.build)()
    }

    pub fn truth(&self, side: Side) -> Option<&GroundTruth> {
        self.truths.iter().find(|t| t.side == side)
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "id": self.id,
            "description": self.description,
            "ground_truth": self.truths.iter().map(GroundTruth::to_json).collect::<Vec<_>>(),
            "diagnostics": self.diagnostics.iter().map(|d| json!({
                "name": d.name,
                "criterion": d.criterion,
                "side": d.side.as_str(),
                "horizon": d.horizon,
                "expected": d.expected.as_str(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ZooEntry({})", self.id)
    }
}

// ---------------------------------------------------------------- helpers

use Truth::{False as F, True as T, NA};

fn truth(side: Side, sup_norm: bool, flags: [(Truth, &'static str); 5]) -> GroundTruth {
    GroundTruth {
        side,
        sup_norm,
        flags,
        derived_by_conjugacy: false,
    }
}

fn diag(name: &'static str, criterion: &'static str, side: Side, horizon: u64, expected: VerdictState, run: RunFn) -> Diagnostic {
    Diagnostic {
        name,
        criterion,
        side,
        horizon,
        expected,
        run,
    }
}

fn block(op: &Operator) -> Result<&BlockShift> {
    op.as_block()
        .map(|b| b.as_ref())
        .ok_or_else(|| Error::Argument("expected a block shift".into()))
}

/// `c` at coordinate `k` of a sum of scalars (or the scalar itself).
fn scalar_vec(op: &Operator, k: i64, c: Scalar) -> Result<SeqVector> {
    SeqVector::delta(op.space().clone(), Address::seq(k), c)
}

fn scalar_target(op: &Operator, j: i64, y: Scalar, eps: Scalar) -> Result<Target> {
    let sp = block(op)?.component_space(j);
    Target::new(Some(j), SeqVector::from_entries(sp, [(Address::default(), y)])?, eps)
}

fn vertex(op: &Operator, b: &[u64], j: u64) -> Result<SeqVector> {
    SeqVector::delta(op.space().clone(), Address::vertex(b, j), Scalar::one())
}

/// `e^b_j` placed at outer index `k` of a lift.
fn lifted_vertex(op: &Operator, k: i64, b: &[u64], j: u64) -> Result<SeqVector> {
    let inner = Address::vertex(b, j);
    SeqVector::delta(op.space().clone(), inner.prefixed(crate::spaces::Token::Seq(k)), Scalar::one())
}

fn geometric(c: Scalar, r: Scalar, n0: u64) -> TailClaim {
    TailClaim::Geometric { c, r, n0 }
}

fn half_geometric(n0: u64) -> TailClaim {
    geometric(Scalar::one(), Scalar::ratio(1, 2), n0)
}

fn tree_op(kind: TreeKind, norm: NormKind) -> Result<Operator> {
    Ok(Operator::tree(SegmentedTreeShift::build(kind, norm)?))
}

fn lift(base: &Operator, set: IndexSet, outer: NormKind) -> Result<Operator> {
    Ok(Operator::block(BlockShift::lift_of(base.component().clone(), set, outer)?))
}

/// Children used for the no-fixed-point cascades: a fixed pseudo-random
/// walk, so every run checks the same chain.
pub fn cascade_children(seed: u64, len: usize) -> Vec<u64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(1..=6)).collect()
}

fn cascade_verdict(op: &Operator, steps: u64) -> Result<DiagnosticVerdict> {
    let t = op
        .as_tree()
        .ok_or_else(|| Error::Argument("cascade needs a tree shift".into()))?;
    let children = cascade_children(7, steps as usize);
    let rep = t.fixed_point_cascade(&[1], &children)?;
    let mut v = DiagnosticVerdict::new("cascade", steps);
    let min = rep.steps.iter().map(|s| s.exponent).min().unwrap_or(0);
    v.cert(Certificate::value("steps", None, json!(rep.steps.len())));
    v.cert(Certificate::value("min_exponent", None, json!(min)));
    if let Some(s) = rep.steps.iter().find(|s| !s.holds) {
        v.note(format!("bound below 1 at {:?}: {}", s.branch, s.formula));
    } else {
        v.state = VerdictState::Supports;
        v.note("every step of the chain keeps the no-fixed-point bound >= 1");
    }
    Ok(v)
}

// ---------------------------------------------------------------- entries

fn build_double() -> Result<Built> {
    let op = lift(&Operator::new(ComponentOperator::scalar(Scalar::int(2)))?, IndexSet::Unilateral, NormKind::l1())?;
    Ok(Built { primary: op, base: None })
}

fn double_target(op: &Operator) -> Result<Target> {
    scalar_target(op, 1, Scalar::int(8), Scalar::ratio(1, 2))
}

fn double_entry() -> ZooEntry {
    let why = "T = 2 Id: geometric backward orbits, Kitai criterion with S = B^{-1}/2";
    ZooEntry {
        id: "double_identity_lift",
        description: "unilateral lift B_T of T = 2 Id on K, on l^1",
        build: build_double,
        truths: vec![truth(Side::Primary, false, [(T, why), (T, why), (T, why), (T, why), (T, "chaotic on l^p")])],
        diagnostics: vec![
            diag("transitivity", "transitivity", Side::Primary, 10, VerdictState::Supports, |op, h| {
                transitivity_witness(op, &[double_target(op)?], 1..=h)
            }),
            diag("mixing", "mixing", Side::Primary, 40, VerdictState::Supports, |op, h| {
                mixing_cofiniteness(op, &[double_target(op)?], h, Some(3))
            }),
            diag("chaos", "chaos", Side::Primary, 60, VerdictState::Supports, |op, h| {
                let claims = SeriesClaims {
                    backward: Some(half_geometric(0)),
                    forward: None,
                };
                chaos_backward_summability(op, &scalar_vec(op, 1, Scalar::one())?, h, &claims)
            }),
            diag("fhc-necessary", "fhc-necessary", Side::Primary, 60, VerdictState::Supports, |op, h| {
                let t = scalar_target(op, 1, Scalar::one(), Scalar::ratio(1, 2))?;
                let claims = SeriesClaims {
                    backward: Some(half_geometric(1)),
                    forward: None,
                };
                fhc_necessary_series(op, &t, h, &claims)
            }),
            diag("kitai", "kitai", Side::Primary, 30, VerdictState::Supports, |op, h| {
                let s = vec![Sample::new("delta_3", scalar_vec(op, 3, Scalar::one())?).backward(half_geometric(1))];
                check_kitai(op, &CriterionData::one_set(s, SRule::canonical_single(op)), h, 1e-6)
            }),
            diag("fhc-criterion", "fhc-criterion", Side::Primary, 60, VerdictState::Supports, |op, h| {
                let s = vec![Sample::new("delta_1", scalar_vec(op, 1, Scalar::one())?).backward(half_geometric(1))];
                check_fhc_criterion(op, &CriterionData::one_set(s, SRule::canonical_single(op)), h)
            }),
            diag("d-criterion", "d-criterion", Side::Primary, 1024, VerdictState::Supports, |op, h| {
                let s = vec![Sample::new("delta_1", scalar_vec(op, 1, Scalar::one())?).backward(half_geometric(1))];
                let sets = (1..=3).map(|k| IntSet::SeparatedDyadic { k }).collect();
                let data = CriterionData::one_set(s, SRule::canonical_single(op)).with_sets(sets);
                check_d_criterion(op, &data, h, D_TOL)
            }),
        ],
    }
}

fn build_constant() -> Result<Built> {
    let op = lift(&Operator::new(ComponentOperator::scalar(Scalar::one()))?, IndexSet::Bilateral, NormKind::l1())?;
    Ok(Built { primary: op, base: None })
}

fn constant_entry() -> ZooEntry {
    let why = "no operator on K has a hypercyclic bilateral lift";
    ZooEntry {
        id: "bilateral_constant_scalar",
        description: "unweighted bilateral shift (w = 1) on l^1(K, Z)",
        build: build_constant,
        truths: vec![truth(
            Side::Primary,
            false,
            [(F, why), (F, why), (F, why), (F, "not hypercyclic"), (F, "not hypercyclic")],
        )],
        diagnostics: vec![
            diag("transitivity", "transitivity", Side::Primary, 40, VerdictState::Indeterminate, |op, h| {
                let t = scalar_target(op, 0, Scalar::int(2), Scalar::ratio(1, 10))?;
                transitivity_witness(op, &[t], 1..=h)
            }),
            diag("chaos", "chaos", Side::Primary, 100, VerdictState::Refutes, |op, h| {
                let claims = SeriesClaims {
                    backward: Some(TailClaim::NonDecaying { c: Scalar::one(), n0: 0 }),
                    forward: Some(TailClaim::NonDecaying { c: Scalar::one(), n0: 1 }),
                };
                chaos_backward_summability(op, &scalar_vec(op, 0, Scalar::one())?, h, &claims)
            }),
        ],
    }
}

fn build_chaos_gap() -> Result<Built> {
    let base = Operator::block(BlockShift::new(
        IndexSet::Bilateral,
        Family::formula(WeightFormula::ChaosGap),
        NormKind::l1(),
    )?);
    let primary = lift(&base, IndexSet::Bilateral, NormKind::lp_int(2))?;
    Ok(Built {
        primary,
        base: Some(base),
    })
}

fn gap_target(op: &Operator) -> Result<Target> {
    scalar_target(op, 0, Scalar::one(), Scalar::ratio(1, 2))
}

fn chaos_gap_entry() -> ZooEntry {
    let lift_why = "bilateral lift of a mixing shift on l^p, p > 1, with summable backward lifts";
    ZooEntry {
        id: "bilateral_chaos_gap",
        description: "w_n = 2 (n >= -1), (n+1)/n otherwise, on l^1(K, Z); lifted to l^2(l^1(K, Z), Z)",
        build: build_chaos_gap,
        truths: vec![
            truth(
                Side::Primary,
                false,
                [(T, lift_why), (T, lift_why), (T, lift_why), (T, lift_why), (T, "chaotic on l^p")],
            ),
            truth(
                Side::Base,
                false,
                [
                    (T, "products w_{-n}..w_{-2} = 1/n -> 0 and forward products grow"),
                    (T, "mixing"),
                    (T, "forward and backward weight products diverge"),
                    (F, "sum_n |w_{-n} .. w_{-2}| is harmonic"),
                    (F, "on l^1 frequent hypercyclicity forces the same series to converge"),
                ],
            ),
        ],
        diagnostics: vec![
            diag("chaos (base)", "chaos", Side::Base, 2000, VerdictState::Refutes, |op, h| {
                let claims = SeriesClaims {
                    backward: Some(half_geometric(0)),
                    forward: Some(TailClaim::Harmonic {
                        c: Scalar::int(4),
                        n0: 3,
                    }),
                };
                chaos_backward_summability(op, &scalar_vec(op, 0, Scalar::one())?, h, &claims)
            }),
            diag("fhc-necessary (base)", "fhc-necessary", Side::Base, 500, VerdictState::Refutes, |op, h| {
                // forward infima are (1/2) 4/(n-1) = 2/(n-1)
                let claims = SeriesClaims {
                    backward: Some(half_geometric(1)),
                    forward: Some(TailClaim::Harmonic {
                        c: Scalar::int(2),
                        n0: 3,
                    }),
                };
                fhc_necessary_series(op, &gap_target(op)?, h, &claims)
            }),
            diag("transitivity (base)", "transitivity", Side::Base, 20, VerdictState::Supports, |op, h| {
                transitivity_witness(op, &[gap_target(op)?], 1..=h)
            }),
            diag("mixing (base)", "mixing", Side::Base, 60, VerdictState::Supports, |op, h| {
                mixing_cofiniteness(op, &[gap_target(op)?], h, Some(4))
            }),
            diag("chaos (lift)", "chaos", Side::Primary, 300, VerdictState::Supports, |op, h| {
                // ||B^n y||^2 = 16/(n-1)^2 <= 64/n^2 for n >= 2
                let claims = SeriesClaims {
                    backward: Some(geometric(Scalar::one(), Scalar::ratio(1, 4), 0)),
                    forward: Some(TailClaim::PowerLaw {
                        c: Scalar::int(64),
                        s: Scalar::int(2),
                        n0: 2,
                    }),
                };
                let y = SeqVector::delta(op.space().clone(), Address::parse("0/0")?, Scalar::one())?;
                chaos_backward_summability(op, &y, h, &claims)
            }),
        ],
    }
}

fn build_root_ratio() -> Result<Built> {
    let f = WeightFormula::RootRatio {
        p: BigRational::from_integer(2.into()),
    };
    let op = Operator::block(BlockShift::new(IndexSet::Unilateral, Family::formula(f), NormKind::lp_int(2))?);
    Ok(Built { primary: op, base: None })
}

fn root_ratio_entry() -> ZooEntry {
    let why = "weight products ((n+1)/2)^{1/p} tend to infinity";
    ZooEntry {
        id: "unilateral_mixing_not_chaotic_lp",
        description: "unilateral w_n = ((n+1)/n)^{1/p} on l^p(K, N), p = 2",
        build: build_root_ratio,
        truths: vec![truth(
            Side::Primary,
            false,
            [
                (T, why),
                (T, why),
                (T, why),
                (F, "sum 1/|w_2 .. w_n|^p is harmonic"),
                (F, "for unilateral scalar shifts on l^p frequent hypercyclicity equals chaos"),
            ],
        )],
        diagnostics: vec![
            diag("chaos", "chaos", Side::Primary, 2000, VerdictState::Refutes, |op, h| {
                // terms 2/(n+2) >= 1/n for n >= 2
                let claims = SeriesClaims {
                    backward: Some(TailClaim::Harmonic { c: Scalar::one(), n0: 3 }),
                    forward: None,
                };
                chaos_backward_summability(op, &scalar_vec(op, 1, Scalar::one())?, h, &claims)
            }),
            diag("fhc-criterion", "fhc-criterion", Side::Primary, 500, VerdictState::Refutes, |op, h| {
                let claim = TailClaim::Harmonic {
                    c: Scalar::ratio(1, 2),
                    n0: 1,
                };
                let s = vec![Sample::new("delta_1", scalar_vec(op, 1, Scalar::one())?).backward(claim)];
                check_fhc_criterion(op, &CriterionData::one_set(s, SRule::canonical_single(op)), h)
            }),
            diag("mixing", "mixing", Side::Primary, 40, VerdictState::Supports, |op, h| {
                let t = scalar_target(op, 1, Scalar::one(), Scalar::ratio(1, 2))?;
                mixing_cofiniteness(op, &[t], h, Some(1))
            }),
        ],
    }
}

fn build_mixc0() -> Result<Built> {
    let base = tree_op(TreeKind::mixc0(), NormKind::Sup)?;
    let primary = lift(&base, IndexSet::Unilateral, NormKind::Sup)?;
    Ok(Built {
        primary,
        base: Some(base),
    })
}

fn mixc0_entry() -> ZooEntry {
    ZooEntry {
        id: "mixc0_tree",
        description: "segmented tree shift on c_0(V) and its lift on c_0(c_0(V), N)",
        build: build_mixc0,
        truths: vec![
            truth(
                Side::Primary,
                true,
                [
                    (T, "mixing"),
                    (T, "mixing"),
                    (T, "lift of a mixing tree shift"),
                    (F, "the no-fixed-point cascade rules out periodic points near the root"),
                    (NA, "not settled"),
                ],
            ),
            truth(
                Side::Base,
                true,
                [
                    (T, "mixing"),
                    (T, "mixing"),
                    (T, "preimage norms 2^{N+1-n} tend to 0 along every branch"),
                    (NA, "not settled for the tree shift itself"),
                    (NA, "not settled"),
                ],
            ),
        ],
        diagnostics: vec![
            diag("mixing (base)", "mixing", Side::Base, 40, VerdictState::Supports, |op, h| {
                let t = Target::new(None, vertex(op, &[1], 1)?, Scalar::ratio(1, 2))?;
                mixing_cofiniteness(op, &[t], h, Some(3))
            }),
            diag("kitai sequence (base)", "kitai", Side::Base, 60, VerdictState::Supports, |op, h| {
                let s = vec![
                    Sample::new("root", vertex(op, &[1], 1)?),
                    Sample::new("e(1,2)_2", vertex(op, &[1, 2], 2)?),
                ];
                check_kitai(op, &CriterionData::one_set(s, SRule::canonical_sequence(op)), h, 1e-6)
            }),
            diag("cascade (base)", "cascade", Side::Base, 20, VerdictState::Supports, cascade_verdict),
            diag("chaos (lift)", "chaos", Side::Primary, 60, VerdictState::Indeterminate, |op, h| {
                chaos_backward_summability(op, &lifted_vertex(op, 1, &[1], 1)?, h, &SeriesClaims::default())
            }),
        ],
    }
}

fn build_proptree() -> Result<Built> {
    Ok(Built {
        primary: tree_op(TreeKind::PropTree, NormKind::l1())?,
        base: None,
    })
}

/// Sum of the preimage terms from `n = 19` on: one block per child, each
/// bounded by `4^{-(n-1)}`.
pub fn proptree_claim() -> TailClaim {
    TailClaim::SumBound {
        n0: 19,
        total: Scalar::ratio(4, 3),
    }
}

fn proptree_entry() -> ZooEntry {
    ZooEntry {
        id: "proptree",
        description: "proportional segmented tree shift on l^1(V)",
        build: build_proptree,
        truths: vec![truth(
            Side::Primary,
            false,
            [
                (T, "mixing"),
                (T, "mixing"),
                (T, "children intervals cover every large n"),
                (F, "not chaotic"),
                (F, "return sets of the root ball have density 0"),
            ],
        )],
        diagnostics: vec![
            diag("fhc-necessary", "fhc-necessary", Side::Primary, 300, VerdictState::Supports, |op, h| {
                let t = Target::new(None, vertex(op, &[1], 1)?, Scalar::ratio(1, 2))?;
                let claims = SeriesClaims {
                    backward: Some(proptree_claim()),
                    forward: None,
                };
                fhc_necessary_series(op, &t, h, &claims)
            }),
            diag("covering", "covering", Side::Primary, 50, VerdictState::Supports, |op, h| {
                let t = op.as_tree().ok_or_else(|| Error::Argument("covering needs a tree".into()))?;
                let rep = t.covering(&[1], &BigInt::from(10u64.pow(6)))?;
                let mut v = DiagnosticVerdict::new("covering", h);
                v.cert(Certificate::value("intervals", None, json!(rep.intervals.len())));
                v.cert(Certificate::value(
                    "first_start",
                    None,
                    json!(rep.intervals.first().map(|i| i.0.to_string())),
                ));
                if rep.chained {
                    v.state = VerdictState::Supports;
                    v.note("consecutive child intervals meet without gaps");
                } else {
                    v.note("the intervals leave a gap");
                }
                Ok(v)
            }),
        ],
    }
}

fn build_fhc_tree() -> Result<Built> {
    let base = tree_op(TreeKind::fhc(), NormKind::l1())?;
    let primary = lift(&base, IndexSet::Unilateral, NormKind::l1())?;
    Ok(Built {
        primary,
        base: Some(base),
    })
}

/// `||S_n e_root|| <= 4 * 2^N 4^{-n}` with `N` the root exponent.
pub fn fhc_tree_claim(op: &Operator) -> Result<TailClaim> {
    let t = op
        .underlying_tree()
        .ok_or_else(|| Error::Argument("expected the fhc tree".into()))?;
    let l = t.seg_len(&[1])? as i64;
    let n = 2 * l + 1;
    Ok(geometric(Scalar::int(4) * Scalar::pow2(n), Scalar::ratio(1, 4), 1))
}

fn fhc_tree_entry() -> ZooEntry {
    let fhc = "frequently hypercyclic but not chaotic";
    ZooEntry {
        id: "fhc_tree",
        description: "tree shift with small last-edge weights on l^1(V), lifted to l^1(l^1(V), N)",
        build: build_fhc_tree,
        truths: vec![
            truth(
                Side::Primary,
                false,
                [
                    (T, fhc),
                    (T, fhc),
                    (T, "frequently hypercyclic lifts on l^p are mixing"),
                    (F, "the no-fixed-point cascade"),
                    (T, "FHC criterion with the lifts S_n"),
                ],
            ),
            GroundTruth {
                side: Side::Base,
                sup_norm: false,
                flags: [
                    (T, fhc),
                    (T, fhc),
                    (T, "transported from the lift"),
                    (F, "the no-fixed-point cascade"),
                    (T, "transported from the lift"),
                ],
                derived_by_conjugacy: true,
            },
        ],
        diagnostics: vec![
            diag("fhc-criterion sequence (lift)", "fhc-criterion", Side::Primary, 40, VerdictState::Supports, |op, h| {
                let s = vec![Sample::new("root at 1", lifted_vertex(op, 1, &[1], 1)?).backward(fhc_tree_claim(op)?)];
                check_fhc_criterion(op, &CriterionData::one_set(s, SRule::canonical_sequence(op)), h)
            }),
            diag("cascade (base)", "cascade", Side::Base, 20, VerdictState::Supports, cascade_verdict),
        ],
    }
}

fn build_graph() -> Result<Built> {
    Ok(Built {
        primary: Operator::graph(GraphShift::default()),
        base: None,
    })
}

/// Generalized-kernel samples for the two-set Kitai check.
pub fn graph_kernel_samples(g: &GraphShift) -> Result<Vec<Sample>> {
    Ok(vec![
        Sample::new("y_3(1,1,1)", g.branch_kernel_vector(1, 1, 1, 3)?),
        Sample::new("y_6(2,3,2)", g.branch_kernel_vector(2, 3, 2, 6)?),
        Sample::new("z_2(1)", g.spine_kernel_vector(1, 2)?.0),
        Sample::new("z_4(3)", g.spine_kernel_vector(3, 4)?.0),
    ])
}

pub fn graph_basis_samples(g: &GraphShift) -> Vec<Sample> {
    [
        ("e_1", GraphVertex::Spine(1)),
        ("e_3", GraphVertex::Spine(3)),
        ("e(1,1)_1", GraphVertex::Branch { n: 1, k: 1, j: 1 }),
        ("e(2,1)_3", GraphVertex::Branch { n: 2, k: 1, j: 3 }),
        ("e(1,4)_2", GraphVertex::Branch { n: 1, k: 4, j: 2 }),
    ]
    .into_iter()
    .map(|(l, v)| Sample::new(l, g.basis(v)))
    .collect()
}

fn graph_of(op: &Operator) -> Result<&GraphShift> {
    op.as_graph()
        .map(|g| g.as_ref())
        .ok_or_else(|| Error::Argument("expected the graph shift".into()))
}

/// `y_K` and `z_K` for `K <= k_max`: exact vanishing and distance to the
/// approximated basis vector.
fn kernel_verdict(op: &Operator, k_max: u64) -> Result<DiagnosticVerdict> {
    let g = graph_of(op)?;
    let mut v = DiagnosticVerdict::new("kernel", k_max);
    let mut ok = true;
    let mut last_dist = None;
    for big_k in 2..=k_max {
        for n in 1..=big_k.min(3) {
            let (z, tail) = g.spine_kernel_vector(n, big_k)?;
            let (img, _) = g.power_with_tail(&z, n + big_k - 1)?;
            ok &= img.is_zero();
            let d = z.sub(&g.basis(GraphVertex::Spine(n)))?.norm() + tail;
            if n == 1 {
                last_dist = Some(d.clone());
            }
            v.cert(Certificate::scalar(format!("z_{big_k}({n}).distance"), None, &d));
        }
        for (n, k, j) in [(1, 1, 1), (1, 2, 3), (2, 1, 2)] {
            if big_k <= k.max(n + 1) {
                continue;
            }
            let y = g.branch_kernel_vector(n, k, j, big_k)?;
            ok &= g.power_with_tail(&y, j + big_k - k - 1)?.0.is_zero();
        }
    }
    if let Some(d) = last_dist {
        v.cert(Certificate::scalar("z_K(1).final_distance", Some(k_max), &d));
    }
    if ok {
        v.state = VerdictState::Supports;
        v.note("every constructed kernel vector vanishes exactly under the stated power");
    }
    Ok(v)
}

fn graph_entry() -> ZooEntry {
    let kitai = "Kitai criterion with X0 = generalized kernel, Y0 = finitely supported vectors";
    ZooEntry {
        id: "graph_shift_kitai",
        description: "weighted shift on a graph: spine e_n feeding branches e^(n,k)_j",
        build: build_graph,
        truths: vec![truth(
            Side::Primary,
            false,
            [(T, kitai), (T, kitai), (T, kitai), (NA, "not settled"), (NA, "not settled")],
        )],
        diagnostics: vec![
            diag("kitai two-set", "kitai", Side::Primary, 40, VerdictState::Supports, |op, h| {
                let g = graph_of(op)?;
                let data = CriterionData::two_sets(graph_kernel_samples(g)?, graph_basis_samples(g), SRule::canonical_single(op));
                check_kitai(op, &data, h, 1e-6)
            }),
            diag("kitai single-set", "kitai", Side::Primary, 40, VerdictState::Refutes, |op, h| {
                let g = graph_of(op)?;
                let (z, _) = g.spine_kernel_vector(1, 4)?;
                let claim = TailClaim::NonDecaying {
                    c: Scalar::ratio(1, 4),
                    n0: 4,
                };
                let s = vec![Sample::new("z_4(1)", z).backward(claim)];
                check_kitai(op, &CriterionData::one_set(s, SRule::canonical_single(op)), h, 1e-6)
            }),
            diag("kernel vectors", "kernel", Side::Primary, 12, VerdictState::Supports, kernel_verdict),
        ],
    }
}

// ---------------------------------------------------------------- catalog

/// Every catalog entry, in a fixed order.
pub fn zoo_list() -> Vec<ZooEntry> {
    vec![
        double_entry(),
        constant_entry(),
        chaos_gap_entry(),
        root_ratio_entry(),
        mixc0_entry(),
        proptree_entry(),
        fhc_tree_entry(),
        graph_entry(),
    ]
}

pub fn zoo_entry(id: &str) -> Result<ZooEntry> {
    zoo_list()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownEntry(id.to_string()))
}

/// Horizon cap for diagnostics. `Default` runs each at its declared horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Default,
    Max(u64),
}

#[derive(Clone, Debug)]
pub struct DiagnosticRow {
    pub name: String,
    pub criterion: String,
    pub side: Side,
    pub expected: VerdictState,
    pub verdict: DiagnosticVerdict,
    /// The declared horizon exceeded the budget; the diagnostic did not run.
    pub skipped: bool,
}

impl DiagnosticRow {
    pub fn matches(&self) -> bool {
        self.skipped || self.verdict.state == self.expected
    }
}

#[derive(Clone, Debug)]
pub struct ZooReport {
    pub id: String,
    pub rows: Vec<DiagnosticRow>,
}

impl ZooReport {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(DiagnosticRow::matches)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "all_match": self.all_match(),
            "diagnostics": self.rows.iter().map(|r| json!({
                "name": r.name,
                "criterion": r.criterion,
                "side": r.side.as_str(),
                "expected": r.expected.as_str(),
                "skipped": r.skipped,
                "matches": r.matches(),
                "verdict": r.verdict.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Runs every declared diagnostic of `id`.
pub fn zoo_diagnose(id: &str, budget: Budget) -> Result<ZooReport> {
    let e = zoo_entry(id)?;
    let built = e.build()?;
    let mut rows = Vec::with_capacity(e.diagnostics.len());
    for d in &e.diagnostics {
        let within = match budget {
            Budget::Default => true,
            Budget::Max(b) => d.horizon <= b,
        };
        let (verdict, skipped) = if within {
            (d.run(&built, d.horizon)?, false)
        } else {
            let mut v = DiagnosticVerdict::new(d.criterion, d.horizon);
            v.note("budget exhausted before the declared horizon");
            (v, true)
        };
        rows.push(DiagnosticRow {
            name: d.name.to_string(),
            criterion: d.criterion.to_string(),
            side: d.side,
            expected: d.expected,
            verdict,
            skipped,
        });
    }
    Ok(ZooReport {
        id: id.to_string(),
        rows,
    })
}

/// Violated implications `a => b` (as "A=>B") of one ground-truth matrix.
///
/// On `l^p`: CHAOS => FHC => MIX => WM <=> HC. On `c_0` FHC no longer
/// implies mixing, so only CHAOS => FHC, CHAOS => MIX, FHC => WM,
/// MIX => WM and WM <=> HC are checked.
pub fn implication_violations(gt: &GroundTruth) -> Vec<String> {
    use Property::*;
    let rules: &[(Property, Property)] = if gt.sup_norm {
        &[(Chaos, Fhc), (Chaos, Mix), (Fhc, Wm), (Mix, Wm), (Wm, Hc), (Hc, Wm)]
    } else {
        &[(Chaos, Fhc), (Fhc, Mix), (Mix, Wm), (Wm, Hc), (Hc, Wm)]
    };
    rules
        .iter()
        .filter(|(a, b)| gt.get(*a) == T && gt.get(*b) == F)
        .map(|(a, b)| format!("{}=>{}", a.as_str(), b.as_str()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_eight_unique_entries() {
        let l = zoo_list();
        assert!(l.len() >= 8);
        let mut ids: Vec<_> = l.iter().map(|e| e.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), l.len());
        assert!(matches!(zoo_entry("nope"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn catalog_respects_implications() {
        for e in zoo_list() {
            for t in &e.truths {
                assert!(implication_violations(t).is_empty(), "{} {:?}", e.id, t.side);
            }
        }
    }

    #[test]
    fn audit_catches_a_broken_matrix() {
        let gt = truth(Side::Primary, false, [(T, ""), (T, ""), (F, ""), (T, ""), (T, "")]);
        assert_eq!(implication_violations(&gt), vec!["FHC=>MIX".to_string()]);
    }

    #[test]
    fn documented_flags() {
        let m = zoo_entry("mixc0_tree").unwrap();
        let t = m.truth(Side::Primary).unwrap();
        let got: Vec<_> = Property::ALL.iter().map(|p| t.get(*p)).collect();
        assert_eq!(got, vec![T, T, T, F, NA]);
        let f = zoo_entry("fhc_tree").unwrap();
        let t = f.truth(Side::Primary).unwrap();
        assert_eq!((t.get(Property::Chaos), t.get(Property::Fhc)), (F, T));
        assert!(f.truth(Side::Base).unwrap().derived_by_conjugacy);
    }

    #[test]
    fn chaos_gap_weight_at_minus_five() {
        let b = build_chaos_gap().unwrap();
        let base = b.base.unwrap();
        let w = block(&base).unwrap().component(-5).unwrap();
        match w.as_ref() {
            ComponentOperator::ScalarWeight { w, .. } => assert_eq!(*w, Scalar::ratio(4, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn root_ratio_weight_three() {
        let b = build_root_ratio().unwrap();
        match block(&b.primary).unwrap().component(3).unwrap().as_ref() {
            ComponentOperator::ScalarWeight { w, .. } => assert!((w.to_f64() - 1.154_700_538_4).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }
}
