//! Small dense matrices, mixed-norm operator norms and an exact simplex
//! solver for least-norm preimage problems.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{combine_norms, NormKind};

type Q = BigRational;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_ints(rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|x| Scalar::int(*x)).collect())
    }

    /// `c * I_n`.
    pub fn scaled_identity(n: usize, c: &Scalar) -> Self {
        let mut data = vec![Scalar::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = c.clone();
        }
        Matrix { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn to_exact(&self) -> Option<Vec<Vec<Q>>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).as_exact().cloned()).collect())
            .collect()
    }

    pub fn apply(&self, x: &[Scalar]) -> Vec<Scalar> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Scalar::zero(), |acc, j| {
                    if x[j].is_zero() {
                        acc
                    } else {
                        acc + self.get(i, j) * &x[j]
                    }
                })
            })
            .collect()
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::SpaceMismatch(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = Scalar::zero();
                for k in 0..self.cols {
                    s = s + self.get(i, k) * other.get(k, j);
                }
                data.push(s);
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Exact right inverse `A^T (A A^T)^{-1}`; `None` without full row rank.
    pub fn right_inverse(&self) -> Option<Matrix> {
        let a = self.to_exact()?;
        let at = transpose_q(&a);
        let gram = mul_q(&a, &at);
        let inv = invert_q(&gram)?;
        let r = mul_q(&at, &inv);
        Some(from_q(&r))
    }
}

fn from_q(m: &[Vec<Q>]) -> Matrix {
    let rows = m.len();
    let cols = m[0].len();
    Matrix {
        rows,
        cols,
        data: m.iter().flatten().cloned().map(Scalar::Exact).collect(),
    }
}

fn transpose_q(a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn mul_q(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    a.iter()
        .map(|r| {
            (0..b[0].len())
                .map(|j| r.iter().zip(b).fold(Q::zero(), |s, (x, br)| s + x * &br[j]))
                .collect()
        })
        .collect()
}

/// Gauss-Jordan inverse over the rationals.
pub fn invert_q(a: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        let piv = m[c][c].clone();
        for x in m[c].iter_mut() {
            *x /= &piv;
        }
        let pivot_row = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Whether a norm value came from a closed formula or an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormFlag {
    Exact,
    LowerBound,
}

impl NormFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormFlag::Exact => "exact",
            NormFlag::LowerBound => "lower_bound",
        }
    }
}

/// Norm of a plain coordinate vector.
pub fn vector_norm(x: &[Scalar], norm: &NormKind) -> Scalar {
    let parts: Vec<Scalar> = x.iter().filter(|v| !v.is_zero()).cloned().collect();
    combine_norms(norm, &parts)
}

fn dual_norm(norm: &NormKind) -> NormKind {
    match norm {
        NormKind::Sup => NormKind::l1(),
        NormKind::Lp(p) if p.is_one() => NormKind::Sup,
        NormKind::Lp(p) => NormKind::Lp(p / (p - Q::one())),
    }
}

/// `||A||` from `(C^cols, dom)` to `(C^rows, cod)`.
///
/// Closed forms: an `l^1` domain gives the largest column norm, a sup
/// codomain gives the largest dual row norm. Everything else is estimated
/// from below by a nonlinear power iteration with 64 restarts.
pub fn matrix_norm(a: &Matrix, dom: &NormKind, cod: &NormKind) -> (Scalar, NormFlag) {
    if dom.is_l1() {
        let v = (0..a.cols)
            .map(|j| vector_norm(&(0..a.rows).map(|i| a.get(i, j).clone()).collect::<Vec<_>>(), cod))
            .reduce(Scalar::max)
            .unwrap();
        return (v, NormFlag::Exact);
    }
    if *cod == NormKind::Sup {
        let d = dual_norm(dom);
        let v = (0..a.rows)
            .map(|i| vector_norm(&(0..a.cols).map(|j| a.get(i, j).clone()).collect::<Vec<_>>(), &d))
            .reduce(Scalar::max)
            .unwrap();
        return (v, NormFlag::Exact);
    }
    (Scalar::Float(power_norm_estimate(a, dom.p_f64(), cod.p_f64())), NormFlag::LowerBound)
}

fn pnorm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Dual map: `sign(v) |v|^{r-1}`.
fn dual_map(v: &[f64], r: f64) -> Vec<f64> {
    v.iter().map(|x| x.signum() * x.abs().powf(r - 1.0)).collect()
}

fn power_norm_estimate(a: &Matrix, p: f64, r: f64) -> f64 {
    let m: Vec<Vec<f64>> = (0..a.rows)
        .map(|i| (0..a.cols).map(|j| a.get(i, j).to_f64()).collect())
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> { m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect() };
    let apply_t = |y: &[f64]| -> Vec<f64> {
        (0..a.cols)
            .map(|j| m.iter().zip(y).map(|(row, v)| row[j] * v).sum())
            .collect()
    };
    let pstar = p / (p - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = 0.0f64;
    for restart in 0..64 {
        let mut x: Vec<f64> = if restart < a.cols {
            (0..a.cols).map(|j| if j == restart { 1.0 } else { 0.0 }).collect()
        } else {
            (0..a.cols).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        for _ in 0..200 {
            let nx = pnorm(&x, p);
            if nx == 0.0 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = apply(&x);
            best = best.max(pnorm(&y, r));
            let g = apply_t(&dual_map(&y, r));
            if g.iter().all(|v| *v == 0.0) {
                break;
            }
            let next = dual_map(&g, pstar);
            if next.iter().zip(&x).all(|(u, v)| (u / pnorm(&next, p) - v).abs() < 1e-15) {
                break;
            }
            x = next;
        }
    }
    best
}

/// Outcome of [`lp_minimize`].
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

/// Minimizes `c.x` subject to `A x <= b` with `x` free, exactly.
///
/// Two-phase tableau simplex with Bland's rule; free variables are split
/// into positive and negative parts.
pub fn lp_minimize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let negs: Vec<usize> = (0..m).filter(|&i| b[i].is_negative()).collect();
    let art0 = 2 * n + m;
    let ncols = art0 + negs.len();
    let mut tab: Vec<Vec<Q>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = 0;
    for i in 0..m {
        let flip = b[i].is_negative();
        let sgn = if flip { -Q::one() } else { Q::one() };
        let mut row = vec![Q::zero(); ncols + 1];
        for j in 0..n {
            row[j] = &sgn * &a[i][j];
            row[n + j] = -&row[j];
        }
        row[2 * n + i] = sgn.clone();
        row[ncols] = &sgn * &b[i];
        if flip {
            row[art0 + art] = Q::one();
            basis.push(art0 + art);
            art += 1;
        } else {
            basis.push(2 * n + i);
        }
        tab.push(row);
    }
    if !negs.is_empty() {
        let mut cost = vec![Q::zero(); ncols];
        for c in cost.iter_mut().skip(art0) {
            *c = Q::one();
        }
        // phase one cannot be unbounded
        let _ = simplex(&mut tab, &mut basis, &cost, ncols);
        let value = objective(&tab, &basis, &cost);
        if value.is_positive() {
            return LpOutcome::Infeasible;
        }
        // pivot remaining artificials out or drop their redundant rows
        let mut i = 0;
        while i < tab.len() {
            if basis[i] >= art0 {
                match (0..art0).find(|&j| !tab[i][j].is_zero()) {
                    Some(j) => {
                        pivot(&mut tab, &mut basis, i, j);
                        i += 1;
                    }
                    None => {
                        tab.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    let mut cost = vec![Q::zero(); ncols];
    for j in 0..n {
        cost[j] = c[j].clone();
        cost[n + j] = -&c[j];
    }
    if simplex(&mut tab, &mut basis, &cost, art0).is_err() {
        return LpOutcome::Unbounded;
    }
    let mut full = vec![Q::zero(); ncols];
    for (i, &bj) in basis.iter().enumerate() {
        full[bj] = tab[i][ncols].clone();
    }
    let x: Vec<Q> = (0..n).map(|j| &full[j] - &full[n + j]).collect();
    let value = x.iter().zip(c).fold(Q::zero(), |s, (xi, ci)| s + xi * ci);
    LpOutcome::Optimal { x, value }
}

fn objective(tab: &[Vec<Q>], basis: &[usize], cost: &[Q]) -> Q {
    let rhs = tab.first().map(|r| r.len() - 1).unwrap_or(0);
    basis
        .iter()
        .enumerate()
        .fold(Q::zero(), |s, (i, &bj)| s + &cost[bj] * &tab[i][rhs])
}

fn pivot(tab: &mut [Vec<Q>], basis: &mut [usize], r: usize, c: usize) {
    let piv = tab[r][c].clone();
    for x in tab[r].iter_mut() {
        *x /= &piv;
    }
    let prow = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i != r && !row[c].is_zero() {
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
    }
    basis[r] = c;
}

/// Bland's rule; `Err(())` when unbounded.
fn simplex(tab: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], allowed: usize) -> std::result::Result<(), ()> {
    if tab.is_empty() {
        return if cost[..allowed].iter().any(|c| c.is_negative()) {
            Err(())
        } else {
            Ok(())
        };
    }
    let rhs = tab[0].len() - 1;
    loop {
        let mut entering = None;
        for j in 0..allowed {
            if basis.contains(&j) {
                continue;
            }
            let r = tab
                .iter()
                .enumerate()
                .fold(cost[j].clone(), |s, (i, row)| s - &cost[basis[i]] * &row[j]);
            if r.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, Q)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[e].is_positive() {
                let ratio = &row[rhs] / &row[e];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(());
        };
        pivot(tab, basis, r, e);
    }
}

/// Which least-norm problem to solve for `A z ~ y`.
#[derive(Clone, Debug, PartialEq)]
pub enum HitMode {
    /// `min_z max(||z||, ||Az - y|| / eps)`; the ball `B(y, eps)` meets
    /// `A(B(0,1))` iff the value is `< 1`.
    Joint(Q),
    /// `min ||z||` subject to `||Az - y|| <= eps`.
    Ball(Q),
    /// `min ||z||` subject to `Az = y` (`inf` when `y` is not in the range).
    Exact,
}

/// Bounds on a least-norm value; `exact` when `lower == upper` comes from a
/// single linear program.
#[derive(Clone, Debug)]
pub struct HitBounds {
    pub lower: Scalar,
    pub upper: Scalar,
    pub witness: Option<Vec<Scalar>>,
    pub exact: bool,
}

struct LpBuilder {
    nvars: usize,
    rows: Vec<(Vec<(usize, Q)>, Q)>,
}

impl LpBuilder {
    fn var(&mut self) -> usize {
        self.nvars += 1;
        self.nvars - 1
    }

    /// `|| (e_i) || <= bound_lin + bound_const` with
    /// `e_i = sum coef * var - const_i`; L1 or sup only.
    fn norm_le(&mut self, exprs: &[(Vec<(usize, Q)>, Q)], norm: &NormKind, bound: &[(usize, Q)], bound_const: &Q) {
        let neg = |v: &[(usize, Q)]| -> Vec<(usize, Q)> { v.iter().map(|(i, c)| (*i, -c)).collect() };
        let bneg = neg(bound);
        if *norm == NormKind::Sup {
            for (e, k) in exprs {
                let mut r = e.clone();
                r.extend(bneg.iter().cloned());
                self.rows.push((r, k + bound_const));
                let mut r = neg(e);
                r.extend(bneg.iter().cloned());
                self.rows.push((r, bound_const - k));
            }
        } else {
            let mut total = Vec::new();
            for (e, k) in exprs {
                let s = self.var();
                let mut r = e.clone();
                r.push((s, -Q::one()));
                self.rows.push((r, k.clone()));
                let mut r = neg(e);
                r.push((s, -Q::one()));
                self.rows.push((r, -k));
                total.push((s, Q::one()));
            }
            total.extend(bneg);
            self.rows.push((total, bound_const.clone()));
        }
    }

    fn solve(&self, objective_var: usize) -> LpOutcome {
        let mut c = vec![Q::zero(); self.nvars];
        c[objective_var] = Q::one();
        let a: Vec<Vec<Q>> = self
            .rows
            .iter()
            .map(|(r, _)| {
                let mut row = vec![Q::zero(); self.nvars];
                for (i, v) in r {
                    row[*i] += v;
                }
                row
            })
            .collect();
        let b: Vec<Q> = self.rows.iter().map(|(_, k)| k.clone()).collect();
        lp_minimize(&c, &a, &b)
    }
}

fn lp_norm_case(n: &NormKind) -> bool {
    n.is_l1() || *n == NormKind::Sup
}

/// Solves a least-norm problem exactly for L1/sup norms; other `l^p` norms
/// are bracketed between the sup and L1 versions.
pub fn solve_hit(a: &[Vec<Q>], y: &[Q], dom: &NormKind, cod: &NormKind, mode: &HitMode) -> HitBounds {
    if lp_norm_case(dom) && lp_norm_case(cod) {
        let (v, z) = solve_hit_lp(a, y, dom, cod, mode);
        return match v {
            Some(v) => HitBounds {
                lower: Scalar::Exact(v.clone()),
                upper: Scalar::Exact(v),
                witness: z.map(|z| z.into_iter().map(Scalar::Exact).collect()),
                exact: true,
            },
            None => HitBounds {
                lower: Scalar::Float(f64::INFINITY),
                upper: Scalar::Float(f64::INFINITY),
                witness: None,
                exact: true,
            },
        };
    }
    let sub = |n: &NormKind, to: NormKind| if lp_norm_case(n) { n.clone() } else { to };
    let (lo, _) = solve_hit_lp(a, y, &sub(dom, NormKind::Sup), &sub(cod, NormKind::Sup), mode);
    let (hi, z) = solve_hit_lp(a, y, &sub(dom, NormKind::l1()), &sub(cod, NormKind::l1()), mode);
    let lower = lo.map(Scalar::Exact).unwrap_or(Scalar::Float(f64::INFINITY));
    let mut upper = hi.map(Scalar::Exact).unwrap_or(Scalar::Float(f64::INFINITY));
    let witness = z.map(|z| z.into_iter().map(Scalar::Exact).collect::<Vec<_>>());
    if let Some(w) = &witness {
        let true_val = hit_objective(a, y, w, dom, cod, mode);
        if true_val.lt(&upper) {
            upper = true_val;
        }
    }
    HitBounds {
        lower,
        upper,
        witness,
        exact: false,
    }
}

/// Objective of `mode` at `z` under the true norms (`inf` if infeasible).
pub fn hit_objective(a: &[Vec<Q>], y: &[Q], z: &[Scalar], dom: &NormKind, cod: &NormKind, mode: &HitMode) -> Scalar {
    let resid: Vec<Scalar> = a
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            row.iter()
                .zip(z)
                .fold(Scalar::Exact(-yi), |s, (aij, zj)| s + Scalar::Exact(aij.clone()) * zj)
        })
        .collect();
    let nz = vector_norm(z, dom);
    let nr = vector_norm(&resid, cod);
    match mode {
        HitMode::Joint(eps) => nz.max(nr.checked_div(&Scalar::Exact(eps.clone())).unwrap()),
        HitMode::Ball(eps) => {
            if nr.le(&Scalar::Exact(eps.clone())) {
                nz
            } else {
                Scalar::Float(f64::INFINITY)
            }
        }
        HitMode::Exact => {
            if nr.is_zero() {
                nz
            } else {
                Scalar::Float(f64::INFINITY)
            }
        }
    }
}

fn solve_hit_lp(a: &[Vec<Q>], y: &[Q], dom: &NormKind, cod: &NormKind, mode: &HitMode) -> (Option<Q>, Option<Vec<Q>>) {
    let n = a.first().map(Vec::len).unwrap_or(0);
    let mut lp = LpBuilder {
        nvars: n + 1,
        rows: Vec::new(),
    };
    let u = n;
    let zexpr: Vec<(Vec<(usize, Q)>, Q)> = (0..n).map(|j| (vec![(j, Q::one())], Q::zero())).collect();
    lp.norm_le(&zexpr, dom, &[(u, Q::one())], &Q::zero());
    let rexpr: Vec<(Vec<(usize, Q)>, Q)> = a
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            (
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(j, v)| (j, v.clone()))
                    .collect(),
                yi.clone(),
            )
        })
        .collect();
    match mode {
        HitMode::Joint(eps) => lp.norm_le(&rexpr, cod, &[(u, eps.clone())], &Q::zero()),
        HitMode::Ball(eps) => lp.norm_le(&rexpr, cod, &[], eps),
        HitMode::Exact => lp.norm_le(&rexpr, &NormKind::Sup, &[], &Q::zero()),
    }
    match lp.solve(u) {
        LpOutcome::Optimal { x, value } => (Some(value), Some(x[..n].to_vec())),
        _ => (None, None),
    }
}
