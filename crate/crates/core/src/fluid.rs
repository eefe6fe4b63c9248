//! The fluid mixing problem: the fractional relaxation of ESPP.
//!
//! Source container `i` holds volume `u_i` of liquid with mass `a_i`; target
//! `j` must end up with volume `v_j` and mass `b_j`. A transfer plan `X`
//! pours fraction `x_ij` of source `i` into target `j`. Sources and targets
//! are sorted by non-ascending density, and only the first container on each
//! side may be empty.
//!
//! [`solve`] runs the reduction loop iteratively; [`solve_recursive`] keeps
//! the textbook recursion as a reference for differential tests.

use crate::instance::EsppInstance;
use crate::rational::{format_rational, serde_rational_vec, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FluidError {
    #[error("invalid fluid problem: {0}")]
    Invalid(String),
    #[error("fractional slack is negative at l = {index}: slack_l = {value}")]
    SlackViolated { index: usize, value: String },
    #[error("reduction guard not satisfied: {0}")]
    GuardNotSatisfied(&'static str),
    #[error("internal invariant broken: {0}")]
    InternalInvariantBroken(String),
    #[error("plan shape {rows}x{cols} does not match the problem")]
    ShapeMismatch { rows: usize, cols: usize },
}

/// Masses and volumes of the source and target containers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluidProblem {
    #[serde(with = "serde_rational_vec")]
    pub a: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub u: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub b: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub v: Vec<Rational>,
}

/// Row-stochastic `n x k` matrix of poured fractions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPlan {
    #[serde(with = "crate::rational::serde_rational_matrix")]
    pub x: Vec<Vec<Rational>>,
}

impl TransferPlan {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self { x: vec![vec![Rational::zero(); k]; n] }
    }

    pub fn rows(&self) -> usize {
        self.x.len()
    }

    pub fn cols(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Row-major `"p/q"` strings.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.x.iter().map(|r| r.iter().map(format_rational).collect()).collect()
    }
}

fn check_side(name: &str, mass: &[Rational], vol: &[Rational]) -> Result<(), FluidError> {
    let bad = |msg: String| Err(FluidError::Invalid(format!("{name}: {msg}")));
    if mass.is_empty() || mass.len() != vol.len() {
        return bad(format!("{} masses but {} volumes", mass.len(), vol.len()));
    }
    for (i, (m, w)) in mass.iter().zip(vol).enumerate() {
        if m.is_negative() || w.is_negative() {
            return bad(format!("container {} has negative mass or volume", i + 1));
        }
        if w.is_zero() {
            if i > 0 {
                return bad(format!("container {} is empty; only the first may be", i + 1));
            }
            if !m.is_zero() {
                return bad("the first container has mass but no volume".into());
            }
        }
    }
    // Densities non-ascending over the non-empty containers.
    let mut prev: Option<Rational> = None;
    for (i, (m, w)) in mass.iter().zip(vol).enumerate() {
        if w.is_zero() {
            continue;
        }
        let d = m / w;
        if prev.as_ref().is_some_and(|p| d > *p) {
            return bad(format!("density of container {} exceeds its predecessor", i + 1));
        }
        prev = Some(d);
    }
    Ok(())
}

impl FluidProblem {
    /// Validates conservation, signs, empty-container placement and the
    /// density order.
    pub fn new(a: Vec<Rational>, u: Vec<Rational>, b: Vec<Rational>, v: Vec<Rational>) -> Result<Self, FluidError> {
        let p = Self { a, u, b, v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FluidError> {
        check_side("sources", &self.a, &self.u)?;
        check_side("targets", &self.b, &self.v)?;
        if self.a.iter().sum::<Rational>() != self.b.iter().sum::<Rational>() {
            return Err(FluidError::Invalid("total source mass differs from total target mass".into()));
        }
        if self.u.iter().sum::<Rational>() != self.v.iter().sum::<Rational>() {
            return Err(FluidError::Invalid("total source volume differs from total target volume".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    /// Sources `a_i = n-i+1`, `u_i = 1`; targets `b_j = s`, `v_j = p_j`.
    pub fn from_espp(inst: &EsppInstance) -> Result<Self, crate::error::CoreError> {
        let (n, s, parts) = inst.small()?;
        let a = (1..=n).rev().map(|x| Rational::from_integer(BigInt::from(x))).collect();
        let u = vec![Rational::one(); n];
        let b = vec![Rational::from_integer(BigInt::from(s)); parts.len()];
        let v = parts.iter().map(|&p| Rational::from_integer(BigInt::from(p))).collect();
        Ok(Self { a, u, b, v })
    }

    /// `slack_l = sum_i (a_i/u_i) mu_{i,l} - sum_{j<=l} b_j` with
    /// `mu_{i,l} = max(0, min(u_i, V_l - U_{i-1}))`, for `1 <= l <= k`.
    pub fn frac_slack_at(&self, l: usize) -> Rational {
        assert!(l >= 1 && l <= self.k(), "index {l} outside 1..={}", self.k());
        let vl: Rational = self.v[..l].iter().sum();
        let bl: Rational = self.b[..l].iter().sum();
        let mut acc = Rational::zero();
        let mut prefix = Rational::zero();
        for (a, u) in self.a.iter().zip(&self.u) {
            if prefix >= vl {
                break;
            }
            if !u.is_zero() {
                let room = &vl - &prefix;
                acc += if *u < room { a.clone() } else { a * room / u };
            }
            prefix += u;
        }
        acc - bl
    }

    /// Minimum of `slack_l` over `1 <= l <= k-1` with its smallest argmin;
    /// `None` when `k = 1`.
    pub fn frac_slack(&self) -> Option<(Rational, usize)> {
        let mut best: Option<(Rational, usize)> = None;
        for l in 1..self.k() {
            let s = self.frac_slack_at(l);
            if best.as_ref().is_none_or(|b| s < b.0) {
                best = Some((s, l));
            }
        }
        best
    }

    fn density_gt(&self, b1: &Rational, v1: &Rational, b2: &Rational, v2: &Rational) -> bool {
        b1 * v2 > b2 * v1
    }
}

/// Data needed to turn a child solution into a parent solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lift {
    NullSource,
    NullTarget,
    Merge { gamma: Rational },
    Pour { lambda: Rational },
}

impl Lift {
    pub fn apply(&self, child: &TransferPlan) -> TransferPlan {
        match self {
            Lift::NullSource => {
                let k = child.cols();
                let mut x = Vec::with_capacity(child.rows() + 1);
                let mut first = vec![Rational::zero(); k];
                first[0] = Rational::one();
                x.push(first);
                x.extend(child.x.iter().cloned());
                TransferPlan { x }
            }
            Lift::NullTarget => TransferPlan {
                x: child
                    .x
                    .iter()
                    .map(|r| std::iter::once(Rational::zero()).chain(r.iter().cloned()).collect())
                    .collect(),
            },
            Lift::Merge { gamma } => {
                let rest = Rational::one() - gamma;
                TransferPlan {
                    x: child
                        .x
                        .iter()
                        .map(|r| {
                            let mut row = Vec::with_capacity(r.len() + 1);
                            row.push(gamma * &r[0]);
                            row.push(&rest * &r[0]);
                            row.extend(r[1..].iter().cloned());
                            row
                        })
                        .collect(),
                }
            }
            Lift::Pour { lambda } => {
                let mut x = child.x.clone();
                let keep = Rational::one() - lambda;
                for (j, cell) in x[0].iter_mut().enumerate() {
                    *cell = &keep * &*cell;
                    if j == 0 {
                        *cell += lambda;
                    }
                }
                TransferPlan { x }
            }
        }
    }
}

/// Deletes an empty first source. Slack values are unchanged.
pub fn reduce_null_source(pi: &FluidProblem) -> Result<(FluidProblem, Lift), FluidError> {
    if pi.n() < 2 || !pi.u[0].is_zero() {
        return Err(FluidError::GuardNotSatisfied("null source needs u_1 = 0 and n >= 2"));
    }
    let child = FluidProblem {
        a: pi.a[1..].to_vec(),
        u: pi.u[1..].to_vec(),
        b: pi.b.clone(),
        v: pi.v.clone(),
    };
    Ok((child, Lift::NullSource))
}

/// Deletes an empty first target. `slack_l(child) = slack_{l+1}(parent)`.
pub fn reduce_null_target(pi: &FluidProblem) -> Result<(FluidProblem, Lift), FluidError> {
    if pi.k() < 2 || !pi.v[0].is_zero() {
        return Err(FluidError::GuardNotSatisfied("null target needs v_1 = 0 and k >= 2"));
    }
    let child = FluidProblem {
        a: pi.a.clone(),
        u: pi.u.clone(),
        b: pi.b[1..].to_vec(),
        v: pi.v[1..].to_vec(),
    };
    Ok((child, Lift::NullTarget))
}

/// Merges the first two targets when they have equal density, with
/// `gamma = v_1/(v_1+v_2)`. `slack_l(child) = slack_{l+1}(parent)`.
pub fn merge_targets(pi: &FluidProblem) -> Result<(FluidProblem, Rational), FluidError> {
    if pi.k() < 2 || pi.v[0].is_zero() || &pi.b[0] * &pi.v[1] != &pi.b[1] * &pi.v[0] {
        return Err(FluidError::GuardNotSatisfied("merge needs v_1 > 0 and b_1/v_1 = b_2/v_2"));
    }
    let gamma = &pi.v[0] / (&pi.v[0] + &pi.v[1]);
    let mut b = vec![&pi.b[0] + &pi.b[1]];
    b.extend(pi.b[2..].iter().cloned());
    let mut v = vec![&pi.v[0] + &pi.v[1]];
    v.extend(pi.v[2..].iter().cloned());
    Ok((FluidProblem { a: pi.a.clone(), u: pi.u.clone(), b, v }, gamma))
}

/// `min(1, v_1/u_1, (b_1 v_2 - v_1 b_2)/(a_1 v_2 - u_1 b_2))`.
pub fn pour_fraction(
    a1: &Rational,
    u1: &Rational,
    b1: &Rational,
    v1: &Rational,
    b2: &Rational,
    v2: &Rational,
) -> Result<Rational, FluidError> {
    let denom = a1 * v2 - u1 * b2;
    if !denom.is_positive() {
        return Err(FluidError::InternalInvariantBroken(
            "pour denominator a_1 v_2 - u_1 b_2 is not positive".into(),
        ));
    }
    let balance = (b1 * v2 - v1 * b2) / denom;
    let fill = v1 / u1;
    let mut lambda = Rational::one();
    for cand in [fill, balance] {
        if cand < lambda {
            lambda = cand;
        }
    }
    if !lambda.is_positive() {
        return Err(FluidError::InternalInvariantBroken(format!("pour fraction {lambda} is not positive")));
    }
    Ok(lambda)
}

/// Pours fraction `lambda` of the first source into the first target.
/// Every `slack_l` is preserved.
pub fn pour(pi: &FluidProblem) -> Result<(FluidProblem, Rational), FluidError> {
    if pi.k() < 2 || pi.u[0].is_zero() || pi.v[0].is_zero() {
        return Err(FluidError::GuardNotSatisfied("pour needs k >= 2, u_1 > 0 and v_1 > 0"));
    }
    if !pi.density_gt(&pi.b[0], &pi.v[0], &pi.b[1], &pi.v[1]) {
        return Err(FluidError::GuardNotSatisfied("pour needs b_1/v_1 > b_2/v_2"));
    }
    let lambda = pour_fraction(&pi.a[0], &pi.u[0], &pi.b[0], &pi.v[0], &pi.b[1], &pi.v[1])?;
    let keep = Rational::one() - &lambda;
    let mut child = pi.clone();
    child.b[0] = &pi.b[0] - &lambda * &pi.a[0];
    child.v[0] = &pi.v[0] - &lambda * &pi.u[0];
    child.a[0] = &keep * &pi.a[0];
    child.u[0] = &keep * &pi.u[0];
    Ok((child, lambda))
}

/// One executed reduction, with the subproblem size it was applied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sources: usize,
    pub targets: usize,
    pub lift: Lift,
}

/// A solved problem: the plan, the reduction trace and its structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluidSolution {
    pub plan: TransferPlan,
    pub trace: Vec<Step>,
    pub structure: SolutionStructure,
}

fn check_precondition(pi: &FluidProblem) -> Result<(), FluidError> {
    pi.validate()?;
    if let Some((value, index)) = pi.frac_slack() {
        if value.is_negative() {
            return Err(FluidError::SlackViolated { index, value: format_rational(&value) });
        }
    }
    Ok(())
}

/// Reference recursion. Depth is `O(n+k)`; use [`solve`] for large inputs.
pub fn solve_recursive(pi: &FluidProblem) -> Result<FluidSolution, FluidError> {
    check_precondition(pi)?;
    let mut trace = Vec::new();
    let plan = recurse(pi, &mut trace)?;
    let structure = structure(&plan, &trace);
    Ok(FluidSolution { plan, trace, structure })
}

fn recurse(pi: &FluidProblem, trace: &mut Vec<Step>) -> Result<TransferPlan, FluidError> {
    let (n, k) = (pi.n(), pi.k());
    if k == 1 {
        return Ok(TransferPlan { x: vec![vec![Rational::one()]; n] });
    }
    let (child, lift) = if pi.u[0].is_zero() {
        reduce_null_source(pi)?
    } else if pi.v[0].is_zero() {
        reduce_null_target(pi)?
    } else if &pi.b[0] * &pi.v[1] == &pi.b[1] * &pi.v[0] {
        let (c, gamma) = merge_targets(pi)?;
        (c, Lift::Merge { gamma })
    } else {
        let (c, lambda) = pour(pi)?;
        (c, Lift::Pour { lambda })
    };
    if cfg!(debug_assertions) {
        child
            .validate()
            .map_err(|e| FluidError::InternalInvariantBroken(format!("reduction produced {e}")))?;
    }
    trace.push(Step { sources: n, targets: k, lift: lift.clone() });
    let sub = recurse(&child, trace)?;
    Ok(lift.apply(&sub))
}

/// Solves the problem exactly with the reduction loop run iteratively.
///
/// The loop keeps the first active source and target in original
/// coordinates. `w` records how the current (possibly merged) first target
/// spreads over the original columns, and `r` is the fraction of the current
/// source not yet poured. A pour of fraction `lambda` adds `r*lambda*w` to the
/// source's row, and whatever is left of a row when its source empties or the
/// last target is reached is assigned along `w`.
pub fn solve(pi: &FluidProblem) -> Result<FluidSolution, FluidError> {
    check_precondition(pi)?;
    let (n, k) = (pi.n(), pi.k());
    let broken = |msg: &str| FluidError::InternalInvariantBroken(msg.to_string());
    let mut plan = TransferPlan::zeros(n, k);
    let mut trace = Vec::new();
    let mut w = vec![Rational::zero(); k];
    w[0] = Rational::one();
    let (mut i, mut j) = (0usize, 0usize);
    let mut r = Rational::one();
    let (mut a_cur, mut u_cur) = (pi.a[0].clone(), pi.u[0].clone());
    let (mut b_cur, mut v_cur) = (pi.b[0].clone(), pi.v[0].clone());
    let add_row = |plan: &mut TransferPlan, row: usize, scale: &Rational, w: &[Rational], upto: usize| {
        for (cell, wj) in plan.x[row][..=upto].iter_mut().zip(w) {
            if !wj.is_zero() {
                *cell += scale * wj;
            }
        }
    };
    loop {
        let (sources, targets) = (n - i, k - j);
        if targets == 1 {
            add_row(&mut plan, i, &r, &w, j);
            for row in i + 1..n {
                add_row(&mut plan, row, &Rational::one(), &w, j);
            }
            break;
        }
        if u_cur.is_zero() {
            if sources < 2 {
                return Err(broken("sources exhausted before targets"));
            }
            add_row(&mut plan, i, &r, &w, j);
            trace.push(Step { sources, targets, lift: Lift::NullSource });
            i += 1;
            r = Rational::one();
            a_cur = pi.a[i].clone();
            u_cur = pi.u[i].clone();
            continue;
        }
        if v_cur.is_zero() {
            if !b_cur.is_zero() {
                return Err(broken("target filled with leftover mass"));
            }
            trace.push(Step { sources, targets, lift: Lift::NullTarget });
            j += 1;
            w.iter_mut().for_each(|x| x.set_zero());
            w[j] = Rational::one();
            b_cur = pi.b[j].clone();
            v_cur = pi.v[j].clone();
            continue;
        }
        let (b_next, v_next) = (&pi.b[j + 1], &pi.v[j + 1]);
        if &b_cur * v_next == b_next * &v_cur {
            let gamma = &v_cur / (&v_cur + v_next);
            let rest = Rational::one() - &gamma;
            for x in &mut w[..=j] {
                *x *= &gamma;
            }
            j += 1;
            w[j] = rest;
            b_cur += b_next;
            v_cur += v_next;
            trace.push(Step { sources, targets, lift: Lift::Merge { gamma } });
            continue;
        }
        if b_cur.is_negative() || v_cur.is_negative() {
            return Err(broken("negative residual target"));
        }
        let lambda = pour_fraction(&a_cur, &u_cur, &b_cur, &v_cur, b_next, v_next)?;
        let keep = Rational::one() - &lambda;
        add_row(&mut plan, i, &(&r * &lambda), &w, j);
        b_cur -= &lambda * &a_cur;
        v_cur -= &lambda * &u_cur;
        a_cur *= &keep;
        u_cur *= &keep;
        r *= &keep;
        if b_cur.is_negative() || v_cur.is_negative() {
            return Err(broken("pour overfilled the first target"));
        }
        trace.push(Step { sources, targets, lift: Lift::Pour { lambda } });
    }
    let structure = structure(&plan, &trace);
    Ok(FluidSolution { plan, trace, structure })
}

/// Exact check of row sums, bounds, and the volume and mass balances.
pub fn verify_plan(pi: &FluidProblem, plan: &TransferPlan) -> bool {
    let (n, k) = (pi.n(), pi.k());
    if plan.rows() != n || plan.x.iter().any(|r| r.len() != k) {
        return false;
    }
    let one = Rational::one();
    for row in &plan.x {
        if row.iter().any(|x| x.is_negative() || *x > one) || row.iter().sum::<Rational>() != one {
            return false;
        }
    }
    (0..k).all(|j| {
        let vol: Rational = (0..n).map(|i| &pi.u[i] * &plan.x[i][j]).sum();
        let mass: Rational = (0..n).map(|i| &pi.a[i] * &plan.x[i][j]).sum();
        vol == pi.v[j] && mass == pi.b[j]
    })
}

/// First positive row `I_j` of every column (1-based, `n+1` if none) with
/// the sentinel `I_{k+1} = n+1`, and the merge coefficients `gamma_0..gamma_{k-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolutionStructure {
    pub first_rows: Vec<usize>,
    #[serde(with = "serde_rational_vec")]
    pub gamma: Vec<Rational>,
}

impl SolutionStructure {
    /// Predicted entry for a row strictly between `I_l` and `I_{l+1}`.
    pub fn predicted_entry(&self, l: usize, j: usize) -> Rational {
        if j > l {
            return Rational::zero();
        }
        let mut x = Rational::one() - &self.gamma[j - 1];
        for g in &self.gamma[j..l] {
            x *= g;
        }
        x
    }
}

/// Reads `I` off the plan and `gamma` off the trace. `gamma_j` is taken from
/// the reduction that brings the subproblem down to `k-j` targets (a merge,
/// or a null target, which contributes 0).
pub fn structure(plan: &TransferPlan, trace: &[Step]) -> SolutionStructure {
    let (n, k) = (plan.rows(), plan.cols());
    let mut first_rows: Vec<usize> = (0..k)
        .map(|j| (0..n).find(|&i| plan.x[i][j].is_positive()).map_or(n + 1, |i| i + 1))
        .collect();
    first_rows.push(n + 1);
    let mut gamma = vec![Rational::zero()];
    for step in trace {
        match &step.lift {
            Lift::Merge { gamma: g } => gamma.push(g.clone()),
            Lift::NullTarget => gamma.push(Rational::zero()),
            _ => {}
        }
    }
    gamma.resize(k.max(1), Rational::zero());
    SolutionStructure { first_rows, gamma }
}

/// Margins of the four robustness conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustnessReport {
    pub epsilon: Rational,
    pub total_mass: Rational,
    pub total_volume: Rational,
    /// `slack > eps*M` (vacuous for `k = 1`).
    pub slack_margin: bool,
    /// `b_j > eps*M` for every target.
    pub mass_margin: bool,
    /// `v_j > eps*V` for every target.
    pub volume_margin: bool,
    /// `M/V > eps*a_1/u_1`; false when the first source is empty.
    pub density_margin: bool,
}

impl RobustnessReport {
    pub fn is_robust(&self) -> bool {
        self.slack_margin && self.mass_margin && self.volume_margin && self.density_margin
    }
}

pub fn is_robust(pi: &FluidProblem, eps: &Rational) -> RobustnessReport {
    let m: Rational = pi.a.iter().sum();
    let vol: Rational = pi.v.iter().sum();
    let em = eps * &m;
    let ev = eps * &vol;
    let slack_margin = pi.frac_slack().is_none_or(|(s, _)| s > em);
    let mass_margin = pi.b.iter().all(|b| *b > em);
    let volume_margin = pi.v.iter().all(|v| *v > ev);
    let density_margin = !pi.u[0].is_zero() && &m * &pi.u[0] > eps * &pi.a[0] * &vol;
    RobustnessReport {
        epsilon: eps.clone(),
        total_mass: m,
        total_volume: vol,
        slack_margin,
        mass_margin,
        volume_margin,
        density_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_espp;
    use crate::rational::{int, rat};

    fn espp(n: i64, k: i64, parts: &[u64]) -> FluidProblem {
        let inst = validate_espp(&BigInt::from(n), &BigInt::from(k), parts).unwrap();
        FluidProblem::from_espp(&inst).unwrap()
    }

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn from_espp_substitutes() {
        let p = espp(3, 2, &[1, 2]);
        assert_eq!(p.a, ints(&[3, 2, 1]));
        assert_eq!(p.u, ints(&[1, 1, 1]));
        assert_eq!(p.b, ints(&[3, 3]));
        assert_eq!(p.v, ints(&[1, 2]));
        assert_eq!(p.frac_slack(), Some((int(0), 1)));
        assert_eq!(p.frac_slack_at(2), int(0));
    }

    #[test]
    fn forced_plan_for_three_two() {
        let p = espp(3, 2, &[1, 2]);
        let sol = solve(&p).unwrap();
        let expect = vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[0, 1])];
        assert_eq!(sol.plan.x, expect);
        assert_eq!(sol.structure.first_rows, vec![1, 2, 4]);
        assert_eq!(solve_recursive(&p).unwrap(), sol);
    }

    #[test]
    fn four_two_plan_verifies() {
        let p = espp(4, 2, &[2, 2]);
        let sol = solve(&p).unwrap();
        assert!(verify_plan(&p, &sol.plan));
        assert_eq!(solve_recursive(&p).unwrap().plan, sol.plan);
    }

    #[test]
    fn single_target_is_all_ones() {
        let p = FluidProblem::new(ints(&[5, 2, 0]), ints(&[2, 1, 1]), ints(&[7]), ints(&[4])).unwrap();
        let sol = solve(&p).unwrap();
        assert_eq!(sol.plan.x, vec![ints(&[1]); 3]);
        assert_eq!(sol.structure.first_rows, vec![1, 4]);
        assert_eq!(sol.structure.gamma, vec![int(0)]);
    }

    #[test]
    fn merge_and_pour_examples() {
        let p = FluidProblem::new(ints(&[3]), ints(&[3]), ints(&[1, 2]), ints(&[1, 2])).unwrap();
        let (child, gamma) = merge_targets(&p).unwrap();
        assert_eq!(gamma, rat(1, 3));
        assert_eq!(child.b, ints(&[3]));
        let q = espp(3, 2, &[1, 2]);
        let (_, lambda) = pour(&q).unwrap();
        assert_eq!(lambda, int(1));
        assert!(matches!(reduce_null_source(&q), Err(FluidError::GuardNotSatisfied(_))));
    }

    #[test]
    fn rejects_negative_slack() {
        // (4,2,[1,3]) violates the slack condition.
        let p = FluidProblem::new(ints(&[4, 3, 2, 1]), ints(&[1; 4]), ints(&[5, 5]), ints(&[1, 3])).unwrap();
        assert!(matches!(solve(&p), Err(FluidError::SlackViolated { index: 1, .. })));
    }

    #[test]
    fn validation_messages() {
        assert!(FluidProblem::new(ints(&[1, 2]), ints(&[1, 1]), ints(&[3]), ints(&[2])).is_err());
        assert!(FluidProblem::new(ints(&[1, 1]), ints(&[1, 0]), ints(&[2]), ints(&[1])).is_err());
        assert!(FluidProblem::new(ints(&[0, 2]), ints(&[0, 1]), ints(&[2]), ints(&[1])).is_ok());
        assert!(FluidProblem::new(ints(&[2]), ints(&[1]), ints(&[3]), ints(&[1])).is_err());
    }

    #[test]
    fn perturbed_plan_fails() {
        let p = espp(4, 2, &[2, 2]);
        let mut plan = solve(&p).unwrap().plan;
        plan.x[0][0] += rat(1, 1_000_000);
        assert!(!verify_plan(&p, &plan));
    }

    #[test]
    fn robustness_edges() {
        let unit = espp(5, 5, &[1; 5]);
        assert!(!is_robust(&unit, &rat(1, 5)).volume_margin);
        assert!(is_robust(&unit, &rat(1, 6)).volume_margin);
        let zero = is_robust(&espp(4, 2, &[2, 2]), &int(0));
        assert!(zero.is_robust());
        // slack 0 fails the strict slack margin even at eps = 0.
        assert!(!is_robust(&espp(3, 2, &[1, 2]), &int(0)).slack_margin);
    }
}
