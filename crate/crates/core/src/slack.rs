//! Target sums and the slack functionals.
//!
//! `slack_j(P) = sum_{i=1}^{P_j} (n-i+1) - j*s` where `P_j` is the j-th
//! prefix sum. All evaluations use the closed form of the arithmetic series.

use crate::composition::Composition;
use crate::error::CoreError;
use crate::rational::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `n(n+1)/2`.
pub fn triangle(n: &BigInt) -> BigInt {
    n * (n + 1) / 2
}

/// `s^{n,k} = n(n+1)/(2k)`.
pub fn target_sum(n: &BigInt, k: &BigInt) -> Result<BigInt, CoreError> {
    if !n.is_positive() {
        return Err(CoreError::NonPositive { what: "n", value: n.clone() });
    }
    if !k.is_positive() {
        return Err(CoreError::NonPositive { what: "k", value: k.clone() });
    }
    let t = triangle(n);
    let (q, r) = t.div_rem(k);
    if !r.is_zero() {
        return Err(CoreError::NonIntegralTarget { n: n.clone(), k: k.clone(), triangle: t });
    }
    Ok(q)
}

/// Sum of the `count` largest elements of `{1..n}`, i.e. `count(2n-count+1)/2`.
pub fn top_sum(n: &BigInt, count: &BigInt) -> BigInt {
    count * (2 * n - count + 1) / 2
}

/// Which indices the minimum ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlackRange {
    /// A full composition: `1 <= j <= k-1` (`slack_k` is identically 0).
    Complete,
    /// An incomplete prefix of length `l`: `1 <= j <= l`.
    Prefix,
}

/// A slack minimum together with the smallest index attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlackValue {
    pub value: BigInt,
    pub index: BigInt,
}

fn max_index(comp: &Composition, range: SlackRange) -> BigInt {
    match range {
        SlackRange::Complete => comp.len() - 1,
        SlackRange::Prefix => comp.len(),
    }
}

fn slack_from_prefix(n: &BigInt, s: &BigInt, j: &BigInt, pj: &BigInt) -> BigInt {
    top_sum(n, pj) - j * s
}

/// `slack_j` for `j` in the admissible range of `range`.
pub fn slack_at(
    n: &BigInt,
    k: &BigInt,
    comp: &Composition,
    j: &BigInt,
    range: SlackRange,
) -> Result<BigInt, CoreError> {
    let s = target_sum(n, k)?;
    let max = max_index(comp, range);
    if !j.is_positive() || *j > max {
        return Err(CoreError::IndexOutOfRange { index: j.clone(), max });
    }
    let pj = comp.prefix_sum(j).expect("index checked against length");
    Ok(slack_from_prefix(n, &s, j, &pj))
}

/// Indices where the minimum can occur.
///
/// Inside a block of equal parts the increments `slack_j - slack_{j-1}`
/// strictly decrease, so `slack_j` is strictly concave there and its minimum
/// over a block sits at one of the block's two boundary indices. For blocks
/// after the first, the left boundary is the previous block end. For the
/// first block it is `j = 1`, and for a complete composition the last block is
/// cut off at `k-1`. The candidates are therefore the block ends inside the
/// range plus `1` and, for complete compositions, `k-1`.
fn critical_indices(comp: &Composition, range: SlackRange) -> Vec<(BigInt, BigInt)> {
    let max = max_index(comp, range);
    let mut out: Vec<(BigInt, BigInt)> = Vec::new();
    if max < BigInt::one() {
        return out;
    }
    let one = BigInt::one();
    out.push((one.clone(), BigInt::from(comp.first().expect("nonempty"))));
    for (j, pj) in comp.block_ends() {
        if j > max {
            break;
        }
        if j > one {
            out.push((j, pj));
        }
    }
    if range == SlackRange::Complete && max > one && out.last().map(|x| &x.0) != Some(&max) {
        let pj = comp.prefix_sum(&max).expect("in range");
        out.push((max, pj));
    }
    out
}

fn min_over(
    n: &BigInt,
    s: &BigInt,
    points: impl IntoIterator<Item = (BigInt, BigInt)>,
) -> Option<SlackValue> {
    let mut best: Option<SlackValue> = None;
    for (j, pj) in points {
        let value = slack_from_prefix(n, s, &j, &pj);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(SlackValue { value, index: j });
        }
    }
    best
}

/// Minimum of `slack_j` over the range; `None` when the range is empty
/// (`k = 1` for complete compositions), in which case the condition holds
/// vacuously.
///
/// Only the critical indices are evaluated. In builds with debug assertions
/// the result is checked against the naive minimum for small compositions.
pub fn slack(
    n: &BigInt,
    k: &BigInt,
    comp: &Composition,
    range: SlackRange,
) -> Result<Option<SlackValue>, CoreError> {
    let s = target_sum(n, k)?;
    let fast = min_over(n, &s, critical_indices(comp, range));
    if cfg!(debug_assertions) && comp.len() <= BigInt::from(4096) {
        debug_assert_eq!(fast, slack_naive(n, k, comp, range)?, "critical-index slack mismatch");
    }
    Ok(fast)
}

/// Minimum over block-end indices only.
///
/// This decides the sign of the slack exactly (a negative value anywhere
/// forces a negative value at some block end) but can overstate its value
/// when the first block's minimum sits at `j = 1`, or the last block is cut
/// off at `k-1`.
pub fn slack_block_ends(
    n: &BigInt,
    k: &BigInt,
    comp: &Composition,
    range: SlackRange,
) -> Result<Option<SlackValue>, CoreError> {
    let s = target_sum(n, k)?;
    let max = max_index(comp, range);
    Ok(min_over(n, &s, comp.block_ends().into_iter().filter(|(j, _)| *j <= max)))
}

/// Reference minimum over every index. Requires an expandable composition.
pub fn slack_naive(
    n: &BigInt,
    k: &BigInt,
    comp: &Composition,
    range: SlackRange,
) -> Result<Option<SlackValue>, CoreError> {
    let s = target_sum(n, k)?;
    let parts = comp
        .parts()
        .ok_or_else(|| CoreError::TooLarge(format!("composition with {} parts", comp.len())))?;
    let max = max_index(comp, range).to_usize().unwrap_or(0);
    let mut pj = BigInt::zero();
    let points = parts.iter().take(max).enumerate().map(|(i, &p)| {
        pj += p;
        (BigInt::from(i + 1), pj.clone())
    });
    Ok(min_over(n, &s, points.collect::<Vec<_>>()))
}

/// Validates a vector of part proportions: positive, non-descending, sum 1.
pub fn check_alphas(alphas: &[Rational]) -> Result<(), CoreError> {
    if alphas.is_empty() {
        return Err(CoreError::InvalidAlphaVector("empty".into()));
    }
    for (i, a) in alphas.iter().enumerate() {
        if !a.is_positive() {
            return Err(CoreError::InvalidAlphaVector(format!("alpha_{} = {} is not positive", i + 1, a)));
        }
        if i > 0 && *a < alphas[i - 1] {
            return Err(CoreError::InvalidAlphaVector(format!(
                "alpha_{} = {} is smaller than alpha_{} = {}",
                i + 1,
                a,
                i,
                alphas[i - 1]
            )));
        }
    }
    let total: Rational = alphas.iter().sum();
    if !total.is_one() {
        return Err(CoreError::InvalidAlphaVector(format!("alphas sum to {total}, not 1")));
    }
    Ok(())
}

/// `slack_j(A) = A_j(1 - A_j/2) - j/(2k)` with `A_j` the j-th prefix sum.
pub fn slack_alphas_at(alphas: &[Rational], j: usize) -> Rational {
    let k = alphas.len() as i64;
    let aj: Rational = alphas[..j].iter().sum();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    &aj * (Rational::one() - &aj * &half) - Rational::new(BigInt::from(j), BigInt::from(2 * k))
}

/// `min_{1 <= j < k} slack_j(A)`; `None` for `k = 1`.
pub fn slack_alphas(alphas: &[Rational]) -> Result<Option<Rational>, CoreError> {
    check_alphas(alphas)?;
    Ok((1..alphas.len()).map(|j| slack_alphas_at(alphas, j)).min())
}
