//! Randomized rounding of the fluid solution for linear partition families.
//!
//! Every element `n-i+1` is assigned to set `j` with probability `x_{i,j}`
//! taken from the fluid plan. Two repair loops follow: one fixes the set
//! sizes by moving single elements, the other fixes the sums by swapping
//! pairs between the heaviest and the lightest set.
//!
//! Sampling uses `ChaCha8Rng` seeded with `seed_from_u64(seed + attempt)`.
//! Each element consumes one `next_u64` draw `r`, which selects the first
//! `j` with `r / 2^64 < x_{i,1} + ... + x_{i,j}`; the comparison is exact.

use crate::composition::Composition;
use crate::error::CoreError;
use crate::fluid::{solve, FluidError, FluidProblem};
use crate::instance::{admits_target, EqualSumPartition, EsppInstance};
use crate::rational::Rational;
use crate::slack::{check_alphas, slack_alphas};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Default number of retries after a failed attempt.
pub const DEFAULT_RETRIES: u32 = 8;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("the family needs positive slack, got {0}")]
    NonPositiveSlack(String),
    #[error("n = {n} is not admissible for this family")]
    NotAdmissible { n: u64 },
}

/// `[alpha_1, ..., alpha_k]`, non-descending, summing to one, with positive slack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFamily {
    alphas: Vec<Rational>,
    slack_value: Rational,
}

impl LinearFamily {
    pub fn new(alphas: Vec<Rational>) -> Result<Self, RoundingError> {
        check_alphas(&alphas)?;
        // With k = 1 there is no index to check; the single set is the whole range.
        let slack_value = slack_alphas(&alphas)?.unwrap_or_else(Rational::one);
        if !slack_value.is_positive() {
            return Err(RoundingError::NonPositiveSlack(crate::rational::format_rational(&slack_value)));
        }
        Ok(Self { alphas, slack_value })
    }

    pub fn alphas(&self) -> &[Rational] {
        &self.alphas
    }

    pub fn slack_value(&self) -> &Rational {
        &self.slack_value
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    /// Part sizes `alpha_j n`, if all are integers.
    pub fn sizes(&self, n: u64) -> Option<Vec<u64>> {
        let nn = Rational::from_integer(BigInt::from(n));
        self.alphas
            .iter()
            .map(|a| {
                let x = a * &nn;
                if x.is_integer() {
                    x.to_integer().to_u64()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_admissible(&self, n: u64) -> bool {
        admits_target(n, self.k() as u64) && self.sizes(n).is_some()
    }
}

/// All `n` in the range for which the instance is well defined.
pub fn admissible_n(family: &LinearFamily, range: std::ops::RangeInclusive<u64>) -> Vec<u64> {
    range.filter(|&n| family.is_admissible(n)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Solved,
    Failure,
}

/// One attempt, or the last attempt of a retried run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundingRun {
    pub seed: u64,
    pub attempts: u32,
    pub iter1: u64,
    pub iter2: u64,
    pub outcome: Outcome,
    pub partition: Option<EqualSumPartition>,
    /// Set sizes right after sampling.
    pub sampled_sizes: Vec<u64>,
    /// `S(Q_j) - s` when the sum repair starts.
    pub initial_deviations: Vec<i64>,
    /// The difference `z' - z''` of every swap, in order.
    pub swap_differences: Vec<u64>,
    /// `S(Q_j) - s` for every set, before the sum repair and after every swap.
    pub deviation_trace: Vec<Vec<i64>>,
}

impl RoundingRun {
    /// `1/2 sum_j | |Q_j| - alpha_j n |` over the sampled sizes.
    pub fn expected_iter1(&self, sizes: &[u64]) -> u64 {
        let total: u64 = self.sampled_sizes.iter().zip(sizes).map(|(&a, &b)| a.abs_diff(b)).sum();
        total / 2
    }

    /// `ceil(kZ/(2D)) + 2k ceil(log2 D)`, with `Z` the largest initial deviation
    /// and `D` the largest swap difference. `None` if no swap happened.
    pub fn iter2_bound(&self) -> Option<u64> {
        let d = *self.swap_differences.iter().max()?;
        let k = self.initial_deviations.len() as u64;
        let z = self.initial_deviations.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        let log = if d <= 1 { 0 } else { 64 - (d - 1).leading_zeros() as u64 };
        Some((k * z).div_ceil(2 * d) + 2 * k * log)
    }
}

/// The fluid plan turned into sampling thresholds, shared by all attempts for one `n`.
#[derive(Clone, Debug)]
pub struct LinearSetup {
    pub n: u64,
    pub s: u64,
    pub sizes: Vec<u64>,
    pub instance: EsppInstance,
    /// `thresholds[i][j] = ceil(2^64 (x_{i,1} + ... + x_{i,j+1}))`, row `i` for element `n-i`.
    pub thresholds: Vec<Vec<u128>>,
    /// The plan entries, row `i` for element `n-i`.
    pub probabilities: Vec<Vec<Rational>>,
}

impl LinearSetup {
    pub fn new(family: &LinearFamily, n: u64) -> Result<Self, RoundingError> {
        if !family.is_admissible(n) {
            return Err(RoundingError::NotAdmissible { n });
        }
        let sizes = family.sizes(n).expect("admissible");
        let comp = Composition::from_parts(&sizes)?;
        let instance = EsppInstance::new(BigInt::from(n), BigInt::from(family.k()), comp)?;
        let s = instance.target().to_u64().expect("target fits in u64");
        let problem = FluidProblem::from_espp(&instance)?;
        let plan = solve(&problem)?.plan;
        let scale = Rational::from_integer(BigInt::one() << 64u32);
        let thresholds = plan
            .x
            .iter()
            .map(|row| {
                let mut acc = Rational::zero();
                row.iter()
                    .map(|x| {
                        acc += x;
                        let t = (&acc * &scale).ceil().to_integer();
                        t.to_u128().expect("threshold at most 2^64")
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n, s, sizes, instance, thresholds, probabilities: plan.x })
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Draws `X_i` for every element; returns the set index per row.
    pub fn sample(&self, rng: &mut impl RngCore) -> Vec<usize> {
        self.thresholds
            .iter()
            .map(|row| {
                let r = rng.next_u64() as u128;
                row.iter().position(|&t| r < t).unwrap_or(row.len() - 1)
            })
            .collect()
    }

    /// A single attempt with the given seed.
    pub fn attempt(&self, seed: u64) -> RoundingRun {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = self.sample(&mut rng);
        let mut q: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); self.k()];
        for (i, &j) in draws.iter().enumerate() {
            q[j].insert(self.n - i as u64);
        }
        let sampled_sizes = q.iter().map(|x| x.len() as u64).collect();
        let iter1 = size_repair(&mut q, &self.sizes, self.s);
        let initial_deviations = deviations(&q, self.s);
        let repair = sum_repair(&mut q, self.s);
        let outcome = if repair.solved { Outcome::Solved } else { Outcome::Failure };
        let partition = repair
            .solved
            .then(|| EqualSumPartition { sets: q.iter().map(|x| x.iter().copied().collect()).collect() });
        RoundingRun {
            seed,
            attempts: 1,
            iter1,
            iter2: repair.iterations,
            outcome,
            partition,
            sampled_sizes,
            initial_deviations,
            swap_differences: repair.differences,
            deviation_trace: repair.deviations,
        }
    }

    /// Attempts with seeds `seed, seed + 1, ...` until one succeeds.
    pub fn run(&self, seed: u64, max_retries: u32) -> RoundingRun {
        let mut last = None;
        for t in 0..=max_retries {
            let mut r = self.attempt(seed.wrapping_add(t as u64));
            r.attempts = t + 1;
            if r.outcome == Outcome::Solved {
                return r;
            }
            last = Some(r);
        }
        last.expect("at least one attempt")
    }
}

/// Solves `(n, k, [alpha_1 n, ..., alpha_k n])`. A run that exhausts its
/// retries is reported with outcome `Failure`.
pub fn solve_linear(family: &LinearFamily, n: u64, seed: u64, max_retries: u32) -> Result<RoundingRun, RoundingError> {
    Ok(LinearSetup::new(family, n)?.run(seed, max_retries))
}

fn sum_of(set: &BTreeSet<u64>) -> i64 {
    set.iter().map(|&x| x as i64).sum()
}

fn deviations(q: &[BTreeSet<u64>], s: u64) -> Vec<i64> {
    q.iter().map(|x| sum_of(x) - s as i64).collect()
}

/// Moves single elements from over-full to under-full sets until every
/// `|Q_j|` equals its target; returns the number of moves. The source is the
/// set with the largest overflow, the destination the one with the largest
/// deficit, and the moved element is the one leaving the source sum closest
/// to `s` (smallest on ties).
pub fn size_repair(q: &mut [BTreeSet<u64>], targets: &[u64], s: u64) -> u64 {
    let mut moves = 0;
    loop {
        let over = (0..q.len()).filter(|&j| q[j].len() as u64 > targets[j]).max_by_key(|&j| {
            (q[j].len() as u64 - targets[j], std::cmp::Reverse(j))
        });
        let under = (0..q.len()).filter(|&j| (q[j].len() as u64) < targets[j]).max_by_key(|&j| {
            (targets[j] - q[j].len() as u64, std::cmp::Reverse(j))
        });
        let (Some(jo), Some(ju)) = (over, under) else {
            return moves;
        };
        let excess = sum_of(&q[jo]) - s as i64;
        let z = *q[jo]
            .iter()
            .min_by_key(|&&z| ((excess - z as i64).unsigned_abs(), z))
            .expect("over-full set is non-empty");
        q[jo].remove(&z);
        q[ju].insert(z);
        moves += 1;
    }
}

/// Result of the pairwise swap loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumRepair {
    pub solved: bool,
    pub iterations: u64,
    pub differences: Vec<u64>,
    pub deviations: Vec<Vec<i64>>,
}

/// Swaps `z'` from the heaviest set with `z''` from the lightest, choosing
/// the largest `z' - z''` within `(0, Delta]` (then the largest `z'`, then
/// the largest `z''`). Fails when no such pair exists.
pub fn sum_repair(q: &mut [BTreeSet<u64>], s: u64) -> SumRepair {
    let s = s as i64;
    let mut out = SumRepair { solved: false, iterations: 0, differences: vec![], deviations: vec![] };
    let mut sums: Vec<i64> = q.iter().map(sum_of).collect();
    loop {
        out.deviations.push(sums.iter().map(|&x| x - s).collect());
        if sums.iter().all(|&x| x == s) {
            out.solved = true;
            return out;
        }
        let jp = (0..q.len()).max_by_key(|&j| (sums[j], std::cmp::Reverse(j))).unwrap();
        let jm = (0..q.len()).min_by_key(|&j| (sums[j], j)).unwrap();
        let delta = (sums[jp] - s).min(s - sums[jm]);
        let Some((diff, zp, zm)) = best_pair(&q[jp], &q[jm], delta) else {
            return out;
        };
        q[jp].remove(&zp);
        q[jm].remove(&zm);
        q[jp].insert(zm);
        q[jm].insert(zp);
        sums[jp] -= diff as i64;
        sums[jm] += diff as i64;
        out.iterations += 1;
        out.differences.push(diff);
    }
}

fn best_pair(from: &BTreeSet<u64>, to: &BTreeSet<u64>, delta: i64) -> Option<(u64, u64, u64)> {
    if delta <= 0 {
        return None;
    }
    let delta = delta as u64;
    let mut best: Option<(u64, u64, u64)> = None;
    for &zp in from.iter().rev() {
        let lo = zp.saturating_sub(delta);
        if let Some(&zm) = to.range(lo..zp).next() {
            let cand = (zp - zm, zp, zm);
            if best.is_none_or(|b| cand > b) {
                best = Some(cand);
            }
            if zp - zm == delta {
                // Later z' are smaller, so nothing can beat this pair.
                break;
            }
        }
    }
    best
}

/// `R_{j',j'',D} = |{(z', z'') in Q_{j'} x Q_{j''} : z' - z'' = D}|` for
/// `1 <= D <= max_delta`, keyed by `(j', j'', D)` with `j' != j''`.
pub fn pair_counts(q: &[BTreeSet<u64>], max_delta: u64) -> BTreeMap<(usize, usize, u64), u64> {
    let mut out = BTreeMap::new();
    for (a, qa) in q.iter().enumerate() {
        for (b, qb) in q.iter().enumerate() {
            if a == b {
                continue;
            }
            for dd in 1..=max_delta {
                let c = qa.iter().filter(|&&z| z > dd && qb.contains(&(z - dd))).count() as u64;
                out.insert((a, b, dd), c);
            }
        }
    }
    out
}

/// Empirical marginals of `X_i` over `samples` draws, row-major counts.
pub fn empirical_marginals(setup: &LinearSetup, seed: u64, samples: u64) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; setup.k()]; setup.thresholds.len()];
    for _ in 0..samples {
        for (i, j) in setup.sample(&mut rng).into_iter().enumerate() {
            counts[i][j] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::verify_partition;
    use crate::rational::rat;

    fn fam(a: &[(i64, i64)]) -> LinearFamily {
        LinearFamily::new(a.iter().map(|&(p, q)| rat(p, q)).collect()).unwrap()
    }

    fn set(xs: &[u64]) -> BTreeSet<u64> {
        xs.iter().copied().collect()
    }

    #[test]
    fn admissible() {
        let f = fam(&[(1, 4), (1, 4), (1, 2)]);
        assert!(admissible_n(&f, 1..=20).contains(&12));
        assert_eq!(admissible_n(&fam(&[(1, 2), (1, 2)]), 1..=10), vec![4, 8]);
        assert!(admissible_n(&f, 1..=3).is_empty());
    }

    #[test]
    fn rejects_non_positive_slack() {
        assert!(matches!(
            LinearFamily::new(vec![rat(1, 6), rat(1, 6), rat(2, 3)]),
            Err(RoundingError::NonPositiveSlack(_))
        ));
    }

    #[test]
    fn small_examples() {
        let f = fam(&[(1, 2), (1, 2)]);
        let run = solve_linear(&f, 4, 7, DEFAULT_RETRIES).unwrap();
        assert_eq!(run.outcome, Outcome::Solved);
        let mut sets = run.partition.clone().unwrap().sets;
        sets.sort();
        assert_eq!(sets, vec![vec![1, 4], vec![2, 3]]);

        let f = fam(&[(1, 4), (1, 4), (1, 2)]);
        for seed in 0..20 {
            let setup = LinearSetup::new(&f, 12).unwrap();
            let run = setup.run(seed, DEFAULT_RETRIES);
            assert_eq!(run.outcome, Outcome::Solved);
            assert!(verify_partition(&setup.instance, run.partition.as_ref().unwrap()));
        }

        let run = solve_linear(&fam(&[(1, 1)]), 9, 0, 0).unwrap();
        assert_eq!((run.iter1, run.iter2), (0, 0));
        assert_eq!(run.partition.unwrap().sets, vec![(1..=9).collect::<Vec<_>>()]);
    }

    #[test]
    fn size_repair_counts() {
        let mut q = vec![set(&[1, 2]), set(&[3, 4])];
        assert_eq!(size_repair(&mut q, &[2, 2], 5), 0);
        let mut q = vec![set(&[1, 2, 3]), set(&[4])];
        assert_eq!(size_repair(&mut q, &[2, 2], 5), 1);
        assert_eq!(q[0].len(), 2);
        let mut q = vec![set(&[1, 2, 3, 4, 5, 6]), set(&[]), set(&[7, 8])];
        assert_eq!(size_repair(&mut q, &[2, 3, 3], 12), 4);
    }

    #[test]
    fn sum_repair_cases() {
        let mut q = vec![set(&[1, 4]), set(&[2, 3])];
        assert_eq!(sum_repair(&mut q, 5).iterations, 0);
        let mut q = vec![set(&[2, 5]), set(&[3, 6]), set(&[1, 4])];
        let r = sum_repair(&mut q, 7);
        assert!(r.solved);
        assert_eq!(r.iterations, 1);
        let mut q = vec![set(&[1]), set(&[2])];
        let r = sum_repair(&mut q, 3);
        assert!(!r.solved);
    }

    #[test]
    fn pair_count_examples() {
        let q = vec![set(&[2, 4]), set(&[1, 3])];
        assert_eq!(pair_counts(&q, 1)[&(0, 1, 1)], 2);
        let q = vec![set(&[10, 11]), set(&[1, 2])];
        assert_eq!(pair_counts(&q, 3)[&(0, 1, 3)], 0);
    }
}
