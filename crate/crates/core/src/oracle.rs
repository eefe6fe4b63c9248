//! Exact backtracking solver for small instances.
//!
//! Elements are placed from `n` down to `1`. Each part keeps its remaining
//! capacity `c` and residual sum `t`; since all of `1..x` are still free when
//! `x` is placed, every part must satisfy `c(c+1)/2 <= t <= c(2x-c+1)/2`.
//! Parts in identical states are interchangeable, and a part with one free
//! slot demands one specific element, which two parts cannot share.

use crate::instance::{admits_target, EqualSumPartition, EsppInstance};
use crate::slack::top_sum;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

/// Default node budget.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    Bounds,
    Symmetry,
    ForcedPair,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub prunes_by_rule: BTreeMap<PruneRule, u64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Solution { partition: EqualSumPartition },
    Unsolvable,
    BudgetExceeded,
}

impl Verdict {
    /// `Some(true)` for a solution, `Some(false)` for a proof of unsolvability.
    pub fn decided(&self) -> Option<bool> {
        match self {
            Verdict::Solution { .. } => Some(true),
            Verdict::Unsolvable => Some(false),
            Verdict::BudgetExceeded => None,
        }
    }
}

struct Search {
    cap: Vec<u64>,
    rest: Vec<u64>,
    owner: Vec<usize>,
    budget: u64,
    stats: SearchStats,
    out_of_budget: bool,
}

fn min_sum(c: u64) -> u64 {
    c * (c + 1) / 2
}

/// Sum of the `c` largest of `1..=m`.
fn max_sum(c: u64, m: u64) -> u64 {
    if c > m {
        return 0;
    }
    c * (2 * m - c + 1) / 2
}

impl Search {
    fn prune(&mut self, rule: PruneRule) {
        *self.stats.prunes_by_rule.entry(rule).or_default() += 1;
    }

    /// Every part can still be finished from `1..=m`, and no two single-slot
    /// parts want the same element.
    fn feasible(&mut self, m: u64) -> bool {
        let mut wanted: Vec<u64> = Vec::new();
        for j in 0..self.cap.len() {
            let (c, t) = (self.cap[j], self.rest[j]);
            if c > m || t < min_sum(c) || t > max_sum(c, m) {
                self.prune(PruneRule::Bounds);
                return false;
            }
            if c == 1 {
                wanted.push(t);
            }
        }
        wanted.sort_unstable();
        if wanted.windows(2).any(|w| w[0] == w[1]) {
            self.prune(PruneRule::ForcedPair);
            return false;
        }
        true
    }

    fn dfs(&mut self, x: u64) -> bool {
        if x == 0 {
            return true;
        }
        if self.stats.nodes_expanded >= self.budget {
            self.out_of_budget = true;
            return false;
        }
        self.stats.nodes_expanded += 1;
        // A single-slot part asking for x must take it.
        let forced = (0..self.cap.len()).find(|&j| self.cap[j] == 1 && self.rest[j] == x);
        let candidates: Vec<usize> = match forced {
            Some(j) => vec![j],
            None => (0..self.cap.len()).filter(|&j| self.cap[j] > 0 && self.rest[j] >= x).collect(),
        };
        for (pos, &j) in candidates.iter().enumerate() {
            let state = (self.cap[j], self.rest[j]);
            if candidates[..pos].iter().any(|&i| (self.cap[i], self.rest[i]) == state) {
                self.prune(PruneRule::Symmetry);
                continue;
            }
            self.cap[j] -= 1;
            self.rest[j] -= x;
            if self.feasible(x - 1) {
                self.owner[x as usize] = j;
                if self.dfs(x - 1) {
                    return true;
                }
            }
            self.cap[j] += 1;
            self.rest[j] += x;
            if self.out_of_budget {
                return false;
            }
        }
        false
    }
}

/// Decides the instance within `budget` expanded nodes.
pub fn brute_solve(inst: &EsppInstance, budget: u64) -> (Verdict, SearchStats) {
    let start = Instant::now();
    let (n, s, parts) = match inst.small() {
        Ok(x) => x,
        Err(_) => return (Verdict::BudgetExceeded, SearchStats::default()),
    };
    let k = parts.len();
    let mut search = Search {
        cap: parts.iter().map(|&p| p as u64).collect(),
        rest: vec![s; k],
        owner: vec![usize::MAX; n + 1],
        budget,
        stats: SearchStats::default(),
        out_of_budget: false,
    };
    let found = search.feasible(n as u64) && search.dfs(n as u64);
    search.stats.elapsed = start.elapsed();
    let verdict = if found {
        let mut sets = vec![Vec::new(); k];
        for x in 1..=n {
            sets[search.owner[x]].push(x as u64);
        }
        Verdict::Solution { partition: EqualSumPartition { sets } }
    } else if search.out_of_budget {
        Verdict::BudgetExceeded
    } else {
        Verdict::Unsolvable
    };
    (verdict, search.stats)
}

/// One row of the solvability table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub n: u64,
    pub k: u64,
    pub parts: Vec<u64>,
    /// `None` when the budget ran out.
    pub solvable: Option<bool>,
}

/// All valid instances `(n, k, parts)` with `n <= n_max` and `k <= k_max`:
/// non-descending parts, `k | n(n+1)/2` and non-negative slack.
pub fn valid_instances(n_max: u64, k_max: u64) -> Vec<(u64, u64, Vec<u64>)> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for k in 1..=k_max.min(n) {
            if !admits_target(n, k) {
                continue;
            }
            let s = n * (n + 1) / 2 / k;
            let mut parts = Vec::new();
            compositions(n, k, s, 1, 0, &mut parts, &mut out);
        }
    }
    out
}

fn compositions(n: u64, k: u64, s: u64, min: u64, sum: u64, parts: &mut Vec<u64>, out: &mut Vec<(u64, u64, Vec<u64>)>) {
    let len = parts.len() as u64;
    if len == k {
        if sum == n {
            out.push((n, k, parts.clone()));
        }
        return;
    }
    let left = k - len;
    let nn = BigInt::from(n);
    let mut p = min;
    while sum + p * left <= n {
        let psum = sum + p;
        let j = len + 1;
        // Prefix slack for j < k; the last part is forced by the sum.
        let ok = j == k || top_sum(&nn, &BigInt::from(psum)) >= BigInt::from(j * s);
        if ok && (j < k || psum == n) {
            parts.push(p);
            compositions(n, k, s, p, psum, parts, out);
            parts.pop();
        }
        p += 1;
    }
}

/// Solvability of every valid instance in range, searched in parallel.
pub fn exhaustive_solvability_table(n_max: u64, k_max: u64, budget: u64) -> Vec<TableEntry> {
    valid_instances(n_max, k_max)
        .into_par_iter()
        .map(|(n, k, parts)| {
            let inst = crate::instance::validate_espp(&BigInt::from(n), &BigInt::from(k), &parts)
                .expect("enumerated instances are valid");
            let (verdict, _) = brute_solve(&inst, budget);
            TableEntry { n, k, parts, solvable: verdict.decided() }
        })
        .collect()
}
