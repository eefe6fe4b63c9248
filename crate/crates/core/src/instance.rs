//! Validated ESPP instances, incomplete instances and partitions.

use crate::composition::Composition;
use crate::error::CoreError;
use crate::slack::{slack, slack_at, target_sum, SlackRange, SlackValue};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// `(n, k, P)` with `k | n(n+1)/2`, `P` a non-descending composition of `n`
/// into `k` parts, and `slack(P) >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EsppInstance {
    n: BigInt,
    k: BigInt,
    target: BigInt,
    composition: Composition,
}

impl EsppInstance {
    /// Validates in order: positivity and divisibility, sum, length, slack.
    pub fn new(n: BigInt, k: BigInt, composition: Composition) -> Result<Self, CoreError> {
        let target = target_sum(&n, &k)?;
        let total = composition.total();
        if total != n {
            return Err(CoreError::SumMismatch { expected: n, actual: total });
        }
        let len = composition.len();
        if len != k {
            return Err(CoreError::LengthMismatch { expected: k, actual: len });
        }
        if let Some(SlackValue { value, index }) = slack(&n, &k, &composition, SlackRange::Complete)? {
            if value.is_negative() {
                return Err(CoreError::SlackViolated { index, value });
            }
        }
        Ok(Self { n, k, target, composition })
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn k(&self) -> &BigInt {
        &self.k
    }

    /// `s^{n,k}`.
    pub fn target(&self) -> &BigInt {
        &self.target
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    pub fn slack(&self) -> Option<SlackValue> {
        slack(&self.n, &self.k, &self.composition, SlackRange::Complete).expect("validated")
    }

    pub fn slack_at(&self, j: &BigInt) -> Result<BigInt, CoreError> {
        slack_at(&self.n, &self.k, &self.composition, j, SlackRange::Complete)
    }

    /// Machine-sized view `(n, s, parts)` for the explicit solvers.
    pub fn small(&self) -> Result<(usize, u64, Vec<usize>), CoreError> {
        let too_large = || CoreError::TooLarge(format!("n = {}", self.n));
        let n = self.n.to_usize().filter(|&n| n <= 1 << 24).ok_or_else(too_large)?;
        let s = self.target.to_u64().ok_or_else(too_large)?;
        let parts = self.composition.parts().ok_or_else(too_large)?;
        Ok((n, s, parts.into_iter().map(|p| p as usize).collect()))
    }
}

/// Validates `(n, k, parts)` from a raw part list, naming the first violated
/// condition among divisibility, monotonicity, sum and slack.
pub fn validate_espp(n: &BigInt, k: &BigInt, parts: &[u64]) -> Result<EsppInstance, CoreError> {
    target_sum(n, k)?;
    let comp = Composition::from_parts(parts)?;
    EsppInstance::new(n.clone(), k.clone(), comp)
}

/// A prefix `Q = [p_1..p_l]`, `1 <= l < k`, with room for a non-descending
/// completion (`n - sum Q >= (k-l) p_l`) and `slack(Q) >= 0` including `j = l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IncompleteInstance {
    n: BigInt,
    k: BigInt,
    target: BigInt,
    prefix: Composition,
}

impl IncompleteInstance {
    pub fn new(n: BigInt, k: BigInt, prefix: Composition) -> Result<Self, CoreError> {
        let target = target_sum(&n, &k)?;
        let l = prefix.len();
        if l.is_zero() || l >= k {
            return Err(CoreError::PrefixLength { len: l, k });
        }
        let last = prefix.last().expect("nonempty");
        let remaining = &n - prefix.total();
        let slots = &k - &l;
        if remaining < &slots * last {
            return Err(CoreError::NoRoomForCompletion { remaining, slots, last });
        }
        if let Some(SlackValue { value, index }) = slack(&n, &k, &prefix, SlackRange::Prefix)? {
            if value.is_negative() {
                return Err(CoreError::SlackViolated { index, value });
            }
        }
        Ok(Self { n, k, target, prefix })
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn k(&self) -> &BigInt {
        &self.k
    }

    pub fn target(&self) -> &BigInt {
        &self.target
    }

    pub fn prefix(&self) -> &Composition {
        &self.prefix
    }

    pub fn slack(&self) -> SlackValue {
        slack(&self.n, &self.k, &self.prefix, SlackRange::Prefix)
            .expect("validated")
            .expect("nonempty prefix")
    }

    pub fn slack_at(&self, j: &BigInt) -> Result<BigInt, CoreError> {
        slack_at(&self.n, &self.k, &self.prefix, j, SlackRange::Prefix)
    }
}

/// Completes a prefix by spreading the remainder `r` over the `k-l` missing
/// parts as evenly as possible, smaller parts first.
///
/// `floor(r/(k-l)) >= p_l` by the room condition, so the result stays
/// non-descending. The full slack condition is re-checked on every index.
pub fn complete_incomplete(inst: &IncompleteInstance) -> Result<EsppInstance, CoreError> {
    let slots = inst.k() - inst.prefix().len();
    let remaining = inst.n() - inst.prefix().total();
    let (q, rem) = remaining.div_rem(&slots);
    let small_count = &slots - &rem;
    let q64 = q.to_u64().ok_or_else(|| CoreError::TooLarge(format!("part size {q}")))?;
    let mut tail = Composition::empty();
    if small_count.is_positive() {
        tail.push_block(q64, small_count)?;
    }
    if rem.is_positive() {
        tail.push_block(q64 + 1, rem)?;
    }
    let comp = inst.prefix().concat(&tail)?;
    EsppInstance::new(inst.n().clone(), inst.k().clone(), comp).map_err(|e| match e {
        CoreError::SlackViolated { index, value } => CoreError::CompletionViolatesSlack { index, value },
        other => other,
    })
}

/// `k` sets over `{1..n}`, listed in the order of the composition's parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EqualSumPartition {
    pub sets: Vec<Vec<u64>>,
}

impl EqualSumPartition {
    /// Sorts every set ascending; the set order is left untouched.
    pub fn normalized(mut self) -> Self {
        for s in &mut self.sets {
            s.sort_unstable();
        }
        self
    }
}

/// True iff the sets are a disjoint cover of `{1..n}`, set `j` has size `p_j`
/// and every set sums to `s^{n,k}`.
pub fn verify_partition(inst: &EsppInstance, sol: &EqualSumPartition) -> bool {
    let Ok((n, s, parts)) = inst.small() else {
        return false;
    };
    if sol.sets.len() != parts.len() {
        return false;
    }
    let mut seen = BTreeSet::new();
    for (set, &p) in sol.sets.iter().zip(&parts) {
        if set.len() != p {
            return false;
        }
        let mut sum = 0u64;
        for &x in set {
            if x == 0 || x as usize > n || !seen.insert(x) {
                return false;
            }
            sum += x;
        }
        if sum != s {
            return false;
        }
    }
    seen.len() == n
}

/// `n` and `k` are positive, and `k | n(n+1)/2`.
pub fn admits_target(n: u64, k: u64) -> bool {
    n >= 1 && k >= 1 && (n as u128 * (n as u128 + 1) / 2) % k as u128 == 0
}
