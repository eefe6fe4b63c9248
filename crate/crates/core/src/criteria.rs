//! Arithmetic certificates of unsolvability.
//!
//! Both criteria look at the parts of size 2 at the front of the
//! composition. With `s = s^{n,k}`, every 2-set `{x, s-x}` uses an element of
//! `C = {s-n, ..., n}`. When these large elements run out, the following
//! parts must be filled from `[m] = {1, ..., s-n-1}`, and the criteria
//! compare the best possible sum against what the parts need.

use crate::composition::Composition;
use crate::instance::{EsppInstance, IncompleteInstance};
use crate::json::DecInt;
use crate::slack::target_sum;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CriteriaError {
    #[error("maxSum needs 0 <= l <= m, got l = {l}, m = {m}")]
    InvalidRange { l: BigInt, m: BigInt },
    #[error("wrong shape: {0}")]
    WrongShape(String),
}

/// Sum of the `l` largest elements of `{1..m}`.
pub fn max_sum(l: &BigInt, m: &BigInt) -> Result<BigInt, CriteriaError> {
    if l.is_negative() || l > m {
        return Err(CriteriaError::InvalidRange { l: l.clone(), m: m.clone() });
    }
    Ok(l * (2 * m - l + 1u32) / 2)
}

/// [`max_sum`] with the range clamped: at most all of `{1..m}` can be used,
/// and an empty or negative range contributes nothing.
pub fn max_sum_clamped(l: &BigInt, m: &BigInt) -> BigInt {
    let m = m.max(&BigInt::zero()).clone();
    let l = l.clamp(&BigInt::zero(), &m).clone();
    max_sum(&l, &m).expect("clamped")
}

/// `lo + (lo+1) + ... + hi`, zero when empty.
fn series(lo: &BigInt, hi: &BigInt) -> BigInt {
    if hi < lo {
        return BigInt::zero();
    }
    (lo + hi) * (hi - lo + 1u32) / 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "C1")]
    C1,
    #[serde(rename = "C3_CaseI")]
    C3CaseI,
    #[serde(rename = "C3_CaseII")]
    C3CaseII,
}

/// The quantities behind a verdict. `lhs < rhs` is the violated inequality
/// (for Case II, `lhs == rhs` and `2*second_lhs < s`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Witness {
    C1 {
        n: DecInt,
        s: DecInt,
        e: DecInt,
        d: DecInt,
        f: DecInt,
        c: DecInt,
        h: DecInt,
        lhs: DecInt,
        rhs: DecInt,
    },
    C3 {
        n: DecInt,
        s: DecInt,
        d: DecInt,
        u: DecInt,
        e: DecInt,
        m: DecInt,
        i: DecInt,
        t: DecInt,
        lhs: DecInt,
        rhs: DecInt,
        p_de: Option<DecInt>,
        second_lhs: Option<DecInt>,
        truncated: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub witness: Witness,
}

impl CriterionReport {
    /// Re-derives the verdict from the witness alone.
    pub fn recheck(&self) -> bool {
        match (&self.criterion, &self.witness) {
            (Criterion::C1, Witness::C1 { n, s, e, d, f, c, h, lhs, rhs }) => {
                let (n, s, e, d, f) = (&n.0, &s.0, &e.0, &d.0, &f.0);
                let c2 = s - n;
                let h2: BigInt = (n - e) * 2u32 - s + 1u32;
                let l = f - &h2;
                c2 == c.0
                    && h2 == h.0
                    && l.is_positive()
                    && series(&(&c2 - d * &l), &(&c2 - 1u32)) == lhs.0
                    && &l * s == rhs.0
                    && lhs.0 < rhs.0
            }
            (
                kind @ (Criterion::C3CaseI | Criterion::C3CaseII),
                Witness::C3 { s, m, i, t, lhs, rhs, p_de, second_lhs, u, .. },
            ) => {
                let first = max_sum_clamped(&t.0, &m.0) == lhs.0 && &i.0 * &s.0 == rhs.0;
                match kind {
                    Criterion::C3CaseI => first && lhs.0 < rhs.0,
                    _ => {
                        let (Some(p), Some(sl)) = (p_de, second_lhs) else { return false };
                        first
                            && u.0.is_positive()
                            && lhs.0 == rhs.0
                            && max_sum_clamped(&(&p.0 - 1u32), &(&m.0 - &t.0)) == sl.0
                            && 2 * &sl.0 < s.0
                    }
                }
            }
            _ => false,
        }
    }
}

/// The two blocks `[2^e, d^f]`, `d >= 3`, or a description of the mismatch.
fn two_blocks(prefix: &Composition) -> Result<(BigInt, u64, BigInt), CriteriaError> {
    match prefix.blocks() {
        [b2, bd] if b2.size == 2 && bd.size >= 3 => Ok((b2.mult.clone(), bd.size, bd.mult.clone())),
        _ => Err(CriteriaError::WrongShape(format!(
            "criterion 1 needs a prefix [2^e, d^f] with d >= 3, got {prefix}"
        ))),
    }
}

fn criterion1_raw(n: &BigInt, s: &BigInt, e: &BigInt, d: u64, f: &BigInt) -> Option<CriterionReport> {
    let c = s - n;
    let h: BigInt = (n - e) * 2u32 - s + 1u32;
    let l = f - &h;
    if !l.is_positive() {
        return None;
    }
    let lhs = series(&(&c - &l * d), &(&c - 1u32));
    let rhs = &l * s;
    (lhs < rhs).then(|| CriterionReport {
        criterion: Criterion::C1,
        witness: Witness::C1 {
            n: n.clone().into(),
            s: s.clone().into(),
            e: e.clone().into(),
            d: BigInt::from(d).into(),
            f: f.clone().into(),
            c: c.into(),
            h: h.into(),
            lhs: lhs.into(),
            rhs: rhs.into(),
        },
    })
}

/// Fires iff `f > h` and `sum_{i=c-d(f-h)}^{c-1} i < (f-h) s`, where
/// `c = s-n` and `h = 2(n-e) - s + 1`. Then every completion is unsolvable.
pub fn criterion1(inst: &IncompleteInstance) -> Result<Option<CriterionReport>, CriteriaError> {
    let (e, d, f) = two_blocks(inst.prefix())?;
    Ok(criterion1_raw(inst.n(), inst.target(), &e, d, &f))
}

/// A complete or incomplete instance.
#[derive(Clone, Copy, Debug)]
pub enum InstanceRef<'a> {
    Complete(&'a EsppInstance),
    Incomplete(&'a IncompleteInstance),
}

impl<'a> InstanceRef<'a> {
    fn parts(&self) -> (&'a BigInt, &'a BigInt, &'a BigInt, &'a Composition) {
        match self {
            InstanceRef::Complete(i) => (i.n(), i.k(), i.target(), i.composition()),
            InstanceRef::Incomplete(i) => (i.n(), i.k(), i.target(), i.prefix()),
        }
    }
}

/// Segments of length at most this are scanned index by index.
const DIRECT_SCAN: u64 = 64;

/// Scans `i = 1..k-d-u` (cut at the end of a prefix) for Case I,
/// `maxSum(T_i, [m]) < i s`, or Case II, equality together with
/// `maxSum(p_{d+e} - 1, [m - T_i]) < s/2` and `u >= 1`. Here
/// `T_i = p_{d+u+1} + ... + p_{d+u+i}`, `u = 2n - s + 1 - 2d`,
/// `e = ceil((u+1)/2)` and `m = s - n - 1`. Reports the smallest firing `i`.
pub fn criterion3(inst: InstanceRef<'_>) -> Result<Option<CriterionReport>, CriteriaError> {
    let (n, k, s, comp) = inst.parts();
    criterion3_raw(n, k, s, comp, DIRECT_SCAN)
}

/// Same as [`criterion3`] for raw data; `k` must make `s` the target sum.
pub fn criterion3_raw(
    n: &BigInt,
    k: &BigInt,
    s: &BigInt,
    comp: &Composition,
    direct_scan: u64,
) -> Result<Option<CriterionReport>, CriteriaError> {
    let lead = match comp.blocks().first() {
        Some(b) if b.size == 2 => b.mult.clone(),
        _ => {
            return Err(CriteriaError::WrongShape(format!(
                "criterion 3 needs a leading block of 2s, got {comp}"
            )))
        }
    };
    let d = lead;
    let u: BigInt = n * 2u32 - s + 1u32 - &d * 2u32;
    if u.is_negative() {
        return Ok(None);
    }
    let e: BigInt = (&u + 2u32).div_floor(&BigInt::from(2));
    let m: BigInt = s - n - 1u32;
    let full = k - &d - &u;
    let imax = full.clone().min(comp.len() - &d - &u);
    if imax < BigInt::one() {
        return Ok(None);
    }
    let ctx = C3 {
        n,
        s,
        d: &d,
        u: &u,
        e: &e,
        m: &m,
        p_de: if u.is_positive() { comp.part(&(&d + &e)) } else { None },
        truncated: imax < full,
    };
    let base = &d + &u;
    let t_base = comp.prefix_sum(&base).expect("inside composition");
    // Walk the blocks that overlap positions base+1 ..= base+imax.
    let last_pos = &base + &imax;
    let mut start = BigInt::zero();
    for (block_end, prefix_at_end) in comp.block_ends() {
        let q = comp.part(&block_end).expect("block end");
        let block_start = start.clone() + 1u32;
        start = block_end.clone();
        let lo = block_start.max(&base + 1u32);
        let hi = block_end.clone().min(last_pos.clone());
        if lo > hi {
            if block_end >= last_pos {
                break;
            }
            continue;
        }
        let before = &prefix_at_end - (&block_end - &lo + 1u32) * q - &t_base;
        let seg = Segment { t_before: before, i_before: &lo - &base - 1, q, len: &hi - &lo + 1 };
        if let Some(r) = ctx.scan_segment(&seg, direct_scan) {
            return Ok(Some(r));
        }
        if hi >= last_pos {
            break;
        }
    }
    Ok(None)
}

struct C3<'a> {
    n: &'a BigInt,
    s: &'a BigInt,
    d: &'a BigInt,
    u: &'a BigInt,
    e: &'a BigInt,
    m: &'a BigInt,
    p_de: Option<u64>,
    truncated: bool,
}

/// Indices `i_before + t`, `1 <= t <= len`, all with part size `q`, so
/// `T = t_before + q t`.
struct Segment {
    t_before: BigInt,
    i_before: BigInt,
    q: u64,
    len: BigInt,
}

impl C3<'_> {
    fn at(&self, seg: &Segment, t: &BigInt) -> (BigInt, BigInt, BigInt) {
        let tt = &seg.t_before + t * seg.q;
        let i = &seg.i_before + t;
        let lhs = max_sum_clamped(&tt, self.m);
        let rhs = &i * self.s;
        (i, tt, lhs - rhs)
    }

    fn phi(&self, seg: &Segment, t: &BigInt) -> BigInt {
        self.at(seg, t).2
    }

    fn fire(&self, seg: &Segment, t: &BigInt) -> Option<CriterionReport> {
        let (i, tt, diff) = self.at(seg, t);
        let lhs = max_sum_clamped(&tt, self.m);
        let rhs = &i * self.s;
        let mut second = None;
        let criterion = if diff.is_negative() {
            Criterion::C3CaseI
        } else if diff.is_zero() && self.u.is_positive() {
            let p = self.p_de?;
            let sl = max_sum_clamped(&(BigInt::from(p) - 1u32), &(self.m - &tt));
            if 2 * &sl < *self.s {
                second = Some(sl);
                Criterion::C3CaseII
            } else {
                return None;
            }
        } else {
            return None;
        };
        Some(CriterionReport {
            criterion,
            witness: Witness::C3 {
                n: self.n.clone().into(),
                s: self.s.clone().into(),
                d: self.d.clone().into(),
                u: self.u.clone().into(),
                e: self.e.clone().into(),
                m: self.m.clone().into(),
                i: i.into(),
                t: tt.into(),
                lhs: lhs.into(),
                rhs: rhs.into(),
                p_de: self.p_de.map(|p| BigInt::from(p).into()),
                second_lhs: second.map(DecInt),
                truncated: self.truncated,
            },
        })
    }

    /// `phi(t) = maxSum(T(t)) - i(t) s` is concave in `t`: strictly while
    /// `T <= m` and linear with slope `-s` afterwards. Its negative set is a
    /// prefix plus a suffix of `[1, len]` and it has at most two zeros, each
    /// next to the point where a monotone stretch crosses 0, so a handful of
    /// binary searches finds every candidate for the first firing index.
    fn scan_segment(&self, seg: &Segment, direct_scan: u64) -> Option<CriterionReport> {
        let one = BigInt::one();
        if seg.len <= BigInt::from(direct_scan) {
            let mut t = one.clone();
            while t <= seg.len {
                if let Some(r) = self.fire(seg, &t) {
                    return Some(r);
                }
                t += 1;
            }
            return None;
        }
        let len = &seg.len;
        // Peak: first t with phi(t+1) <= phi(t).
        let peak = first_true(&one, len, |t| t == len || self.phi(seg, &(t + 1u32)) <= self.phi(seg, t));
        let rise_nonneg = first_true(&one, &peak, |t| !self.phi(seg, t).is_negative());
        let fall_nonpos = first_true(&peak, len, |t| !self.phi(seg, t).is_positive());
        let fall_neg = first_true(&peak, len, |t| self.phi(seg, t).is_negative());
        let mut cands: Vec<BigInt> = Vec::new();
        for c in [&one, &peak, &rise_nonneg, &fall_nonpos, &fall_neg] {
            for delta in [-1i32, 0, 1] {
                let t = c + delta;
                if t >= one && &t <= len {
                    cands.push(t);
                }
            }
        }
        cands.sort();
        cands.dedup();
        cands.iter().find_map(|t| self.fire(seg, t))
    }
}

/// Smallest `t` in `[lo, hi]` with `pred(t)`, for a predicate that is false
/// then true; returns `hi` if it never turns true.
fn first_true(lo: &BigInt, hi: &BigInt, pred: impl Fn(&BigInt) -> bool) -> BigInt {
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    while lo < hi {
        let mid: BigInt = (&lo + &hi) / 2;
        if pred(&mid) {
            hi = mid;
        } else {
            lo = mid + 1u32;
        }
    }
    lo
}

/// First certificate in the order Criterion 3 (Case I or II, smallest `i`),
/// then Criterion 1 on the leading `[2^e, d^f]` blocks. `None` is not a
/// solvability claim.
pub fn certify_unsolvable(inst: InstanceRef<'_>) -> Option<CriterionReport> {
    if let Ok(Some(r)) = criterion3(inst) {
        return Some(r);
    }
    let (n, k, s, comp) = inst.parts();
    let lead = Composition::from_blocks(
        comp.blocks().iter().take(2).map(|b| (b.size, b.mult.clone())),
    )
    .ok()?;
    let (e, d, f) = two_blocks(&lead).ok()?;
    // The leading blocks must form a proper prefix for the criterion to apply.
    if lead.len() >= *k {
        return None;
    }
    debug_assert_eq!(target_sum(n, k).ok().as_ref(), Some(s));
    criterion1_raw(n, s, &e, d, &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{complete_incomplete, validate_espp};

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn incomplete(n: i64, k: i64, blocks: &[(u64, i64)]) -> IncompleteInstance {
        let comp = Composition::from_blocks(blocks.iter().map(|&(q, e)| (q, big(e)))).unwrap();
        IncompleteInstance::new(big(n), big(k), comp).unwrap()
    }

    #[test]
    fn max_sum_values() {
        assert_eq!(max_sum(&big(3), &big(20)).unwrap(), big(57));
        assert_eq!(max_sum(&big(0), &big(9)).unwrap(), big(0));
        assert_eq!(max_sum(&big(9), &big(9)).unwrap(), big(45));
        assert!(max_sum(&big(10), &big(9)).is_err());
        assert!(max_sum(&big(-1), &big(9)).is_err());
        assert_eq!(max_sum_clamped(&big(10), &big(9)), big(45));
        assert_eq!(max_sum_clamped(&big(3), &big(-2)), big(0));
    }

    #[test]
    fn criterion1_on_the_39_fixture() {
        let r = criterion1(&incomplete(39, 13, &[(2, 9), (3, 2)])).unwrap().unwrap();
        let Witness::C1 { f, c, h, lhs, rhs, .. } = &r.witness else { panic!() };
        assert_eq!((f.0.clone(), c.0.clone(), h.0.clone()), (big(2), big(21), big(1)));
        assert_eq!((lhs.0.clone(), rhs.0.clone()), (big(57), big(60)));
        assert!(r.recheck());
    }

    #[test]
    fn criterion1_silent_on_80() {
        assert_eq!(criterion1(&incomplete(80, 30, &[(2, 25), (3, 2)])).unwrap(), None);
    }

    #[test]
    fn criterion1_shape() {
        let inst = incomplete(20, 5, &[(3, 1), (4, 1)]);
        assert!(matches!(criterion1(&inst), Err(CriteriaError::WrongShape(_))));
    }

    #[test]
    fn criterion3_case_one_on_39() {
        let inst = incomplete(39, 13, &[(2, 9), (3, 2)]);
        let r = criterion3(InstanceRef::Incomplete(&inst)).unwrap().unwrap();
        assert_eq!(r.criterion, Criterion::C3CaseI);
        assert!(r.recheck());
    }

    #[test]
    fn criterion3_case_two_fixtures() {
        for (n, k, blocks) in [
            (208, 76, vec![(2, 64), (3, 2), (4, 4)]),
            (299, 115, vec![(2, 103), (4, 2), (5, 6)]),
        ] {
            let inst = incomplete(n, k, &blocks);
            let r = criterion3(InstanceRef::Incomplete(&inst)).unwrap().unwrap();
            assert_eq!(r.criterion, Criterion::C3CaseII, "({n},{k})");
            let Witness::C3 { lhs, rhs, i, truncated, .. } = &r.witness else { panic!() };
            assert_eq!(lhs, rhs);
            // The firing index is the last one inside the prefix.
            let (d, u) = (big(blocks[0].1), 2 * big(n) - inst.target() + 1 - 2 * big(blocks[0].1));
            assert_eq!(&i.0 + d + u, inst.prefix().len());
            assert!(truncated);
            assert!(r.recheck());
        }
    }

    #[test]
    fn dispatcher() {
        let inst = incomplete(39, 13, &[(2, 9), (3, 2)]);
        let full = complete_incomplete(&inst).unwrap();
        assert!(certify_unsolvable(InstanceRef::Complete(&full)).is_some());
        let easy = validate_espp(&big(3), &big(2), &[1, 2]).unwrap();
        assert_eq!(certify_unsolvable(InstanceRef::Complete(&easy)), None);
        let pairs = validate_espp(&big(4), &big(2), &[2, 2]).unwrap();
        assert_eq!(certify_unsolvable(InstanceRef::Complete(&pairs)), None);
    }

    #[test]
    fn report_json_uses_strings() {
        let r = criterion1(&incomplete(39, 13, &[(2, 9), (3, 2)])).unwrap().unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""criterion":"C1""#));
        assert!(text.contains(r#""lhs":"57""#));
        let back: CriterionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
