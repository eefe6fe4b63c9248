//! Exhaustive search for incomplete instances on which Criterion 3 fires.
//!
//! The universe: for every `n <= n_max` and every `k` with `k | n(n+1)/2`,
//! prefixes `[2^d, q_1, ..., q_L]` with `3 <= q_1 <= ... <= q_L`, length
//! `l = d + L < k`, non-negative slack at every index and room for a
//! completion (`n - P_l >= (k-l) q_L`). A prefix is reported when Criterion 3
//! fires at its last index and at no shorter prefix, so every firing prefix
//! has exactly one reported ancestor.
//!
//! The search runs on `i64` with a pruning test that bounds, for every
//! possible extension length, the range of the criterion's left-hand side.
//! Every hit is re-validated with the exact big-integer code.

use crate::composition::Composition;
use crate::criteria::{criterion3, Criterion, CriterionReport, InstanceRef};
use crate::instance::IncompleteInstance;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Largest `n` the `i64` fast path is trusted with.
pub const N_LIMIT: u64 = 100_000;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("n_max = {0} exceeds the supported limit")]
    TooLarge(u64),
    #[error("shards must be at least 1")]
    NoShards,
    #[error("corrupt checkpoint at line {line}: {reason}")]
    CorruptCheckpoint { line: usize, reason: String },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("hit {0} did not re-validate")]
    Revalidation(String),
}

/// One reported prefix, in block form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScanHit {
    pub n: u64,
    pub k: u64,
    /// `(size, multiplicity)` pairs, sizes strictly increasing.
    pub blocks: Vec<(u64, u64)>,
    pub case2: bool,
}

impl ScanHit {
    pub fn composition(&self) -> Composition {
        Composition::from_blocks(self.blocks.iter().map(|&(s, m)| (s, BigInt::from(m))))
            .expect("scanner emits canonical blocks")
    }

    pub fn instance(&self) -> Result<IncompleteInstance, crate::error::CoreError> {
        IncompleteInstance::new(BigInt::from(self.n), BigInt::from(self.k), self.composition())
    }

    /// Exact re-check: a valid incomplete instance on which Criterion 3
    /// fires first at the last index, with the recorded case.
    pub fn revalidate(&self) -> Option<CriterionReport> {
        let inst = self.instance().ok()?;
        let report = criterion3(InstanceRef::Incomplete(&inst)).ok()??;
        let want = if self.case2 { Criterion::C3CaseII } else { Criterion::C3CaseI };
        let fires_last = match &report.witness {
            crate::criteria::Witness::C3 { d, u, i, .. } => {
                BigInt::from(self.len()) == &d.0 + &u.0 + &i.0
            }
            _ => false,
        };
        (report.criterion == want && fires_last).then_some(report)
    }

    pub fn len(&self) -> u64 {
        self.blocks.iter().map(|b| b.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn label(&self) -> String {
        format!("({}, {}, {})", self.n, self.k, self.composition())
    }
}

/// Totals over a scan.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub n_max: u64,
    pub total: u64,
    pub case2: u64,
    /// The two Case II hits with the smallest `n` (then `k`, then blocks).
    pub minima: Vec<String>,
    /// Smallest `n` of any hit.
    pub smallest_n: Option<u64>,
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanResult {
    pub hits: Vec<ScanHit>,
    pub summary: ScanSummary,
}

fn top_sum(n: i64, p: i64) -> i64 {
    p * (2 * n - p + 1) / 2
}

/// Sum of the `t` largest elements of `[m]`, with `t` clamped to `[0, m]`.
fn max_sum(t: i64, m: i64) -> i64 {
    if m <= 0 {
        return 0;
    }
    let t = t.clamp(0, m);
    t * (2 * m - t + 1) / 2
}

struct Cell {
    n: i64,
    k: i64,
    s: i64,
    d: i64,
    u: i64,
    e: i64,
    m: i64,
    prune: bool,
    nodes: u64,
    hits: Vec<ScanHit>,
}

impl Cell {
    /// 0 = no fire, 1 = Case I, 2 = Case II, at the last index of `parts`.
    fn fires(&self, parts: &[i64], tsum: i64) -> u8 {
        let big_l = parts.len() as i64;
        if big_l < self.u + 1 {
            return 0;
        }
        let i = big_l - self.u;
        let lhs = max_sum(tsum, self.m);
        if lhs < i * self.s {
            return 1;
        }
        if lhs == i * self.s && self.u >= 1 {
            let pde = parts[(self.e - 1) as usize];
            if 2 * max_sum(pde - 1, self.m - tsum) < self.s {
                return 2;
            }
        }
        0
    }

    fn record(&mut self, parts: &[i64], case2: bool) {
        let mut blocks: Vec<(u64, u64)> = vec![(2, self.d as u64)];
        for &p in parts {
            match blocks.last_mut() {
                Some(b) if b.0 == p as u64 => b.1 += 1,
                _ => blocks.push((p as u64, 1)),
            }
        }
        self.hits.push(ScanHit { n: self.n as u64, k: self.k as u64, blocks, case2 });
    }

    /// `tsum` is the sum of the parts after position `d + u`.
    fn dfs(&mut self, parts: &mut Vec<i64>, psum: i64, tsum: i64) {
        self.nodes += 1;
        match self.fires(parts, tsum) {
            0 => {}
            c => {
                self.record(parts, c == 2);
                return;
            }
        }
        if self.prune && !self.can_fire(parts, psum, tsum) {
            return;
        }
        let l = self.d + parts.len() as i64;
        if l + 1 >= self.k {
            return;
        }
        let counted = parts.len() as i64 >= self.u;
        let mut p = *parts.last().unwrap_or(&3);
        loop {
            let np = psum + p;
            let nl = l + 1;
            if self.n - np < (self.k - nl) * p {
                break;
            }
            if top_sum(self.n, np) >= nl * self.s {
                parts.push(p);
                self.dfs(parts, np, tsum + if counted { p } else { 0 });
                parts.pop();
            }
            p += 1;
        }
    }

    /// Could any extension by `r >= 1` parts fire at its last index?
    /// Intermediate constraints are relaxed, so a `false` is a proof.
    fn can_fire(&self, parts: &[i64], psum: i64, tsum: i64) -> bool {
        let big_l = parts.len() as i64;
        let lcur = self.d + big_l;
        let p = *parts.last().unwrap_or(&3);
        // Added parts at positions <= d + u do not count towards T.
        let skip = (self.u - big_l).max(0);
        // n - psum - A >= (k - l) p and A >= r p reduce to one r-free test.
        let room = self.n - psum - (self.k - lcur) * p;
        if room < 0 {
            return false;
        }
        let mut r = skip + 1;
        while lcur + r < self.k {
            let l = lcur + r;
            let i = l - self.d - self.u;
            let a_hi = room + r * p;
            let a_min = r * p;
            // Smallest A keeping the slack at l non-negative.
            if top_sum(self.n, psum + a_hi) >= l * self.s {
                let (mut lo, mut hi) = (a_min, a_hi);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if top_sum(self.n, psum + mid) >= l * self.s {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                let a_lo = lo;
                let counted = r - skip;
                // The counted parts are the largest of the added ones.
                let t_lo = tsum + (counted * p).max((a_lo * counted + r - 1) / r);
                let t_hi = tsum + a_hi - skip * p;
                let bound = i * self.s;
                if max_sum(t_lo, self.m) <= bound || max_sum(t_hi, self.m) <= bound {
                    return true;
                }
            }
            r += 1;
        }
        false
    }
}

/// Every `(n, k)` pair with an integral target, `n <= n_max`.
pub fn cells(n_max: u64) -> Vec<(u64, u64)> {
    (1..=n_max)
        .flat_map(|n| (1..=n).filter(move |&k| (n * (n + 1) / 2) % k == 0).map(move |k| (n, k)))
        .collect()
}

/// Hits for one cell; `prune = false` runs the plain enumeration.
pub fn scan_cell(n: u64, k: u64, prune: bool) -> (Vec<ScanHit>, u64) {
    let (n, k) = (n as i64, k as i64);
    let tri = n * (n + 1) / 2;
    if tri % k != 0 || n < 2 * k {
        return (vec![], 0);
    }
    let s = tri / k;
    let mut hits = Vec::new();
    let mut nodes = 0;
    let mut d = 1;
    while d < k {
        let u = 2 * n - s + 1 - 2 * d;
        if u < 0 {
            break;
        }
        let mut cell = Cell { n, k, s, d, u, e: (u + 2) / 2, m: s - n - 1, prune, nodes: 0, hits: vec![] };
        cell.dfs(&mut Vec::new(), 2 * d, 0);
        nodes += cell.nodes;
        hits.extend(cell.hits);
        d += 1;
    }
    (hits, nodes)
}

fn summarize(n_max: u64, mut hits: Vec<ScanHit>, nodes: u64) -> ScanResult {
    hits.sort();
    let case2: Vec<&ScanHit> = hits.iter().filter(|h| h.case2).collect();
    let summary = ScanSummary {
        n_max,
        total: hits.len() as u64,
        case2: case2.len() as u64,
        minima: case2.iter().take(2).map(|h| h.label()).collect(),
        smallest_n: hits.first().map(|h| h.n),
        nodes,
    };
    ScanResult { hits, summary }
}

/// Scans every cell with `n <= n_max` in parallel.
pub fn scan(n_max: u64) -> Result<ScanResult, ScanError> {
    scan_with(n_max, true)
}

/// [`scan`] with the pruning test switched on or off.
pub fn scan_with(n_max: u64, prune: bool) -> Result<ScanResult, ScanError> {
    if n_max > N_LIMIT {
        return Err(ScanError::TooLarge(n_max));
    }
    let parts: Vec<(Vec<ScanHit>, u64)> =
        cells(n_max).into_par_iter().map(|(n, k)| scan_cell(n, k, prune)).collect();
    let nodes = parts.iter().map(|p| p.1).sum();
    Ok(summarize(n_max, parts.into_iter().flat_map(|p| p.0).collect(), nodes))
}

/// Checks every hit against the exact criterion code.
pub fn revalidate_all(hits: &[ScanHit]) -> Result<(), ScanError> {
    match hits.par_iter().find_any(|h| h.revalidate().is_none()) {
        Some(bad) => Err(ScanError::Revalidation(bad.label())),
        None => Ok(()),
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    n: u64,
    k: u64,
    nodes: u64,
    hits: Vec<ScanHit>,
}

fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointLine>, ScanError> {
    let Ok(file) = File::open(path) else {
        return Ok(vec![]);
    };
    let mut text = String::new();
    let mut out = Vec::new();
    let mut reader = BufReader::new(file);
    let mut line_no = 0;
    loop {
        text.clear();
        if reader.read_line(&mut text)? == 0 {
            break;
        }
        line_no += 1;
        if !text.ends_with('\n') {
            // A write cut short by a kill; that cell is simply redone.
            break;
        }
        let line: CheckpointLine = serde_json::from_str(text.trim_end())
            .map_err(|e| ScanError::CorruptCheckpoint { line: line_no, reason: e.to_string() })?;
        out.push(line);
    }
    Ok(out)
}

/// [`scan`] split into `shards` independent groups of cells, appending every
/// finished cell to `checkpoint`; cells already present there are skipped.
/// `stop_after` limits the number of new cells (for interrupted runs);
/// `None` finishes the scan.
pub fn scan_checkpointed(
    n_max: u64,
    shards: usize,
    checkpoint: Option<&Path>,
    stop_after: Option<usize>,
) -> Result<ScanResult, ScanError> {
    if shards == 0 {
        return Err(ScanError::NoShards);
    }
    if n_max > N_LIMIT {
        return Err(ScanError::TooLarge(n_max));
    }
    let done = match checkpoint {
        Some(p) => read_checkpoint(p)?,
        None => vec![],
    };
    let finished: BTreeSet<(u64, u64)> = done.iter().map(|l| (l.n, l.k)).collect();
    let todo: Vec<(u64, u64)> = cells(n_max).into_iter().filter(|c| !finished.contains(c)).collect();
    let todo = match stop_after {
        Some(x) => todo.into_iter().take(x).collect(),
        None => todo,
    };
    let writer = match checkpoint {
        Some(p) => Some(std::sync::Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)),
        None => None,
    };
    let groups: Vec<Vec<(u64, u64)>> =
        (0..shards).map(|g| todo.iter().copied().skip(g).step_by(shards).collect()).collect();
    let fresh: Vec<CheckpointLine> = groups
        .into_par_iter()
        .map(|group| -> Result<Vec<CheckpointLine>, ScanError> {
            let mut out = Vec::new();
            for (n, k) in group {
                let (hits, nodes) = scan_cell(n, k, true);
                let line = CheckpointLine { n, k, nodes, hits };
                if let Some(w) = &writer {
                    let mut text = serde_json::to_string(&line).expect("serializable");
                    text.push('\n');
                    let mut f = w.lock().expect("checkpoint lock");
                    f.write_all(text.as_bytes())?;
                    f.flush()?;
                }
                out.push(line);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let lines = done.into_iter().chain(fresh).filter(|l| l.n <= n_max);
    let (mut hits, mut nodes) = (Vec::new(), 0);
    for l in lines {
        nodes += l.nodes;
        hits.extend(l.hits);
    }
    Ok(summarize(n_max, hits, nodes))
}
