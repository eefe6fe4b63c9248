mod common;

use common::big;
use espp::fluid::{solve, verify_plan, FluidProblem};
use espp::oracle::{brute_solve, exhaustive_solvability_table, valid_instances, Verdict, DEFAULT_BUDGET};
use espp::scanner::{revalidate_all, scan, scan_checkpointed, scan_with, ScanError};
use espp::{validate_espp, verify_partition};
use num_traits::Signed;
use std::path::PathBuf;

fn temp_file(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("espp-{}-{name}", std::process::id()));
    let _ = std::fs::remove_file(&p);
    p
}

#[test]
fn solutions_verify_and_relaxations_are_feasible() {
    for (n, k, parts) in valid_instances(20, 6) {
        let inst = validate_espp(&big(n), &big(k), &parts).unwrap();
        let (v, _) = brute_solve(&inst, DEFAULT_BUDGET);
        if let Verdict::Solution { partition } = v {
            assert!(verify_partition(&inst, &partition));
            let p = FluidProblem::from_espp(&inst).unwrap();
            assert!(p.frac_slack().is_none_or(|(s, _)| !s.is_negative()));
            assert!(verify_plan(&p, &solve(&p).unwrap().plan));
        }
    }
}

#[test]
fn table_is_decided_and_stable() {
    let a = exhaustive_solvability_table(16, 16, DEFAULT_BUDGET);
    let b = exhaustive_solvability_table(16, 16, DEFAULT_BUDGET);
    assert_eq!(a, b);
    assert!(a.iter().all(|e| e.solvable.is_some()));
}

#[test]
fn pruning_is_sound() {
    assert_eq!(scan_with(60, true).unwrap().hits, scan_with(60, false).unwrap().hits);
}

#[test]
fn shards_do_not_change_the_result() {
    let one = scan_checkpointed(250, 1, None, None).unwrap();
    let many = scan_checkpointed(250, 8, None, None).unwrap();
    assert_eq!(one.hits, many.hits);
    assert_eq!(one.summary, many.summary);
    assert_eq!(one.hits, scan(250).unwrap().hits);
    revalidate_all(&one.hits).unwrap();
}

#[test]
fn interrupted_scans_resume() {
    let path = temp_file("resume.jsonl");
    let partial = scan_checkpointed(150, 4, Some(&path), Some(100)).unwrap();
    let full = scan_checkpointed(150, 4, Some(&path), None).unwrap();
    assert!(partial.summary.total <= full.summary.total);
    assert_eq!(full.hits, scan(150).unwrap().hits);
    // A torn final line is dropped and its cell recomputed.
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.trim_end().rfind('\n').unwrap() + 1;
    std::fs::write(&path, format!("{}{{\"n\":", &text[..cut])).unwrap();
    assert_eq!(scan_checkpointed(150, 2, Some(&path), None).unwrap().hits, full.hits);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn corrupt_checkpoints_are_reported() {
    let path = temp_file("corrupt.jsonl");
    std::fs::write(&path, "not json\n").unwrap();
    match scan_checkpointed(50, 2, Some(&path), None) {
        Err(ScanError::CorruptCheckpoint { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
    let _ = std::fs::remove_file(&path);
}

#[test]
fn scan_hits_are_unsolvable_when_small() {
    let r = scan(45).unwrap();
    for h in &r.hits {
        let full = espp::complete_incomplete(&h.instance().unwrap()).unwrap();
        assert_eq!(brute_solve(&full, DEFAULT_BUDGET).0, Verdict::Unsolvable, "{}", h.label());
    }
}
