//! Library-level tests of input loading and the benchmark harness.

use std::path::Path;

use hornopt_cli::bench::{discover, run_case, run_suite, BenchOpts, Verdict};
use hornopt_cli::{exit_code, load_hccs, load_program, parse_shape, run, Config};
use hornopt_core::Restriction;

const SUM_BOT: &str = "false <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\n@maximize P\n";

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn shapes() {
    assert_eq!(parse_shape("2x1").unwrap(), Restriction::shape(2, 1));
    assert_eq!(parse_shape("1X3").unwrap(), Restriction::shape(1, 3));
    for bad in ["", "2", "x1", "0x1", "2x-1", "ax b"] {
        assert!(parse_shape(bad).is_err(), "{bad}");
    }
}

#[test]
fn directions_of_absent_predicates_are_dropped() {
    let cfg = Config {
        directives: "@minimize Q".into(),
        ..Config::default()
    };
    let p = load_hccs("P(x) <= x = 0\nQ(x) <= P(x)\n", &cfg).unwrap();
    assert_eq!(p.spec.priority, vec!["Q".to_string()]);
    let cfg = Config {
        directives: "@minimize R".into(),
        ..Config::default()
    };
    assert!(load_hccs("P(x) <= x = 0\n", &cfg).is_err());
}

#[test]
fn instrumented_program_gains_counter_predicates() {
    let cfg = Config {
        instrument: Some("sum".into()),
        ..Config::default()
    };
    let p = load_program("let rec sum x = if x = 0 then 0 else x + sum (x - 1)", &cfg).unwrap();
    let pvs = p.hccs.pvs();
    assert!(pvs.len() >= 2, "{pvs:?}");
    assert!(p.hccs.pretty().contains("+ 1"), "{}", p.hccs.pretty());
}

#[test]
fn run_and_exit_code() {
    let cfg = Config::default();
    let p = load_hccs(SUM_BOT, &cfg).unwrap();
    let smt = cfg.smt();
    let out = run(&p, &cfg, &smt);
    assert_eq!(out.result().status(), "OptSol");
    assert_eq!(exit_code(out.result()), 0);
    assert!(out.types.is_empty());
    assert_eq!(out.validated, None);
}

#[test]
fn bench_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.hccs", SUM_BOT);
    let good_side = write(
        dir.path(),
        "good.json",
        r#"{"kind": "disprove-termination", "expect": {"P": "x1 <= -1"}}"#,
    );
    write(dir.path(), "wrong.hccs", SUM_BOT);
    write(
        dir.path(),
        "wrong.json",
        r#"{"kind": "disprove-termination", "expect": {"P": "x1 < 5"}}"#,
    );
    write(dir.path(), "status.hccs", SUM_BOT);
    write(
        dir.path(),
        "status.json",
        r#"{"kind": "k", "status": ["NoSol"]}"#,
    );
    write(dir.path(), "typo.hccs", SUM_BOT);
    write(dir.path(), "typo.json", r#"{"kind": "k", "expected": {}}"#);
    write(dir.path(), "lonely.hccs", SUM_BOT);

    let found = discover(dir.path()).unwrap();
    assert_eq!(found.len(), 4);
    assert_eq!(found[0].0, good);

    let opts = BenchOpts::default();
    let r = run_case(&good, &good_side, &opts);
    assert_eq!(r.verdict, Verdict::Verified, "{r:?}");
    assert_eq!(r.status, "OptSol");

    let table = run_suite(dir.path(), &opts).unwrap();
    let by = |name: &str| table.cases.iter().find(|c| c.case == name).unwrap().clone();
    assert_eq!(by("wrong").verdict, Verdict::Other);
    assert!(by("wrong").note.contains("not ≡"));
    assert_eq!(by("status").verdict, Verdict::Other);
    assert!(by("typo").note.contains("unknown field"));
    assert_eq!(table.count(Verdict::Verified), 1);
    assert!(table
        .render()
        .contains("verified 1 / timeout 0 / other 3 of 4"));
}

#[test]
fn program_case_runs_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(
        dir.path(),
        "sum.ml",
        "(*@ @type sum : (x:{x | P(x)}) -> {y | false}\n    @maximize P *)\nlet rec sum x = if x = 0 then 0 else x + sum (x - 1)\n",
    );
    let side = write(
        dir.path(),
        "sum.json",
        r#"{"kind": "disprove-termination", "expect": {"P": "x1 < 0"}}"#,
    );
    let r = run_case(&src, &side, &BenchOpts::default());
    assert_eq!(r.verdict, Verdict::Verified, "{r:?}");
    assert_eq!(r.oracle, Some(true));
}
