//! Generated clauses of the bundled programs against hand-derived golden
//! files, compared up to variable renaming.

use std::path::PathBuf;

use hornopt_core::gen::{generate, templates};
use hornopt_core::hccs::{parse_hccs, same_up_to_renaming};
use hornopt_core::smtio::Smt;
use hornopt_core::surface::{parse_directives, parse_source};
use hornopt_core::Hccs;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn generated(program: &str) -> Hccs {
    let src = std::fs::read_to_string(root().join("benchmarks/paper").join(program)).unwrap();
    let (prog, text) = parse_source(&src).unwrap();
    let d = parse_directives(&text).unwrap();
    let env = templates(&prog, &d).unwrap();
    generate(&prog, &env, &d).unwrap()
}

fn golden(name: &str) -> Hccs {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    parse_hccs(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .hccs
}

fn check(program: &str, gold: &str) {
    let smt = Smt::new(Default::default());
    let got = generated(program);
    assert!(
        same_up_to_renaming(&got, &golden(gold), &smt),
        "{program} generated\n{}",
        got.pretty()
    );
}

#[test]
fn sum_matches_the_three_clauses() {
    check("sum.ml", "sum.hccs");
}

#[test]
fn sum_prime() {
    check("sum_prime.ml", "sum_prime.hccs");
}

#[test]
fn repeat() {
    check("repeat.ml", "repeat.hccs");
}

#[test]
fn read_int_has_existential_head() {
    check("read_int.ml", "read_int.hccs");
}

#[test]
fn sum_t_with_directive_clauses() {
    check("sum_t.ml", "sum_t.hccs");
}

#[test]
fn golden_files_are_not_interchangeable() {
    let smt = Smt::new(Default::default());
    assert!(!same_up_to_renaming(
        &generated("sum.ml"),
        &golden("sum_prime.hccs"),
        &smt
    ));
}
