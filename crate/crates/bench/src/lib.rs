//! Benchmark fixtures: the bundled paper programs and helpers that run the
//! front end on them.

use hornopt_core::gen::{generate, templates};
use hornopt_core::hccs::parse_hccs;
use hornopt_core::surface::{parse_directives, parse_source};
use hornopt_core::Hccs;

pub const SUM: &str = include_str!("../../../benchmarks/paper/sum.ml");
pub const SUM_PRIME: &str = include_str!("../../../benchmarks/paper/sum_prime.ml");
pub const REPEAT: &str = include_str!("../../../benchmarks/paper/repeat.ml");
pub const SUM_T: &str = include_str!("../../../benchmarks/paper/sum_t.ml");
pub const FIB_CPS: &str = include_str!("../../../benchmarks/nonterm/fib_cps.ml");
pub const SUM_BOT: &str = include_str!("../../../benchmarks/paper/sum_bot.hccs");

/// Programs by name, in a fixed order.
pub const PROGRAMS: &[(&str, &str)] = &[
    ("sum", SUM),
    ("sum_prime", SUM_PRIME),
    ("repeat", REPEAT),
    ("sum_t", SUM_T),
    ("fib_cps", FIB_CPS),
];

/// Parse a program with its directives and generate its clauses.
pub fn clauses(src: &str) -> Hccs {
    let (prog, text) = parse_source(src).expect("fixture parses");
    let d = parse_directives(&text).expect("fixture directives parse");
    let env = templates(&prog, &d).expect("fixture has templates");
    generate(&prog, &env, &d).expect("fixture generates")
}

pub fn sum_bot() -> Hccs {
    parse_hccs(SUM_BOT).expect("fixture parses").hccs
}
