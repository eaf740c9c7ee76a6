//! SMT-LIB 2 bridge to an external solver process.
//!
//! Every [`Smt::check`] spawns a fresh process, writes the whole script to
//! its stdin and reads the verdict plus `(get-value …)` answers back. The
//! solver command comes from [`SmtConfig`], by default `z3 -in`, overridable
//! through the `HORNOPT_SMT_CMD` environment variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::hccs::{Formula, LinExpr, PredApp, Term};

pub const SMT_CMD_ENV: &str = "HORNOPT_SMT_CMD";

#[derive(Clone, Debug)]
pub struct SmtConfig {
    pub cmd: Vec<String>,
    pub timeout: Duration,
    pub dump_dir: Option<PathBuf>,
}

impl Default for SmtConfig {
    fn default() -> SmtConfig {
        let cmd = std::env::var(SMT_CMD_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .unwrap_or_else(|| "z3 -in".to_string());
        SmtConfig {
            cmd: cmd.split_whitespace().map(str::to_string).collect(),
            timeout: Duration::from_secs(10),
            dump_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtVerdict {
    Sat(BTreeMap<String, i64>),
    Unsat,
    Unknown(String),
}

impl SmtVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SmtVerdict::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SmtVerdict::Unsat)
    }
}

/// Aggregate counters over all queries of one [`Smt`] handle.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct SmtStats {
    pub queries: usize,
    pub sat: usize,
    pub unsat: usize,
    pub unknown: usize,
    pub total_ms: u128,
}

/// An SMT-LIB script over integer constants.
#[derive(Clone, Debug, Default)]
pub struct Script {
    pub logic: String,
    pub consts: BTreeSet<String>,
    pub asserts: Vec<String>,
    pub comments: Vec<String>,
}

impl Script {
    pub fn new(logic: &str) -> Script {
        Script {
            logic: logic.to_string(),
            ..Default::default()
        }
    }

    pub fn declare(&mut self, name: &str) {
        self.consts.insert(name.to_string());
    }

    pub fn assert(&mut self, s: impl Into<String>) {
        self.asserts.push(s.into());
    }

    pub fn comment(&mut self, s: impl Into<String>) {
        self.comments.push(s.into());
    }

    /// Render with `(check-sat)` and a `get-value` over all constants.
    pub fn render(&self, timeout: Duration) -> String {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                let _ = writeln!(out, "; {line}");
            }
        }
        let _ = writeln!(out, "(set-option :timeout {})", timeout.as_millis().max(1));
        if !self.logic.is_empty() {
            let _ = writeln!(out, "(set-logic {})", self.logic);
        }
        for c in &self.consts {
            let _ = writeln!(out, "(declare-fun {} () Int)", sym(c));
        }
        for a in &self.asserts {
            let _ = writeln!(out, "(assert {a})");
        }
        out.push_str("(check-sat)\n");
        if !self.consts.is_empty() {
            let names: Vec<String> = self.consts.iter().map(|c| sym(c)).collect();
            let _ = writeln!(out, "(get-value ({}))", names.join(" "));
        }
        out
    }
}

/// Handle for issuing queries; cheap to share across threads.
#[derive(Debug)]
pub struct Smt {
    pub config: SmtConfig,
    stats: Mutex<SmtStats>,
    counter: AtomicUsize,
}

impl Default for Smt {
    fn default() -> Smt {
        Smt::new(SmtConfig::default())
    }
}

impl Smt {
    pub fn new(config: SmtConfig) -> Smt {
        Smt {
            config,
            stats: Mutex::new(SmtStats::default()),
            counter: AtomicUsize::new(0),
        }
    }

    pub fn stats(&self) -> SmtStats {
        self.stats.lock().map(|s| s.clone()).unwrap_or_default()
    }

    pub fn check(&self, script: &Script) -> SmtVerdict {
        self.check_with_timeout(script, self.config.timeout)
    }

    pub fn check_with_timeout(&self, script: &Script, timeout: Duration) -> SmtVerdict {
        let text = script.render(timeout);
        let n = self.counter.fetch_add(1, Ordering::SeqCst);
        if let Some(dir) = &self.config.dump_dir {
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join(format!("query_{n:05}.smt2")), &text);
        }
        let start = Instant::now();
        let verdict = match self.run(&text, timeout) {
            Ok(out) => parse_response(&out, &script.consts),
            Err(e) => SmtVerdict::Unknown(e),
        };
        let elapsed = start.elapsed().as_millis();
        log::debug!("smt query {n}: {:?} in {elapsed} ms", verdict_tag(&verdict));
        if let Ok(mut s) = self.stats.lock() {
            s.queries += 1;
            s.total_ms += elapsed;
            match verdict {
                SmtVerdict::Sat(_) => s.sat += 1,
                SmtVerdict::Unsat => s.unsat += 1,
                SmtVerdict::Unknown(_) => s.unknown += 1,
            }
        }
        verdict
    }

    fn run(&self, text: &str, timeout: Duration) -> Result<String, String> {
        let (prog, args) = self
            .config
            .cmd
            .split_first()
            .ok_or_else(|| "empty solver command".to_string())?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot spawn `{prog}`: {e}"))?;
        let mut stdin = child.stdin.take().ok_or("no stdin")?;
        let mut stdout = child.stdout.take().ok_or("no stdout")?;
        let (tx, rx) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let r = stdout.read_to_string(&mut s);
            let _ = tx.send(r.map(|_| s));
        });
        let input = text.to_string();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(input.as_bytes());
            let _ = stdin.write_all(b"(exit)\n");
        });
        let grace = Duration::from_millis(2000);
        let res = rx.recv_timeout(timeout + grace);
        let out = match res {
            Ok(Ok(s)) => Ok(s),
            Ok(Err(e)) => Err(format!("read error: {e}")),
            Err(_) => {
                let _ = child.kill();
                Err("timeout".to_string())
            }
        };
        let _ = child.wait();
        let _ = writer.join();
        let _ = reader.join();
        out
    }
}

fn verdict_tag(v: &SmtVerdict) -> &'static str {
    match v {
        SmtVerdict::Sat(_) => "sat",
        SmtVerdict::Unsat => "unsat",
        SmtVerdict::Unknown(_) => "unknown",
    }
}

/// Parse the solver's answer: a verdict line, then on `sat` a `get-value` list.
pub fn parse_response(out: &str, consts: &BTreeSet<String>) -> SmtVerdict {
    let sexps = match parse_sexps(out) {
        Ok(s) => s,
        Err(e) => return SmtVerdict::Unknown(format!("unparsable solver output: {e}")),
    };
    let mut iter = sexps.iter();
    let verdict = loop {
        match iter.next() {
            Some(Sexp::Atom(a)) if a == "sat" || a == "unsat" || a == "unknown" => {
                break a.as_str()
            }
            Some(Sexp::List(l)) if matches!(l.first(), Some(Sexp::Atom(a)) if a == "error") => {
                continue
            }
            Some(_) => continue,
            None => {
                let msg = out.lines().next().unwrap_or("").trim();
                return SmtVerdict::Unknown(format!("no verdict in solver output: {msg}"));
            }
        }
    };
    match verdict {
        "unsat" => SmtVerdict::Unsat,
        "unknown" => SmtVerdict::Unknown("solver returned unknown".into()),
        _ => {
            let mut model = BTreeMap::new();
            for s in iter {
                let Sexp::List(pairs) = s else { continue };
                for p in pairs {
                    let Sexp::List(kv) = p else { continue };
                    if kv.len() != 2 {
                        continue;
                    }
                    let Sexp::Atom(k) = &kv[0] else { continue };
                    let k = k.trim_matches('|').to_string();
                    match int_value(&kv[1]) {
                        Some(v) => {
                            model.insert(k, v);
                        }
                        None => {
                            return SmtVerdict::Unknown(format!("non-integer model value for {k}"))
                        }
                    }
                }
            }
            if let Some(missing) = consts.iter().find(|c| !model.contains_key(*c)) {
                return SmtVerdict::Unknown(format!("model lacks value for {missing}"));
            }
            SmtVerdict::Sat(model)
        }
    }
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(l) => match l.as_slice() {
            [Sexp::Atom(m), v] if m == "-" => int_value(v).and_then(|n| n.checked_neg()),
            _ => None,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(s: &str) -> Result<Vec<Sexp>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_sexp(&chars, &mut pos)?);
    }
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() {
        if c[*pos].is_whitespace() {
            *pos += 1;
        } else if c[*pos] == ';' {
            while *pos < c.len() && c[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_sexp(c: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(c, pos);
    match c.get(*pos) {
        None => Err("unexpected end".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(c, pos);
                match c.get(*pos) {
                    None => return Err("unclosed list".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    _ => items.push(parse_sexp(c, pos)?),
                }
            }
        }
        Some(')') => Err("unexpected )".into()),
        Some('"') => {
            let start = *pos;
            *pos += 1;
            while *pos < c.len() {
                if c[*pos] == '"' {
                    if c.get(*pos + 1) == Some(&'"') {
                        *pos += 2;
                        continue;
                    }
                    *pos += 1;
                    return Ok(Sexp::Atom(c[start..*pos].iter().collect()));
                }
                *pos += 1;
            }
            Err("unclosed string".into())
        }
        Some('|') => {
            let start = *pos;
            *pos += 1;
            while *pos < c.len() && c[*pos] != '|' {
                *pos += 1;
            }
            *pos += 1;
            Ok(Sexp::Atom(c[start..(*pos).min(c.len())].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < c.len() && !c[*pos].is_whitespace() && c[*pos] != '(' && c[*pos] != ')' {
                *pos += 1;
            }
            Ok(Sexp::Atom(c[start..*pos].iter().collect()))
        }
    }
}

/// Quoted SMT symbol.
pub fn sym(name: &str) -> String {
    format!("|{name}|")
}

pub fn int(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

pub fn lin(e: &LinExpr) -> String {
    let mut parts: Vec<String> = e
        .coeffs
        .iter()
        .map(|(x, a)| {
            if *a == 1 {
                sym(x)
            } else {
                format!("(* {} {})", int(*a), sym(x))
            }
        })
        .collect();
    if e.constant != 0 || parts.is_empty() {
        parts.push(int(e.constant));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

pub fn term(t: &Term) -> String {
    lin(&t.lin())
}

pub fn and(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

pub fn or(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

/// Render a formula. Predicate applications are delegated to `app`.
pub fn formula_with(f: &Formula, app: &mut dyn FnMut(&PredApp) -> String) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Leq(a, b) => format!("(<= {} {})", term(a), term(b)),
        Formula::Pred(p) => app(p),
        Formula::Not(g) => format!("(not {})", formula_with(g, app)),
        Formula::And(gs) => and(gs.iter().map(|g| formula_with(g, app)).collect()),
        Formula::Or(gs) => or(gs.iter().map(|g| formula_with(g, app)).collect()),
        Formula::Implies(a, b) => format!("(=> {} {})", formula_with(a, app), formula_with(b, app)),
    }
}

/// Render a predicate-free formula; leftover applications become `false`.
pub fn formula(f: &Formula) -> String {
    formula_with(f, &mut |_| "false".to_string())
}

pub fn quantified(q: &str, vars: &BTreeSet<String>, body: String) -> String {
    if vars.is_empty() {
        return body;
    }
    let binders: Vec<String> = vars.iter().map(|v| format!("({} Int)", sym(v))).collect();
    format!("({q} ({}) {body})", binders.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sat_model() {
        let consts: BTreeSet<String> = ["c0".to_string(), "P#1".to_string()].into();
        let out = "sat\n((|c0| (- 1))\n (|P#1| 3))\n";
        let v = parse_response(out, &consts);
        let SmtVerdict::Sat(m) = v else {
            panic!("{v:?}")
        };
        assert_eq!(m["c0"], -1);
        assert_eq!(m["P#1"], 3);
    }

    #[test]
    fn parses_unsat_with_trailing_error() {
        let out = "unsat\n(error \"line 5 column 10: model is not available\")\n";
        assert_eq!(parse_response(out, &BTreeSet::new()), SmtVerdict::Unsat);
    }

    #[test]
    fn rejects_rationals() {
        let consts: BTreeSet<String> = ["c".to_string()].into();
        let out = "sat\n((|c| (/ 1 2)))\n";
        assert!(matches!(
            parse_response(out, &consts),
            SmtVerdict::Unknown(_)
        ));
    }

    #[test]
    fn renders_script() {
        let mut s = Script::new("QF_LIA");
        s.declare("a");
        s.assert("(<= |a| 0)");
        let text = s.render(Duration::from_secs(1));
        assert!(text.contains("(declare-fun |a| () Int)"));
        assert!(text.contains("(get-value (|a|))"));
    }
}
