use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use hornopt_cli::bench::{run_suite, BenchOpts};
use hornopt_cli::oracle::{oracle_check, OracleOpts};
use hornopt_cli::report::{render_text, Report};
use hornopt_cli::{
    exit_code, load_hccs, load_program, parse_shape, read_file, run, Config, DriverError,
};

/// Pareto-optimal refinement type inference via existentially quantified
/// Horn constraint optimization.
#[derive(Parser, Debug)]
#[command(name = "hornopt", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every case of a benchmark directory and print a result table.
    Bench {
        dir: PathBuf,
        /// Per-case wall-clock limit in seconds.
        #[arg(long, default_value_t = 100.0)]
        timeout: f64,
        /// Write the table as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Number of cases run in parallel.
        #[arg(long, short = 'j', default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Program (`.ml`) or, with --solve-hccs, a clause file.
    file: Option<PathBuf>,
    /// Print the generated clauses and stop.
    #[arg(long)]
    emit_hccs: bool,
    /// Treat the input as clauses in the text format.
    #[arg(long)]
    solve_hccs: bool,
    /// Instrument function F with call counters for bounds analysis.
    #[arg(long, value_name = "F")]
    instrument_counters: Option<String>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Largest template shape, conjuncts x disjuncts.
    #[arg(long, value_name = "WxD", default_value = "2x1")]
    max_template: String,
    /// Write every SMT query to this directory.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    /// Check the inferred types against N sampled runs of the interpreter.
    #[arg(long, value_name = "N")]
    oracle_check: Option<usize>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Extra directives, in the same syntax as `(*@ … *)` comments.
    #[arg(long, short = 'd', value_name = "TEXT")]
    directive: Vec<String>,
    /// Iteration cap per optimization stage.
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
}

fn seconds(s: f64) -> Result<Duration, DriverError> {
    Duration::try_from_secs_f64(s).map_err(|_| DriverError::Usage(format!("bad timeout `{s}`")))
}

fn run_file(a: RunArgs) -> Result<i32, DriverError> {
    let path = a
        .file
        .ok_or_else(|| DriverError::Usage("no input file".into()))?;
    let src = read_file(&path)?;
    let cfg = Config {
        timeout: a.timeout.map(seconds).transpose()?,
        max_template: parse_shape(&a.max_template)?,
        max_iterations: a.max_iterations,
        dump_smt: a.dump_smt,
        instrument: a.instrument_counters,
        directives: a.directive.join("\n"),
        ..Config::default()
    };
    if let Some(dir) = &cfg.dump_smt {
        std::fs::create_dir_all(dir).map_err(|err| DriverError::Io {
            path: dir.display().to_string(),
            err,
        })?;
    }
    let problem = if a.solve_hccs {
        load_hccs(&src, &cfg)?
    } else {
        load_program(&src, &cfg)?
    };
    if a.emit_hccs {
        print!("{}", problem.hccs.pretty());
        return Ok(0);
    }
    let smt = cfg.smt();
    let out = run(&problem, &cfg, &smt);
    let oracle = match (a.oracle_check, &problem.source, out.solution()) {
        (Some(n), Some((prog, env)), Some(theta)) => Some(oracle_check(
            prog,
            &env.apply(theta),
            theta,
            &OracleOpts {
                samples: n,
                ..OracleOpts::default()
            },
        )),
        _ => None,
    };
    if a.json {
        println!("{}", Report::new(&out, smt.stats(), oracle).to_json());
    } else {
        print!("{}", render_text(&out));
        if let Some(o) = &oracle {
            println!("oracle: {}", o.summary());
        }
    }
    Ok(exit_code(out.result()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Some(Command::Bench {
            dir,
            timeout,
            json,
            jobs,
        }) => seconds(timeout).and_then(|t| {
            let opts = BenchOpts { timeout: t, jobs };
            let table = run_suite(&dir, &opts)?;
            print!("{}", table.render());
            if let Some(path) = json {
                std::fs::write(&path, table.to_json()).map_err(|err| DriverError::Io {
                    path: path.display().to_string(),
                    err,
                })?;
            }
            Ok(0)
        }),
        None => run_file(cli.run),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("hornopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
