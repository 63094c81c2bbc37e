//! Command line front end: table generation, validation, solving,
//! verification of given chains and prime graph reports.
//!
//! [`run`] executes one command in-process and returns its exit code and
//! output, so the binary is a thin wrapper.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chartab::{parse_table, CharacterTable, PaChain, TableError};
use crate::datasets;
use crate::help::{self, HelpError, SolutionStore, Status};
use crate::pq::{self, Outcome, PairPlan, PqError, PqOptions};
use crate::psl2gen::{gen_table, gen_table_with_brauer3, GenError, Psl2Params, Variant};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Help(#[from] HelpError),
    #[error(transparent)]
    Pq(#[from] PqError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "helix", version, about = "HeLP constraints for torsion units of integral group rings")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the character table of PSL(2,q) or PGL(2,q).
    Gen {
        #[arg(long, value_parser = parse_variant)]
        family: Variant,
        #[arg(long)]
        q: u64,
        /// Add the 3-modular Brauer character of degree 3 (PGL(2,3^f)).
        #[arg(long)]
        with_brauer3: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the consistency checks on a table.
    Validate {
        #[arg(long)]
        table: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Enumerate all HeLP solutions for units of one order.
    Solve {
        #[arg(long)]
        table: String,
        #[arg(long, default_value = "all")]
        chars: String,
        #[arg(long)]
        order: u64,
        /// Treat the classes of this prime order as one unknown; the other
        /// prime is order / s.
        #[arg(long)]
        s_constant: Option<u64>,
        #[arg(long, env = "HELIX_PQ_CAP", default_value_t = help::DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check one chain of partial augmentations against all constraints.
    Verify {
        #[arg(long)]
        table: String,
        #[arg(long, default_value = "all")]
        chars: String,
        #[arg(long)]
        order: u64,
        /// A chain file, or the chain JSON itself.
        #[arg(long)]
        chain: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prime graph report: which non-edges HeLP rules out.
    Pq {
        /// One or more tables; several give a combined verdict table.
        #[arg(long, required = true)]
        table: Vec<String>,
        #[arg(long, default_value = "all")]
        chars: String,
        /// Restrict to these pairs, e.g. `2-3,3-11`.
        #[arg(long)]
        pairs: Option<String>,
        /// Per-pair characters, `P-Q:SELECTION` or `P-Q:SELECTION:s=S`.
        #[arg(long)]
        plan: Vec<String>,
        /// Use the element orders of a partial table as if complete.
        #[arg(long)]
        assume_complete_orders: bool,
        #[arg(long, env = "HELIX_PQ_CAP", default_value_t = help::DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the embedded datasets.
    Datasets,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

/// Result of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parse arguments (the first one is the program name) and execute.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                RunOutput {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                RunOutput {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let result = match cli.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(CliError::Usage(format!("--jobs: {e}"))),
        },
        None => execute(&cli.command),
    };
    match result {
        Ok(out) => out,
        Err(e) => RunOutput {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Resolve `gen:psl2:Q`, `gen:pgl2:Q+brauer3`, `embedded:NAME` or a file path.
pub fn load_table(source: &str) -> Result<CharacterTable, CliError> {
    if let Some(rest) = source.strip_prefix("gen:") {
        let (rest, brauer) = match rest.strip_suffix("+brauer3") {
            Some(s) => (s, true),
            None => (rest, false),
        };
        let (family, q) = rest
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("table {source:?}: expected gen:FAMILY:Q")))?;
        let variant: Variant = family.parse().map_err(CliError::Usage)?;
        let q: u64 = q
            .parse()
            .map_err(|_| CliError::Usage(format!("table {source:?}: bad q {q:?}")))?;
        let params = Psl2Params::new(variant, q)?;
        return Ok(if brauer {
            gen_table_with_brauer3(params)?
        } else {
            gen_table(params)?
        });
    }
    if let Some(name) = source.strip_prefix("embedded:") {
        return Ok(datasets::load(name)?);
    }
    let text = read(source)?;
    Ok(parse_table(&text)?)
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_string(),
        source: e,
    })
}

fn emit(text: String, out: &Option<PathBuf>, code: i32) -> Result<RunOutput, CliError> {
    match out {
        Some(p) => {
            fs::write(p, &text).map_err(|e| CliError::Io {
                path: p.display().to_string(),
                source: e,
            })?;
            Ok(RunOutput {
                code,
                stdout: String::new(),
                stderr: format!("wrote {}\n", p.display()),
            })
        }
        None => Ok(RunOutput {
            code,
            stdout: text,
            stderr: String::new(),
        }),
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn parse_pair(s: &str) -> Result<(u64, u64), CliError> {
    let bad = || CliError::Usage(format!("bad prime pair {s:?}, expected P-Q"));
    let (p, q) = s.trim().split_once('-').ok_or_else(bad)?;
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    Ok((p.min(q), p.max(q)))
}

fn parse_plan(s: &str) -> Result<((u64, u64), PairPlan), CliError> {
    let bad = || CliError::Usage(format!("bad plan {s:?}, expected P-Q:SELECTION[:s=S]"));
    let mut parts = s.splitn(3, ':');
    let pair = parse_pair(parts.next().ok_or_else(bad)?)?;
    let characters = parts.next().ok_or_else(bad)?.to_string();
    let s_constant = match parts.next() {
        None => None,
        Some(x) => {
            let sv: u64 = x.strip_prefix("s=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let other = if sv == pair.0 {
                pair.1
            } else if sv == pair.1 {
                pair.0
            } else {
                return Err(bad());
            };
            Some((sv, other))
        }
    };
    Ok((pair, PairPlan { characters, s_constant }))
}

fn execute(cmd: &Command) -> Result<RunOutput, CliError> {
    match cmd {
        Command::Gen {
            family,
            q,
            with_brauer3,
            out,
        } => {
            let params = Psl2Params::new(*family, *q)?;
            let t = if *with_brauer3 {
                gen_table_with_brauer3(params)?
            } else {
                gen_table(params)?
            };
            let mut text = t.to_json_string();
            if !text.ends_with('\n') {
                text.push('\n');
            }
            emit(text, out, 0)
        }
        Command::Validate { table, format } => {
            let t = load_table(table)?;
            let report = t.validate();
            let code = if report.passed() { 0 } else { 1 };
            let text = match format {
                Format::Text => report.to_string(),
                Format::Json => render(&serde_json::to_value(&report).expect("report serializes")),
            };
            emit(text, &None, code)
        }
        Command::Solve {
            table,
            chars,
            order,
            s_constant,
            cap,
            format,
            out,
        } => {
            let t = load_table(table)?;
            let chars = t.select_characters(chars)?;
            let store = SolutionStore::new();
            let set = match s_constant {
                Some(s) => {
                    if *s == 0 || order % s != 0 {
                        return Err(CliError::Usage(format!("--s-constant {s} does not divide --order {order}")));
                    }
                    help::solve_s_constant(&t, &chars, *s, order / s, &store, *cap)?
                }
                None => help::solve_order(&t, &chars, *order, &store, *cap)?,
            };
            let code = if set.status == Status::Complete { 0 } else { 2 };
            let text = match format {
                Format::Text => set.to_text(&t),
                Format::Json => render(&set.to_json(&t)),
            };
            emit(text, out, code)
        }
        Command::Verify {
            table,
            chars,
            order,
            chain,
            format,
            out,
        } => {
            let t = load_table(table)?;
            let chars = t.select_characters(chars)?;
            let text = if chain.trim_start().starts_with('{') {
                chain.clone()
            } else {
                read(chain)?
            };
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("chain: {e}")))?;
            let chain = PaChain::from_json(&t, &v)?;
            let report = help::verify_chain(&t, &chars, *order, &chain)?;
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => render(&report.to_json()),
            };
            emit(text, out, 0)
        }
        Command::Pq {
            table,
            chars,
            pairs,
            plan,
            assume_complete_orders,
            cap,
            format,
            out,
        } => {
            let mut opts = PqOptions {
                default_characters: chars.clone(),
                cap: *cap,
                assume_complete_orders: *assume_complete_orders,
                ..PqOptions::default()
            };
            if let Some(p) = pairs {
                opts.pairs = Some(p.split(',').map(parse_pair).collect::<Result<_, _>>()?);
            }
            for p in plan {
                let (pair, pl) = parse_plan(p)?;
                opts.plans.insert(pair, pl);
            }
            let mut tables = Vec::new();
            let mut reports = Vec::new();
            for source in table {
                let t = load_table(source)?;
                reports.push(pq::pq_check(&t, &opts)?);
                tables.push(t);
            }
            let undecided_by_limits = reports.iter().flat_map(|r| &r.pairs).any(|p| {
                matches!(p.outcome, Outcome::Capped { .. } | Outcome::Infinite)
            });
            let failed = reports
                .iter()
                .flat_map(|r| &r.pairs)
                .any(|p| matches!(p.outcome, Outcome::Failed(_)));
            let code = if failed {
                1
            } else if undecided_by_limits {
                2
            } else {
                0
            };
            let text = match format {
                Format::Text => {
                    let mut s = String::new();
                    for r in &reports {
                        s.push_str(&r.to_text());
                        s.push('\n');
                    }
                    if reports.len() > 1 {
                        s.push_str(&pq::render_table(&reports));
                    }
                    s
                }
                Format::Json => render(&json!({
                    "reports": reports.iter().zip(&tables).map(|(r, t)| r.to_json(t)).collect::<Vec<_>>(),
                    "table": pq::render_table(&reports),
                })),
            };
            emit(text, out, code)
        }
        Command::Datasets => {
            let mut s = String::new();
            for (name, desc, _) in datasets::DATASETS {
                s.push_str(&format!("{name:<20} {desc}\n"));
            }
            emit(s, &None, 0)
        }
    }
}
