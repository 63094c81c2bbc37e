//! Prime graphs and prime graph reports: run HeLP at every missing edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith;
use crate::chartab::{CharacterTable, PaChain, TableError};
use crate::help::{self, classify_chain, Classification, SolutionStore, Status};

#[derive(Debug, Error)]
pub enum PqError {
    #[error("table of {0} is partial; pass the coverage assertion to use its element orders")]
    PartialTable(String),
    #[error("{p}-{q} is not a pair of distinct primes of the group")]
    BadPair { p: u64, q: u64 },
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrimeGraph {
    pub vertices: BTreeSet<u64>,
    pub edges: BTreeSet<(u64, u64)>,
}

impl PrimeGraph {
    pub fn has_edge(&self, p: u64, q: u64) -> bool {
        self.edges.contains(&(p.min(q), p.max(q)))
    }

    /// Pairs of distinct vertices that are not joined.
    pub fn non_edges(&self) -> Vec<(u64, u64)> {
        let v: Vec<u64> = self.vertices.iter().copied().collect();
        let mut out = Vec::new();
        for (i, &p) in v.iter().enumerate() {
            for &q in &v[i + 1..] {
                if !self.has_edge(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }
}

impl fmt::Display for PrimeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.vertices.iter().map(|p| p.to_string()).collect();
        let e: Vec<String> = self.edges.iter().map(|(p, q)| format!("{p}-{q}")).collect();
        write!(f, "vertices {{{}}}, edges {{{}}}", v.join(", "), e.join(", "))
    }
}

/// Read the prime graph off the element orders. Partial tables need
/// `assume_complete_orders`.
pub fn prime_graph(t: &CharacterTable, assume_complete_orders: bool) -> Result<PrimeGraph, PqError> {
    if !t.is_full() && !assume_complete_orders {
        return Err(PqError::PartialTable(t.group_name.clone()));
    }
    let mut g = PrimeGraph::default();
    for o in t.element_orders() {
        let ps = arith::prime_divisors(o);
        g.vertices.extend(ps.iter().copied());
        for (i, &p) in ps.iter().enumerate() {
            for &q in &ps[i + 1..] {
                g.edges.insert((p, q));
            }
        }
    }
    Ok(g)
}

/// How one pair is attacked: a character selection, optionally s-constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairPlan {
    pub characters: String,
    pub s_constant: Option<(u64, u64)>,
}

#[derive(Clone, Debug)]
pub struct PqOptions {
    pub default_characters: String,
    pub plans: BTreeMap<(u64, u64), PairPlan>,
    /// Only these pairs, if given.
    pub pairs: Option<Vec<(u64, u64)>>,
    pub cap: usize,
    pub assume_complete_orders: bool,
}

impl Default for PqOptions {
    fn default() -> Self {
        PqOptions {
            default_characters: "all".to_string(),
            plans: BTreeMap::new(),
            pairs: None,
            cap: help::DEFAULT_CAP,
            assume_complete_orders: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    RuledOut,
    /// Solutions survive. If `exhaustive` is false the search hit the cap
    /// after finding a nontrivial chain, so `count` is only a lower bound.
    Undecided {
        count: usize,
        nontrivial: usize,
        sample: Vec<PaChain>,
        exhaustive: bool,
    },
    Capped {
        count: usize,
    },
    Infinite,
    Failed(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::RuledOut => "ruled_out",
            Outcome::Undecided { .. } => "undecided",
            Outcome::Capped { .. } => "capped",
            Outcome::Infinite => "infinite",
            Outcome::Failed(_) => "failed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub p: u64,
    pub q: u64,
    pub characters: Vec<String>,
    pub s_constant: Option<(u64, u64)>,
    pub outcome: Outcome,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    HelpSufficient,
    HelpInsufficient(Vec<(u64, u64)>),
}

#[derive(Clone, Debug)]
pub struct PqReport {
    pub group_name: String,
    pub graph: PrimeGraph,
    pub pairs: Vec<PairReport>,
    pub verdict: Verdict,
}

const SAMPLE: usize = 5;

fn run_pair(
    t: &CharacterTable,
    p: u64,
    q: u64,
    opts: &PqOptions,
    store: &SolutionStore,
) -> PairReport {
    let plan = opts.plans.get(&(p, q)).cloned().unwrap_or(PairPlan {
        characters: opts.default_characters.clone(),
        s_constant: None,
    });
    let n = p * q;
    let mut report = PairReport {
        p,
        q,
        characters: Vec::new(),
        s_constant: plan.s_constant,
        outcome: Outcome::RuledOut,
        warnings: Vec::new(),
    };
    let chars = match t.select_characters(&plan.characters) {
        Ok(c) => c,
        Err(e) => {
            report.outcome = Outcome::Failed(e.to_string());
            return report;
        }
    };
    // Brauer characters in a characteristic dividing pq say nothing here
    let chars: Vec<usize> = chars
        .into_iter()
        .filter(|&c| {
            let ch = t.character(c).characteristic;
            ch == 0 || !n.is_multiple_of(ch)
        })
        .collect();
    report.characters = chars.iter().map(|&c| t.character(c).name.clone()).collect();
    let res = match plan.s_constant {
        Some((s, tt)) => help::solve_s_constant(t, &chars, s, tt, store, opts.cap),
        None => help::solve_order(t, &chars, n, store, opts.cap),
    };
    match res {
        Err(e) => report.outcome = Outcome::Failed(e.to_string()),
        Ok(set) => {
            report.warnings = set.warnings.clone();
            report.outcome = match set.status {
                Status::Infinite => Outcome::Infinite,
                Status::Complete if set.chains.is_empty() => Outcome::RuledOut,
                Status::Complete | Status::Capped => {
                    let nontrivial: Vec<&PaChain> = set
                        .chains
                        .iter()
                        .filter(|c| classify_chain(c) == Classification::Nontrivial)
                        .collect();
                    if set.status == Status::Capped && nontrivial.is_empty() {
                        Outcome::Capped { count: set.count() }
                    } else {
                        // nontrivial chains first, they are the interesting ones
                        let mut sample: Vec<PaChain> = nontrivial.iter().take(SAMPLE).map(|c| (*c).clone()).collect();
                        if sample.is_empty() {
                            sample = set.chains.iter().take(SAMPLE).cloned().collect();
                        }
                        Outcome::Undecided {
                            count: set.count(),
                            nontrivial: nontrivial.len(),
                            sample,
                            exhaustive: set.status == Status::Complete,
                        }
                    }
                }
            };
        }
    }
    report
}

/// HeLP at every non-edge of the prime graph (or the requested pairs).
pub fn pq_check(t: &CharacterTable, opts: &PqOptions) -> Result<PqReport, PqError> {
    let graph = prime_graph(t, opts.assume_complete_orders)?;
    let pairs: Vec<(u64, u64)> = match &opts.pairs {
        None => graph.non_edges(),
        Some(list) => {
            let mut v = Vec::new();
            for &(a, b) in list {
                let (p, q) = (a.min(b), a.max(b));
                if p == q || !graph.vertices.contains(&p) || !graph.vertices.contains(&q) {
                    return Err(PqError::BadPair { p: a, q: b });
                }
                if !graph.has_edge(p, q) && !v.contains(&(p, q)) {
                    v.push((p, q));
                }
            }
            v.sort_unstable();
            v
        }
    };
    let store = SolutionStore::new();
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|&(p, q)| run_pair(t, p, q, opts, &store))
        .collect();
    let open: Vec<(u64, u64)> = reports
        .iter()
        .filter(|r| r.outcome != Outcome::RuledOut)
        .map(|r| (r.p, r.q))
        .collect();
    let verdict = if open.is_empty() {
        Verdict::HelpSufficient
    } else {
        Verdict::HelpInsufficient(open)
    };
    Ok(PqReport {
        group_name: t.group_name.clone(),
        graph,
        pairs: reports,
        verdict,
    })
}

impl PqReport {
    pub fn to_json(&self, t: &CharacterTable) -> Value {
        let pairs: Vec<Value> = self
            .pairs
            .iter()
            .map(|r| {
                let mut v = json!({
                    "pair": [r.p, r.q],
                    "outcome": r.outcome.label(),
                    "characters": r.characters,
                    "warnings": r.warnings,
                });
                if let Some((s, tt)) = r.s_constant {
                    v["s_constant"] = json!({ "s": s, "t": tt });
                }
                match &r.outcome {
                    Outcome::Undecided {
                        count,
                        nontrivial,
                        sample,
                        exhaustive,
                    } => {
                        v["count"] = json!(count);
                        v["exhaustive"] = json!(exhaustive);
                        v["nontrivial"] = json!(nontrivial);
                        v["sample"] = Value::Array(sample.iter().map(|c| c.to_json(t)).collect());
                    }
                    Outcome::Capped { count } => v["count"] = json!(count),
                    Outcome::Failed(msg) => v["error"] = json!(msg),
                    _ => {}
                }
                v
            })
            .collect();
        let verdict = match &self.verdict {
            Verdict::HelpSufficient => json!({ "kind": "help_sufficient" }),
            Verdict::HelpInsufficient(ps) => json!({
                "kind": "help_insufficient",
                "orders": ps.iter().map(|(p, q)| p * q).collect::<Vec<_>>(),
                "pairs": ps.iter().map(|(p, q)| [p, q]).collect::<Vec<_>>(),
            }),
        };
        json!({
            "group": self.group_name,
            "graph": {
                "vertices": self.graph.vertices,
                "edges": self.graph.edges.iter().map(|(p, q)| [p, q]).collect::<Vec<_>>(),
            },
            "pairs": pairs,
            "verdict": verdict,
        })
    }

    /// The group's entry in a two column "sufficient / not sufficient" table.
    pub fn cell(&self) -> String {
        match &self.verdict {
            Verdict::HelpSufficient => self.group_name.clone(),
            Verdict::HelpInsufficient(ps) => {
                let orders: Vec<String> = ps.iter().map(|(p, q)| (p * q).to_string()).collect();
                format!("{} ({})", self.group_name, orders.join(", "))
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\nprime graph: {}\n", self.group_name, self.graph);
        for r in &self.pairs {
            let detail = match &r.outcome {
                Outcome::RuledOut => "ruled out".to_string(),
                Outcome::Undecided {
                    count,
                    nontrivial,
                    exhaustive,
                    ..
                } => {
                    let at_least = if *exhaustive { "" } else { "at least " };
                    let s = if *count == 1 { "" } else { "s" };
                    format!("undecided, {at_least}{count} chain{s} ({nontrivial} nontrivial)")
                }
                Outcome::Capped { count } => format!("capped after {count} chains"),
                Outcome::Infinite => "infinitely many solutions".to_string(),
                Outcome::Failed(m) => format!("failed: {m}"),
            };
            let sc = r.s_constant.map_or(String::new(), |(s, t)| format!(", s-constant {s}/{t}"));
            out.push_str(&format!(
                "  {}-{} (order {}): {detail}  [{}{sc}]\n",
                r.p,
                r.q,
                r.p * r.q,
                r.characters.join(", ")
            ));
        }
        out.push_str(&render_table(std::slice::from_ref(self)));
        out
    }
}

/// Two columns: groups where HeLP settles the question, and the rest with
/// the open orders in parentheses.
pub fn render_table(reports: &[PqReport]) -> String {
    let left: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict == Verdict::HelpSufficient)
        .map(PqReport::cell)
        .collect();
    let right: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::HelpSufficient)
        .map(PqReport::cell)
        .collect();
    let lh = "HeLP sufficient";
    let rh = "HeLP not sufficient";
    let w = left.iter().map(String::len).chain([lh.len()]).max().unwrap_or(0);
    let mut out = format!("{lh:<w$} | {rh}\n{}-+-{}\n", "-".repeat(w), "-".repeat(rh.len()));
    for i in 0..left.len().max(right.len()) {
        let l = left.get(i).map_or("", String::as_str);
        let r = right.get(i).map_or("", String::as_str);
        out.push_str(format!("{l:<w$} | {r}\n").trim_end());
        out.push('\n');
    }
    out
}
