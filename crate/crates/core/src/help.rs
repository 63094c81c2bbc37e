//! The HeLP constraint engine: integer constraint systems on partial
//! augmentations, the solver driver over the divisor lattice, and solution
//! verification.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith;
use crate::chartab::{unit_character_value, CharacterTable, PaChain, PaKey, PaVector, TableError};
use crate::cyclo::{CycError, CycValue};
use crate::lattice::{self, AffineForm, Enumeration, LatticeError, Polyhedron};

/// Default bound on the number of enumerated points per system.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum HelpError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Cyc(#[from] CycError),
    #[error("character {character:?} has characteristic {p}, which divides the unit order {n}")]
    BrauerDividesOrder { character: String, p: u64, n: u64 },
    #[error("chain for order {n} has no entry for order {m}")]
    MissingChainEntry { n: u64, m: u64 },
    #[error("chain entry for order {m} has class {class:?} of order {order}")]
    ChainSupport { m: u64, class: String, order: u64 },
    #[error("trace of {character:?} at k = {k} is not an integer or overflows i64")]
    NonIntegral { character: String, k: u64 },
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("s-constant mode needs two distinct primes, got s = {s}, t = {t}")]
    BadPrimes { s: u64, t: u64 },
    #[error("unit order must be at least 2, got {0}")]
    BadOrder(u64),
    #[error("no characters selected")]
    NoCharacters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Requirement {
    /// value >= 0 and n | value
    NonnegDivisible(u64),
    Equals(i64),
    Congruent { residue: i64, modulus: u64 },
}

impl Requirement {
    pub fn holds(&self, v: i128) -> bool {
        match *self {
            Requirement::NonnegDivisible(n) => v >= 0 && v % n as i128 == 0,
            Requirement::Equals(k) => v == k as i128,
            Requirement::Congruent { residue, modulus } => (v - residue as i128).rem_euclid(modulus as i128) == 0,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::NonnegDivisible(n) => write!(f, ">= 0, = 0 mod {n}"),
            Requirement::Equals(k) => write!(f, "= {k}"),
            Requirement::Congruent { residue, modulus } => write!(f, "= {residue} mod {modulus}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Normalization,
    Character { name: String, k: u64 },
    /// Class-level congruence for the class `target` of `p`-th powers.
    Wagner { prime: u64, target: String },
    /// Aggregated congruence over all classes whose `p`-th powers have order `order`.
    WagnerAggregated { prime: u64, order: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Normalization => write!(f, "normalization"),
            Provenance::Character { name, k } => write!(f, "{name} k={k}"),
            Provenance::Wagner { prime, target } => write!(f, "wagner p={prime} {target}"),
            Provenance::WagnerAggregated { prime, order } => write!(f, "wagner p={prime} order {order} (aggregated)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<i64>,
    pub constant: i64,
    pub requirement: Requirement,
    pub provenance: Vec<Provenance>,
}

impl Row {
    pub fn value(&self, x: &[i64]) -> i128 {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant as i128, |a, (c, v)| a + *c as i128 * *v as i128)
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        self.requirement.holds(self.value(x))
    }
}

/// Coefficient-level record of the identity `sum_k T_k = n chi(1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierSum {
    pub character: String,
    pub coeff_sum: Vec<i128>,
    pub constant_sum: i128,
    pub expected: i128,
}

impl FourierSum {
    pub fn holds(&self) -> bool {
        self.coeff_sum.iter().all(|&c| c == 0) && self.constant_sum == self.expected
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub unit_order: u64,
    pub variables: Vec<PaKey>,
    pub variable_names: Vec<String>,
    pub characters: Vec<String>,
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
    pub fourier: Vec<FourierSum>,
}

static SYSTEMS_BUILT: AtomicUsize = AtomicUsize::new(0);
static FOURIER_FAILURES: AtomicUsize = AtomicUsize::new(0);

/// Systems built in this process and how many broke the Fourier sum rule.
pub fn fourier_stats() -> (usize, usize) {
    (SYSTEMS_BUILT.load(Ordering::Relaxed), FOURIER_FAILURES.load(Ordering::Relaxed))
}

impl ConstraintSystem {
    pub fn fourier_holds(&self) -> bool {
        self.fourier.iter().all(FourierSum::holds)
    }

    pub fn to_polyhedron(&self) -> Polyhedron {
        let mut p = Polyhedron::new(self.variables.len());
        for r in &self.rows {
            let f = AffineForm::new(r.coeffs.clone(), r.constant);
            match r.requirement {
                Requirement::NonnegDivisible(n) => {
                    p.inequalities.push(f.clone());
                    if n > 1 {
                        p.add_congruence(f, n, 0).expect("dimension matches");
                    }
                }
                Requirement::Equals(k) => {
                    let c = r.constant.checked_sub(k).expect("small constants");
                    p.equalities.push(AffineForm::new(r.coeffs.clone(), c));
                }
                Requirement::Congruent { residue, modulus } => {
                    p.add_congruence(f, modulus, residue).expect("dimension matches");
                }
            }
        }
        p
    }

    /// Human-readable rows, one per line.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "order {}  variables ({})  characters [{}]\n",
            self.unit_order,
            self.variable_names.join(", "),
            self.characters.join(", ")
        );
        for r in &self.rows {
            let f = AffineForm::new(r.coeffs.clone(), r.constant);
            let p = Polyhedron {
                dim: self.variables.len(),
                inequalities: vec![f],
                ..Polyhedron::default()
            };
            let body = p.dump(Some(&self.variable_names));
            let body = body.trim_end().trim_start_matches("ineq").trim().trim_end_matches(">= 0").trim();
            let prov: Vec<String> = r.provenance.iter().map(|p| p.to_string()).collect();
            out.push_str(&format!("{body} {}    [{}]\n", r.requirement, prov.join("; ")));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn check_chars(t: &CharacterTable, chars: &[usize], n: u64) -> Result<(), HelpError> {
    if chars.is_empty() {
        return Err(HelpError::NoCharacters);
    }
    for &c in chars {
        let ch = t.character(c);
        if ch.characteristic != 0 && n.is_multiple_of(ch.characteristic) {
            return Err(HelpError::BrauerDividesOrder {
                character: ch.name.clone(),
                p: ch.characteristic,
                n,
            });
        }
    }
    Ok(())
}

fn key_value(t: &CharacterTable, chi: usize, key: &PaKey) -> Result<CycValue, HelpError> {
    let pa = PaVector(vec![(*key, 1)]);
    Ok(unit_character_value(t, chi, &pa)?)
}

/// Pieces of the rows `T_k` shared by all systems of one order: the
/// coefficients of the unknowns, and the trace contributions of every lower
/// chain entry seen so far.
struct RowParts<'a> {
    t: &'a CharacterTable,
    n: u64,
    variables: &'a [PaKey],
    coeffs: Mutex<HashMap<(usize, u64), Vec<i64>>>,
    lower: Mutex<HashMap<(usize, u64, PaVector), Vec<i64>>>,
}

impl<'a> RowParts<'a> {
    fn new(t: &'a CharacterTable, n: u64, variables: &'a [PaKey]) -> RowParts<'a> {
        RowParts {
            t,
            n,
            variables,
            coeffs: Mutex::new(HashMap::new()),
            lower: Mutex::new(HashMap::new()),
        }
    }

    fn non_integral(&self, chi: usize, k: u64) -> HelpError {
        HelpError::NonIntegral {
            character: self.t.character(chi).name.clone(),
            k,
        }
    }

    fn coeffs(&self, chi: usize, k: u64) -> Result<Vec<i64>, HelpError> {
        if let Some(c) = self.coeffs.lock().unwrap().get(&(chi, k)) {
            return Ok(c.clone());
        }
        let mut out = Vec::with_capacity(self.variables.len());
        for key in self.variables {
            let v = key_value(self.t, chi, key)?;
            let tr = v.twisted_trace_i64(self.n, -((k % self.n) as i64))?;
            out.push(tr.ok_or_else(|| self.non_integral(chi, k))?);
        }
        self.coeffs.lock().unwrap().insert((chi, k), out.clone());
        Ok(out)
    }

    /// `Tr(chi(u^d) zeta_m^{-k})` for the entry of order `m = n/d`.
    fn lower_trace(&self, chi: usize, m: u64, pa: &PaVector, k: u64) -> Result<i64, HelpError> {
        let key = (chi, m, pa.clone());
        if let Some(v) = self.lower.lock().unwrap().get(&key) {
            return Ok(v[(k % m) as usize]);
        }
        let v = unit_character_value(self.t, chi, pa)?;
        let mut traces = Vec::with_capacity(m as usize);
        for e in 0..m {
            let tr = v.twisted_trace_i64(m, -(e as i64))?;
            traces.push(tr.ok_or_else(|| self.non_integral(chi, k))?);
        }
        let out = traces[(k % m) as usize];
        self.lower.lock().unwrap().insert(key, traces);
        Ok(out)
    }

    fn row(&self, chi: usize, k: u64, lower: &BTreeMap<u64, PaVector>) -> Result<Row, HelpError> {
        let n = self.n;
        let mut constant: i64 = 0;
        for d in arith::divisors(n).into_iter().filter(|&d| d > 1) {
            let m = n / d;
            let tr = if m == 1 {
                self.t.character(chi).degree as i64
            } else {
                let pa = lower.get(&m).ok_or(HelpError::MissingChainEntry { n, m })?;
                self.lower_trace(chi, m, pa, k)?
            };
            constant = constant.checked_add(tr).ok_or_else(|| self.non_integral(chi, k))?;
        }
        Ok(Row {
            coeffs: self.coeffs(chi, k)?,
            constant,
            requirement: Requirement::NonnegDivisible(n),
            provenance: vec![Provenance::Character {
                name: self.t.character(chi).name.clone(),
                k,
            }],
        })
    }
}

/// The row `T_k` of one character: `sum_{d | n, d > 1} Tr(chi(u^d) zeta_n^{-dk})
/// + sum_C eps_C Tr(chi(C) zeta_n^{-k})`, traces taken from `Q(zeta_{n/d})`.
pub fn character_row(
    t: &CharacterTable,
    chi: usize,
    n: u64,
    k: u64,
    lower: &BTreeMap<u64, PaVector>,
    variables: &[PaKey],
) -> Result<Row, HelpError> {
    RowParts::new(t, n, variables).row(chi, k, lower)
}

fn wagner_rows(
    t: &CharacterTable,
    n: u64,
    lower: &BTreeMap<u64, PaVector>,
    variables: &[PaKey],
    warnings: &mut Vec<String>,
) -> Result<Vec<Row>, HelpError> {
    let mut rows = Vec::new();
    for p in arith::prime_divisors(n) {
        let below = n / p;
        let lower_pa = if below > 1 {
            Some(lower.get(&below).ok_or(HelpError::MissingChainEntry { n, m: below })?)
        } else {
            None
        };
        // class-level form needs every p-th power and individual lower values
        let mut targets: Vec<Option<usize>> = Vec::with_capacity(variables.len());
        let mut missing: Option<String> = None;
        for key in variables {
            match key.class {
                Some(i) => match t.power(i, p) {
                    Some(j) => targets.push(Some(j)),
                    None => {
                        missing.get_or_insert_with(|| format!("power map {p} of class {} is unknown", t.class(i).name));
                        targets.push(None);
                    }
                },
                None => {
                    missing.get_or_insert_with(|| format!("order {} is aggregated", key.order));
                    targets.push(None);
                }
            }
        }
        if missing.is_none() {
            if let Some(pa) = lower_pa {
                if pa.0.iter().any(|(k, _)| k.class.is_none()) {
                    missing = Some(format!("the chain entry for order {below} is aggregated"));
                }
            }
        }
        match missing {
            None => {
                let mut cs: Vec<usize> = vec![t.identity()];
                cs.extend(t.classes_dividing(below));
                for c in cs {
                    let coeffs: Vec<i64> = targets.iter().map(|x| (*x == Some(c)) as i64).collect();
                    let rhs = match lower_pa {
                        Some(pa) => pa.get(&PaKey::class(t, c)),
                        None => (c == t.identity()) as i64,
                    };
                    push_congruence(
                        &mut rows,
                        coeffs,
                        rhs,
                        p,
                        Provenance::Wagner {
                            prime: p,
                            target: t.class(c).name.clone(),
                        },
                    );
                }
            }
            Some(why) => {
                warnings.push(format!("prime {p}: aggregated congruences used because {why}"));
                for m in arith::divisors(below) {
                    let coeffs: Vec<i64> = variables
                        .iter()
                        .map(|k| (k.order / arith::gcd(k.order, p) == m) as i64)
                        .collect();
                    let rhs = match lower_pa {
                        Some(pa) => pa.0.iter().filter(|(k, _)| k.order == m).map(|(_, v)| *v).sum(),
                        None => (m == 1) as i64,
                    };
                    push_congruence(
                        &mut rows,
                        coeffs,
                        rhs,
                        p,
                        Provenance::WagnerAggregated { prime: p, order: m },
                    );
                }
            }
        }
    }
    Ok(rows)
}

fn push_congruence(rows: &mut Vec<Row>, coeffs: Vec<i64>, rhs: i64, p: u64, prov: Provenance) {
    if coeffs.iter().all(|&c| c == 0) && arith::rem(rhs, p) == 0 {
        return;
    }
    rows.push(Row {
        coeffs,
        constant: 0,
        requirement: Requirement::Congruent {
            residue: arith::rem(rhs, p) as i64,
            modulus: p,
        },
        provenance: vec![prov],
    });
}

/// The default unknowns for a unit of order `n`: all classes of order dividing
/// `n` other than 1a.
pub fn default_variables(t: &CharacterTable, n: u64) -> Vec<PaKey> {
    t.classes_dividing(n).into_iter().map(|i| PaKey::class(t, i)).collect()
}

/// Build the system for units of order `n` whose proper powers are given by
/// `lower` (keyed by the order of the power).
pub fn build_system(
    t: &CharacterTable,
    chars: &[usize],
    n: u64,
    lower: &BTreeMap<u64, PaVector>,
) -> Result<ConstraintSystem, HelpError> {
    build_system_with(t, chars, n, lower, default_variables(t, n))
}

pub fn build_system_with(
    t: &CharacterTable,
    chars: &[usize],
    n: u64,
    lower: &BTreeMap<u64, PaVector>,
    variables: Vec<PaKey>,
) -> Result<ConstraintSystem, HelpError> {
    build_from_parts(&RowParts::new(t, n, &variables), chars, lower)
}

fn build_from_parts(
    parts: &RowParts<'_>,
    chars: &[usize],
    lower: &BTreeMap<u64, PaVector>,
) -> Result<ConstraintSystem, HelpError> {
    let (t, n, variables) = (parts.t, parts.n, parts.variables);
    if n < 2 {
        return Err(HelpError::BadOrder(n));
    }
    check_chars(t, chars, n)?;
    for m in arith::divisors(n).into_iter().filter(|&m| m > 1 && m < n) {
        if !lower.contains_key(&m) {
            return Err(HelpError::MissingChainEntry { n, m });
        }
    }
    let mut rows = vec![Row {
        coeffs: vec![1; variables.len()],
        constant: 0,
        requirement: Requirement::Equals(1),
        provenance: vec![Provenance::Normalization],
    }];
    let mut fourier = Vec::new();
    for &chi in chars {
        let mut coeff_sum = vec![0i128; variables.len()];
        let mut constant_sum = 0i128;
        for k in 0..n {
            let r = parts.row(chi, k, lower)?;
            for (s, c) in coeff_sum.iter_mut().zip(&r.coeffs) {
                *s += *c as i128;
            }
            constant_sum += r.constant as i128;
            rows.push(r);
        }
        fourier.push(FourierSum {
            character: t.character(chi).name.clone(),
            coeff_sum,
            constant_sum,
            expected: n as i128 * t.character(chi).degree as i128,
        });
    }
    let mut warnings = Vec::new();
    rows.extend(wagner_rows(t, n, lower, variables, &mut warnings)?);

    // merge identical rows, keeping every provenance
    let mut merged: Vec<Row> = Vec::new();
    let mut seen: HashMap<(Vec<i64>, i64, Requirement), usize> = HashMap::new();
    for r in rows {
        let key = (r.coeffs.clone(), r.constant, r.requirement);
        match seen.get(&key) {
            Some(&i) => merged[i].provenance.extend(r.provenance),
            None => {
                seen.insert(key, merged.len());
                merged.push(r);
            }
        }
    }
    let sys = ConstraintSystem {
        unit_order: n,
        variable_names: variables.iter().map(|k| k.name(t)).collect(),
        variables: variables.to_vec(),
        characters: chars.iter().map(|&c| t.character(c).name.clone()).collect(),
        rows: merged,
        warnings,
        fourier,
    };
    SYSTEMS_BUILT.fetch_add(1, Ordering::Relaxed);
    if !sys.fourier_holds() {
        FOURIER_FAILURES.fetch_add(1, Ordering::Relaxed);
    }
    Ok(sys)
}

// ---------------------------------------------------------------------------
// solutions

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Complete,
    Capped,
    Infinite,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Capped => "capped",
            Status::Infinite => "infinite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Trivial,
    Nontrivial,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Trivial => "trivial",
            Classification::Nontrivial => "nontrivial",
        }
    }
}

/// Trivial iff every partial augmentation in the chain is non-negative.
pub fn classify_chain(chain: &PaChain) -> Classification {
    if chain.is_trivial() {
        Classification::Trivial
    } else {
        Classification::Nontrivial
    }
}

/// A family `point + k * ray` of solutions, for one choice of lower chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfiniteWitness {
    pub lower: PaChain,
    pub variables: Vec<String>,
    pub point: Vec<i64>,
    pub ray: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct SolutionSet {
    pub group_name: String,
    pub unit_order: u64,
    pub characters: Vec<String>,
    pub s_constant: Option<(u64, u64)>,
    pub status: Status,
    pub chains: Vec<PaChain>,
    pub warnings: Vec<String>,
    pub witness: Option<InfiniteWitness>,
}

impl SolutionSet {
    pub fn count(&self) -> usize {
        self.chains.len()
    }

    pub fn to_json(&self, t: &CharacterTable) -> Value {
        let chains: Vec<Value> = self
            .chains
            .iter()
            .map(|c| {
                let mut v = c.to_json(t);
                v["classification"] = json!(classify_chain(c).as_str());
                v
            })
            .collect();
        let mut out = json!({
            "group": self.group_name,
            "unit_order": self.unit_order,
            "characters": self.characters,
            "status": self.status.as_str(),
            "count": self.chains.len(),
            "chains": chains,
            "warnings": self.warnings,
        });
        if let Some((s, tt)) = self.s_constant {
            out["s_constant"] = json!({ "s": s, "t": tt });
        }
        if let Some(w) = &self.witness {
            out["infinite_witness"] = json!({
                "lower": w.lower.to_json(t),
                "variables": w.variables,
                "point": w.point,
                "ray": w.ray,
            });
        }
        out
    }

    /// Tuple notation, one chain per line.
    pub fn to_text(&self, t: &CharacterTable) -> String {
        let mut out = format!(
            "{}: units of order {}, characters [{}]\n",
            self.group_name,
            self.unit_order,
            self.characters.join(", ")
        );
        if let Some((s, tt)) = self.s_constant {
            out.push_str(&format!("s-constant mode, s = {s}, t = {tt}\n"));
        }
        out.push_str(&format!("status {}, {} solutions\n", self.status.as_str(), self.chains.len()));
        if let Some(first) = self.chains.first() {
            out.push_str(&format!("{}\n", first.header(t)));
        }
        for c in &self.chains {
            out.push_str(&format!("{}  {}\n", c.tuple(), classify_chain(c).as_str()));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!(
                "infinite family over ({}): {:?} + k * {:?}, lower powers {}\n",
                w.variables.join(", "),
                w.point,
                w.ray,
                w.lower.tuple()
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct StoreKey {
    group: String,
    chars: Vec<String>,
    order: u64,
    s_constant: Option<(u64, u64)>,
    cap: usize,
}

/// Memo of solved orders, keyed by group, character set and order.
#[derive(Default)]
pub struct SolutionStore {
    map: Mutex<HashMap<StoreKey, Arc<SolutionSet>>>,
}

impl SolutionStore {
    pub fn new() -> SolutionStore {
        SolutionStore::default()
    }

    fn key(t: &CharacterTable, chars: &[usize], order: u64, s_constant: Option<(u64, u64)>, cap: usize) -> StoreKey {
        let mut names: Vec<String> = chars.iter().map(|&c| t.character(c).name.clone()).collect();
        names.sort();
        StoreKey {
            group: t.group_name.clone(),
            chars: names,
            order,
            s_constant,
            cap,
        }
    }

    fn get(&self, k: &StoreKey) -> Option<Arc<SolutionSet>> {
        self.map.lock().unwrap().get(k).cloned()
    }

    fn put(&self, k: StoreKey, v: Arc<SolutionSet>) {
        self.map.lock().unwrap().insert(k, v);
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Combine solutions for the orders `n/p`, `p | n`, into chains covering all
/// proper divisors of `n`.
fn lower_combinations(parts: &[Arc<SolutionSet>]) -> Vec<BTreeMap<u64, PaVector>> {
    let mut acc: Vec<BTreeMap<u64, PaVector>> = vec![BTreeMap::new()];
    for part in parts {
        let mut next = Vec::new();
        for base in &acc {
            for c in &part.chains {
                let ok = c
                    .entries
                    .iter()
                    .all(|(m, v)| base.get(m).is_none_or(|w| w == v));
                if ok {
                    let mut b = base.clone();
                    for (m, v) in &c.entries {
                        b.insert(*m, v.clone());
                    }
                    next.push(b);
                }
            }
        }
        acc = next;
    }
    let set: BTreeSet<BTreeMap<u64, PaVector>> = acc.into_iter().collect();
    set.into_iter().collect()
}

struct Partial {
    chains: Vec<PaChain>,
    status: Status,
    warnings: Vec<String>,
    witness: Option<InfiniteWitness>,
}

/// The action of `u -> u^j` for the units `j` modulo `n` on chains,
/// `eps_{K^j}(u^j) = eps_K(u)`. The HeLP rows of a character only get
/// permuted by it, so solution sets are unions of orbits. Available when the
/// power maps are known and the chosen characters satisfy
/// `chi(K^j) = chi(K)^{sigma_j}` on the classes involved.
struct Symmetry {
    maps: Vec<HashMap<PaKey, PaKey>>,
}

impl Symmetry {
    fn new(t: &CharacterTable, chars: &[usize], n: u64, variables: &[PaKey]) -> Option<Symmetry> {
        if variables.iter().any(|k| k.class.is_none()) {
            return None;
        }
        let classes = t.classes_dividing(n);
        let mut maps = Vec::new();
        'units: for j in (2..n).filter(|&j| arith::gcd(j, n) == 1) {
            let mut map = HashMap::new();
            for &c in &classes {
                // stored power maps may cover only some primes: try j + k ord(C)
                let m = t.class(c).element_order;
                let Some(d) = (0..64).find_map(|k| t.power_by(c, j % m + k * m)) else {
                    continue 'units;
                };
                if t.class(d).element_order != t.class(c).element_order {
                    return None;
                }
                for &chi in chars {
                    let ch = t.character(chi);
                    let (v, w) = (ch.value(c)?, ch.value(d)?);
                    if v.galois(j as i64).ok()? != *w {
                        return None;
                    }
                }
                map.insert(PaKey::class(t, c), PaKey::class(t, d));
            }
            let images: BTreeSet<&PaKey> = map.values().collect();
            if images.len() != map.len() {
                return None;
            }
            maps.push(map);
        }
        Some(Symmetry { maps })
    }

    fn apply_vec(map: &HashMap<PaKey, PaKey>, v: &PaVector) -> Option<PaVector> {
        let entries: Option<Vec<(PaKey, i64)>> = v.0.iter().map(|(k, x)| Some((*map.get(k)?, *x))).collect();
        Some(PaVector::new(entries?))
    }

    fn apply(map: &HashMap<PaKey, PaKey>, entries: &BTreeMap<u64, PaVector>) -> Option<BTreeMap<u64, PaVector>> {
        entries
            .iter()
            .map(|(m, v)| Some((*m, Symmetry::apply_vec(map, v)?)))
            .collect()
    }
}

/// Lower chains grouped into orbits: a representative and, for every other
/// member, the map carrying the representative to it.
#[allow(clippy::type_complexity)]
fn orbits<'a>(
    lowers: &'a [BTreeMap<u64, PaVector>],
    sym: Option<&'a Symmetry>,
) -> Vec<(&'a BTreeMap<u64, PaVector>, Vec<&'a HashMap<PaKey, PaKey>>)> {
    let Some(sym) = sym else {
        return lowers.iter().map(|l| (l, Vec::new())).collect();
    };
    let all: BTreeSet<&BTreeMap<u64, PaVector>> = lowers.iter().collect();
    let mut seen: BTreeSet<BTreeMap<u64, PaVector>> = BTreeSet::new();
    let mut out = Vec::new();
    for l in lowers {
        if seen.contains(l) {
            continue;
        }
        seen.insert(l.clone());
        let mut members = Vec::new();
        for map in &sym.maps {
            if let Some(img) = Symmetry::apply(map, l) {
                if all.contains(&img) && !seen.contains(&img) {
                    seen.insert(img);
                    members.push(map);
                }
            }
        }
        out.push((l, members));
    }
    out
}

fn solve_with_lowers(
    t: &CharacterTable,
    chars: &[usize],
    n: u64,
    lowers: &[BTreeMap<u64, PaVector>],
    variables: &[PaKey],
    cap: usize,
) -> Result<Partial, HelpError> {
    let parts = RowParts::new(t, n, variables);
    let sym = Symmetry::new(t, chars, n, variables);
    let reps = orbits(lowers, sym.as_ref());
    let results: Vec<Result<Partial, HelpError>> = reps
        .par_iter()
        .map(|(lower, images)| {
            let lower = *lower;
            let sys = build_from_parts(&parts, chars, lower)?;
            let poly = sys.to_polyhedron();
            let to_chain = |x: &Vec<i64>| {
                let mut entries = lower.clone();
                entries.insert(n, PaVector::new(variables.iter().copied().zip(x.iter().copied()).collect()));
                PaChain { unit_order: n, entries }
            };
            let lower_chain = PaChain {
                unit_order: n,
                entries: lower.clone(),
            };
            let mut part = match lattice::enumerate(&poly, cap)? {
                Enumeration::Finite(pts) => Partial {
                    chains: pts.iter().map(to_chain).collect(),
                    status: Status::Complete,
                    warnings: sys.warnings,
                    witness: None,
                },
                Enumeration::Capped(pts) => Partial {
                    chains: pts.iter().map(to_chain).collect(),
                    status: Status::Capped,
                    warnings: sys.warnings,
                    witness: None,
                },
                Enumeration::Infinite { ray, point } => Partial {
                    chains: Vec::new(),
                    status: Status::Infinite,
                    warnings: sys.warnings,
                    witness: Some(InfiniteWitness {
                        lower: lower_chain,
                        variables: sys.variable_names.clone(),
                        point,
                        ray,
                    }),
                },
            };
            let mut images_found = Vec::new();
            for map in images {
                for c in &part.chains {
                    if let Some(entries) = Symmetry::apply(map, &c.entries) {
                        images_found.push(PaChain { unit_order: n, entries });
                    }
                }
            }
            part.chains.extend(images_found);
            Ok(part)
        })
        .collect();
    let mut out = Partial {
        chains: Vec::new(),
        status: Status::Complete,
        warnings: Vec::new(),
        witness: None,
    };
    for r in results {
        let r = r?;
        out.chains.extend(r.chains);
        out.status = out.status.max(r.status);
        for w in r.warnings {
            if !out.warnings.contains(&w) {
                out.warnings.push(w);
            }
        }
        if out.witness.is_none() {
            out.witness = r.witness;
        }
    }
    out.chains.sort();
    out.chains.dedup();
    if out.chains.len() > cap {
        out.chains.truncate(cap);
        out.status = out.status.max(Status::Capped);
    }
    Ok(out)
}

/// All chains for units of order `n`, solving and caching the orders `n/p` first.
pub fn solve_order(
    t: &CharacterTable,
    chars: &[usize],
    n: u64,
    store: &SolutionStore,
    cap: usize,
) -> Result<Arc<SolutionSet>, HelpError> {
    if n < 2 {
        return Err(HelpError::BadOrder(n));
    }
    check_chars(t, chars, n)?;
    let key = SolutionStore::key(t, chars, n, None, cap);
    if let Some(s) = store.get(&key) {
        return Ok(s);
    }
    let mut parts = Vec::new();
    let mut status = Status::Complete;
    let mut warnings = Vec::new();
    for p in arith::prime_divisors(n) {
        if n / p > 1 {
            let sub = solve_order(t, chars, n / p, store, cap)?;
            status = status.max(sub.status);
            warnings.extend(sub.warnings.iter().map(|w| format!("order {}: {w}", n / p)));
            parts.push(sub);
        }
    }
    let lowers = lower_combinations(&parts);
    let part = solve_with_lowers(t, chars, n, &lowers, &default_variables(t, n), cap)?;
    warnings.extend(part.warnings);
    let set = Arc::new(SolutionSet {
        group_name: t.group_name.clone(),
        unit_order: n,
        characters: chars.iter().map(|&c| t.character(c).name.clone()).collect(),
        s_constant: None,
        status: status.max(part.status),
        chains: part.chains,
        warnings,
        witness: part.witness,
    });
    store.put(key, set.clone());
    Ok(set)
}

/// Units of order `s * t` with the order-`s` classes collapsed into one
/// aggregate unknown. Every character must be constant on the classes of
/// order `s`.
pub fn solve_s_constant(
    table: &CharacterTable,
    chars: &[usize],
    s: u64,
    t: u64,
    store: &SolutionStore,
    cap: usize,
) -> Result<Arc<SolutionSet>, HelpError> {
    if s == t || !arith::is_prime(s) || !arith::is_prime(t) {
        return Err(HelpError::BadPrimes { s, t });
    }
    let n = s * t;
    check_chars(table, chars, n)?;
    for &c in chars {
        crate::chartab::constant_value(table, c, s)?;
    }
    let key = SolutionStore::key(table, chars, n, Some((s, t)), cap);
    if let Some(x) = store.get(&key) {
        return Ok(x);
    }
    let sub = solve_order(table, chars, t, store, cap)?;
    let agg = PaVector(vec![(PaKey::aggregate(s), 1)]);
    let lowers: Vec<BTreeMap<u64, PaVector>> = sub
        .chains
        .iter()
        .map(|c| {
            let mut m = c.entries.clone();
            m.insert(s, agg.clone());
            m
        })
        .collect();
    let mut variables = vec![PaKey::aggregate(s)];
    variables.extend(
        default_variables(table, n)
            .into_iter()
            .filter(|k| k.order != s),
    );
    variables.sort();
    let part = solve_with_lowers(table, chars, n, &lowers, &variables, cap)?;
    let mut warnings: Vec<String> = sub.warnings.iter().map(|w| format!("order {t}: {w}")).collect();
    warnings.extend(part.warnings);
    let set = Arc::new(SolutionSet {
        group_name: table.group_name.clone(),
        unit_order: n,
        characters: chars.iter().map(|&c| table.character(c).name.clone()).collect(),
        s_constant: Some((s, t)),
        status: sub.status.max(part.status),
        chains: part.chains,
        warnings,
        witness: part.witness,
    });
    store.put(key, set.clone());
    Ok(set)
}

// ---------------------------------------------------------------------------
// verification

#[derive(Clone, Debug)]
pub struct RowCheck {
    pub provenance: Vec<Provenance>,
    pub requirement: Requirement,
    pub value: i128,
    pub satisfied: bool,
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    /// Order of the power `u^(n/order)` checked at this level.
    pub order: u64,
    pub rows: Vec<RowCheck>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub unit_order: u64,
    pub satisfied: bool,
    pub classification: Classification,
    pub levels: Vec<LevelReport>,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        self.levels
            .iter()
            .flat_map(|l| {
                l.rows.iter().filter(|r| !r.satisfied).map(move |r| {
                    let prov: Vec<String> = r.provenance.iter().map(|p| p.to_string()).collect();
                    format!("order {}: [{}] value {} violates {}", l.order, prov.join("; "), r.value, r.requirement)
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .map(|l| {
                json!({
                    "order": l.order,
                    "rows": l.rows.iter().map(|r| json!({
                        "provenance": r.provenance.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                        "requirement": r.requirement.to_string(),
                        "value": r.value.to_string(),
                        "satisfied": r.satisfied,
                    })).collect::<Vec<_>>(),
                    "warnings": l.warnings,
                })
            })
            .collect();
        json!({
            "unit_order": self.unit_order,
            "satisfied": self.satisfied,
            "classification": self.classification.as_str(),
            "levels": levels,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "order {}: {} ({})\n",
            self.unit_order,
            if self.satisfied { "satisfied" } else { "violated" },
            self.classification.as_str()
        );
        for l in &self.levels {
            let bad = l.rows.iter().filter(|r| !r.satisfied).count();
            out.push_str(&format!("  level {}: {} rows, {} violated\n", l.order, l.rows.len(), bad));
        }
        for f in self.failures() {
            out.push_str(&format!("  {f}\n"));
        }
        out
    }
}

/// Check every constraint, at every level of the chain, for the given characters.
pub fn verify_chain(
    t: &CharacterTable,
    chars: &[usize],
    n: u64,
    chain: &PaChain,
) -> Result<VerifyReport, HelpError> {
    if n < 2 || chain.unit_order != n {
        return Err(HelpError::BadOrder(n));
    }
    let mut levels = Vec::new();
    for m in arith::divisors(n).into_iter().filter(|&m| m > 1) {
        let vec = chain.entries.get(&m).ok_or(HelpError::MissingChainEntry { n, m })?;
        for (k, _) in &vec.0 {
            if k.order == 1 || m % k.order != 0 {
                return Err(HelpError::ChainSupport {
                    m,
                    class: k.name(t),
                    order: k.order,
                });
            }
        }
        let lower: BTreeMap<u64, PaVector> = chain
            .entries
            .iter()
            .filter(|(d, _)| **d < m && m % **d == 0)
            .map(|(d, v)| (*d, v.clone()))
            .collect();
        let variables = if vec.0.iter().any(|(k, _)| k.class.is_none()) {
            vec.0.iter().map(|(k, _)| *k).collect()
        } else {
            default_variables(t, m)
        };
        let x: Vec<i64> = variables.iter().map(|k| vec.get(k)).collect();
        let sys = build_system_with(t, chars, m, &lower, variables)?;
        let rows = sys
            .rows
            .iter()
            .map(|r| {
                let v = r.value(&x);
                RowCheck {
                    provenance: r.provenance.clone(),
                    requirement: r.requirement,
                    value: v,
                    satisfied: r.requirement.holds(v),
                }
            })
            .collect();
        levels.push(LevelReport {
            order: m,
            rows,
            warnings: sys.warnings,
        });
    }
    let satisfied = levels.iter().all(|l| l.rows.iter().all(|r| r.satisfied));
    Ok(VerifyReport {
        unit_order: n,
        satisfied,
        classification: classify_chain(chain),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartab::parse_table;

    fn table_7a() -> CharacterTable {
        parse_table(
            r#"{"group_name":"t7a","completeness":"partial","classes":[
              {"name":"1a","element_order":1},{"name":"2a","element_order":2},
              {"name":"2b","element_order":2},{"name":"5a","element_order":5}],
             "characters":[
              {"name":"chi","characteristic":0,"degree":175,"values":{"1a":175,"2a":31,"2b":7,"5a":0}},
              {"name":"phi","characteristic":7,"degree":5,"values":{"1a":5,"2a":-3,"2b":1,"5a":0}}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn phi_rows_at_order_two() {
        let t = table_7a();
        let phi = t.character_index("phi").unwrap();
        let sys = build_system(&t, &[phi], 2, &BTreeMap::new()).unwrap();
        // T_0 = 5 + (-3 e2a + e2b), T_1 = 5 - (-3 e2a + e2b)
        let t0 = Row {
            coeffs: vec![-3, 1],
            constant: 5,
            requirement: Requirement::NonnegDivisible(2),
            provenance: vec![],
        };
        let t1 = Row {
            coeffs: vec![3, -1],
            constant: 5,
            ..t0.clone()
        };
        for want in [t0, t1] {
            assert!(sys
                .rows
                .iter()
                .any(|r| r.coeffs == want.coeffs && r.constant == want.constant && r.requirement == want.requirement));
        }
        assert!(sys.fourier_holds());
    }

    #[test]
    fn brauer_dividing_order_is_rejected() {
        let t = table_7a();
        let phi = t.character_index("phi").unwrap();
        assert!(matches!(
            build_system(&t, &[phi], 7, &BTreeMap::new()),
            Err(HelpError::BrauerDividesOrder { .. })
        ));
    }
}
