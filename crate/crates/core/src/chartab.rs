//! Character tables: the data model, the file format, validation and the
//! evaluation of characters on units given by partial augmentations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::cyclo::{Accumulator, CycError, CycValue};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error("duplicate class name {0:?}")]
    DuplicateClass(String),
    #[error("duplicate character name {0:?}")]
    DuplicateCharacter(String),
    #[error("table has no class 1a of element order 1")]
    MissingIdentity,
    #[error("class {class:?}: power map for {prime} points to missing class {target:?}")]
    MissingPowerTarget { class: String, prime: u64, target: String },
    #[error("class {class:?}: {prime} is not a prime")]
    BadPowerPrime { class: String, prime: u64 },
    #[error("class {class:?}: {prime}-th power {target:?} has order {got}, expected {want}")]
    PowerOrder { class: String, prime: u64, target: String, got: u64, want: u64 },
    #[error("character {character:?}: value on unknown class {class:?}")]
    UnknownClass { character: String, class: String },
    #[error("character {character:?} of characteristic {p} has a value on {p}-singular class {class:?}")]
    BrauerOnSingular { character: String, p: u64, class: String },
    #[error("character {character:?}: value on 1a is {value}, declared degree {degree}")]
    DegreeMismatch { character: String, value: String, degree: u64 },
    #[error("character {character:?}: characteristic {p} is neither 0 nor a prime")]
    BadCharacteristic { character: String, p: u64 },
    #[error("no character matches {0:?}")]
    UnknownCharacter(String),
    #[error("no class named {0:?}")]
    UnknownClassName(String),
    #[error("character {character:?} is not defined on class {class:?}")]
    Undefined { character: String, class: String },
    #[error("character {character:?} is not constant on the classes of order {order}")]
    NotConstant { character: String, order: u64 },
    #[error("class {class:?} of order {order} cannot appear in a vector for order {m}")]
    BadSupport { class: String, order: u64, m: u64 },
    #[error("cyclotomic value for {context}: {source}")]
    Cyc { context: String, source: CycError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completeness {
    Full,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjClass {
    pub name: String,
    pub element_order: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub power_maps: BTreeMap<u64, String>,
}

/// A character as it appears in the file format: values keyed by class name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCharacter {
    pub name: String,
    #[serde(default)]
    pub characteristic: u64,
    pub degree: u64,
    pub values: BTreeMap<String, CycValue>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    group_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<u64>,
    completeness: Completeness,
    classes: Vec<ConjClass>,
    characters: Vec<RawCharacter>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub name: String,
    pub characteristic: u64,
    pub degree: u64,
    values: Vec<Option<CycValue>>,
}

impl Character {
    /// Value on the class with the given canonical index, if defined.
    pub fn value(&self, class: usize) -> Option<&CycValue> {
        self.values[class].as_ref()
    }

    pub fn values(&self) -> &[Option<CycValue>] {
        &self.values
    }

    pub fn is_ordinary(&self) -> bool {
        self.characteristic == 0
    }
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub group_name: String,
    pub order: Option<u64>,
    pub completeness: Completeness,
    classes: Vec<ConjClass>,
    characters: Vec<Character>,
    class_index: HashMap<String, usize>,
    char_index: HashMap<String, usize>,
}

fn class_key(c: &ConjClass) -> (u64, usize, String) {
    (c.element_order, c.name.len(), c.name.clone())
}

fn expected_power_order(order: u64, p: u64) -> u64 {
    order / arith::gcd(order, p)
}

impl CharacterTable {
    /// Build a table, enforcing the load-time invariants and putting the
    /// classes in canonical order.
    pub fn new(
        group_name: impl Into<String>,
        order: Option<u64>,
        completeness: Completeness,
        mut classes: Vec<ConjClass>,
        raw: Vec<RawCharacter>,
    ) -> Result<CharacterTable, TableError> {
        classes.sort_by_key(class_key);
        let mut class_index = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if c.element_order == 0 {
                return Err(TableError::Malformed(format!("class {:?} has element order 0", c.name)));
            }
            if class_index.insert(c.name.clone(), i).is_some() {
                return Err(TableError::DuplicateClass(c.name.clone()));
            }
        }
        match class_index.get("1a") {
            Some(&i) if classes[i].element_order == 1 => {}
            _ => return Err(TableError::MissingIdentity),
        }
        for c in &classes {
            for (&p, target) in &c.power_maps {
                if !arith::is_prime(p) {
                    return Err(TableError::BadPowerPrime { class: c.name.clone(), prime: p });
                }
                let Some(&t) = class_index.get(target) else {
                    return Err(TableError::MissingPowerTarget {
                        class: c.name.clone(),
                        prime: p,
                        target: target.clone(),
                    });
                };
                let want = expected_power_order(c.element_order, p);
                let got = classes[t].element_order;
                if got != want {
                    return Err(TableError::PowerOrder {
                        class: c.name.clone(),
                        prime: p,
                        target: target.clone(),
                        got,
                        want,
                    });
                }
            }
        }
        let mut characters = Vec::with_capacity(raw.len());
        let mut char_index = HashMap::new();
        for r in raw {
            if r.characteristic != 0 && !arith::is_prime(r.characteristic) {
                return Err(TableError::BadCharacteristic {
                    character: r.name,
                    p: r.characteristic,
                });
            }
            let mut values = vec![None; classes.len()];
            for (cname, v) in r.values {
                let Some(&i) = class_index.get(&cname) else {
                    return Err(TableError::UnknownClass { character: r.name, class: cname });
                };
                if r.characteristic != 0 && classes[i].element_order.is_multiple_of(r.characteristic) {
                    return Err(TableError::BrauerOnSingular {
                        character: r.name,
                        p: r.characteristic,
                        class: cname,
                    });
                }
                values[i] = Some(v);
            }
            let one = class_index["1a"];
            let deg = CycValue::from_int(r.degree as i64);
            if values[one].as_ref() != Some(&deg) {
                let value = values[one].as_ref().map_or("nothing".to_string(), |v| v.to_string());
                return Err(TableError::DegreeMismatch {
                    character: r.name,
                    value,
                    degree: r.degree,
                });
            }
            if char_index.insert(r.name.clone(), characters.len()).is_some() {
                return Err(TableError::DuplicateCharacter(r.name));
            }
            characters.push(Character {
                name: r.name,
                characteristic: r.characteristic,
                degree: r.degree,
                values,
            });
        }
        Ok(CharacterTable {
            group_name: group_name.into(),
            order,
            completeness,
            classes,
            characters,
            class_index,
            char_index,
        })
    }

    pub fn classes(&self) -> &[ConjClass] {
        &self.classes
    }

    pub fn class(&self, idx: usize) -> &ConjClass {
        &self.classes[idx]
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_index.get(name).copied()
    }

    pub fn class_by_name(&self, name: &str) -> Result<usize, TableError> {
        self.class_index(name).ok_or_else(|| TableError::UnknownClassName(name.to_string()))
    }

    pub fn identity(&self) -> usize {
        self.class_index["1a"]
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn character(&self, idx: usize) -> &Character {
        &self.characters[idx]
    }

    pub fn character_index(&self, name: &str) -> Option<usize> {
        self.char_index.get(name).copied()
    }

    pub fn is_full(&self) -> bool {
        self.completeness == Completeness::Full
    }

    /// Classes (other than 1a) whose element order divides `n`, canonical order.
    pub fn classes_dividing(&self, n: u64) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&i| self.classes[i].element_order > 1 && n.is_multiple_of(self.classes[i].element_order))
            .collect()
    }

    pub fn classes_of_order(&self, m: u64) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&i| self.classes[i].element_order == m)
            .collect()
    }

    pub fn element_orders(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.classes.iter().map(|c| c.element_order).collect();
        v.dedup();
        v
    }

    /// Class of `p`-th powers. Uses the stored map, or infers it only when it
    /// is forced: prime-order classes power to 1a, and on a full table a
    /// unique class of the right order is the answer.
    pub fn power(&self, idx: usize, p: u64) -> Option<usize> {
        let c = &self.classes[idx];
        if let Some(t) = c.power_maps.get(&p) {
            return self.class_index(t);
        }
        let want = expected_power_order(c.element_order, p);
        if want == 1 {
            return Some(self.identity());
        }
        if self.is_full() {
            if let [only] = self.classes_of_order(want).as_slice() {
                return Some(*only);
            }
        }
        None
    }

    /// Class of `k`-th powers, composing prime power maps.
    pub fn power_by(&self, idx: usize, k: u64) -> Option<usize> {
        let mut cur = idx;
        for (p, e) in arith::factor(k) {
            for _ in 0..e {
                cur = self.power(cur, p)?;
            }
        }
        Some(cur)
    }

    /// Resolve a comma separated character selection.
    ///
    /// Each item is a character name, `all`, `ordinary`, `chi<d>` (the first
    /// ordinary character of degree `d`), `deg=<d>` (all of them) or
    /// `brauer<p>` (all characters of characteristic `p`).
    pub fn select_characters(&self, selection: &str) -> Result<Vec<usize>, TableError> {
        let mut out: Vec<usize> = Vec::new();
        for item in selection.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let found: Vec<usize> = if let Some(i) = self.character_index(item) {
                vec![i]
            } else if item == "all" {
                (0..self.characters.len()).collect()
            } else if item == "ordinary" {
                self.indices_where(|c| c.characteristic == 0)
            } else if let Some(d) = item.strip_prefix("deg=").and_then(|d| d.parse::<u64>().ok()) {
                self.indices_where(|c| c.degree == d && c.characteristic == 0)
            } else if let Some(d) = item.strip_prefix("chi").and_then(|d| d.parse::<u64>().ok()) {
                self.indices_where(|c| c.degree == d && c.characteristic == 0)
                    .into_iter()
                    .take(1)
                    .collect()
            } else if let Some(p) = item.strip_prefix("brauer").and_then(|d| d.parse::<u64>().ok()) {
                self.indices_where(|c| c.characteristic == p)
            } else {
                Vec::new()
            };
            if found.is_empty() {
                return Err(TableError::UnknownCharacter(item.to_string()));
            }
            out.extend(found);
        }
        if out.is_empty() {
            return Err(TableError::UnknownCharacter(selection.to_string()));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn indices_where(&self, f: impl Fn(&Character) -> bool) -> Vec<usize> {
        (0..self.characters.len()).filter(|&i| f(&self.characters[i])).collect()
    }

    /// Copy of the table keeping only the listed characters.
    pub fn restrict_characters(&self, chars: &[usize]) -> CharacterTable {
        let mut t = self.clone();
        t.characters = chars.iter().map(|&i| self.characters[i].clone()).collect();
        t.char_index = t
            .characters
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        t
    }

    fn to_file(&self) -> TableFile {
        TableFile {
            group_name: self.group_name.clone(),
            order: self.order,
            completeness: self.completeness,
            classes: self.classes.clone(),
            characters: self
                .characters
                .iter()
                .map(|c| RawCharacter {
                    name: c.name.clone(),
                    characteristic: c.characteristic,
                    degree: c.degree,
                    values: c
                        .values
                        .iter()
                        .enumerate()
                        .filter_map(|(i, v)| v.clone().map(|v| (self.classes[i].name.clone(), v)))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("table serialises")
    }

    /// Local checks always, global identities only for full tables.
    pub fn validate(&self) -> ValidationReport {
        crate::chartab::validation::run(self)
    }
}

pub fn parse_table(text: &str) -> Result<CharacterTable, TableError> {
    let f: TableFile = serde_json::from_str(text).map_err(|e| TableError::Malformed(e.to_string()))?;
    CharacterTable::new(f.group_name, f.order, f.completeness, f.classes, f.characters)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub group_name: String,
    pub completeness: Completeness,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> Vec<String> {
        self.checks
            .iter()
            .flat_map(|c| c.violations.iter().map(move |v| format!("{}: {v}", c.name)))
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "table {} ({:?})", self.group_name, self.completeness)?;
        for c in &self.checks {
            writeln!(f, "  {:<22} {}", c.name, if c.passed { "ok" } else { "FAILED" })?;
            for v in c.violations.iter().take(20) {
                writeln!(f, "    {v}")?;
            }
            if c.violations.len() > 20 {
                writeln!(f, "    ... {} more", c.violations.len() - 20)?;
            }
        }
        Ok(())
    }
}

mod validation {
    use super::*;

    fn check(name: &str, violations: Vec<String>) -> Check {
        Check {
            name: name.to_string(),
            passed: violations.is_empty(),
            violations,
        }
    }

    pub(super) fn run(t: &CharacterTable) -> ValidationReport {
        let mut checks = vec![integrality(t), power_map_orders(t)];
        if t.is_full() {
            let ordinary: Vec<&Character> = t.characters.iter().filter(|c| c.is_ordinary()).collect();
            checks.push(defined_everywhere(t, &ordinary));
            checks.push(counting(t, &ordinary));
            if checks.iter().all(|c| c.passed) {
                checks.push(row_orthogonality(t, &ordinary));
                checks.push(column_orthogonality(t, &ordinary));
                checks.push(power_maps(t));
            }
        }
        ValidationReport {
            group_name: t.group_name.clone(),
            completeness: t.completeness,
            checks,
        }
    }

    fn integrality(t: &CharacterTable) -> Check {
        let mut v = Vec::new();
        for c in &t.characters {
            for (i, x) in c.values.iter().enumerate() {
                if let Some(x) = x {
                    if !x.is_integral() {
                        v.push(format!("{} on {} is {x}, not an algebraic integer", c.name, t.classes[i].name));
                    }
                }
            }
        }
        check("integrality", v)
    }

    fn power_map_orders(t: &CharacterTable) -> Check {
        let mut v = Vec::new();
        for c in &t.classes {
            for (&p, target) in &c.power_maps {
                let want = expected_power_order(c.element_order, p);
                let got = t.classes[t.class_index[target]].element_order;
                if got != want {
                    v.push(format!("{}^{p} = {target} has order {got}, expected {want}", c.name));
                }
            }
        }
        check("power_map_orders", v)
    }

    fn defined_everywhere(t: &CharacterTable, ordinary: &[&Character]) -> Check {
        let mut v = Vec::new();
        for c in ordinary {
            for (i, x) in c.values.iter().enumerate() {
                if x.is_none() {
                    v.push(format!("{} has no value on {}", c.name, t.classes[i].name));
                }
            }
        }
        for c in &t.classes {
            if c.size.is_none() {
                v.push(format!("class {} has no size", c.name));
            }
        }
        check("complete_data", v)
    }

    fn counting(t: &CharacterTable, ordinary: &[&Character]) -> Check {
        let mut v = Vec::new();
        if t.classes.len() != ordinary.len() {
            v.push(format!(
                "{} classes but {} ordinary characters",
                t.classes.len(),
                ordinary.len()
            ));
        }
        let sizes: u128 = t.classes.iter().map(|c| c.size.unwrap_or(0) as u128).sum();
        let squares: u128 = ordinary.iter().map(|c| (c.degree as u128).pow(2)).sum();
        let order = t.order.map(|o| o as u128).unwrap_or(sizes);
        if sizes != order {
            v.push(format!("class sizes sum to {sizes}, group order {order}"));
        }
        if squares != order {
            v.push(format!("squared degrees sum to {squares}, group order {order}"));
        }
        for c in &t.classes {
            if let Some(s) = c.size {
                if !order.is_multiple_of(s as u128) {
                    v.push(format!("class {} size {s} does not divide {order}", c.name));
                }
            }
        }
        check("counting", v)
    }

    fn row_orthogonality(t: &CharacterTable, ordinary: &[&Character]) -> Check {
        let order = t.order.unwrap_or_else(|| t.classes.iter().map(|c| c.size.unwrap()).sum());
        let conj: Vec<Vec<CycValue>> = ordinary
            .iter()
            .map(|c| c.values.iter().map(|x| x.as_ref().unwrap().conj()).collect())
            .collect();
        let pairs: Vec<(usize, usize)> = (0..ordinary.len())
            .flat_map(|a| (a..ordinary.len()).map(move |b| (a, b)))
            .collect();
        use rayon::prelude::*;
        let mut v: Vec<String> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let mut acc = Accumulator::new();
                for (i, cl) in t.classes.iter().enumerate() {
                    let x = ordinary[a].values[i].as_ref().unwrap();
                    acc.add_product(x, &conj[b][i], cl.size.unwrap() as i64);
                }
                let got = acc.finish();
                let want = CycValue::from_int(if a == b { order as i64 } else { 0 });
                (got != want).then(|| {
                    format!(
                        "<{}, {}> sums to {got}, expected {want}",
                        ordinary[a].name, ordinary[b].name
                    )
                })
            })
            .collect();
        v.sort();
        check("row_orthogonality", v)
    }

    fn column_orthogonality(t: &CharacterTable, ordinary: &[&Character]) -> Check {
        let order = t.order.unwrap_or_else(|| t.classes.iter().map(|c| c.size.unwrap()).sum());
        let k = t.classes.len();
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
        use rayon::prelude::*;
        let mut v: Vec<String> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let mut acc = Accumulator::new();
                for c in ordinary {
                    let x = c.values[a].as_ref().unwrap();
                    let y = c.values[b].as_ref().unwrap().conj();
                    acc.add_product(x, &y, 1);
                }
                let got = acc.finish();
                let want = if a == b {
                    let s = t.classes[a].size.unwrap();
                    CycValue::from_rational(BigRational::new((order as i64).into(), (s as i64).into()))
                } else {
                    CycValue::zero()
                };
                (got != want).then(|| {
                    format!(
                        "classes {} and {} sum to {got}, expected {want}",
                        t.classes[a].name, t.classes[b].name
                    )
                })
            })
            .collect();
        v.sort();
        check("column_orthogonality", v)
    }

    fn power_maps(t: &CharacterTable) -> Check {
        let mut v = Vec::new();
        let order = t.order.unwrap_or(0);
        let primes = arith::prime_divisors(order);
        for (i, c) in t.classes.iter().enumerate() {
            for &r in &primes {
                for &s in &primes {
                    let rs = t.power(i, r).and_then(|x| t.power(x, s));
                    let sr = t.power(i, s).and_then(|x| t.power(x, r));
                    match (rs, sr) {
                        (Some(a), Some(b)) if a != b => v.push(format!(
                            "{}: applying {r} then {s} gives {}, the other way {}",
                            c.name, t.classes[a].name, t.classes[b].name
                        )),
                        (None, _) | (_, None) => {
                            v.push(format!("{}: power maps for {r} and {s} not determined", c.name))
                        }
                        _ => {}
                    }
                }
                // Galois compatibility: chi(C^r) = sigma_r(chi(C)) when r is prime to |C|.
                if c.element_order % r != 0 {
                    if let Some(target) = t.power(i, r) {
                        for ch in t.characters.iter().filter(|ch| ch.is_ordinary()) {
                            let (Some(x), Some(y)) = (&ch.values[i], &ch.values[target]) else {
                                continue;
                            };
                            let gx = x.galois_mod(r as i64, c.element_order);
                            if gx.as_ref() != Ok(y) {
                                v.push(format!(
                                    "{}: value on {}^{r} = {} is not the Galois image of its value on {}",
                                    ch.name, c.name, t.classes[target].name, c.name
                                ));
                            }
                        }
                    }
                }
            }
        }
        check("power_maps", v)
    }
}

/// Key of one partial augmentation: a class, or the sum over all classes of
/// one element order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaKey {
    pub order: u64,
    pub class: Option<usize>,
}

impl PaKey {
    pub fn class(t: &CharacterTable, idx: usize) -> PaKey {
        PaKey {
            order: t.class(idx).element_order,
            class: Some(idx),
        }
    }

    pub fn aggregate(order: u64) -> PaKey {
        PaKey { order, class: None }
    }

    pub fn name(&self, t: &CharacterTable) -> String {
        match self.class {
            Some(i) => t.class(i).name.clone(),
            None => format!("{}*", self.order),
        }
    }

    fn parse(t: &CharacterTable, name: &str) -> Result<PaKey, TableError> {
        if let Some(o) = name.strip_suffix('*').and_then(|o| o.parse::<u64>().ok()) {
            return Ok(PaKey::aggregate(o));
        }
        Ok(PaKey::class(t, t.class_by_name(name)?))
    }
}

/// Partial augmentations of one unit, sorted by key. Aggregate keys stand for
/// the sum over all classes of their order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaVector(pub Vec<(PaKey, i64)>);

impl PaVector {
    pub fn new(mut entries: Vec<(PaKey, i64)>) -> PaVector {
        entries.sort_by_key(|e| e.0);
        PaVector(entries)
    }

    /// The vector with a single 1 on `idx` over the classes dividing `m`.
    pub fn indicator(t: &CharacterTable, m: u64, idx: usize) -> PaVector {
        PaVector(
            t.classes_dividing(m)
                .into_iter()
                .map(|i| (PaKey::class(t, i), (i == idx) as i64))
                .collect(),
        )
    }

    pub fn get(&self, key: &PaKey) -> i64 {
        self.0.iter().find(|e| e.0 == *key).map_or(0, |e| e.1)
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|e| e.1).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|e| e.1 >= 0)
    }

    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().map(|e| e.1)
    }

    pub fn named(&self, t: &CharacterTable) -> BTreeMap<String, i64> {
        self.0.iter().map(|(k, v)| (k.name(t), *v)).collect()
    }

    /// Build from class names; classes of order dividing `m` that are not
    /// mentioned get 0. Aggregates are written as `<order>*`.
    pub fn from_named(
        t: &CharacterTable,
        m: u64,
        named: &BTreeMap<String, i64>,
    ) -> Result<PaVector, TableError> {
        let mut given: BTreeMap<PaKey, i64> = BTreeMap::new();
        for (name, &v) in named {
            let key = PaKey::parse(t, name)?;
            if key.order == 1 || !m.is_multiple_of(key.order) {
                return Err(TableError::BadSupport {
                    class: name.clone(),
                    order: key.order,
                    m,
                });
            }
            given.insert(key, v);
        }
        let aggregated: Vec<u64> = given.keys().filter(|k| k.class.is_none()).map(|k| k.order).collect();
        for i in t.classes_dividing(m) {
            let k = PaKey::class(t, i);
            if !aggregated.contains(&k.order) {
                given.entry(k).or_insert(0);
            } else if given.get(&k).copied().unwrap_or(0) != 0 {
                return Err(TableError::BadSupport {
                    class: t.class(i).name.clone(),
                    order: k.order,
                    m,
                });
            } else {
                given.remove(&k);
            }
        }
        Ok(PaVector(given.into_iter().collect()))
    }
}

/// Partial augmentations of `u^(n/m)` for every divisor `m > 1` of the unit
/// order `n`, keyed by `m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaChain {
    pub unit_order: u64,
    pub entries: BTreeMap<u64, PaVector>,
}

impl PaChain {
    /// The chain of a group element from class `idx`, if the power maps are known.
    pub fn trivial(t: &CharacterTable, idx: usize) -> Option<PaChain> {
        let n = t.class(idx).element_order;
        let mut entries = BTreeMap::new();
        for m in arith::divisors(n).into_iter().filter(|&m| m > 1) {
            let target = t.power_by(idx, n / m)?;
            entries.insert(m, PaVector::indicator(t, m, target));
        }
        Some(PaChain { unit_order: n, entries })
    }

    pub fn top(&self) -> &PaVector {
        &self.entries[&self.unit_order]
    }

    /// All values, `m` ascending then canonical key order.
    pub fn flatten(&self) -> Vec<i64> {
        self.entries.values().flat_map(|v| v.values()).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.entries.values().all(PaVector::is_nonnegative)
    }

    pub fn to_json(&self, t: &CharacterTable) -> serde_json::Value {
        let entries: serde_json::Map<String, serde_json::Value> = self
            .entries
            .iter()
            .map(|(m, v)| (m.to_string(), serde_json::to_value(v.named(t)).unwrap()))
            .collect();
        serde_json::json!({ "unit_order": self.unit_order, "entries": entries })
    }

    pub fn from_json(t: &CharacterTable, v: &serde_json::Value) -> Result<PaChain, TableError> {
        #[derive(Deserialize)]
        struct ChainFile {
            unit_order: u64,
            entries: BTreeMap<u64, BTreeMap<String, i64>>,
        }
        let f: ChainFile =
            serde_json::from_value(v.clone()).map_err(|e| TableError::Malformed(format!("chain: {e}")))?;
        let mut entries = BTreeMap::new();
        for (m, named) in &f.entries {
            entries.insert(*m, PaVector::from_named(t, *m, named)?);
        }
        Ok(PaChain {
            unit_order: f.unit_order,
            entries,
        })
    }

    /// Tuple header in the usual notation, e.g. `(e_2a(u^3), e_3a(u^2), e_2a(u), e_3a(u))`.
    pub fn header(&self, t: &CharacterTable) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .flat_map(|(m, v)| {
                let d = self.unit_order / m;
                v.0.iter()
                    .map(move |(k, _)| {
                        let u = if d == 1 { "u".to_string() } else { format!("u^{d}") };
                        format!("e_{}({u})", k.name(t))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn tuple(&self) -> String {
        let parts: Vec<String> = self.flatten().iter().map(|x| x.to_string()).collect();
        format!("({})", parts.join(", "))
    }
}

/// `sum_C eps_C * chi(C)` for the unit described by `pa`.
pub fn unit_character_value(
    t: &CharacterTable,
    chi: usize,
    pa: &PaVector,
) -> Result<CycValue, TableError> {
    let ch = t.character(chi);
    let mut acc = Accumulator::new();
    for (key, eps) in &pa.0 {
        if *eps == 0 {
            continue;
        }
        let value = match key.class {
            Some(i) => ch.value(i).cloned().ok_or_else(|| TableError::Undefined {
                character: ch.name.clone(),
                class: t.class(i).name.clone(),
            })?,
            None => constant_value(t, chi, key.order)?,
        };
        acc.add(&value, *eps);
    }
    Ok(acc.finish())
}

/// The common value of a character on all classes of one element order.
pub fn constant_value(t: &CharacterTable, chi: usize, order: u64) -> Result<CycValue, TableError> {
    let ch = t.character(chi);
    let mut common: Option<&CycValue> = None;
    for i in t.classes_of_order(order) {
        let v = ch.value(i).ok_or_else(|| TableError::Undefined {
            character: ch.name.clone(),
            class: t.class(i).name.clone(),
        })?;
        match common {
            None => common = Some(v),
            Some(c) if c == v => {}
            Some(_) => {
                return Err(TableError::NotConstant {
                    character: ch.name.clone(),
                    order,
                })
            }
        }
    }
    Ok(common.cloned().unwrap_or_else(CycValue::zero))
}
