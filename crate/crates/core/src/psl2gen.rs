//! Generic character tables of PSL(2,q) and PGL(2,q).
//!
//! Classes are parameterised by exponents in the split torus (cyclic of order
//! `(q-1)/d`) and the nonsplit torus (cyclic of order `(q+1)/d`), so power
//! maps are exponent arithmetic.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use thiserror::Error;

use crate::arith;
use crate::chartab::{CharacterTable, Completeness, ConjClass, RawCharacter, TableError};
use crate::cyclo::{root_pair, CycValue};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("q = {0} is too small, need q >= 4")]
    TooSmall(u64),
    #[error("the degree-3 Brauer character lives on PGL(2,q); PSL(2,{0}) has odd characteristic")]
    BrauerNeedsPgl(u64),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Psl,
    Pgl,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Variant, String> {
        match s.to_ascii_lowercase().as_str() {
            "psl" | "psl2" => Ok(Variant::Psl),
            "pgl" | "pgl2" => Ok(Variant::Pgl),
            other => Err(format!("unknown family {other:?}, expected psl2 or pgl2")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Psl2Params {
    pub p: u64,
    pub f: u32,
    pub q: u64,
    pub d: u64,
    pub variant: Variant,
}

impl Psl2Params {
    pub fn new(variant: Variant, q: u64) -> Result<Psl2Params, GenError> {
        let (p, f) = arith::prime_power(q).ok_or(GenError::NotPrimePower(q))?;
        if q < 4 {
            return Err(GenError::TooSmall(q));
        }
        Ok(Psl2Params {
            p,
            f,
            q,
            d: arith::gcd(2, q - 1),
            variant,
        })
    }

    fn effective_d(&self) -> u64 {
        match self.variant {
            Variant::Psl => self.d,
            Variant::Pgl => 1,
        }
    }

    pub fn split_order(&self) -> u64 {
        (self.q - 1) / self.effective_d()
    }

    pub fn nonsplit_order(&self) -> u64 {
        (self.q + 1) / self.effective_d()
    }

    pub fn group_order(&self) -> u64 {
        self.q * (self.q * self.q - 1) / self.effective_d()
    }

    pub fn group_name(&self) -> String {
        let fam = if self.variant == Variant::Pgl && self.d == 2 { "PGL" } else { "PSL" };
        format!("{fam}(2,{})", self.q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Identity,
    // 0 carries the + sign of the half-discriminant characters
    Unipotent(u8),
    Split(u64),
    Nonsplit(u64),
}

struct Cls {
    kind: Kind,
    order: u64,
    size: u64,
    name: String,
}

fn suffix(mut idx: usize) -> String {
    const A: u8 = b'a';
    if idx < 26 {
        return ((A + idx as u8) as char).to_string();
    }
    idx -= 26;
    let mut s = String::new();
    s.push((A + (idx / 26) as u8) as char);
    s.push((A + (idx % 26) as u8) as char);
    s
}

/// Representatives of `(Z/m)^x / {+-1}` in naming order: powers of the
/// smallest generator when that group is cyclic, else ascending.
fn naming_orbit(m: u64) -> Vec<u64> {
    let norm = |x: u64| x.min(m - x);
    let mut reps: Vec<u64> = (1..=m / 2).filter(|&l| arith::gcd(l, m) == 1).collect();
    if m <= 2 || reps.len() <= 1 {
        return if m <= 2 { vec![1] } else { reps };
    }
    let target = reps.len() as u64;
    for g in 2..m {
        if arith::gcd(g, m) != 1 {
            continue;
        }
        let mut seq = vec![1u64];
        let mut x = g % m;
        while norm(x) != 1 {
            seq.push(norm(x));
            x = x * g % m;
        }
        if seq.len() as u64 == target {
            return seq;
        }
    }
    reps.sort_unstable();
    reps
}

fn legendre(a: u64, p: u64) -> i64 {
    match arith::mod_pow(a % p, (p - 1) / 2, p) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// `sqrt(q*)` with `q* = (-1)^((q-1)/2) q`, for odd `q = p^f`.
fn sqrt_q_star(p: u64, f: u32) -> CycValue {
    if f.is_multiple_of(2) {
        return CycValue::from_int(p.pow(f / 2) as i64);
    }
    let gauss = CycValue::from_terms(
        p,
        (1..p).map(|a| (a as i64, BigRational::from_integer(legendre(a, p).into()))),
    )
    .expect("positive conductor");
    gauss.scale_int(p.pow((f - 1) / 2) as i64)
}

struct Layout {
    params: Psl2Params,
    classes: Vec<Cls>,
    by_kind: HashMap<Kind, usize>,
}

impl Layout {
    fn build(params: Psl2Params) -> Layout {
        let q = params.q;
        let a = params.split_order();
        let b = params.nonsplit_order();
        let g = params.group_order();
        let mut raw: Vec<(Kind, u64, u64)> = vec![(Kind::Identity, 1, 1)];
        let unip: u64 = if params.variant == Variant::Psl && params.d == 2 { 2 } else { 1 };
        for s in 0..unip {
            raw.push((Kind::Unipotent(s as u8), params.p, (q * q - 1) / unip));
        }
        for i in 1..=a / 2 {
            let invol = 2 * i == a;
            let size = g / if invol { 2 * a } else { a };
            raw.push((Kind::Split(i), a / arith::gcd(i, a), size));
        }
        for j in 1..=b / 2 {
            let invol = 2 * j == b;
            let size = g / if invol { 2 * b } else { b };
            raw.push((Kind::Nonsplit(j), b / arith::gcd(j, b), size));
        }
        // Naming: order, then source, then orbit position.
        let mut by_order: BTreeMap<u64, Vec<(Kind, u64)>> = BTreeMap::new();
        for (k, o, s) in &raw {
            by_order.entry(*o).or_default().push((*k, *s));
        }
        let psl_invol_split = q % 4 == 1;
        let mut classes = Vec::new();
        for (order, mut members) in by_order {
            let orbit = naming_orbit(order);
            let rank = |k: &Kind| -> (u8, u64) {
                match *k {
                    Kind::Identity => (0, 0),
                    Kind::Unipotent(s) => (1, s as u64),
                    Kind::Split(i) => {
                        let l = i / (a / order);
                        let pos = orbit.iter().position(|&x| x == l).unwrap_or(0) as u64;
                        (if order == 2 && !psl_invol_split { 3 } else { 2 }, pos)
                    }
                    Kind::Nonsplit(j) => {
                        let l = j / (b / order);
                        let pos = orbit.iter().position(|&x| x == l).unwrap_or(0) as u64;
                        (if order == 2 && !psl_invol_split { 2 } else { 3 }, pos)
                    }
                }
            };
            members.sort_by_key(|(k, _)| rank(k));
            for (idx, (kind, size)) in members.into_iter().enumerate() {
                classes.push(Cls {
                    kind,
                    order,
                    size,
                    name: format!("{order}{}", suffix(idx)),
                });
            }
        }
        let by_kind = classes.iter().enumerate().map(|(i, c)| (c.kind, i)).collect();
        Layout {
            params,
            classes,
            by_kind,
        }
    }

    fn power(&self, kind: Kind, r: u64) -> Kind {
        let prm = &self.params;
        let torus = |x: u64, n: u64, mk: fn(u64) -> Kind| {
            let y = x * r % n;
            if y == 0 {
                Kind::Identity
            } else {
                mk(y.min(n - y))
            }
        };
        match kind {
            Kind::Identity => Kind::Identity,
            Kind::Unipotent(s) => {
                if r == prm.p {
                    Kind::Identity
                } else if prm.f % 2 == 1 && legendre(r % prm.p, prm.p) == -1 {
                    Kind::Unipotent(s ^ 1).clamp_unipotent(self)
                } else {
                    Kind::Unipotent(s)
                }
            }
            Kind::Split(i) => torus(i, prm.split_order(), Kind::Split),
            Kind::Nonsplit(j) => torus(j, prm.nonsplit_order(), Kind::Nonsplit),
        }
    }

    fn conj_classes(&self) -> Vec<ConjClass> {
        let primes = arith::prime_divisors(self.params.group_order());
        self.classes
            .iter()
            .map(|c| ConjClass {
                name: c.name.clone(),
                element_order: c.order,
                size: Some(c.size),
                power_maps: primes
                    .iter()
                    .map(|&r| (r, self.classes[self.by_kind[&self.power(c.kind, r)]].name.clone()))
                    .collect(),
            })
            .collect()
    }

    fn character(&self, name: &str, degree: u64, value: impl Fn(Kind) -> Option<CycValue>) -> RawCharacter {
        self.character_p(name, 0, degree, value)
    }

    fn character_p(
        &self,
        name: &str,
        characteristic: u64,
        degree: u64,
        value: impl Fn(Kind) -> Option<CycValue>,
    ) -> RawCharacter {
        RawCharacter {
            name: name.to_string(),
            characteristic,
            degree,
            values: self
                .classes
                .iter()
                .filter_map(|c| {
                    let v = if c.kind == Kind::Identity {
                        Some(CycValue::from_int(degree as i64))
                    } else {
                        value(c.kind)
                    };
                    v.map(|v| (c.name.clone(), v))
                })
                .collect(),
        }
    }

    fn ordinary_characters(&self) -> Vec<RawCharacter> {
        let prm = self.params;
        let q = prm.q;
        let a = prm.split_order();
        let b = prm.nonsplit_order();
        let int = |x: i64| Some(CycValue::from_int(x));
        let sign = |x: u64| if x.is_multiple_of(2) { 1 } else { -1 };
        let mut out = vec![self.character("1", 1, |_| int(1))];
        let pgl_odd = prm.variant == Variant::Pgl && prm.d == 2;
        let steinberg = |k: Kind, twist: bool| -> Option<CycValue> {
            let t = |x: u64| if twist { sign(x) } else { 1 };
            match k {
                Kind::Identity => int(q as i64),
                Kind::Unipotent(_) => int(0),
                Kind::Split(i) => int(t(i)),
                Kind::Nonsplit(j) => int(-t(j)),
            }
        };
        out.push(self.character("St", q, |k| steinberg(k, false)));
        if pgl_odd {
            out.push(self.character("tau", 1, |k| match k {
                Kind::Split(i) => int(sign(i)),
                Kind::Nonsplit(j) => int(sign(j)),
                _ => int(1),
            }));
            out.push(self.character("St.tau", q, |k| steinberg(k, true)));
        }
        for k in 1..a {
            if 2 * k >= a {
                break;
            }
            out.push(self.character(&format!("ps{k}"), q + 1, |c| match c {
                Kind::Unipotent(_) => int(1),
                Kind::Split(i) => Some(root_pair(a, (k * i) as i64)),
                _ => int(0),
            }));
        }
        for k in 1..b {
            if 2 * k >= b {
                break;
            }
            out.push(self.character(&format!("ds{k}"), q - 1, |c| match c {
                Kind::Unipotent(_) => int(-1),
                Kind::Nonsplit(j) => Some(root_pair(b, (k * j) as i64).neg()),
                _ => int(0),
            }));
        }
        if prm.variant == Variant::Psl && prm.d == 2 {
            let root = sqrt_q_star(prm.p, prm.f);
            let half = BigRational::new(1.into(), 2.into());
            if q % 4 == 1 {
                for (name, sgn) in [("xi1", 1), ("xi2", -1)] {
                    let root = root.clone();
                    let half = half.clone();
                    out.push(self.character(name, q.div_ceil(2), move |c| match c {
                        Kind::Unipotent(s) => {
                            let r = if (s == 0) == (sgn == 1) { root.clone() } else { root.neg() };
                            Some(CycValue::one().add(&r).scale(&half))
                        }
                        Kind::Split(i) => Some(CycValue::from_int(sign(i))),
                        _ => Some(CycValue::zero()),
                    }));
                }
            } else {
                for (name, sgn) in [("eta1", 1), ("eta2", -1)] {
                    let root = root.clone();
                    let half = half.clone();
                    out.push(self.character(name, (q - 1) / 2, move |c| match c {
                        Kind::Unipotent(s) => {
                            let r = if (s == 0) == (sgn == 1) { root.clone() } else { root.neg() };
                            Some(CycValue::from_int(-1).add(&r).scale(&half))
                        }
                        Kind::Nonsplit(j) => Some(CycValue::from_int(-sign(j))),
                        _ => Some(CycValue::zero()),
                    }));
                }
            }
        }
        out
    }

    fn brauer3(&self) -> RawCharacter {
        let a = self.params.split_order();
        let b = self.params.nonsplit_order();
        let one = CycValue::one();
        self.character_p("phi", self.params.p, 3, |c| match c {
            Kind::Split(i) => Some(one.add(&root_pair(a, i as i64))),
            Kind::Nonsplit(j) => Some(one.add(&root_pair(b, j as i64))),
            _ => None,
        })
    }
}

impl Kind {
    fn clamp_unipotent(self, layout: &Layout) -> Kind {
        if layout.by_kind.contains_key(&self) {
            self
        } else {
            Kind::Unipotent(0)
        }
    }
}

/// The full ordinary character table.
pub fn gen_table(params: Psl2Params) -> Result<CharacterTable, GenError> {
    build(params, false)
}

/// The full ordinary table together with the degree-3 Brauer character `phi`.
pub fn gen_table_with_brauer3(params: Psl2Params) -> Result<CharacterTable, GenError> {
    build(params, true)
}

fn build(params: Psl2Params, brauer: bool) -> Result<CharacterTable, GenError> {
    let layout = Layout::build(params);
    let mut chars = layout.ordinary_characters();
    if brauer {
        chars.push(gen_brauer3_raw(&layout)?);
    }
    Ok(CharacterTable::new(
        params.group_name(),
        Some(params.group_order()),
        Completeness::Full,
        layout.conj_classes(),
        chars,
    )?)
}

fn gen_brauer3_raw(layout: &Layout) -> Result<RawCharacter, GenError> {
    let prm = layout.params;
    if prm.variant == Variant::Psl && prm.d == 2 {
        return Err(GenError::BrauerNeedsPgl(prm.q));
    }
    Ok(layout.brauer3())
}

/// The degree-3 `p`-modular Brauer character, `1 + zeta^i + zeta^-i` on the
/// torus class with exponent `i`, as a raw character keyed by class name.
pub fn gen_brauer3(params: Psl2Params) -> Result<RawCharacter, GenError> {
    gen_brauer3_raw(&Layout::build(params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naming_orbit_for_eleven() {
        assert_eq!(naming_orbit(11), vec![1, 2, 4, 3, 5]);
        assert_eq!(naming_orbit(8), vec![1, 3]);
        assert_eq!(naming_orbit(4), vec![1]);
        assert_eq!(suffix(0), "a");
        assert_eq!(suffix(26), "aa");
        assert_eq!(suffix(27), "ab");
    }

    #[test]
    fn small_tables_validate() {
        for q in [4, 5, 7, 8, 9] {
            for v in [Variant::Psl, Variant::Pgl] {
                let t = gen_table(Psl2Params::new(v, q).unwrap()).unwrap();
                let rep = t.validate();
                assert!(rep.passed(), "{} {:?}: {}", q, v, rep);
            }
        }
    }
}
