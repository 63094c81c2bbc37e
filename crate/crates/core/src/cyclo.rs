//! Exact arithmetic in cyclotomic fields.
//!
//! A [`CycValue`] is stored at its minimal conductor `N` as rational
//! coordinates in the Zumbroich basis of `Q(zeta_N)`. That representation is
//! unique, so structural equality is value equality.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycError {
    #[error("conductor must be positive")]
    ZeroConductor,
    #[error("galois exponent {k} is not coprime to conductor {conductor}")]
    NotCoprime { k: i64, conductor: u64 },
    #[error("value of conductor {conductor} does not lie in Q(zeta_{field})")]
    NotInField { conductor: u64, field: u64 },
    #[error("invalid cyclotomic value: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Coeffs {
    Small(Vec<(u32, i64)>),
    Big(Vec<(u32, BigRational)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycValue {
    conductor: u32,
    coeffs: Coeffs,
}

struct PrimePart {
    p: u32,
    pa: u32,
    top: u32,
    cof_inv: u32,
}

struct Basis {
    n: u32,
    parts: Vec<PrimePart>,
    // ok[i][e]: the component of e at parts[i] is a basis digit
    ok: Vec<Vec<bool>>,
}

impl Basis {
    fn build(n: u32) -> Basis {
        let parts: Vec<PrimePart> = arith::factor(n as u64)
            .into_iter()
            .map(|(p, a)| {
                let pa = p.pow(a);
                let cof = n as u64 / pa;
                PrimePart {
                    p: p as u32,
                    pa: pa as u32,
                    top: p.pow(a - 1) as u32,
                    cof_inv: arith::mod_inv(cof as i64, pa).unwrap_or(0) as u32,
                }
            })
            .collect();
        let ok = parts
            .iter()
            .map(|pp| {
                (0..n)
                    .map(|e| {
                        let x = (e % pp.pa) as u64 * pp.cof_inv as u64 % pp.pa as u64;
                        let t = x as u32 / pp.top;
                        if pp.p == 2 {
                            t == 0
                        } else {
                            t >= 1
                        }
                    })
                    .collect()
            })
            .collect();
        Basis { n, parts, ok }
    }

    fn get(n: u32) -> Arc<Basis> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Basis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().unwrap().get(&n) {
            return b.clone();
        }
        let b = Arc::new(Basis::build(n));
        cache.lock().unwrap().entry(n).or_insert(b).clone()
    }
}

fn small(v: &BigRational) -> Option<i64> {
    if v.is_integer() {
        v.numer().to_i64()
    } else {
        None
    }
}

fn rat(v: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Dense coefficient vector indexed by exponent, used as scratch space.
enum Dense {
    Int(Vec<i128>),
    Rat(Vec<BigRational>),
}

impl Dense {
    fn new(n: u32) -> Dense {
        Dense::Int(vec![0; n as usize])
    }

    fn promote(&mut self) {
        if let Dense::Int(v) = self {
            let r = v.iter().map(|&x| rat(x)).collect();
            *self = Dense::Rat(r);
        }
    }

    fn add_int(&mut self, idx: usize, x: i128) {
        if let Dense::Int(v) = self {
            if let Some(s) = v[idx].checked_add(x) {
                v[idx] = s;
                return;
            }
            self.promote();
        }
        if let Dense::Rat(v) = self {
            v[idx] += rat(x);
        }
    }

    fn add_rat(&mut self, idx: usize, x: &BigRational) {
        if let Some(s) = small(x) {
            return self.add_int(idx, s as i128);
        }
        self.promote();
        if let Dense::Rat(v) = self {
            v[idx] += x;
        }
    }

    fn reduce(&mut self, b: &Basis) {
        let n = b.n as usize;
        for (pi, pp) in b.parts.iter().enumerate() {
            let step = n / pp.p as usize;
            let ok = &b.ok[pi];
            for e in 0..n {
                if ok[e] {
                    continue;
                }
                if self.reduce_at(e, pp.p, step, n).is_err() {
                    self.promote();
                    let _ = self.reduce_at(e, pp.p, step, n);
                }
            }
        }
    }

    fn reduce_at(&mut self, e: usize, p: u32, step: usize, n: usize) -> Result<(), ()> {
        match self {
            Dense::Int(v) => {
                let c = v[e];
                if c == 0 {
                    return Ok(());
                }
                let js = if p == 2 { 1..2 } else { 1..p as usize };
                for j in js.clone() {
                    let t = (e + j * step) % n;
                    v[t].checked_sub(c).ok_or(())?;
                }
                for j in js {
                    let t = (e + j * step) % n;
                    v[t] -= c;
                }
                v[e] = 0;
                Ok(())
            }
            Dense::Rat(v) => {
                if v[e].is_zero() {
                    return Ok(());
                }
                let c = std::mem::replace(&mut v[e], BigRational::zero());
                if p == 2 {
                    v[(e + step) % n] -= &c;
                } else {
                    for j in 1..p as usize {
                        v[(e + j * step) % n] -= &c;
                    }
                }
                Ok(())
            }
        }
    }

    fn into_value(mut self, n: u32) -> CycValue {
        let b = Basis::get(n);
        self.reduce(&b);
        let terms: Vec<(u32, BigRational)> = match self {
            Dense::Int(v) => v
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c != 0)
                .map(|(e, c)| (e as u32, rat(c)))
                .collect(),
            Dense::Rat(v) => v
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (e as u32, c))
                .collect(),
        };
        let (cond, terms) = lower(n, terms);
        CycValue::pack(cond, terms)
    }
}

/// Move a reduced expansion down to the minimal conductor.
fn lower(mut n: u32, mut terms: Vec<(u32, BigRational)>) -> (u32, Vec<(u32, BigRational)>) {
    if terms.is_empty() {
        return (1, terms);
    }
    'outer: loop {
        if n == 1 {
            break;
        }
        let parts = arith::factor(n as u64);
        for (p, a) in parts {
            let p32 = p as u32;
            if p == 2 || a >= 2 {
                if terms.iter().all(|(e, _)| e % p32 == 0) {
                    n /= p32;
                    for t in terms.iter_mut() {
                        t.0 /= p32;
                    }
                    continue 'outer;
                }
            } else {
                let m = n / p32;
                let inv = arith::mod_inv(m as i64, p).unwrap() as u32;
                let lookup: HashMap<u32, &BigRational> = terms.iter().map(|(e, c)| (*e, c)).collect();
                let mut next = Vec::new();
                let mut fits = true;
                for (e, c) in &terms {
                    let x = (e % p32) * inv % p32;
                    if x != 1 {
                        continue;
                    }
                    let e0 = (*e + n - m) % n;
                    for j in 2..p32 {
                        match lookup.get(&((e0 + j * m) % n)) {
                            Some(c2) if *c2 == c => {}
                            _ => {
                                fits = false;
                                break;
                            }
                        }
                    }
                    if !fits {
                        break;
                    }
                    next.push((e0 / p32, -c.clone()));
                }
                if fits && next.len() * (p as usize - 1) == terms.len() {
                    next.sort_by_key(|t| t.0);
                    terms = next;
                    n = m;
                    continue 'outer;
                }
            }
        }
        break;
    }
    (n, terms)
}

impl CycValue {
    fn pack(conductor: u32, terms: Vec<(u32, BigRational)>) -> CycValue {
        if terms.is_empty() {
            return CycValue::zero();
        }
        let smalls: Option<Vec<(u32, i64)>> =
            terms.iter().map(|(e, c)| small(c).map(|s| (*e, s))).collect();
        let coeffs = match smalls {
            Some(s) => Coeffs::Small(s),
            None => Coeffs::Big(terms),
        };
        CycValue { conductor, coeffs }
    }

    pub fn zero() -> CycValue {
        CycValue {
            conductor: 1,
            coeffs: Coeffs::Small(Vec::new()),
        }
    }

    pub fn one() -> CycValue {
        CycValue::from_int(1)
    }

    pub fn from_int(v: i64) -> CycValue {
        CycValue::pack(1, vec![(0, BigRational::from_integer(v.into()))].into_iter().filter(|t| !t.1.is_zero()).collect())
    }

    pub fn from_rational(v: BigRational) -> CycValue {
        if v.is_zero() {
            CycValue::zero()
        } else {
            CycValue::pack(1, vec![(0, v)])
        }
    }

    /// `zeta_n^e` with `zeta_n = exp(2 pi i / n)`.
    pub fn root_of_unity(n: u64, e: i64) -> Result<CycValue, CycError> {
        CycValue::from_terms(n, [(e, BigRational::one())])
    }

    /// Normalise an arbitrary expansion `sum c * zeta_n^e`.
    pub fn from_terms<I>(n: u64, terms: I) -> Result<CycValue, CycError>
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        if n == 0 {
            return Err(CycError::ZeroConductor);
        }
        let n32 = u32::try_from(n).map_err(|_| CycError::Parse(format!("conductor {n} too large")))?;
        let mut d = Dense::new(n32);
        for (e, c) in terms {
            d.add_rat(arith::rem(e, n) as usize, &c);
        }
        Ok(d.into_value(n32))
    }

    pub fn conductor(&self) -> u64 {
        self.conductor as u64
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.coeffs, Coeffs::Small(v) if v.is_empty())
    }

    /// Canonical coordinates: `(exponent, coefficient)` in the Zumbroich basis.
    pub fn terms(&self) -> Vec<(u64, BigRational)> {
        match &self.coeffs {
            Coeffs::Small(v) => v.iter().map(|(e, c)| (*e as u64, rat(*c as i128))).collect(),
            Coeffs::Big(v) => v.iter().map(|(e, c)| (*e as u64, c.clone())).collect(),
        }
    }

    pub fn is_rational(&self) -> bool {
        self.conductor == 1
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.is_rational() {
            return None;
        }
        Some(self.terms().into_iter().next().map(|t| t.1).unwrap_or_else(BigRational::zero))
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.to_rational().and_then(|r| small(&r))
    }

    /// True for algebraic integers. The basis is integral, so this is a
    /// coordinate test.
    pub fn is_integral(&self) -> bool {
        match &self.coeffs {
            Coeffs::Small(_) => true,
            Coeffs::Big(v) => v.iter().all(|(_, c)| c.is_integer()),
        }
    }

    fn scatter(&self, d: &mut Dense, scale: u32, n: u32, shift: u32) {
        match &self.coeffs {
            Coeffs::Small(v) => {
                for (e, c) in v {
                    d.add_int(((e * scale + shift) % n) as usize, *c as i128);
                }
            }
            Coeffs::Big(v) => {
                for (e, c) in v {
                    d.add_rat(((e * scale + shift) % n) as usize, c);
                }
            }
        }
    }

    pub fn add(&self, other: &CycValue) -> CycValue {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let n = arith::lcm(self.conductor as u64, other.conductor as u64) as u32;
        let mut d = Dense::new(n);
        self.scatter(&mut d, n / self.conductor, n, 0);
        other.scatter(&mut d, n / other.conductor, n, 0);
        d.into_value(n)
    }

    pub fn neg(&self) -> CycValue {
        let coeffs = match &self.coeffs {
            Coeffs::Small(v) => Coeffs::Small(v.iter().map(|(e, c)| (*e, -c)).collect()),
            Coeffs::Big(v) => Coeffs::Big(v.iter().map(|(e, c)| (*e, -c)).collect()),
        };
        CycValue {
            conductor: self.conductor,
            coeffs,
        }
    }

    pub fn sub(&self, other: &CycValue) -> CycValue {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigRational) -> CycValue {
        if k.is_zero() {
            return CycValue::zero();
        }
        let terms = self.terms().into_iter().map(|(e, c)| (e as u32, c * k)).collect();
        CycValue::pack(self.conductor, terms)
    }

    pub fn scale_int(&self, k: i64) -> CycValue {
        self.scale(&BigRational::from_integer(k.into()))
    }

    pub fn mul(&self, other: &CycValue) -> CycValue {
        if self.is_zero() || other.is_zero() {
            return CycValue::zero();
        }
        if let Some(r) = self.to_rational() {
            return other.scale(&r);
        }
        if let Some(r) = other.to_rational() {
            return self.scale(&r);
        }
        let n = arith::lcm(self.conductor as u64, other.conductor as u64) as u32;
        let (sa, sb) = (n / self.conductor, n / other.conductor);
        let mut d = Dense::new(n);
        match (&self.coeffs, &other.coeffs) {
            (Coeffs::Small(a), Coeffs::Small(b)) => {
                for (ea, ca) in a {
                    for (eb, cb) in b {
                        let idx = ((ea * sa + eb * sb) % n) as usize;
                        d.add_int(idx, *ca as i128 * *cb as i128);
                    }
                }
            }
            _ => {
                for (ea, ca) in self.terms() {
                    for (eb, cb) in other.terms() {
                        let idx = ((ea as u32 * sa + eb as u32 * sb) % n) as usize;
                        d.add_rat(idx, &(&ca * &cb));
                    }
                }
            }
        }
        d.into_value(n)
    }

    /// `zeta^e -> zeta^(k e)` on `Q(zeta_N)`, `N` the conductor.
    pub fn galois(&self, k: i64) -> Result<CycValue, CycError> {
        let n = self.conductor as u64;
        if arith::gcd(arith::rem(k, n), n) != 1 && n > 1 {
            return Err(CycError::NotCoprime { k, conductor: n });
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let km = arith::rem(k, n) as u32;
        let mut d = Dense::new(n as u32);
        self.scatter(&mut d, km, n as u32, 0);
        Ok(d.into_value(n as u32))
    }

    /// Galois action given by an exponent modulo some multiple of the conductor.
    pub fn galois_mod(&self, k: i64, modulus: u64) -> Result<CycValue, CycError> {
        if arith::gcd(arith::rem(k, modulus), modulus) != 1 {
            return Err(CycError::NotCoprime { k, conductor: modulus });
        }
        self.galois(k)
    }

    pub fn conj(&self) -> CycValue {
        self.galois(-1).expect("-1 is a unit")
    }

    /// Multiply by `zeta_n^e`.
    pub fn mul_root(&self, n: u64, e: i64) -> CycValue {
        if self.is_zero() {
            return CycValue::zero();
        }
        let l = arith::lcm(self.conductor as u64, n) as u32;
        let shift = (arith::rem(e, n) * (l as u64 / n)) as u32;
        let mut d = Dense::new(l);
        self.scatter(&mut d, l / self.conductor, l, shift);
        d.into_value(l)
    }

    /// `Tr_{Q(zeta_N)/Q}` at the minimal conductor, summed over the Galois orbit.
    pub fn trace_to_q(&self) -> BigRational {
        let n = self.conductor;
        if n == 1 {
            return self.to_rational().unwrap();
        }
        let mut d = Dense::new(n);
        for k in 1..n {
            if arith::gcd(k as u64, n as u64) == 1 {
                self.scatter(&mut d, k, n, 0);
            }
        }
        d.into_value(n)
            .to_rational()
            .expect("galois orbit sums are rational")
    }

    /// `Tr_{Q(zeta_m)/Q}` of a value lying in `Q(zeta_m)`.
    pub fn field_trace(&self, m: u64) -> Result<BigRational, CycError> {
        let c = self.conductor as u64;
        if m == 0 || !m.is_multiple_of(c) {
            return Err(CycError::NotInField {
                conductor: c,
                field: m,
            });
        }
        let s = m / c;
        let mut acc = BigRational::zero();
        match &self.coeffs {
            Coeffs::Small(v) => {
                let mut t: i128 = 0;
                for (e, x) in v {
                    t += *x as i128 * arith::ramanujan_sum(m, (*e as u64 * s) as i64) as i128;
                }
                acc += rat(t);
            }
            Coeffs::Big(v) => {
                for (e, x) in v {
                    acc += x * BigRational::from_integer(arith::ramanujan_sum(m, (*e as u64 * s) as i64).into());
                }
            }
        }
        Ok(acc)
    }

    /// Field trace of `self * zeta_m^e` from `Q(zeta_m)`, with integer result.
    pub fn twisted_trace_i64(&self, m: u64, e: i64) -> Result<Option<i64>, CycError> {
        let c = self.conductor as u64;
        if m == 0 || !m.is_multiple_of(c) {
            return Err(CycError::NotInField {
                conductor: c,
                field: m,
            });
        }
        let s = m / c;
        match &self.coeffs {
            Coeffs::Small(v) => {
                let mut t: i128 = 0;
                for (x_e, x) in v {
                    let exp = (*x_e as u64 * s) as i64 + e;
                    t += *x as i128 * arith::ramanujan_sum(m, exp) as i128;
                }
                Ok(i64::try_from(t).ok())
            }
            Coeffs::Big(_) => {
                let v = self.mul_root(m, e).field_trace(m)?;
                Ok(small(&v))
            }
        }
    }

    /// Floating point evaluation, for diagnostics and numerical cross-checks.
    pub fn approx(&self) -> (f64, f64) {
        let n = self.conductor as f64;
        self.terms().iter().fold((0.0, 0.0), |(re, im), (e, c)| {
            let c = c.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * std::f64::consts::PI * (*e as f64) / n;
            (re + c * ang.cos(), im + c * ang.sin())
        })
    }

    /// Sum of many values, grouping by conductor so no large field is formed
    /// before it is needed.
    pub fn sum<'a, I: IntoIterator<Item = &'a CycValue>>(vals: I) -> CycValue {
        let mut acc = Accumulator::new();
        for v in vals {
            acc.add(v, 1);
        }
        acc.finish()
    }
}

/// Collects scaled products bucketed by conductor and reduces each bucket once.
#[derive(Default)]
pub struct Accumulator {
    buckets: HashMap<u32, Dense>,
    rational: BigRational,
}

impl Accumulator {
    pub fn new() -> Accumulator {
        Accumulator {
            buckets: HashMap::new(),
            rational: BigRational::zero(),
        }
    }

    pub fn add(&mut self, v: &CycValue, k: i64) {
        if v.is_zero() || k == 0 {
            return;
        }
        if let Some(r) = v.to_rational() {
            self.rational += r * BigRational::from_integer(k.into());
            return;
        }
        let n = v.conductor;
        let d = self.buckets.entry(n).or_insert_with(|| Dense::new(n));
        match &v.coeffs {
            Coeffs::Small(t) => {
                for (e, c) in t {
                    d.add_int(*e as usize, *c as i128 * k as i128);
                }
            }
            Coeffs::Big(t) => {
                let kk = BigRational::from_integer(k.into());
                for (e, c) in t {
                    d.add_rat(*e as usize, &(c * &kk));
                }
            }
        }
    }

    /// Add `k * a * b`.
    pub fn add_product(&mut self, a: &CycValue, b: &CycValue, k: i64) {
        if a.is_zero() || b.is_zero() || k == 0 {
            return;
        }
        if a.is_rational() || b.is_rational() {
            return self.add(&a.mul(b), k);
        }
        let n = arith::lcm(a.conductor as u64, b.conductor as u64) as u32;
        let (sa, sb) = (n / a.conductor, n / b.conductor);
        let d = self.buckets.entry(n).or_insert_with(|| Dense::new(n));
        match (&a.coeffs, &b.coeffs) {
            (Coeffs::Small(x), Coeffs::Small(y)) => {
                for (ea, ca) in x {
                    for (eb, cb) in y {
                        let idx = ((ea * sa + eb * sb) % n) as usize;
                        d.add_int(idx, *ca as i128 * *cb as i128 * k as i128);
                    }
                }
            }
            _ => {
                let kk = BigRational::from_integer(k.into());
                for (ea, ca) in a.terms() {
                    for (eb, cb) in b.terms() {
                        let idx = ((ea as u32 * sa + eb as u32 * sb) % n) as usize;
                        d.add_rat(idx, &(&ca * &cb * &kk));
                    }
                }
            }
        }
    }

    pub fn finish(self) -> CycValue {
        let mut parts: Vec<CycValue> = self
            .buckets
            .into_iter()
            .map(|(n, d)| d.into_value(n))
            .filter(|v| !v.is_zero())
            .collect();
        parts.sort_by(|a, b| b.conductor.cmp(&a.conductor));
        let mut hubs: Vec<CycValue> = Vec::new();
        for v in parts {
            match hubs.iter_mut().find(|h| h.conductor % v.conductor == 0) {
                Some(h) => *h = h.add(&v),
                None => hubs.push(v),
            }
        }
        let mut total = CycValue::from_rational(self.rational);
        for h in hubs {
            total = total.add(&h);
        }
        total
    }
}

impl fmt::Display for CycValue {
    /// GAP-style rendering in basis coordinates, e.g. `2*E(3)-E(3)^2` for `1+3*E(3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let n = self.conductor;
        let mut first = true;
        for (e, c) in self.terms() {
            let neg = c.is_negative();
            let a = c.abs();
            if !first || neg {
                write!(f, "{}", if neg { "-" } else { "+" })?;
            }
            first = false;
            if e == 0 {
                write!(f, "{a}")?;
                continue;
            }
            if !a.is_one() {
                write!(f, "{a}*")?;
            }
            if e == 1 {
                write!(f, "E({n})")?;
            } else {
                write!(f, "E({n})^{e}")?;
            }
        }
        Ok(())
    }
}

fn json_int(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(x) => serde_json::Value::from(x),
        None => serde_json::Value::from(v.to_string()),
    }
}

impl CycValue {
    /// JSON encoding. Integers are written bare, everything else as
    /// `{"conductor": N, "terms": [[e, num, den], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        if let Some(x) = self.to_i64() {
            return serde_json::Value::from(x);
        }
        let terms: Vec<serde_json::Value> = self
            .terms()
            .into_iter()
            .map(|(e, c)| serde_json::json!([e, json_int(c.numer()), json_int(c.denom())]))
            .collect();
        serde_json::json!({ "conductor": self.conductor, "terms": terms })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<CycValue, CycError> {
        fn big(v: &serde_json::Value) -> Result<BigInt, CycError> {
            match v {
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| CycError::Parse(format!("non-integer number {n}"))),
                serde_json::Value::String(s) => s
                    .trim()
                    .parse::<BigInt>()
                    .map_err(|_| CycError::Parse(format!("bad integer {s:?}"))),
                other => Err(CycError::Parse(format!("expected integer, got {other}"))),
            }
        }
        match v {
            serde_json::Value::Number(_) => Ok(CycValue::from_rational(BigRational::from_integer(big(v)?))),
            serde_json::Value::String(s) => {
                let r = s
                    .trim()
                    .parse::<BigRational>()
                    .map_err(|_| CycError::Parse(format!("bad rational {s:?}")))?;
                Ok(CycValue::from_rational(r))
            }
            serde_json::Value::Object(map) => {
                let n = map
                    .get("conductor")
                    .and_then(|x| x.as_u64())
                    .ok_or_else(|| CycError::Parse("missing conductor".into()))?;
                let terms = map
                    .get("terms")
                    .and_then(|x| x.as_array())
                    .ok_or_else(|| CycError::Parse("missing terms".into()))?;
                let mut parsed = Vec::with_capacity(terms.len());
                for t in terms {
                    let arr = t
                        .as_array()
                        .filter(|a| a.len() == 3 || a.len() == 2)
                        .ok_or_else(|| CycError::Parse(format!("bad term {t}")))?;
                    let e = arr[0]
                        .as_i64()
                        .ok_or_else(|| CycError::Parse(format!("bad exponent {}", arr[0])))?;
                    let num = big(&arr[1])?;
                    let den = if arr.len() == 3 { big(&arr[2])? } else { BigInt::one() };
                    if den.is_zero() {
                        return Err(CycError::Parse("zero denominator".into()));
                    }
                    parsed.push((e, BigRational::new(num, den)));
                }
                CycValue::from_terms(n, parsed)
            }
            other => Err(CycError::Parse(format!("unexpected {other}"))),
        }
    }
}

impl Serialize for CycValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.to_json() {
            serde_json::Value::Object(map) => {
                let mut st = s.serialize_struct("CycValue", 2)?;
                st.serialize_field("conductor", &map["conductor"])?;
                st.serialize_field("terms", &map["terms"])?;
                st.end()
            }
            other => other.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CycValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        CycValue::from_json(&v).map_err(de::Error::custom)
    }
}

impl From<i64> for CycValue {
    fn from(v: i64) -> CycValue {
        CycValue::from_int(v)
    }
}

/// `zeta_n^k + zeta_n^-k`.
pub fn root_pair(n: u64, k: i64) -> CycValue {
    let a = CycValue::root_of_unity(n, k).unwrap();
    a.add(&a.conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-7 && (a.1 - b.1).abs() < 1e-7
    }

    #[test]
    fn sum_of_all_roots_is_zero() {
        for n in 2..40 {
            let s = CycValue::sum(&(0..n as i64).map(|e| CycValue::root_of_unity(n, e).unwrap()).collect::<Vec<_>>());
            assert!(s.is_zero(), "n={n}");
        }
    }

    #[test]
    fn conductor_of_sqrt_minus_3() {
        let z = CycValue::root_of_unity(3, 1).unwrap();
        let s = z.sub(&z.conj());
        assert_eq!(s.conductor(), 3);
        assert_eq!(s.mul(&s), CycValue::from_int(-3));
        assert_eq!(CycValue::root_of_unity(6, 1).unwrap().conductor(), 3);
        assert_eq!(CycValue::root_of_unity(12, 3).unwrap().conductor(), 4);
    }

    #[test]
    fn rational_lowering() {
        let v = CycValue::from_terms(15, [(0, q(3, 2))]).unwrap();
        assert_eq!(v, CycValue::from_rational(q(3, 2)));
        assert!(v.is_rational());
    }

    #[test]
    fn traces_agree() {
        let v = CycValue::from_terms(24, [(1, q(1, 1)), (5, q(2, 3)), (8, q(-4, 1))]).unwrap();
        let c = v.conductor();
        assert_eq!(v.trace_to_q(), v.field_trace(c).unwrap());
        let fourfold = v.field_trace(c * 5).unwrap();
        assert_eq!(fourfold, v.trace_to_q() * q(4, 1));
        assert_eq!(CycValue::from_int(4).field_trace(5).unwrap(), q(16, 1));
    }

    #[test]
    fn galois_matches_numeric() {
        let v = CycValue::from_terms(20, [(1, q(1, 1)), (3, q(-2, 1)), (10, q(1, 2))]).unwrap();
        let w = v.galois(3).unwrap();
        let direct = CycValue::from_terms(20, [(3, q(1, 1)), (9, q(-2, 1)), (30, q(1, 2))]).unwrap();
        assert_eq!(w, direct);
        assert!(v.galois(5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let v = CycValue::from_terms(7, [(1, q(1, 3)), (2, q(5, 1))]).unwrap();
        let j = v.to_json();
        assert_eq!(CycValue::from_json(&j).unwrap(), v);
        assert_eq!(CycValue::from_json(&serde_json::json!(-7)).unwrap(), CycValue::from_int(-7));
        let s = serde_json::to_string(&v).unwrap();
        let back: CycValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn display() {
        let z = CycValue::root_of_unity(3, 1).unwrap();
        assert_eq!(CycValue::from_int(1).add(&z.scale_int(3)).to_string(), "2*E(3)-E(3)^2");
        assert!(close(z.approx(), (-0.5, 3f64.sqrt() / 2.0)));
    }

    #[test]
    fn big_coefficients_fall_back() {
        let big = BigRational::from_integer(BigInt::from(i64::MAX) * 4);
        let v = CycValue::from_terms(5, [(1, big.clone()), (2, q(1, 1))]).unwrap();
        let w = v.mul(&v);
        let (re, _) = w.approx();
        assert!(re.is_finite());
        assert_eq!(w.sub(&v.mul(&v)), CycValue::zero());
    }
}
