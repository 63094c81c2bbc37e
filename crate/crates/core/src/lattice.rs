//! Exact enumeration of integer points of polyhedra with congruence
//! conditions.
//!
//! Bounds come from an exact rational simplex (Bland's rule). The enumerator
//! fixes variables in order and recomputes the bounds of the next one after
//! every fixing.

use std::collections::HashMap;
use std::cell::Cell;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith;

type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("the rational relaxation is infeasible")]
    Infeasible,
    #[error("form has {got} coefficients, polyhedron has dimension {dim}")]
    Dimension { got: usize, dim: usize },
    #[error("congruence modulus must be positive")]
    ZeroModulus,
    #[error("variable index {0} out of range")]
    Index(usize),
    #[error("the solution set is unbounded but no integer point was found within |x| <= {0}")]
    Undecided(i64),
    #[error("integer overflow while evaluating a form")]
    Overflow,
}

/// `coeffs . x + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineForm {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<i64>, constant: i64) -> AffineForm {
        AffineForm { coeffs, constant }
    }

    pub fn eval(&self, x: &[i64]) -> i128 {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant as i128, |acc, (a, b)| acc + *a as i128 * *b as i128)
    }

    fn last_var(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&a| a != 0)
    }

    fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (a, n) in self.coeffs.iter().zip(names) {
            if *a == 0 {
                continue;
            }
            let sign = if *a < 0 { "-" } else { "+" };
            let mag = a.unsigned_abs();
            if s.is_empty() {
                if *a < 0 {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            if mag != 1 {
                s.push_str(&format!("{mag}*"));
            }
            s.push_str(n);
        }
        if s.is_empty() {
            return self.constant.to_string();
        }
        if self.constant != 0 {
            let sign = if self.constant < 0 { "-" } else { "+" };
            s.push_str(&format!(" {sign} {}", self.constant.unsigned_abs()));
        }
        s
    }
}

/// `form(x) = residue (mod modulus)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Congruence {
    pub form: AffineForm,
    pub modulus: u64,
    pub residue: u64,
}

impl Congruence {
    pub fn holds(&self, x: &[i64]) -> bool {
        let v = self.form.eval(x) - self.residue as i128;
        v.rem_euclid(self.modulus as i128) == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polyhedron {
    pub dim: usize,
    /// `form >= 0`
    pub inequalities: Vec<AffineForm>,
    /// `form = 0`
    pub equalities: Vec<AffineForm>,
    pub congruences: Vec<Congruence>,
}

impl Polyhedron {
    pub fn new(dim: usize) -> Polyhedron {
        Polyhedron {
            dim,
            ..Polyhedron::default()
        }
    }

    fn check_dim(&self, f: &AffineForm) -> Result<(), LatticeError> {
        if f.coeffs.len() != self.dim {
            return Err(LatticeError::Dimension {
                got: f.coeffs.len(),
                dim: self.dim,
            });
        }
        Ok(())
    }

    pub fn add_inequality(&mut self, f: AffineForm) -> Result<(), LatticeError> {
        self.check_dim(&f)?;
        self.inequalities.push(f);
        Ok(())
    }

    pub fn add_equality(&mut self, f: AffineForm) -> Result<(), LatticeError> {
        self.check_dim(&f)?;
        self.equalities.push(f);
        Ok(())
    }

    pub fn add_congruence(&mut self, f: AffineForm, modulus: u64, residue: i64) -> Result<(), LatticeError> {
        self.check_dim(&f)?;
        if modulus == 0 {
            return Err(LatticeError::ZeroModulus);
        }
        self.congruences.push(Congruence {
            form: f,
            modulus,
            residue: arith::rem(residue, modulus),
        });
        Ok(())
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.inequalities.iter().all(|f| f.eval(x) >= 0)
            && self.equalities.iter().all(|f| f.eval(x) == 0)
            && self.congruences.iter().all(|c| c.holds(x))
    }

    /// One row per line, variables named `x0, x1, ...` unless names are given.
    pub fn dump(&self, names: Option<&[String]>) -> String {
        let default: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        let names = names.unwrap_or(&default);
        let mut out = String::new();
        for f in &self.equalities {
            out.push_str(&format!("eq    {} = 0\n", f.render(names)));
        }
        for f in &self.inequalities {
            out.push_str(&format!("ineq  {} >= 0\n", f.render(names)));
        }
        for c in &self.congruences {
            out.push_str(&format!("cong  {} = {} mod {}\n", c.form.render(names), c.residue, c.modulus));
        }
        out
    }
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dump(None))
    }
}

/// Closed interval with possibly infinite ends (`None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<BigRational>,
    pub hi: Option<BigRational>,
}

impl Interval {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), |x| x.to_string());
        let hi = self.hi.as_ref().map_or("+inf".to_string(), |x| x.to_string());
        write!(f, "[{lo}, {hi}]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Enumeration {
    Finite(Vec<Vec<i64>>),
    /// `point + k * ray` is a solution for every `k >= 0`.
    Infinite { ray: Vec<i64>, point: Vec<i64> },
    /// More than `cap` points; the first `cap` in lexicographic order.
    Capped(Vec<Vec<i64>>),
}

// ---------------------------------------------------------------------------
// exact linear programming

fn q(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// Rows `a . y + c >= 0` and `a . y + c = 0` over rationals.
#[derive(Clone, Debug)]
struct Lp {
    dim: usize,
    ineq: Vec<(Vec<Q>, Q)>,
    eq: Vec<(Vec<Q>, Q)>,
}

enum Opt {
    Value(Q, Vec<Q>),
    Unbounded,
    Infeasible,
}

enum OptT<F> {
    Value(F, Vec<F>),
    Unbounded,
    Infeasible,
}

/// The operations the simplex needs, so it can run over `i128` rationals
/// first and over big rationals when those overflow.
trait Field: Clone + Ord {
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn nil(&self) -> bool;
    fn neg_p(&self) -> bool;
    fn pos_p(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn to_q(&self) -> Q;
}

impl Field for Q {
    fn f_zero() -> Q {
        Q::zero()
    }
    fn f_one() -> Q {
        Q::one()
    }
    fn nil(&self) -> bool {
        self.is_zero()
    }
    fn neg_p(&self) -> bool {
        self.is_negative()
    }
    fn pos_p(&self) -> bool {
        self.is_positive()
    }
    fn plus(&self, o: &Q) -> Q {
        self + o
    }
    fn minus(&self, o: &Q) -> Q {
        self - o
    }
    fn times(&self, o: &Q) -> Q {
        self * o
    }
    fn over(&self, o: &Q) -> Q {
        self / o
    }
    fn negate(&self) -> Q {
        -self
    }
    fn to_q(&self) -> Q {
        self.clone()
    }
}

type Sm = Ratio<i128>;

thread_local! {
    static SMALL_OVERFLOW: Cell<bool> = const { Cell::new(false) };
}

fn overflowed() -> Sm {
    SMALL_OVERFLOW.with(|f| f.set(true));
    Sm::zero()
}

fn to_small(x: &Q) -> Option<Sm> {
    Some(Sm::new_raw(x.numer().to_i128()?, x.denom().to_i128()?))
}

impl Field for Sm {
    fn f_zero() -> Sm {
        Sm::zero()
    }
    fn f_one() -> Sm {
        Sm::one()
    }
    fn nil(&self) -> bool {
        self.is_zero()
    }
    fn neg_p(&self) -> bool {
        self.is_negative()
    }
    fn pos_p(&self) -> bool {
        self.is_positive()
    }
    fn plus(&self, o: &Sm) -> Sm {
        self.checked_add(o).unwrap_or_else(overflowed)
    }
    fn minus(&self, o: &Sm) -> Sm {
        self.checked_sub(o).unwrap_or_else(overflowed)
    }
    fn times(&self, o: &Sm) -> Sm {
        self.checked_mul(o).unwrap_or_else(overflowed)
    }
    fn over(&self, o: &Sm) -> Sm {
        self.checked_div(o).unwrap_or_else(overflowed)
    }
    fn negate(&self) -> Sm {
        match self.numer().checked_neg() {
            Some(n) => Sm::new_raw(n, *self.denom()),
            None => overflowed(),
        }
    }
    fn to_q(&self) -> Q {
        Q::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
}

/// Affine parameterisation `y = y0 + N z` of the solutions of the equalities.
struct Param<F> {
    y0: Vec<F>,
    // n[i] is the row of N for y_i
    n: Vec<Vec<F>>,
    zdim: usize,
}

fn eliminate<F: Field>(dim: usize, eq: &[(Vec<F>, F)]) -> Option<Param<F>> {
    // Reduced row echelon form of [A | c] for A y + c = 0.
    let mut m: Vec<Vec<F>> = eq
        .iter()
        .map(|(a, c)| {
            let mut r = a.clone();
            r.push(c.clone());
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..dim {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].nil()) else {
            continue;
        };
        m.swap(row, p);
        let inv = F::f_one().over(&m[row][col]);
        for x in m[row].iter_mut() {
            *x = x.times(&inv);
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].nil() {
                let f = m[r][col].clone();
                for k in 0..=dim {
                    let v = m[row][k].times(&f);
                    m[r][k] = m[r][k].minus(&v);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if m[row..].iter().any(|r| !r[dim].nil()) {
        return None;
    }
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    let mut y0 = vec![F::f_zero(); dim];
    let mut n = vec![vec![F::f_zero(); free.len()]; dim];
    for (fi, &f) in free.iter().enumerate() {
        n[f][fi] = F::f_one();
    }
    for (r, &pc) in pivots.iter().enumerate() {
        // y_pc = -c - sum_f m[r][f] y_f
        y0[pc] = m[r][dim].negate();
        for (fi, &f) in free.iter().enumerate() {
            n[pc][fi] = m[r][f].negate();
        }
    }
    Some(Param {
        y0,
        n,
        zdim: free.len(),
    })
}

struct Dict<F> {
    // rows[i] = [const, coeff per column]
    rows: Vec<Vec<F>>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    free: Vec<bool>,
    obj: Vec<F>,
}

impl<F: Field> Dict<F> {
    fn pivot(&mut self, r: usize, j: usize) {
        let ncols = self.nonbasic.len();
        let inv = F::f_one().over(&self.rows[r][j + 1]);
        let mut newrow = vec![F::f_zero(); ncols + 1];
        for k in 0..=ncols {
            if k == j + 1 {
                newrow[k] = inv.clone();
            } else if !self.rows[r][k].nil() {
                newrow[k] = self.rows[r][k].times(&inv).negate();
            }
        }
        let apply = |row: &mut Vec<F>| {
            let f = std::mem::replace(&mut row[j + 1], F::f_zero());
            if f.nil() {
                return;
            }
            for k in 0..=ncols {
                if !newrow[k].nil() {
                    row[k] = row[k].plus(&f.times(&newrow[k]));
                }
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                apply(row);
            }
        }
        apply(&mut self.obj);
        self.rows[r] = newrow;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[j]);
    }

    /// Maximise `obj` with Bland's rule. `Err(())` means unbounded.
    fn run(&mut self) -> Result<(), ()> {
        loop {
            let mut entering: Option<usize> = None;
            for (j, &v) in self.nonbasic.iter().enumerate() {
                let r = &self.obj[j + 1];
                if r.nil() {
                    continue;
                }
                if self.free[v] {
                    return Err(());
                }
                if r.pos_p() && entering.is_none_or(|e| v < self.nonbasic[e]) {
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if self.free[self.basic[i]] || !row[j + 1].neg_p() {
                    continue;
                }
                let ratio = row[0].over(&row[j + 1].negate());
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basic[i] < self.basic[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((i, _)) = leave else {
                return Err(());
            };
            self.pivot(i, j);
        }
    }
}

/// Maximise `objective . y` subject to `ineq >= 0` and `eq = 0`.
fn solve<F: Field>(dim: usize, ineq: &[(Vec<F>, F)], eq: &[(Vec<F>, F)], objective: &[F]) -> OptT<F> {
    let Some(par) = eliminate(dim, eq) else {
        return OptT::Infeasible;
    };
    let zd = par.zdim;
    let lift = |z: &[F]| -> Vec<F> {
        (0..dim)
            .map(|i| par.n[i].iter().zip(z).fold(par.y0[i].clone(), |acc, (a, b)| acc.plus(&a.times(b))))
            .collect()
    };
    // rows in z: b . z + e >= 0
    let mut rows: Vec<(Vec<F>, F)> = Vec::with_capacity(ineq.len());
    for (a, c) in ineq {
        let mut e = c.clone();
        for (ai, y0i) in a.iter().zip(&par.y0) {
            if !ai.nil() {
                e = e.plus(&ai.times(y0i));
            }
        }
        let b: Vec<F> = (0..zd)
            .map(|f| {
                a.iter()
                    .zip(&par.n)
                    .filter(|(ai, _)| !ai.nil())
                    .fold(F::f_zero(), |acc, (ai, ni)| acc.plus(&ai.times(&ni[f])))
            })
            .collect();
        if b.iter().all(F::nil) {
            if e.neg_p() {
                return OptT::Infeasible;
            }
            continue;
        }
        rows.push((b, e));
    }
    let mut o0 = F::f_zero();
    for (oi, y0i) in objective.iter().zip(&par.y0) {
        o0 = o0.plus(&oi.times(y0i));
    }
    let ob: Vec<F> = (0..zd)
        .map(|f| {
            objective
                .iter()
                .zip(&par.n)
                .fold(F::f_zero(), |acc, (oi, ni)| acc.plus(&oi.times(&ni[f])))
        })
        .collect();
    if zd == 0 {
        return OptT::Value(o0, lift(&[]));
    }
    if rows.is_empty() {
        if ob.iter().any(|x| !x.nil()) {
            return OptT::Unbounded;
        }
        return OptT::Value(o0, lift(&vec![F::f_zero(); zd]));
    }
    let m = rows.len();
    // variables: 0..zd free, zd..zd+m slacks, zd+m aux
    let aux = zd + m;
    let mut free = vec![false; aux + 1];
    for f in free.iter_mut().take(zd) {
        *f = true;
    }
    let mut d = Dict {
        rows: rows
            .into_iter()
            .map(|(b, e)| {
                let mut r = Vec::with_capacity(zd + 1);
                r.push(e);
                r.extend(b);
                r
            })
            .collect(),
        basic: (zd..zd + m).collect(),
        nonbasic: (0..zd).collect(),
        free,
        obj: vec![F::f_zero(); zd + 1],
    };
    // move free variables into the basis where possible
    for v in 0..zd {
        let col = d.nonbasic.iter().position(|&x| x == v).unwrap();
        if let Some(r) = (0..d.rows.len()).find(|&r| !d.free[d.basic[r]] && !d.rows[r][col + 1].nil()) {
            d.pivot(r, col);
        }
    }
    // phase 1
    let infeasible_start = (0..d.rows.len()).any(|r| !d.free[d.basic[r]] && d.rows[r][0].neg_p());
    if infeasible_start {
        for r in 0..d.rows.len() {
            let c = if d.free[d.basic[r]] { F::f_zero() } else { F::f_one() };
            d.rows[r].push(c);
        }
        d.nonbasic.push(aux);
        let ncols = d.nonbasic.len();
        d.obj = vec![F::f_zero(); ncols + 1];
        d.obj[ncols] = F::f_one().negate();
        let worst = (0..d.rows.len())
            .filter(|&r| !d.free[d.basic[r]])
            .min_by(|&a, &b| d.rows[a][0].cmp(&d.rows[b][0]))
            .unwrap();
        d.pivot(worst, ncols - 1);
        if d.run().is_err() || d.obj[0].neg_p() {
            return OptT::Infeasible;
        }
        if let Some(r) = d.basic.iter().position(|&v| v == aux) {
            match (0..d.nonbasic.len()).find(|&j| !d.rows[r][j + 1].nil()) {
                Some(j) => d.pivot(r, j),
                None => {
                    d.rows.remove(r);
                    d.basic.remove(r);
                }
            }
        }
        let col = d.nonbasic.iter().position(|&v| v == aux).unwrap();
        d.nonbasic.remove(col);
        for row in d.rows.iter_mut() {
            row.remove(col + 1);
        }
    }
    // phase 2 objective: sum_j ob_j z_j in terms of the nonbasic variables
    let ncols = d.nonbasic.len();
    let mut obj = vec![F::f_zero(); ncols + 1];
    for (zj, w) in ob.iter().enumerate() {
        if w.nil() {
            continue;
        }
        if let Some(r) = d.basic.iter().position(|&v| v == zj) {
            for k in 0..=ncols {
                if !d.rows[r][k].nil() {
                    obj[k] = obj[k].plus(&w.times(&d.rows[r][k]));
                }
            }
        } else {
            let c = d.nonbasic.iter().position(|&v| v == zj).unwrap();
            obj[c + 1] = obj[c + 1].plus(w);
        }
    }
    d.obj = obj;
    if d.run().is_err() {
        return OptT::Unbounded;
    }
    let z: Vec<F> = (0..zd)
        .map(|v| match d.basic.iter().position(|&b| b == v) {
            Some(r) => d.rows[r][0].clone(),
            None => F::f_zero(),
        })
        .collect();
    OptT::Value(d.obj[0].plus(&o0), lift(&z))
}
impl Lp {
    fn from_poly(p: &Polyhedron) -> Lp {
        let conv = |f: &AffineForm| (f.coeffs.iter().map(|&a| q(a)).collect::<Vec<_>>(), q(f.constant));
        let mut lp = Lp {
            dim: p.dim,
            ineq: p.inequalities.iter().map(conv).collect(),
            eq: p.equalities.iter().map(conv).collect(),
        };
        lp.simplify();
        lp
    }

    /// Scale rows to primitive integer directions and keep the tightest row
    /// per direction. Exact for the rational relaxation.
    fn simplify(&mut self) {
        let mut best: HashMap<Vec<BigInt>, Q> = HashMap::new();
        let mut order: Vec<Vec<BigInt>> = Vec::new();
        for (a, c) in self.ineq.drain(..) {
            let den = a.iter().chain(std::iter::once(&c)).fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            let ints: Vec<BigInt> = a.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect();
            let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            let cc = &c * Q::from_integer(den.clone());
            if g.is_zero() {
                // constant row
                let key: Vec<BigInt> = Vec::new();
                let v = cc.clone();
                match best.get(&key) {
                    Some(old) if *old <= v => {}
                    _ => {
                        if !best.contains_key(&key) {
                            order.push(key.clone());
                        }
                        best.insert(key, v);
                    }
                }
                continue;
            }
            let dir: Vec<BigInt> = ints.iter().map(|x| x / &g).collect();
            let v = cc / Q::from_integer(g);
            match best.get(&dir) {
                Some(old) if *old <= v => {}
                _ => {
                    if !best.contains_key(&dir) {
                        order.push(dir.clone());
                    }
                    best.insert(dir, v);
                }
            }
        }
        for dir in order {
            let c = best.remove(&dir).unwrap();
            let a = if dir.is_empty() {
                vec![Q::zero(); self.dim]
            } else {
                dir.into_iter().map(Q::from_integer).collect()
            };
            self.ineq.push((a, c));
        }
    }

    /// Fix the leading variables to the given integer values.
    fn fix_prefix(&self, values: &[i64]) -> Lp {
        let k = values.len();
        let sub = |(a, c): &(Vec<Q>, Q)| {
            let mut c = c.clone();
            for (x, v) in a[..k].iter().zip(values) {
                if !x.is_zero() {
                    c += x * q(*v);
                }
            }
            (a[k..].to_vec(), c)
        };
        Lp {
            dim: self.dim - k,
            ineq: self.ineq.iter().map(sub).collect(),
            eq: self.eq.iter().map(sub).collect(),
        }
    }

    /// Maximise `objective` over the relaxation. Runs in `i128` rationals and
    /// falls back to arbitrary precision when an operation overflows.
    fn optimize(&self, objective: &[Q]) -> Opt {
        if let Some(small) = self.to_small() {
            let obj: Option<Vec<Sm>> = objective.iter().map(to_small).collect();
            if let Some(obj) = obj {
                SMALL_OVERFLOW.with(|f| f.set(false));
                let res = solve(small.0, &small.1, &small.2, &obj);
                if !SMALL_OVERFLOW.with(|f| f.get()) {
                    return match res {
                        OptT::Value(v, x) => Opt::Value(v.to_q(), x.iter().map(Field::to_q).collect()),
                        OptT::Unbounded => Opt::Unbounded,
                        OptT::Infeasible => Opt::Infeasible,
                    };
                }
            }
        }
        match solve(self.dim, &self.ineq, &self.eq, objective) {
            OptT::Value(v, x) => Opt::Value(v, x),
            OptT::Unbounded => Opt::Unbounded,
            OptT::Infeasible => Opt::Infeasible,
        }
    }

    #[allow(clippy::type_complexity)]
    fn to_small(&self) -> Option<(usize, Vec<(Vec<Sm>, Sm)>, Vec<(Vec<Sm>, Sm)>)> {
        let conv = |rows: &[(Vec<Q>, Q)]| -> Option<Vec<(Vec<Sm>, Sm)>> {
            rows.iter()
                .map(|(a, c)| Some((a.iter().map(to_small).collect::<Option<Vec<_>>>()?, to_small(c)?)))
                .collect()
        };
        Some((self.dim, conv(&self.ineq)?, conv(&self.eq)?))
    }

    fn bounds(&self, idx: usize) -> Result<Interval, LatticeError> {
        let mut e = vec![Q::zero(); self.dim];
        e[idx] = Q::one();
        let hi = match self.optimize(&e) {
            Opt::Infeasible => return Err(LatticeError::Infeasible),
            Opt::Unbounded => None,
            Opt::Value(v, _) => Some(v),
        };
        e[idx] = -Q::one();
        let lo = match self.optimize(&e) {
            Opt::Infeasible => return Err(LatticeError::Infeasible),
            Opt::Unbounded => None,
            Opt::Value(v, _) => Some(-v),
        };
        Ok(Interval { lo, hi })
    }
}

/// Exact range of one coordinate over the rational relaxation (equalities
/// and inequalities; congruences are ignored).
pub fn variable_bounds(poly: &Polyhedron, index: usize) -> Result<Interval, LatticeError> {
    if index >= poly.dim {
        return Err(LatticeError::Index(index));
    }
    Lp::from_poly(poly).bounds(index)
}

// ---------------------------------------------------------------------------
// enumeration

fn crt(r1: i128, m1: i128, r2: i128, m2: i128) -> Option<(i128, i128)> {
    let g = m1.gcd(&m2);
    if (r2 - r1).rem_euclid(g) != 0 {
        return None;
    }
    let l = m1 / g * m2;
    // r1 + m1 * t = r2 (mod m2)
    let m2g = m2 / g;
    let inv = if m2g == 1 {
        0
    } else {
        arith::mod_inv(((m1 / g) % m2g) as i64, m2g as u64)? as i128
    };
    let t = ((r2 - r1) / g).rem_euclid(m2g) * inv % m2g.max(1);
    Some(((r1 + m1 * t).rem_euclid(l), l))
}

/// Solutions of `a x = rhs (mod m)` as `x = x0 (mod step)`.
fn solve_linear(a: i128, rhs: i128, m: i128) -> Option<(i128, i128)> {
    let rhs = rhs.rem_euclid(m);
    let g = a.gcd(&m);
    if rhs % g != 0 {
        return None;
    }
    let mg = m / g;
    if mg == 1 {
        return Some((0, 1));
    }
    let inv = arith::mod_inv(((a / g).rem_euclid(mg)) as i64, mg as u64)? as i128;
    Some(((rhs / g) * inv % mg, mg))
}

/// Cheap refutation from rows involving a single variable, before any
/// linear programming.
fn quick_reject(poly: &Polyhedron) -> bool {
    let single = |f: &AffineForm| -> Option<Option<usize>> {
        let mut nz = f.coeffs.iter().enumerate().filter(|(_, a)| **a != 0);
        match (nz.next(), nz.next()) {
            (None, _) => Some(None),
            (Some((i, _)), None) => Some(Some(i)),
            _ => None,
        }
    };
    let mut lo: Vec<Option<i128>> = vec![None; poly.dim];
    let mut hi: Vec<Option<i128>> = vec![None; poly.dim];
    let mut cong: Vec<(i128, i128)> = vec![(0, 1); poly.dim];
    let tighten_lo = |lo: &mut Option<i128>, v: i128| *lo = Some(lo.map_or(v, |l| l.max(v)));
    let tighten_hi = |hi: &mut Option<i128>, v: i128| *hi = Some(hi.map_or(v, |h| h.min(v)));
    for f in &poly.inequalities {
        let c = f.constant as i128;
        match single(f) {
            Some(None) if c < 0 => return true,
            Some(Some(i)) => {
                let a = f.coeffs[i] as i128;
                if a > 0 {
                    tighten_lo(&mut lo[i], Integer::div_ceil(&(-c), &a));
                } else {
                    tighten_hi(&mut hi[i], Integer::div_floor(&c, &(-a)));
                }
            }
            _ => {}
        }
    }
    for f in &poly.equalities {
        let c = f.constant as i128;
        match single(f) {
            Some(None) if c != 0 => return true,
            Some(Some(i)) => {
                let a = f.coeffs[i] as i128;
                if c % a != 0 {
                    return true;
                }
                tighten_lo(&mut lo[i], -c / a);
                tighten_hi(&mut hi[i], -c / a);
            }
            _ => {}
        }
        let g = f.coeffs.iter().fold(0i128, |g, a| g.gcd(&(*a as i128)));
        if g != 0 && c % g != 0 {
            return true;
        }
    }
    for k in &poly.congruences {
        let m = k.modulus as i128;
        let rhs = k.residue as i128 - k.form.constant as i128;
        match single(&k.form) {
            Some(None) if rhs.rem_euclid(m) != 0 => return true,
            Some(Some(i)) => {
                let Some((x0, step)) = solve_linear(k.form.coeffs[i] as i128, rhs, m) else {
                    return true;
                };
                match crt(cong[i].0, cong[i].1, x0, step) {
                    Some(c) => cong[i] = c,
                    None => return true,
                }
            }
            _ => {}
        }
        let g = k.form.coeffs.iter().fold(m, |g, a| g.gcd(&(*a as i128)));
        if rhs % g != 0 {
            return true;
        }
    }
    (0..poly.dim).any(|i| match (lo[i], hi[i]) {
        (Some(l), Some(h)) => {
            let (r, step) = cong[i];
            l + (r - l).rem_euclid(step) > h
        }
        _ => false,
    })
}

/// Whether the equalities and congruences alone have an integer solution.
/// Congruences become equalities with one extra unknown each; the matrix is
/// brought to column echelon form by unimodular column operations.
fn lattice_feasible(poly: &Polyhedron) -> bool {
    let extra = poly.congruences.len();
    let width = poly.dim + extra;
    let mut rows: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    for f in &poly.equalities {
        let mut r: Vec<BigInt> = f.coeffs.iter().map(|&a| BigInt::from(a)).collect();
        r.resize(width, BigInt::zero());
        rows.push((r, BigInt::from(-f.constant)));
    }
    for (j, c) in poly.congruences.iter().enumerate() {
        let mut r: Vec<BigInt> = c.form.coeffs.iter().map(|&a| BigInt::from(a)).collect();
        r.resize(width, BigInt::zero());
        r[poly.dim + j] = -BigInt::from(c.modulus);
        rows.push((r, BigInt::from(c.residue as i128 - c.form.constant as i128)));
    }
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.0.clone()).collect();
    // pivot column of each row, if it introduced one
    let mut pivot: Vec<Option<usize>> = vec![None; m.len()];
    let mut k = 0;
    for i in 0..m.len() {
        if k == width {
            break;
        }
        loop {
            // smallest nonzero |entry| among columns >= k moves to column k
            let Some(j) = (k..width)
                .filter(|&j| !m[i][j].is_zero())
                .min_by(|&a, &b| m[i][a].abs().cmp(&m[i][b].abs()))
            else {
                break;
            };
            for row in m.iter_mut() {
                row.swap(k, j);
            }
            let mut done = true;
            for j in k + 1..width {
                if m[i][j].is_zero() {
                    continue;
                }
                let qt = m[i][j].div_floor(&m[i][k]);
                for row in m.iter_mut() {
                    let v = &row[k] * &qt;
                    row[j] -= v;
                }
                if !m[i][j].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !m[i][k].is_zero() {
            pivot[i] = Some(k);
            k += 1;
        }
    }
    // forward substitution in the transformed unknowns
    let mut y: Vec<BigInt> = Vec::new();
    for (i, (_, b)) in rows.iter().enumerate() {
        let known: BigInt = y.iter().zip(&m[i]).map(|(a, b)| a * b).sum();
        let rest = b - known;
        match pivot[i] {
            Some(p) => {
                let (qt, r) = rest.div_rem(&m[i][p]);
                if !r.is_zero() {
                    return false;
                }
                y.push(qt);
            }
            None => {
                if !rest.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

type ConeKey = (usize, Vec<Vec<i64>>, Vec<Vec<i64>>);

fn cone_cache() -> &'static Mutex<HashMap<ConeKey, Option<(usize, i64)>>> {
    type Cache = Mutex<HashMap<ConeKey, Option<(usize, i64)>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// A coordinate that is unbounded on the recession cone, with its direction.
/// For a nonempty polyhedron this decides boundedness; it depends only on the
/// coefficient rows, so results are cached.
fn unbounded_coordinate(poly: &Polyhedron, lp: &Lp) -> Option<(usize, i64)> {
    let primitive = |f: &AffineForm, sign: bool| -> Vec<i64> {
        let g = f.coeffs.iter().fold(0i64, |g, a| g.gcd(a)).max(1);
        let mut v: Vec<i64> = f.coeffs.iter().map(|a| a / g).collect();
        if sign && v.iter().find(|a| **a != 0).is_some_and(|a| *a < 0) {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        v
    };
    let mut ineq: Vec<Vec<i64>> = poly.inequalities.iter().map(|f| primitive(f, false)).collect();
    let mut eq: Vec<Vec<i64>> = poly.equalities.iter().map(|f| primitive(f, true)).collect();
    ineq.sort();
    ineq.dedup();
    eq.sort();
    eq.dedup();
    let key = (poly.dim, ineq, eq);
    if let Some(v) = cone_cache().lock().unwrap().get(&key) {
        return *v;
    }
    let rec = Lp {
        dim: lp.dim,
        ineq: lp.ineq.iter().map(|(a, _)| (a.clone(), Q::zero())).collect(),
        eq: lp.eq.iter().map(|(a, _)| (a.clone(), Q::zero())).collect(),
    };
    let mut found = None;
    'outer: for i in 0..poly.dim {
        for dir in [1i64, -1] {
            let mut e = vec![Q::zero(); poly.dim];
            e[i] = q(dir);
            if matches!(rec.optimize(&e), Opt::Unbounded) {
                found = Some((i, dir));
                break 'outer;
            }
        }
    }
    let mut cache = cone_cache().lock().unwrap();
    if cache.len() > 4096 {
        cache.clear();
    }
    cache.insert(key, found);
    found
}

struct Enumerator<'a> {
    poly: &'a Polyhedron,
    lp: Lp,
    // rows grouped by the last variable they involve
    ineq_at: Vec<Vec<usize>>,
    eq_at: Vec<Vec<usize>>,
    cong_at: Vec<Vec<usize>>,
    cap: usize,
    found: AtomicUsize,
    overflow: AtomicBool,
}

impl<'a> Enumerator<'a> {
    fn new(poly: &'a Polyhedron, cap: usize) -> Enumerator<'a> {
        let mut ineq_at = vec![Vec::new(); poly.dim.max(1)];
        let mut eq_at = vec![Vec::new(); poly.dim.max(1)];
        let mut cong_at = vec![Vec::new(); poly.dim.max(1)];
        for (i, f) in poly.inequalities.iter().enumerate() {
            ineq_at[f.last_var().unwrap_or(0)].push(i);
        }
        for (i, f) in poly.equalities.iter().enumerate() {
            eq_at[f.last_var().unwrap_or(0)].push(i);
        }
        for (i, c) in poly.congruences.iter().enumerate() {
            cong_at[c.form.last_var().unwrap_or(0)].push(i);
        }
        Enumerator {
            poly,
            lp: Lp::from_poly(poly),
            ineq_at,
            eq_at,
            cong_at,
            cap,
            found: AtomicUsize::new(0),
            overflow: AtomicBool::new(false),
        }
    }

    /// Candidate values of variable `i` given the prefix.
    fn candidates(&self, prefix: &[i64], lo: &Q, hi: &Q) -> Vec<i64> {
        let i = prefix.len();
        let (Some(lo), Some(hi)) = (lo.ceil().to_integer().to_i64(), hi.floor().to_integer().to_i64()) else {
            self.overflow.store(true, Ordering::Relaxed);
            return Vec::new();
        };
        if lo > hi {
            return Vec::new();
        }
        let (mut res, mut step) = (0i128, 1i128);
        for &ci in &self.cong_at[i] {
            let c = &self.poly.congruences[ci];
            let partial: i128 = c.form.constant as i128
                + prefix
                    .iter()
                    .zip(&c.form.coeffs)
                    .map(|(x, a)| *x as i128 * *a as i128)
                    .sum::<i128>();
            let Some((x0, mg)) = solve_linear(c.form.coeffs[i] as i128, c.residue as i128 - partial, c.modulus as i128)
            else {
                return Vec::new();
            };
            match crt(res, step, x0, mg) {
                Some((r, l)) => {
                    res = r;
                    step = l;
                }
                None => return Vec::new(),
            }
        }
        let first = lo as i128 + (res - lo as i128).rem_euclid(step);
        let mut out = Vec::new();
        let mut x = first;
        while x <= hi as i128 {
            out.push(x as i64);
            x += step;
        }
        out
    }

    fn rows_hold(&self, x: &[i64]) -> bool {
        let i = x.len() - 1;
        self.ineq_at[i].iter().all(|&r| self.poly.inequalities[r].eval(x) >= 0)
            && self.eq_at[i].iter().all(|&r| self.poly.equalities[r].eval(x) == 0)
            && self.cong_at[i].iter().all(|&r| self.poly.congruences[r].holds(x))
    }

    /// Divisibility obstructions on the rows not yet fully fixed.
    fn lattice_ok(&self, x: &[i64]) -> bool {
        let k = x.len();
        let partial = |f: &AffineForm| -> (i128, i128) {
            let p = f.constant as i128 + x.iter().zip(&f.coeffs).map(|(a, b)| *a as i128 * *b as i128).sum::<i128>();
            let g = f.coeffs[k..].iter().fold(0i128, |g, a| g.gcd(&(*a as i128)));
            (p, g)
        };
        for f in &self.poly.equalities {
            let (p, g) = partial(f);
            if (g == 0 && p != 0) || (g != 0 && p % g != 0) {
                return false;
            }
        }
        for c in &self.poly.congruences {
            let (p, g) = partial(&c.form);
            let g = g.gcd(&(c.modulus as i128));
            if (c.residue as i128 - p) % g != 0 {
                return false;
            }
        }
        true
    }

    fn capped(&self) -> bool {
        self.found.load(Ordering::Relaxed) > self.cap
    }

    fn dfs(&self, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if self.capped() {
            return;
        }
        let i = prefix.len();
        if i == self.poly.dim {
            out.push(prefix.clone());
            self.found.fetch_add(1, Ordering::Relaxed);
            return;
        }
        let sub = self.lp.fix_prefix(prefix);
        let Ok(iv) = sub.bounds(0) else {
            return;
        };
        let (Some(lo), Some(hi)) = (iv.lo, iv.hi) else {
            // bounded at the root implies bounded everywhere
            return;
        };
        for v in self.candidates(prefix, &lo, &hi) {
            prefix.push(v);
            if self.rows_hold(prefix) && self.lattice_ok(prefix) {
                self.dfs(prefix, out);
            }
            prefix.pop();
            if self.capped() {
                return;
            }
        }
    }

    fn run(&self) -> Result<Vec<Vec<i64>>, LatticeError> {
        if self.poly.dim == 0 {
            return Ok(if self.poly.contains(&[]) { vec![vec![]] } else { vec![] });
        }
        let root = match self.lp.bounds(0) {
            Ok(iv) => iv,
            Err(_) => return Ok(Vec::new()),
        };
        let (lo, hi) = (root.lo.unwrap(), root.hi.unwrap());
        let first = self.candidates(&[], &lo, &hi);
        let parts: Vec<Vec<Vec<i64>>> = first
            .par_iter()
            .map(|&v| {
                let mut out = Vec::new();
                let mut prefix = vec![v];
                if self.rows_hold(&prefix) && self.lattice_ok(&prefix) && !self.capped() {
                    self.dfs(&mut prefix, &mut out);
                }
                out
            })
            .collect();
        if self.overflow.load(Ordering::Relaxed) {
            return Err(LatticeError::Overflow);
        }
        let mut all: Vec<Vec<i64>> = parts.into_iter().flatten().collect();
        all.sort();
        Ok(all)
    }
}

fn integer_ray(lp: &Lp, poly: &Polyhedron, idx: usize, dir: i64) -> Option<Vec<i64>> {
    let mut rec = Lp {
        dim: lp.dim,
        ineq: lp.ineq.iter().map(|(a, _)| (a.clone(), Q::zero())).collect(),
        eq: lp.eq.iter().map(|(a, _)| (a.clone(), Q::zero())).collect(),
    };
    let mut unit = vec![Q::zero(); lp.dim];
    unit[idx] = Q::one();
    rec.eq.push((unit, q(-dir)));
    let Opt::Value(_, r) = rec.optimize(&vec![Q::zero(); lp.dim]) else {
        return None;
    };
    let den = r.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = r.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    let scale = poly
        .congruences
        .iter()
        .fold(BigInt::one(), |l, c| l.lcm(&BigInt::from(c.modulus)));
    ints.iter().map(|x| (x / &g * &scale).to_i64()).collect()
}

const MAX_RADIUS: i64 = 64;

/// All integer points, or a witness that there are infinitely many.
pub fn enumerate(poly: &Polyhedron, cap: usize) -> Result<Enumeration, LatticeError> {
    let cap = cap.max(1);
    if quick_reject(poly) || !lattice_feasible(poly) {
        return Ok(Enumeration::Finite(Vec::new()));
    }
    let lp = Lp::from_poly(poly);
    if matches!(lp.optimize(&vec![Q::zero(); poly.dim]), Opt::Infeasible) {
        return Ok(Enumeration::Finite(Vec::new()));
    }
    if let Some((i, dir)) = unbounded_coordinate(poly, &lp) {
        let ray = integer_ray(&lp, poly, i, dir).ok_or(LatticeError::Overflow)?;
        // an integer point: search growing boxes
        let mut radius = 8i64;
        while radius <= MAX_RADIUS {
            let mut boxed = poly.clone();
            for k in 0..poly.dim {
                let mut up = vec![0; poly.dim];
                up[k] = -1;
                boxed.inequalities.push(AffineForm::new(up.clone(), radius));
                up[k] = 1;
                boxed.inequalities.push(AffineForm::new(up, radius));
            }
            let e = Enumerator::new(&boxed, 1);
            let pts = e.run()?;
            if let Some(point) = pts.into_iter().next() {
                return Ok(Enumeration::Infinite { ray, point });
            }
            radius *= 8;
        }
        return Err(LatticeError::Undecided(MAX_RADIUS));
    }
    let e = Enumerator::new(poly, cap);
    let mut pts = e.run()?;
    if pts.len() > cap {
        pts.truncate(cap);
        return Ok(Enumeration::Capped(pts));
    }
    Ok(Enumeration::Finite(pts))
}

/// Brute force over a box; the reference the enumerator is tested against.
pub fn oracle_enumerate(poly: &Polyhedron, bounds: &[(i64, i64)]) -> Vec<Vec<i64>> {
    if bounds.len() != poly.dim || bounds.iter().any(|(lo, hi)| lo > hi) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut x: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    loop {
        if poly.contains(&x) {
            out.push(x.clone());
        }
        let mut k = poly.dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if x[k] < bounds[k].1 {
                x[k] += 1;
                for (j, b) in bounds.iter().enumerate().skip(k + 1) {
                    x[j] = b.0;
                }
                break;
            }
        }
        if poly.dim == 0 {
            return out;
        }
    }
}
