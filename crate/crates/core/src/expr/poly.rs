//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept in a `BTreeMap` ordered by graded-lex on indeterminate
//! indices (lower index = higher priority), so the leading term is the last
//! entry. Exact division, pseudo-remainders and a recursive primitive-PRS gcd
//! are enough to keep rational expressions reduced.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::symbol::Indet;

pub type Q = BigRational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    deg: u32,
    vars: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn var(v: u32, e: u32) -> Monomial {
        if e == 0 {
            return Monomial::one();
        }
        Monomial {
            deg: e,
            vars: vec![(v, e)],
        }
    }

    pub fn from_pairs(mut vars: Vec<(u32, u32)>) -> Monomial {
        vars.retain(|&(_, e)| e > 0);
        vars.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(vars.len());
        for (v, e) in vars {
            match merged.last_mut() {
                Some((w, f)) if *w == v => *f += e,
                _ => merged.push((v, e)),
            }
        }
        let deg = merged.iter().map(|&(_, e)| e).sum();
        Monomial { deg, vars: merged }
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.vars
    }

    pub fn is_one(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn exponent(&self, v: u32) -> u32 {
        match self.vars.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(k) => self.vars[k].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.vars.len() + other.vars.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() && j < other.vars.len() {
            let (a, b) = (self.vars[i], other.vars[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.vars[i..]);
        out.extend_from_slice(&other.vars[j..]);
        Monomial {
            deg: self.deg + other.deg,
            vars: out,
        }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.vars.len());
        let mut j = 0;
        for &(v, e) in &self.vars {
            if j < other.vars.len() && other.vars[j].0 < v {
                return None;
            }
            if j < other.vars.len() && other.vars[j].0 == v {
                let f = other.vars[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((v, e - f)),
                }
            } else {
                out.push((v, e));
            }
        }
        if j < other.vars.len() {
            return None;
        }
        Some(Monomial {
            deg: self.deg - other.deg,
            vars: out,
        })
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() && j < other.vars.len() {
            let (a, b) = (self.vars[i], other.vars[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((a.0, a.1.min(b.1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        let deg = out.iter().map(|&(_, e)| e).sum();
        Monomial { deg, vars: out }
    }

    /// Removes `v` and returns its exponent alongside the rest.
    fn split(&self, v: u32) -> (u32, Monomial) {
        let e = self.exponent(v);
        if e == 0 {
            return (0, self.clone());
        }
        let vars: Vec<_> = self.vars.iter().copied().filter(|&(w, _)| w != v).collect();
        (
            e,
            Monomial {
                deg: self.deg - e,
                vars,
            },
        )
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.deg.cmp(&other.deg) {
            Ordering::Equal => {}
            o => return o,
        }
        // Lex with lower indices weighing more.
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.vars.get(i), other.vars.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(a, e)), Some(&(b, f))) => match a.cmp(&b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match e.cmp(&f) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: u32) -> Poly {
        Poly::term(Monomial::var(v, 1), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, Q)>) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn leading(&self) -> Option<(&Monomial, &Q)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Q {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.deg).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for &(v, _) in &m.vars {
                s.insert(v);
            }
        }
        s
    }

    pub fn indets(&self) -> BTreeSet<Indet> {
        self.vars().into_iter().map(Indet).collect()
    }

    pub fn contains_var(&self, v: u32) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn degree_in(&self, v: u32) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut acc: HashMap<Monomial, Q> = HashMap::with_capacity(self.len() * other.len());
        for (m, c) in &self.terms {
            for (n, d) in &other.terms {
                let e = acc.entry(m.mul(n)).or_insert_with(Q::zero);
                *e += c * d;
            }
        }
        Poly {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Partial derivative treating every indeterminate as independent.
    pub fn partial(&self, v: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            if e == 0 {
                continue;
            }
            let m2 = rest.mul(&Monomial::var(v, e - 1));
            out.add_term(m2, c * Q::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Coefficients as a polynomial in `v`: entry `k` multiplies `v^k`.
    pub fn coeffs_in(&self, v: u32) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    pub fn from_coeffs_in(v: u32, coeffs: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (k, c) in coeffs.iter().enumerate() {
            let m = Monomial::var(v, k as u32);
            for (n, d) in &c.terms {
                out.add_term(n.mul(&m), d.clone());
            }
        }
        out
    }

    /// Greatest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_monomial(&self, m: &Monomial) -> Option<Poly> {
        let mut terms = BTreeMap::new();
        for (n, c) in &self.terms {
            terms.insert(n.div(m)?, c.clone());
        }
        Some(Poly { terms })
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if d.len() == 1 {
            let (m, c) = d.leading().unwrap();
            return self.div_monomial(m).map(|p| p.scale(&c.recip()));
        }
        let (ldm, ldc) = d.leading().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let inv = ldc.recip();
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((rm, rc)) = r.leading() {
            let tm = rm.div(&ldm)?;
            let tc = rc * &inv;
            // r -= t * d
            for (n, c) in &d.terms {
                r.add_term(n.mul(&tm), -(c * &tc));
            }
            q.add_term(tm, tc);
        }
        Some(q)
    }

    /// Pseudo-remainder of `self` by `b` with respect to `v`.
    fn prem(&self, b: &Poly, v: u32) -> Poly {
        let db = b.degree_in(v);
        let bc = b.coeffs_in(v);
        let lb = bc[db as usize].clone();
        let mut r = self.clone();
        loop {
            let dr = r.degree_in(v);
            if r.is_zero() || dr < db {
                return r;
            }
            let lr = r.coeffs_in(v)[dr as usize].clone();
            let shift = Monomial::var(v, dr - db);
            let t = lr.mul(&Poly::term(shift, Q::one()));
            r = lb.mul(&r).sub(&t.mul(b));
        }
    }

    fn content_in(&self, v: u32) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(v) {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn primitive_in(&self, v: u32) -> Poly {
        let c = self.content_in(v);
        if c.is_one() {
            return self.clone();
        }
        self.div_exact(&c).expect("content divides")
    }

    pub fn eval(&self, point: &dyn Fn(u32) -> Option<Q>) -> Result<Q, u32> {
        let mut cache: HashMap<u32, Q> = HashMap::new();
        let mut sum = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.vars {
                let x = match cache.get(&v) {
                    Some(x) => x.clone(),
                    None => {
                        let x = point(v).ok_or(v)?;
                        cache.insert(v, x.clone());
                        x
                    }
                };
                t *= num_traits::pow(x, e as usize);
            }
            sum += t;
        }
        Ok(sum)
    }

    pub fn eval_f64(&self, point: &dyn Fn(u32) -> Option<f64>) -> Result<f64, u32> {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut t = q_to_f64(c);
            for &(v, e) in &m.vars {
                t *= point(v).ok_or(v)?.powi(e as i32);
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Sign of the leading coefficient (0 for the zero polynomial).
    pub fn leading_sign(&self) -> i32 {
        match self.leading() {
            None => 0,
            Some((_, c)) if c.is_negative() => -1,
            Some(_) => 1,
        }
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Monic gcd of two polynomials over the rationals.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    if a.len() == 1 || b.len() == 1 {
        return Poly::term(mg, Q::one());
    }
    let a1 = a.div_monomial(&ma).unwrap();
    let b1 = b.div_monomial(&mb).unwrap();
    let g = gcd_rec(&a1, &b1);
    if mg.is_one() {
        g
    } else {
        g.mul_term(&mg, &Q::one())
    }
}

fn gcd_rec(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a.len() == 1 || b.len() == 1 {
        return gcd(a, b);
    }
    let va = a.vars();
    let vb = b.vars();
    if va.is_disjoint(&vb) {
        return Poly::one();
    }
    // A variable present on one side only: the gcd divides every coefficient.
    if let Some(&v) = va.difference(&vb).next() {
        return fold_gcd(b, a.coeffs_in(v));
    }
    if let Some(&v) = vb.difference(&va).next() {
        return fold_gcd(a, b.coeffs_in(v));
    }
    // Degree bounds from univariate images decide most cases cheaply.
    let bounds: Vec<(u32, Option<u32>)> = va.iter().map(|&v| (v, degree_bound(a, b, v))).collect();
    if bounds.iter().all(|(_, d)| *d == Some(0)) {
        return Poly::one();
    }
    if let Some(&(v, _)) = bounds.iter().find(|(_, d)| *d == Some(0)) {
        // The gcd is free of `v`, so it divides every coefficient in `v`.
        let mut cs: Vec<Poly> = a.coeffs_in(v);
        cs.extend(b.coeffs_in(v));
        cs.retain(|c| !c.is_zero());
        cs.sort_by_key(|c| c.len());
        let first = cs.remove(0);
        return fold_gcd(&first, cs);
    }
    for (x, y) in [(a, b), (b, a)] {
        if bounds.iter().all(|(v, d)| *d == Some(y.degree_in(*v))) && x.div_exact(y).is_some() {
            return y.monic();
        }
    }
    // A primitive polynomial of degree one in some variable is irreducible,
    // so its gcd with anything is itself or 1.
    for (x, y) in [(a, b), (b, a)] {
        if let Some(&v) = va.iter().find(|&&v| x.degree_in(v) == 1) {
            let cx = x.content_in(v);
            let cy = y.content_in(v);
            let px = if cx.is_one() { x.clone() } else { x.div_exact(&cx).unwrap() };
            let py = if cy.is_one() { y.clone() } else { y.div_exact(&cy).unwrap() };
            let c = gcd(&cx, &cy);
            let g = if py.div_exact(&px).is_some() { px.mul(&c) } else { c };
            return g.monic();
        }
    }
    if let Some(g) = heuristic_gcd(a, b) {
        return g.monic();
    }
    // Main variable: smallest degree bound keeps the remainder sequence short.
    let v = bounds
        .iter()
        .min_by_key(|(v, d)| (d.unwrap_or(u32::MAX), a.degree_in(*v) + b.degree_in(*v), *v))
        .map(|(v, _)| *v)
        .unwrap();
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let c = gcd(&ca, &cb);
    let pa = if ca.is_one() { a.clone() } else { a.div_exact(&ca).unwrap() };
    let pb = if cb.is_one() { b.clone() } else { b.div_exact(&cb).unwrap() };
    let g = prs(pa, pb, v);
    g.mul(&c).monic()
}

/// `p` scaled to coprime integer coefficients with positive leading one.
fn integer_primitive(p: &Poly) -> (Poly, Q) {
    let mut l = BigInt::one();
    for c in p.terms.values() {
        l = l.lcm(c.denom());
    }
    let mut g = BigInt::zero();
    for c in p.terms.values() {
        g = g.gcd(&(c.numer() * (&l / c.denom())));
    }
    let k = Q::new(l, g);
    let k = if p.leading_sign() < 0 { -k } else { k };
    (p.scale(&k), k)
}

fn max_norm(p: &Poly) -> BigInt {
    p.terms.values().map(|c| c.numer().abs()).max().unwrap_or_default()
}

fn integer_content(p: &Poly) -> BigInt {
    p.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c.numer()))
}

/// Cap on evaluation point size times degree, in bits.
const HEU_BIT_LIMIT: u64 = 400_000;

/// Heuristic gcd of integer polynomials: evaluate one variable at a large
/// integer, recurse, and read the gcd back from its balanced base-ξ digits.
/// The candidate is accepted only if it divides both inputs.
fn heuristic_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    let (a, _) = integer_primitive(a);
    let (b, _) = integer_primitive(b);
    heu(&a, &b)
}

fn heu(a: &Poly, b: &Poly) -> Option<Poly> {
    if a.is_zero() {
        return Some(b.clone());
    }
    if b.is_zero() {
        return Some(a.clone());
    }
    let ca = integer_content(a);
    let cb = integer_content(b);
    let c = Q::from_integer(ca.gcd(&cb));
    if let (Some(_), Some(_)) = (a.as_constant(), b.as_constant()) {
        return Some(Poly::constant(c));
    }
    let pa = a.scale(&Q::from_integer(ca).recip());
    let pb = b.scale(&Q::from_integer(cb).recip());
    let vars: BTreeSet<u32> = pa.vars().union(&pb.vars()).copied().collect();
    // Evaluating the variable of lowest degree keeps the images small.
    let v = *vars.iter().min_by_key(|&&v| (pa.degree_in(v).max(pb.degree_in(v)), v))?;
    let deg = pa.degree_in(v).max(pb.degree_in(v)) as u64 + 1;
    let mut xi: BigInt = BigInt::from(2) * max_norm(&pa).min(max_norm(&pb)) + BigInt::from(29);
    for _ in 0..6 {
        if xi.bits() * deg > HEU_BIT_LIMIT {
            return None;
        }
        let x = Q::from_integer(xi.clone());
        let gamma = heu(&eval_var(&pa, v, &x), &eval_var(&pb, v, &x))?;
        let g = interpolate(&gamma, v, &xi);
        if !g.is_zero() {
            let g = g.scale(&Q::from_integer(integer_content(&g)).recip());
            if pa.div_exact(&g).is_some() && pb.div_exact(&g).is_some() {
                return Some(g.scale(&c));
            }
        }
        xi = xi * BigInt::from(73794) / BigInt::from(27011);
    }
    None
}

fn eval_var(p: &Poly, v: u32, x: &Q) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        let (e, rest) = m.split(v);
        out.add_term(rest, c * num_traits::pow(x.clone(), e as usize));
    }
    out
}

fn symmetric_mod(n: &BigInt, m: &BigInt) -> BigInt {
    let r = n.mod_floor(m);
    if BigInt::from(2) * &r > *m {
        r - m
    } else {
        r
    }
}

fn interpolate(gamma: &Poly, v: u32, xi: &BigInt) -> Poly {
    let mut out = Poly::zero();
    let mut rest = gamma.clone();
    let mut i = 0;
    let inv = Q::from_integer(xi.clone()).recip();
    while !rest.is_zero() {
        let mut digit = Poly::zero();
        for (m, c) in &rest.terms {
            let d = symmetric_mod(c.numer(), xi);
            if !d.is_zero() {
                digit.add_term(m.clone(), Q::from_integer(d));
            }
        }
        for (m, c) in &digit.terms {
            out.add_term(m.mul(&Monomial::var(v, i)), c.clone());
        }
        rest = rest.sub(&digit).scale(&inv);
        i += 1;
    }
    out
}

/// `a` restricted to the line through `point` in direction `v`.
fn univariate_image(p: &Poly, v: u32, point: &HashMap<u32, Q>) -> Vec<Q> {
    let mut out = vec![Q::zero(); p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut t = c.clone();
        let mut e = 0;
        for &(w, k) in &m.vars {
            if w == v {
                e = k;
            } else {
                t *= num_traits::pow(point[&w].clone(), k as usize);
            }
        }
        out[e as usize] += t;
    }
    out
}

fn trim(p: &mut Vec<Q>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn univariate_gcd_degree(mut a: Vec<Q>, mut b: Vec<Q>) -> u32 {
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let lb = b.last().unwrap().recip();
        while a.len() >= b.len() && !a.is_empty() {
            let f = a.last().unwrap() * &lb;
            let shift = a.len() - b.len();
            for (i, c) in b.iter().enumerate() {
                a[i + shift] -= &f * c;
            }
            a.pop();
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    (a.len() as u32).saturating_sub(1)
}

/// Upper bound on `deg_v gcd(a, b)`: the degree of the gcd of images at a
/// point where neither leading coefficient in `v` vanishes.
fn degree_bound(a: &Poly, b: &Poly, v: u32) -> Option<u32> {
    let others: BTreeSet<u32> = a.vars().union(&b.vars()).copied().filter(|&w| w != v).collect();
    let (da, db) = (a.degree_in(v) as usize, b.degree_in(v) as usize);
    // Fixed small primes as coordinates keep the bound reproducible.
    const VALUES: [i64; 12] = [3, -5, 7, 11, -13, 17, 19, -23, 29, 31, -37, 41];
    for attempt in 0..3usize {
        let point: HashMap<u32, Q> = others
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, Q::from_integer(BigInt::from(VALUES[(i * 5 + attempt * 7) % VALUES.len()] + attempt as i64))))
            .collect();
        let ia = univariate_image(a, v, &point);
        let ib = univariate_image(b, v, &point);
        if ia[da].is_zero() || ib[db].is_zero() {
            continue;
        }
        return Some(univariate_gcd_degree(ia, ib));
    }
    None
}

fn fold_gcd(seed: &Poly, coeffs: Vec<Poly>) -> Poly {
    let mut g = seed.clone();
    // Smaller coefficients first tend to collapse the gcd sooner.
    let mut coeffs: Vec<Poly> = coeffs.into_iter().filter(|c| !c.is_zero()).collect();
    coeffs.sort_by_key(|c| c.len());
    for c in coeffs {
        g = gcd(&g, &c);
        if g.is_one() {
            break;
        }
    }
    g.monic()
}

fn prs(mut a: Poly, mut b: Poly, v: u32) -> Poly {
    if a.degree_in(v) < b.degree_in(v) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.degree_in(v) == 0 {
            return Poly::one();
        }
        let r = a.prem(&b, v);
        if r.is_zero() {
            return b.primitive_in(v).monic();
        }
        if r.degree_in(v) == 0 {
            return Poly::one();
        }
        a = b;
        b = r.primitive_in(v);
    }
}
