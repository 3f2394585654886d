//! Canonical rational expressions.
//!
//! An [`Expr`] is a reduced fraction of two [`Poly`]s whose indeterminates
//! are interned symbols or opaque function applications. The denominator is
//! monic under the internal monomial order and coprime to the numerator, so
//! structural equality is mathematical equality.

mod parse;
mod poly;
mod print;
mod symbol;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use parse::{parse_expr, Context};
pub use poly::{q_to_f64, Monomial, Poly, Q};
pub use symbol::{Indet, OpaqueFunc, Symbol, SymbolKind};

pub(crate) use symbol::valid_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("name `{0}` is already used for something else")]
    NameInUse(String),
    #[error("symbol `{name}` already exists as a {existing}, cannot redeclare as a {requested}")]
    KindConflict {
        name: String,
        existing: SymbolKind,
        requested: SymbolKind,
    },
    #[error("function `{0}` needs at least one argument slot")]
    ZeroArity(String),
    #[error("function `{0}` redeclared with different slots")]
    FunctionRedeclared(String),
    #[error("function `{name}` takes {expected} arguments, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("substitution makes the denominator `{0}` vanish")]
    SingularSubstitution(String),
    #[error("no value bound for `{0}`")]
    Unbound(String),
    #[error("pole: denominator `{0}` vanishes at the point")]
    Pole(String),
}

/// Reduced fraction `num / den` with monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Expr {
        Expr::constant(Q::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(int(n))
    }

    pub fn constant(c: Q) -> Expr {
        Expr {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn indet(i: Indet) -> Expr {
        Expr {
            num: Poly::var(i.index()),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }

    /// Reduces `num / den` to canonical form.
    pub fn from_fraction(num: Poly, den: Poly) -> Result<Expr, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Expr::zero());
        }
        if let Some(c) = den.as_constant() {
            return Ok(Expr::from_poly(num.scale(&c.recip())));
        }
        let g = poly::gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        Ok(Expr::normalized(num, den))
    }

    fn normalized(num: Poly, den: Poly) -> Expr {
        let lc = den.leading_coeff();
        if lc.is_one() {
            Expr { num, den }
        } else {
            let inv = lc.recip();
            Expr {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn as_indet(&self) -> Option<Indet> {
        if !self.den.is_one() || self.num.len() != 1 {
            return None;
        }
        let (m, c) = self.num.leading().unwrap();
        match m.pairs() {
            [(v, 1)] if c.is_one() => Some(Indet(*v)),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<Symbol> {
        self.as_indet().and_then(Indet::as_symbol)
    }

    /// Indeterminates occurring at the top level (applications count as one).
    pub fn indets(&self) -> BTreeSet<Indet> {
        let mut s = self.num.indets();
        s.extend(self.den.indets());
        s
    }

    /// Every symbol occurring anywhere, including inside application arguments.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for i in self.indets() {
            match i.as_application() {
                None => {
                    out.insert(Symbol(i));
                }
                Some((_, _, args)) => {
                    for a in &args {
                        a.collect_symbols(out);
                    }
                }
            }
        }
    }

    pub fn depends_on(&self, s: Symbol) -> bool {
        self.indets().into_iter().any(|i| indet_depends_on(i, s))
    }

    /// The numerator alone, scaled so its leading term in printing order has
    /// coefficient 1: a reproducible representative of the equation `self = 0`.
    pub fn equation_form(&self) -> Expr {
        let num = Expr::from_poly(self.num.clone());
        match print::structural_leading_coeff(&self.num) {
            Some(c) => num.scale(&c.recip()),
            None => num,
        }
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul_ref(&other.recip()?))
    }

    pub fn scale(&self, c: &Q) -> Expr {
        Expr {
            num: self.num.scale(c),
            den: if c.is_zero() { Poly::one() } else { self.den.clone() },
        }
    }

    pub fn pow(&self, e: i32) -> Result<Expr, ExprError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(Expr {
            num: base.num.pow(k),
            den: base.den.pow(k),
        })
    }

    fn add_ref(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            let t = self.num.add(&other.num);
            if self.den.is_one() {
                return Expr::from_poly(t);
            }
            return Expr::from_fraction(t, self.den.clone()).unwrap();
        }
        if self.den.is_one() {
            return Expr {
                num: self.num.mul(&other.den).add(&other.num),
                den: other.den.clone(),
            };
        }
        if other.den.is_one() {
            return Expr {
                num: other.num.mul(&self.den).add(&self.num),
                den: self.den.clone(),
            };
        }
        let g = poly::gcd(&self.den, &other.den);
        if g.is_one() {
            let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
            return Expr::normalized(num, self.den.mul(&other.den));
        }
        let b1 = self.den.div_exact(&g).unwrap();
        let d1 = other.den.div_exact(&g).unwrap();
        let t = self.num.mul(&d1).add(&other.num.mul(&b1));
        if t.is_zero() {
            return Expr::zero();
        }
        let h = poly::gcd(&t, &g);
        if h.is_one() {
            Expr::normalized(t, b1.mul(&d1).mul(&g))
        } else {
            let t = t.div_exact(&h).unwrap();
            let g = g.div_exact(&h).unwrap();
            Expr::normalized(t, b1.mul(&d1).mul(&g))
        }
    }

    fn mul_ref(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if self.den.is_one() && other.den.is_one() {
            return Expr::from_poly(self.num.mul(&other.num));
        }
        let g1 = poly::gcd(&self.num, &other.den);
        let g2 = poly::gcd(&other.num, &self.den);
        let a = exact_or_same(&self.num, &g1);
        let d = exact_or_same(&other.den, &g1);
        let c = exact_or_same(&other.num, &g2);
        let b = exact_or_same(&self.den, &g2);
        Expr::normalized(a.mul(&c), b.mul(&d))
    }

    /// Partial derivative in `s`, applying the chain rule through opaque
    /// applications.
    pub fn differentiate(&self, s: Symbol) -> Expr {
        let mut cache = HashMap::new();
        let dn = poly_derivative(&self.num, s, &mut cache);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_derivative(&self.den, s, &mut cache);
        if dd.is_zero() {
            return dn.mul_ref(&Expr::normalized(Poly::one(), self.den.clone()));
        }
        // (n' d - n d') / d^2
        let top = dn
            .mul_ref(&Expr::from_poly(self.den.clone()))
            .sub_ref(&dd.mul_ref(&Expr::from_poly(self.num.clone())));
        top.mul_ref(&Expr::normalized(Poly::one(), self.den.mul(&self.den)))
    }

    fn sub_ref(&self, other: &Expr) -> Expr {
        self.add_ref(&other.neg_ref())
    }

    fn neg_ref(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    /// Simultaneous substitution. Bindings of applications replace the whole
    /// application; symbols are also replaced inside application arguments.
    pub fn substitute(&self, bindings: &HashMap<Indet, Expr>) -> Result<Expr, ExprError> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut cache: HashMap<u32, Option<Expr>> = HashMap::new();
        let n = subst_poly(&self.num, bindings, &mut cache)?;
        if self.den.is_one() {
            return Ok(n);
        }
        let d = subst_poly(&self.den, bindings, &mut cache)?;
        if d.is_zero() {
            return Err(ExprError::SingularSubstitution(
                Expr::from_poly(self.den.clone()).to_string(),
            ));
        }
        n.checked_div(&d)
    }

    /// Convenience wrapper keyed by symbols.
    pub fn subs(&self, bindings: &[(Symbol, Expr)]) -> Result<Expr, ExprError> {
        let map: HashMap<Indet, Expr> = bindings.iter().map(|(s, e)| (s.indet(), e.clone())).collect();
        self.substitute(&map)
    }

    /// Exact value at a point. Every indeterminate, including each distinct
    /// application, needs a binding.
    pub fn eval(&self, point: &HashMap<Indet, Q>) -> Result<Q, ExprError> {
        self.eval_with(&|i| point.get(&i).cloned())
    }

    pub fn eval_with(&self, point: &dyn Fn(Indet) -> Option<Q>) -> Result<Q, ExprError> {
        let f = |v: u32| point(Indet(v));
        let n = self
            .num
            .eval(&f)
            .map_err(|v| ExprError::Unbound(Indet(v).to_string()))?;
        if self.den.is_one() {
            return Ok(n);
        }
        let d = self
            .den
            .eval(&f)
            .map_err(|v| ExprError::Unbound(Indet(v).to_string()))?;
        if d.is_zero() {
            return Err(ExprError::Pole(Expr::from_poly(self.den.clone()).to_string()));
        }
        Ok(n / d)
    }

    pub fn eval_f64(&self, point: &dyn Fn(Indet) -> Option<f64>) -> Result<f64, ExprError> {
        let f = |v: u32| point(Indet(v));
        let n = self
            .num
            .eval_f64(&f)
            .map_err(|v| ExprError::Unbound(Indet(v).to_string()))?;
        let d = self
            .den
            .eval_f64(&f)
            .map_err(|v| ExprError::Unbound(Indet(v).to_string()))?;
        Ok(n / d)
    }

    /// Numerator's leading coefficient sign times the denominator's.
    pub fn generic_sign(&self) -> i32 {
        let sn = self.num.leading_sign();
        let sd = if self.den.leading_coeff().is_negative() { -1 } else { 1 };
        sn * sd
    }

    /// Structural sort key that does not depend on interning order.
    pub fn sort_key(&self) -> String {
        self.to_string()
    }
}

fn exact_or_same(p: &Poly, g: &Poly) -> Poly {
    if g.is_one() {
        p.clone()
    } else {
        p.div_exact(g).expect("gcd divides")
    }
}

fn indet_depends_on(i: Indet, s: Symbol) -> bool {
    if i == s.indet() {
        return true;
    }
    match i.as_application() {
        None => false,
        Some((_, _, args)) => args.iter().any(|a| a.depends_on(s)),
    }
}

/// d(var)/ds for a single indeterminate.
fn indet_derivative(v: u32, s: Symbol, cache: &mut HashMap<u32, Expr>) -> Expr {
    if let Some(e) = cache.get(&v) {
        return e.clone();
    }
    let i = Indet(v);
    let out = if i == s.indet() {
        Expr::one()
    } else {
        match i.as_application() {
            None => Expr::zero(),
            Some((func, deriv, args)) => {
                let mut acc = Expr::zero();
                for (slot, a) in args.iter().enumerate() {
                    let da = a.differentiate(s);
                    if da.is_zero() {
                        continue;
                    }
                    let mut d2 = deriv.clone();
                    d2[slot] += 1;
                    let app = Expr::indet(symbol::intern_apply(func, d2, args.clone()));
                    acc = acc + da * app;
                }
                acc
            }
        }
    };
    cache.insert(v, out.clone());
    out
}

fn poly_derivative(p: &Poly, s: Symbol, cache: &mut HashMap<u32, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for v in p.vars() {
        let dv = indet_derivative(v, s, cache);
        if dv.is_zero() {
            continue;
        }
        let dp = Expr::from_poly(p.partial(v));
        acc = acc + dp * dv;
    }
    acc
}

/// Image of one indeterminate under the bindings, `None` when unchanged.
fn subst_indet(
    v: u32,
    bindings: &HashMap<Indet, Expr>,
    cache: &mut HashMap<u32, Option<Expr>>,
) -> Result<Option<Expr>, ExprError> {
    if let Some(e) = cache.get(&v) {
        return Ok(e.clone());
    }
    let i = Indet(v);
    let out = if let Some(e) = bindings.get(&i) {
        Some(e.clone())
    } else {
        match i.as_application() {
            None => None,
            Some((func, deriv, args)) => {
                let mut changed = false;
                let mut new_args = Vec::with_capacity(args.len());
                for a in &args {
                    let b = a.substitute(bindings)?;
                    changed |= &b != a;
                    new_args.push(b);
                }
                changed.then(|| Expr::indet(symbol::intern_apply(func, deriv, new_args)))
            }
        }
    };
    cache.insert(v, out.clone());
    Ok(out)
}

fn subst_poly(
    p: &Poly,
    bindings: &HashMap<Indet, Expr>,
    cache: &mut HashMap<u32, Option<Expr>>,
) -> Result<Expr, ExprError> {
    let mut images: HashMap<u32, Expr> = HashMap::new();
    for v in p.vars() {
        if let Some(e) = subst_indet(v, bindings, cache)? {
            images.insert(v, e);
        }
    }
    if images.is_empty() {
        return Ok(Expr::from_poly(p.clone()));
    }
    // Common denominator: product of image denominators to their max degree.
    let mut maxdeg: HashMap<u32, u32> = HashMap::new();
    for (&v, e) in &images {
        if !e.den.is_one() {
            maxdeg.insert(v, p.degree_in(v));
        }
    }
    let mut common = Poly::one();
    for (&v, &d) in &maxdeg {
        common = common.mul(&images[&v].den.pow(d));
    }
    let mut num_pows: HashMap<(u32, u32), Poly> = HashMap::new();
    let mut den_pows: HashMap<(u32, u32), Poly> = HashMap::new();
    let mut total = Poly::zero();
    for (m, c) in p.terms() {
        let mut kept = Vec::new();
        let mut t = Poly::one();
        let mut seen_den: BTreeSet<u32> = BTreeSet::new();
        for &(v, e) in m.pairs() {
            match images.get(&v) {
                None => kept.push((v, e)),
                Some(img) => {
                    let np = num_pows
                        .entry((v, e))
                        .or_insert_with(|| img.num.pow(e))
                        .clone();
                    t = t.mul(&np);
                    if let Some(&d) = maxdeg.get(&v) {
                        seen_den.insert(v);
                        if d > e {
                            let dp = den_pows
                                .entry((v, d - e))
                                .or_insert_with(|| img.den.pow(d - e))
                                .clone();
                            t = t.mul(&dp);
                        }
                    }
                }
            }
        }
        for (&v, &d) in &maxdeg {
            if !seen_den.contains(&v) {
                let dp = den_pows
                    .entry((v, d))
                    .or_insert_with(|| images[&v].den.pow(d))
                    .clone();
                t = t.mul(&dp);
            }
        }
        total = total.add(&t.mul_term(&Monomial::from_pairs(kept), c));
    }
    Expr::from_fraction(total, common)
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        s.expr()
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(q: Q) -> Expr {
        Expr::constant(q)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);

impl Expr {
    fn div_panicking(&self, rhs: &Expr) -> Expr {
        self.checked_div(rhs).expect("division by the zero expression")
    }
}

binop!(Div, div, div_panicking);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::render(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(name: &str) -> Expr {
        Symbol::coordinate(name).unwrap().expr()
    }

    #[test]
    fn fraction_reduces() {
        let x = sym("ek_x");
        let e = (&x * &x - Expr::one()) / (&x - Expr::one());
        assert_eq!(e, &x + Expr::one());
    }

    #[test]
    fn zero_test() {
        let x = sym("ek_x");
        let e = (&x + Expr::one()) * (&x - Expr::one()) - &x * &x + Expr::one();
        assert!(e.is_zero());
    }

    #[test]
    fn derivative_product() {
        let x = Symbol::coordinate("ek_x").unwrap();
        let y = sym("ek_y");
        let e = x.expr() * x.expr() * y.clone();
        assert_eq!(e.differentiate(x), Expr::int(2) * x.expr() * y);
    }

    #[test]
    fn derivative_of_quotient() {
        let x = Symbol::coordinate("ek_x").unwrap();
        let e = Expr::one() / (x.expr() + Expr::one());
        let expected = -(Expr::one() / ((x.expr() + Expr::one()) * (x.expr() + Expr::one())));
        assert_eq!(e.differentiate(x), expected);
    }

    #[test]
    fn singular_substitution() {
        let x = Symbol::coordinate("ek_x").unwrap();
        let y = Symbol::coordinate("ek_y").unwrap();
        let e = x.expr() / (x.expr() - y.expr());
        let err = e.subs(&[(y, x.expr())]).unwrap_err();
        assert!(matches!(err, ExprError::SingularSubstitution(_)));
    }

    #[test]
    fn pole_detected() {
        let x = Symbol::coordinate("ek_x").unwrap();
        let e = Expr::one() / (x.expr() - Expr::one());
        let mut pt = HashMap::new();
        pt.insert(x.indet(), int(1));
        assert!(matches!(e.eval(&pt), Err(ExprError::Pole(_))));
        pt.insert(x.indet(), int(3));
        assert_eq!(e.eval(&pt).unwrap(), rat(1, 2));
    }
}
