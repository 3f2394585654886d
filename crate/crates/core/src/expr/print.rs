//! Deterministic text rendering.
//!
//! Terms are ordered by graded-lex over the printed names of their
//! indeterminates (not interning order), and the fraction is rescaled so the
//! leading denominator coefficient is 1 under that order. The output parses
//! back to the same expression.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_traits::{One, Signed};

use super::poly::{Poly, Q};
use super::symbol::Indet;
use super::Expr;

type Term = (Vec<(String, u32)>, u32, Q);

fn structural_terms(p: &Poly, keys: &mut HashMap<u32, String>) -> Vec<Term> {
    let mut out: Vec<Term> = p
        .terms()
        .map(|(m, c)| {
            let mut vars: Vec<(String, u32)> = m
                .pairs()
                .iter()
                .map(|&(v, e)| {
                    let k = keys.entry(v).or_insert_with(|| Indet(v).key()).clone();
                    (k, e)
                })
                .collect();
            vars.sort();
            (vars, m.degree(), c.clone())
        })
        .collect();
    out.sort_by(|a, b| cmp_terms(b, a));
    out
}

/// Graded lex with alphabetically smaller names weighing more.
fn cmp_terms(a: &Term, b: &Term) -> Ordering {
    match a.1.cmp(&b.1) {
        Ordering::Equal => {}
        o => return o,
    }
    for (x, y) in a.0.iter().zip(b.0.iter()) {
        match x.0.cmp(&y.0) {
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
            Ordering::Equal => match x.1.cmp(&y.1) {
                Ordering::Equal => {}
                o => return o,
            },
        }
    }
    a.0.len().cmp(&b.0.len())
}

fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn render_terms(terms: &[Term]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, (vars, _, c)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if k == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if vars.is_empty() || !a.is_one() {
            factors.push(fmt_q(&a));
        }
        for (name, e) in vars {
            if *e == 1 {
                factors.push(name.clone());
            } else {
                factors.push(format!("{name}^{e}"));
            }
        }
        s.push_str(&factors.join("*"));
    }
    s
}

/// A term list is a single factor when it prints without operators at top level.
fn is_atom(terms: &[Term]) -> bool {
    match terms {
        [(vars, _, c)] => {
            (c.is_one() && vars.len() == 1)
                || (vars.is_empty() && c.is_integer() && !c.is_negative())
        }
        _ => false,
    }
}

pub(super) fn render(e: &Expr) -> String {
    let mut keys = HashMap::new();
    let mut num = structural_terms(e.num(), &mut keys);
    let mut den = structural_terms(e.den(), &mut keys);
    let lead = den[0].2.clone();
    if !lead.is_one() {
        let inv = lead.recip();
        for t in num.iter_mut().chain(den.iter_mut()) {
            t.2 = &t.2 * &inv;
        }
    }
    if den.len() == 1 && den[0].0.is_empty() {
        return render_terms(&num);
    }
    let n = render_terms(&num);
    let d = render_terms(&den);
    let n = if num.len() == 1 { n } else { format!("({n})") };
    let d = if is_atom(&den) { d } else { format!("({d})") };
    format!("{n}/{d}")
}

/// Coefficient of the leading term under the printing order.
pub(super) fn structural_leading_coeff(p: &Poly) -> Option<Q> {
    let mut keys = HashMap::new();
    structural_terms(p, &mut keys).into_iter().next().map(|t| t.2)
}
