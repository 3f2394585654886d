use std::collections::HashMap;

use num_traits::Zero;

use crate::engine::{greedy_characters, CharacterReport};
use crate::expr::{Expr, Indet, Q};
use crate::group::invert_q;
use crate::random::Sampler;

use super::complete::{prolong_system, ProlongedSystem};
use super::{JetError, JetSystem};

/// Number of generic points at which the characters must agree.
const SAMPLE_POINTS: u64 = 3;

/// `γ_q(du^α_{J,k})` over the parametric jets of order `q`, for every
/// `(α, J)` with `|J| = q−1` and every direction `k`: `symbols[row][k][col]`.
fn symbol_table(r: &JetSystem) -> Result<Vec<Vec<Vec<Expr>>>, JetError> {
    let space = r.space();
    let q = r.order();
    let cols = r.parametric(q)?;
    let mut table = Vec::new();
    for a in 0..space.m() {
        for j in space.multi_indices(q - 1) {
            let mut per_dir = Vec::with_capacity(space.n());
            for k in 0..space.n() {
                let mut idx = j.clone();
                idx[k] += 1;
                let jet = space.jet(a, &idx)?;
                let row: Vec<Expr> = match r.rhs_of(jet) {
                    Some(rhs) => cols.iter().map(|c| rhs.differentiate(*c)).collect(),
                    None => cols
                        .iter()
                        .map(|c| if *c == jet { Expr::one() } else { Expr::zero() })
                        .collect(),
                };
                per_dir.push(row);
            }
            table.push(per_dir);
        }
    }
    Ok(table)
}

fn evaluate(table: &[Vec<Vec<Expr>>], point: &HashMap<Indet, Q>) -> Result<Vec<Vec<Vec<Q>>>, JetError> {
    table
        .iter()
        .map(|dirs| {
            dirs.iter()
                .map(|row| row.iter().map(|e| e.eval(point).map_err(JetError::from)).collect())
                .collect()
        })
        .collect()
}

fn mat_vec(m: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| row.iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum())
        .collect()
}

fn characters_at(
    num: &[Vec<Vec<Q>>],
    n: usize,
    contact: Option<&[Vec<Q>]>,
    horizontal_inv: Option<&[Vec<Q>]>,
    r2: usize,
    seed: u64,
) -> CharacterReport {
    let width = num.first().and_then(|d| d.first()).map_or(0, |r| r.len());
    let block = |v: &[Q]| -> Vec<Vec<Q>> {
        let a: Vec<Q> = match horizontal_inv {
            Some(h) => mat_vec(h, v),
            None => v.to_vec(),
        };
        let rows: Vec<Vec<Q>> = num
            .iter()
            .map(|dirs| {
                (0..width)
                    .map(|c| {
                        (0..n)
                            .filter(|&k| !a[k].is_zero() && !dirs[k][c].is_zero())
                            .map(|k| &a[k] * &dirs[k][c])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        match contact {
            Some(kc) => kc
                .iter()
                .map(|krow| {
                    (0..width)
                        .map(|c| {
                            krow.iter()
                                .zip(&rows)
                                .filter(|(k, _)| !k.is_zero())
                                .map(|(k, r)| k * &r[c])
                                .sum()
                        })
                        .collect()
                })
                .collect(),
            None => rows,
        }
    };
    greedy_characters(n, &block, r2, seed)
}

fn sampled(
    r: &JetSystem,
    r2: usize,
    contact: Option<&[Vec<Q>]>,
    horizontal_inv: Option<&[Vec<Q>]>,
    seed: u64,
) -> Result<CharacterReport, JetError> {
    let table = symbol_table(r)?;
    let exprs: Vec<Expr> = table.iter().flatten().flatten().cloned().collect();
    let mut sampler = Sampler::new(seed);
    let mut first: Option<CharacterReport> = None;
    for t in 0..SAMPLE_POINTS {
        let point = sampler.regular_point(exprs.iter());
        let num = evaluate(&table, &point)?;
        let rep = characters_at(&num, r.space().n(), contact, horizontal_inv, r2, seed.wrapping_add(t));
        match &first {
            None => first = Some(rep),
            Some(f) if f.s != rep.s => return Err(JetError::NonConstantCharacters(f.s.clone(), rep.s)),
            Some(_) => {}
        }
    }
    Ok(first.expect("at least one sample"))
}

pub(crate) fn characters_with_prolongation(
    r: &JetSystem,
    p: &ProlongedSystem,
    seed: u64,
) -> Result<CharacterReport, JetError> {
    sampled(r, p.parametric_count(), None, None, seed)
}

/// Reduced characters of `R_q` and `r^{q+1}`, checked for constancy at
/// several generic points.
pub fn jet_characters(r: &JetSystem, seed: u64) -> Result<CharacterReport, JetError> {
    let p = prolong_system(r)?;
    characters_with_prolongation(r, &p, seed)
}

/// Same computation with the contact forms `Υ^α_J` (`|J| = q−1`) replaced by
/// `contact·Υ` and the horizontal forms by `horizontal·dx`.
pub fn jet_characters_in_basis(
    r: &JetSystem,
    contact: &[Vec<Q>],
    horizontal: &[Vec<Q>],
    seed: u64,
) -> Result<CharacterReport, JetError> {
    let space = r.space();
    let rows = space.m() * space.multi_indices(r.order() - 1).len();
    let n = space.n();
    if contact.len() != rows
        || contact.iter().any(|c| c.len() != rows)
        || horizontal.len() != n
        || horizontal.iter().any(|h| h.len() != n)
    {
        return Err(JetError::BadBasis);
    }
    invert_q(contact).ok_or(JetError::BadBasis)?;
    let hinv = invert_q(horizontal).ok_or(JetError::BadBasis)?;
    let p = prolong_system(r)?;
    // A direction v in the new horizontal frame is Σ_j (H⁻¹v)_j D_j.
    sampled(r, p.parametric_count(), Some(contact), Some(&hinv), seed)
}
