use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Symbol, Q};
use crate::group::MCBasis;
use crate::linalg::{rank_q, rank_symbolic};
use crate::random::Sampler;

use super::absorb::AbsorptionSolution;

/// Reduced Cartan characters and the outcome of Cartan's test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterReport {
    pub s: Vec<usize>,
    pub r2: usize,
    /// `Σ i·s_i`.
    pub weighted_sum: usize,
    pub involutive: bool,
    /// Direction chosen at each greedy step, printed as rationals.
    pub witnesses: Vec<Vec<String>>,
}

impl CharacterReport {
    pub fn new(s: Vec<usize>, r2: usize, witnesses: Vec<Vec<String>>) -> CharacterReport {
        let weighted_sum = s.iter().enumerate().map(|(i, v)| (i + 1) * v).sum();
        CharacterReport {
            involutive: weighted_sum == r2,
            s,
            r2,
            weighted_sum,
            witnesses,
        }
    }
}

/// Candidate directions: unit vectors, sums of two unit vectors, then
/// seeded random rational vectors.
fn direction_grid(n: usize, seed: u64) -> Vec<Vec<Q>> {
    let unit = |i: usize| -> Vec<Q> {
        (0..n).map(|k| if k == i { Q::one() } else { Q::zero() }).collect()
    };
    let mut out: Vec<Vec<Q>> = (0..n).map(unit).collect();
    for i in 0..n {
        for j in i + 1..n {
            let mut v = unit(i);
            v[j] = Q::one();
            out.push(v);
        }
    }
    let mut sampler = Sampler::new(seed);
    for _ in 0..50 {
        out.push((0..n).map(|_| sampler.rational()).collect());
    }
    out
}

fn fmt_dir(v: &[Q]) -> Vec<String> {
    v.iter().map(|q| Expr::constant(q.clone()).to_string()).collect()
}

/// Greedy rank maximization. `block(v)` is the collection of one-forms
/// (rows over a fixed basis) contracted with the direction `v`.
pub fn greedy_characters(
    n: usize,
    block: &dyn Fn(&[Q]) -> Vec<Vec<Q>>,
    r2: usize,
    seed: u64,
) -> CharacterReport {
    let grid = direction_grid(n, seed);
    let width = block(&grid[0]).first().map_or(0, |r| r.len());
    let mut stacked: Vec<Vec<Q>> = Vec::new();
    let mut prev = 0;
    let mut s = Vec::with_capacity(n);
    let mut witnesses = Vec::new();
    let mut chosen: Vec<Vec<Q>> = Vec::new();
    // Witnesses span a flag, so each must be independent of the earlier ones.
    let fresh = |chosen: &Vec<Vec<Q>>, v: &Vec<Q>| {
        let mut m = chosen.clone();
        m.push(v.clone());
        rank_q(&m) == m.len()
    };
    let syms: Vec<Symbol> = (0..n)
        .map(|l| Symbol::aux(&format!("dir{}", l + 1)).expect("valid name"))
        .collect();
    for _ in 0..n {
        let mut best: Option<(usize, &Vec<Q>)> = None;
        for v in &grid {
            if !fresh(&chosen, v) {
                continue;
            }
            let mut rows = stacked.clone();
            rows.extend(block(v));
            let rk = rank_q(&rows);
            if best.is_none_or(|(b, _)| rk > b) {
                best = Some((rk, v));
            }
        }
        let (mut rk, mut v) = best.map(|(r, v)| (r, v.clone())).unwrap_or((prev, vec![Q::zero(); n]));
        // Certify against the generic rank of the direction-parametrized stack.
        if width > 0 && (stacked.len() + n) * width <= 600 {
            let generic = generic_rank(&stacked, n, block, &syms);
            let mut sampler = Sampler::new(seed ^ 0x5eed);
            let mut tries = 0;
            while rk < generic && tries < 200 {
                let w: Vec<Q> = (0..n).map(|_| sampler.rational()).collect();
                if !fresh(&chosen, &w) {
                    tries += 1;
                    continue;
                }
                let mut rows = stacked.clone();
                rows.extend(block(&w));
                let r = rank_q(&rows);
                if r > rk {
                    rk = r;
                    v = w;
                }
                tries += 1;
            }
        }
        s.push(rk - prev);
        prev = rk;
        stacked.extend(block(&v));
        witnesses.push(fmt_dir(&v));
        chosen.push(v);
    }
    CharacterReport::new(s, r2, witnesses)
}

/// The block is linear in the direction, so it is recovered from unit vectors.
fn generic_rank(
    stacked: &[Vec<Q>],
    n: usize,
    block: &dyn Fn(&[Q]) -> Vec<Vec<Q>>,
    syms: &[Symbol],
) -> usize {
    let units: Vec<Vec<Vec<Q>>> = (0..n)
        .map(|l| {
            let v: Vec<Q> = (0..n).map(|k| if k == l { Q::one() } else { Q::zero() }).collect();
            block(&v)
        })
        .collect();
    let mut rows: Vec<Vec<Expr>> = stacked
        .iter()
        .map(|r| r.iter().map(|q| Expr::constant(q.clone())).collect())
        .collect();
    let nrows = units[0].len();
    let width = units[0].first().map_or(0, |r| r.len());
    for i in 0..nrows {
        rows.push(
            (0..width)
                .map(|c| {
                    (0..n)
                        .filter(|&l| !units[l][i][c].is_zero())
                        .map(|l| syms[l].expr().scale(&units[l][i][c]))
                        .sum()
                })
                .collect(),
        );
    }
    rank_symbolic(&rows)
}

/// Characters from a structure table `F^{il}_κ`: the direction `v` yields the
/// one-forms `Σ_l Σ_κ v_l F^{il}_κ α^κ`, `i = 1..n`.
pub fn characters_from_table(mc: &MCBasis, r2: usize, seed: u64) -> CharacterReport {
    let n = mc.n();
    let r = mc.f_entry(0, 0).len();
    let block = |v: &[Q]| -> Vec<Vec<Q>> {
        (0..n)
            .map(|i| {
                (0..r)
                    .map(|k| {
                        (0..n)
                            .filter(|&l| !v[l].is_zero())
                            .map(|l| &v[l] * mc.f(i, l, k))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    };
    greedy_characters(n, &block, r2, seed)
}

pub fn cartan_characters(mc: &MCBasis, sol: &AbsorptionSolution, seed: u64) -> CharacterReport {
    characters_from_table(mc, sol.r2, seed)
}
