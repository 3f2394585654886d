use std::collections::HashMap;

use num_traits::Zero;

use crate::expr::{Expr, ExprError, Indet, Q};
use crate::forms::pairs;
use crate::group::MCBasis;
use crate::linalg::rref;

use super::problem::StructureData;

/// Left sides of the absorption equations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Every left side is the constant 0; normalization happens afterwards.
    Normalized,
    /// Left sides `B^i_jk(X)`, with the chart symbols replaced as given.
    Exact(HashMap<Indet, Expr>),
}

/// Equations `lhs = Σ_κ(F^{ik}_κ z^κ_j − F^{ij}_κ z^κ_k) + C^i_jk`, one per
/// `(i, j<k)`. Unknown `z^κ_j` sits in column `κ·n + j`.
#[derive(Debug, Clone)]
pub struct AbsorptionSystem {
    pub n: usize,
    pub r: usize,
    pub labels: Vec<(usize, usize, usize)>,
    pub coeffs: Vec<Vec<Q>>,
    pub c: Vec<Expr>,
    pub lhs: Vec<Expr>,
}

impl AbsorptionSystem {
    pub fn equations(&self) -> usize {
        self.labels.len()
    }

    pub fn unknowns(&self) -> usize {
        self.r * self.n
    }
}

pub fn build_absorption(data: &StructureData, mode: &Mode) -> Result<AbsorptionSystem, ExprError> {
    let n = data.b.dim();
    let mc: &MCBasis = &data.mc;
    let r = mc.f_entry(0, 0).len();
    let mut labels = Vec::new();
    let mut coeffs = Vec::new();
    let mut c = Vec::new();
    let mut lhs = Vec::new();
    for i in 0..n {
        for (p, (j, k)) in pairs(n).into_iter().enumerate() {
            let mut row = vec![Q::zero(); r * n];
            for kappa in 0..r {
                row[kappa * n + j] += mc.f(i, k, kappa);
                row[kappa * n + k] -= mc.f(i, j, kappa);
            }
            labels.push((i, j, k));
            coeffs.push(row);
            c.push(data.c[i][p].clone());
            lhs.push(match mode {
                Mode::Normalized => Expr::zero(),
                Mode::Exact(map) => data.b.row(i)[p].substitute(map)?,
            });
        }
    }
    Ok(AbsorptionSystem {
        n,
        r,
        labels,
        coeffs,
        c,
        lhs,
    })
}

/// A combination of equations free of unknowns: `λ·(lhs − c)` must vanish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Torsion {
    pub lambda: Vec<Q>,
    pub expr: Expr,
}

/// `z = P·z + Q·(c − lhs)` together with the unabsorbable residue.
#[derive(Debug, Clone)]
pub struct AbsorptionSolution {
    pub n: usize,
    pub r: usize,
    pub principal: Vec<usize>,
    pub parametric: Vec<usize>,
    pub p: Vec<Vec<Q>>,
    pub q: Vec<Vec<Q>>,
    pub c: Vec<Expr>,
    pub lhs: Vec<Expr>,
    pub torsion: Vec<Torsion>,
    pub r2: usize,
}

impl AbsorptionSolution {
    /// Principal unknowns with the parametric ones set to zero.
    pub fn particular(&self) -> Vec<Expr> {
        let rhs: Vec<Expr> = self.c.iter().zip(&self.lhs).map(|(c, l)| c - l).collect();
        self.q
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&rhs)
                    .filter(|(q, e)| !q.is_zero() && !e.is_zero())
                    .map(|(q, e)| e.scale(q))
                    .sum()
            })
            .collect()
    }
}

pub fn solve_absorption(sys: &AbsorptionSystem) -> AbsorptionSolution {
    let nu = sys.unknowns();
    let neq = sys.equations();
    let red = rref(&sys.coeffs, nu);
    let rank = red.rank();
    let principal = red.pivots.clone();
    let parametric: Vec<usize> = (0..nu).filter(|u| !principal.contains(u)).collect();
    let mut p = vec![vec![Q::zero(); nu]; nu];
    let mut q = vec![vec![Q::zero(); neq]; nu];
    for &f in &parametric {
        p[f][f] = Q::from_integer(1.into());
    }
    for (row, &u) in principal.iter().enumerate() {
        for &f in &parametric {
            p[u][f] = -red.rows[row][f].clone();
        }
        for e in 0..neq {
            q[u][e] = -red.transform[row][e].clone();
        }
    }
    // Canonical basis of the left null space: reduced echelon form of the
    // zero rows of the transform.
    let null: Vec<Vec<Q>> = red.transform[rank..].to_vec();
    let canon = rref(&null, neq);
    // Residuals are written `λ·(lhs − c)`, the value the combination of
    // left sides is forced to take.
    let rhs: Vec<Expr> = sys.c.iter().zip(&sys.lhs).map(|(c, l)| l - c).collect();
    let torsion = canon.rows[..canon.rank()]
        .iter()
        .map(|lambda| {
            let expr = lambda
                .iter()
                .zip(&rhs)
                .filter(|(l, e)| !l.is_zero() && !e.is_zero())
                .map(|(l, e)| e.scale(l))
                .sum();
            Torsion {
                lambda: lambda.clone(),
                expr,
            }
        })
        .collect();
    AbsorptionSolution {
        n: sys.n,
        r: sys.r,
        principal,
        parametric: parametric.clone(),
        p,
        q,
        c: sys.c.clone(),
        lhs: sys.lhs.clone(),
        torsion,
        r2: parametric.len(),
    }
}
