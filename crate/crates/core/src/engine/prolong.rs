use num_traits::Zero;

use crate::expr::{Expr, Q, Symbol};
use crate::forms::{Chart, Coframe};
use crate::group::{MCBasis, ParamGroup};
use crate::linalg::Matrix;

use super::absorb::AbsorptionSolution;
use super::characters::CharacterReport;
use super::problem::GStructureProblem;
use super::EngineError;

/// Passes to the prolonged structure on the space of `(x, a)`: coframe
/// `(g·η, π)` with `π^κ = α^κ − Σ_j z^κ_j (g·η)^j` for the particular
/// absorption, and the abelian group of block matrices `[[I, 0], [M(v), I]]`
/// whose lower block is the parametric part `P·v` of the absorption.
pub fn prolong(
    p: &GStructureProblem,
    mc: &MCBasis,
    sol: &AbsorptionSolution,
    chars: &CharacterReport,
) -> Result<GStructureProblem, EngineError> {
    if chars.involutive {
        return Err(EngineError::ProlongRefused("the structure already passes Cartan's test".into()));
    }
    let n = p.n();
    let r = p.group.r();
    let params = p.group.params();
    let mut coords: Vec<Symbol> = p.chart().coords().to_vec();
    coords.extend_from_slice(params);
    let chart = Chart::new(coords)?;
    let ga = p.group.entries().mul(p.coframe.transition())?;
    let z = sol.particular();
    let dim = n + r;
    let mut a = Matrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = ga[(i, j)].clone();
        }
    }
    for kappa in 0..r {
        for col in 0..n {
            let mut acc = Expr::zero();
            for j in 0..n {
                let zk = &z[kappa * n + j];
                if !zk.is_zero() && !ga[(j, col)].is_zero() {
                    acc = acc - zk * &ga[(j, col)];
                }
            }
            a[(n + kappa, col)] = acc;
        }
        for (l, e) in mc.alphas()[kappa].iter().enumerate() {
            a[(n + kappa, n + l)] = e.clone();
        }
    }
    let stage = p.stage + 1;
    let mut names: Vec<String> = p.coframe.names().to_vec();
    names.extend((1..=r).map(|k| format!("pi{stage}_{k}")));
    let coframe = Coframe::new(&chart, names, a)?;

    let vs: Vec<Symbol> = (1..=sol.r2)
        .map(|k| Symbol::param(&format!("v{stage}_{k}")))
        .collect::<Result<_, _>>()?;
    let mut g = Matrix::identity(dim);
    for kappa in 0..r {
        for j in 0..n {
            let row = &sol.p[kappa * n + j];
            let e: Expr = sol
                .parametric
                .iter()
                .enumerate()
                .filter(|(_, &f)| !row[f].is_zero())
                .map(|(k, &f)| vs[k].expr().scale(&row[f]))
                .sum();
            g[(n + kappa, j)] = e;
        }
    }
    let identity = vec![Q::zero(); vs.len()];
    let group = ParamGroup::new(vs, g, identity, vec![])?;
    let mut provenance = p.provenance.clone();
    provenance.push(format!("prolongation to dimension {dim}"));
    Ok(GStructureProblem {
        coframe,
        group,
        stage,
        provenance,
    })
}

/// Checks `g(v)·g(y) = g(v + y)` for a prolonged group.
pub fn prolonged_group_law(g: &ParamGroup, v: &[Q], y: &[Q]) -> Result<bool, EngineError> {
    let a = g.element(v)?;
    let b = g.element(y)?;
    let sum: Vec<Q> = v.iter().zip(y).map(|(p, q)| p + q).collect();
    let c = g.element(&sum)?;
    let n = a.len();
    for i in 0..n {
        for j in 0..n {
            let prod: Q = (0..n).map(|k| &a[i][k] * &b[k][j]).sum();
            if prod != c[i][j] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
