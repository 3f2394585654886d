use crate::expr::Expr;
use crate::forms::{Chart, Coframe};
use crate::linalg::{echelon, Matrix};

use super::{JetError, JetSystem};

#[derive(Debug, Clone)]
pub struct IntrinsicResult {
    /// Absorption equations left without unknowns, nonzero modulo the system.
    pub conditions: Vec<Expr>,
    /// Unknowns `z^β_{l,i}` left free.
    pub r2: usize,
}

/// Integrability conditions of a first-order system from `dΥ^α` restricted
/// to the system, with `du^β_l = π^β_l + Σ_i z^β_{l,i} dx^i` for the
/// parametric `u^β_l`.
pub fn intrinsic_conditions(r: &JetSystem) -> Result<IntrinsicResult, JetError> {
    let space = r.space();
    if r.order() != 1 || r.equations().iter().any(|e| space.order_of(e.lhs) != Some(1)) {
        return Err(JetError::NotFirstOrder);
    }
    let (n, m) = (space.n(), space.m());
    let par = r.parametric(1)?;
    let mut coords = space.independents().to_vec();
    coords.extend_from_slice(space.dependents());
    coords.extend_from_slice(&par);
    let dim = coords.len();
    let chart = Chart::new(coords)?;
    let mut a = vec![vec![Expr::zero(); dim]; dim];
    let mut names = Vec::with_capacity(dim);
    for i in 0..n {
        a[i][i] = Expr::one();
        names.push(format!("d{}", space.independents()[i]));
    }
    for al in 0..m {
        a[n + al][n + al] = Expr::one();
        for i in 0..n {
            let mut idx = vec![0; n];
            idx[i] = 1;
            let jet = space.jet(al, &idx)?;
            let value = r.rhs_of(jet).cloned().unwrap_or_else(|| jet.expr());
            a[n + al][i] = -value;
        }
        names.push(format!("ups{}", al + 1));
    }
    for (b, s) in par.iter().enumerate() {
        a[n + m + b][n + m + b] = Expr::one();
        names.push(format!("d{s}"));
    }
    let a = Matrix::from_rows(a).map_err(crate::engine::EngineError::from)?;
    let frame = Coframe::new(&chart, names, a)?;
    let nz = par.len() * n;
    let mut rows = Vec::new();
    for al in 0..m {
        let w = frame.element(n + al).d()?;
        for j in 0..n {
            for k in j + 1..n {
                let mut row = vec![Expr::zero(); nz + 1];
                for b in 0..par.len() {
                    let mk = w.coeff2(n + m + b, k);
                    let mj = w.coeff2(n + m + b, j);
                    row[b * n + j] = &row[b * n + j] + &mk;
                    row[b * n + k] = &row[b * n + k] - &mj;
                }
                row[nz] = w.coeff2(j, k);
                rows.push(row);
            }
        }
    }
    let ech = echelon(rows, nz);
    let mut conditions = Vec::new();
    for row in ech.null_rows() {
        let c = r.reduce(&row[nz])?;
        if !c.is_zero() {
            conditions.push(c);
        }
    }
    Ok(IntrinsicResult {
        conditions,
        r2: nz - ech.rank(),
    })
}
