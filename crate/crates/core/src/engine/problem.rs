use std::sync::Arc;

use crate::expr::Expr;
use crate::forms::{change_pairs, pairs, structure_functions, Chart, Coframe, StructureFunctions};
use crate::group::{MCBasis, ParamGroup};
use crate::linalg::Matrix;

use super::EngineError;

/// The equivalence problem `φ*η = g·η` with `g` ranging over a matrix group.
#[derive(Debug, Clone)]
pub struct GStructureProblem {
    pub coframe: Arc<Coframe>,
    pub group: ParamGroup,
    pub stage: usize,
    pub provenance: Vec<String>,
}

impl GStructureProblem {
    pub fn new(coframe: Arc<Coframe>, group: ParamGroup) -> Result<GStructureProblem, EngineError> {
        if group.n() != coframe.dim() {
            return Err(EngineError::DimensionMismatch {
                group: group.n(),
                chart: coframe.dim(),
            });
        }
        Ok(GStructureProblem {
            coframe,
            group,
            stage: 0,
            provenance: Vec::new(),
        })
    }

    pub fn chart(&self) -> &Chart {
        self.coframe.chart()
    }

    pub fn n(&self) -> usize {
        self.coframe.dim()
    }
}

#[derive(Debug, Clone)]
pub struct StructureData {
    pub b: StructureFunctions,
    /// `C^i_jk(x, g)` per `i`, over the `j < k` pairs.
    pub c: Vec<Vec<Expr>>,
    pub mc: MCBasis,
}

/// `C^i_ab = Σ_l g_il Σ_{j<k} B^l_jk (h_ja h_kb − h_jb h_ka)` with `h = g⁻¹`:
/// the coefficients of `g·dη` in the coframe `g·η`.
pub fn torsion_table(b: &StructureFunctions, g: &Matrix, ginv: &Matrix) -> Vec<Vec<Expr>> {
    let n = b.dim();
    let t: Vec<Vec<Expr>> = (0..n)
        .map(|l| {
            if b.row(l).iter().all(Expr::is_zero) {
                vec![Expr::zero(); b.row(l).len()]
            } else {
                change_pairs(b.row(l), ginv, n)
            }
        })
        .collect();
    let np = pairs(n).len();
    (0..n)
        .map(|i| {
            (0..np)
                .map(|p| {
                    let mut acc = Expr::zero();
                    for (l, tl) in t.iter().enumerate() {
                        let gil = &g[(i, l)];
                        if !gil.is_zero() && !tl[p].is_zero() {
                            acc = acc + gil * &tl[p];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn compute_structure_data(p: &GStructureProblem) -> Result<StructureData, EngineError> {
    let b = structure_functions(&p.coframe)?;
    let c = torsion_table(&b, p.group.entries(), p.group.inverse());
    let mc = p.group.right_mc()?;
    Ok(StructureData { b, c, mc })
}
