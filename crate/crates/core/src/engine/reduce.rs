use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Indet, Q, Symbol, SymbolKind};
use crate::forms::{Coframe, StructureFunctions};
use crate::group::{solve_linear, ParamGroup};
use crate::linalg::{rank_q, Matrix};
use crate::random::Sampler;

use super::absorb::AbsorptionSolution;
use super::problem::{torsion_table, GStructureProblem};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorsionClass {
    /// Identically zero or a constant.
    Trivial,
    /// Depends on at least one group parameter.
    GroupDependent,
    /// Depends on the coordinates only: an invariant of the problem.
    Genuine,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub classes: Vec<TorsionClass>,
    /// Rank of the Jacobian of the group-dependent residuals in the parameters.
    pub group_rank: usize,
    pub full_rank: bool,
}

impl Classification {
    pub fn indices(&self, class: TorsionClass) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| self.classes[i] == class).collect()
    }
}

fn depends_on_params(e: &Expr, params: &[Symbol]) -> bool {
    params.iter().any(|&a| e.depends_on(a))
}

pub fn classify_torsion(group: &ParamGroup, sol: &AbsorptionSolution, seed: u64) -> Classification {
    let params = group.params();
    let classes: Vec<TorsionClass> = sol
        .torsion
        .iter()
        .map(|t| {
            if t.expr.is_constant() {
                TorsionClass::Trivial
            } else if depends_on_params(&t.expr, params) {
                TorsionClass::GroupDependent
            } else {
                TorsionClass::Genuine
            }
        })
        .collect();
    let dep: Vec<&Expr> = sol
        .torsion
        .iter()
        .zip(&classes)
        .filter(|(_, c)| **c == TorsionClass::GroupDependent)
        .map(|(t, _)| &t.expr)
        .collect();
    let group_rank = jacobian_rank(&dep, params, seed);
    Classification {
        full_rank: group_rank == dep.len(),
        classes,
        group_rank,
    }
}

/// Rank of `∂e_t/∂a_κ` at a seeded generic point.
pub(crate) fn jacobian_rank(exprs: &[&Expr], params: &[Symbol], seed: u64) -> usize {
    if exprs.is_empty() {
        return 0;
    }
    let jac: Vec<Vec<Expr>> = exprs
        .iter()
        .map(|e| params.iter().map(|&a| e.differentiate(a)).collect())
        .collect();
    let mut sampler = Sampler::new(seed);
    let mut all: Vec<&Expr> = jac.iter().flatten().collect();
    all.extend(exprs.iter().copied());
    let pt = sampler.regular_point(all.iter().copied());
    let rows: Vec<Vec<Q>> = jac
        .iter()
        .map(|row| row.iter().map(|e| e.eval(&pt).expect("regular point")).collect())
        .collect();
    rank_q(&rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    /// `(residual, chosen constant)` per normalized residual.
    pub targets: Vec<(String, String)>,
    /// Normalizing section `g0(x)`.
    pub section: Vec<Vec<String>>,
    /// Relations cutting out the isotropy subgroup, e.g. `a1 = a4^2`.
    pub isotropy: Vec<String>,
    pub group_dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceFailure {
    #[error("no closed-form triangular solve for residuals: {}", .0.join(", "))]
    NotTriangular(Vec<String>),
    #[error("group action on the residual range is not transitive (infinitesimal rank {rank}, need {needed})")]
    NotTransitive { rank: usize, needed: usize },
    #[error("isotropy condition depends on the coordinates: {0}")]
    CoordinateDependentIsotropy(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Normalization target for the residual with the given label.
pub type TargetPolicy<'a> = &'a dyn Fn(&str) -> Option<Q>;

/// Normalizes the group-dependent residuals and passes to the isotropy group.
pub fn reduce_group(
    p: &GStructureProblem,
    b: &StructureFunctions,
    sol: &AbsorptionSolution,
    cls: &Classification,
    targets: TargetPolicy<'_>,
    seed: u64,
) -> Result<(GStructureProblem, Reduction), ReduceFailure> {
    let group = &p.group;
    let params = group.params().to_vec();
    let dep = cls.indices(super::TorsionClass::GroupDependent);
    if dep.is_empty() {
        return Ok((
            p.clone(),
            Reduction {
                targets: vec![],
                section: render(group.entries()),
                isotropy: vec![],
                group_dimension: group.r(),
            },
        ));
    }
    // Section: solve H_t(x, a) = b_t one parameter at a time.
    let mut solved: Vec<(Symbol, Expr)> = Vec::new();
    let mut chosen: Vec<(String, Q)> = Vec::new();
    let mut unsolved = Vec::new();
    for &t in &dep {
        let h = &sol.torsion[t].expr;
        let label = super::residual_label(h);
        let h_now = h.subs(&solved).map_err(EngineError::from)?;
        let candidates: Vec<Q> = match targets(&label) {
            Some(v) => vec![v],
            None => {
                let s = Q::from_integer(h.generic_sign().into());
                vec![Q::from_integer(0.into()), s.clone(), -s]
            }
        };
        let mut done = false;
        for b in candidates {
            let eq = &h_now - Expr::constant(b.clone());
            if let Some((a, value)) = solve_one(&eq, &params, &solved, group) {
                solved.push((a, value));
                chosen.push((h.to_string(), b));
                done = true;
                break;
            }
        }
        if !done {
            unsolved.push(h.to_string());
        }
    }
    if !unsolved.is_empty() {
        return Err(ReduceFailure::NotTriangular(unsolved));
    }
    let section_values = resolve(&solved, &params, group)?;
    let g0 = group.entries().substitute(&section_values).map_err(EngineError::from)?;
    let g0_inv = g0.inverse().map_err(EngineError::from)?;

    // Residuals `−λ·C` at h·g0, with h ranging over the full group.
    let m = group.entries().mul(&g0).map_err(EngineError::from)?;
    let m_inv = g0_inv.mul(group.inverse()).map_err(EngineError::from)?;
    let c = torsion_table(b, &m, &m_inv);
    let flat: Vec<Expr> = c.into_iter().flatten().collect();
    let h_of: Vec<Expr> = dep
        .iter()
        .map(|&t| {
            sol.torsion[t]
                .lambda
                .iter()
                .zip(&flat)
                .filter(|(l, e)| !num_traits::Zero::is_zero(*l) && !e.is_zero())
                .map(|(l, e)| -e.scale(l))
                .sum()
        })
        .collect();
    let refs: Vec<&Expr> = h_of.iter().collect();
    let rank = jacobian_rank(&refs, &params, seed);
    if rank < dep.len() {
        return Err(ReduceFailure::NotTransitive {
            rank,
            needed: dep.len(),
        });
    }

    // Isotropy: H_t(x, h·g0) = b_t, solved for parameters of h.
    let mut iso: Vec<(Symbol, Expr)> = Vec::new();
    for (k, h) in h_of.iter().enumerate() {
        let eq = h.subs(&iso).map_err(EngineError::from)? - Expr::constant(chosen[k].1.clone());
        if eq.is_zero() {
            continue;
        }
        let mut found = None;
        for &a in &params {
            if iso.iter().any(|(s, _)| *s == a) || !eq.depends_on(a) {
                continue;
            }
            if let Some(v) = solve_linear(&eq, a) {
                found = Some((a, v));
                break;
            }
        }
        let Some((a, v)) = found else {
            return Err(ReduceFailure::NotTriangular(vec![h.to_string()]));
        };
        if v.symbols().iter().any(|s| s.kind() != SymbolKind::GroupParameter) || !v.indets().iter().all(|i| i.as_symbol().is_some()) {
            return Err(ReduceFailure::CoordinateDependentIsotropy(format!("{} = {}", a, v)));
        }
        for (_, w) in iso.iter_mut() {
            *w = w.subs(&[(a, v.clone())]).map_err(EngineError::from)?;
        }
        iso.push((a, v));
    }
    let iso_map: HashMap<Indet, Expr> = iso.iter().map(|(s, e)| (s.indet(), e.clone())).collect();
    let entries = group.entries().substitute(&iso_map).map_err(EngineError::from)?;
    let mut new_params = Vec::new();
    let mut new_identity = Vec::new();
    for (k, &a) in params.iter().enumerate() {
        if !iso_map.contains_key(&a.indet()) {
            new_params.push(a);
            new_identity.push(group.identity_values()[k].clone());
        }
    }
    let new_group = ParamGroup::new(new_params, entries, new_identity, vec![]).map_err(EngineError::from)?;
    let a = g0.mul(p.coframe.transition()).map_err(EngineError::from)?;
    let coframe: Arc<Coframe> =
        Coframe::new(p.chart(), p.coframe.names().to_vec(), a).map_err(EngineError::from)?;
    let reduction = Reduction {
        targets: chosen
            .iter()
            .map(|(h, b)| (h.clone(), Expr::constant(b.clone()).to_string()))
            .collect(),
        section: render(&g0),
        isotropy: iso.iter().map(|(a, v)| format!("{a} = {v}")).collect(),
        group_dimension: new_group.r(),
    };
    let mut provenance = p.provenance.clone();
    provenance.push(format!("reduction to dimension {}", new_group.r()));
    Ok((
        GStructureProblem {
            coframe,
            group: new_group,
            stage: p.stage + 1,
            provenance,
        },
        reduction,
    ))
}

/// Solves `eq = 0` for the first unsolved parameter in which it is linear,
/// rejecting solutions that make the section singular.
fn solve_one(
    eq: &Expr,
    params: &[Symbol],
    solved: &[(Symbol, Expr)],
    group: &ParamGroup,
) -> Option<(Symbol, Expr)> {
    if eq.is_zero() {
        return None;
    }
    for &a in params {
        if solved.iter().any(|(s, _)| *s == a) || !eq.depends_on(a) {
            continue;
        }
        let Some(v) = solve_linear(eq, a) else { continue };
        let mut trial = solved.to_vec();
        trial.push((a, v.clone()));
        let Ok(values) = resolve(&trial, params, group) else { continue };
        let Ok(g0) = group.entries().substitute(&values) else { continue };
        if g0.det().is_ok_and(|d| !d.is_zero()) {
            return Some((a, v));
        }
    }
    None
}

/// Parameter values of the section: free parameters at their identity
/// values, solved ones back-substituted in reverse order.
fn resolve(
    solved: &[(Symbol, Expr)],
    params: &[Symbol],
    group: &ParamGroup,
) -> Result<HashMap<Indet, Expr>, EngineError> {
    let mut values: HashMap<Indet, Expr> = HashMap::new();
    for (k, &a) in params.iter().enumerate() {
        if !solved.iter().any(|(s, _)| *s == a) {
            values.insert(a.indet(), Expr::constant(group.identity_values()[k].clone()));
        }
    }
    for (a, v) in solved.iter().rev() {
        let val = v.substitute(&values)?;
        values.insert(a.indet(), val);
    }
    Ok(values)
}

fn render(m: &Matrix) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(|e| e.to_string()).collect())
        .collect()
}
