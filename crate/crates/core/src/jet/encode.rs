use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{run_loop, EquivalenceReport, GStructureProblem, Policy, TorsionClass};
use crate::expr::{Expr, Indet, Symbol};
use crate::group::slot_symbol;
use crate::linalg::Matrix;

use super::characters::characters_with_prolongation;
use super::complete::{complete_to_order, project_integrability, prolong_system, CompletionStep, StepAction};
use super::{JetError, JetSpace, JetSystem};

/// The determining system of `φ*η = g·η` for maps `x ↦ X`.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub space: JetSpace,
    /// `g = A(X)·∇X·A(x)⁻¹`.
    pub g: Matrix,
    /// Membership equations of the group evaluated on `g`, numerators only.
    pub implicit: Vec<Expr>,
    pub system: JetSystem,
}

/// Target coordinate names: the upper-cased source name when that is free.
fn target_names(coords: &[Symbol]) -> Vec<String> {
    let names: Vec<String> = coords.iter().map(|c| c.name()).collect();
    names
        .iter()
        .map(|n| {
            let up = n.to_uppercase();
            if up != *n && !names.contains(&up) {
                up
            } else {
                format!("{n}_tgt")
            }
        })
        .collect()
}

pub fn encode_gstructure(p: &GStructureProblem) -> Result<Encoding, JetError> {
    let coords = p.chart().coords().to_vec();
    let n = coords.len();
    let targets = target_names(&coords)
        .iter()
        .map(|t| Symbol::coordinate(t))
        .collect::<Result<Vec<_>, _>>()?;
    let space = JetSpace::from_symbols(coords.clone(), targets.clone())?;
    let to_target: HashMap<Indet, Expr> = coords
        .iter()
        .zip(&targets)
        .map(|(c, t)| (c.indet(), t.expr()))
        .collect();
    let a_x = p.coframe.transition();
    let a_target = a_x.substitute(&to_target)?;
    let mut jac = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut idx = vec![0; n];
            idx[j] = 1;
            row.push(space.jet(a, &idx)?.expr());
        }
        jac.push(row);
    }
    let jac = Matrix::from_rows(jac).map_err(crate::engine::EngineError::from)?;
    let g = a_target
        .mul(&jac)
        .and_then(|m| m.mul(p.coframe.inverse()))
        .map_err(crate::engine::EngineError::from)?;
    let membership = if p.group.membership().is_empty() && p.group.r() < n * n {
        p.group.derive_membership()?
    } else {
        p.group.membership().to_vec()
    };
    let slots: HashMap<Indet, Expr> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (slot_symbol(i, j).indet(), g[(i, j)].clone()))
        .collect();
    let mut implicit = Vec::new();
    for m in &membership {
        let e = m.substitute(&slots)?;
        if !e.is_zero() {
            implicit.push(Expr::from_poly(e.num().clone()));
        }
    }
    let system = JetSystem::from_implicit(&space, &implicit)?;
    Ok(Encoding {
        space,
        g,
        implicit,
        system,
    })
}

/// `(r², s, number of new conditions)` for one loop of either route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSummary {
    pub r2: usize,
    pub s: Vec<usize>,
    pub conditions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageComparison {
    pub index: usize,
    pub engine: PathSummary,
    pub jet: PathSummary,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crosscheck {
    pub stages: Vec<StageComparison>,
    pub agree: bool,
    pub engine_log: EquivalenceReport,
    pub jet_log: Vec<CompletionStep>,
}

/// Runs the equivalence loop and the jet completion of the encoded system
/// side by side, loop for loop, as long as the engine only reduces.
pub fn crosscheck_characters(
    p: &GStructureProblem,
    title: &str,
    policy: &Policy,
) -> Result<Crosscheck, JetError> {
    let report = run_loop(p.clone(), title, policy)?;
    let enc = encode_gstructure(p)?;
    let mut sys = complete_to_order(&enc.system)?;
    let mut stages = Vec::new();
    let mut jet_log = Vec::new();
    for (k, rec) in report.loops.iter().enumerate() {
        if k > 0 && report.loops[k - 1].verdict != "reduce" {
            break;
        }
        let engine = PathSummary {
            r2: rec.r2,
            s: rec.characters.s.clone(),
            conditions: rec
                .torsion
                .iter()
                .filter(|t| t.class != TorsionClass::Trivial)
                .count(),
        };
        let pr = prolong_system(&sys)?;
        let proj = project_integrability(&pr)?;
        let chars = characters_with_prolongation(&sys, &pr, policy.seed.wrapping_add(k as u64))?;
        let jet = PathSummary {
            r2: pr.parametric_count(),
            s: chars.s.clone(),
            conditions: proj.conditions.len(),
        };
        jet_log.push(CompletionStep {
            order: sys.order(),
            equations: sys.len(),
            conditions: proj.conditions.iter().map(|c| c.to_string()).collect(),
            action: if proj.conditions.is_empty() {
                if chars.involutive {
                    StepAction::Involutive
                } else {
                    StepAction::Prolonged
                }
            } else {
                StepAction::Adjoined
            },
            characters: Some(chars),
        });
        stages.push(StageComparison {
            index: k,
            agree: engine == jet,
            engine,
            jet,
        });
        sys = proj.reduced;
    }
    let agree = !stages.is_empty() && stages.iter().all(|s| s.agree);
    Ok(Crosscheck {
        stages,
        agree,
        engine_log: report,
        jet_log,
    })
}
