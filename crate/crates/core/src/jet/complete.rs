use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::CharacterReport;
use crate::expr::{Expr, Indet, Symbol};
use crate::linalg::echelon;

use super::characters::characters_with_prolongation;
use super::{check_genuine, JetError, JetSystem};

/// `R_{q,1}`: all total derivatives of the base equations, eliminated on the
/// jets of order `q+1`.
#[derive(Debug, Clone)]
pub struct ProlongedSystem {
    pub base: JetSystem,
    /// `D_i(lhs − rhs)` reduced modulo the base, tagged by equation and direction.
    pub derived: Vec<(Symbol, usize, Expr)>,
    /// Jets of order `q+1`, in elimination order.
    pub top: Vec<Symbol>,
    /// Top-order equations solved for their pivot jets.
    pub solved: Vec<(Symbol, Expr)>,
    /// Combinations free of top-order jets; integrability candidates.
    pub residuals: Vec<Expr>,
}

impl ProlongedSystem {
    /// `r^{q+1}`: parametric jets of order `q+1`.
    pub fn parametric_count(&self) -> usize {
        self.top.len() - self.solved.len()
    }

    /// `R_{q,1}` in solved form, without the residual conditions.
    pub fn system(&self) -> Result<JetSystem, JetError> {
        let mut eqs: Vec<(Symbol, Expr)> = self
            .base
            .equations()
            .iter()
            .map(|e| (e.lhs, e.rhs.clone()))
            .collect();
        eqs.extend(self.solved.iter().cloned());
        Ok(JetSystem::new(self.base.space(), eqs)?.with_order(self.base.order() + 1))
    }
}

pub fn prolong_system(r: &JetSystem) -> Result<ProlongedSystem, JetError> {
    let space = r.space();
    let q = r.order();
    let mut derived = Vec::new();
    for eq in r.equations() {
        let f = eq.lhs.expr() - &eq.rhs;
        for i in 0..space.n() {
            let d = r.reduce(&space.total_derivative(&f, i)?)?;
            derived.push((eq.lhs, i, d));
        }
    }
    // Derivatives of principal jets come first so they are preferred as pivots.
    let all_top = space.jets_of_order(q + 1)?;
    let mut top: Vec<Symbol> = Vec::new();
    for (lhs, i, _) in &derived {
        if space.order_of(*lhs) == Some(q) {
            let t = space.derivative(*lhs, *i)?.expect("jet of this space");
            if !top.contains(&t) {
                top.push(t);
            }
        }
    }
    for t in all_top {
        if !top.contains(&t) {
            top.push(t);
        }
    }
    let col: HashMap<Indet, usize> = top.iter().enumerate().map(|(c, s)| (s.indet(), c)).collect();
    let zero_top: HashMap<Indet, Expr> = top.iter().map(|s| (s.indet(), Expr::zero())).collect();
    let mut rows = Vec::with_capacity(derived.len());
    for (_, _, d) in &derived {
        let mut row = vec![Expr::zero(); top.len() + 1];
        let present: Vec<Symbol> = d.symbols().into_iter().filter(|s| col.contains_key(&s.indet())).collect();
        for s in &present {
            let c = d.differentiate(*s);
            if present.iter().any(|t| c.depends_on(*t)) {
                return Err(JetError::Nonlinear(d.to_string()));
            }
            row[col[&s.indet()]] = c;
        }
        row[top.len()] = if present.is_empty() {
            d.clone()
        } else {
            d.substitute(&zero_top)?
        };
        rows.push(row);
    }
    let ech = echelon(rows, top.len());
    let mut solved = Vec::new();
    for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
        let mut rhs = -&row[top.len()];
        for (c, a) in row.iter().enumerate().take(top.len()) {
            if c != p && !a.is_zero() {
                rhs = rhs - a * &top[c].expr();
            }
        }
        solved.push((top[p], rhs));
    }
    let residuals = ech
        .null_rows()
        .iter()
        .map(|row| row[top.len()].clone())
        .filter(|e| !e.is_zero())
        .collect();
    Ok(ProlongedSystem {
        base: r.clone(),
        derived,
        top,
        solved,
        residuals,
    })
}

/// Integrability conditions found in a prolongation, and the base system
/// with them adjoined and completed.
#[derive(Debug, Clone)]
pub struct Projection {
    pub conditions: Vec<Expr>,
    pub reduced: JetSystem,
}

pub fn project_integrability(p: &ProlongedSystem) -> Result<Projection, JetError> {
    let mut reduced = p.base.clone();
    let mut conditions = Vec::new();
    for res in &p.residuals {
        let e = p.base.reduce(res)?;
        if e.is_zero() {
            continue;
        }
        check_genuine(p.base.space(), &e)?;
        // Conditions implied by earlier ones are not new.
        if reduced.adjoin(&e)?.is_some() {
            conditions.push(e.equation_form());
        }
    }
    if !conditions.is_empty() {
        reduced = complete_to_order(&reduced)?;
    }
    Ok(Projection { conditions, reduced })
}

/// Prolongs every equation of order below `q` until the system is closed
/// under differentiation up to order `q`.
pub fn complete_to_order(r: &JetSystem) -> Result<JetSystem, JetError> {
    let mut sys = r.clone();
    let space = r.space().clone();
    loop {
        let q = sys.order();
        let mut changed = false;
        let low: Vec<Expr> = sys
            .equations()
            .iter()
            .filter(|e| sys.equation_order(e) < q)
            .map(|e| e.lhs.expr() - &e.rhs)
            .collect();
        for f in low {
            for i in 0..space.n() {
                let d = space.total_derivative(&f, i)?;
                if sys.adjoin(&d)?.is_some() {
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(sys);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepAction {
    Adjoined,
    Prolonged,
    Involutive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionStep {
    pub order: usize,
    pub equations: usize,
    pub conditions: Vec<String>,
    pub characters: Option<CharacterReport>,
    pub action: StepAction,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub system: JetSystem,
    pub log: Vec<CompletionStep>,
    /// Number of times the system was changed.
    pub loops: usize,
}

/// Integrability, characters, Cartan's test; prolongs on failure.
pub fn complete_to_involution(r: &JetSystem, cap: usize, seed: u64) -> Result<Completion, JetError> {
    let mut sys = complete_to_order(r)?;
    let mut log = Vec::new();
    let mut loops = 0;
    loop {
        let p = prolong_system(&sys)?;
        let proj = project_integrability(&p)?;
        if !proj.conditions.is_empty() {
            log.push(CompletionStep {
                order: sys.order(),
                equations: sys.len(),
                conditions: proj.conditions.iter().map(|c| c.to_string()).collect(),
                characters: None,
                action: StepAction::Adjoined,
            });
            loops += 1;
            if loops > cap {
                return Err(JetError::CapExceeded(cap));
            }
            sys = proj.reduced;
            continue;
        }
        let chars = characters_with_prolongation(&sys, &p, seed)?;
        let involutive = chars.involutive;
        log.push(CompletionStep {
            order: sys.order(),
            equations: sys.len(),
            conditions: Vec::new(),
            characters: Some(chars),
            action: if involutive {
                StepAction::Involutive
            } else {
                StepAction::Prolonged
            },
        });
        if involutive {
            return Ok(Completion { system: sys, log, loops });
        }
        loops += 1;
        if loops > cap {
            return Err(JetError::CapExceeded(cap));
        }
        sys = p.system()?;
    }
}
