//! Jet coordinates, first-order systems in solved form and their completion
//! by prolongation and projection.

mod characters;
mod complete;
mod encode;
mod intrinsic;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::engine::EngineError;
use crate::expr::{Expr, ExprError, Indet, Symbol, SymbolKind};
use crate::forms::FormError;
use crate::group::{solve_linear, GroupError};

pub use characters::{jet_characters, jet_characters_in_basis};
pub use complete::{
    complete_to_involution, complete_to_order, project_integrability, prolong_system, Completion,
    CompletionStep, Projection, ProlongedSystem, StepAction,
};
pub use encode::{crosscheck_characters, encode_gstructure, Crosscheck, Encoding, PathSummary, StageComparison};
pub use intrinsic::{intrinsic_conditions, IntrinsicResult};

#[derive(Debug, Error)]
pub enum JetError {
    #[error("{0} is neither a dependent variable nor a jet of this space")]
    Foreign(String),
    #[error("variable {0} declared twice")]
    DuplicateVariable(String),
    #[error("principal derivative {0} has two equations")]
    DuplicatePrincipal(String),
    #[error("principal derivative {0} occurs in a right-hand side")]
    NotSolved(String),
    #[error("condition on the independent variables alone: {0} = 0")]
    NonGenuine(String),
    #[error("inconsistent system: {0} = 0")]
    Inconsistent(String),
    #[error("cannot solve {0} = 0 for any dependent variable or jet")]
    Unsolvable(String),
    #[error("prolonged equation is not linear in the top-order jets: {0}")]
    Nonlinear(String),
    #[error("reduced characters vary between generic points: {0:?} and {1:?}")]
    NonConstantCharacters(Vec<usize>, Vec<usize>),
    #[error("not involutive after {0} steps")]
    CapExceeded(usize),
    #[error("the intrinsic route needs equations of order exactly one")]
    NotFirstOrder,
    #[error("basis change has the wrong shape or is singular")]
    BadBasis,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Multi-index as one counter per independent variable.
pub type MultiIndex = Vec<u32>;

#[derive(Default)]
struct Registry {
    by_indet: HashMap<Indet, (usize, MultiIndex)>,
    by_key: HashMap<(usize, MultiIndex), Symbol>,
}

struct SpaceData {
    independents: Vec<Symbol>,
    dependents: Vec<Symbol>,
    registry: Mutex<Registry>,
}

/// Independent and dependent variables together with the jet symbols
/// `u^α_J`, created on demand and named `u_xy`.
#[derive(Clone)]
pub struct JetSpace(Arc<SpaceData>);

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("independents", &self.0.independents)
            .field("dependents", &self.0.dependents)
            .finish()
    }
}

impl PartialEq for JetSpace {
    fn eq(&self, other: &Self) -> bool {
        self.0.independents == other.0.independents && self.0.dependents == other.0.dependents
    }
}

fn indices_of_order(n: usize, k: usize) -> Vec<MultiIndex> {
    // Non-increasing sequences over the variables, first variable first.
    fn rec(n: usize, start: usize, left: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur[i] += 1;
            rec(n, i, left - 1, cur, out);
            cur[i] -= 1;
        }
    }
    let mut out = Vec::new();
    if n > 0 || k == 0 {
        rec(n, 0, k as u32, &mut vec![0; n], &mut out);
    }
    out
}

impl JetSpace {
    /// Declares coordinate symbols for the given names.
    pub fn new(independents: &[&str], dependents: &[&str]) -> Result<JetSpace, JetError> {
        let ind = independents
            .iter()
            .map(|s| Symbol::coordinate(s))
            .collect::<Result<Vec<_>, _>>()?;
        let dep = dependents
            .iter()
            .map(|s| Symbol::coordinate(s))
            .collect::<Result<Vec<_>, _>>()?;
        JetSpace::from_symbols(ind, dep)
    }

    pub fn from_symbols(independents: Vec<Symbol>, dependents: Vec<Symbol>) -> Result<JetSpace, JetError> {
        let mut seen = std::collections::HashSet::new();
        for s in independents.iter().chain(&dependents) {
            if !seen.insert(*s) {
                return Err(JetError::DuplicateVariable(s.name()));
            }
        }
        let n = independents.len();
        let mut reg = Registry::default();
        for (a, &u) in dependents.iter().enumerate() {
            reg.by_indet.insert(u.indet(), (a, vec![0; n]));
            reg.by_key.insert((a, vec![0; n]), u);
        }
        Ok(JetSpace(Arc::new(SpaceData {
            independents,
            dependents,
            registry: Mutex::new(reg),
        })))
    }

    pub fn n(&self) -> usize {
        self.0.independents.len()
    }

    pub fn m(&self) -> usize {
        self.0.dependents.len()
    }

    pub fn independents(&self) -> &[Symbol] {
        &self.0.independents
    }

    pub fn dependents(&self) -> &[Symbol] {
        &self.0.dependents
    }

    /// The jet `u^α_J`; the zero index gives the dependent variable itself.
    pub fn jet(&self, alpha: usize, index: &[u32]) -> Result<Symbol, JetError> {
        let key = (alpha, index.to_vec());
        let mut reg = self.0.registry.lock().expect("jet registry poisoned");
        if let Some(&s) = reg.by_key.get(&key) {
            return Ok(s);
        }
        let single = self.0.independents.iter().all(|x| x.name().chars().count() == 1);
        let mut name = self.0.dependents[alpha].name();
        name.push('_');
        let mut parts = Vec::new();
        for (i, &c) in index.iter().enumerate() {
            for _ in 0..c {
                parts.push(self.0.independents[i].name());
            }
        }
        name.push_str(&parts.join(if single { "" } else { "_" }));
        let s = Symbol::new(&name, SymbolKind::JetVariable)?;
        reg.by_indet.insert(s.indet(), key.clone());
        reg.by_key.insert(key, s);
        Ok(s)
    }

    /// `(α, J)` for a dependent variable or jet of this space.
    pub fn classify(&self, s: Symbol) -> Option<(usize, MultiIndex)> {
        let reg = self.0.registry.lock().expect("jet registry poisoned");
        reg.by_indet.get(&s.indet()).cloned()
    }

    pub fn order_of(&self, s: Symbol) -> Option<usize> {
        self.classify(s).map(|(_, j)| j.iter().sum::<u32>() as usize)
    }

    pub fn is_independent(&self, s: Symbol) -> bool {
        self.0.independents.contains(&s)
    }

    /// `u^α_{J+i}`.
    pub fn derivative(&self, s: Symbol, i: usize) -> Result<Option<Symbol>, JetError> {
        let Some((a, mut j)) = self.classify(s) else {
            return Ok(None);
        };
        j[i] += 1;
        self.jet(a, &j).map(Some)
    }

    /// All jets of order `k`, dependent-major, indices in descending
    /// lexicographic order.
    pub fn jets_of_order(&self, k: usize) -> Result<Vec<Symbol>, JetError> {
        let idx = indices_of_order(self.n(), k);
        let mut out = Vec::new();
        for a in 0..self.m() {
            for j in &idx {
                out.push(self.jet(a, j)?);
            }
        }
        Ok(out)
    }

    pub fn multi_indices(&self, k: usize) -> Vec<MultiIndex> {
        indices_of_order(self.n(), k)
    }

    /// Sort key: order, dependent, then index (first variable first).
    pub fn rank_key(&self, s: Symbol) -> Option<(usize, usize, Vec<std::cmp::Reverse<u32>>)> {
        self.classify(s).map(|(a, j)| {
            let ord = j.iter().sum::<u32>() as usize;
            (ord, a, j.into_iter().map(std::cmp::Reverse).collect())
        })
    }

    /// `D_i e = ∂e/∂x^i + Σ u^α_{J,i} ∂e/∂u^α_J`.
    pub fn total_derivative(&self, e: &Expr, i: usize) -> Result<Expr, JetError> {
        let mut out = e.differentiate(self.0.independents[i]);
        for s in e.symbols() {
            if let Some(next) = self.derivative(s, i)? {
                let d = e.differentiate(s);
                if !d.is_zero() {
                    out = out + next.expr() * d;
                }
            }
        }
        Ok(out)
    }

    /// Jet symbols (and dependents) occurring anywhere in `e`.
    pub fn variables_in(&self, e: &Expr) -> Vec<Symbol> {
        let mut v: Vec<Symbol> = e.symbols().into_iter().filter(|&s| self.classify(s).is_some()).collect();
        v.sort_by_key(|&s| self.rank_key(s));
        v
    }

    /// Highest jet order occurring in `e`, if any jet or dependent occurs.
    pub fn order_in(&self, e: &Expr) -> Option<usize> {
        self.variables_in(e).iter().filter_map(|&s| self.order_of(s)).max()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Symbol,
    pub rhs: Expr,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// A system `u^α_K = F^α_K` in solved form: left sides are distinct and none
/// of them occurs on any right side.
#[derive(Debug, Clone)]
pub struct JetSystem {
    space: JetSpace,
    equations: Vec<Equation>,
    order: usize,
}

impl JetSystem {
    pub fn empty(space: &JetSpace) -> JetSystem {
        JetSystem {
            space: space.clone(),
            equations: Vec::new(),
            order: 1,
        }
    }

    pub fn new(space: &JetSpace, eqs: Vec<(Symbol, Expr)>) -> Result<JetSystem, JetError> {
        let mut principal = BTreeMap::new();
        for (lhs, _) in &eqs {
            if space.classify(*lhs).is_none() {
                return Err(JetError::Foreign(lhs.name()));
            }
            if principal.insert(lhs.indet(), ()).is_some() {
                return Err(JetError::DuplicatePrincipal(lhs.name()));
            }
        }
        for (_, rhs) in &eqs {
            for s in rhs.symbols() {
                if principal.contains_key(&s.indet()) {
                    return Err(JetError::NotSolved(s.name()));
                }
            }
        }
        let mut sys = JetSystem {
            space: space.clone(),
            equations: eqs.into_iter().map(|(lhs, rhs)| Equation { lhs, rhs }).collect(),
            order: 1,
        };
        sys.order = sys.natural_order();
        sys.sort();
        Ok(sys)
    }

    /// Brings implicit equations `e = 0` into solved form, one at a time,
    /// fewest variables first.
    pub fn from_implicit(space: &JetSpace, exprs: &[Expr]) -> Result<JetSystem, JetError> {
        let mut sys = JetSystem::empty(space);
        let mut pending: Vec<Expr> = exprs.to_vec();
        while !pending.is_empty() {
            let mut reduced = Vec::new();
            for e in &pending {
                let r = sys.reduce(e)?;
                if !r.is_zero() {
                    reduced.push(r);
                }
            }
            if reduced.is_empty() {
                break;
            }
            let pick = (0..reduced.len())
                .min_by_key(|&i| (space.variables_in(&reduced[i]).len(), i))
                .expect("nonempty");
            let e = reduced.remove(pick);
            sys.adjoin(&e)?;
            pending = reduced;
        }
        sys.order = sys.natural_order().max(sys.order);
        Ok(sys)
    }

    fn natural_order(&self) -> usize {
        self.equations
            .iter()
            .map(|e| self.equation_order(e))
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// Highest jet order in an equation, left or right side.
    pub fn equation_order(&self, eq: &Equation) -> usize {
        let l = self.space.order_of(eq.lhs).unwrap_or(0);
        l.max(self.space.order_in(&eq.rhs).unwrap_or(0))
    }

    fn sort(&mut self) {
        let space = self.space.clone();
        self.equations.sort_by_key(|e| space.rank_key(e.lhs));
    }

    /// Raises the nominal order, as for an empty system studied at order `q`.
    pub fn with_order(mut self, q: usize) -> JetSystem {
        self.order = self.order.max(q);
        self
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn is_principal(&self, s: Symbol) -> bool {
        self.equations.iter().any(|e| e.lhs == s)
    }

    pub fn rhs_of(&self, s: Symbol) -> Option<&Expr> {
        self.equations.iter().find(|e| e.lhs == s).map(|e| &e.rhs)
    }

    fn bindings(&self) -> HashMap<Indet, Expr> {
        self.equations.iter().map(|e| (e.lhs.indet(), e.rhs.clone())).collect()
    }

    /// Replaces every principal derivative by its right-hand side.
    pub fn reduce(&self, e: &Expr) -> Result<Expr, JetError> {
        if self.equations.is_empty() {
            return Ok(e.clone());
        }
        Ok(e.substitute(&self.bindings())?)
    }

    /// Parametric jets of order `k`.
    pub fn parametric(&self, k: usize) -> Result<Vec<Symbol>, JetError> {
        Ok(self
            .space
            .jets_of_order(k)?
            .into_iter()
            .filter(|&s| !self.is_principal(s))
            .collect())
    }

    /// Adds `e = 0`, solved for its highest-ranked linearly occurring
    /// variable. Returns `None` when `e` already vanishes modulo the system.
    pub fn adjoin(&mut self, e: &Expr) -> Result<Option<Symbol>, JetError> {
        let e = self.reduce(e)?;
        if e.is_zero() {
            return Ok(None);
        }
        check_genuine(&self.space, &e)?;
        let (s, sol) = solve_for_best(&self.space, &e)?;
        let bind: HashMap<Indet, Expr> = [(s.indet(), sol.clone())].into_iter().collect();
        for eq in &mut self.equations {
            if eq.rhs.depends_on(s) {
                eq.rhs = eq.rhs.substitute(&bind)?;
            }
        }
        self.equations.push(Equation { lhs: s, rhs: sol });
        self.order = self.order.max(self.natural_order());
        self.sort();
        Ok(Some(s))
    }

    /// `lhs − rhs` for every equation.
    pub fn residual_forms(&self) -> Vec<Expr> {
        self.equations.iter().map(|e| e.lhs.expr() - &e.rhs).collect()
    }
}

impl fmt::Display for JetSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.equations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A nonzero condition must involve some dependent variable or jet.
pub(crate) fn check_genuine(space: &JetSpace, e: &Expr) -> Result<(), JetError> {
    if e.is_constant() {
        return Err(JetError::Inconsistent(e.to_string()));
    }
    if space.variables_in(e).is_empty() {
        return Err(JetError::NonGenuine(e.to_string()));
    }
    Ok(())
}

/// Highest order first; among equals a constant, then a short coefficient.
fn solve_for_best(space: &JetSpace, e: &Expr) -> Result<(Symbol, Expr), JetError> {
    let num = Expr::from_poly(e.num().clone());
    let mut best: Option<((std::cmp::Reverse<usize>, bool, usize, usize), Symbol, Expr)> = None;
    for s in space.variables_in(e) {
        let c1 = num.differentiate(s);
        if c1.is_zero() || c1.depends_on(s) {
            continue;
        }
        let Some(sol) = solve_linear(e, s) else { continue };
        let ord = space.order_of(s).unwrap_or(0);
        let score = (
            std::cmp::Reverse(ord),
            !c1.is_constant(),
            c1.num().len() + c1.den().len(),
            c1.indets().len(),
        );
        // Candidates arrive in rank order, so the first of equal score wins.
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, s, sol));
        }
    }
    best.map(|(_, s, sol)| (s, sol))
        .ok_or_else(|| JetError::Unsolvable(e.to_string()))
}
