//! Process-wide, append-only table of indeterminates.
//!
//! Every polynomial indeterminate is either a named [`Symbol`] or an
//! application of an [`OpaqueFunc`] (with an accumulated multiset of partial
//! derivatives) to a list of argument expressions. Indeterminates are interned
//! once and referred to by index afterwards, so expressions stay cheap to
//! clone, hash and compare.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

use serde::{Deserialize, Serialize};

use super::{Expr, ExprError};

/// Role of a named symbol. Fixed when the symbol is first created.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    Coordinate,
    GroupParameter,
    JetVariable,
    Auxiliary,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolKind::Coordinate => "coordinate",
            SymbolKind::GroupParameter => "group-parameter",
            SymbolKind::JetVariable => "jet-variable",
            SymbolKind::Auxiliary => "auxiliary",
        };
        f.write_str(s)
    }
}

/// Index of an interned indeterminate. The numeric order is creation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Indet(pub(crate) u32);

/// A named indeterminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub(crate) Indet);

/// A declared function symbol with named argument slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpaqueFunc(pub(crate) u32);

#[derive(Debug)]
pub(crate) enum IndetData {
    Symbol {
        name: String,
        kind: SymbolKind,
    },
    Apply {
        func: OpaqueFunc,
        deriv: Vec<u32>,
        args: Vec<Expr>,
    },
}

#[derive(Debug)]
pub(crate) struct Entry {
    pub(crate) data: IndetData,
    /// Printed form; used for creation-order independent sorting and display.
    pub(crate) key: String,
}

#[derive(Debug)]
pub(crate) struct FuncData {
    pub(crate) name: String,
    pub(crate) slots: Vec<String>,
}

#[derive(Default)]
struct Table {
    indets: Vec<Arc<Entry>>,
    by_name: HashMap<String, u32>,
    by_apply: HashMap<(u32, Vec<u32>, Vec<Expr>), u32>,
    funcs: Vec<Arc<FuncData>>,
    func_by_name: HashMap<String, u32>,
}

static TABLE: LazyLock<RwLock<Table>> = LazyLock::new(|| RwLock::new(Table::default()));

pub(crate) fn entry(i: Indet) -> Arc<Entry> {
    let t = TABLE.read().expect("symbol table poisoned");
    t.indets[i.0 as usize].clone()
}

pub(crate) fn func_data(f: OpaqueFunc) -> Arc<FuncData> {
    let t = TABLE.read().expect("symbol table poisoned");
    t.funcs[f.0 as usize].clone()
}

pub(crate) fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Indet {
    pub fn index(self) -> u32 {
        self.0
    }

    /// Sort key independent of creation order.
    pub fn key(self) -> String {
        entry(self).key.clone()
    }

    pub fn as_symbol(self) -> Option<Symbol> {
        match entry(self).data {
            IndetData::Symbol { .. } => Some(Symbol(self)),
            IndetData::Apply { .. } => None,
        }
    }

    /// `(function, derivative counts, arguments)` when this is an application.
    pub fn as_application(self) -> Option<(OpaqueFunc, Vec<u32>, Vec<Expr>)> {
        match &entry(self).data {
            IndetData::Apply { func, deriv, args } => Some((*func, deriv.clone(), args.clone())),
            IndetData::Symbol { .. } => None,
        }
    }
}

impl fmt::Display for Indet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&entry(*self).key)
    }
}

impl Symbol {
    /// Interns `name` with the given kind. Re-declaring an existing name with
    /// the same kind returns the existing symbol.
    pub fn new(name: &str, kind: SymbolKind) -> Result<Symbol, ExprError> {
        if !valid_identifier(name) {
            return Err(ExprError::InvalidName(name.to_string()));
        }
        {
            let t = TABLE.read().expect("symbol table poisoned");
            if let Some(&i) = t.by_name.get(name) {
                return check_kind(&t, i, name, kind);
            }
            if t.func_by_name.contains_key(name) {
                return Err(ExprError::NameInUse(name.to_string()));
            }
        }
        let mut t = TABLE.write().expect("symbol table poisoned");
        if let Some(&i) = t.by_name.get(name) {
            return check_kind(&t, i, name, kind);
        }
        let id = t.indets.len() as u32;
        t.indets.push(Arc::new(Entry {
            data: IndetData::Symbol {
                name: name.to_string(),
                kind,
            },
            key: name.to_string(),
        }));
        t.by_name.insert(name.to_string(), id);
        Ok(Symbol(Indet(id)))
    }

    /// Looks up an already interned symbol.
    pub fn lookup(name: &str) -> Option<Symbol> {
        let t = TABLE.read().expect("symbol table poisoned");
        t.by_name.get(name).map(|&i| Symbol(Indet(i)))
    }

    pub fn coordinate(name: &str) -> Result<Symbol, ExprError> {
        Symbol::new(name, SymbolKind::Coordinate)
    }

    pub fn param(name: &str) -> Result<Symbol, ExprError> {
        Symbol::new(name, SymbolKind::GroupParameter)
    }

    pub fn jet(name: &str) -> Result<Symbol, ExprError> {
        Symbol::new(name, SymbolKind::JetVariable)
    }

    pub fn aux(name: &str) -> Result<Symbol, ExprError> {
        Symbol::new(name, SymbolKind::Auxiliary)
    }

    pub fn indet(self) -> Indet {
        self.0
    }

    pub fn name(self) -> String {
        match &entry(self.0).data {
            IndetData::Symbol { name, .. } => name.clone(),
            IndetData::Apply { .. } => unreachable!("symbol handle on application"),
        }
    }

    pub fn kind(self) -> SymbolKind {
        match &entry(self.0).data {
            IndetData::Symbol { kind, .. } => *kind,
            IndetData::Apply { .. } => unreachable!("symbol handle on application"),
        }
    }

    pub fn expr(self) -> Expr {
        Expr::indet(self.0)
    }
}

fn check_kind(t: &Table, i: u32, name: &str, kind: SymbolKind) -> Result<Symbol, ExprError> {
    match &t.indets[i as usize].data {
        IndetData::Symbol { kind: k, .. } if *k == kind => Ok(Symbol(Indet(i))),
        IndetData::Symbol { kind: k, .. } => Err(ExprError::KindConflict {
            name: name.to_string(),
            existing: *k,
            requested: kind,
        }),
        IndetData::Apply { .. } => Err(ExprError::NameInUse(name.to_string())),
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl OpaqueFunc {
    /// Declares a function with named argument slots, e.g. `L(x, u, p)`.
    /// Slot names drive the derivative-tag notation `L_pp`.
    pub fn declare(name: &str, slots: &[&str]) -> Result<OpaqueFunc, ExprError> {
        if !valid_identifier(name) || name.contains('_') {
            return Err(ExprError::InvalidName(name.to_string()));
        }
        if slots.is_empty() {
            return Err(ExprError::ZeroArity(name.to_string()));
        }
        for (k, s) in slots.iter().enumerate() {
            if !s.chars().all(|c| c.is_ascii_alphanumeric()) || s.is_empty() {
                return Err(ExprError::InvalidName(s.to_string()));
            }
            if slots[..k].contains(s) {
                return Err(ExprError::InvalidName(format!("duplicate slot {s}")));
            }
        }
        let slots: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
        let mut t = TABLE.write().expect("symbol table poisoned");
        if let Some(&i) = t.func_by_name.get(name) {
            if t.funcs[i as usize].slots == slots {
                return Ok(OpaqueFunc(i));
            }
            return Err(ExprError::FunctionRedeclared(name.to_string()));
        }
        if t.by_name.contains_key(name) {
            return Err(ExprError::NameInUse(name.to_string()));
        }
        let id = t.funcs.len() as u32;
        t.funcs.push(Arc::new(FuncData {
            name: name.to_string(),
            slots,
        }));
        t.func_by_name.insert(name.to_string(), id);
        Ok(OpaqueFunc(id))
    }

    pub fn lookup(name: &str) -> Option<OpaqueFunc> {
        let t = TABLE.read().expect("symbol table poisoned");
        t.func_by_name.get(name).map(|&i| OpaqueFunc(i))
    }

    pub fn name(self) -> String {
        func_data(self).name.clone()
    }

    pub fn arity(self) -> usize {
        func_data(self).slots.len()
    }

    pub fn slots(self) -> Vec<String> {
        func_data(self).slots.clone()
    }

    /// Application with no derivatives taken.
    pub fn apply(self, args: Vec<Expr>) -> Result<Expr, ExprError> {
        let deriv = vec![0; self.arity()];
        self.apply_derivative(deriv, args)
    }

    /// Application of the partial derivative given by per-slot counts.
    pub fn apply_derivative(self, deriv: Vec<u32>, args: Vec<Expr>) -> Result<Expr, ExprError> {
        let fd = func_data(self);
        if args.len() != fd.slots.len() || deriv.len() != fd.slots.len() {
            return Err(ExprError::Arity {
                name: fd.name.clone(),
                expected: fd.slots.len(),
                found: args.len(),
            });
        }
        Ok(Expr::indet(intern_apply(self, deriv, args)))
    }

    /// Derivative tag such as `pp` for the counts `[0, 0, 2]` on slots `x, u, p`.
    pub fn derivative_tag(self, deriv: &[u32]) -> String {
        let fd = func_data(self);
        let mut tag = String::new();
        for (slot, &c) in fd.slots.iter().zip(deriv) {
            for _ in 0..c {
                tag.push_str(slot);
            }
        }
        tag
    }
}

pub(crate) fn intern_apply(func: OpaqueFunc, deriv: Vec<u32>, args: Vec<Expr>) -> Indet {
    let lookup_key = (func.0, deriv, args);
    {
        let t = TABLE.read().expect("symbol table poisoned");
        if let Some(&i) = t.by_apply.get(&lookup_key) {
            return Indet(i);
        }
    }
    let (f, deriv, args) = lookup_key;
    // Printing the arguments takes read locks, so build the key first.
    let func = OpaqueFunc(f);
    let tag = func.derivative_tag(&deriv);
    let mut key = func.name();
    if !tag.is_empty() {
        key.push('_');
        key.push_str(&tag);
    }
    key.push('(');
    for (k, a) in args.iter().enumerate() {
        if k > 0 {
            key.push(',');
        }
        key.push_str(&a.to_string());
    }
    key.push(')');
    let mut t = TABLE.write().expect("symbol table poisoned");
    let lookup_key = (f, deriv, args);
    if let Some(&i) = t.by_apply.get(&lookup_key) {
        return Indet(i);
    }
    let id = t.indets.len() as u32;
    let (_, deriv, args) = lookup_key.clone();
    t.indets.push(Arc::new(Entry {
        data: IndetData::Apply { func, deriv, args },
        key,
    }));
    t.by_apply.insert(lookup_key, id);
    Indet(id)
}
