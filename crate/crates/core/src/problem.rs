//! Problem files: a line-oriented, sectioned text format with expressions in
//! the kernel grammar. See `docs/grammar.md`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::engine::{residual_label, GStructureProblem, Policy};
use crate::expr::{Context, Expr, ExprError, Q, Symbol, SymbolKind};
use crate::forms::{Chart, Coframe, FormError};
use crate::group::{slot_symbol, GroupError, ParamGroup};
use crate::linalg::Matrix;

/// Number of random products used to probe closure of the group.
const CLOSURE_SAMPLES: usize = 8;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("validation failed ({check}): {msg}")]
    Validation { check: &'static str, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> ProblemError {
    ProblemError::Parse { line, msg: msg.into() }
}

fn expr_err(line: usize, e: ExprError) -> ProblemError {
    let msg = match &e {
        ExprError::Syntax { pos, .. }
        | ExprError::UnknownSymbol { pos, .. }
        | ExprError::UnknownFunction { pos, .. } => format!("column {}: {e}", pos + 1),
        _ => e.to_string(),
    };
    parse_err(line, msg)
}

/// A validated problem with its run policy.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub title: String,
    pub problem: GStructureProblem,
    pub policy: Policy,
    pub context: Context,
}

type Lines = Vec<(usize, String)>;

const SECTIONS: [&str; 7] = [
    "metadata",
    "coordinates",
    "functions",
    "definitions",
    "coframe",
    "group",
    "policy",
];

fn split_sections(text: &str) -> Result<HashMap<&'static str, Lines>, ProblemError> {
    let mut out: HashMap<&'static str, Lines> = HashMap::new();
    let mut current: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            let Some(&sec) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            };
            if out.contains_key(sec) {
                return Err(parse_err(line, format!("section [{sec}] given twice")));
            }
            out.insert(sec, Vec::new());
            current = Some(sec);
            continue;
        }
        let Some(sec) = current else {
            return Err(parse_err(line, "content before the first section header"));
        };
        out.get_mut(sec).expect("section exists").push((line, body.to_string()));
    }
    Ok(out)
}

/// Splits at commas outside parentheses.
fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn names(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

fn key_value(line: usize, s: &str) -> Result<(String, String), ProblemError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn constant(ctx: &Context, line: usize, s: &str) -> Result<Q, ProblemError> {
    let e = ctx.parse(s).map_err(|e| expr_err(line, e))?;
    e.as_constant()
        .ok_or_else(|| parse_err(line, format!("`{s}` is not a constant")))
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    let sections = split_sections(text)?;
    let get = |s: &'static str| sections.get(s).cloned().unwrap_or_default();
    let mut ctx = Context::new();

    let mut title = String::from("untitled");
    for (line, l) in get("metadata") {
        let (k, v) = key_value(line, &l)?;
        match k.as_str() {
            "title" => title = v,
            "description" => {}
            _ => return Err(parse_err(line, format!("unknown metadata key `{k}`"))),
        }
    }

    if !sections.contains_key("coordinates") {
        return Err(ProblemError::MissingSection("coordinates"));
    }
    let mut coords = Vec::new();
    for (line, l) in get("coordinates") {
        for name in names(&l) {
            let s = ctx
                .declare(name, SymbolKind::Coordinate)
                .map_err(|e| expr_err(line, e))?;
            if coords.contains(&s) {
                return Err(parse_err(line, format!("coordinate `{name}` repeated")));
            }
            coords.push(s);
        }
    }
    let n = coords.len();
    let chart = Chart::new(coords.clone()).map_err(|e| parse_err(0, e.to_string()))?;

    for (line, l) in get("functions") {
        let (name, rest) = l
            .split_once('(')
            .ok_or_else(|| parse_err(line, "expected `F(slot, ...)`"))?;
        let slots_text = rest
            .strip_suffix(')')
            .ok_or_else(|| parse_err(line, "missing `)`"))?;
        let slots = names(slots_text);
        ctx.declare_function(name.trim(), &slots)
            .map_err(|e| expr_err(line, e))?;
    }

    for (line, l) in get("definitions") {
        let l = l.strip_prefix("let ").unwrap_or(&l);
        let (k, v) = key_value(line, l)?;
        let value = ctx.parse(&v).map_err(|e| expr_err(line, e))?;
        ctx.define(&k, value).map_err(|e| expr_err(line, e))?;
    }

    if !sections.contains_key("coframe") {
        return Err(ProblemError::MissingSection("coframe"));
    }
    let coframe = parse_coframe(&mut ctx, &chart, &get("coframe"))?;

    if !sections.contains_key("group") {
        return Err(ProblemError::MissingSection("group"));
    }
    let group = parse_group(&mut ctx, n, &get("group"))?;

    let mut policy = Policy::default();
    for (line, l) in get("policy") {
        if let Some(rest) = l.strip_prefix("target ") {
            let (label, v) = key_value(line, rest)?;
            if label.len() != 10 || !label.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(parse_err(line, format!("`{label}` is not a residual label")));
            }
            policy.targets.insert(label, constant(&ctx, line, &v)?);
            continue;
        }
        let (k, v) = key_value(line, &l)?;
        let num = |v: &str| -> Result<u64, ProblemError> {
            v.parse().map_err(|_| parse_err(line, format!("`{v}` is not a nonnegative integer")))
        };
        match k.as_str() {
            "max_loops" => policy.max_loops = num(&v)? as usize,
            "seed" => policy.seed = num(&v)?,
            _ => return Err(parse_err(line, format!("unknown policy key `{k}`"))),
        }
    }

    if group.n() != n {
        return Err(ProblemError::Validation {
            check: "dimension",
            msg: format!("group is {0}x{0} but there are {n} coordinates", group.n()),
        });
    }
    let closure = group.check_closure(CLOSURE_SAMPLES, policy.seed);
    if !closure.passed {
        return Err(ProblemError::Validation {
            check: "closure",
            msg: closure.failures.join("; "),
        });
    }
    let problem = GStructureProblem::new(coframe, group).map_err(|e| ProblemError::Validation {
        check: "dimension",
        msg: e.to_string(),
    })?;
    Ok(ProblemFile {
        title,
        problem,
        policy,
        context: ctx,
    })
}

fn validation_from_form(e: FormError) -> ProblemError {
    match e {
        FormError::SingularCoframe => ProblemError::Validation {
            check: "determinant",
            msg: "the coframe determinant vanishes identically".into(),
        },
        other => ProblemError::Validation {
            check: "coframe",
            msg: other.to_string(),
        },
    }
}

fn parse_coframe(
    ctx: &mut Context,
    chart: &Chart,
    lines: &Lines,
) -> Result<std::sync::Arc<Coframe>, ProblemError> {
    let n = chart.dim();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let is_matrix = lines.first().is_some_and(|(_, l)| l.starts_with("row "));
    if is_matrix {
        for (line, l) in lines {
            let Some(rest) = l.strip_prefix("row ") else {
                return Err(parse_err(*line, "mix of `row` lines and named forms"));
            };
            let row = split_top(rest)
                .iter()
                .map(|t| ctx.parse(t).map_err(|e| expr_err(*line, e)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != n {
                return Err(parse_err(*line, format!("row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
            labels.push(format!("eta{}", rows.len()));
        }
    } else {
        // Differentials `dx` are auxiliary symbols that must occur linearly.
        let mut dctx = ctx.clone();
        let ds: Vec<Symbol> = chart
            .coords()
            .iter()
            .map(|c| dctx.declare(&format!("d{c}"), SymbolKind::Auxiliary))
            .collect::<Result<_, _>>()
            .map_err(|e| expr_err(0, e))?;
        for (line, l) in lines {
            let (name, form) = key_value(*line, l)?;
            let e = dctx.parse(&form).map_err(|e| expr_err(*line, e))?;
            let mut row = Vec::with_capacity(n);
            let mut rest = e.clone();
            for d in &ds {
                let c = e.differentiate(*d);
                if ds.iter().any(|t| c.depends_on(*t)) {
                    return Err(parse_err(*line, format!("`{name}` is not linear in the differentials")));
                }
                rest = rest - &c * &d.expr();
                row.push(c);
            }
            if !rest.is_zero() {
                return Err(parse_err(*line, format!("`{name}` has a term without a differential")));
            }
            rows.push(row);
            labels.push(name);
        }
    }
    if rows.len() != n {
        return Err(ProblemError::Validation {
            check: "coframe",
            msg: format!("{} forms for {n} coordinates", rows.len()),
        });
    }
    let a = Matrix::from_rows(rows).map_err(|e| ProblemError::Validation {
        check: "coframe",
        msg: e.to_string(),
    })?;
    Coframe::new(chart, labels, a).map_err(validation_from_form)
}

fn parse_group(ctx: &mut Context, n: usize, lines: &Lines) -> Result<ParamGroup, ProblemError> {
    let mut params = Vec::new();
    let mut identity_text: Option<(usize, String)> = None;
    let mut row_text = Vec::new();
    let mut membership_text = Vec::new();
    let mut size: Option<usize> = None;
    for (line, l) in lines {
        let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l.as_str(), ""));
        match head {
            "params" => {
                for p in names(rest) {
                    params.push(ctx.declare(p, SymbolKind::GroupParameter).map_err(|e| expr_err(*line, e))?);
                }
            }
            "identity" => identity_text = Some((*line, rest.to_string())),
            "row" => row_text.push((*line, rest.to_string())),
            "membership" => membership_text.push((*line, rest.to_string())),
            "size" => {
                let v = rest.trim().trim_start_matches('=').trim();
                size = Some(v.parse().map_err(|_| parse_err(*line, format!("bad size `{v}`")))?);
            }
            _ => return Err(parse_err(*line, format!("unknown group key `{head}`"))),
        }
    }
    if let Some(s) = size {
        if s != n {
            return Err(ProblemError::Validation {
                check: "dimension",
                msg: format!("group size {s} but {n} coordinates"),
            });
        }
    }
    let entries = if row_text.is_empty() {
        if !params.is_empty() {
            return Err(ProblemError::Validation {
                check: "group",
                msg: "parameters given without matrix rows".into(),
            });
        }
        Matrix::identity(n)
    } else {
        let mut rows = Vec::new();
        for (line, t) in &row_text {
            let row = split_top(t)
                .iter()
                .map(|e| ctx.parse(e).map_err(|err| expr_err(*line, err)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != n {
                return Err(parse_err(*line, format!("row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(ProblemError::Validation {
                check: "group",
                msg: format!("{} rows for a {n}x{n} group", rows.len()),
            });
        }
        Matrix::from_rows(rows).map_err(|e| ProblemError::Validation {
            check: "group",
            msg: e.to_string(),
        })?
    };
    let identity = match identity_text {
        Some((line, t)) => names(&t)
            .iter()
            .map(|v| constant(ctx, line, v))
            .collect::<Result<Vec<_>, _>>()?,
        None if params.is_empty() => Vec::new(),
        None => {
            return Err(ProblemError::Validation {
                check: "identity",
                msg: "no identity values given".into(),
            })
        }
    };
    for i in 0..n {
        for j in 0..n {
            ctx.add_symbol(slot_symbol(i, j));
        }
    }
    let mut membership = Vec::new();
    for (line, t) in membership_text {
        let e = match t.split_once('=') {
            Some((l, r)) => {
                let l = ctx.parse(l.trim()).map_err(|e| expr_err(line, e))?;
                let r = ctx.parse(r.trim()).map_err(|e| expr_err(line, e))?;
                l - r
            }
            None => ctx.parse(t.trim()).map_err(|e| expr_err(line, e))?,
        };
        if params.iter().any(|p| e.depends_on(*p)) {
            return Err(parse_err(line, "membership equations are in the entries g<i>_<j> only"));
        }
        membership.push(Expr::from_poly(e.num().clone()));
    }
    ParamGroup::new(params, entries, identity, membership).map_err(|e| {
        let check = match e {
            GroupError::Singular => "determinant",
            GroupError::NotIdentity(_) => "identity",
            _ => "group",
        };
        ProblemError::Validation {
            check,
            msg: e.to_string(),
        }
    })
}

/// Labels of the residuals a policy may target, for documentation output.
pub fn target_map(policy: &Policy) -> BTreeMap<String, String> {
    policy
        .targets
        .iter()
        .map(|(k, v)| (k.clone(), Expr::constant(v.clone()).to_string()))
        .collect()
}

/// Label a residual would carry in reports.
pub fn label_of(e: &Expr) -> String {
    residual_label(e)
}
