//! Exterior forms of degree at most 2 over a coordinate chart.
//!
//! Forms carry coefficients relative to a [`Coframe`]; 2-forms store only the
//! `j < k` pairs. Exterior derivatives are taken in coordinate differentials
//! and rewritten back through the inverse transition matrix.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Symbol};
use crate::linalg::{Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("a chart needs at least one coordinate")]
    EmptyChart,
    #[error("coordinate `{0}` repeated in chart")]
    DuplicateCoordinate(String),
    #[error("wedge of degrees {0} and {1} exceeds 2")]
    DegreeOverflow(u8, u8),
    #[error("forms live on different charts")]
    ChartMismatch,
    #[error("coframe transition matrix has identically zero determinant")]
    SingularCoframe,
    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("operation undefined for a {0}-form")]
    Degree(u8),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<MatrixError> for FormError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Singular => FormError::SingularCoframe,
            MatrixError::Shape(_) => FormError::Shape {
                expected: 0,
                found: 0,
            },
            MatrixError::Expr(e) => FormError::Expr(e),
        }
    }
}

/// Ordered `(j, k)` pairs with `j < k`, in the storage order of 2-forms.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 0..n {
        for k in j + 1..n {
            v.push((j, k));
        }
    }
    v
}

pub fn pair_index(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < n);
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chart {
    coords: Vec<Symbol>,
}

impl Chart {
    pub fn new(coords: Vec<Symbol>) -> Result<Chart, FormError> {
        if coords.is_empty() {
            return Err(FormError::EmptyChart);
        }
        let mut seen = HashSet::new();
        for c in &coords {
            if !seen.insert(*c) {
                return Err(FormError::DuplicateCoordinate(c.name()));
            }
        }
        Ok(Chart { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }
}

/// `n` one-forms `θ^i = Σ_j A_ij dx^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coframe {
    chart: Chart,
    names: Vec<String>,
    a: Matrix,
    a_inv: Matrix,
    det: Expr,
}

impl Coframe {
    pub fn coordinate(chart: &Chart) -> Arc<Coframe> {
        let n = chart.dim();
        Arc::new(Coframe {
            names: chart.coords.iter().map(|c| format!("d{c}")).collect(),
            chart: chart.clone(),
            a: Matrix::identity(n),
            a_inv: Matrix::identity(n),
            det: Expr::one(),
        })
    }

    pub fn new(chart: &Chart, names: Vec<String>, a: Matrix) -> Result<Arc<Coframe>, FormError> {
        let n = chart.dim();
        if a.rows() != n || a.cols() != n {
            return Err(FormError::Shape {
                expected: n * n,
                found: a.rows() * a.cols(),
            });
        }
        if names.len() != n {
            return Err(FormError::Shape {
                expected: n,
                found: names.len(),
            });
        }
        let det = a.det()?;
        if det.is_zero() {
            return Err(FormError::SingularCoframe);
        }
        let a_inv = a.inverse()?;
        Ok(Arc::new(Coframe {
            chart: chart.clone(),
            names,
            a,
            a_inv,
            det,
        }))
    }

    /// Coframe with default names `eta1..etan`.
    pub fn with_matrix(chart: &Chart, a: Matrix) -> Result<Arc<Coframe>, FormError> {
        let names = (1..=chart.dim()).map(|i| format!("eta{i}")).collect();
        Coframe::new(chart, names, a)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn transition(&self) -> &Matrix {
        &self.a
    }

    pub fn inverse(&self) -> &Matrix {
        &self.a_inv
    }

    pub fn determinant(&self) -> &Expr {
        &self.det
    }

    pub fn is_coordinate(&self) -> bool {
        self.a.is_identity()
    }

    /// Expressions that must stay nonzero for the coframe to be valid: the
    /// determinant and every denominator of the transition matrix.
    pub fn restrictions(&self) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        let mut push = |e: Expr| {
            if !e.is_constant() && !out.contains(&e) {
                out.push(e);
            }
        };
        push(self.det.clone());
        for e in self.a.entries() {
            push(Expr::from_poly(e.den().clone()));
        }
        out
    }

    /// The `i`-th coframe element as a 1-form.
    pub fn element(self: &Arc<Self>, i: usize) -> DiffForm {
        let mut c = vec![Expr::zero(); self.dim()];
        c[i] = Expr::one();
        DiffForm {
            degree: 1,
            frame: self.clone(),
            coeffs: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffForm {
    degree: u8,
    frame: Arc<Coframe>,
    coeffs: Vec<Expr>,
}

fn basis_len(n: usize, degree: u8) -> usize {
    match degree {
        0 => 1,
        1 => n,
        _ => n * (n - 1) / 2,
    }
}

impl DiffForm {
    pub fn new(frame: &Arc<Coframe>, degree: u8, coeffs: Vec<Expr>) -> Result<DiffForm, FormError> {
        if degree > 2 {
            return Err(FormError::Degree(degree));
        }
        let expected = basis_len(frame.dim(), degree);
        if coeffs.len() != expected {
            return Err(FormError::Shape {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(DiffForm {
            degree,
            frame: frame.clone(),
            coeffs,
        })
    }

    pub fn zero(frame: &Arc<Coframe>, degree: u8) -> DiffForm {
        DiffForm {
            degree,
            frame: frame.clone(),
            coeffs: vec![Expr::zero(); basis_len(frame.dim(), degree.min(2))],
        }
    }

    pub fn function(frame: &Arc<Coframe>, f: Expr) -> DiffForm {
        DiffForm {
            degree: 0,
            frame: frame.clone(),
            coeffs: vec![f],
        }
    }

    pub fn one_form(frame: &Arc<Coframe>, coeffs: Vec<Expr>) -> Result<DiffForm, FormError> {
        DiffForm::new(frame, 1, coeffs)
    }

    /// Differential of a coordinate, `dx^i`, written in the coordinate coframe.
    pub fn coordinate_differential(chart: &Chart, i: usize) -> DiffForm {
        Coframe::coordinate(chart).element(i)
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn frame(&self) -> &Arc<Coframe> {
        &self.frame
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Coefficient of `θ^j∧θ^k` for any ordered pair (antisymmetric).
    pub fn coeff2(&self, j: usize, k: usize) -> Expr {
        assert_eq!(self.degree, 2);
        let n = self.frame.dim();
        match j.cmp(&k) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.coeffs[pair_index(n, j, k)].clone(),
            std::cmp::Ordering::Greater => -&self.coeffs[pair_index(n, k, j)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    pub fn scale(&self, f: &Expr) -> DiffForm {
        DiffForm {
            degree: self.degree,
            frame: self.frame.clone(),
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm, FormError> {
        if self.degree != other.degree {
            return Err(FormError::Degree(other.degree));
        }
        let other = other.rewrite(&self.frame)?;
        Ok(DiffForm {
            degree: self.degree,
            frame: self.frame.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &DiffForm) -> Result<DiffForm, FormError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    fn same_chart(&self, other: &DiffForm) -> Result<(), FormError> {
        if self.frame.chart != other.frame.chart {
            return Err(FormError::ChartMismatch);
        }
        Ok(())
    }

    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm, FormError> {
        self.same_chart(other)?;
        if self.degree + other.degree > 2 {
            return Err(FormError::DegreeOverflow(self.degree, other.degree));
        }
        let other = other.rewrite(&self.frame)?;
        match (self.degree, other.degree) {
            (0, _) => Ok(other.scale(&self.coeffs[0])),
            (_, 0) => Ok(self.scale(&other.coeffs[0])),
            _ => {
                let n = self.frame.dim();
                let coeffs = pairs(n)
                    .into_iter()
                    .map(|(j, k)| {
                        &self.coeffs[j] * &other.coeffs[k] - &self.coeffs[k] * &other.coeffs[j]
                    })
                    .collect();
                Ok(DiffForm {
                    degree: 2,
                    frame: self.frame.clone(),
                    coeffs,
                })
            }
        }
    }

    /// Coefficients in the coordinate differentials of the chart.
    pub fn to_coordinates(&self) -> DiffForm {
        let coord = Coframe::coordinate(&self.frame.chart);
        if self.frame.is_coordinate() {
            return DiffForm {
                frame: coord,
                ..self.clone()
            };
        }
        let a = &self.frame.a;
        let n = self.frame.dim();
        let coeffs = match self.degree {
            0 => self.coeffs.clone(),
            1 => (0..n)
                .map(|j| {
                    (0..n)
                        .filter(|&i| !self.coeffs[i].is_zero() && !a[(i, j)].is_zero())
                        .map(|i| &self.coeffs[i] * &a[(i, j)])
                        .sum()
                })
                .collect(),
            _ => change_pairs(&self.coeffs, a, n),
        };
        DiffForm {
            degree: self.degree,
            frame: coord,
            coeffs,
        }
    }

    /// Same form, coefficients relative to `target`.
    pub fn rewrite(&self, target: &Arc<Coframe>) -> Result<DiffForm, FormError> {
        if Arc::ptr_eq(&self.frame, target) || *self.frame == **target {
            return Ok(DiffForm {
                frame: target.clone(),
                ..self.clone()
            });
        }
        if self.frame.chart != target.chart {
            return Err(FormError::ChartMismatch);
        }
        let w = self.to_coordinates();
        if target.is_coordinate() {
            return Ok(DiffForm {
                frame: target.clone(),
                ..w
            });
        }
        let inv = &target.a_inv;
        let n = target.dim();
        let coeffs = match self.degree {
            0 => w.coeffs,
            // dx^a = Σ_j inv_aj θ^j
            1 => (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| !w.coeffs[j].is_zero() && !inv[(j, i)].is_zero())
                        .map(|j| &w.coeffs[j] * &inv[(j, i)])
                        .sum()
                })
                .collect(),
            _ => change_pairs(&w.coeffs, inv, n),
        };
        Ok(DiffForm {
            degree: self.degree,
            frame: target.clone(),
            coeffs,
        })
    }

    /// Exterior derivative, expressed in this form's coframe.
    pub fn d(&self) -> Result<DiffForm, FormError> {
        let chart = &self.frame.chart;
        let n = chart.dim();
        let coord = Coframe::coordinate(chart);
        let out = match self.degree {
            0 => DiffForm {
                degree: 1,
                frame: coord,
                coeffs: chart.coords.iter().map(|&x| self.coeffs[0].differentiate(x)).collect(),
            },
            1 => {
                let w = self.to_coordinates();
                let coeffs = pairs(n)
                    .into_iter()
                    .map(|(i, j)| {
                        w.coeffs[j].differentiate(chart.coords[i])
                            - w.coeffs[i].differentiate(chart.coords[j])
                    })
                    .collect();
                DiffForm {
                    degree: 2,
                    frame: coord,
                    coeffs,
                }
            }
            _ => return Err(FormError::Degree(self.degree)),
        };
        out.rewrite(&self.frame)
    }

    /// Contraction `v ⨼ self`, computed in `v`'s coframe.
    pub fn interior(&self, v: &VectorField) -> Result<DiffForm, FormError> {
        if self.frame.chart != v.frame.chart {
            return Err(FormError::ChartMismatch);
        }
        let a = self.rewrite(&v.frame)?;
        let n = a.frame.dim();
        match a.degree {
            0 => Err(FormError::Degree(0)),
            1 => {
                let s = (0..n)
                    .filter(|&i| !a.coeffs[i].is_zero() && !v.comps[i].is_zero())
                    .map(|i| &a.coeffs[i] * &v.comps[i])
                    .sum();
                Ok(DiffForm::function(&a.frame, s))
            }
            _ => {
                // v ⨼ θ^j∧θ^k = v_j θ^k − v_k θ^j
                let mut out = vec![Expr::zero(); n];
                for (idx, (j, k)) in pairs(n).into_iter().enumerate() {
                    let c = &a.coeffs[idx];
                    if c.is_zero() {
                        continue;
                    }
                    out[k] = &out[k] + c * &v.comps[j];
                    out[j] = &out[j] - c * &v.comps[k];
                }
                Ok(DiffForm {
                    degree: 1,
                    frame: a.frame.clone(),
                    coeffs: out,
                })
            }
        }
    }
}

/// Transforms 2-form pair coefficients through `dual^a = Σ_j m_aj e^j`:
/// `c'_{jk} = Σ_{a<b} c_ab (m_aj m_bk − m_ak m_bj)`.
pub fn change_pairs(c: &[Expr], m: &Matrix, n: usize) -> Vec<Expr> {
    let ps = pairs(n);
    ps.iter()
        .map(|&(j, k)| {
            let mut acc = Expr::zero();
            for (idx, &(a, b)) in ps.iter().enumerate() {
                if c[idx].is_zero() {
                    continue;
                }
                let minor = &m[(a, j)] * &m[(b, k)] - &m[(a, k)] * &m[(b, j)];
                if !minor.is_zero() {
                    acc = acc + &c[idx] * minor;
                }
            }
            acc
        })
        .collect()
}

fn term(c: &Expr, basis: &str) -> String {
    if c.is_one() {
        return basis.to_string();
    }
    if (-c).is_one() {
        return format!("-{basis}");
    }
    let t = c.to_string();
    if t.contains(['+', '/']) || t[1..].contains('-') {
        format!("({t})*{basis}")
    } else {
        format!("{t}*{basis}")
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = &self.frame.names;
        let n = self.frame.dim();
        let mut parts = Vec::new();
        match self.degree {
            0 => return write!(f, "{}", self.coeffs[0]),
            1 => {
                for (i, c) in self.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        parts.push(term(c, &names[i]));
                    }
                }
            }
            _ => {
                for (idx, (j, k)) in pairs(n).into_iter().enumerate() {
                    let c = &self.coeffs[idx];
                    if !c.is_zero() {
                        parts.push(term(c, &format!("{}^{}", names[j], names[k])));
                    }
                }
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + ").replace("+ -", "- "))
        }
    }
}

/// Components in the dual basis of a coframe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    frame: Arc<Coframe>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(frame: &Arc<Coframe>, comps: Vec<Expr>) -> Result<VectorField, FormError> {
        if comps.len() != frame.dim() {
            return Err(FormError::Shape {
                expected: frame.dim(),
                found: comps.len(),
            });
        }
        Ok(VectorField {
            frame: frame.clone(),
            comps,
        })
    }

    pub fn basis(frame: &Arc<Coframe>, i: usize) -> VectorField {
        let mut comps = vec![Expr::zero(); frame.dim()];
        comps[i] = Expr::one();
        VectorField {
            frame: frame.clone(),
            comps,
        }
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }
}

/// `dθ^i = Σ_{j<k} B^i_jk θ^j∧θ^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureFunctions {
    n: usize,
    table: Vec<Vec<Expr>>,
}

impl StructureFunctions {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `B^i_jk`, antisymmetric in `j, k`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Expr {
        match j.cmp(&k) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.table[i][pair_index(self.n, j, k)].clone(),
            std::cmp::Ordering::Greater => -&self.table[i][pair_index(self.n, k, j)],
        }
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.table[i]
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().flatten().all(Expr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> StructureFunctions {
        StructureFunctions {
            n: self.n,
            table: self.table.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }

    pub fn from_table(n: usize, table: Vec<Vec<Expr>>) -> StructureFunctions {
        StructureFunctions { n, table }
    }
}

pub fn structure_functions(frame: &Arc<Coframe>) -> Result<StructureFunctions, FormError> {
    let n = frame.dim();
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        table.push(frame.element(i).d()?.coeffs);
    }
    Ok(StructureFunctions { n, table })
}
