//! Dense matrices over the rationals and over [`Expr`].

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::expr::{Expr, ExprError, Indet, Q};

/// Reduced row echelon form `R = T·M`.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Vec<Q>>,
    pub pivots: Vec<usize>,
    pub transform: Vec<Vec<Q>>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gauss–Jordan elimination with first-nonzero pivoting, scanning columns
/// left to right.
pub fn rref(m: &[Vec<Q>], ncols: usize) -> Rref {
    let nrows = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut t: Vec<Vec<Q>> = (0..nrows)
        .map(|i| (0..nrows).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        t.swap(r, p);
        let inv = a[r][c].recip();
        if !inv.is_one() {
            for x in a[r].iter_mut() {
                *x *= &inv;
            }
            for x in t[r].iter_mut() {
                *x *= &inv;
            }
        }
        for i in 0..nrows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            let (pr, pt) = (a[r].clone(), t[r].clone());
            for (x, y) in a[i].iter_mut().zip(&pr) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            for (x, y) in t[i].iter_mut().zip(&pt) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref {
        rows: a,
        pivots,
        transform: t,
    }
}

pub fn rank_q(m: &[Vec<Q>]) -> usize {
    let ncols = m.first().map_or(0, |r| r.len());
    rank_only(m.to_vec(), ncols)
}

fn rank_only(mut a: Vec<Vec<Q>>, ncols: usize) -> usize {
    let nrows = a.len();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for i in r + 1..nrows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            let pr = a[r].clone();
            for (x, y) in a[i].iter_mut().zip(&pr).skip(c) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is singular (determinant is identically zero)")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Row-major matrix of expressions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Expr;
    fn index(&self, (i, j): (usize, usize)) -> &Expr {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Expr {
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Expr::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Matrix, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(MatrixError::Shape("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Expr>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<E>(&self, f: impl Fn(&Expr) -> Result<Expr, E>) -> Result<Matrix, E> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>, E>>()?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn transpose(&self) -> Matrix {
        let mut m = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Expr::zero();
                for k in 0..self.cols {
                    let a = &self[(i, k)];
                    let b = &other[(k, j)];
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc + a * b;
                }
                m[(i, j)] = acc;
            }
        }
        Ok(m)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = &self[(i, j)];
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    pub fn substitute(&self, bindings: &HashMap<Indet, Expr>) -> Result<Matrix, ExprError> {
        self.try_map(|e| e.substitute(bindings))
    }

    pub fn eval(&self, point: &dyn Fn(Indet) -> Option<Q>) -> Result<Vec<Vec<Q>>, ExprError> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|e| e.eval_with(point)).collect())
            .collect()
    }

    /// Gauss–Jordan inverse over the function field. Pivots prefer constants,
    /// then the shortest printed entry, to keep intermediate swell small.
    pub fn inverse(&self) -> Result<Matrix, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let p = pick_pivot(&a, c, c..n).ok_or(MatrixError::Singular)?;
            if p != c {
                a.swap_rows(p, c);
                inv.swap_rows(p, c);
            }
            let pv = a[(c, c)].recip()?;
            if !pv.is_one() {
                for j in 0..n {
                    a[(c, j)] = &a[(c, j)] * &pv;
                    inv[(c, j)] = &inv[(c, j)] * &pv;
                }
            }
            for i in 0..n {
                if i == c || a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone();
                for j in 0..n {
                    if !a[(c, j)].is_zero() {
                        a[(i, j)] = &a[(i, j)] - &f * &a[(c, j)];
                    }
                    if !inv[(c, j)].is_zero() {
                        inv[(i, j)] = &inv[(i, j)] - &f * &inv[(c, j)];
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by fraction-aware elimination.
    pub fn det(&self) -> Result<Expr, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Expr::one();
        for c in 0..n {
            let Some(p) = pick_pivot(&a, c, c..n) else {
                return Ok(Expr::zero());
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let pv = a[(c, c)].clone();
            det = det * &pv;
            let pinv = pv.recip()?;
            for i in c + 1..n {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let f = &a[(i, c)] * &pinv;
                for j in c..n {
                    if !a[(c, j)].is_zero() {
                        a[(i, j)] = &a[(i, j)] - &f * &a[(c, j)];
                    }
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

fn pick_pivot(a: &Matrix, col: usize, range: std::ops::Range<usize>) -> Option<usize> {
    let mut best: Option<(usize, (bool, usize))> = None;
    for i in range {
        let e = &a[(i, col)];
        if e.is_zero() {
            continue;
        }
        let score = (!e.is_constant(), e.num().len() + e.den().len());
        if best.as_ref().is_none_or(|(_, s)| score < *s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Gauss–Jordan form of an expression matrix: pivot rows are normalized and
/// cleared above and below, zero rows (in the pivot columns) come last.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rows: Vec<Vec<Expr>>,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Rows whose pivot-column part vanished.
    pub fn null_rows(&self) -> &[Vec<Expr>] {
        &self.rows[self.pivots.len()..]
    }
}

/// Eliminates over the function field on columns `0..pivot_cols`, scanning
/// left to right; later columns are carried along as right-hand sides.
/// Pivots favour constant and then short entries.
pub fn echelon(rows: Vec<Vec<Expr>>, pivot_cols: usize) -> Echelon {
    let mut a = rows;
    let nrows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == nrows {
            break;
        }
        let mut best: Option<(usize, (bool, usize))> = None;
        for (i, row) in a.iter().enumerate().skip(r) {
            let e = &row[c];
            if e.is_zero() {
                continue;
            }
            let score = (!e.is_constant(), e.num().len() + e.den().len());
            if best.as_ref().is_none_or(|(_, s)| score < *s) {
                best = Some((i, score));
            }
        }
        let Some((p, _)) = best else { continue };
        a.swap(r, p);
        let pinv = a[r][c].recip().expect("nonzero pivot");
        if !pinv.is_one() {
            for x in a[r].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &pinv;
                }
            }
        }
        let pr = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pr) {
                if !y.is_zero() {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Echelon { rows: a, pivots }
}

/// Rank of an expression matrix over the function field by exact elimination.
pub fn rank_symbolic(rows: &[Vec<Expr>]) -> usize {
    let mut a: Vec<Vec<Expr>> = rows.to_vec();
    let nrows = a.len();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let mut best: Option<(usize, (bool, usize))> = None;
        for (i, row) in a.iter().enumerate().skip(r) {
            let e = &row[c];
            if e.is_zero() {
                continue;
            }
            let score = (!e.is_constant(), e.num().len() + e.den().len());
            if best.as_ref().is_none_or(|(_, s)| score < *s) {
                best = Some((i, score));
            }
        }
        let Some((p, _)) = best else { continue };
        a.swap(r, p);
        let pinv = a[r][c].recip().expect("nonzero pivot");
        for i in r + 1..nrows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &pinv;
            let pr = a[r].clone();
            for (x, y) in a[i].iter_mut().zip(&pr).skip(c) {
                if !y.is_zero() {
                    *x = &*x - &f * y;
                }
            }
        }
        r += 1;
    }
    r
}
