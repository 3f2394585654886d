//! Parametrized matrix groups and their right Maurer–Cartan forms.

use std::collections::HashMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{q_to_f64, Expr, ExprError, Indet, Q, Symbol};
use crate::linalg::{rank_q, Matrix, MatrixError};
use crate::random::Sampler;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("group matrix must be {n}x{n}")]
    Shape { n: usize },
    #[error("{r} parameters exceed the {max} entries of the matrix")]
    TooManyParams { r: usize, max: usize },
    #[error("identity values give `{0}` instead of the identity matrix")]
    NotIdentity(String),
    #[error("group matrix is singular")]
    Singular,
    #[error("parametrization is degenerate: only {found} of {r} Maurer-Cartan entries are independent")]
    Degenerate { found: usize, r: usize },
    #[error("Maurer-Cartan coefficient of entry ({i},{j}) is not constant: {value}")]
    NonConstantStructure { i: usize, j: usize, value: String },
    #[error("cannot derive membership equations: {0}")]
    NoMembership(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<MatrixError> for GroupError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Singular => GroupError::Singular,
            MatrixError::Shape(_) => GroupError::Shape { n: 0 },
            MatrixError::Expr(e) => GroupError::Expr(e),
        }
    }
}

/// Symbol standing for the `(i, j)` entry (0-based) of a general matrix in
/// membership equations; printed 1-based as `g1_2`.
pub fn slot_symbol(i: usize, j: usize) -> Symbol {
    Symbol::aux(&format!("g{}_{}", i + 1, j + 1)).expect("slot names are valid")
}

#[derive(Debug, Clone)]
pub struct ParamGroup {
    n: usize,
    params: Vec<Symbol>,
    entries: Matrix,
    inverse: Matrix,
    identity: Vec<Q>,
    membership: Vec<Expr>,
}

impl ParamGroup {
    pub fn new(
        params: Vec<Symbol>,
        entries: Matrix,
        identity: Vec<Q>,
        membership: Vec<Expr>,
    ) -> Result<ParamGroup, GroupError> {
        let n = entries.rows();
        if entries.cols() != n || n == 0 {
            return Err(GroupError::Shape { n });
        }
        if params.len() > n * n {
            return Err(GroupError::TooManyParams {
                r: params.len(),
                max: n * n,
            });
        }
        if identity.len() != params.len() {
            return Err(GroupError::NotIdentity(format!(
                "{} identity values for {} parameters",
                identity.len(),
                params.len()
            )));
        }
        let inverse = entries.inverse()?;
        let g = ParamGroup {
            n,
            params,
            entries,
            inverse,
            identity,
            membership,
        };
        let at_id = g.entries.substitute(&g.identity_bindings())?;
        if !at_id.is_identity() {
            return Err(GroupError::NotIdentity(at_id.to_string()));
        }
        Ok(g)
    }

    /// The trivial group `{I}`.
    pub fn trivial(n: usize) -> ParamGroup {
        ParamGroup {
            n,
            params: Vec::new(),
            entries: Matrix::identity(n),
            inverse: Matrix::identity(n),
            identity: Vec::new(),
            membership: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[Symbol] {
        &self.params
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn identity_values(&self) -> &[Q] {
        &self.identity
    }

    pub fn membership(&self) -> &[Expr] {
        &self.membership
    }

    pub fn with_membership(mut self, eqs: Vec<Expr>) -> ParamGroup {
        self.membership = eqs;
        self
    }

    pub fn identity_bindings(&self) -> HashMap<Indet, Expr> {
        self.params
            .iter()
            .zip(&self.identity)
            .map(|(p, v)| (p.indet(), Expr::constant(v.clone())))
            .collect()
    }

    /// Entries with parameters bound to `values`.
    pub fn element(&self, values: &[Q]) -> Result<Vec<Vec<Q>>, GroupError> {
        let map: HashMap<Indet, Q> = self
            .params
            .iter()
            .zip(values)
            .map(|(p, v)| (p.indet(), v.clone()))
            .collect();
        Ok(self.entries.eval(&|i| map.get(&i).cloned())?)
    }

    /// `dg·g⁻¹` as one coefficient vector (over `da_κ`) per matrix entry.
    pub fn mc_coefficients(&self) -> Result<Vec<Vec<Vec<Expr>>>, GroupError> {
        let n = self.n;
        let mut out = vec![vec![vec![Expr::zero(); self.r()]; n]; n];
        for (k, &a) in self.params.iter().enumerate() {
            let dg = self.entries.map(|e| e.differentiate(a));
            let prod = dg.mul(&self.inverse)?;
            for (i, row) in out.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    cell[k] = prod[(i, j)].clone();
                }
            }
        }
        Ok(out)
    }

    /// Right-invariant Maurer–Cartan basis and constant structure table.
    pub fn right_mc(&self) -> Result<MCBasis, GroupError> {
        let n = self.n;
        let r = self.r();
        let coeffs = self.mc_coefficients()?;
        let mut sampler = Sampler::new(0x6d63);
        let all: Vec<&Expr> = coeffs.iter().flatten().flatten().collect();
        let pt = sampler.regular_point(all.iter().copied());
        let eval = |e: &Expr| e.eval(&pt).expect("regular point");
        // Row-major scan keeping entries that raise the rank.
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        'scan: for i in 0..n {
            for j in 0..n {
                if chosen.len() == r {
                    break 'scan;
                }
                let v: Vec<Q> = coeffs[i][j].iter().map(eval).collect();
                if v.iter().all(Zero::is_zero) {
                    continue;
                }
                rows.push(v);
                if rank_q(&rows) == rows.len() {
                    chosen.push((i, j));
                } else {
                    rows.pop();
                }
            }
        }
        if chosen.len() < r {
            return Err(GroupError::Degenerate {
                found: chosen.len(),
                r,
            });
        }
        let sel = Matrix::from_rows(
            chosen
                .iter()
                .map(|&(i, j)| coeffs[i][j].clone())
                .collect(),
        )?;
        let sel_inv = if r == 0 { Matrix::zeros(0, 0) } else { sel.inverse()? };
        let mut f = vec![vec![vec![Q::zero(); r]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..r {
                    let mut acc = Expr::zero();
                    for (l, c) in coeffs[i][j].iter().enumerate() {
                        if !c.is_zero() {
                            acc = acc + c * &sel_inv[(l, k)];
                        }
                    }
                    f[i][j][k] = acc.as_constant().ok_or_else(|| GroupError::NonConstantStructure {
                        i,
                        j,
                        value: acc.to_string(),
                    })?;
                }
            }
        }
        Ok(MCBasis {
            n,
            positions: chosen,
            alphas: sel.to_rows(),
            f,
        })
    }

    /// Checks that products of random near-identity elements stay in the group.
    pub fn check_closure(&self, samples: usize, seed: u64) -> ClosureReport {
        let mut sampler = Sampler::new(seed);
        let mut failures = Vec::new();
        for s in 0..samples {
            let a = self.near_identity(&mut sampler);
            let b = self.near_identity(&mut sampler);
            let (Ok(ga), Ok(gb)) = (self.element(&a), self.element(&b)) else {
                failures.push(format!("sample {s}: parameters hit a singular element"));
                continue;
            };
            let prod = mat_mul_q(&ga, &gb);
            let ok = if self.membership.is_empty() {
                self.solve_parameters(&prod, &a)
            } else {
                self.satisfies_membership(&prod)
            };
            if !ok {
                failures.push(format!("sample {s}: product leaves the group"));
            }
        }
        ClosureReport {
            samples,
            passed: failures.is_empty(),
            failures,
        }
    }

    fn near_identity(&self, sampler: &mut Sampler) -> Vec<Q> {
        self.identity
            .iter()
            .map(|v| {
                let d = Q::new(sampler.small_int(-9, 9).into(), 37.into());
                v + d
            })
            .collect()
    }

    pub fn satisfies_membership(&self, m: &[Vec<Q>]) -> bool {
        let mut map: HashMap<Indet, Q> = HashMap::new();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                map.insert(slot_symbol(i, j).indet(), v.clone());
            }
        }
        self.membership
            .iter()
            .all(|e| e.eval(&map).is_ok_and(|v| v.is_zero()))
    }

    /// Gauss–Newton in floating point for parameters reproducing `target`.
    fn solve_parameters(&self, target: &[Vec<Q>], start: &[Q]) -> bool {
        let n = self.n;
        let r = self.r();
        let tgt: Vec<f64> = target.iter().flatten().map(q_to_f64).collect();
        let jac_exprs: Vec<Vec<Expr>> = self
            .entries
            .entries()
            .iter()
            .map(|e| self.params.iter().map(|&p| e.differentiate(p)).collect())
            .collect();
        let mut x: Vec<f64> = start.iter().map(q_to_f64).collect();
        for _ in 0..60 {
            let at = |i: Indet| {
                self.params
                    .iter()
                    .position(|p| p.indet() == i)
                    .map(|k| x[k])
            };
            let res: Vec<f64> = self
                .entries
                .entries()
                .iter()
                .zip(&tgt)
                .map(|(e, t)| e.eval_f64(&at).unwrap_or(f64::NAN) - t)
                .collect();
            let norm: f64 = res.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-10 {
                return true;
            }
            if !norm.is_finite() {
                return false;
            }
            let jac: Vec<Vec<f64>> = jac_exprs
                .iter()
                .map(|row| row.iter().map(|e| e.eval_f64(&at).unwrap_or(f64::NAN)).collect())
                .collect();
            // Normal equations JᵀJ dx = -Jᵀres.
            let mut a = vec![vec![0.0; r + 1]; r];
            for p in 0..r {
                for q in 0..r {
                    a[p][q] = (0..n * n).map(|k| jac[k][p] * jac[k][q]).sum();
                }
                a[p][r] = -(0..n * n).map(|k| jac[k][p] * res[k]).sum::<f64>();
            }
            let Some(dx) = solve_dense(a) else {
                return false;
            };
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        false
    }

    /// Membership equations by triangular elimination of the parameters.
    pub fn derive_membership(&self) -> Result<Vec<Expr>, GroupError> {
        let n = self.n;
        let mut solved: HashMap<Indet, Expr> = HashMap::new();
        let mut pending: Vec<(usize, usize)> = Vec::new();
        let mut order: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        // Entries with fewer parameters first; ties in row-major order.
        order.sort_by_key(|&(i, j)| {
            let e = &self.entries[(i, j)];
            (self.params.iter().filter(|&&p| e.depends_on(p)).count(), i, j)
        });
        for (i, j) in order {
            let e = self.entries[(i, j)].substitute(&solved)?;
            let slot = slot_symbol(i, j).expr();
            let mut done = false;
            for &p in &self.params {
                if solved.contains_key(&p.indet()) || !e.depends_on(p) {
                    continue;
                }
                if let Some(sol) = solve_linear(&(&slot - &e), p) {
                    solved.insert(p.indet(), sol);
                    done = true;
                    break;
                }
            }
            if !done {
                pending.push((i, j));
            }
        }
        if solved.len() < self.r() {
            return Err(GroupError::NoMembership(format!(
                "only {} of {} parameters solvable",
                solved.len(),
                self.r()
            )));
        }
        // Back-substitute until no parameter remains in the solutions.
        for _ in 0..self.r() {
            let snapshot = solved.clone();
            for v in solved.values_mut() {
                *v = v.substitute(&snapshot)?;
            }
        }
        let mut eqs = Vec::new();
        for (i, j) in pending {
            let e = self.entries[(i, j)].substitute(&solved)?;
            let eq = slot_symbol(i, j).expr() - e;
            if !eq.is_zero() {
                eqs.push(Expr::from_poly(eq.num().clone()));
            }
        }
        Ok(eqs)
    }
}

/// Solves `e = 0` for `s` when the numerator is linear in `s`.
pub fn solve_linear(e: &Expr, s: Symbol) -> Option<Expr> {
    let num = Expr::from_poly(e.num().clone());
    let c1 = num.differentiate(s);
    if c1.is_zero() || c1.depends_on(s) {
        return None;
    }
    let c0 = num.subs(&[(s, Expr::zero())]).ok()?;
    (-c0).checked_div(&c1).ok()
}

fn mat_mul_q(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..b.len()).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let r = a.len();
    for c in 0..r {
        let p = (c..r).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, p);
        for i in 0..r {
            if i != c {
                let f = a[i][c] / a[c][c];
                for k in c..=r {
                    a[i][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..r).map(|i| a[i][r] / a[i][i]).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureReport {
    pub samples: usize,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Basis `α^κ` of right-invariant forms chosen among the entries of `dg·g⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MCBasis {
    n: usize,
    positions: Vec<(usize, usize)>,
    alphas: Vec<Vec<Expr>>,
    f: Vec<Vec<Vec<Q>>>,
}

impl MCBasis {
    pub fn r(&self) -> usize {
        self.positions.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix positions of the entries chosen as `α^κ`.
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    /// `α^κ` as coefficients over `da_1..da_r`.
    pub fn alphas(&self) -> &[Vec<Expr>] {
        &self.alphas
    }

    /// `F^{ij}_κ` with `(dg·g⁻¹)_ij = Σ_κ F^{ij}_κ α^κ`.
    pub fn f(&self, i: usize, j: usize, k: usize) -> &Q {
        &self.f[i][j][k]
    }

    pub fn f_entry(&self, i: usize, j: usize) -> &[Q] {
        &self.f[i][j]
    }

    pub fn from_table(n: usize, f: Vec<Vec<Vec<Q>>>) -> MCBasis {
        let r = f.first().and_then(|row| row.first()).map_or(0, |v| v.len());
        MCBasis {
            n,
            positions: Vec::new(),
            alphas: vec![Vec::new(); r],
            f,
        }
    }

    /// Re-expresses the structure table in the basis `β = K·α`.
    pub fn rebased(&self, k: &[Vec<Q>]) -> Option<MCBasis> {
        let r = self.r().max(self.f.first().and_then(|x| x.first()).map_or(0, |v| v.len()));
        let kinv = invert_q(k)?;
        // entry = F·α = F·K⁻¹·β
        let f = self
            .f
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        (0..r)
                            .map(|b| (0..r).map(|a| &v[a] * &kinv[a][b]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Some(MCBasis {
            n: self.n,
            positions: self.positions.clone(),
            alphas: self.alphas.clone(),
            f,
        })
    }

    /// Text rendering of `dg·g⁻¹` in terms of `alpha1..alphar`.
    pub fn render_matrix(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let mut parts = Vec::new();
                        for (k, c) in self.f[i][j].iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            let a = format!("alpha{}", k + 1);
                            parts.push(if c.is_one() {
                                a
                            } else if (-c).is_one() {
                                format!("-{a}")
                            } else {
                                format!("{}*{a}", Expr::constant(c.clone()))
                            });
                        }
                        if parts.is_empty() {
                            "0".into()
                        } else {
                            parts.join(" + ").replace("+ -", "- ")
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn invert_q(k: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let r = k.len();
    let aug: Vec<Vec<Q>> = k.to_vec();
    let red = crate::linalg::rref(&aug, r);
    if red.rank() < r {
        return None;
    }
    Some(red.transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;

    #[test]
    fn scaling_group() {
        let a = Symbol::param("gp_a").unwrap();
        let g = ParamGroup::new(
            vec![a],
            Matrix::from_rows(vec![vec![a.expr()]]).unwrap(),
            vec![int(1)],
            vec![],
        )
        .unwrap();
        let mc = g.right_mc().unwrap();
        assert_eq!(mc.f(0, 0, 0), &int(1));
        assert_eq!(mc.alphas()[0][0], Expr::one() / a.expr());
        assert!(g.check_closure(5, 1).passed);
    }

    #[test]
    fn identity_check_rejects_bad_values() {
        let a = Symbol::param("gp_a").unwrap();
        let err = ParamGroup::new(
            vec![a],
            Matrix::from_rows(vec![vec![a.expr()]]).unwrap(),
            vec![int(2)],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, GroupError::NotIdentity(_)));
    }
}
