//! Generators and property bodies shared by the engine and acceptance suites.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use cartan_core::engine::{
    build_absorption, cartan_characters, characters_from_table, classify_torsion, compute_structure_data,
    greedy_characters, prolong, prolonged_group_law, reduce_group, solve_absorption, GStructureProblem, Mode,
};
use cartan_core::expr::{int, rat, Context, Expr, OpaqueFunc, Symbol, Q};
use cartan_core::forms::{Chart, Coframe, DiffForm};
use cartan_core::group::{invert_q, MCBasis, ParamGroup};
use cartan_core::linalg::Matrix;
use cartan_core::problem::{parse_problem, ProblemFile};
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn bundled(name: &str) -> ProblemFile {
    let path = format!("{}/../../problems/{name}.cartan", env!("CARGO_MANIFEST_DIR"));
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn coords() -> [Symbol; 3] {
    ["ex", "ey", "ez"].map(|n| Symbol::coordinate(n).unwrap())
}

pub fn affine(c: &[i64]) -> Expr {
    let v = coords();
    Expr::int(c[0]) + v.iter().zip(&c[1..]).map(|(s, &k)| s.expr() * Expr::int(k)).sum::<Expr>()
}

pub fn affine_coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(prop_oneof![1 => Just(0i64), 2 => -3i64..4], 4)
}

/// Upper-triangular coframe with diagonal `1 + p²`, hence never singular.
pub fn coframe_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(affine_coeffs(), 6)
}

pub fn build_coframe(c: &[Vec<i64>]) -> Arc<Coframe> {
    let chart = Chart::new(coords().to_vec()).unwrap();
    let mut rows = vec![vec![Expr::zero(); 3]; 3];
    let mut it = c.iter();
    for i in 0..3 {
        for j in i..3 {
            let p = affine(it.next().unwrap());
            rows[i][j] = if i == j { Expr::one() + &p * &p } else { p };
        }
    }
    Coframe::with_matrix(&chart, Matrix::from_rows(rows).unwrap()).unwrap()
}

pub fn parse_group(params: &[&str], rows: &[[&str; 3]], identity: &[i64]) -> (Vec<Symbol>, Matrix, Vec<Q>) {
    let syms: Vec<Symbol> = params.iter().map(|p| Symbol::param(p).unwrap()).collect();
    let mut ctx = Context::new();
    for &s in &syms {
        ctx.add_symbol(s);
    }
    let m = Matrix::from_rows(
        rows.iter()
            .map(|r| r.iter().map(|e| ctx.parse(e).unwrap()).collect())
            .collect(),
    )
    .unwrap();
    (syms, m, identity.iter().map(|&v| int(v)).collect())
}

/// Three-dimensional matrix groups.
pub fn group_family(k: usize) -> (Vec<Symbol>, Matrix, Vec<Q>) {
    match k {
        0 => parse_group(
            &["ea1", "ea2", "ea3", "ea4", "ea5"],
            &[["ea1", "ea2", "ea3"], ["0", "ea4", "0"], ["0", "ea5", "1/ea4"]],
            &[1, 0, 0, 1, 0],
        ),
        1 => parse_group(
            &["eb1", "eb2", "eb3"],
            &[["1", "eb1", "eb2"], ["0", "1", "eb3"], ["0", "0", "1"]],
            &[0, 0, 0],
        ),
        2 => parse_group(&["ec1"], &[["ec1", "0", "0"], ["0", "ec1", "0"], ["0", "0", "ec1"]], &[1]),
        _ => parse_group(
            &["ed1", "ed2"],
            &[["ed1", "0", "ed2"], ["0", "ed1^2", "0"], ["0", "0", "1"]],
            &[1, 0],
        ),
    }
}

pub fn int_matrix(v: &[i64], n: usize) -> Vec<Vec<Q>> {
    (0..n).map(|i| (0..n).map(|j| int(v[i * n + j])).collect()).collect()
}

pub fn to_matrix(q: &[Vec<Q>]) -> Matrix {
    Matrix::from_rows(q.iter().map(|r| r.iter().map(|x| Expr::constant(x.clone())).collect()).collect()).unwrap()
}

/// The family conjugated by a constant matrix: `P g P⁻¹` is again a group.
pub fn conjugated_group(k: usize, p: &[Vec<Q>]) -> ParamGroup {
    let (syms, m, id) = group_family(k);
    let pm = to_matrix(p);
    let pinv = to_matrix(&invert_q(p).unwrap());
    let g = pm.mul(&m).unwrap().mul(&pinv).unwrap();
    ParamGroup::new(syms, g, id, vec![]).unwrap()
}

pub fn invertible(n: usize) -> impl Strategy<Value = Vec<Vec<Q>>> {
    prop::collection::vec(-2i64..3, n * n)
        .prop_map(move |v| int_matrix(&v, n))
        .prop_filter("invertible", |m| invert_q(m).is_some())
}

pub fn small_q() -> impl Strategy<Value = Q> {
    (-9i64..10, 1i64..6).prop_map(|(n, d)| rat(n, d))
}

pub struct Table {
    pub mc: MCBasis,
    pub r2: usize,
    pub s: Vec<usize>,
}

pub fn table_of(p: &GStructureProblem) -> Table {
    let data = compute_structure_data(p).unwrap();
    let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
    let s = cartan_characters(&data.mc, &sol, 0).s;
    Table {
        mc: data.mc,
        r2: sol.r2,
        s,
    }
}

/// Structure tables on which characters are compared: the Lagrangian loop 0
/// and its reduction, flat GL(2), and a non-involutive flat structure.
pub fn tables() -> &'static Vec<Table> {
    static T: OnceLock<Vec<Table>> = OnceLock::new();
    T.get_or_init(|| {
        let lag = bundled("lagrangian");
        let data = compute_structure_data(&lag.problem).unwrap();
        let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
        let cls = classify_torsion(&lag.problem.group, &sol, 1);
        let (reduced, _) = reduce_group(&lag.problem, &data.b, &sol, &cls, &|_| None, 1).unwrap();
        vec![
            table_of(&lag.problem),
            table_of(&reduced),
            table_of(&bundled("flat-gl2").problem),
            table_of(&flat_translations()),
        ]
    })
}

/// Flat 3-space with `[[a, 0, b], [0, a, c], [0, 0, 1]]`: fails Cartan's test.
pub fn flat_translations() -> GStructureProblem {
    let chart = Chart::new(coords().to_vec()).unwrap();
    let (syms, m, id) = parse_group(
        &["ef1", "ef2", "ef3"],
        &[["ef1", "0", "ef2"], ["0", "ef1", "ef3"], ["0", "0", "1"]],
        &[1, 0, 0],
    );
    GStructureProblem::new(Coframe::coordinate(&chart), ParamGroup::new(syms, m, id, vec![]).unwrap()).unwrap()
}

pub fn prolonged() -> &'static GStructureProblem {
    static P: OnceLock<GStructureProblem> = OnceLock::new();
    P.get_or_init(|| {
        let p = flat_translations();
        let data = compute_structure_data(&p).unwrap();
        let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
        let chars = cartan_characters(&data.mc, &sol, 0);
        assert!(!chars.involutive);
        prolong(&p, &data.mc, &sol, &chars).unwrap()
    })
}

/// In the frame `η' = M·η` the table is `F' = M·F(M⁻¹·)`.
pub fn horizontal_block(mc: &MCBasis, m: &[Vec<Q>], minv: &[Vec<Q>], v: &[Q]) -> Vec<Vec<Q>> {
    let n = mc.n();
    let r = mc.f_entry(0, 0).len();
    let w: Vec<Q> = (0..n).map(|l| (0..n).map(|j| &minv[l][j] * &v[j]).sum()).collect();
    let old: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            (0..r)
                .map(|k| (0..n).filter(|&l| !w[l].is_zero()).map(|l| &w[l] * mc.f(i, l, k)).sum())
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| (0..r).map(|k| (0..n).map(|j| &m[i][j] * &old[j][k]).sum()).collect())
        .collect()
}

pub type Rebase = (usize, Vec<Vec<Q>>, Vec<Vec<Q>>, u64);

pub fn table_and_bases() -> impl Strategy<Value = Rebase> {
    (0usize..4).prop_flat_map(|t| {
        let tb = &tables()[t];
        let r = tb.mc.f_entry(0, 0).len();
        (Just(t), invertible(r), invertible(tb.mc.n()), 0u64..1000)
    })
}

/// `p1·p2 / (1 + p3²)` in the coframe coordinates.
pub fn function_strategy() -> impl Strategy<Value = [Vec<i64>; 3]> {
    (affine_coeffs(), affine_coeffs(), affine_coeffs()).prop_map(|(a, b, c)| [a, b, c])
}

pub fn build_function(c: &[Vec<i64>; 3]) -> Expr {
    let d = affine(&c[2]);
    affine(&c[0]) * affine(&c[1]) / (Expr::one() + &d * &d)
}

pub fn check_d_squared(f: &[Vec<i64>; 3], frame: &[Vec<i64>]) -> Result<(), TestCaseError> {
    let th = build_coframe(frame);
    let df = DiffForm::function(&th, build_function(f)).d().unwrap();
    prop_assert!(df.d().unwrap().is_zero());
    Ok(())
}

/// Mixed partials of `f · G(p, q)` with an opaque `G` of two slots.
pub fn check_clairaut(f: &[Vec<i64>; 3]) -> Result<(), TestCaseError> {
    let g = OpaqueFunc::declare("G", &["s", "t"]).unwrap();
    let e = build_function(f) * g.apply(vec![affine(&f[0]), affine(&f[2])]).unwrap();
    let v = coords();
    for i in 0..3 {
        for j in i + 1..3 {
            prop_assert_eq!(
                e.differentiate(v[i]).differentiate(v[j]),
                e.differentiate(v[j]).differentiate(v[i])
            );
        }
    }
    Ok(())
}

pub fn check_torsion_at_identity(frame: &[Vec<i64>], k: usize, p: &[Vec<Q>]) -> Result<(), TestCaseError> {
    let g = conjugated_group(k, p);
    let bindings = g.identity_bindings();
    let prob = GStructureProblem::new(build_coframe(frame), g).unwrap();
    let data = compute_structure_data(&prob).unwrap();
    for i in 0..3 {
        for (c, b) in data.c[i].iter().zip(data.b.row(i)) {
            prop_assert_eq!(&c.substitute(&bindings).unwrap(), b);
        }
    }
    Ok(())
}

pub fn check_modes(frame: &[Vec<i64>], k: usize, p: &[Vec<Q>]) -> Result<(), TestCaseError> {
    let prob = GStructureProblem::new(build_coframe(frame), conjugated_group(k, p)).unwrap();
    let data = compute_structure_data(&prob).unwrap();
    let norm = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
    let exact = solve_absorption(&build_absorption(&data, &Mode::Exact(HashMap::new())).unwrap());
    prop_assert_eq!(norm.r2, exact.r2);
    prop_assert_eq!(norm.torsion.len(), exact.torsion.len());
    for (a, b) in norm.torsion.iter().zip(&exact.torsion) {
        prop_assert_eq!(&a.lambda, &b.lambda);
    }
    Ok(())
}

pub fn check_alpha_rebase((t, k, _, seed): &Rebase) -> Result<(), TestCaseError> {
    let tb = &tables()[*t];
    let moved = tb.mc.rebased(k).unwrap();
    let c = characters_from_table(&moved, tb.r2, *seed);
    prop_assert_eq!(&c.s, &tb.s);
    Ok(())
}

pub fn check_horizontal_rebase((t, _, m, seed): &Rebase) -> Result<(), TestCaseError> {
    let tb = &tables()[*t];
    let minv = invert_q(m).unwrap();
    let block = |v: &[Q]| horizontal_block(&tb.mc, m, &minv, v);
    let c = greedy_characters(tb.mc.n(), &block, tb.r2, *seed);
    prop_assert_eq!(&c.s, &tb.s);
    Ok(())
}

pub fn check_abelian(v: &[Q], y: &[Q]) -> Result<(), TestCaseError> {
    let g = &prolonged().group;
    prop_assert_eq!(g.r(), 3);
    prop_assert!(prolonged_group_law(g, v, y).unwrap());
    prop_assert!(prolonged_group_law(g, y, v).unwrap());
    Ok(())
}
