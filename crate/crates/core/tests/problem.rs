use cartan_core::expr::Expr;
use cartan_core::problem::{load_problem, parse_problem, ProblemError};

const TOY: &str = "\
[metadata]
title = toy
[coordinates]
px py
[coframe]
eta1 = dpx
eta2 = px*dpy
[group]
params pa
identity 1
row pa, 0
row 0, 1
";

fn validation(text: &str) -> &'static str {
    match parse_problem(text) {
        Err(ProblemError::Validation { check, .. }) => check,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn parse_line(text: &str) -> (usize, String) {
    match parse_problem(text) {
        Err(ProblemError::Parse { line, msg }) => (line, msg),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn toy_problem_parses() {
    let f = parse_problem(TOY).unwrap();
    assert_eq!(f.title, "toy");
    assert_eq!(f.problem.n(), 2);
    assert_eq!(f.problem.group.r(), 1);
    assert_eq!(f.problem.coframe.names(), &["eta1".to_string(), "eta2".to_string()]);
    let px = f.context.symbol("px").unwrap();
    assert_eq!(f.problem.coframe.transition()[(1, 1)], px.expr());
}

#[test]
fn matrix_rows_and_named_forms_agree() {
    let rows = TOY.replace("eta1 = dpx\neta2 = px*dpy", "row 1, 0\nrow 0, px");
    let a = parse_problem(TOY).unwrap();
    let b = parse_problem(&rows).unwrap();
    assert_eq!(a.problem.coframe.transition(), b.problem.coframe.transition());
}

#[test]
fn definitions_and_functions() {
    let text = "\
[coordinates]
qx qu qp
[functions]
QL(x, u, p)
[definitions]
let QE = QL_u(qx, qu, qp) - qp*QL_pp(qx, qu, qp)
[coframe]
e1 = dqx
e2 = dqu - qp*dqx
e3 = -QE*dqx + QL_pp(qx, qu, qp)*dqp
[group]
size = 3
";
    let f = parse_problem(text).unwrap();
    assert_eq!(f.problem.group.r(), 0);
    let e = f.context.parse("QE").unwrap();
    assert_eq!(e, f.context.parse("QL_u(qx, qu, qp) - qp*QL_pp(qx, qu, qp)").unwrap());
    assert_eq!(f.problem.coframe.transition()[(2, 0)], -e);
}

#[test]
fn policy_keys() {
    let text = format!("{TOY}[policy]\nmax_loops = 3\nseed = 17\ntarget 0123456789 = -1\n");
    let f = parse_problem(&text).unwrap();
    assert_eq!(f.policy.max_loops, 3);
    assert_eq!(f.policy.seed, 17);
    assert_eq!(f.policy.targets.len(), 1);
    let (line, _) = parse_line(&format!("{TOY}[policy]\ntarget xyz = 1\n"));
    assert_eq!(line, 14);
    let (line, msg) = parse_line(&format!("{TOY}[policy]\nseed = -4\n"));
    assert_eq!(line, 14);
    assert!(msg.contains("nonnegative"), "{msg}");
}

#[test]
fn parse_errors_carry_line_and_column() {
    let (line, msg) = parse_line(&TOY.replace("px*dpy", "px*)dpy"));
    assert_eq!(line, 7);
    assert!(msg.starts_with("column "), "{msg}");
    let (line, msg) = parse_line(&TOY.replace("px*dpy", "zz*dpy"));
    assert_eq!(line, 7);
    assert!(msg.contains("zz"), "{msg}");
    let (line, _) = parse_line(&format!("stray\n{TOY}"));
    assert_eq!(line, 1);
    let (line, _) = parse_line(&TOY.replace("[group]", "[groups]"));
    assert_eq!(line, 8);
    let (line, msg) = parse_line(&TOY.replace("px*dpy", "dpx*dpy"));
    assert_eq!(line, 7);
    assert!(msg.contains("linear"), "{msg}");
    let (line, msg) = parse_line(&TOY.replace("px*dpy", "px*dpy + 1"));
    assert_eq!(line, 7);
    assert!(msg.contains("without a differential"), "{msg}");
    let (line, _) = parse_line(&TOY.replace("row 0, 1", "row 0, 1, 2"));
    assert_eq!(line, 12);
}

#[test]
fn missing_sections() {
    let no_group = TOY.split("[group]").next().unwrap();
    assert!(matches!(parse_problem(no_group), Err(ProblemError::MissingSection("group"))));
    let no_coords = TOY.replace("[coordinates]\npx py\n", "");
    assert!(matches!(parse_problem(&no_coords), Err(ProblemError::MissingSection("coordinates"))));
}

#[test]
fn each_validation_check() {
    assert_eq!(validation(&TOY.replace("eta2 = px*dpy\n", "")), "coframe");
    assert_eq!(validation(&TOY.replace("px*dpy", "px*dpx")), "determinant");
    assert_eq!(validation(&TOY.replace("identity 1", "identity 2")), "identity");
    assert_eq!(validation(&TOY.replace("params pa", "params pa\nsize = 3")), "dimension");
    assert_eq!(validation(&TOY.replace("row 0, 1", "row 0, pa^2 + pa - 1")), "closure");
    assert_eq!(validation(&TOY.replace("row pa, 0\nrow 0, 1\n", "")), "group");
    assert_eq!(validation(&TOY.replace("row pa, 0\nrow 0, 1", "row pa, pa\nrow 1, 1")), "determinant");
}

#[test]
fn membership_equations() {
    let text = TOY.replace("row 0, 1\n", "row 0, 1\nmembership g2_1 = 0\nmembership g2_2 = 1\n");
    let f = parse_problem(&text).unwrap();
    assert_eq!(f.problem.group.membership().len(), 2);
    // An equation the family violates fails closure.
    let text = TOY.replace("row 0, 1\n", "row 0, 1\nmembership g1_1 = 1\n");
    assert_eq!(validation(&text), "closure");
    let (line, msg) = parse_line(&TOY.replace("row 0, 1\n", "row 0, 1\nmembership pa = 1\n"));
    assert_eq!(line, 13);
    assert!(msg.contains("g<i>_<j>"), "{msg}");
}

#[test]
fn bundled_problems_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../problems");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cartan") {
            let f = load_problem(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!f.title.is_empty());
            n += 1;
        }
    }
    assert!(n >= 3);
    let err = load_problem(std::path::Path::new("/nonexistent/x.cartan")).unwrap_err();
    assert!(matches!(err, ProblemError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/x.cartan"));
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = TOY.replace("[coordinates]", "# a comment\n\n[coordinates] # trailing");
    let f = parse_problem(&text).unwrap();
    assert_eq!(f.problem.n(), 2);
    assert!(!f.problem.coframe.determinant().is_zero());
    let _: &Expr = f.problem.coframe.determinant();
}
