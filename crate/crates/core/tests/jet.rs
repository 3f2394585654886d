use cartan_core::expr::{Context, Expr};
use cartan_core::jet::{
    complete_to_involution, complete_to_order, intrinsic_conditions, jet_characters, project_integrability,
    prolong_system, JetError, JetSpace, JetSystem, StepAction,
};

/// Space plus a parsing context knowing every jet up to `order`.
fn setup(ind: &[&str], dep: &[&str], order: usize) -> (JetSpace, Context) {
    let sp = JetSpace::new(ind, dep).unwrap();
    let mut ctx = Context::new();
    for &s in sp.independents().iter().chain(sp.dependents()) {
        ctx.add_symbol(s);
    }
    for k in 1..=order {
        for s in sp.jets_of_order(k).unwrap() {
            ctx.add_symbol(s);
        }
    }
    (sp, ctx)
}

fn system(sp: &JetSpace, ctx: &Context, eqs: &[(&str, &str)]) -> JetSystem {
    let eqs = eqs
        .iter()
        .map(|(l, r)| (ctx.symbol(l).unwrap(), ctx.parse(r).unwrap()))
        .collect();
    JetSystem::new(sp, eqs).unwrap()
}

fn proportional(a: &Expr, b: &Expr) -> bool {
    !b.is_zero() && (a / b).is_constant()
}

#[test]
fn total_derivative_examples() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let d = sp.total_derivative(&ctx.parse("u").unwrap(), 0).unwrap();
    assert_eq!(d, ctx.parse("u_x").unwrap());
    let d = sp.total_derivative(&ctx.parse("x*u_y").unwrap(), 0).unwrap();
    assert_eq!(d, ctx.parse("u_y + x*u_xy").unwrap());
}

#[test]
fn total_derivative_through_opaque_function() {
    let (sp, mut ctx) = setup(&["x"], &["u", "p"], 1);
    ctx.declare_function("L", &["x", "u", "p"]).unwrap();
    let e = ctx.parse("L_u(x,u,p) - L_px(x,u,p) - p*L_pu(x,u,p)").unwrap();
    let got = sp.total_derivative(&e, 0).unwrap();
    // Hand expansion: ∂_x + u_x ∂_u + p_x ∂_p, each through the chain rule.
    let want = ctx
        .parse(
            "L_xu(x,u,p) - L_xxp(x,u,p) - p*L_xup(x,u,p) \
             + u_x*(L_uu(x,u,p) - L_xup(x,u,p) - p*L_uup(x,u,p)) \
             + p_x*(L_up(x,u,p) - L_xpp(x,u,p) - L_up(x,u,p) - p*L_upp(x,u,p))",
        )
        .unwrap();
    assert_eq!(got, want);
}

#[test]
fn mixed_total_derivatives_commute() {
    let (sp, ctx) = setup(&["x", "y"], &["u", "v"], 1);
    let e = ctx.parse("x*u^2*v_y + y/(1 + u_x) - v").unwrap();
    let a = sp.total_derivative(&sp.total_derivative(&e, 0).unwrap(), 1).unwrap();
    let b = sp.total_derivative(&sp.total_derivative(&e, 1).unwrap(), 0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn prolongation_of_single_equation() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u")]);
    let p = prolong_system(&r).unwrap();
    assert_eq!(p.solved.len(), 2);
    let solved: Vec<(String, Expr)> = p.solved.iter().map(|(s, e)| (s.name(), e.clone())).collect();
    // u_xx = u_x and u_xy = u_y, with u_x reduced to u.
    assert!(solved.contains(&("u_xx".into(), ctx.parse("u").unwrap())));
    assert!(solved.contains(&("u_xy".into(), ctx.parse("u_y").unwrap())));
    assert!(p.residuals.is_empty());
    assert_eq!(p.parametric_count(), 1);
}

#[test]
fn prolongation_of_empty_system() {
    let (sp, _) = setup(&["x", "y"], &["u"], 2);
    let p = prolong_system(&JetSystem::empty(&sp)).unwrap();
    assert!(p.derived.is_empty() && p.solved.is_empty() && p.residuals.is_empty());
}

#[test]
fn clash_pair_gives_condition_u() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u"), ("u_y", "x*u")]);
    let p = prolong_system(&r).unwrap();
    assert_eq!(p.derived.len(), 4);
    let proj = project_integrability(&p).unwrap();
    assert_eq!(proj.conditions.len(), 1);
    assert!(proportional(&proj.conditions[0], &ctx.parse("u").unwrap()));
    let u = ctx.symbol("u").unwrap();
    assert_eq!(proj.reduced.rhs_of(u), Some(&Expr::zero()));
}

#[test]
fn no_conditions_for_constant_solutions() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "0"), ("u_y", "0")]);
    let proj = project_integrability(&prolong_system(&r).unwrap()).unwrap();
    assert!(proj.conditions.is_empty());
}

#[test]
fn condition_on_independents_aborts() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u"), ("u_y", "x")]);
    let err = project_integrability(&prolong_system(&r).unwrap()).unwrap_err();
    assert!(matches!(err, JetError::NonGenuine(_)), "{err}");
}

#[test]
fn completion_adds_first_derivatives() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 1);
    let r = system(&sp, &ctx, &[("u", "x")]);
    let c = complete_to_order(&r).unwrap();
    assert_eq!(c.rhs_of(ctx.symbol("u_x").unwrap()), Some(&Expr::one()));
    assert_eq!(c.rhs_of(ctx.symbol("u_y").unwrap()), Some(&Expr::zero()));
    let again = complete_to_order(&c).unwrap();
    assert_eq!(again.equations(), c.equations());
}

#[test]
fn degenerate_example_completes_at_order_two() {
    let (sp, ctx) = setup(&["x", "y", "u"], &["X", "Y", "U"], 2);
    let mut eqs = vec![
        ("X", "x"),
        ("Y", "y"),
        ("U", "u + x*U_x + y*U_y"),
        ("X_x", "1"),
        ("Y_y", "1"),
        ("U_u", "1"),
        ("X_y", "0"),
        ("X_u", "0"),
        ("Y_x", "0"),
        ("Y_u", "0"),
    ];
    let second: Vec<String> = sp.jets_of_order(2).unwrap().iter().map(|s| s.name()).collect();
    for s in &second {
        eqs.push((s.as_str(), "0"));
    }
    let r = system(&sp, &ctx, &eqs);
    assert_eq!(r.order(), 2);
    let c = complete_to_order(&r).unwrap();
    assert_eq!(c.order(), 2);
    for s in sp.jets_of_order(2).unwrap() {
        assert_eq!(c.rhs_of(s), Some(&Expr::zero()), "{s}");
    }
    let done = complete_to_involution(&c, 3, 0).unwrap();
    assert_eq!(done.loops, 0);
    let chars = done.log.last().unwrap().characters.clone().unwrap();
    assert_eq!(chars.s, vec![0, 0, 0]);
    assert_eq!(chars.r2, 0);
}

#[test]
fn characters_of_single_equation() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 1);
    let r = system(&sp, &ctx, &[("u_x", "0")]);
    let c = jet_characters(&r, 0).unwrap();
    assert_eq!(c.s, vec![1, 0]);
    assert_eq!(c.r2, 1);
    assert!(c.involutive);
}

#[test]
fn characters_of_free_jet_space() {
    let (sp, _) = setup(&["x", "y"], &["u"], 1);
    let c = jet_characters(&JetSystem::empty(&sp), 0).unwrap();
    assert_eq!(c.s, vec![1, 1]);
    assert_eq!(c.r2, 3);
    assert!(c.involutive);
}

#[test]
fn characters_of_determined_system() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 1);
    let r = system(&sp, &ctx, &[("u_x", "0"), ("u_y", "0")]);
    let c = jet_characters(&r, 0).unwrap();
    assert_eq!((c.s.clone(), c.r2, c.involutive), (vec![0, 0], 0, true));
}

#[test]
fn involution_after_one_condition() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u"), ("u_y", "x*u")]);
    let done = complete_to_involution(&r, 4, 0).unwrap();
    assert_eq!(done.log.len(), 2);
    assert_eq!(done.log[0].action, StepAction::Adjoined);
    assert_eq!(done.log[0].conditions, vec!["u".to_string()]);
    assert_eq!(done.log[1].action, StepAction::Involutive);
}

#[test]
fn involutive_immediately() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 1);
    let r = system(&sp, &ctx, &[("u_x", "0")]);
    let done = complete_to_involution(&r, 4, 0).unwrap();
    assert_eq!(done.loops, 0);
    assert_eq!(done.log.len(), 1);
}

#[test]
fn cap_is_enforced() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u"), ("u_y", "x*u")]);
    assert!(matches!(complete_to_involution(&r, 0, 0), Err(JetError::CapExceeded(0))));
}

#[test]
fn intrinsic_route_matches_clash_pair() {
    let (sp, ctx) = setup(&["x", "y"], &["u"], 2);
    let r = system(&sp, &ctx, &[("u_x", "u"), ("u_y", "x*u")]);
    let ir = intrinsic_conditions(&r).unwrap();
    assert_eq!(ir.conditions.len(), 1);
    assert!(proportional(&ir.conditions[0], &ctx.parse("u").unwrap()));
}
