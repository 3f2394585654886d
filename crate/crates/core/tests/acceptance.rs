//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cartan_core::cli::main_with;
use cartan_core::engine::{
    build_absorption, cartan_characters, classify_torsion, compute_structure_data, reduce_group, solve_absorption,
    GStructureProblem, Mode, Reduction, TorsionClass,
};
use cartan_core::expr::{int, Context, Expr, Q};
use cartan_core::jet::{
    complete_to_involution, crosscheck_characters, encode_gstructure, jet_characters, JetSpace, JetSystem,
    StepAction,
};
use cartan_core::linalg::rank_q;
use cartan_core::problem::ProblemFile;
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(t: Instant, limit: f64) -> Result<Duration, String> {
    let d = t.elapsed();
    ensure!(d.as_secs_f64() < limit, "took {:.2} s, limit {limit} s", d.as_secs_f64());
    Ok(d)
}

/// The Lagrangian problem after its first reduction with target −1.
fn lagrangian_reduced() -> (ProblemFile, GStructureProblem, Reduction) {
    let lag = bundled("lagrangian");
    let data = compute_structure_data(&lag.problem).unwrap();
    let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
    let cls = classify_torsion(&lag.problem.group, &sol, lag.policy.seed);
    let (next, red) =
        reduce_group(&lag.problem, &data.b, &sol, &cls, &|_| Some(int(-1)), lag.policy.seed).unwrap();
    (lag, next, red)
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let lag = bundled("lagrangian");
    let ctx = &lag.context;
    let data = compute_structure_data(&lag.problem).map_err(|e| e.to_string())?;
    let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
    let cls = classify_torsion(&lag.problem.group, &sol, lag.policy.seed);
    let live: Vec<&Expr> = sol
        .torsion
        .iter()
        .zip(&cls.classes)
        .filter(|(_, c)| **c != TorsionClass::Trivial)
        .map(|(t, _)| &t.expr)
        .collect();
    ensure!(live.len() == 1, "expected one residual, found {}", live.len());
    let want = ctx.parse("-a4^2/(a1*L_pp(x, u, p))").unwrap();
    ensure!(*live[0] == want, "residual {} != {want}", live[0]);

    let (_, next, red) = lagrangian_reduced();
    ensure!(red.isotropy == ["a1 = a4^2"], "isotropy {:?}", red.isotropy);
    let rows = [
        ["1/L_pp(x, u, p)", "0", "0"],
        ["-p", "1", "0"],
        ["-E", "0", "L_pp(x, u, p)"],
    ];
    let a = next.coframe.transition();
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let want = ctx.parse(e).unwrap();
            ensure!(a[(i, j)] == want, "coframe entry ({i},{j}) is {}, expected {want}", a[(i, j)]);
        }
    }
    let d = within(t, 5.0)?;
    Ok(format!("residual {want}, isotropy a1 = a4^2, {:.2} s", d.as_secs_f64()))
}

fn criterion_2() -> Check {
    let t = Instant::now();
    let (_, next, _) = lagrangian_reduced();
    let data = compute_structure_data(&next).map_err(|e| e.to_string())?;
    let mc = &data.mc;
    ensure!(mc.r() == 4, "group dimension {}", mc.r());
    // Reference table over (α², α³, α⁴, α⁵); equal up to a constant change
    // of basis iff stacking both tables side by side keeps rank r.
    let t_entry = |i: usize, j: usize| -> Vec<Q> {
        let v: [i64; 4] = match (i, j) {
            (0, 0) => [0, 0, 2, 0],
            (0, 1) => [1, 0, 0, 0],
            (0, 2) => [0, 1, 0, 0],
            (1, 1) => [0, 0, 1, 0],
            (2, 1) => [0, 0, 0, 1],
            (2, 2) => [0, 0, -1, 0],
            _ => [0; 4],
        };
        v.iter().map(|&x| int(x)).collect()
    };
    let mut ours = Vec::new();
    let mut refs = Vec::new();
    let mut both = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let u = mc.f_entry(i, j).to_vec();
            let r = t_entry(i, j);
            ours.push(u.clone());
            refs.push(r.clone());
            both.push(u.into_iter().chain(r).collect::<Vec<Q>>());
        }
    }
    ensure!(
        rank_q(&ours) == 4 && rank_q(&refs) == 4 && rank_q(&both) == 4,
        "Maurer-Cartan table {:?} is not a rebasing of the reference",
        mc.render_matrix()
    );
    let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).unwrap());
    let chars = cartan_characters(mc, &sol, 1);
    ensure!(sol.r2 == 5, "r2 = {}", sol.r2);
    ensure!(chars.s == [3, 1, 0], "s = {:?}", chars.s);
    ensure!(chars.involutive, "Cartan's test failed");
    let d = within(t, 5.0)?;
    Ok(format!("dg g^-1 = {:?}, r2 = 5, s = (3,1,0), {:.2} s", mc.render_matrix(), d.as_secs_f64()))
}

/// `h/e` is free of the target variables and their jets.
fn proportional(h: &Expr, e: &Expr, space: &JetSpace) -> bool {
    if e.is_zero() || h.is_zero() {
        return false;
    }
    let ratio = h / e;
    ratio.symbols().iter().all(|s| !space.dependents().contains(s) && space.classify(*s).is_none())
}

fn criterion_3() -> Check {
    let t = Instant::now();
    let lag = bundled("lagrangian");
    let enc = encode_gstructure(&lag.problem).map_err(|e| e.to_string())?;
    ensure!(enc.implicit.len() == 4, "{} equations", enc.implicit.len());
    let mut ctx: Context = lag.context.clone();
    for &s in enc.space.dependents() {
        ctx.add_symbol(s);
    }
    for s in enc.space.jets_of_order(1).unwrap() {
        ctx.add_symbol(s);
    }
    // Hand derivation from g = A(X)·∇X·A(x)⁻¹ with dx = η¹, du = η² + p η¹,
    // dp = (η³ + E η¹)/L_pp; Ω_j = −E(X,U,P) X_j + L_pp(X,U,P) P_j.
    let et = "(L_u(X,U,P) - L_px(X,U,P) - P*L_pu(X,U,P))";
    let om = |j: &str| format!("(-{et}*X_{j} + L_pp(X,U,P)*P_{j})");
    let hand = [
        "L_pp(x,u,p)*(U_x - P*X_x) + p*L_pp(x,u,p)*(U_u - P*X_u) + E*(U_p - P*X_p)".to_string(),
        "U_p - P*X_p".to_string(),
        format!("L_pp(x,u,p)*({} + p*{}) + E*{}", om("x"), om("u"), om("p")),
        format!("(U_u - P*X_u)*{} - L_pp(x,u,p)", om("p")),
    ];
    let mut matched = Vec::new();
    for h in &hand {
        let h = ctx.parse(h).map_err(|e| format!("{h}: {e}"))?;
        let hits: Vec<usize> = (0..4).filter(|&k| proportional(&h, &enc.implicit[k], &enc.space)).collect();
        ensure!(hits.len() == 1, "{} encoded equations match {h}", hits.len());
        matched.push(hits[0]);
    }
    matched.sort_unstable();
    matched.dedup();
    ensure!(matched.len() == 4, "hand equations do not cover the encoding");
    // The reference writes the second equation as 0 = P X_p + U_p, which is
    // the encoded one after P ↦ −P.
    let p_sym = ctx.symbol("P").unwrap();
    let second = ctx.parse("U_p - P*X_p").unwrap();
    let encoded = enc
        .implicit
        .iter()
        .find(|e| proportional(&second, e, &enc.space))
        .expect("matched above");
    let flipped = encoded.subs(&[(p_sym, -p_sym.expr())]).unwrap();
    ensure!(
        proportional(&ctx.parse("P*X_p + U_p").unwrap(), &flipped, &enc.space),
        "P -> -P does not recover the reference form"
    );

    let mut lines = Vec::new();
    for name in ["lagrangian", "flat-gl2", "flat-identity", "toy-diag"] {
        let f = bundled(name);
        let c = crosscheck_characters(&f.problem, &f.title, &f.policy).map_err(|e| e.to_string())?;
        ensure!(c.agree, "{name}: engine and jet disagree");
        let st = c.stages.last().unwrap();
        lines.push(format!("{name} r2={} s={:?}", st.engine.r2, st.engine.s));
    }
    let bad = bundled("corrupted-membership");
    let c = crosscheck_characters(&bad.problem, &bad.title, &bad.policy).map_err(|e| e.to_string())?;
    ensure!(!c.agree, "negative control was not detected");
    let d = within(t, 30.0)?;
    Ok(format!("4 equations match; {}; {:.2} s", lines.join(", "), d.as_secs_f64()))
}

fn criterion_4() -> Check {
    let sp = JetSpace::new(&["x", "y"], &["u"]).unwrap();
    let mut ctx = Context::new();
    for &s in sp.independents().iter().chain(sp.dependents()) {
        ctx.add_symbol(s);
    }
    for s in sp.jets_of_order(1).unwrap() {
        ctx.add_symbol(s);
    }
    let sys = |eqs: &[(&str, &str)]| {
        let eqs = eqs
            .iter()
            .map(|(l, r)| (ctx.symbol(l).unwrap(), ctx.parse(r).unwrap()))
            .collect();
        JetSystem::new(&sp, eqs).unwrap()
    };
    let r = sys(&[("u_x", "u"), ("u_y", "x*u")]);
    let done = complete_to_involution(&r, 4, 0).map_err(|e| e.to_string())?;
    let conds: Vec<&Vec<String>> = done.log.iter().map(|s| &s.conditions).filter(|c| !c.is_empty()).collect();
    ensure!(conds.len() == 1 && conds[0] == &["u"], "conditions {conds:?}");
    let last = done.log.last().unwrap();
    ensure!(last.action == StepAction::Involutive, "ended with {:?}", last.action);

    let r = sys(&[("u_x", "0")]);
    let c = jet_characters(&r, 0).map_err(|e| e.to_string())?;
    ensure!(c.s == [1, 0] && c.r2 == 1 && c.involutive, "u_x = 0 gave {c:?}");
    let done = complete_to_involution(&r, 4, 0).map_err(|e| e.to_string())?;
    ensure!(done.loops == 0, "u_x = 0 needed {} loops", done.loops);
    Ok("{u_x=u, u_y=xu}: one condition u = 0 then involutive; {u_x=0}: s=(1,0), r2=1".into())
}

const PROPERTY_CASES: u32 = 100;

fn runner(seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

fn criterion_5() -> Check {
    let mut done = Vec::new();
    let mut run = |name: &str, result: Result<(), String>| -> Result<(), String> {
        result.map_err(|e| format!("{name}: {e}"))?;
        done.push(name.to_string());
        Ok(())
    };
    run(
        "d∘d = 0",
        runner(1)
            .run(&(function_strategy(), coframe_strategy()), |(f, fr)| check_d_squared(&f, &fr))
            .map_err(|e| e.to_string()),
    )?;
    run(
        "Clairaut",
        runner(2).run(&function_strategy(), |f| check_clairaut(&f)).map_err(|e| e.to_string()),
    )?;
    run(
        "C(x,I) = B(x)",
        runner(3)
            .run(&(coframe_strategy(), 0usize..4, invertible(3)), |(fr, k, p)| {
                check_torsion_at_identity(&fr, k, &p)
            })
            .map_err(|e| e.to_string()),
    )?;
    run(
        "r2 exact = normalized",
        runner(4)
            .run(&(coframe_strategy(), 0usize..4, invertible(3)), |(fr, k, p)| check_modes(&fr, k, &p))
            .map_err(|e| e.to_string()),
    )?;
    run(
        "characters under alpha rebasing",
        runner(5).run(&table_and_bases(), |c| check_alpha_rebase(&c)).map_err(|e| e.to_string()),
    )?;
    run(
        "characters under horizontal rebasing",
        runner(6).run(&table_and_bases(), |c| check_horizontal_rebase(&c)).map_err(|e| e.to_string()),
    )?;
    run(
        "abelian prolonged group",
        runner(7)
            .run(
                &(prop::collection::vec(small_q(), 3), prop::collection::vec(small_q(), 3)),
                |(v, y)| check_abelian(&v, &y),
            )
            .map_err(|e| e.to_string()),
    )?;
    Ok(format!("{} properties x {PROPERTY_CASES} cases: {}", done.len(), done.join(", ")))
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let problem = format!("{}/../../problems/lagrangian.cartan", env!("CARGO_MANIFEST_DIR"));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let json = dir.path().join(format!("run{k}.json"));
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(
            ["cartan", "run", &problem, "--seed", "11", "--json", json.to_str().unwrap()],
            &mut out,
            &mut err,
        );
        ensure!(code == 0, "exit {code}: {}", String::from_utf8_lossy(&err));
        outputs.push((std::fs::read(&json).map_err(|e| e.to_string())?, out));
    }
    ensure!(outputs[0].0 == outputs[1].0, "JSON differs between runs");
    ensure!(outputs[0].1 == outputs[1].1, "text output differs between runs");
    Ok(format!("{} identical JSON bytes", outputs[0].0.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 6] = [
        ("Lagrangian loop 1: residual, reduction, coframe", criterion_1),
        ("Lagrangian loop 2: Maurer-Cartan table, characters", criterion_2),
        ("jet encoding and crosscheck", criterion_3),
        ("jet completion oracles", criterion_4),
        ("property suites", criterion_5),
        ("deterministic reports", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
