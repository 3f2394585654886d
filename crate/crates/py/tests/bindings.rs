use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn problem(name: &str) -> String {
    format!("{}/../../problems/{name}.cartan", env!("CARGO_MANIFEST_DIR"))
}

/// Runs a Python snippet with the module imported as `cartan`.
fn run(code: &str) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(cartan::cartan)(py);
        py.import("sys").unwrap().getattr("modules").unwrap().set_item("cartan", &m).unwrap();
        let g = PyDict::new(py);
        g.set_item("cartan", m).unwrap();
        let src = CString::new(code).unwrap();
        if let Err(e) = py.run(&src, Some(&g), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn run_bundled_problem() {
    run(&format!(
        r#"
p = cartan.Problem.load({path:?})
assert p.dimension == 2 and p.group_dimension == 1, repr(p)
r = p.run()
assert r.outcome == "e-structure", r.outcome
assert r.exit_code == 0
assert r.isotropy()[0] == ["a = 1"], r.isotropy()
assert '"outcome"' in r.to_json()
assert p.run(seed=3).to_json() == p.run(seed=3).to_json()
assert p.crosscheck()
"#,
        path = problem("toy-diag")
    ));
}

#[test]
fn loop_cap_and_characters() {
    run(&format!(
        r#"
p = cartan.Problem.load({lag:?})
r = p.run(max_loops=1)
assert r.outcome == "cap-exceeded", r.outcome
assert r.exit_code == 3 and r.loops == 1
c = cartan.Problem.load({gl2:?}).run().characters()[-1]
assert (c.s, c.r2, c.involutive) == ([2, 2], 6, True), repr(c)
"#,
        lag = problem("lagrangian"),
        gl2 = problem("flat-gl2")
    ));
}

#[test]
fn errors_raise_cartan_error() {
    run(&format!(
        r#"
for bad in [lambda: cartan.Problem.parse("[coordinates]\nx\n"),
            lambda: cartan.Problem.load("/nonexistent.cartan"),
            lambda: cartan.Expr.parse("bx*)", ["bx"])]:
    try:
        bad()
    except cartan.CartanError as e:
        assert str(e)
    else:
        raise AssertionError("no error")
assert issubclass(cartan.CartanError, ValueError)
assert not cartan.Problem.load({bad:?}).crosscheck()
"#,
        bad = problem("corrupted-membership")
    ));
}

#[test]
fn expressions() {
    run(
        r#"
e = cartan.Expr.parse("bx^2*by + 1/bx", ["bx", "by"])
assert str(e.diff("by")) == str(cartan.Expr.parse("bx^2", ["bx"]))
assert e.eval({"bx": "2", "by": "1/4"}) == "3/2"
assert (e - e).is_zero()
assert (e * e) / e == e
try:
    e / (e - e)
except ZeroDivisionError:
    pass
else:
    raise AssertionError
"#,
    );
}

#[test]
fn jet_systems() {
    run(
        r#"
s = cartan.JetSystem(["x", "y"], ["u"], [("u_x", "u"), ("u_y", "x*u")])
assert s.order == 1 and len(s) == 2
done, conditions = s.complete()
assert any(conditions), conditions
assert ("u", "0") in done.equations(), done.equations()
c = cartan.JetSystem(["x", "y"], ["u"], [("u_xy", "0")]).characters()
assert c.involutive, repr(c)
try:
    cartan.JetSystem(["x"], ["u"], [("u_xxxx", "0")], max_order=2)
except cartan.CartanError:
    pass
else:
    raise AssertionError
"#,
    );
}
