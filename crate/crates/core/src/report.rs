//! Plain-text rendering and deterministic JSON for reports.

use std::fmt::Write;

use serde::Serialize;

use crate::engine::{CharacterReport, EquivalenceReport, LoopRecord, TorsionClass};
use crate::jet::Crosscheck;

/// Pretty JSON with a trailing newline. Field order is the struct order and
/// maps are `BTreeMap`s, so equal reports serialize to equal bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn class_name(c: TorsionClass) -> &'static str {
    match c {
        TorsionClass::Trivial => "trivial",
        TorsionClass::GroupDependent => "group-dependent",
        TorsionClass::Genuine => "genuine",
    }
}

pub fn render_characters(c: &CharacterReport) -> String {
    let s: Vec<String> = c.s.iter().map(|v| v.to_string()).collect();
    format!(
        "s = ({}), r2 = {}, sum i*s_i = {}, Cartan's test {}",
        s.join(", "),
        c.r2,
        c.weighted_sum,
        if c.involutive { "passed" } else { "failed" }
    )
}

fn render_loop(out: &mut String, l: &LoopRecord) {
    let _ = writeln!(
        out,
        "loop {} (stage {}): dimension {}, group dimension {}",
        l.index, l.stage, l.dimension, l.group_dimension
    );
    out.push_str("  coframe:\n");
    for row in &l.coframe {
        let _ = writeln!(out, "    {row}");
    }
    out.push_str("  Maurer-Cartan form:\n");
    for row in &l.maurer_cartan {
        let _ = writeln!(out, "    [{}]", row.join(", "));
    }
    let _ = writeln!(
        out,
        "  absorption: {} equations in {} unknowns, r2 = {}",
        l.equations, l.unknowns, l.r2
    );
    let live: Vec<_> = l.torsion.iter().filter(|t| t.class != TorsionClass::Trivial).collect();
    if live.is_empty() {
        out.push_str("  torsion: all residuals trivial\n");
    } else {
        out.push_str("  torsion:\n");
        for t in live {
            let _ = writeln!(out, "    [{}] {} ({})", t.label, t.residual, class_name(t.class));
        }
    }
    let _ = writeln!(out, "  characters: {}", render_characters(&l.characters));
    if let Some(r) = &l.reduction {
        for (res, c) in &r.targets {
            let _ = writeln!(out, "  normalize {res} = {c}");
        }
        for rel in &r.isotropy {
            let _ = writeln!(out, "  isotropy: {rel}");
        }
        let _ = writeln!(out, "  reduced group dimension {}", r.group_dimension);
    }
    let _ = writeln!(out, "  verdict: {}", l.verdict);
}

pub fn render_report(r: &EquivalenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (seed {}, at most {} loops)", r.title, r.seed, r.max_loops);
    for l in &r.loops {
        render_loop(&mut out, l);
    }
    out.push_str("final coframe:\n");
    for row in &r.final_coframe {
        let _ = writeln!(out, "  {row}");
    }
    out.push_str("final group:\n");
    for row in &r.final_group {
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
    let outcome = serde_json::to_value(r.outcome).expect("outcome serializes");
    let _ = writeln!(out, "outcome: {}", outcome.as_str().unwrap_or("?"));
    if let Some(m) = &r.message {
        let _ = writeln!(out, "  {m}");
    }
    if let Some(t) = &r.timings_ms {
        let ts: Vec<String> = t.iter().map(|v| format!("{v:.1}")).collect();
        let _ = writeln!(out, "timings (ms): {}", ts.join(", "));
    }
    out
}

pub fn render_crosscheck(c: &Crosscheck) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", c.engine_log.title);
    for st in &c.stages {
        let fmt = |s: &[usize]| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            out,
            "stage {}: engine r2 = {}, s = ({}), {} non-trivial torsion | jet r2 = {}, s = ({}), {} conditions | {}",
            st.index,
            st.engine.r2,
            fmt(&st.engine.s),
            st.engine.conditions,
            st.jet.r2,
            fmt(&st.jet.s),
            st.jet.conditions,
            if st.agree { "agree" } else { "MISMATCH" }
        );
    }
    for (k, step) in c.jet_log.iter().enumerate() {
        for cond in &step.conditions {
            let _ = writeln!(out, "  jet condition at stage {k}: {cond} = 0");
        }
    }
    let _ = writeln!(out, "crosscheck: {}", if c.agree { "agree" } else { "mismatch" });
    out
}
