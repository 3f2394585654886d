use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::expr::{Expr, Q};

use super::absorb::{build_absorption, solve_absorption, Mode};
use super::characters::{cartan_characters, CharacterReport};
use super::problem::{compute_structure_data, GStructureProblem};
use super::prolong::prolong;
use super::reduce::{classify_torsion, reduce_group, ReduceFailure, Reduction, TorsionClass};
use super::EngineError;

/// Stable short label of a residual: hash of its printed form.
pub fn residual_label(e: &Expr) -> String {
    hex_digest(e.to_string().as_bytes())[..10].to_string()
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub max_loops: usize,
    pub seed: u64,
    /// Normalization constants keyed by residual label.
    pub targets: BTreeMap<String, Q>,
    /// Record wall-clock time per loop. Off by default so reports are reproducible.
    pub timings: bool,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            max_loops: 8,
            seed: 0,
            targets: BTreeMap::new(),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Involutive,
    EStructure,
    ConstantTypeViolation,
    CapExceeded,
    ManualReductionNeeded,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Involutive | Outcome::EStructure => 0,
            Outcome::ManualReductionNeeded => 1,
            Outcome::ConstantTypeViolation => 2,
            Outcome::CapExceeded => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionRecord {
    pub label: String,
    pub residual: String,
    pub class: TorsionClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanTest {
    pub r2: usize,
    pub weighted_sum: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub index: usize,
    pub stage: usize,
    pub dimension: usize,
    pub group_dimension: usize,
    pub coframe: Vec<String>,
    pub structure_digest: String,
    pub maurer_cartan: Vec<Vec<String>>,
    pub equations: usize,
    pub unknowns: usize,
    pub r2: usize,
    pub torsion: Vec<TorsionRecord>,
    pub characters: CharacterReport,
    pub cartan_test: CartanTest,
    pub reduction: Option<Reduction>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub title: String,
    pub seed: u64,
    pub max_loops: usize,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub loops: Vec<LoopRecord>,
    pub final_coframe: Vec<String>,
    pub final_group: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<Vec<f64>>,
}

fn coframe_rows(p: &GStructureProblem) -> Vec<String> {
    let n = p.n();
    (0..n)
        .map(|i| {
            let f = p.coframe.element(i).to_coordinates();
            format!("{} = {}", p.coframe.names()[i], f)
        })
        .collect()
}

fn digest(data: &super::problem::StructureData) -> String {
    let mut s = String::new();
    for i in 0..data.b.dim() {
        for e in data.b.row(i) {
            s.push_str(&e.to_string());
            s.push(';');
        }
    }
    s.push('|');
    for row in &data.c {
        for e in row {
            s.push_str(&e.to_string());
            s.push(';');
        }
    }
    hex_digest(s.as_bytes())[..16].to_string()
}

/// Iterates structure data, absorption, torsion classification and then
/// reduction, Cartan's test or prolongation until one of the final outcomes.
pub fn run_loop(
    problem: GStructureProblem,
    title: &str,
    policy: &Policy,
) -> Result<EquivalenceReport, EngineError> {
    let mut p = problem;
    let mut loops: Vec<LoopRecord> = Vec::new();
    let mut timings = Vec::new();
    let (outcome, message) = loop {
        if loops.len() >= policy.max_loops {
            break (
                Outcome::CapExceeded,
                Some(format!("stopped after {} loops", policy.max_loops)),
            );
        }
        if p.group.r() == 0 && p.stage > 0 {
            break (
                Outcome::EStructure,
                Some("structure group reduced to the identity: the problem is a coframe".into()),
            );
        }
        let start = Instant::now();
        let data = compute_structure_data(&p)?;
        let sys = build_absorption(&data, &Mode::Normalized)?;
        let sol = solve_absorption(&sys);
        let seed = policy.seed.wrapping_add(loops.len() as u64);
        let cls = classify_torsion(&p.group, &sol, seed);
        let chars = cartan_characters(&data.mc, &sol, seed);
        let torsion: Vec<TorsionRecord> = sol
            .torsion
            .iter()
            .zip(&cls.classes)
            .map(|(t, c)| TorsionRecord {
                label: residual_label(&t.expr),
                residual: t.expr.to_string(),
                class: *c,
            })
            .collect();
        let mut record = LoopRecord {
            index: loops.len(),
            stage: p.stage,
            dimension: p.n(),
            group_dimension: p.group.r(),
            coframe: coframe_rows(&p),
            structure_digest: digest(&data),
            maurer_cartan: data.mc.render_matrix(),
            equations: sys.equations(),
            unknowns: sys.unknowns(),
            r2: sol.r2,
            torsion,
            cartan_test: CartanTest {
                r2: chars.r2,
                weighted_sum: chars.weighted_sum,
                passed: chars.involutive,
            },
            characters: chars.clone(),
            reduction: None,
            verdict: String::new(),
        };
        let genuine = cls.indices(TorsionClass::Genuine);
        let dependent = cls.indices(TorsionClass::GroupDependent);
        let stop = if !genuine.is_empty() {
            let inv: Vec<String> = genuine.iter().map(|&i| sol.torsion[i].expr.to_string()).collect();
            Some((
                Outcome::ConstantTypeViolation,
                format!("genuine invariant: {}", inv.join(", ")),
            ))
        } else if !cls.full_rank {
            Some((
                Outcome::ConstantTypeViolation,
                format!(
                    "torsion not of full rank in the group parameters ({} of {})",
                    cls.group_rank,
                    dependent.len()
                ),
            ))
        } else if !dependent.is_empty() {
            let before = p.group.r();
            let targets = |label: &str| policy.targets.get(label).cloned();
            match reduce_group(&p, &data.b, &sol, &cls, &targets, seed) {
                Ok((next, red)) => {
                    assert!(next.group.r() < before, "reduction must shrink the group");
                    record.reduction = Some(red);
                    record.verdict = "reduce".into();
                    p = next;
                    None
                }
                Err(ReduceFailure::NotTriangular(rs)) => Some((
                    Outcome::ManualReductionNeeded,
                    format!("manual reduction needed for: {}", rs.join(", ")),
                )),
                Err(ReduceFailure::Engine(e)) => return Err(e),
                Err(other) => Some((Outcome::ConstantTypeViolation, other.to_string())),
            }
        } else if chars.involutive {
            Some((Outcome::Involutive, "Cartan's test passed".into()))
        } else {
            let before = p.n();
            let next = prolong(&p, &data.mc, &sol, &chars)?;
            assert!(next.n() > before, "prolongation must grow the chart");
            record.verdict = "prolong".into();
            p = next;
            None
        };
        timings.push(start.elapsed().as_secs_f64() * 1000.0);
        if let Some((o, msg)) = stop {
            record.verdict = match o {
                Outcome::Involutive => "involutive",
                Outcome::ConstantTypeViolation => "constant-type-violation",
                Outcome::ManualReductionNeeded => "manual-reduction-needed",
                _ => "stop",
            }
            .into();
            loops.push(record);
            break (o, Some(msg));
        }
        loops.push(record);
    };
    Ok(EquivalenceReport {
        title: title.to_string(),
        seed: policy.seed,
        max_loops: policy.max_loops,
        outcome,
        message,
        loops,
        final_coframe: coframe_rows(&p),
        final_group: p
            .group
            .entries()
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect())
            .collect(),
        timings_ms: policy.timings.then_some(timings),
    })
}
