//! One loop of Cartan's equivalence method and its iteration.

mod absorb;
mod characters;
mod problem;
mod prolong;
mod reduce;
mod run;

pub use absorb::{build_absorption, solve_absorption, AbsorptionSolution, AbsorptionSystem, Mode, Torsion};
pub use characters::{cartan_characters, characters_from_table, greedy_characters, CharacterReport};
pub use problem::{compute_structure_data, torsion_table, GStructureProblem, StructureData};
pub use prolong::{prolong, prolonged_group_law};
pub use reduce::{classify_torsion, reduce_group, Classification, ReduceFailure, Reduction, TorsionClass};
pub use run::{residual_label, run_loop, EquivalenceReport, LoopRecord, Outcome, Policy};

use thiserror::Error;

use crate::expr::ExprError;
use crate::forms::FormError;
use crate::group::GroupError;
use crate::linalg::MatrixError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("group acts on {group} dimensions but the chart has {chart}")]
    DimensionMismatch { group: usize, chart: usize },
    #[error("prolongation refused: {0}")]
    ProlongRefused(String),
}
