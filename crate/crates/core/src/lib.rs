//! Cartan's equivalence method for G-structures and Cartan–Kuranishi
//! completion of first-order PDE systems, over exact rational expressions.

pub mod cli;
pub mod expr;
pub mod forms;
pub mod engine;
pub mod group;
pub mod jet;
pub mod linalg;
pub mod problem;
pub mod random;
pub mod report;
