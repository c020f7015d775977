//! Game strategy fitness: Nim winning formulas and Tic-Tac-Toe evaluators.

pub mod nim;
pub mod ttt;
