//! Modal formulas with coalition modalities, their first-order translation,
//! a parser, a model checker and characteristic formulas.

pub mod ast;
pub mod check;
pub mod chi;
pub mod fo;
pub mod parser;

pub use ast::{modal_depth, Formula, Interner, F};
pub use check::{extension, model_check, Evaluator};
pub use chi::{characteristic_formula, CharBuilder};
pub use fo::{fo_eval, standard_translation, FOError, FOFormula};
pub use parser::{parse, ParseError};
