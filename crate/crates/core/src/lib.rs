//! Probabilistic dependency graphs (PDGs) over finite variables.
//!
//! A PDG is a set of beliefs (conditional probability tables) with
//! confidences. Its inconsistency, the least amount any joint distribution
//! must disagree with those beliefs, recovers many standard loss functions.

pub mod closed_form;
pub mod commands;
pub mod dsl;
pub mod error;
pub mod factor_graph;
pub mod losses;
pub mod model;
pub mod parallel;
pub mod score;
pub mod scoring;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Confidence, Cpd, Edge, JointTable, Pdg, Variable};
pub use score::Score;
pub use solver::{min_gamma_score, SolveOptions, SolveResult};
