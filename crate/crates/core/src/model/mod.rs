//! Variables, cpds, PDGs, and dense joint distributions.

mod cpd;
mod joint;
mod layout;
mod pdg;
mod variable;

pub use cpd::{Cpd, ROW_SUM_TOLERANCE};
pub use joint::{Conditional, JointTable, JOINT_SUM_TOLERANCE};
pub use layout::Layout;
pub use pdg::{Confidence, Edge, Pdg, DEFAULT_MAX_CELLS};
pub use variable::Variable;

pub(crate) use joint::entropy;
