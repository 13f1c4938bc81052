//! p-Moreau–Yosida regularization of convex functions on ℝⁿ.

pub mod envelope;
pub mod error;
pub mod flow;
pub mod functions;
pub mod hj;
pub mod io;
pub mod mosco;
pub mod oracle;
pub mod par;
pub mod spaces;
pub mod verify;

pub use envelope::{prox, ProxSolution, Solver};
pub use error::{Error, Result};
pub use functions::{ConvexFn, CustomFn, FnSpec};
pub use oracle::GridSpec;
pub use spaces::{NormKind, PowerParams, SpaceSpec};
