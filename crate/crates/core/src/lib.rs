//! Orbital pseudospin of a paraxial electron beam in a quadrupole–octupole
//! field: shell algebra, quasiclassical flow, Floquet stability and
//! finite-`j` quantum dynamics.

pub mod ermakov;
pub mod error;
pub mod export;
pub mod flow;
pub mod fock;
pub mod ode;
pub mod par;
pub mod physics;
pub mod quantum;
pub mod render;
pub mod scan;
pub mod shell;
pub mod stability;

pub use error::{Error, Result};
pub use par::Execution;
pub use shell::{PseudospinVector, ShellOperator, ShellSpec, ShellState};
