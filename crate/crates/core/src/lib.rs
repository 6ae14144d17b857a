//! Experiment design and data informativity for unknown discrete-time LTI
//! systems `x(t+1) = A x(t) + B u(t)`.
//!
//! The crate covers offline (universal) and online input design, verdicts on
//! whether input-state data suffice for identification or stabilization
//! given prior knowledge of controllability or stabilizability, and the
//! synthesis of identified models and stabilizing gains from such data.

pub mod error;
pub mod informativity;
pub mod inputdesign;
pub mod matrixlab;
pub mod online;
pub mod random;
pub mod serial;
pub mod synthesis;
pub mod system;
pub mod tolerance;

pub use error::{Error, Result};

pub use informativity::{Dataset, Goal, PriorKnowledge, Verdict};
pub use matrixlab::{RankReport, Subspace};
pub use synthesis::GainCertificate;
pub use system::{LtiSystem, SystemClass};
