//! Universal tester-learner for origin-centered halfspaces.
//!
//! Given labeled samples, the pipeline either rejects or returns a unit
//! vector `w` whose halfspace `sign(⟨w, x⟩)` carries a certified error bound.

pub mod distributions;
pub mod learner;
pub mod numerics;
pub mod oracle;
pub mod rng;
pub mod sdp;
pub mod sos_hyper;
pub mod surrogate;
pub mod testers;
pub mod verdict;
