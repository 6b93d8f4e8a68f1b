//! A typed tensor-network ("prop") engine for finite-dimensional quantum
//! information.
//!
//! The central value is the [`Morph`]: a dense complex tensor whose axes
//! carry typed legs (Hilbert-space label, dimension, in/out direction and
//! physical/virtual essence). On top of the morph algebra the crate offers
//! operator analysis (partial transpose, Choi/Jamiolkowski, Kraus,
//! positivity), a thickening functor to density-matrix level channels with
//! closed-timelike-curve fixed-point solvers, executable verifications of
//! standard protocols, and a small diagram DSL with a contraction planner.

pub mod analysis;
pub mod dsl;
pub mod linalg;
pub mod morph;
pub mod protocols;
pub mod thickctc;

pub use morph::{Direction, Essence, Frame, Leg, Morph, MorphError};
