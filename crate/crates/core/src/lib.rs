//! Mixing-time lower bounds for the Rudvalis shuffle, the shift-or-swap
//! shuffle and the symmetrized Rudvalis shuffle.
//!
//! * [`shuffle`]: decks, moves, the lifted chain and single-card phases.
//! * [`spectral`]: eigenvalues and profiles of the lifted eigenfunctions.
//! * [`bounds`]: the eigenfunction lower bound on mixing time.
//! * [`exact`]: exact distribution evolution for small decks.
//! * [`montecarlo`]: seeded simulation at larger deck sizes.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod numeric;
pub mod perm;
pub mod shuffle;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use shuffle::{Deck, LiftedState, Move, ShuffleKind, ShuffleSpec};
pub use spectral::{solve, EigenSystem};
