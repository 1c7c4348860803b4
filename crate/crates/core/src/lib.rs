//! Coupled quantum kicked tops at small spin.
//!
//! Floquet dynamics of two identical tops coupled through `Jz (x) Jz`, the
//! entanglement and fidelity functionals evaluated along trajectories, and
//! the concordance diagnostics comparing pure and mixed initial states.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod chaos;
pub mod dynamics;
mod error;
pub mod measures;
pub mod numerics;
pub mod spin;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
