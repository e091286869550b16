//! Two-electron quantum dynamics for surface-acoustic-wave driven exchange
//! gates.
//!
//! The crate covers the whole pipeline: sampling of the device, SAW and
//! softened-Coulomb potentials; momentum-basis eigensolves of the boosted-frame
//! Hamiltonian; staggered-leapfrog time evolution; two-site (Hubbard and
//! Hund-Mulliken) exchange estimates; and the post-processing that turns all
//! of that into SWAP probabilities, fitted barrier laws, gate fidelities and
//! Fisher-information bounds.
//!
//! Units are fixed throughout: energies in meV, lengths in nm, times in ps.

pub mod analysis;
pub mod config;
pub mod davidson;
pub mod density;
pub mod eigen;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod models;
pub mod output;
pub mod potentials;
pub mod propagator;
pub mod reduce;
pub mod runner;
pub mod special;
pub mod units;

pub use error::{Error, Result};
pub use field::{Space, WaveField};
pub use grid::Grid1D;
pub use num_complex::Complex64 as C64;
pub use units::UnitSystem;
