//! Noise-aware quantum architecture search.
//!
//! The crate is organised bottom-up:
//!
//! * [`qsim`]: density-matrix simulator with bit-flip, depolarizing and thermal-relaxation
//!   channels, `<Z>` readout and parameter-shift gradients.
//! * [`arch`]: layered search-space codec between integer genomes and circuits, plus
//!   hardware cost.
//! * [`tasks`]: the binary-cluster and iris datasets with their angle encodings.
//! * [`train`]: supernet heads, epsilon-greedy head selection, pretraining and fine-tuning.
//! * [`evo`]: variable-depth NSGA-II with a global Pareto archive.
//!
//! With the default `parallel` feature, batch gradients and population evaluation run on
//! rayon; without it the same code runs sequentially. Results are identical either way.

pub mod arch;
pub mod error;
pub mod evo;
pub mod par;
pub mod qsim;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
