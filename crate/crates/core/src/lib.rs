//! Deep Boolean networks with a learnable sparse interconnect.
//!
//! The crate covers the whole model life cycle without touching the file
//! system: thermometer binarization, straight-through training of 2-input
//! gate layers whose inputs are picked from a small per-slot candidate set,
//! hardening into a static netlist, bit-parallel evaluation, and the
//! compression passes (trivial, logic equivalence, greedy, similarity).
//!
//! It is `no_std` and only needs `alloc`. File formats, dataset loaders and
//! the command line live in the `boolnet` crate.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod circuit;
pub mod data;
pub mod encoding;
pub mod error;
pub mod gate;
pub mod interconnect;
pub mod matrix;
pub mod memory;
pub mod model;
pub mod optim;
pub mod prune;
pub mod train;

pub use bits::BitMatrix;
pub use circuit::{group_logits, harden, HardCircuit, HardGate, Source};
pub use encoding::ThermometerEncoder;
pub use error::{Error, Result};
pub use gate::GateTruthTable;
pub use matrix::RealMatrix;
pub use memory::estimate_interconnect_memory;
pub use model::{LayerParams, NetworkModel, ARITY};
pub use train::{InterconnectMode, SamplingMode, TrainConfig};
