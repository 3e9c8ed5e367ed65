//! Coupled-cavity arrays of three-level atoms, their reduction to spin-S
//! Heisenberg models, and the exact numerics used to check that reduction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod compare;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod full_model;
pub mod graph;
pub mod hilbert;
pub mod krylov;
pub mod layout;
pub mod params;
pub mod regime;
pub mod sparse;
pub mod spin;
pub mod state;
pub mod td;

pub use error::{Error, Result};
pub use graph::CavityGraph;
pub use hilbert::HilbertSpace;
pub use params::PhysicalParams;
pub use sparse::{LinearMap, SparseOperator, C64};
pub use state::QuantumState;
pub use td::TimeDependentOperator;
