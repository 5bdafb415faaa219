//! Exact solver core for fair allocation of indivisible items under category
//! constraints.
//!
//! Items are partitioned into categories with per-agent capacities. The crate
//! computes, with exact rational arithmetic throughout, a weight point on the
//! agent simplex together with a bundle of Pareto-optimal allocations — one
//! per agent, each envy-free for its agent — that all agree outside a set of
//! at most `n(n-1)` items. A naive exhaustive oracle is included so every
//! guarantee can be certified at desk scale.
//!
//! The crate is `no_std` (it only needs `alloc`); parsing, file formats and
//! the command-line front end live in the companion `catfair-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod arith;
pub mod fairness;
pub mod model;
pub mod oracle;
pub mod perturb;
pub mod search;
pub mod solver;

pub use arith::{LexCost, Rational};
pub use model::{build_slot_graph, normalize, Allocation, Instance, NormalizedInstance, SlotGraph};
pub use perturb::{compute_k, shrink_weights, CostMode, WeightPoint};
pub use search::{find_witness, ResultBundle, SearchMode, SearchOptions};
