//! Storage sizing, siting and dispatch for radial distribution feeders.
//!
//! A case ([`network`]) and a set of representative days ([`scenario`]) are
//! assembled into a mixed-integer conic program ([`model`]): DistFlow with
//! the branch current equation relaxed to a rotated cone, nodal balances,
//! storage operation with exclusive charge/discharge binaries and a siting
//! binary per candidate bus. [`bnb`] solves it by branch-and-bound over the
//! interior-point solver in [`conic`]; [`analysis`] turns solutions into
//! cost, arbitrage, voltage and congestion reports.

pub mod analysis;
pub mod bnb;
pub mod cli;
pub mod conic;
pub mod model;
pub mod network;
pub mod powerflow;
pub mod scenario;
