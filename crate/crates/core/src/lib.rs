//! Lattice compute-and-forward for the two-way relay channel.
//!
//! Two nodes exchange messages through a relay. Both use the same nested
//! lattice code, so the relay can decode the modulo sum of their codewords
//! instead of each message, and each node subtracts its own codeword from
//! the relayed sum. The crate also contains the closed-form rate
//! comparisons, an XOR relay over binary symmetric channels, a
//! minimum-angle decoder for ball codebooks, a multi-relay line schedule,
//! and a deterministic parallel Monte Carlo harness.

pub mod bsc;
pub mod error;
pub mod exact;
pub mod io;
pub mod lattice;
pub mod minangle;
pub mod multihop;
pub mod rates;
pub mod sim;
pub mod twoway;

pub use error::{Error, Result};
pub use lattice::{
    CoarseLattice, CodebookDescriptor, Dither, LatticePoint, LinearCode, NestedLatticePair,
};
pub use sim::{run_trials, Experiment, SimRng, TrialPlan, TrialReport};
pub use twoway::{run_session, BroadcastMode, ChannelParams};
