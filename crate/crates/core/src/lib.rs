//! QoS-aware placement of multi-service applications onto Cloud-IoT
//! infrastructures, with incremental repair of running deployments when the
//! infrastructure changes.
//!
//! - [`model`]: applications, infrastructures, placements, allocation ledgers, validation.
//! - [`factfile`]: the Prolog-style fact format for inputs and outputs.
//! - [`engine`]: backtracking placement search and a brute-force oracle.
//! - [`reasoner`]: problem detection and partial re-placement.
//! - [`world`]: mutable store tying the above together.
//! - [`scale`]: replicated infrastructures and benchmark scenarios.
//! - [`cli`]: the `edgeplace` command line.

pub mod cli;
pub mod engine;
pub mod exec;
pub mod factfile;
pub mod model;
pub mod reasoner;
pub mod scale;
pub mod world;

pub use exec::Execution;
