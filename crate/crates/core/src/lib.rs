//! Deterministic model of a SAN-backed, four-node active/passive database
//! cluster: hardware topology, triple-mirror volume availability, resource
//! group failover, partitioned request routing, tape backup, and a downtime
//! ledger with planned/unplanned availability accounting.
//!
//! Everything in this crate is pure and allocation-only (`no_std` + `alloc`):
//! no wall clock, no IO, no global state. A simulation run is a fold over a
//! scenario's event timeline with a seeded RNG, so identical inputs produce
//! identical outputs, byte for byte. File formats, CSV/JSON rendering to
//! disk, and the CLI live in the companion `terrasim` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backup;
pub mod cluster;
pub mod ledger;
pub mod partition;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod storage;
pub mod topology;
pub mod workload;


pub use rng::SimRng;


pub use topology::{
    build_default_topology, build_initial_topology, validate_topology, Partition, Topology,
    Violation,
};
