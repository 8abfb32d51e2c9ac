//! Cutting and mapping of large quantum circuits for distributed quantum
//! computers built from a chain of small QPUs.
//!
//! The pipeline is: build the interaction graph of a [`circuit::Circuit`],
//! optionally contract isomorphic sub-circuits ([`iso`]), search a min-cost
//! cut and keep only the critical cuts ([`hemicut`]), expand the cuts into
//! quasi-probability variants ([`qpd`]), map and route the result over the
//! [`dqc`] model ([`mapping`]), and recombine simulated variant results
//! ([`sim`], [`reconstruct`]).

pub mod circuit;
pub mod cli;
pub mod dqc;
pub mod error;
pub mod graph;
pub mod hemicut;
pub mod iso;
pub mod mapping;
pub mod qpd;
pub mod reconstruct;
pub mod sim;

pub use error::{Error, Result};
