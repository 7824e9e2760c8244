//! Integer-coded security labels.
//!
//! A policy schema assigns every security label (clearance levels,
//! compartments, project marks) a small integer code. A whole label set
//! then packs into a single unsigned integer under one of three
//! interchangeable codecs:
//!
//! * `bitvec`: one bit per label, the reference representation
//! * `expsum`: sum of `base^index` over the labels present
//! * `primeprod`: product of the labels' primes, empty set encoding as 1
//!
//! Dominance ("may this subject read that object?") becomes plain integer
//! arithmetic: a bitwise AND, an index walk, or a single modulo. The
//! [`dominance`] module keeps every arithmetic route and a set-theoretic
//! oracle in lockstep. On top of the codecs sit a dominance-filtered record
//! store ([`store`]), write/disclosure gating through registered
//! subject-process tuples ([`process`]), flattening of rooted label
//! hierarchies into subset tests ([`hierarchy`]), and a read-cost
//! micro-benchmark comparing the arithmetic routes ([`bench`]).
//!
//! The `ibac` binary exposes the toolkit on the command line; see the
//! repository README for the file formats it reads and writes.

pub mod bench;
pub mod codec;
pub mod demo;
pub mod dominance;
mod error;
pub mod hierarchy;
mod primes;
pub mod process;
pub mod schema;
pub mod store;

pub use codec::{ObfuscatedToken, Scheme, Token, Transform};
pub use error::{Error, Result};
pub use schema::{LabelSet, PolicySchema, SubjectClearance};
