//! Toolkit for the multi-commodity network pricing problem: a leader sets
//! tolls on a subset of arcs and every commodity (follower) then routes along
//! a shortest path. The crate offers the follower-side computations, the
//! conjugate (aggregate-usage) model with its exact enumeration solver,
//! bilevel feasibility tests, pairwise cut generation, a path-based
//! branch-and-bound, and a brute-force oracle for cross-checking.

pub mod bifeas;
pub mod cli;
pub mod conjugate;
pub mod cuts;
pub mod error;
pub mod follower;
pub mod instance;
pub mod lp;
pub mod milp;
pub mod oracle;

pub use error::{NppError, Result};
pub use instance::{Arc, Commodity, Instance};
