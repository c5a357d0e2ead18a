//! The final chain of the finite powerset functor, materialized as a
//! transition system.
//!
//! Finite levels live in [`chain`], the limit level at omega in [`omega`],
//! and the tree and channel machinery used to transport structure into the
//! chain in [`trees`]. [`props`] bundles the structural checks as runnable
//! suites.

pub mod bisim;
pub mod chain;
pub mod error;
pub mod omega;
pub mod props;
pub mod system;
pub mod trees;

pub use error::{Error, Result};
