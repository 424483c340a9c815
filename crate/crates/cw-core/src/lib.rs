//! Exact-arithmetic toolkit for metrics of lamplighter type, measured walls
//! structures and the coarse embeddings they induce.
//!
//! Everything metric is computed in arbitrary-precision rationals; floating
//! point appears only in the two curve-fitting routines of [`analysis`].

pub mod analysis;
pub mod bits;
pub mod boxspace;
pub mod error;
pub mod group;
pub mod io;
pub mod lift;
pub mod metric;
pub mod rational;
pub mod samples;
pub mod selftest;
pub mod walls;
pub mod wreath;

mod simplex;

pub use error::CwError;
pub use rational::Q;
