//! Douglas-Rachford splitting for non-convex feasibility problems.
//!
//! The crate provides projections onto the sets of lifted Sudoku and
//! `s`-queens puzzles, standard/damped/switched Douglas-Rachford iterations
//! (two-set and product-space), and tools to measure finite termination and
//! local linear rates against their closed forms.

pub mod error;
pub mod analysis;
pub mod experiment;
pub mod geometry;
pub mod puzzles;
pub mod sets;
pub mod splitting;

pub use error::{Error, Result};
