//! Object-axis controller composition and the 2D block tasks built on it.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actionspace;
pub mod composer;
pub mod controllers;
pub mod geom;
pub mod sim2d;
