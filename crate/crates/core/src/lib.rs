//! Distance functions to polygonal domain boundaries, their singular sets, and
//! the generalized gradient flow that carries every interior point into the
//! singular set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convexmin;
pub mod distance;
mod error;
pub mod flow;
pub mod geom;
pub mod io;
pub mod mintime;
pub mod scene;
pub mod shapes;
pub mod topology;

pub use error::{Error, Result};
