//! Transport-and-pack: move boxes from an initial pile into a target
//! container, choosing the order, orientation and position of each box.

pub mod container;
pub mod datasets;
pub mod error;
pub mod extensions;
pub mod geom;
pub mod instance;
pub mod placement;
pub mod policy;
pub mod precedence;
pub mod render;
pub mod reward;
pub mod solvers;
pub mod training;

pub use error::{Result, TapError};
