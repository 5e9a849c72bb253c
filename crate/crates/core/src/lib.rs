// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod measure;
pub mod path;
pub mod quadrature;
pub mod sandwich;
pub mod stats;
pub mod streams;
pub mod verify;

pub use config::{RunConfig, Suite};
pub use decomposition::{decompose, Cutoff, Decomposition};
pub use error::{LevyError, Result};
pub use measure::{LevyTriplet, MeasureSpec};
pub use path::{PathEngine, SimConfig, SkeletonPath};
