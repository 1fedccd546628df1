//! Pre-synthesis pipeline for tabular generators: signal-based pruning of
//! the non-interest class, column conditional reordering, a textual row
//! codec, an order-sensitive chain generator, and a supervised-learning
//! utility harness for replacement and appendant scenarios.

pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod generator;
pub mod pipeline;
pub mod pruning;
pub mod reordering;
pub mod seed;
pub mod table;

pub use error::{PrroError, Result};
