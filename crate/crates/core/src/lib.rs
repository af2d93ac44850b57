//! Image segmentation and contextual text extraction for HTML pages.

pub mod concept;
pub mod context;
pub mod dom;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod location;
pub mod pipeline;
pub mod segment;
pub mod stats;

pub use error::{Error, Result};
