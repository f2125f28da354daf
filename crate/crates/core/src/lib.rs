pub mod alpha;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod kernels;
pub mod labeling;
pub mod learners;
pub mod market_data;
pub mod rng;

pub use error::{Error, Result};
