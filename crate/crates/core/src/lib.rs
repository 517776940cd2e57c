pub mod covariance;
pub mod error;
pub mod experiments;
pub mod params;
pub mod rde;
pub mod roughpath;
pub mod simulate;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use params::{ModelParams, Partition};

#[cfg(test)]
mod tests;
