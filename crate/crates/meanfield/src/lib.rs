pub mod bifurcation;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod moments;
pub mod netsim;
pub mod params;
pub mod scenario;
pub mod sigmoid;
pub mod stats;
pub mod stationary;

pub use error::{Error, Result};
