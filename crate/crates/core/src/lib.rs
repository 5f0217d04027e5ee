pub mod aoa;
pub mod atmosphere;
pub mod channel;
pub mod config;
pub mod error;
pub mod link;
pub mod montecarlo;
pub mod optimize;
pub mod pointing;
pub mod quadrature;
pub mod special;
pub mod turbulence;
pub mod validate;

pub use error::{Error, Result};
