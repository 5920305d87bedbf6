pub mod error;
pub mod extract;
pub mod hermite;
pub mod measure;
pub mod ode;
pub mod qftfun;
pub mod relkin;
pub mod rng;
pub mod scenario;
pub mod traject;

pub use error::{Error, Result};
