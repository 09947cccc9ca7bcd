//! Siting, dispatch and techno-economic evaluation of solar-plus-storage
//! microgrids that serve the excess load of electrified transport.

pub mod config;
pub mod costs;
pub mod dispatch;
pub mod error;
pub mod profiles;
pub mod scenario;
pub mod siting;
pub mod stakeholders;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
