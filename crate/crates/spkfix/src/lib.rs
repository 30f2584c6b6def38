//! File formats, command-line tools and the live session server built on
//! [`spkfix_core`].

pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod gateway;
pub mod protocol;
pub mod server;
pub mod session;

pub use error::{Error, Result};
