pub mod bcjr;
pub mod cli;
pub mod density;
pub mod erasure;
pub mod error;
pub mod oracle;
pub mod pic;
pub mod rate;
pub mod selftest;
pub mod sim;
pub mod transfer;
pub mod trellis;
pub mod turbo;

pub use error::{Error, Result};
