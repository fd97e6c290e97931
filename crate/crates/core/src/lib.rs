#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod codec;
pub mod config;
pub mod data;
pub mod encoder;
pub mod error;
pub mod generation;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod prompt;
pub mod streams;
pub mod train;
pub mod types;

pub use error::{Error, Result};
