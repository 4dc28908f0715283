//! Universal polar source coding and polar sparse sketching over prime
//! alphabets.

pub mod error;
pub mod measures;
pub mod cli;
pub mod codec;
pub mod compound;
pub mod export;
pub mod polar_core;
pub mod sketch;
pub mod storage;

pub use error::{Error, Result};
