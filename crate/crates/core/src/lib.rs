//! Deterministic identification codes for finite memoryless channels.
//!
//! The crate builds DI codes from a square-root packing of the channel's
//! output distributions, evaluates their errors of the first and second
//! kind exactly, and tabulates finite-blocklength rate bounds.
//!
//! Rates are in bits per channel use. Error exponents are natural:
//! an exponent `E` at blocklength `n` means an error of at most `e^{-nE}`.

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod evaluator;
pub mod fmt;
pub mod geometry;
pub mod infodist;

pub use channel::{ChannelModel, Distribution};
pub use error::{DirlError, Result};
