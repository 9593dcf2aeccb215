pub mod baselines;
pub mod block;
pub mod dictionary;
pub mod error;
pub mod harness;
pub mod quant;
pub mod rate;
pub mod rose;
pub mod transform;

pub use block::{apply_mask, Block, CoeffBlock, Grid, LevelBlock, Mask};
pub use error::{Error, Result};
