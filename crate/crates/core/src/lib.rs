pub mod channels;
pub mod charfunc;
pub mod cli;
pub mod error;
pub mod linops;
pub mod measurements;
pub mod oracle;
pub mod quasiprob;
pub mod random;
pub mod tomography;

pub use error::{Error, Result};
