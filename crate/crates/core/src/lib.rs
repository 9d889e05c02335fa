pub mod asymptotics;
pub mod budget;
pub mod chain_dp;
pub mod cli;
pub mod error;
pub mod formulas;
pub mod genfun;
pub mod numeric;
pub mod oracle;
pub mod simulator;
pub mod trig_core;

pub use error::{Error, Result};
