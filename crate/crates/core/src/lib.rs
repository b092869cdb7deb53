//! News-implied lead-lag networks between firms and the return
//! predictability they carry.

pub mod config;
pub mod corpus;
pub mod econ;
pub mod error;
pub mod identify;
pub mod network;
pub mod panel;
pub mod pipeline;
pub mod portfolio;
pub mod report;
pub mod stats;
pub mod synth;
pub mod variables;

pub use error::{Error, Result};
pub use panel::Panel;
