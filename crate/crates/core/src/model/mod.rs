//! Hardware, software, replication protocols, configurations and the static
//! validity constraints on configurations.

mod bits;
mod config;
mod system;

pub use bits::{DevSet, HwSet, MAX_DEV_TYPES, MAX_HW};
pub use config::{load, resources_ok, rsi_ok, run, valid_config, Config, RepSwInst, SwInst};
pub use system::{
    compatible, Computer, Device, ModelError, Quorum, RepProtocol, Software, SystemModel,
    SystemSpec,
};
