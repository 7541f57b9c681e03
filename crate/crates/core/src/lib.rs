//! Synthesis of resilient software configurations and reconfiguration
//! policies for distributed systems with crash failures.

pub mod availability;
pub mod enumeration;
pub mod failures;
pub mod fixtures;
pub mod io;
pub mod model;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod quotient;
pub mod reconfig;
pub mod replay;
pub mod synthesis;
