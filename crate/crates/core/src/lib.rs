pub mod adversary;
pub mod channel;
pub mod harness;
pub mod keyderive;
pub mod numerics;
pub mod protocol;
mod serde_util;
