//! Synthesis back ends: the built-in chain generator, a file bridge to
//! external sequence generators, and the holdout leakage check.

mod bridge;
mod chain;
mod leakage;

pub use bridge::{
    bridge_command_from_env, bridge_export, bridge_import, run_bridge, run_bridge_command, BridgeFile,
    BRIDGE_CMD_ENV, CORPUS_FILE, GENERATED_FILE, SCHEMA_FILE,
};
pub use chain::{fit_chain, implied_joint_l1, sample, ChainConfig, ChainModel, StateSpace};
pub use leakage::{leakage_check, GowerSpace, LeakageReport, DEFAULT_MARGIN};
