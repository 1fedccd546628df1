//! File exchange with an external sequence generator.
//!
//! Directory layout: `corpus.txt` (training sentences), `schema.txt`
//! (schema sidecar) and `generated.txt` (the tool's output, same format).

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::encoding::{load_corpus, write_corpus, NameMode, ParsePolicy, RejectRecord};
use crate::error::{PrroError, Result};
use crate::table::{Dataset, SchemaSidecar};

pub const CORPUS_FILE: &str = "corpus.txt";
pub const SCHEMA_FILE: &str = "schema.txt";
pub const GENERATED_FILE: &str = "generated.txt";
pub const BRIDGE_CMD_ENV: &str = "PRRO_BRIDGE_CMD";

/// Which corpus file of a bridge directory to read back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeFile {
    Corpus,
    Generated,
}

impl BridgeFile {
    pub fn file_name(&self) -> &'static str {
        match self {
            BridgeFile::Corpus => CORPUS_FILE,
            BridgeFile::Generated => GENERATED_FILE,
        }
    }
}

pub fn bridge_export(dataset: &Dataset, dir: &Path, positive_label: Option<&str>, mode: NameMode) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PrroError::io(dir, e))?;
    write_corpus(&dir.join(CORPUS_FILE), dataset, mode)?;
    SchemaSidecar::from_schema(dataset.schema(), positive_label).save(&dir.join(SCHEMA_FILE))
}

/// Reads `generated.txt` (or `corpus.txt`) from `dir` against the schema
/// stored in `schema.txt`.
pub fn bridge_import(
    dir: &Path,
    which: BridgeFile,
    policy: &ParsePolicy,
    mode: NameMode,
) -> Result<(Dataset, Vec<RejectRecord>)> {
    let schema_path = dir.join(SCHEMA_FILE);
    let text = std::fs::read_to_string(&schema_path).map_err(|e| PrroError::io(&schema_path, e))?;
    let schema = SchemaSidecar::parse(&text)?
        .pinned_schema()?
        .ok_or_else(|| PrroError::Bridge(format!("{} does not list columns", schema_path.display())))?;
    let path = dir.join(which.file_name());
    if !path.is_file() {
        return Err(PrroError::Bridge(format!("corpus file {} not found", path.display())));
    }
    load_corpus(&path, &schema, policy, mode)
}

/// Runs `command <dir>`. The command string is split on whitespace; the
/// first word is the program.
pub fn run_bridge_command(command: &str, dir: &Path) -> Result<()> {
    let mut words = command.split_whitespace();
    let program = words
        .next()
        .ok_or_else(|| PrroError::Bridge("bridge command is empty".into()))?;
    let status = Command::new(program)
        .args(words)
        .arg(dir)
        .status()
        .map_err(|e| PrroError::Bridge(format!("could not start '{program}': {e}")))?;
    if !status.success() {
        return Err(PrroError::Bridge(format!("'{command}' exited with {status}")));
    }
    Ok(())
}

/// Bridge command from `PRRO_BRIDGE_CMD`, if set and non-empty.
pub fn bridge_command_from_env() -> Option<String> {
    std::env::var(BRIDGE_CMD_ENV).ok().filter(|s| !s.trim().is_empty())
}

/// Export, run the external tool, import its output.
pub fn run_bridge(
    dataset: &Dataset,
    dir: &Path,
    command: &str,
    policy: &ParsePolicy,
    mode: NameMode,
) -> Result<(Dataset, Vec<RejectRecord>)> {
    bridge_export(dataset, dir, None, mode)?;
    let generated: PathBuf = dir.join(GENERATED_FILE);
    if generated.exists() {
        std::fs::remove_file(&generated).map_err(|e| PrroError::io(&generated, e))?;
    }
    run_bridge_command(command, dir)?;
    bridge_import(dir, BridgeFile::Generated, policy, mode)
}
