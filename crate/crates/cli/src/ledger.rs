//! Append-only run ledger, one JSON object per line.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const LEDGER_FILE: &str = "ledger.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    pub exit_code: i32,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn new_run_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

/// Append one record while holding an exclusive lock on the ledger file.
pub fn append(dir: &Path, record: &LedgerRecord) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut file = OpenOptions::new().create(true).append(true).open(dir.join(LEDGER_FILE))?;
    file.lock()?;
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let written = file.write_all(line.as_bytes()).and_then(|_| file.flush());
    file.unlock()?;
    written
}
