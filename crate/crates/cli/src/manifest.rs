use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub params: serde_json::Value,
    pub threads: Option<usize>,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs.
    pub timestamp: u64,
    /// `sha256:<hex>` of the raw input file, when there is one.
    pub input_digest: Option<String>,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &'static str, params: &P, threads: Option<usize>, input: Option<&[u8]>) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            params: serde_json::to_value(params).expect("argument structs serialize"),
            threads,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            input_digest: input.map(digest),
        }
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}
