use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Printed on stdout after every command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the arguments and every input file.
    pub inputs_digest: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub results: Value,
    pub artifacts: Vec<String>,
}

pub fn digest(args: &[String], inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0]);
    }
    for i in inputs {
        h.update((i.len() as u64).to_le_bytes());
        h.update(i);
    }
    format!("{:x}", h.finalize())
}
