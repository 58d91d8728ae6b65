use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Short content hash used in output metadata headers.
pub fn config_hash(serialized: &str) -> String {
    let digest = Sha256::digest(serialized.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..12].to_string()
}

/// Standard metadata comment placed at the top of every output file.
pub fn header(hash: &str) -> String {
    format!("pinn {TOOL_VERSION} config {hash}")
}
