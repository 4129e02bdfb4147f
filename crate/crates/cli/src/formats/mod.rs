//! On-disk formats. Word indices in every file are 0-based.

pub mod artifacts;
pub mod corpus;

use sha2::{Digest, Sha256};

pub use artifacts::*;
pub use corpus::{read_corpus, to_binary, write_text};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<S: serde::Serialize>(value: &S) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}
