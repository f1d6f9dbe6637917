//! Per-stage seeds.
//!
//! The seed of repetition `rep` of a stage is the first eight bytes, read little-endian,
//! of `SHA-256(master.to_le_bytes() ‖ stage name ‖ rep.to_le_bytes())`.

use sha2::{Digest, Sha256};

pub const RULE: &str = "u64_le(sha256(master_le8 || stage_utf8 || rep_le8)[0..8])";

pub fn derive(master: u64, stage: &str, rep: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    h.update(rep.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
