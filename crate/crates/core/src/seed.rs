//! Stage seed derivation.

use sha2::{Digest, Sha256};

/// Derives an independent seed for a named pipeline stage from one global seed.
///
/// The mapping is a truncated SHA-256 of the little-endian seed followed by the
/// stage name, so it is stable across platforms and releases.
pub fn stage_seed(global_seed: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Hex SHA-256 of a byte slice, used for dataset and input fingerprints.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
