//! Stable content fingerprints for artifacts and manifests.

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of raw bytes.
pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(out.len() * 2);
    for b in out {
        s.push_str(&format!("{:02x}", b));
    }
    s
}

/// Fingerprint of a sorted index list, used to prove train/test disjointness.
pub fn index_fingerprint(indices: &[usize]) -> String {
    let mut bytes = Vec::with_capacity(indices.len() * 8);
    for i in indices {
        bytes.extend_from_slice(&(*i as u64).to_le_bytes());
    }
    hex_digest(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(hex_digest(b"abc"), hex_digest(b"abc"));
        assert_ne!(hex_digest(b"abc"), hex_digest(b"abd"));
        assert_eq!(hex_digest(b"").len(), 64);
    }
}
