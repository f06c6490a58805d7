//! Content hashes recorded in run and ensemble manifests.

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::ingest::{write_play_csv, PlayDataset};

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a dataset's canonical CSV form. Equal datasets hash equally
/// whatever file they were read from.
pub fn data_hash(ds: &PlayDataset) -> Result<String> {
    let mut buf = Vec::new();
    write_play_csv(ds, &mut buf)?;
    Ok(sha256_hex(&buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::test_support::dataset;

    #[test]
    fn known_digest_and_stability() {
        // Reference digest of "abc" from the SHA-2 test vectors.
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let a = dataset(&[2, 3]);
        assert_eq!(data_hash(&a).unwrap(), data_hash(&a.clone()).unwrap());
        assert_ne!(data_hash(&a).unwrap(), data_hash(&dataset(&[3, 2])).unwrap());
    }
}
