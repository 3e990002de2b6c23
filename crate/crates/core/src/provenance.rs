//! Reproducibility stanza stamped into every written artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub config_digest: String,
}

impl Provenance {
    /// `config` is hashed through its canonical JSON form.
    pub fn new<T: Serialize>(seed: u64, config: &T) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            config_digest: digest_json(config),
        }
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    digest_bytes(&bytes)
}
