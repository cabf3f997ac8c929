//! Key material from the shared integer, and group agreement checks.

use std::collections::BTreeMap;

use hkdf::Hkdf;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

/// Fixed extract salt; the caller's label separates domains at expand time.
const SALT: &[u8] = b"wmac-keygen/derive-key/v1";

pub const DEFAULT_KEY_BITS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("secret must be at least 2")]
    SecretTooSmall,
    #[error("key length {0} bits is not a positive multiple of 8 up to {max}", max = 255 * 256)]
    InvalidLength(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivedKey {
    #[serde(with = "hex::serde")]
    pub bits: Vec<u8>,
    #[serde(with = "crate::serde_util::biguint_string")]
    pub source_secret: BigUint,
}

impl DerivedKey {
    pub fn len_bits(&self) -> usize {
        self.bits.len() * 8
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bits)
    }
}

/// HKDF-SHA256 over the big-endian bytes of `secret`, expanded with
/// `label` as the info string.
pub fn derive_key(
    secret: &BigUint,
    length_bits: usize,
    label: &[u8],
) -> Result<DerivedKey, KeyError> {
    if secret < &BigUint::from(2u32) {
        return Err(KeyError::SecretTooSmall);
    }
    if length_bits == 0 || !length_bits.is_multiple_of(8) || length_bits > 255 * 256 {
        return Err(KeyError::InvalidLength(length_bits));
    }
    let hk = Hkdf::<Sha256>::new(Some(SALT), &secret.to_bytes_be());
    let mut bits = vec![0u8; length_bits / 8];
    hk.expand(label, &mut bits)
        .expect("length checked against the HKDF limit");
    Ok(DerivedKey {
        bits,
        source_secret: secret.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAgreement {
    /// Every user recovered, and all recovered the same value.
    pub agreed: bool,
    /// Share of users holding the most common recovered value.
    pub agreeing_fraction: f64,
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub majority: Option<BigUint>,
}

/// Agreement over per-user results; `None` marks a failed user.
pub fn group_agreement(secrets: &[Option<BigUint>]) -> GroupAgreement {
    let mut counts: BTreeMap<&BigUint, usize> = BTreeMap::new();
    for s in secrets.iter().flatten() {
        *counts.entry(s).or_default() += 1;
    }
    // Ties go to the smallest value so the result is deterministic.
    let majority = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(s, &c)| ((*s).clone(), c));
    let (majority, count) = match majority {
        Some((s, c)) => (Some(s), c),
        None => (None, 0),
    };
    GroupAgreement {
        agreed: !secrets.is_empty() && count == secrets.len(),
        agreeing_fraction: if secrets.is_empty() {
            0.0
        } else {
            count as f64 / secrets.len() as f64
        },
        majority,
    }
}
