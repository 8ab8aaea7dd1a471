// SPDX-License-Identifier: Apache-2.0

//! API key tokens.
//!
//! A token reads `<key_id>.<secret>`. Only the key id is stored in clear; the
//! secret is kept as SHA-256 over a per-key random salt followed by the
//! secret, and compared in constant time.

use chrono::Utc;
use rand::RngCore;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use arbohub_core::domain::ApiKey;

pub const HEADER: &str = "x-api-key";

const KEY_ID_BYTES: usize = 6;
const SECRET_BYTES: usize = 32;
const SALT_BYTES: usize = 16;

fn random_hex(n: usize) -> String {
    let mut buf = vec![0u8; n];
    rand::rng().fill_bytes(&mut buf);
    hex::encode(buf)
}

fn digest(salt: &[u8], secret: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(secret.as_bytes());
    h.finalize().into()
}

/// A freshly minted key: the stored record and the token shown once.
#[derive(Debug, Clone)]
pub struct MintedKey {
    pub record: ApiKey,
    pub token: String,
}

pub fn mint(account: u64) -> MintedKey {
    let key_id = random_hex(KEY_ID_BYTES);
    let secret = random_hex(SECRET_BYTES);
    let salt = random_hex(SALT_BYTES);
    let hash = hex::encode(digest(&hex::decode(&salt).expect("hex"), &secret));
    MintedKey {
        token: format!("{key_id}.{secret}"),
        record: ApiKey {
            key_id,
            account,
            salt,
            hash,
            created_at: Utc::now(),
            active: true,
        },
    }
}

/// Splits a token into key id and secret, if it is shaped like one.
pub fn split(token: &str) -> Option<(&str, &str)> {
    let (id, secret) = token.trim().split_once('.')?;
    let ok = id.len() == 2 * KEY_ID_BYTES
        && secret.len() == 2 * SECRET_BYTES
        && id.bytes().chain(secret.bytes()).all(|b| b.is_ascii_hexdigit());
    ok.then_some((id, secret))
}

/// True when `secret` matches the stored hash. Inactive keys never match.
pub fn verify(key: &ApiKey, secret: &str) -> bool {
    let (Ok(salt), Ok(stored)) = (hex::decode(&key.salt), hex::decode(&key.hash)) else {
        return false;
    };
    let computed = digest(&salt, secret);
    key.active && bool::from(computed.as_slice().ct_eq(stored.as_slice()))
}
