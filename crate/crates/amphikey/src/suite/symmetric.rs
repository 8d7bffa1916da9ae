//! Symmetric primitives: Ascon-128a AEAD, HKDF-SHA-256, HMAC-SHA-256.

use ascon_aead::aead::{Aead, KeyInit as AeadKeyInit, Payload};
use ascon_aead::Ascon128a;
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::digest::KeyInit;
use sha2::Sha256;

use super::{check_len, SuiteError};

/// Ascon-128a key length.
pub const AEAD_KEY_LEN: usize = 16;
/// Ascon-128a nonce length.
pub const AEAD_NONCE_LEN: usize = 16;
/// Ascon-128a tag length.
pub const AEAD_TAG_LEN: usize = 16;
/// HMAC-SHA-256 output length.
pub const MAC_LEN: usize = 32;
/// HKDF-SHA-256 output bound (255 blocks of 32 bytes).
pub const HKDF_MAX_OUT_LEN: usize = 255 * 32;

/// Seal `plaintext` under Ascon-128a, returning ciphertext || tag.
pub fn aead_seal(
    key: &[u8],
    nonce: &[u8],
    aad: &[u8],
    plaintext: &[u8],
) -> Result<Vec<u8>, SuiteError> {
    let (key, nonce) = aead_params(key, nonce)?;
    let cipher = <Ascon128a as AeadKeyInit>::new(key.into());
    cipher
        .encrypt(
            nonce.into(),
            Payload {
                msg: plaintext,
                aad,
            },
        )
        .map_err(|_| SuiteError::AuthFailure)
}

/// Open an Ascon-128a ciphertext || tag. Any modification of the ciphertext,
/// tag, nonce, or associated data rejects.
pub fn aead_open(
    key: &[u8],
    nonce: &[u8],
    aad: &[u8],
    ciphertext: &[u8],
) -> Result<Vec<u8>, SuiteError> {
    let (key, nonce) = aead_params(key, nonce)?;
    if ciphertext.len() < AEAD_TAG_LEN {
        return Err(SuiteError::AuthFailure);
    }
    let cipher = <Ascon128a as AeadKeyInit>::new(key.into());
    cipher
        .decrypt(
            nonce.into(),
            Payload {
                msg: ciphertext,
                aad,
            },
        )
        .map_err(|_| SuiteError::AuthFailure)
}

fn aead_params<'a>(key: &'a [u8], nonce: &'a [u8]) -> Result<(&'a [u8; 16], &'a [u8; 16]), SuiteError> {
    check_len("aead key", AEAD_KEY_LEN, key.len())?;
    check_len("aead nonce", AEAD_NONCE_LEN, nonce.len())?;
    Ok((
        key.try_into().expect("checked"),
        nonce.try_into().expect("checked"),
    ))
}

/// HKDF-SHA-256 extract-then-expand.
///
/// An empty `salt` means the RFC 5869 default (a hash-length block of
/// zeros). `info` carries the domain-separation label.
pub fn kdf_extract_expand(
    ikm: &[u8],
    salt: &[u8],
    info: &[u8],
    out_len: usize,
) -> Result<Vec<u8>, SuiteError> {
    if out_len > HKDF_MAX_OUT_LEN {
        return Err(SuiteError::OutLenTooLarge {
            requested: out_len,
            max: HKDF_MAX_OUT_LEN,
        });
    }
    let salt = if salt.is_empty() { None } else { Some(salt) };
    let hk = Hkdf::<Sha256>::new(salt, ikm);
    let mut okm = vec![0u8; out_len];
    hk.expand(info, &mut okm)
        .map_err(|_| SuiteError::OutLenTooLarge {
            requested: out_len,
            max: HKDF_MAX_OUT_LEN,
        })?;
    Ok(okm)
}

/// HMAC-SHA-256 over `message`, keyed with `key`. Always 32 bytes.
pub fn mac(key: &[u8], message: &[u8]) -> [u8; MAC_LEN] {
    let mut m = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
    m.update(message);
    m.finalize().into_bytes().into()
}
