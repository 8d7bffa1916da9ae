//! Concrete signature schemes.
//!
//! Three schemes register here:
//!
//! * `dilithium3` — the round-3 Dilithium3 parameterization. Its pk/sig
//!   lengths (1952/3293) are the constants the AUTH-1 wire formats are sized
//!   for.
//! * `ml-dsa-65` — ML-DSA-65 as standardized in FIPS 204 (sig 3309). Kept
//!   alongside dilithium3 because the two encodings are not interchangeable.
//! * `raccoon-sim` — a stand-in reproducing the Raccoon-128 wire geometry
//!   (pk 2256, sig 11524) over dilithium3 with verified zero padding. The
//!   masked Raccoon reference design is out of scope; this keeps AUTH-2 size
//!   accounting and tamper behavior real without claiming interoperability.
//!
//! All three sign deterministically, so a pinned-entropy transcript is
//! byte-reproducible.

use crystals_dilithium::{dilithium3, ml_dsa_65, RandomMode};
use rand_core::CryptoRng;
use zeroize::Zeroizing;

use super::{check_len, SigKeyPair, SignatureScheme, SuiteError, DILITHIUM3, ML_DSA_65, RACCOON_SIM};

pub(super) static DILITHIUM3_SCHEME: Dilithium3Scheme = Dilithium3Scheme;
pub(super) static ML_DSA_65_SCHEME: MlDsa65Scheme = MlDsa65Scheme;
pub(super) static RACCOON_SIM_SCHEME: RaccoonSimScheme = RaccoonSimScheme;

const KEYGEN_SEED_LEN: usize = 32;

fn draw_seed(rng: &mut dyn CryptoRng) -> Zeroizing<[u8; KEYGEN_SEED_LEN]> {
    let mut seed = Zeroizing::new([0u8; KEYGEN_SEED_LEN]);
    rng.fill_bytes(seed.as_mut());
    seed
}

pub(super) struct Dilithium3Scheme;

impl SignatureScheme for Dilithium3Scheme {
    fn name(&self) -> &'static str {
        DILITHIUM3
    }

    fn public_key_len(&self) -> usize {
        dilithium3::PUBLICKEYBYTES
    }

    fn secret_key_len(&self) -> usize {
        dilithium3::SECRETKEYBYTES
    }

    fn signature_len(&self) -> usize {
        dilithium3::SIGNBYTES
    }

    fn keygen(&self, rng: &mut dyn CryptoRng) -> SigKeyPair {
        let seed = draw_seed(rng);
        let kp = dilithium3::Keypair::generate(Some(seed.as_ref()))
            .expect("32-byte keygen seed is always valid");
        SigKeyPair {
            scheme: DILITHIUM3,
            public: kp.public.to_bytes().to_vec(),
            secret: Zeroizing::new(kp.secret.to_bytes().to_vec()),
        }
    }

    fn sign(&self, secret_key: &[u8], message: &[u8]) -> Result<Vec<u8>, SuiteError> {
        check_len(
            "signature secret key",
            dilithium3::SECRETKEYBYTES,
            secret_key.len(),
        )?;
        let sk = dilithium3::SecretKey::from_bytes(secret_key)
            .map_err(|_| SuiteError::InvalidKey)?;
        Ok(sk.sign(message).to_vec())
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if signature.len() != dilithium3::SIGNBYTES {
            return false;
        }
        match dilithium3::PublicKey::from_bytes(public_key) {
            Ok(pk) => pk.verify(message, signature),
            Err(_) => false,
        }
    }
}

pub(super) struct MlDsa65Scheme;

impl SignatureScheme for MlDsa65Scheme {
    fn name(&self) -> &'static str {
        ML_DSA_65
    }

    fn public_key_len(&self) -> usize {
        ml_dsa_65::PUBLICKEYBYTES
    }

    fn secret_key_len(&self) -> usize {
        ml_dsa_65::SECRETKEYBYTES
    }

    fn signature_len(&self) -> usize {
        ml_dsa_65::SIGNBYTES
    }

    fn keygen(&self, rng: &mut dyn CryptoRng) -> SigKeyPair {
        let seed = draw_seed(rng);
        let kp = ml_dsa_65::Keypair::generate(Some(seed.as_ref()))
            .expect("32-byte keygen seed is always valid");
        SigKeyPair {
            scheme: ML_DSA_65,
            public: kp.public.to_bytes().to_vec(),
            secret: Zeroizing::new(kp.secret.to_bytes().to_vec()),
        }
    }

    fn sign(&self, secret_key: &[u8], message: &[u8]) -> Result<Vec<u8>, SuiteError> {
        check_len(
            "signature secret key",
            ml_dsa_65::SECRETKEYBYTES,
            secret_key.len(),
        )?;
        let sk =
            ml_dsa_65::SecretKey::from_bytes(secret_key).map_err(|_| SuiteError::InvalidKey)?;
        sk.sign(message, None, RandomMode::Deterministic)
            .map(|s| s.to_vec())
            .ok_or(SuiteError::InvalidKey)
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if signature.len() != ml_dsa_65::SIGNBYTES {
            return false;
        }
        match ml_dsa_65::PublicKey::from_bytes(public_key) {
            Ok(pk) => pk.verify(message, signature, None),
            Err(_) => false,
        }
    }
}

/// Raccoon-128 wire geometry.
const RACCOON_PK_LEN: usize = 2256;
const RACCOON_SIG_LEN: usize = 11524;
const PK_PAD_LEN: usize = RACCOON_PK_LEN - dilithium3::PUBLICKEYBYTES;
const SIG_PAD_LEN: usize = RACCOON_SIG_LEN - dilithium3::SIGNBYTES;

pub(super) struct RaccoonSimScheme;

impl SignatureScheme for RaccoonSimScheme {
    fn name(&self) -> &'static str {
        RACCOON_SIM
    }

    fn public_key_len(&self) -> usize {
        RACCOON_PK_LEN
    }

    fn secret_key_len(&self) -> usize {
        dilithium3::SECRETKEYBYTES
    }

    fn signature_len(&self) -> usize {
        RACCOON_SIG_LEN
    }

    fn keygen(&self, rng: &mut dyn CryptoRng) -> SigKeyPair {
        let inner = DILITHIUM3_SCHEME.keygen(rng);
        let mut public = inner.public;
        public.extend(std::iter::repeat_n(0u8, PK_PAD_LEN));
        SigKeyPair {
            scheme: RACCOON_SIM,
            public,
            secret: inner.secret,
        }
    }

    fn sign(&self, secret_key: &[u8], message: &[u8]) -> Result<Vec<u8>, SuiteError> {
        let mut sig = DILITHIUM3_SCHEME.sign(secret_key, message)?;
        sig.extend(std::iter::repeat_n(0u8, SIG_PAD_LEN));
        Ok(sig)
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if public_key.len() != RACCOON_PK_LEN || signature.len() != RACCOON_SIG_LEN {
            return false;
        }
        // The padding is part of the signed artifact's encoding; any nonzero
        // byte there is a forgery attempt.
        let (pk, pk_pad) = public_key.split_at(dilithium3::PUBLICKEYBYTES);
        let (sig, sig_pad) = signature.split_at(dilithium3::SIGNBYTES);
        if pk_pad.iter().any(|b| *b != 0) || sig_pad.iter().any(|b| *b != 0) {
            return false;
        }
        DILITHIUM3_SCHEME.verify(pk, message, sig)
    }
}
