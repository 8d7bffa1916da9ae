//! Concrete KEMs: ML-KEM-768 (FIPS 203) and X25519 as a DHKEM.

use kem::{Decapsulate, Encapsulate, Kem, KeyExport};
use ml_kem::MlKem768;
use rand_core::CryptoRng;
use x25519_dalek::{PublicKey, StaticSecret};
use zeroize::Zeroizing;

use super::{check_len, KemKeyPair, KemScheme, SharedSecret, SuiteError, ML_KEM_768, X25519};

pub(super) static ML_KEM_768_SCHEME: MlKem768Scheme = MlKem768Scheme;
pub(super) static X25519_SCHEME: X25519Scheme = X25519Scheme;

const ML_KEM_768_PK_LEN: usize = 1184;
const ML_KEM_768_SK_LEN: usize = 2400;
const ML_KEM_768_CT_LEN: usize = 1088;

pub(super) struct MlKem768Scheme;

impl KemScheme for MlKem768Scheme {
    fn name(&self) -> &'static str {
        ML_KEM_768
    }

    fn public_key_len(&self) -> usize {
        ML_KEM_768_PK_LEN
    }

    fn secret_key_len(&self) -> usize {
        ML_KEM_768_SK_LEN
    }

    fn ciphertext_len(&self) -> usize {
        ML_KEM_768_CT_LEN
    }

    fn keygen(&self, rng: &mut dyn CryptoRng) -> KemKeyPair {
        let mut rng = rng;
        let (dk, ek) = MlKem768::generate_keypair_from_rng(&mut rng);
        // Secret keys are stored in the expanded FIPS 203 interchange form so
        // keystore files match the standard dk encoding.
        #[allow(deprecated)]
        let secret = {
            use ml_kem::ExpandedKeyEncoding as _;
            dk.to_expanded_bytes().to_vec()
        };
        KemKeyPair {
            scheme: ML_KEM_768,
            public: ek.to_bytes().to_vec(),
            secret: Zeroizing::new(secret),
        }
    }

    fn encaps(
        &self,
        receiver_pk: &[u8],
        rng: &mut dyn CryptoRng,
    ) -> Result<(Vec<u8>, SharedSecret), SuiteError> {
        check_len("kem public key", ML_KEM_768_PK_LEN, receiver_pk.len())?;
        let encoded =
            ml_kem::kem::Key::<ml_kem::EncapsulationKey<MlKem768>>::try_from(receiver_pk)
                .map_err(|_| SuiteError::InvalidKey)?;
        let ek = ml_kem::EncapsulationKey::<MlKem768>::new(&encoded)
            .map_err(|_| SuiteError::InvalidKey)?;
        let (ct, ss) = ek.encapsulate_with_rng(rng);
        Ok((ct.to_vec(), SharedSecret::new(ss.into())))
    }

    fn decaps(&self, receiver_sk: &[u8], ciphertext: &[u8]) -> Result<SharedSecret, SuiteError> {
        check_len("kem secret key", ML_KEM_768_SK_LEN, receiver_sk.len())?;
        check_len("kem ciphertext", ML_KEM_768_CT_LEN, ciphertext.len())?;
        #[allow(deprecated)]
        let dk = {
            use ml_kem::ExpandedKeyEncoding as _;
            let expanded = ml_kem::ExpandedDecapsulationKey::<MlKem768>::try_from(receiver_sk)
                .map_err(|_| SuiteError::InvalidKey)?;
            ml_kem::DecapsulationKey::<MlKem768>::from_expanded_bytes(&expanded)
                .map_err(|_| SuiteError::InvalidKey)?
        };
        // Implicit rejection: a malformed but well-sized ciphertext still
        // yields 32 pseudorandom bytes.
        let ss = dk
            .decapsulate_slice(ciphertext)
            .map_err(|_| SuiteError::LengthMismatch {
                what: "kem ciphertext",
                expected: ML_KEM_768_CT_LEN,
                got: ciphertext.len(),
            })?;
        Ok(SharedSecret::new(ss.into()))
    }
}

pub(super) struct X25519Scheme;

impl X25519Scheme {
    fn dh(secret: &StaticSecret, public: &PublicKey) -> Result<SharedSecret, SuiteError> {
        let shared = secret.diffie_hellman(public);
        // RFC 7748 guidance: reject the all-zero output of a low-order input.
        if !shared.was_contributory() {
            return Err(SuiteError::DecapsFailure);
        }
        Ok(SharedSecret::new(shared.to_bytes()))
    }
}

impl KemScheme for X25519Scheme {
    fn name(&self) -> &'static str {
        X25519
    }

    fn public_key_len(&self) -> usize {
        32
    }

    fn secret_key_len(&self) -> usize {
        32
    }

    fn ciphertext_len(&self) -> usize {
        32
    }

    fn keygen(&self, rng: &mut dyn CryptoRng) -> KemKeyPair {
        let secret = StaticSecret::random_from_rng(rng);
        let public = PublicKey::from(&secret);
        KemKeyPair {
            scheme: X25519,
            public: public.as_bytes().to_vec(),
            secret: Zeroizing::new(secret.to_bytes().to_vec()),
        }
    }

    fn encaps(
        &self,
        receiver_pk: &[u8],
        rng: &mut dyn CryptoRng,
    ) -> Result<(Vec<u8>, SharedSecret), SuiteError> {
        check_len("kem public key", 32, receiver_pk.len())?;
        let receiver = PublicKey::from(<[u8; 32]>::try_from(receiver_pk).expect("checked"));
        let eph = StaticSecret::random_from_rng(rng);
        // The ciphertext is the ephemeral public key.
        let ct = PublicKey::from(&eph).as_bytes().to_vec();
        let ss = Self::dh(&eph, &receiver)?;
        Ok((ct, ss))
    }

    fn decaps(&self, receiver_sk: &[u8], ciphertext: &[u8]) -> Result<SharedSecret, SuiteError> {
        check_len("kem secret key", 32, receiver_sk.len())?;
        check_len("kem ciphertext", 32, ciphertext.len())?;
        let secret = StaticSecret::from(<[u8; 32]>::try_from(receiver_sk).expect("checked"));
        let eph = PublicKey::from(<[u8; 32]>::try_from(ciphertext).expect("checked"));
        Self::dh(&secret, &eph)
    }
}
