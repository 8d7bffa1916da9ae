//! The two authenticated-KEM combiners and the receiver-side transcript
//! forger.
//!
//! Both modes encapsulate twice — once to the receiver's ML-KEM-768 key,
//! once to its X25519 key — and differ only in how the combined ciphertext
//! `c = c1 || c2` is authenticated:
//!
//! * **Authenticated Mode**: the sender signs `c` with its long-term key and
//!   the shared secret binds everything:
//!   `k_sh = HKDF(k1 || k2 || c || sig || k_pub_r || k_pub_s)`.
//! * **Deniable Mode**: a nonce `n = HKDF(k1 || k2)[0..16]` and an
//!   authentication key `k_auth = HKDF(k1 || c1 || n)` feed an HMAC tag over
//!   `c`. The shared secret `k_sh = HKDF(k1 || k2 || c || n || k_pub_r)`
//!   deliberately omits the sender's public key: anyone able to compute
//!   `k_auth` (sender or receiver) could have produced the transcript.
//!
//! [`forge_transcript`] is the deniability argument made executable: the
//! receiver recomputes `k1`, `k2` by decapsulating with its own secret keys
//! and emits the exact tag an honest sender would have produced.
//!
//! Every HKDF invocation uses an empty salt and a distinct ASCII info label,
//! so no two derivations can collide.

use rand_core::CryptoRng;
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::Zeroizing;

use crate::suite::{
    kdf_extract_expand, mac, KemKeyPair, SharedSecret, SuiteDescriptor, SuiteError, MAC_LEN,
};

/// Domain label for the Authenticated Mode shared secret.
const INFO_AUTH_KSH: &[u8] = b"amphikey/v1/auth/ksh";
/// Domain label for the Deniable Mode session nonce.
const INFO_DEN_NONCE: &[u8] = b"amphikey/v1/den/nonce";
/// Domain label for the Deniable Mode authentication key.
const INFO_DEN_KAUTH: &[u8] = b"amphikey/v1/den/kauth";
/// Domain label for the Deniable Mode shared secret.
const INFO_DEN_KSH: &[u8] = b"amphikey/v1/den/ksh";

/// Deniable Mode session nonce length.
pub const NONCE_LEN: usize = 16;
/// AKEM tag length (HMAC-SHA-256 output).
pub const TAG_LEN: usize = MAC_LEN;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AkemError {
    /// Authenticated Mode reject: signature verification failed or the
    /// payload does not parse against the Auth-Mode layout.
    #[error("not valid")]
    NotValid,
    /// Deniable Mode reject. Tag mismatch, KEM failure, and parse failure
    /// collapse into this one variant so the caller cannot be used as a
    /// decapsulation oracle.
    #[error("invalid")]
    Invalid,
    /// X25519 produced an all-zero shared secret.
    #[error("key encapsulation failure")]
    DecapsFailure,
    /// The signature scheme produced more bytes than the suite declares.
    #[error("signature length {len} exceeds declared maximum {max}")]
    SignatureTooLarge { len: usize, max: usize },
    /// Authenticated Mode requires the sender's signature public key.
    #[error("sender bundle carries no signature public key")]
    MissingSignatureKey,
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

/// A party's public material: the two KEM keys, plus the signature key when
/// the party authenticates with signatures.
///
/// Serialization is the plain concatenation `kem1_pk || kem2_pk [|| sig_pk]`
/// with no internal framing; full bundles measure 1216 (Deniable), 3168
/// (AUTH-1), or 3472 (AUTH-2) bytes. In the handshake the client never
/// contributes KEM keys of its own, so its bundle carries empty KEM fields
/// and serializes to just the signature public key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AkemPublicKey {
    pub kem1_pk: Vec<u8>,
    pub kem2_pk: Vec<u8>,
    pub sig_pk: Option<Vec<u8>>,
}

impl AkemPublicKey {
    pub fn new(kem1_pk: Vec<u8>, kem2_pk: Vec<u8>, sig_pk: Option<Vec<u8>>) -> Self {
        Self {
            kem1_pk,
            kem2_pk,
            sig_pk,
        }
    }

    /// A sender bundle holding only a signature public key.
    pub fn signature_only(sig_pk: Vec<u8>) -> Self {
        Self {
            kem1_pk: Vec::new(),
            kem2_pk: Vec::new(),
            sig_pk: Some(sig_pk),
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            self.kem1_pk.len() + self.kem2_pk.len() + self.sig_pk.as_ref().map_or(0, Vec::len),
        );
        out.extend_from_slice(&self.kem1_pk);
        out.extend_from_slice(&self.kem2_pk);
        if let Some(sig) = &self.sig_pk {
            out.extend_from_slice(sig);
        }
        out
    }

    /// Parse a full bundle laid out for `suite`. `with_sig` selects whether a
    /// trailing signature public key is expected.
    pub fn parse(suite: &SuiteDescriptor, with_sig: bool, bytes: &[u8]) -> Result<Self, AkemError> {
        let s = &suite.sizes;
        let want = s.kem1_pk + s.kem2_pk + if with_sig { s.sig_pk } else { 0 };
        if bytes.len() != want {
            return Err(AkemError::Suite(SuiteError::LengthMismatch {
                what: "public key bundle",
                expected: want,
                got: bytes.len(),
            }));
        }
        let (kem1, rest) = bytes.split_at(s.kem1_pk);
        let (kem2, sig) = rest.split_at(s.kem2_pk);
        Ok(Self {
            kem1_pk: kem1.to_vec(),
            kem2_pk: kem2.to_vec(),
            sig_pk: with_sig.then(|| sig.to_vec()),
        })
    }

    fn expect_kem_keys(&self, suite: &SuiteDescriptor) -> Result<(), AkemError> {
        crate::suite::check_len("kem1 public key", suite.sizes.kem1_pk, self.kem1_pk.len())?;
        crate::suite::check_len("kem2 public key", suite.sizes.kem2_pk, self.kem2_pk.len())?;
        Ok(())
    }
}

/// The receiver's KEM secret keys for one session.
pub struct AkemSecretKeys {
    pub kem1: KemKeyPair,
    pub kem2: KemKeyPair,
}

impl AkemSecretKeys {
    /// Generate fresh ephemeral key pairs for both KEMs.
    pub fn generate(suite: &SuiteDescriptor, rng: &mut dyn CryptoRng) -> Self {
        Self {
            kem1: suite.kem1().keygen(rng),
            kem2: suite.kem2().keygen(rng),
        }
    }

    /// The public bundle corresponding to these secrets.
    pub fn public_bundle(&self) -> AkemPublicKey {
        AkemPublicKey::new(self.kem1.public.clone(), self.kem2.public.clone(), None)
    }
}

/// The authenticator carried in an [`AkemPayload`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AkemAuth {
    Signature(Vec<u8>),
    Tag([u8; TAG_LEN]),
}

/// The combined handshake payload: `c1 || c2 || (signature | tag)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AkemPayload {
    pub c1: Vec<u8>,
    pub c2: Vec<u8>,
    pub auth: AkemAuth,
}

impl AkemPayload {
    /// The combined ciphertext `c = c1 || c2` the authenticator covers.
    pub fn combined_ciphertext(&self) -> Vec<u8> {
        let mut c = Vec::with_capacity(self.c1.len() + self.c2.len());
        c.extend_from_slice(&self.c1);
        c.extend_from_slice(&self.c2);
        c
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = self.combined_ciphertext();
        match &self.auth {
            AkemAuth::Signature(sig) => out.extend_from_slice(sig),
            AkemAuth::Tag(tag) => out.extend_from_slice(tag),
        }
        out
    }

    /// Parse a payload laid out for `suite`. The length must match the
    /// suite's declared payload size exactly.
    pub fn parse(suite: &SuiteDescriptor, bytes: &[u8]) -> Result<Self, AkemError> {
        let s = &suite.sizes;
        if bytes.len() != suite.payload_len() {
            return Err(if suite.is_authenticated() {
                AkemError::NotValid
            } else {
                AkemError::Invalid
            });
        }
        let (c1, rest) = bytes.split_at(s.kem1_ct);
        let (c2, auth) = rest.split_at(s.kem2_ct);
        let auth = if suite.is_authenticated() {
            AkemAuth::Signature(auth.to_vec())
        } else {
            AkemAuth::Tag(auth.try_into().expect("tag length checked via payload_len"))
        };
        Ok(Self {
            c1: c1.to_vec(),
            c2: c2.to_vec(),
            auth,
        })
    }
}

/// Per-session secret material. Never serialized; zeroized on drop.
pub struct SessionSecrets {
    k1: SharedSecret,
    k2: SharedSecret,
    n: Option<[u8; NONCE_LEN]>,
    k_auth: Option<Zeroizing<[u8; 32]>>,
    k_sh: Zeroizing<[u8; 32]>,
}

impl SessionSecrets {
    pub fn k_sh(&self) -> &[u8; 32] {
        &self.k_sh
    }

    pub fn k1(&self) -> &SharedSecret {
        &self.k1
    }

    pub fn k2(&self) -> &SharedSecret {
        &self.k2
    }

    /// Deniable Mode session nonce (`None` in Authenticated Mode).
    pub fn nonce(&self) -> Option<&[u8; NONCE_LEN]> {
        self.n.as_ref()
    }

    /// Deniable Mode authentication key (`None` in Authenticated Mode).
    pub fn k_auth(&self) -> Option<&[u8; 32]> {
        self.k_auth.as_deref()
    }
}

impl core::fmt::Debug for SessionSecrets {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "SessionSecrets(..)")
    }
}

/// Observability hook for the fail-fast contract: callers can confirm that
/// no KEM decapsulation runs when signature verification already failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecapsTrace {
    pub signature_checked: bool,
    pub signature_ok: bool,
    pub kem_decaps_attempted: u32,
}

fn derive_32(ikm: &[u8], info: &[u8]) -> Zeroizing<[u8; 32]> {
    let out = kdf_extract_expand(ikm, b"", info, 32).expect("32 <= kdf bound");
    Zeroizing::new(out.as_slice().try_into().expect("requested 32 bytes"))
}

fn auth_ksh_ikm(
    k1: &SharedSecret,
    k2: &SharedSecret,
    c: &[u8],
    sig: &[u8],
    receiver_pub: &[u8],
    sender_pub: &[u8],
) -> Zeroizing<Vec<u8>> {
    // Public keys enter in the fixed canonical order receiver || sender on
    // both sides of the exchange.
    let mut ikm = Zeroizing::new(Vec::with_capacity(
        64 + c.len() + sig.len() + receiver_pub.len() + sender_pub.len(),
    ));
    ikm.extend_from_slice(k1.as_bytes());
    ikm.extend_from_slice(k2.as_bytes());
    ikm.extend_from_slice(c);
    ikm.extend_from_slice(sig);
    ikm.extend_from_slice(receiver_pub);
    ikm.extend_from_slice(sender_pub);
    ikm
}

fn den_ksh_ikm(
    k1: &SharedSecret,
    k2: &SharedSecret,
    c: &[u8],
    n: &[u8; NONCE_LEN],
    receiver_pub: &[u8],
) -> Zeroizing<Vec<u8>> {
    // k_pub_s is deliberately absent: binding the sender here would destroy
    // deniability.
    let mut ikm = Zeroizing::new(Vec::with_capacity(64 + c.len() + NONCE_LEN + receiver_pub.len()));
    ikm.extend_from_slice(k1.as_bytes());
    ikm.extend_from_slice(k2.as_bytes());
    ikm.extend_from_slice(c);
    ikm.extend_from_slice(n);
    ikm.extend_from_slice(receiver_pub);
    ikm
}

/// Deniable Mode nonce, authentication key, and tag, as computable by either
/// party holding `k1`, `k2`.
fn den_auth_chain(
    k1: &SharedSecret,
    k2: &SharedSecret,
    c1: &[u8],
    c: &[u8],
) -> ([u8; NONCE_LEN], Zeroizing<[u8; 32]>, [u8; TAG_LEN]) {
    let mut nonce_ikm = Zeroizing::new(Vec::with_capacity(64));
    nonce_ikm.extend_from_slice(k1.as_bytes());
    nonce_ikm.extend_from_slice(k2.as_bytes());
    let n_full = kdf_extract_expand(&nonce_ikm, b"", INFO_DEN_NONCE, NONCE_LEN)
        .expect("16 <= kdf bound");
    let n: [u8; NONCE_LEN] = n_full.as_slice().try_into().expect("requested 16 bytes");

    let mut kauth_ikm = Zeroizing::new(Vec::with_capacity(32 + c1.len() + NONCE_LEN));
    kauth_ikm.extend_from_slice(k1.as_bytes());
    kauth_ikm.extend_from_slice(c1);
    kauth_ikm.extend_from_slice(&n);
    let k_auth = derive_32(&kauth_ikm, INFO_DEN_KAUTH);

    let tag = mac(k_auth.as_ref(), c);
    (n, k_auth, tag)
}

/// Authenticated Mode encapsulation.
///
/// Encapsulates to both receiver KEM keys, signs `c = c1 || c2` with the
/// sender's long-term key, and derives the shared secret over the full
/// transcript. Fresh ephemerals are drawn from `rng` on every call.
pub fn auth_encaps(
    suite: &SuiteDescriptor,
    sender_sig_sk: &[u8],
    sender_pub: &AkemPublicKey,
    receiver_pub: &AkemPublicKey,
    rng: &mut dyn CryptoRng,
) -> Result<(AkemPayload, SessionSecrets), AkemError> {
    let sig_scheme = suite.sig().ok_or(AkemError::MissingSignatureKey)?;
    receiver_pub.expect_kem_keys(suite)?;

    let (c1, k1) = suite.kem1().encaps(&receiver_pub.kem1_pk, rng)?;
    let (c2, k2) = suite.kem2().encaps(&receiver_pub.kem2_pk, rng)?;

    let mut c = Vec::with_capacity(c1.len() + c2.len());
    c.extend_from_slice(&c1);
    c.extend_from_slice(&c2);

    let sig = sig_scheme.sign(sender_sig_sk, &c)?;
    if sig.len() > suite.sizes.sig_max {
        return Err(AkemError::SignatureTooLarge {
            len: sig.len(),
            max: suite.sizes.sig_max,
        });
    }

    let ikm = auth_ksh_ikm(
        &k1,
        &k2,
        &c,
        &sig,
        &receiver_pub.serialize(),
        &sender_pub.serialize(),
    );
    let k_sh = derive_32(&ikm, INFO_AUTH_KSH);

    let payload = AkemPayload {
        c1,
        c2,
        auth: AkemAuth::Signature(sig),
    };
    let secrets = SessionSecrets {
        k1,
        k2,
        n: None,
        k_auth: None,
        k_sh,
    };
    Ok((payload, secrets))
}

/// Authenticated Mode decapsulation.
///
/// Signature verification runs before any KEM decapsulation; invalid inputs
/// never reach the lattice arithmetic.
pub fn auth_decaps(
    suite: &SuiteDescriptor,
    receiver_keys: &AkemSecretKeys,
    sender_pub: &AkemPublicKey,
    payload: &AkemPayload,
) -> Result<SessionSecrets, AkemError> {
    auth_decaps_traced(suite, receiver_keys, sender_pub, payload).0
}

/// [`auth_decaps`] with an execution trace for fail-fast verification.
pub fn auth_decaps_traced(
    suite: &SuiteDescriptor,
    receiver_keys: &AkemSecretKeys,
    sender_pub: &AkemPublicKey,
    payload: &AkemPayload,
) -> (Result<SessionSecrets, AkemError>, DecapsTrace) {
    let mut trace = DecapsTrace::default();
    let result = (|| {
        let sig_scheme = suite.sig().ok_or(AkemError::MissingSignatureKey)?;
        let sender_sig_pk = sender_pub
            .sig_pk
            .as_deref()
            .ok_or(AkemError::MissingSignatureKey)?;

        let sig = match &payload.auth {
            AkemAuth::Signature(sig) => sig.as_slice(),
            AkemAuth::Tag(_) => return Err(AkemError::NotValid),
        };
        if payload.c1.len() != suite.sizes.kem1_ct || payload.c2.len() != suite.sizes.kem2_ct {
            return Err(AkemError::NotValid);
        }

        let c = payload.combined_ciphertext();
        trace.signature_checked = true;
        trace.signature_ok = sig_scheme.verify(sender_sig_pk, &c, sig);
        if !trace.signature_ok {
            return Err(AkemError::NotValid);
        }

        trace.kem_decaps_attempted += 1;
        let k1 = suite
            .kem1()
            .decaps(receiver_keys.kem1.secret_bytes(), &payload.c1)?;
        trace.kem_decaps_attempted += 1;
        let k2 = match suite
            .kem2()
            .decaps(receiver_keys.kem2.secret_bytes(), &payload.c2)
        {
            Ok(k2) => k2,
            Err(SuiteError::DecapsFailure) => return Err(AkemError::DecapsFailure),
            Err(e) => return Err(e.into()),
        };

        let receiver_ser = receiver_keys.public_bundle().serialize();
        let ikm = auth_ksh_ikm(&k1, &k2, &c, sig, &receiver_ser, &sender_pub.serialize());
        let k_sh = derive_32(&ikm, INFO_AUTH_KSH);
        Ok(SessionSecrets {
            k1,
            k2,
            n: None,
            k_auth: None,
            k_sh,
        })
    })();
    (result, trace)
}

/// Deniable Mode encapsulation. No long-term key material is involved.
pub fn den_encaps(
    suite: &SuiteDescriptor,
    receiver_pub: &AkemPublicKey,
    rng: &mut dyn CryptoRng,
) -> Result<(AkemPayload, SessionSecrets), AkemError> {
    receiver_pub.expect_kem_keys(suite)?;
    let (c1, k1) = suite.kem1().encaps(&receiver_pub.kem1_pk, rng)?;
    let (c2, k2) = suite.kem2().encaps(&receiver_pub.kem2_pk, rng)?;

    let mut c = Vec::with_capacity(c1.len() + c2.len());
    c.extend_from_slice(&c1);
    c.extend_from_slice(&c2);

    let (n, k_auth, tag) = den_auth_chain(&k1, &k2, &c1, &c);
    let ikm = den_ksh_ikm(&k1, &k2, &c, &n, &receiver_pub.serialize());
    let k_sh = derive_32(&ikm, INFO_DEN_KSH);

    let payload = AkemPayload {
        c1,
        c2,
        auth: AkemAuth::Tag(tag),
    };
    let secrets = SessionSecrets {
        k1,
        k2,
        n: Some(n),
        k_auth: Some(k_auth),
        k_sh,
    };
    Ok((payload, secrets))
}

/// Deniable Mode decapsulation.
///
/// Recomputes `n` and `k_auth` from the decapsulated secrets and compares
/// the tag in constant time. Every failure cause collapses into
/// [`AkemError::Invalid`].
pub fn den_decaps(
    suite: &SuiteDescriptor,
    receiver_keys: &AkemSecretKeys,
    _sender_pub: &AkemPublicKey,
    payload: &AkemPayload,
) -> Result<SessionSecrets, AkemError> {
    let tag = match &payload.auth {
        AkemAuth::Tag(tag) => *tag,
        AkemAuth::Signature(_) => return Err(AkemError::Invalid),
    };
    if payload.c1.len() != suite.sizes.kem1_ct || payload.c2.len() != suite.sizes.kem2_ct {
        return Err(AkemError::Invalid);
    }
    let c = payload.combined_ciphertext();
    let secrets = den_open(suite, receiver_keys, &payload.c1, &c).map_err(|_| AkemError::Invalid)?;

    let expected = mac(
        secrets.k_auth.as_deref().expect("deniable chain sets k_auth"),
        &c,
    );
    if expected.ct_eq(&tag).into() {
        Ok(secrets)
    } else {
        Err(AkemError::Invalid)
    }
}

/// Decapsulate and run the deniable derivation chain over `c`.
fn den_open(
    suite: &SuiteDescriptor,
    receiver_keys: &AkemSecretKeys,
    c1: &[u8],
    c: &[u8],
) -> Result<SessionSecrets, AkemError> {
    let k1 = suite.kem1().decaps(receiver_keys.kem1.secret_bytes(), c1)?;
    let c2 = &c[c1.len()..];
    let k2 = suite.kem2().decaps(receiver_keys.kem2.secret_bytes(), c2)?;

    let (n, k_auth, _tag) = den_auth_chain(&k1, &k2, c1, c);
    let receiver_ser = receiver_keys.public_bundle().serialize();
    let ikm = den_ksh_ikm(&k1, &k2, c, &n, &receiver_ser);
    let k_sh = derive_32(&ikm, INFO_DEN_KSH);
    Ok(SessionSecrets {
        k1,
        k2,
        n: Some(n),
        k_auth: Some(k_auth),
        k_sh,
    })
}

/// The deniability simulator: the receiver fabricates a tag for any combined
/// ciphertext `c` using nothing but its own KEM secret keys.
///
/// For a `c` produced by an honest sender the forged tag is bit-identical to
/// the honest one — the tag is a deterministic function of `(k1, k2, c)`
/// that both parties can compute.
pub fn forge_transcript(
    suite: &SuiteDescriptor,
    receiver_keys: &AkemSecretKeys,
    _sender_pub: &AkemPublicKey,
    c: &[u8],
) -> Result<([u8; TAG_LEN], SessionSecrets), AkemError> {
    let s = &suite.sizes;
    if c.len() != s.kem1_ct + s.kem2_ct {
        return Err(AkemError::Invalid);
    }
    let c1 = &c[..s.kem1_ct];
    let secrets = den_open(suite, receiver_keys, c1, c).map_err(|_| AkemError::Invalid)?;
    let tag = mac(
        secrets.k_auth.as_deref().expect("deniable chain sets k_auth"),
        c,
    );
    Ok((tag, secrets))
}
