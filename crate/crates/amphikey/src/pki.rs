//! Long-term signature keys, certificates, and the on-disk keystore.
//!
//! Certificates are a flat binary structure (no ASN.1) binding a subject
//! identity to a long-term signature public key:
//!
//! ```text
//! "AMPHCERT1" || u8 subject_len || subject || suite_id ||
//! u16 pk_len || sig_pk || u64 not_before || u64 not_after ||
//! u16 sig_len || ca_signature
//! ```
//!
//! The CA signature covers every preceding byte. The CA signs with the
//! suite's own signature scheme unless configured otherwise. Time is always
//! injected by the caller; nothing here reads a clock.
//!
//! The keystore is a flat directory: `ca.pk` / `ca.sk` for the authority,
//! `<name>.sigsk` / `<name>.sigpk` / `<name>.cert` per subject. Secret-key
//! files are created with owner-only permissions. Ephemeral KEM keys are
//! never persisted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand_core::CryptoRng;
use thiserror::Error;

use crate::suite::{sig_keygen, signature_scheme, suite_by_id, SigKeyPair, SuiteError};

/// Certificate header magic.
pub const CERT_MAGIC: &[u8; 9] = b"AMPHCERT1";
/// Key file magic.
pub const KEY_MAGIC: &[u8; 8] = b"AMPHKEY1";
/// Longest permitted subject, in bytes.
pub const MAX_SUBJECT_LEN: usize = 255;

/// Environment variable overriding the default key directory.
pub const HOME_ENV: &str = "AMPHIKEY_HOME";

#[derive(Debug, Error)]
pub enum PkiError {
    #[error("subject must be 1..={MAX_SUBJECT_LEN} bytes, got {0}")]
    SubjectTooLong(usize),
    #[error("certificate validity window is empty")]
    EmptyValidity,
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error("refusing to overwrite {0}")]
    WouldOverwrite(PathBuf),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Binds a subject identity to its long-term signature public key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub subject: String,
    pub suite_id: u8,
    pub sig_pk: Vec<u8>,
    pub not_before: u64,
    pub not_after: u64,
    pub ca_signature: Vec<u8>,
}

impl Certificate {
    /// The signed region: every field up to and excluding the CA signature.
    fn preamble(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            CERT_MAGIC.len() + 1 + self.subject.len() + 1 + 2 + self.sig_pk.len() + 16,
        );
        out.extend_from_slice(CERT_MAGIC);
        out.push(self.subject.len() as u8);
        out.extend_from_slice(self.subject.as_bytes());
        out.push(self.suite_id);
        out.extend_from_slice(&(self.sig_pk.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.sig_pk);
        out.extend_from_slice(&self.not_before.to_be_bytes());
        out.extend_from_slice(&self.not_after.to_be_bytes());
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.preamble();
        out.extend_from_slice(&(self.ca_signature.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.ca_signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PkiError> {
        let mut cur = Cursor::new(bytes);
        let magic = cur.take(CERT_MAGIC.len())?;
        if magic != CERT_MAGIC {
            return Err(PkiError::Malformed("certificate magic"));
        }
        let subject_len = cur.take_u8()? as usize;
        let subject = core::str::from_utf8(cur.take(subject_len)?)
            .map_err(|_| PkiError::Malformed("certificate subject"))?
            .to_string();
        let suite_id = cur.take_u8()?;
        let pk_len = cur.take_u16()? as usize;
        let sig_pk = cur.take(pk_len)?.to_vec();
        let not_before = cur.take_u64()?;
        let not_after = cur.take_u64()?;
        let sig_len = cur.take_u16()? as usize;
        let ca_signature = cur.take(sig_len)?.to_vec();
        if !cur.is_empty() {
            return Err(PkiError::Malformed("certificate trailer"));
        }
        Ok(Self {
            subject,
            suite_id,
            sig_pk,
            not_before,
            not_after,
            ca_signature,
        })
    }
}

/// Why a certificate was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    BadSignature,
    Expired,
    NotYetValid,
    SuiteMismatch,
    Malformed,
}

/// Outcome of [`verify_cert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertVerdict {
    Accept,
    Reject(RejectReason),
}

impl CertVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, CertVerdict::Accept)
    }
}

/// Issue a certificate over `subject_sig_pk`, signed with the CA secret key.
///
/// The CA signs with the suite's signature scheme; `validity` is the
/// `(not_before, not_after)` window in unix seconds.
pub fn issue_cert(
    ca_sk: &[u8],
    subject: &str,
    suite_id: u8,
    subject_sig_pk: &[u8],
    validity: (u64, u64),
) -> Result<Certificate, PkiError> {
    if subject.is_empty() || subject.len() > MAX_SUBJECT_LEN {
        return Err(PkiError::SubjectTooLong(subject.len()));
    }
    let (not_before, not_after) = validity;
    if not_before >= not_after {
        return Err(PkiError::EmptyValidity);
    }
    let suite = suite_by_id(suite_id)?;
    let scheme = suite
        .sig()
        .ok_or(SuiteError::UnknownScheme("suite has no signature scheme".into()))?;
    crate::suite::check_len(
        "subject signature public key",
        scheme.public_key_len(),
        subject_sig_pk.len(),
    )?;

    let mut cert = Certificate {
        subject: subject.to_string(),
        suite_id,
        sig_pk: subject_sig_pk.to_vec(),
        not_before,
        not_after,
        ca_signature: Vec::new(),
    };
    cert.ca_signature = scheme.sign(ca_sk, &cert.preamble())?;
    Ok(cert)
}

/// Check a certificate against the CA public key at time `now`.
///
/// Total function: every outcome is a verdict, never an error. Checks the
/// CA signature, the validity window, and suite consistency.
pub fn verify_cert(ca_pk: &[u8], cert: &Certificate, now: u64) -> CertVerdict {
    let suite = match suite_by_id(cert.suite_id) {
        Ok(s) => s,
        Err(_) => return CertVerdict::Reject(RejectReason::SuiteMismatch),
    };
    let scheme = match suite.sig() {
        Some(s) => s,
        None => return CertVerdict::Reject(RejectReason::SuiteMismatch),
    };
    if cert.sig_pk.len() != scheme.public_key_len() || ca_pk.len() != scheme.public_key_len() {
        return CertVerdict::Reject(RejectReason::SuiteMismatch);
    }
    if cert.subject.is_empty() || cert.subject.len() > MAX_SUBJECT_LEN {
        return CertVerdict::Reject(RejectReason::Malformed);
    }
    if cert.not_before >= cert.not_after {
        return CertVerdict::Reject(RejectReason::Malformed);
    }
    if !scheme.verify(ca_pk, &cert.preamble(), &cert.ca_signature) {
        return CertVerdict::Reject(RejectReason::BadSignature);
    }
    if now < cert.not_before {
        return CertVerdict::Reject(RejectReason::NotYetValid);
    }
    if now >= cert.not_after {
        return CertVerdict::Reject(RejectReason::Expired);
    }
    CertVerdict::Accept
}

/// What a key file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    SigSecret = 1,
    SigPublic = 2,
}

fn encode_key_file(kind: KeyKind, scheme: &str, key: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(KEY_MAGIC.len() + 2 + scheme.len() + 4 + key.len());
    out.extend_from_slice(KEY_MAGIC);
    out.push(kind as u8);
    out.push(scheme.len() as u8);
    out.extend_from_slice(scheme.as_bytes());
    out.extend_from_slice(&(key.len() as u32).to_be_bytes());
    out.extend_from_slice(key);
    out
}

fn decode_key_file(bytes: &[u8], want_kind: KeyKind) -> Result<(String, Vec<u8>), PkiError> {
    let mut cur = Cursor::new(bytes);
    if cur.take(KEY_MAGIC.len())? != KEY_MAGIC {
        return Err(PkiError::Malformed("key file magic"));
    }
    let kind = cur.take_u8()?;
    if kind != want_kind as u8 {
        return Err(PkiError::Malformed("key file kind"));
    }
    let scheme_len = cur.take_u8()? as usize;
    let scheme = core::str::from_utf8(cur.take(scheme_len)?)
        .map_err(|_| PkiError::Malformed("key file scheme"))?
        .to_string();
    let key_len = cur.take_u32()? as usize;
    let key = cur.take(key_len)?.to_vec();
    if !cur.is_empty() {
        return Err(PkiError::Malformed("key file trailer"));
    }
    Ok((scheme, key))
}

/// Flat-directory key and certificate store.
///
/// Loaded once at startup and immutable afterwards; only the CLI tools
/// write to it.
#[derive(Debug, Clone)]
pub struct Keystore {
    dir: PathBuf,
}

impl Keystore {
    pub fn open(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The default key directory, honoring `AMPHIKEY_HOME`.
    pub fn default_dir() -> PathBuf {
        if let Ok(home) = std::env::var(HOME_ENV) {
            return PathBuf::from(home);
        }
        PathBuf::from("amphikey-keys")
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Generate the CA key pair and write `ca.sk` / `ca.pk`.
    ///
    /// Refuses to overwrite an existing CA.
    pub fn ca_init(&self, scheme: &str, rng: &mut dyn CryptoRng) -> Result<SigKeyPair, PkiError> {
        signature_scheme(scheme)?;
        let sk_path = self.path("ca.sk");
        let pk_path = self.path("ca.pk");
        if sk_path.exists() || pk_path.exists() {
            return Err(PkiError::WouldOverwrite(sk_path));
        }
        fs::create_dir_all(&self.dir)?;
        let kp = sig_keygen(scheme, rng)?;
        write_secret_file(&sk_path, &encode_key_file(KeyKind::SigSecret, scheme, kp.secret_bytes()))?;
        fs::write(&pk_path, encode_key_file(KeyKind::SigPublic, scheme, &kp.public))?;
        Ok(kp)
    }

    pub fn load_ca_secret(&self) -> Result<(String, Vec<u8>), PkiError> {
        decode_key_file(&fs::read(self.path("ca.sk"))?, KeyKind::SigSecret)
    }

    pub fn load_ca_public(&self) -> Result<(String, Vec<u8>), PkiError> {
        decode_key_file(&fs::read(self.path("ca.pk"))?, KeyKind::SigPublic)
    }

    /// Persist a subject's signature key pair as `<name>.sigsk` / `<name>.sigpk`.
    pub fn save_sig_keypair(&self, name: &str, kp: &SigKeyPair) -> Result<(), PkiError> {
        fs::create_dir_all(&self.dir)?;
        write_secret_file(
            &self.path(&format!("{name}.sigsk")),
            &encode_key_file(KeyKind::SigSecret, kp.scheme, kp.secret_bytes()),
        )?;
        fs::write(
            self.path(&format!("{name}.sigpk")),
            encode_key_file(KeyKind::SigPublic, kp.scheme, &kp.public),
        )?;
        Ok(())
    }

    /// Load a subject's signature key pair, validating lengths against the
    /// scheme recorded in the files.
    pub fn load_sig_keypair(&self, name: &str) -> Result<SigKeyPair, PkiError> {
        let (scheme_sk, secret) = decode_key_file(
            &fs::read(self.path(&format!("{name}.sigsk")))?,
            KeyKind::SigSecret,
        )?;
        let (scheme_pk, public) = decode_key_file(
            &fs::read(self.path(&format!("{name}.sigpk")))?,
            KeyKind::SigPublic,
        )?;
        if scheme_sk != scheme_pk {
            return Err(PkiError::Malformed("key pair scheme mismatch"));
        }
        Ok(SigKeyPair::from_parts(&scheme_sk, public, secret)?)
    }

    pub fn save_cert(&self, name: &str, cert: &Certificate) -> Result<(), PkiError> {
        fs::create_dir_all(&self.dir)?;
        fs::write(self.path(&format!("{name}.cert")), cert.encode())?;
        Ok(())
    }

    pub fn load_cert(&self, name: &str) -> Result<Certificate, PkiError> {
        Certificate::decode(&fs::read(self.path(&format!("{name}.cert")))?)
    }
}

#[cfg(unix)]
fn write_secret_file(path: &Path, bytes: &[u8]) -> Result<(), PkiError> {
    use std::os::unix::fs::OpenOptionsExt;
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .mode(0o600)
        .open(path)
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                PkiError::WouldOverwrite(path.to_path_buf())
            } else {
                PkiError::Io(e)
            }
        })?;
    f.write_all(bytes)?;
    Ok(())
}

#[cfg(not(unix))]
fn write_secret_file(path: &Path, bytes: &[u8]) -> Result<(), PkiError> {
    fs::write(path, bytes)?;
    Ok(())
}

/// Bounds-checked reader over a byte slice.
struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], PkiError> {
        if self.bytes.len() < n {
            return Err(PkiError::Malformed("truncated"));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn take_u8(&mut self) -> Result<u8, PkiError> {
        Ok(self.take(1)?[0])
    }

    fn take_u16(&mut self) -> Result<u16, PkiError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("len 2")))
    }

    fn take_u32(&mut self) -> Result<u32, PkiError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("len 4")))
    }

    fn take_u64(&mut self) -> Result<u64, PkiError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("len 8")))
    }

    fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{SUITE_ID_AUTH_1, DILITHIUM3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(99)
    }

    fn issue_fixture() -> (SigKeyPair, SigKeyPair, Certificate) {
        let mut r = rng();
        let ca = sig_keygen(DILITHIUM3, &mut r).unwrap();
        let subject = sig_keygen(DILITHIUM3, &mut r).unwrap();
        let cert = issue_cert(
            ca.secret_bytes(),
            "meter-0007",
            SUITE_ID_AUTH_1,
            &subject.public,
            (1_000, 2_000),
        )
        .unwrap();
        (ca, subject, cert)
    }

    #[test]
    fn issue_then_verify_accepts() {
        let (ca, _, cert) = issue_fixture();
        assert!(verify_cert(&ca.public, &cert, 1_500).is_accept());
    }

    #[test]
    fn ca_public_key_length_matches_table() {
        let mut r = rng();
        let ca = sig_keygen(DILITHIUM3, &mut r).unwrap();
        assert_eq!(ca.public.len(), 1952);
    }

    #[test]
    fn validity_window_edges() {
        let (ca, _, cert) = issue_fixture();
        assert_eq!(
            verify_cert(&ca.public, &cert, 999),
            CertVerdict::Reject(RejectReason::NotYetValid)
        );
        assert!(verify_cert(&ca.public, &cert, 1_000).is_accept());
        assert!(verify_cert(&ca.public, &cert, 1_999).is_accept());
        assert_eq!(
            verify_cert(&ca.public, &cert, 2_000),
            CertVerdict::Reject(RejectReason::Expired)
        );
        assert_eq!(
            verify_cert(&ca.public, &cert, 2_001),
            CertVerdict::Reject(RejectReason::Expired)
        );
    }

    #[test]
    fn tampered_subject_rejects() {
        let (ca, _, mut cert) = issue_fixture();
        cert.subject = "meter-0008".to_string();
        assert_eq!(
            verify_cert(&ca.public, &cert, 1_500),
            CertVerdict::Reject(RejectReason::BadSignature)
        );
    }

    #[test]
    fn wrong_ca_key_rejects() {
        let (_, _, cert) = issue_fixture();
        let mut r = ChaCha20Rng::seed_from_u64(123);
        let other = sig_keygen(DILITHIUM3, &mut r).unwrap();
        assert_eq!(
            verify_cert(&other.public, &cert, 1_500),
            CertVerdict::Reject(RejectReason::BadSignature)
        );
    }

    #[test]
    fn every_single_byte_mutation_rejects() {
        let (ca, _, cert) = issue_fixture();
        let encoded = cert.encode();
        for i in 0..encoded.len() {
            let mut mutated = encoded.clone();
            mutated[i] ^= 0x01;
            let verdict = match Certificate::decode(&mutated) {
                Ok(c) => verify_cert(&ca.public, &c, 1_500),
                Err(_) => CertVerdict::Reject(RejectReason::Malformed),
            };
            assert!(!verdict.is_accept(), "byte {i} mutation accepted");
        }
    }

    #[test]
    fn subject_and_validity_guards() {
        let mut r = rng();
        let ca = sig_keygen(DILITHIUM3, &mut r).unwrap();
        let subject = sig_keygen(DILITHIUM3, &mut r).unwrap();
        assert!(matches!(
            issue_cert(ca.secret_bytes(), "", SUITE_ID_AUTH_1, &subject.public, (0, 1)),
            Err(PkiError::SubjectTooLong(0))
        ));
        let long = "x".repeat(256);
        assert!(matches!(
            issue_cert(ca.secret_bytes(), &long, SUITE_ID_AUTH_1, &subject.public, (0, 1)),
            Err(PkiError::SubjectTooLong(256))
        ));
        assert!(matches!(
            issue_cert(ca.secret_bytes(), "m", SUITE_ID_AUTH_1, &subject.public, (5, 5)),
            Err(PkiError::EmptyValidity)
        ));
    }

    #[test]
    fn keystore_round_trip_and_refuse_overwrite() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Keystore::open(tmp.path());
        let mut r = rng();
        let ca = store.ca_init(DILITHIUM3, &mut r).unwrap();
        assert!(matches!(
            store.ca_init(DILITHIUM3, &mut r),
            Err(PkiError::WouldOverwrite(_))
        ));

        // Generated CA verifies a self-test signature.
        let scheme = signature_scheme(DILITHIUM3).unwrap();
        let sig = scheme.sign(ca.secret_bytes(), b"self test").unwrap();
        assert!(scheme.verify(&ca.public, b"self test", &sig));

        let (ca_scheme, ca_sk) = store.load_ca_secret().unwrap();
        assert_eq!(ca_scheme, DILITHIUM3);
        assert_eq!(ca_sk, ca.secret_bytes());
        let (_, ca_pk) = store.load_ca_public().unwrap();
        assert_eq!(ca_pk, ca.public);

        let subject = sig_keygen(DILITHIUM3, &mut r).unwrap();
        store.save_sig_keypair("meter", &subject).unwrap();
        let loaded = store.load_sig_keypair("meter").unwrap();
        assert_eq!(loaded.public, subject.public);
        assert_eq!(loaded.secret_bytes(), subject.secret_bytes());

        let cert = issue_cert(
            ca.secret_bytes(),
            "meter",
            SUITE_ID_AUTH_1,
            &subject.public,
            (0, 10),
        )
        .unwrap();
        store.save_cert("meter", &cert).unwrap();
        assert_eq!(store.load_cert("meter").unwrap(), cert);
    }

    #[cfg(unix)]
    #[test]
    fn secret_files_are_owner_only() {
        use std::os::unix::fs::PermissionsExt;
        let tmp = tempfile::tempdir().unwrap();
        let store = Keystore::open(tmp.path());
        store.ca_init(DILITHIUM3, &mut rng()).unwrap();
        let mode = std::fs::metadata(tmp.path().join("ca.sk"))
            .unwrap()
            .permissions()
            .mode();
        assert_eq!(mode & 0o777, 0o600);
    }
}
