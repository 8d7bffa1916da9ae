//! The two-flight handshake.
//!
//! The server initiates by sending fresh ephemeral KEM public keys in a
//! ServerHello. The client encapsulates (signing the exchange with its
//! long-term key in Authenticated Mode) and answers with ClientKeys. The
//! server verifies, decapsulates, and closes with a Confirm message — a MAC
//! over the transcript digest — proving it derived the same session secret.
//!
//! A running SHA-256 transcript covers the protocol magic, version, the
//! negotiated mode byte, and both flights, so any downgrade of the mode or
//! suite in transit surfaces as an abort before key material is released.
//! Record keys are derived from `k_sh` and the transcript digest under
//! per-direction labels.
//!
//! Messages on the wire (inside [`crate::wire`] frames):
//!
//! * `0x01` ServerHello: `suite_id || mode || kem1_pk || kem2_pk`
//! * `0x02` ClientKeys: AKEM payload, plus `u32 cert_len || cert` in
//!   Authenticated Mode (`cert_len` 0 when certificates are pre-provisioned)
//! * `0x03` Confirm: 32-byte MAC
//! * `0x7f` Abort: one coarse reason byte, never key material

use rand_core::CryptoRng;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::akem::{
    auth_decaps, auth_encaps, den_decaps, den_encaps, AkemError, AkemPayload, AkemPublicKey,
    AkemSecretKeys, SessionSecrets,
};
use crate::pki::{verify_cert, Certificate};
use crate::suite::{
    kdf_extract_expand, mac, suite_by_id, SuiteDescriptor, SuiteError, MAC_LEN,
};
use crate::wire::{MAGIC, VERSION};

/// Domain label for the key-confirmation MAC key.
const INFO_CONFIRM: &[u8] = b"amphikey/v1/confirm";
/// Domain label for client-to-server record keys.
const INFO_REC_C2S: &[u8] = b"amphikey/v1/rec/c2s";
/// Domain label for server-to-client record keys.
const INFO_REC_S2C: &[u8] = b"amphikey/v1/rec/s2c";

/// Default session timeout.
pub const DEFAULT_TIMEOUT_MS: u64 = 5000;

/// Handshake operating mode. The byte value appears on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Deniable,
    Authenticated,
}

impl Mode {
    pub fn as_byte(self) -> u8 {
        match self {
            Mode::Deniable => 0x01,
            Mode::Authenticated => 0x02,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Mode::Deniable),
            0x02 => Some(Mode::Authenticated),
            _ => None,
        }
    }

    /// The mode a suite belongs to.
    pub fn of_suite(suite: &SuiteDescriptor) -> Self {
        if suite.is_authenticated() {
            Mode::Authenticated
        } else {
            Mode::Deniable
        }
    }
}

/// Coarse abort reason codes carried in the Abort message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    BadCertificate = 0x01,
    NotValid = 0x02,
    Invalid = 0x03,
    Timeout = 0x04,
    ConfirmFailure = 0x05,
    ModeMismatch = 0x06,
    UnsupportedSuite = 0x07,
    Malformed = 0x08,
}

impl AbortReason {
    pub fn as_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Self::BadCertificate),
            0x02 => Some(Self::NotValid),
            0x03 => Some(Self::Invalid),
            0x04 => Some(Self::Timeout),
            0x05 => Some(Self::ConfirmFailure),
            0x06 => Some(Self::ModeMismatch),
            0x07 => Some(Self::UnsupportedSuite),
            0x08 => Some(Self::Malformed),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BadCertificate => "BadCertificate",
            Self::NotValid => "NotValid",
            Self::Invalid => "Invalid",
            Self::Timeout => "Timeout",
            Self::ConfirmFailure => "ConfirmFailure",
            Self::ModeMismatch => "ModeMismatch",
            Self::UnsupportedSuite => "UnsupportedSuite",
            Self::Malformed => "Malformed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "BadCertificate" => Self::BadCertificate,
            "NotValid" => Self::NotValid,
            "Invalid" => Self::Invalid,
            "Timeout" => Self::Timeout,
            "ConfirmFailure" => Self::ConfirmFailure,
            "ModeMismatch" => Self::ModeMismatch,
            "UnsupportedSuite" => Self::UnsupportedSuite,
            "Malformed" => Self::Malformed,
            _ => return None,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HandshakeError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(&'static str),
    #[error("unsupported suite {0:#04x}")]
    UnsupportedSuite(u8),
    #[error("mode mismatch")]
    ModeMismatch,
    #[error("malformed {0} message")]
    Malformed(&'static str),
    #[error("handshake aborted: {}", .0.name())]
    Abort(AbortReason),
}

impl HandshakeError {
    /// The coarse reason byte to put on the wire for this failure.
    pub fn abort_reason(&self) -> AbortReason {
        match self {
            HandshakeError::ConfigInvalid(_) => AbortReason::Malformed,
            HandshakeError::UnsupportedSuite(_) => AbortReason::UnsupportedSuite,
            HandshakeError::ModeMismatch => AbortReason::ModeMismatch,
            HandshakeError::Malformed(_) => AbortReason::Malformed,
            HandshakeError::Abort(r) => *r,
        }
    }
}

impl From<SuiteError> for HandshakeError {
    fn from(e: SuiteError) -> Self {
        match e {
            SuiteError::UnknownSuite(id) => HandshakeError::UnsupportedSuite(id),
            _ => HandshakeError::Abort(AbortReason::Malformed),
        }
    }
}

/// Session configuration for one endpoint.
#[derive(Clone)]
pub struct HandshakeConfig {
    pub mode: Mode,
    pub suite_id: u8,
    /// Client side, Authenticated Mode: the certificate for the local
    /// signing key.
    pub local_cert: Option<Certificate>,
    /// Client side, Authenticated Mode: the long-term signature secret key.
    pub local_sig_sk: Option<Zeroizing<Vec<u8>>>,
    /// Server side, Authenticated Mode: the CA public key client
    /// certificates must chain to.
    pub ca_pk: Option<Vec<u8>>,
    /// Server side: the pre-provisioned peer certificate, used when clients
    /// omit theirs from the ClientKeys flight.
    pub peer_cert: Option<Certificate>,
    /// Client side: attach the certificate to ClientKeys (`false` for
    /// pre-provisioned operation).
    pub send_cert: bool,
    pub timeout_ms: u64,
}

impl HandshakeConfig {
    pub fn deniable() -> Self {
        Self {
            mode: Mode::Deniable,
            suite_id: crate::suite::SUITE_ID_DEN_1,
            local_cert: None,
            local_sig_sk: None,
            ca_pk: None,
            peer_cert: None,
            send_cert: false,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    pub fn authenticated_client(suite_id: u8, cert: Certificate, sig_sk: Vec<u8>) -> Self {
        Self {
            mode: Mode::Authenticated,
            suite_id,
            local_cert: Some(cert),
            local_sig_sk: Some(Zeroizing::new(sig_sk)),
            ca_pk: None,
            peer_cert: None,
            send_cert: true,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    pub fn authenticated_server(suite_id: u8, ca_pk: Vec<u8>) -> Self {
        Self {
            mode: Mode::Authenticated,
            suite_id,
            local_cert: None,
            local_sig_sk: None,
            ca_pk: Some(ca_pk),
            peer_cert: None,
            send_cert: false,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    fn suite(&self) -> Result<&'static SuiteDescriptor, HandshakeError> {
        let suite = suite_by_id(self.suite_id)
            .map_err(|_| HandshakeError::UnsupportedSuite(self.suite_id))?;
        if Mode::of_suite(suite) != self.mode {
            return Err(HandshakeError::ConfigInvalid("suite does not match mode"));
        }
        Ok(suite)
    }

    fn validate_client(&self) -> Result<(), HandshakeError> {
        if self.mode == Mode::Authenticated
            && (self.local_cert.is_none() || self.local_sig_sk.is_none())
        {
            return Err(HandshakeError::ConfigInvalid(
                "authenticated client requires a certificate and signing key",
            ));
        }
        Ok(())
    }

    fn validate_server(&self) -> Result<(), HandshakeError> {
        if self.mode == Mode::Authenticated && self.ca_pk.is_none() {
            return Err(HandshakeError::ConfigInvalid(
                "authenticated server requires the CA public key",
            ));
        }
        Ok(())
    }
}

/// Running transcript hash: magic, version, mode byte, then both flights.
#[derive(Clone)]
struct Transcript {
    hasher: Sha256,
}

impl Transcript {
    fn new(mode: Mode) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(MAGIC);
        hasher.update([VERSION]);
        // The mode byte is bound before any key output exists.
        hasher.update([mode.as_byte()]);
        Self { hasher }
    }

    fn absorb(&mut self, bytes: &[u8]) {
        self.hasher.update((bytes.len() as u32).to_be_bytes());
        self.hasher.update(bytes);
    }

    fn digest(&self) -> [u8; 32] {
        self.hasher.clone().finalize().into()
    }
}

/// Per-direction record key and IV.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct DirectionKeys {
    pub key: [u8; 16],
    pub iv: [u8; 16],
}

/// Record keys for both directions, derived from `k_sh` and the transcript
/// digest. The two directions can never coincide: their labels differ.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct DirectionalKeys {
    pub c2s: DirectionKeys,
    pub s2c: DirectionKeys,
}

impl core::fmt::Debug for DirectionalKeys {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "DirectionalKeys(..)")
    }
}

fn derive_direction(k_sh: &[u8; 32], label: &[u8], digest: &[u8; 32]) -> DirectionKeys {
    let mut info = Vec::with_capacity(label.len() + 32);
    info.extend_from_slice(label);
    info.extend_from_slice(digest);
    let okm = kdf_extract_expand(k_sh, b"", &info, 32).expect("32 <= kdf bound");
    DirectionKeys {
        key: okm[..16].try_into().expect("len"),
        iv: okm[16..].try_into().expect("len"),
    }
}

fn derive_directional_keys(k_sh: &[u8; 32], digest: &[u8; 32]) -> DirectionalKeys {
    DirectionalKeys {
        c2s: derive_direction(k_sh, INFO_REC_C2S, digest),
        s2c: derive_direction(k_sh, INFO_REC_S2C, digest),
    }
}

fn derive_confirm_key(k_sh: &[u8; 32]) -> Zeroizing<[u8; 32]> {
    let okm = kdf_extract_expand(k_sh, b"", INFO_CONFIRM, 32).expect("32 <= kdf bound");
    Zeroizing::new(okm.as_slice().try_into().expect("requested 32 bytes"))
}

/// First flight: the server's ephemeral public keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerHello {
    pub suite_id: u8,
    pub mode: Mode,
    pub kem1_pk: Vec<u8>,
    pub kem2_pk: Vec<u8>,
}

impl ServerHello {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + self.kem1_pk.len() + self.kem2_pk.len());
        out.push(self.suite_id);
        out.push(self.mode.as_byte());
        out.extend_from_slice(&self.kem1_pk);
        out.extend_from_slice(&self.kem2_pk);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, HandshakeError> {
        if bytes.len() < 2 {
            return Err(HandshakeError::Malformed("server hello"));
        }
        let suite = suite_by_id(bytes[0]).map_err(|_| HandshakeError::UnsupportedSuite(bytes[0]))?;
        let mode = Mode::from_byte(bytes[1]).ok_or(HandshakeError::Malformed("server hello"))?;
        let s = &suite.sizes;
        if bytes.len() != 2 + s.kem1_pk + s.kem2_pk {
            return Err(HandshakeError::Malformed("server hello"));
        }
        Ok(Self {
            suite_id: bytes[0],
            mode,
            kem1_pk: bytes[2..2 + s.kem1_pk].to_vec(),
            kem2_pk: bytes[2 + s.kem1_pk..].to_vec(),
        })
    }
}

/// Second flight: the AKEM payload, plus the client certificate in
/// Authenticated Mode.
#[derive(Debug, Clone)]
pub struct ClientKeys {
    pub payload: AkemPayload,
    pub cert: Option<Certificate>,
}

impl ClientKeys {
    pub fn encode(&self, suite: &SuiteDescriptor) -> Vec<u8> {
        let mut out = self.payload.serialize();
        if suite.is_authenticated() {
            match &self.cert {
                Some(cert) => {
                    let cert_bytes = cert.encode();
                    out.extend_from_slice(&(cert_bytes.len() as u32).to_be_bytes());
                    out.extend_from_slice(&cert_bytes);
                }
                None => out.extend_from_slice(&0u32.to_be_bytes()),
            }
        }
        out
    }

    pub fn decode(suite: &SuiteDescriptor, bytes: &[u8]) -> Result<Self, HandshakeError> {
        let payload_len = suite.payload_len();
        let reject = || {
            HandshakeError::Abort(if suite.is_authenticated() {
                AbortReason::NotValid
            } else {
                AbortReason::Invalid
            })
        };
        if bytes.len() < payload_len {
            return Err(reject());
        }
        let payload = AkemPayload::parse(suite, &bytes[..payload_len]).map_err(|_| reject())?;
        let rest = &bytes[payload_len..];
        let cert = if suite.is_authenticated() {
            if rest.len() < 4 {
                return Err(reject());
            }
            let cert_len = u32::from_be_bytes(rest[..4].try_into().expect("len 4")) as usize;
            let cert_bytes = &rest[4..];
            if cert_bytes.len() != cert_len {
                return Err(reject());
            }
            if cert_len == 0 {
                None
            } else {
                Some(
                    Certificate::decode(cert_bytes)
                        .map_err(|_| HandshakeError::Abort(AbortReason::BadCertificate))?,
                )
            }
        } else {
            if !rest.is_empty() {
                return Err(reject());
            }
            None
        };
        Ok(Self { payload, cert })
    }
}

/// Third flight: MAC over the transcript digest under the confirm key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confirm(pub [u8; MAC_LEN]);

impl Confirm {
    pub fn encode(&self) -> Vec<u8> {
        self.0.to_vec()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, HandshakeError> {
        Ok(Self(
            bytes
                .try_into()
                .map_err(|_| HandshakeError::Malformed("confirm"))?,
        ))
    }
}

/// Encoded Abort message body.
pub fn abort_message(reason: AbortReason) -> Vec<u8> {
    vec![reason.as_byte()]
}

/// Server-side session state between hello and finish.
pub struct ServerSession {
    config: HandshakeConfig,
    suite: &'static SuiteDescriptor,
    ephemeral: AkemSecretKeys,
    transcript: Transcript,
}

impl core::fmt::Debug for ServerSession {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ServerSession(..)")
    }
}

/// Everything the server holds after a successful handshake.
pub struct ServerFinish {
    pub confirm: Confirm,
    pub keys: DirectionalKeys,
    pub transcript_digest: [u8; 32],
    /// Subject of the verified client certificate (Authenticated Mode).
    pub peer_subject: Option<String>,
}

impl core::fmt::Debug for ServerFinish {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ServerFinish(peer={:?})", self.peer_subject)
    }
}

/// Build the ServerHello and the session state holding the ephemeral
/// secrets. Secrets never leave the session object.
pub fn server_hello(
    config: &HandshakeConfig,
    rng: &mut dyn CryptoRng,
) -> Result<(ServerHello, ServerSession), HandshakeError> {
    config.validate_server()?;
    let suite = config.suite()?;
    let ephemeral = AkemSecretKeys::generate(suite, rng);
    let hello = ServerHello {
        suite_id: suite.suite_id,
        mode: config.mode,
        kem1_pk: ephemeral.kem1.public.clone(),
        kem2_pk: ephemeral.kem2.public.clone(),
    };
    let mut transcript = Transcript::new(config.mode);
    transcript.absorb(&hello.encode());
    Ok((
        hello,
        ServerSession {
            config: config.clone(),
            suite,
            ephemeral,
            transcript,
        },
    ))
}

/// Process ClientKeys: verify, decapsulate, derive record keys, and emit the
/// Confirm message.
///
/// In Authenticated Mode the certificate chain is checked against the CA
/// key (at injected time `now_unix`) before the signature, and the signature
/// before any decapsulation. The session is consumed: after an abort no key
/// material exists to return.
pub fn server_finish(
    session: ServerSession,
    client_keys_bytes: &[u8],
    now_unix: u64,
) -> Result<ServerFinish, HandshakeError> {
    let ServerSession {
        config,
        suite,
        ephemeral,
        mut transcript,
    } = session;

    let client_keys = ClientKeys::decode(suite, client_keys_bytes)?;
    transcript.absorb(client_keys_bytes);
    let digest = transcript.digest();

    let (secrets, peer_subject) = match config.mode {
        Mode::Authenticated => {
            let cert = client_keys
                .cert
                .as_ref()
                .or(config.peer_cert.as_ref())
                .ok_or(HandshakeError::Abort(AbortReason::BadCertificate))?;
            let ca_pk = config
                .ca_pk
                .as_deref()
                .ok_or(HandshakeError::ConfigInvalid("missing CA public key"))?;
            if cert.suite_id != suite.suite_id
                || !verify_cert(ca_pk, cert, now_unix).is_accept()
            {
                return Err(HandshakeError::Abort(AbortReason::BadCertificate));
            }
            let sender_pub = AkemPublicKey::signature_only(cert.sig_pk.clone());
            let secrets = auth_decaps(suite, &ephemeral, &sender_pub, &client_keys.payload)
                .map_err(|e| match e {
                    AkemError::NotValid => HandshakeError::Abort(AbortReason::NotValid),
                    _ => HandshakeError::Abort(AbortReason::NotValid),
                })?;
            (secrets, Some(cert.subject.clone()))
        }
        Mode::Deniable => {
            let sender_pub = AkemPublicKey::signature_only(Vec::new());
            let secrets = den_decaps(suite, &ephemeral, &sender_pub, &client_keys.payload)
                .map_err(|_| HandshakeError::Abort(AbortReason::Invalid))?;
            (secrets, None)
        }
    };

    let keys = derive_directional_keys(secrets.k_sh(), &digest);
    let confirm_key = derive_confirm_key(secrets.k_sh());
    let confirm = Confirm(mac(confirm_key.as_ref(), &digest));
    Ok(ServerFinish {
        confirm,
        keys,
        transcript_digest: digest,
        peer_subject,
    })
}

/// Client-side session state between respond and finish.
pub struct ClientSession {
    secrets: SessionSecrets,
    keys: DirectionalKeys,
    confirm_key: Zeroizing<[u8; 32]>,
    transcript_digest: [u8; 32],
}

impl core::fmt::Debug for ClientSession {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ClientSession(..)")
    }
}

impl ClientSession {
    pub fn session_secrets(&self) -> &SessionSecrets {
        &self.secrets
    }

    pub fn directional_keys(&self) -> &DirectionalKeys {
        &self.keys
    }

    pub fn transcript_digest(&self) -> &[u8; 32] {
        &self.transcript_digest
    }
}

/// The established channel state the client exposes after Confirm verifies.
pub struct Established {
    pub keys: DirectionalKeys,
    pub transcript_digest: [u8; 32],
}

impl core::fmt::Debug for Established {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Established(..)")
    }
}

/// Parse the ServerHello, run the mode's encapsulation, and produce the
/// ClientKeys flight plus the session state.
pub fn client_respond(
    config: &HandshakeConfig,
    server_hello_bytes: &[u8],
    rng: &mut dyn CryptoRng,
) -> Result<(Vec<u8>, ClientSession), HandshakeError> {
    config.validate_client()?;
    let suite = config.suite()?;
    let hello = ServerHello::decode(server_hello_bytes)?;
    if hello.suite_id != config.suite_id {
        return Err(HandshakeError::UnsupportedSuite(hello.suite_id));
    }
    if hello.mode != config.mode || Mode::of_suite(suite) != hello.mode {
        return Err(HandshakeError::ModeMismatch);
    }

    let mut transcript = Transcript::new(config.mode);
    transcript.absorb(server_hello_bytes);

    let receiver_pub = AkemPublicKey::new(hello.kem1_pk, hello.kem2_pk, None);
    let (payload, secrets, cert) = match config.mode {
        Mode::Authenticated => {
            let cert = config
                .local_cert
                .clone()
                .ok_or(HandshakeError::ConfigInvalid("missing client certificate"))?;
            let sig_sk = config
                .local_sig_sk
                .as_ref()
                .ok_or(HandshakeError::ConfigInvalid("missing client signing key"))?;
            let sender_pub = AkemPublicKey::signature_only(cert.sig_pk.clone());
            let (payload, secrets) =
                auth_encaps(suite, sig_sk, &sender_pub, &receiver_pub, rng).map_err(|e| {
                    match e {
                        AkemError::Suite(SuiteError::DecapsFailure) => {
                            HandshakeError::Abort(AbortReason::Invalid)
                        }
                        _ => HandshakeError::Abort(AbortReason::Malformed),
                    }
                })?;
            (payload, secrets, Some(cert))
        }
        Mode::Deniable => {
            let (payload, secrets) = den_encaps(suite, &receiver_pub, rng)
                .map_err(|_| HandshakeError::Abort(AbortReason::Malformed))?;
            (payload, secrets, None)
        }
    };

    let client_keys = ClientKeys {
        payload,
        cert: if config.send_cert { cert } else { None },
    };
    let encoded = client_keys.encode(suite);
    transcript.absorb(&encoded);
    let digest = transcript.digest();

    let keys = derive_directional_keys(secrets.k_sh(), &digest);
    let confirm_key = derive_confirm_key(secrets.k_sh());
    Ok((
        encoded,
        ClientSession {
            secrets,
            keys,
            confirm_key,
            transcript_digest: digest,
        },
    ))
}

/// Verify the server's Confirm against the client's own transcript. Only a
/// matching MAC releases the record keys.
pub fn client_finish(
    session: ClientSession,
    confirm_bytes: &[u8],
) -> Result<Established, HandshakeError> {
    let confirm = Confirm::decode(confirm_bytes)
        .map_err(|_| HandshakeError::Abort(AbortReason::ConfirmFailure))?;
    let expected = mac(session.confirm_key.as_ref(), &session.transcript_digest);
    if bool::from(expected.ct_eq(&confirm.0)) {
        Ok(Established {
            keys: session.keys.clone(),
            transcript_digest: session.transcript_digest,
        })
    } else {
        Err(HandshakeError::Abort(AbortReason::ConfirmFailure))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pki::issue_cert;
    use crate::suite::{sig_keygen, SUITE_ID_AUTH_1, SUITE_ID_DEN_1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    pub(crate) fn auth_configs(seed: u64) -> (HandshakeConfig, HandshakeConfig) {
        let mut r = rng(seed);
        let suite = suite_by_id(SUITE_ID_AUTH_1).unwrap();
        let ca = sig_keygen(suite.sig_name.unwrap(), &mut r).unwrap();
        let client_kp = sig_keygen(suite.sig_name.unwrap(), &mut r).unwrap();
        let cert = issue_cert(
            ca.secret_bytes(),
            "client-1",
            SUITE_ID_AUTH_1,
            &client_kp.public,
            (0, u64::MAX),
        )
        .unwrap();
        let client = HandshakeConfig::authenticated_client(
            SUITE_ID_AUTH_1,
            cert,
            client_kp.secret_bytes().to_vec(),
        );
        let server = HandshakeConfig::authenticated_server(SUITE_ID_AUTH_1, ca.public.clone());
        (client, server)
    }

    fn run_handshake(
        client_cfg: &HandshakeConfig,
        server_cfg: &HandshakeConfig,
        seed: u64,
    ) -> (Established, ServerFinish) {
        let mut r = rng(seed);
        let (hello, server_session) = server_hello(server_cfg, &mut r).unwrap();
        let (client_keys, client_session) =
            client_respond(client_cfg, &hello.encode(), &mut r).unwrap();
        let finish = server_finish(server_session, &client_keys, 1).unwrap();
        let established = client_finish(client_session, &finish.confirm.encode()).unwrap();
        (established, finish)
    }

    #[test]
    fn deniable_hello_is_1218_bytes() {
        let cfg = HandshakeConfig::deniable();
        let (hello, _) = server_hello(&cfg, &mut rng(1)).unwrap();
        assert_eq!(hello.encode().len(), 1218);
    }

    #[test]
    fn distinct_rng_gives_distinct_hellos() {
        let cfg = HandshakeConfig::deniable();
        let (a, _) = server_hello(&cfg, &mut rng(1)).unwrap();
        let (b, _) = server_hello(&cfg, &mut rng(2)).unwrap();
        assert_ne!(a.kem1_pk, b.kem1_pk);
        assert_ne!(a.kem2_pk, b.kem2_pk);
        let (c, _) = server_hello(&cfg, &mut rng(1)).unwrap();
        assert_eq!(a.encode(), c.encode());
    }

    #[test]
    fn deniable_handshake_agrees() {
        let cfg = HandshakeConfig::deniable();
        let (established, finish) = run_handshake(&cfg, &cfg, 3);
        assert_eq!(established.keys.c2s.key, finish.keys.c2s.key);
        assert_eq!(established.keys.s2c.iv, finish.keys.s2c.iv);
        assert_eq!(established.transcript_digest, finish.transcript_digest);
        assert_ne!(established.keys.c2s.key, established.keys.s2c.key);
    }

    #[test]
    fn authenticated_handshake_agrees_and_names_peer() {
        let (client_cfg, server_cfg) = auth_configs(4);
        let (established, finish) = run_handshake(&client_cfg, &server_cfg, 5);
        assert_eq!(established.keys.c2s.key, finish.keys.c2s.key);
        assert_eq!(finish.peer_subject.as_deref(), Some("client-1"));
    }

    #[test]
    fn deniable_client_keys_is_payload_only() {
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(6);
        let (hello, _) = server_hello(&cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&cfg, &hello.encode(), &mut r).unwrap();
        assert_eq!(client_keys.len(), 1152);
    }

    #[test]
    fn authenticated_client_keys_is_payload_plus_cert() {
        let (client_cfg, server_cfg) = auth_configs(7);
        let mut r = rng(8);
        let (hello, _) = server_hello(&server_cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&client_cfg, &hello.encode(), &mut r).unwrap();
        let cert_len = client_cfg.local_cert.as_ref().unwrap().encode().len();
        assert_eq!(client_keys.len(), 4413 + 4 + cert_len);
    }

    #[test]
    fn mode_byte_flip_aborts() {
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(9);
        let (hello, _) = server_hello(&cfg, &mut r).unwrap();
        let mut bytes = hello.encode();
        bytes[1] = Mode::Authenticated.as_byte();
        assert_eq!(
            client_respond(&cfg, &bytes, &mut r).unwrap_err(),
            HandshakeError::ModeMismatch
        );
    }

    #[test]
    fn suite_byte_flip_aborts() {
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(10);
        let (hello, _) = server_hello(&cfg, &mut r).unwrap();
        let mut bytes = hello.encode();
        bytes[0] = SUITE_ID_AUTH_1;
        assert!(matches!(
            client_respond(&cfg, &bytes, &mut r).unwrap_err(),
            HandshakeError::UnsupportedSuite(_) | HandshakeError::Malformed(_)
        ));
    }

    #[test]
    fn tampered_hello_key_material_fails_downstream() {
        // Deniable: the server's tag check catches the divergence.
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(11);
        let (hello, server_session) = server_hello(&cfg, &mut r).unwrap();
        let mut bytes = hello.encode();
        bytes[700] ^= 0x01;
        let (client_keys, _) = client_respond(&cfg, &bytes, &mut r).unwrap();
        assert_eq!(
            server_finish(server_session, &client_keys, 1).unwrap_err(),
            HandshakeError::Abort(AbortReason::Invalid)
        );

        // Authenticated: the signature still verifies, so the divergence
        // surfaces at the client's confirm check (transcript binding).
        let (client_cfg, server_cfg) = auth_configs(12);
        let mut r = rng(13);
        let (hello, server_session) = server_hello(&server_cfg, &mut r).unwrap();
        let mut bytes = hello.encode();
        bytes[700] ^= 0x01;
        let (client_keys, client_session) = client_respond(&client_cfg, &bytes, &mut r).unwrap();
        let finish = server_finish(server_session, &client_keys, 1).unwrap();
        assert_eq!(
            client_finish(client_session, &finish.confirm.encode()).unwrap_err(),
            HandshakeError::Abort(AbortReason::ConfirmFailure)
        );
    }

    #[test]
    fn replayed_client_keys_abort() {
        // Deniable: replay against a fresh hello trips the tag check.
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(14);
        let (hello, session_a) = server_hello(&cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&cfg, &hello.encode(), &mut r).unwrap();
        server_finish(session_a, &client_keys, 1).unwrap();

        let (_, session_b) = server_hello(&cfg, &mut r).unwrap();
        assert_eq!(
            server_finish(session_b, &client_keys, 1).unwrap_err(),
            HandshakeError::Abort(AbortReason::Invalid)
        );

        // Authenticated: the signature is replayable, but the confirm MAC
        // diverges, so the client aborts.
        let (client_cfg, server_cfg) = auth_configs(15);
        let mut r = rng(16);
        let (hello_a, session_a) = server_hello(&server_cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&client_cfg, &hello_a.encode(), &mut r).unwrap();
        server_finish(session_a, &client_keys, 1).unwrap();

        let (hello_b, session_b) = server_hello(&server_cfg, &mut r).unwrap();
        let (_, client_session_b) =
            client_respond(&client_cfg, &hello_b.encode(), &mut r).unwrap();
        let finish_b = server_finish(session_b, &client_keys, 1).unwrap();
        assert_eq!(
            client_finish(client_session_b, &finish_b.confirm.encode()).unwrap_err(),
            HandshakeError::Abort(AbortReason::ConfirmFailure)
        );
    }

    #[test]
    fn wrong_ca_aborts_with_bad_certificate() {
        let (client_cfg, _) = auth_configs(17);
        let mut r = rng(18);
        let other_ca = sig_keygen(
            suite_by_id(SUITE_ID_AUTH_1).unwrap().sig_name.unwrap(),
            &mut r,
        )
        .unwrap();
        let server_cfg =
            HandshakeConfig::authenticated_server(SUITE_ID_AUTH_1, other_ca.public.clone());
        let (hello, server_session) = server_hello(&server_cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&client_cfg, &hello.encode(), &mut r).unwrap();
        assert_eq!(
            server_finish(server_session, &client_keys, 1).unwrap_err(),
            HandshakeError::Abort(AbortReason::BadCertificate)
        );
    }

    #[test]
    fn expired_certificate_aborts() {
        let mut r = rng(19);
        let suite = suite_by_id(SUITE_ID_AUTH_1).unwrap();
        let ca = sig_keygen(suite.sig_name.unwrap(), &mut r).unwrap();
        let client_kp = sig_keygen(suite.sig_name.unwrap(), &mut r).unwrap();
        let cert = issue_cert(
            ca.secret_bytes(),
            "client-1",
            SUITE_ID_AUTH_1,
            &client_kp.public,
            (0, 100),
        )
        .unwrap();
        let client_cfg = HandshakeConfig::authenticated_client(
            SUITE_ID_AUTH_1,
            cert,
            client_kp.secret_bytes().to_vec(),
        );
        let server_cfg = HandshakeConfig::authenticated_server(SUITE_ID_AUTH_1, ca.public);
        let (hello, server_session) = server_hello(&server_cfg, &mut r).unwrap();
        let (client_keys, _) = client_respond(&client_cfg, &hello.encode(), &mut r).unwrap();
        assert_eq!(
            server_finish(server_session, &client_keys, 101).unwrap_err(),
            HandshakeError::Abort(AbortReason::BadCertificate)
        );
    }

    #[test]
    fn pre_provisioned_certificates_work() {
        let (mut client_cfg, mut server_cfg) = auth_configs(20);
        client_cfg.send_cert = false;
        server_cfg.peer_cert = client_cfg.local_cert.clone();
        let mut r = rng(21);
        let (hello, server_session) = server_hello(&server_cfg, &mut r).unwrap();
        let (client_keys, client_session) =
            client_respond(&client_cfg, &hello.encode(), &mut r).unwrap();
        // Without the cert the flight is payload plus the 4-byte length.
        assert_eq!(client_keys.len(), 4413 + 4);
        let finish = server_finish(server_session, &client_keys, 1).unwrap();
        let established = client_finish(client_session, &finish.confirm.encode()).unwrap();
        assert_eq!(established.keys.c2s.key, finish.keys.c2s.key);
    }

    #[test]
    fn tampered_confirm_aborts() {
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(22);
        let (hello, server_session) = server_hello(&cfg, &mut r).unwrap();
        let (client_keys, client_session) =
            client_respond(&cfg, &hello.encode(), &mut r).unwrap();
        let finish = server_finish(server_session, &client_keys, 1).unwrap();
        let mut confirm = finish.confirm.encode();
        confirm[0] ^= 0x01;
        assert_eq!(
            client_finish(client_session, &confirm).unwrap_err(),
            HandshakeError::Abort(AbortReason::ConfirmFailure)
        );
    }

    #[test]
    fn confirm_from_other_session_aborts() {
        let cfg = HandshakeConfig::deniable();
        let mut r = rng(23);
        let (hello_a, session_a) = server_hello(&cfg, &mut r).unwrap();
        let (keys_a, client_a) = client_respond(&cfg, &hello_a.encode(), &mut r).unwrap();
        let _finish_a = server_finish(session_a, &keys_a, 1).unwrap();

        let (hello_b, session_b) = server_hello(&cfg, &mut r).unwrap();
        let (keys_b, _client_b) = client_respond(&cfg, &hello_b.encode(), &mut r).unwrap();
        let finish_b = server_finish(session_b, &keys_b, 1).unwrap();

        assert_eq!(
            client_finish(client_a, &finish_b.confirm.encode()).unwrap_err(),
            HandshakeError::Abort(AbortReason::ConfirmFailure)
        );
    }

    #[test]
    fn missing_credentials_is_config_error() {
        let mut cfg = HandshakeConfig::deniable();
        cfg.mode = Mode::Authenticated;
        cfg.suite_id = SUITE_ID_AUTH_1;
        assert!(matches!(
            client_respond(&cfg, &[0u8; 4], &mut rng(24)).unwrap_err(),
            HandshakeError::ConfigInvalid(_)
        ));
        assert!(matches!(
            server_hello(&cfg, &mut rng(25)).unwrap_err(),
            HandshakeError::ConfigInvalid(_)
        ));
    }
}
