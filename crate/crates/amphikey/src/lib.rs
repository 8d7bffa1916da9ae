#![forbid(unsafe_code)]
//! AmphiKey: a dual-mode hybrid post-quantum authenticated key encapsulation
//! protocol for constrained endpoint/control-center links.
//!
//! The library combines an ephemeral post-quantum KEM (ML-KEM-768) with an
//! ephemeral classical KEM (X25519) and authenticates the exchange in one of
//! two modes:
//!
//! * **Authenticated Mode** — the sender signs the combined ciphertext with a
//!   long-term signature key, yielding non-repudiable origin authentication.
//! * **Deniable Mode** — the sender authenticates with an HMAC tag derived
//!   from the ephemeral shared secrets. The receiver can forge
//!   indistinguishable transcripts, so no third party can attribute one.
//!
//! Confidentiality is hybrid "OR": the session secret stays secret while at
//! least one of the two KEMs is unbroken.
//!
//! Module map:
//!
//! * [`suite`] — primitive interfaces and the registry of concrete suites.
//! * [`akem`] — the two authenticated-KEM combiners plus the receiver-side
//!   transcript forger.
//! * [`handshake`] — the two-flight handshake state machines.
//! * [`wire`] — framing and chunking for constrained links.
//! * [`pki`] — long-term keys, certificates, and the on-disk keystore.
//! * [`channel`] — the post-handshake AEAD record layer.
//! * [`transport`] — framed transports (TCP, in-memory, fault-injecting).
//! * [`app`] — server/client entry points and the scenario runner.
//! * [`bench`] — the measurement harness and derived-metric calculators.

pub mod akem;
pub mod app;
pub mod bench;
pub mod channel;
pub mod handshake;
pub mod pki;
pub mod suite;
pub mod transport;
pub mod wire;

pub use rand_core;
