//! Operational entry points: the TCP server loop, the client, and the
//! in-process scenario runner with deterministic fault injection.
//!
//! The server initiates the handshake on every accepted connection, serves
//! table transfers over the established channel, and logs one line-delimited
//! JSON record per session (established or aborted, with per-phase
//! durations).
//!
//! Scenarios reproduce the experimental conditions — honest runs,
//! authentication failures, per-flight tampering, injected delay, message
//! loss with one retransmit — as single-threaded, seeded, fully
//! reproducible executions.

use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Channel, ChannelError, Served, TableAck};
use crate::handshake::{
    abort_message, client_finish, client_respond, server_finish, server_hello, AbortReason,
    DirectionalKeys, HandshakeConfig, HandshakeError, Mode,
};
use crate::pki::{issue_cert, PkiError};
use crate::suite::{kdf_extract_expand, sig_keygen, suite_by_id, SuiteError};
use crate::transport::{
    mem_pair, FaultPlan, FaultTransport, MemTransport, TcpTransport, Transport, TransportError,
};
use crate::wire::{MSG_ABORT, MSG_CLIENT_KEYS, MSG_CONFIRM, MSG_SERVER_HELLO, MSG_TABLE_ACK,
    MSG_TABLE_DATA};

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Handshake(#[from] HandshakeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Pki(#[from] PkiError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("peer aborted: {}", .0.name())]
    PeerAbort(AbortReason),
    #[error("scenario harness: {0}")]
    Harness(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One line of the server's structured log.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionLog {
    pub event: String,
    pub mode: String,
    pub suite: String,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peer: Option<String>,
    pub hello_ns: u64,
    pub finish_ns: u64,
    pub total_ns: u64,
    pub tables_served: u32,
}

/// Where session logs go. The CLI points this at stdout; tests collect.
pub type LogSink = Arc<dyn Fn(&SessionLog) + Send + Sync>;

pub fn stdout_log() -> LogSink {
    Arc::new(|log| {
        if let Ok(line) = serde_json::to_string(log) {
            println!("{line}");
        }
    })
}

/// Server tuning knobs.
pub struct ServerOptions {
    /// Root entropy; per-connection RNGs are derived from it.
    pub entropy: [u8; 32],
    pub max_chunk: usize,
    /// Serve exactly this many connections, then return. `None` serves
    /// forever.
    pub max_connections: Option<usize>,
    pub timeout_ms: u64,
}

fn connection_rng(entropy: &[u8; 32], index: u64) -> ChaCha20Rng {
    let mut info = b"amphikey/v1/srv-conn".to_vec();
    info.extend_from_slice(&index.to_be_bytes());
    let seed = kdf_extract_expand(entropy, b"", &info, 32).expect("32 <= kdf bound");
    ChaCha20Rng::from_seed(seed.as_slice().try_into().expect("requested 32 bytes"))
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Accept loop: one session thread per connection, shared read-only config.
pub fn run_server(
    listener: TcpListener,
    config: &HandshakeConfig,
    options: &ServerOptions,
    log: LogSink,
) -> Result<(), AppError> {
    let config = Arc::new(config.clone());
    let counter = Arc::new(AtomicU64::new(0));
    let mut handles = Vec::new();
    let mut served = 0usize;

    for stream in listener.incoming() {
        let stream = stream?;
        let config = Arc::clone(&config);
        let log = Arc::clone(&log);
        let index = counter.fetch_add(1, Ordering::Relaxed);
        let rng = connection_rng(&options.entropy, index);
        let max_chunk = options.max_chunk;
        let timeout_ms = options.timeout_ms;
        handles.push(std::thread::spawn(move || {
            let _ = serve_connection(stream, &config, rng, max_chunk, timeout_ms, &log);
        }));

        served += 1;
        if options.max_connections == Some(served) {
            break;
        }
    }
    for handle in handles {
        let _ = handle.join();
    }
    Ok(())
}

fn serve_connection(
    stream: TcpStream,
    config: &HandshakeConfig,
    mut rng: ChaCha20Rng,
    max_chunk: usize,
    timeout_ms: u64,
    log: &LogSink,
) -> Result<(), AppError> {
    let mut transport = TcpTransport::new(stream, timeout_ms, max_chunk)?;
    let started = Instant::now();

    let (hello, session) = server_hello(config, &mut rng)?;
    transport.send_msg(MSG_SERVER_HELLO, &hello.encode())?;
    let hello_ns = started.elapsed().as_nanos() as u64;

    let (msg_type, client_keys) = transport.recv_msg()?;
    if msg_type != MSG_CLIENT_KEYS {
        return Err(AppError::Harness(format!(
            "expected ClientKeys, got {msg_type:#04x}"
        )));
    }

    let finish_started = Instant::now();
    let finish = match server_finish(session, &client_keys, now_unix()) {
        Ok(f) => f,
        Err(e) => {
            let reason = e.abort_reason();
            let _ = transport.send_msg(MSG_ABORT, &abort_message(reason));
            log(&SessionLog {
                event: "handshake".into(),
                mode: mode_name(config.mode).into(),
                suite: suite_name(config.suite_id),
                outcome: reason.name().into(),
                peer: None,
                hello_ns,
                finish_ns: finish_started.elapsed().as_nanos() as u64,
                total_ns: started.elapsed().as_nanos() as u64,
                tables_served: 0,
            });
            return Err(e.into());
        }
    };
    transport.send_msg(MSG_CONFIRM, &finish.confirm.encode())?;
    let finish_ns = finish_started.elapsed().as_nanos() as u64;

    let mut channel = Channel::server(transport, &finish.keys);
    let mut tables_served = 0u32;
    loop {
        match channel.serve_next() {
            Ok(Served::Table { .. }) => tables_served += 1,
            Ok(Served::Closed) => break,
            Err(ChannelError::Transport(TransportError::Closed)) => break,
            Err(ChannelError::Transport(TransportError::Timeout)) => break,
            Err(e) => {
                log(&SessionLog {
                    event: "channel".into(),
                    mode: mode_name(config.mode).into(),
                    suite: suite_name(config.suite_id),
                    outcome: format!("error: {e}"),
                    peer: finish.peer_subject.clone(),
                    hello_ns,
                    finish_ns,
                    total_ns: started.elapsed().as_nanos() as u64,
                    tables_served,
                });
                return Err(e.into());
            }
        }
    }

    log(&SessionLog {
        event: "handshake".into(),
        mode: mode_name(config.mode).into(),
        suite: suite_name(config.suite_id),
        outcome: "established".into(),
        peer: finish.peer_subject.clone(),
        hello_ns,
        finish_ns,
        total_ns: started.elapsed().as_nanos() as u64,
        tables_served,
    });
    Ok(())
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Deniable => "deniable",
        Mode::Authenticated => "authenticated",
    }
}

fn suite_name(suite_id: u8) -> String {
    suite_by_id(suite_id)
        .map(|s| s.name.to_string())
        .unwrap_or_else(|_| format!("{suite_id:#04x}"))
}

/// What a successful client run produced.
pub struct ClientRun {
    pub ack: TableAck,
    /// The session's record keys; callers own them (useful for harness
    /// cross-session checks).
    pub keys: DirectionalKeys,
}

impl core::fmt::Debug for ClientRun {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ClientRun(ack={:?})", self.ack)
    }
}

/// Connect, handshake, transfer one table, verify the ack, close.
pub fn run_client(
    addr: &str,
    config: &HandshakeConfig,
    table_id: u16,
    table: &[u8],
    entropy: [u8; 32],
    max_chunk: usize,
) -> Result<ClientRun, AppError> {
    let stream = TcpStream::connect(addr)?;
    let mut transport = TcpTransport::new(stream, config.timeout_ms, max_chunk)?;
    let mut rng = ChaCha20Rng::from_seed(entropy);

    let (msg_type, hello) = transport.recv_msg()?;
    if msg_type == MSG_ABORT {
        return Err(AppError::PeerAbort(decode_abort(&hello)));
    }
    if msg_type != MSG_SERVER_HELLO {
        return Err(AppError::Harness(format!(
            "expected ServerHello, got {msg_type:#04x}"
        )));
    }

    let (client_keys, session) = match client_respond(config, &hello, &mut rng) {
        Ok(ok) => ok,
        Err(e) => {
            let _ = transport.send_msg(MSG_ABORT, &abort_message(e.abort_reason()));
            return Err(e.into());
        }
    };
    transport.send_msg(MSG_CLIENT_KEYS, &client_keys)?;

    let (msg_type, confirm) = transport.recv_msg()?;
    if msg_type == MSG_ABORT {
        return Err(AppError::PeerAbort(decode_abort(&confirm)));
    }
    if msg_type != MSG_CONFIRM {
        return Err(AppError::Harness(format!(
            "expected Confirm, got {msg_type:#04x}"
        )));
    }
    let established = client_finish(session, &confirm)?;

    let keys = established.keys.clone();
    let mut channel = Channel::client(transport, &established.keys);
    let ack = channel.transfer_table(table_id, table)?;
    if ack.table_id != table_id || ack.byte_count != table.len() as u64 {
        return Err(AppError::Harness(format!(
            "ack mismatch: sent {} bytes for table {table_id}, ack was {ack:?}",
            table.len()
        )));
    }
    channel.close()?;
    Ok(ClientRun { ack, keys })
}

fn decode_abort(bytes: &[u8]) -> AbortReason {
    bytes
        .first()
        .and_then(|b| AbortReason::from_byte(*b))
        .unwrap_or(AbortReason::Malformed)
}

/// Which flight a fault targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flight {
    ServerHello,
    ClientKeys,
    Confirm,
}

/// XOR `byte_offset` of `flight` with `xor_mask` (a single-bit flip by
/// default).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TamperSpec {
    pub flight: Flight,
    pub byte_offset: usize,
    #[serde(default = "default_xor_mask")]
    pub xor_mask: u8,
}

fn default_xor_mask() -> u8 {
    0x01
}

/// The outcome a scenario expects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expected {
    Established,
    /// Abort with a specific reason, or any abort when `None`.
    Abort(Option<String>),
}

/// A reproducible experiment: client(s) against a server with fault
/// injection, compared against an expected outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub suite_id: Option<u8>,
    #[serde(default = "default_client_count")]
    pub client_count: u32,
    #[serde(default)]
    pub delay_ms: u64,
    #[serde(default)]
    pub loss_pct: f64,
    #[serde(default)]
    pub tamper: Option<TamperSpec>,
    /// Sign the client certificate with an unrelated CA.
    #[serde(default)]
    pub bad_cert: bool,
    pub expected: Expected,
}

fn default_client_count() -> u32 {
    1
}

impl ScenarioSpec {
    pub fn suite_id(&self) -> u8 {
        self.suite_id.unwrap_or(match self.mode {
            Mode::Deniable => crate::suite::SUITE_ID_DEN_1,
            Mode::Authenticated => crate::suite::SUITE_ID_AUTH_1,
        })
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if !(0.0..=1.0).contains(&self.loss_pct) {
            return Err(AppError::Harness(format!(
                "loss_pct {} outside [0, 1]",
                self.loss_pct
            )));
        }
        if self.client_count == 0 {
            return Err(AppError::Harness("client_count must be positive".into()));
        }
        let suite =
            suite_by_id(self.suite_id()).map_err(|e| AppError::Harness(e.to_string()))?;
        if let Some(t) = &self.tamper {
            // Bound the offset by the flight's guaranteed length.
            let bound = match t.flight {
                Flight::ServerHello => 2 + suite.sizes.kem1_pk + suite.sizes.kem2_pk,
                Flight::ClientKeys => suite.payload_len(),
                Flight::Confirm => 32,
            };
            if t.byte_offset >= bound {
                return Err(AppError::Harness(format!(
                    "tamper offset {} outside {:?} (len {bound})",
                    t.byte_offset, t.flight
                )));
            }
        }
        if self.bad_cert && self.mode != Mode::Authenticated {
            return Err(AppError::Harness(
                "bad_cert only applies to Authenticated Mode".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one scenario session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Established,
    Abort(String),
}

impl Expected {
    pub fn matches(&self, outcome: &Outcome) -> bool {
        match (self, outcome) {
            (Expected::Established, Outcome::Established) => true,
            (Expected::Abort(None), Outcome::Abort(_)) => true,
            (Expected::Abort(Some(want)), Outcome::Abort(got)) => want == got,
            _ => false,
        }
    }
}

/// Result of [`run_scenario`].
#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub outcomes: Vec<Outcome>,
    pub passed: bool,
}

/// Scenario timeout: short enough that lost-message runs finish quickly,
/// long enough that a 200 ms injected delay never trips it (the protocol
/// default is 5000 ms).
const SCENARIO_TIMEOUT_MS: u64 = 1500;

/// Run every session of a scenario deterministically under the given seed.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioReport, AppError> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let suite_id = spec.suite_id();

    // Long-term material for Authenticated Mode, pinned by the seed.
    let (client_cfg, server_cfg) = match spec.mode {
        Mode::Deniable => {
            let mut cfg = HandshakeConfig::deniable();
            cfg.suite_id = suite_id;
            (cfg.clone(), cfg)
        }
        Mode::Authenticated => {
            let suite = suite_by_id(suite_id)?;
            let sig_name = suite
                .sig_name
                .ok_or_else(|| AppError::Harness("authenticated suite without signature".into()))?;
            let ca = sig_keygen(sig_name, &mut rng)?;
            let client_kp = sig_keygen(sig_name, &mut rng)?;
            let issuing_ca = if spec.bad_cert {
                // Signed by an unrelated authority.
                sig_keygen(sig_name, &mut rng)?
            } else {
                sig_keygen(sig_name, &mut ChaCha20Rng::seed_from_u64(seed))?
            };
            // The server trusts `ca`; honest runs issue under the same key.
            let issuer = if spec.bad_cert { &issuing_ca } else { &ca };
            let cert = issue_cert(
                issuer.secret_bytes(),
                "scenario-client",
                suite_id,
                &client_kp.public,
                (0, u64::MAX),
            )?;
            (
                HandshakeConfig::authenticated_client(
                    suite_id,
                    cert,
                    client_kp.secret_bytes().to_vec(),
                ),
                HandshakeConfig::authenticated_server(suite_id, ca.public.clone()),
            )
        }
    };

    let mut outcomes = Vec::with_capacity(spec.client_count as usize);
    let mut seen_keys: Vec<[u8; 16]> = Vec::new();
    for _session in 0..spec.client_count {
        let outcome = run_session(spec, &client_cfg, &server_cfg, &mut rng, seed, &mut seen_keys)?;
        outcomes.push(outcome);
    }

    let passed = outcomes.iter().all(|o| spec.expected.matches(o));
    Ok(ScenarioReport {
        name: spec.name.clone(),
        outcomes,
        passed,
    })
}

type FaultyMem = FaultTransport<MemTransport>;

fn plans_for(spec: &ScenarioSpec, seed: u64) -> (FaultPlan, FaultPlan) {
    // Server-to-client flights: ServerHello is message 0, Confirm message 1.
    // Client-to-server flights: ClientKeys is message 0.
    let mut server_plan = FaultPlan {
        delay_ms: spec.delay_ms,
        loss_pct: spec.loss_pct,
        tamper: None,
        seed: seed ^ 0x5eed_5eed,
    };
    let mut client_plan = FaultPlan {
        delay_ms: spec.delay_ms,
        loss_pct: spec.loss_pct,
        tamper: None,
        seed: seed ^ 0xc11e_c11e,
    };
    if let Some(t) = &spec.tamper {
        let mask = if t.xor_mask == 0 { 0x01 } else { t.xor_mask };
        match t.flight {
            Flight::ServerHello => server_plan.tamper = Some((0, t.byte_offset, mask)),
            Flight::Confirm => server_plan.tamper = Some((1, t.byte_offset, mask)),
            Flight::ClientKeys => client_plan.tamper = Some((0, t.byte_offset, mask)),
        }
    }
    (server_plan, client_plan)
}

/// One deterministic, single-threaded session: both endpoints stepped in
/// order over an in-memory transport pair.
fn run_session(
    spec: &ScenarioSpec,
    client_cfg: &HandshakeConfig,
    server_cfg: &HandshakeConfig,
    rng: &mut ChaCha20Rng,
    seed: u64,
    seen_keys: &mut Vec<[u8; 16]>,
) -> Result<Outcome, AppError> {
    let (server_raw, client_raw) = mem_pair(SCENARIO_TIMEOUT_MS, 1024);
    let (server_plan, client_plan) = plans_for(spec, seed);
    let mut server_t: FaultyMem = FaultTransport::new(server_raw, server_plan);
    let mut client_t: FaultyMem = FaultTransport::new(client_raw, client_plan);

    // Flight 1: ServerHello.
    let (hello, server_session) = match server_hello(server_cfg, rng) {
        Ok(ok) => ok,
        Err(e) => return Ok(Outcome::Abort(e.abort_reason().name().into())),
    };
    server_t.send_msg(MSG_SERVER_HELLO, &hello.encode())?;
    let hello_bytes = match client_t.recv_msg() {
        Ok((MSG_SERVER_HELLO, bytes)) => bytes,
        Ok((MSG_ABORT, bytes)) => return Ok(Outcome::Abort(decode_abort(&bytes).name().into())),
        Ok((t, _)) => return Err(AppError::Harness(format!("unexpected flight {t:#04x}"))),
        Err(TransportError::Timeout) => {
            return Ok(Outcome::Abort(AbortReason::Timeout.name().into()))
        }
        Err(e) => return Err(e.into()),
    };

    // Flight 2: ClientKeys.
    let (client_keys, client_session) = match client_respond(client_cfg, &hello_bytes, rng) {
        Ok(ok) => ok,
        Err(e) => return Ok(Outcome::Abort(e.abort_reason().name().into())),
    };
    client_t.send_msg(MSG_CLIENT_KEYS, &client_keys)?;
    let client_keys_bytes = match server_t.recv_msg() {
        Ok((MSG_CLIENT_KEYS, bytes)) => bytes,
        Ok((t, _)) => return Err(AppError::Harness(format!("unexpected flight {t:#04x}"))),
        Err(TransportError::Timeout) => {
            return Ok(Outcome::Abort(AbortReason::Timeout.name().into()))
        }
        Err(e) => return Err(e.into()),
    };

    // Flight 3: Confirm (or Abort).
    let finish = match server_finish(server_session, &client_keys_bytes, 1) {
        Ok(f) => f,
        Err(e) => {
            let reason = e.abort_reason();
            server_t.send_msg(MSG_ABORT, &abort_message(reason))?;
            // Drain the client view so both sides agree on the outcome.
            let _ = client_t.recv_msg();
            return Ok(Outcome::Abort(reason.name().into()));
        }
    };
    server_t.send_msg(MSG_CONFIRM, &finish.confirm.encode())?;
    let confirm_bytes = match client_t.recv_msg() {
        Ok((MSG_CONFIRM, bytes)) => bytes,
        Ok((MSG_ABORT, bytes)) => return Ok(Outcome::Abort(decode_abort(&bytes).name().into())),
        Ok((t, _)) => return Err(AppError::Harness(format!("unexpected flight {t:#04x}"))),
        Err(TransportError::Timeout) => {
            return Ok(Outcome::Abort(AbortReason::Timeout.name().into()))
        }
        Err(e) => return Err(e.into()),
    };
    let established = match client_finish(client_session, &confirm_bytes) {
        Ok(e) => e,
        Err(e) => return Ok(Outcome::Abort(e.abort_reason().name().into())),
    };

    // Cross-session key reuse would be a harness-detectable protocol bug.
    if seen_keys.contains(&established.keys.c2s.key) {
        return Err(AppError::Harness("record key repeated across sessions".into()));
    }
    seen_keys.push(established.keys.c2s.key);

    // Prove the channel end to end with one MTU-sized table.
    let mut client_chan = Channel::client(client_t, &established.keys);
    let mut server_chan = Channel::server(server_t, &finish.keys);
    let table = vec![0xEEu8; 1500];
    let mut payload = Vec::with_capacity(2 + table.len());
    payload.extend_from_slice(&42u16.to_be_bytes());
    payload.extend_from_slice(&table);
    client_chan.send(MSG_TABLE_DATA, &payload)?;
    match server_chan.serve_next() {
        Ok(Served::Table { table_id, data }) if table_id == 42 && data == table => {}
        Ok(_) => return Ok(Outcome::Abort("Malformed".into())),
        Err(ChannelError::Transport(TransportError::Timeout)) => {
            return Ok(Outcome::Abort(AbortReason::Timeout.name().into()))
        }
        Err(_) => return Ok(Outcome::Abort("Invalid".into())),
    }
    match client_chan.recv() {
        Ok((MSG_TABLE_ACK, _)) => {}
        Ok(_) => return Ok(Outcome::Abort("Malformed".into())),
        Err(ChannelError::Transport(TransportError::Timeout)) => {
            return Ok(Outcome::Abort(AbortReason::Timeout.name().into()))
        }
        Err(_) => return Ok(Outcome::Abort("Invalid".into())),
    }

    Ok(Outcome::Established)
}
