//! Framed message transports.
//!
//! A [`Transport`] moves whole protocol messages; framing and chunking are
//! handled here via the [`crate::wire`] codec. Three implementations:
//!
//! * [`TcpTransport`] — a length-framed reliable byte stream over TCP.
//! * [`MemTransport`] — an in-process duplex pair. Messages still round-trip
//!   through the frame codec so every scenario run exercises the wire path.
//! * [`FaultTransport`] — wraps another transport and injects deterministic
//!   faults: fixed delay, seeded message loss with one transport-level
//!   retransmit, and single-byte tamper at a chosen flight offset.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::wire::{
    decode_frame, encode_frame, Reassembler, WireError, DEFAULT_MAX_CHUNK, HEADER_LEN,
};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("receive timed out")]
    Timeout,
    #[error("peer closed the connection")]
    Closed,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Moves whole messages as `(msg_type, payload)` pairs.
pub trait Transport {
    fn send_msg(&mut self, msg_type: u8, payload: &[u8]) -> Result<(), TransportError>;
    fn recv_msg(&mut self) -> Result<(u8, Vec<u8>), TransportError>;

    /// Chunk payload bound used when encoding frames.
    fn max_chunk(&self) -> usize {
        DEFAULT_MAX_CHUNK
    }
}

/// TCP-backed transport.
pub struct TcpTransport {
    stream: TcpStream,
    max_chunk: usize,
}

impl TcpTransport {
    pub fn new(stream: TcpStream, timeout_ms: u64, max_chunk: usize) -> Result<Self, TransportError> {
        stream.set_read_timeout(Some(Duration::from_millis(timeout_ms.max(1))))?;
        Ok(Self { stream, max_chunk })
    }

    fn read_frame(&mut self) -> Result<crate::wire::Frame, TransportError> {
        let mut header = [0u8; HEADER_LEN];
        self.stream.read_exact(&mut header).map_err(map_read_err)?;
        // Validate the header before trusting the declared length.
        let payload_len =
            u32::from_be_bytes([header[9], header[10], header[11], header[12]]) as usize;
        if payload_len > crate::wire::MAX_MESSAGE_LEN {
            return Err(WireError::Oversize.into());
        }
        let mut buf = vec![0u8; HEADER_LEN + payload_len];
        buf[..HEADER_LEN].copy_from_slice(&header);
        self.stream
            .read_exact(&mut buf[HEADER_LEN..])
            .map_err(map_read_err)?;
        let (frame, _) = decode_frame(&buf)?;
        Ok(frame)
    }
}

fn map_read_err(e: std::io::Error) -> TransportError {
    match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => TransportError::Timeout,
        std::io::ErrorKind::UnexpectedEof => TransportError::Closed,
        _ => TransportError::Io(e),
    }
}

impl Transport for TcpTransport {
    fn send_msg(&mut self, msg_type: u8, payload: &[u8]) -> Result<(), TransportError> {
        for frame in encode_frame(msg_type, payload, self.max_chunk)? {
            self.stream.write_all(&frame)?;
        }
        self.stream.flush()?;
        Ok(())
    }

    fn recv_msg(&mut self) -> Result<(u8, Vec<u8>), TransportError> {
        let mut reassembler = Reassembler::new();
        loop {
            let frame = self.read_frame()?;
            if let Some(done) = reassembler.push(frame)? {
                return Ok(done);
            }
        }
    }

    fn max_chunk(&self) -> usize {
        self.max_chunk
    }
}

#[derive(Default)]
struct MailboxInner {
    queue: VecDeque<Vec<u8>>,
    closed: bool,
}

#[derive(Clone, Default)]
struct Mailbox {
    inner: Arc<(Mutex<MailboxInner>, Condvar)>,
}

impl Mailbox {
    fn push(&self, bytes: Vec<u8>) {
        let (lock, cvar) = &*self.inner;
        lock.lock().expect("mailbox poisoned").queue.push_back(bytes);
        cvar.notify_one();
    }

    fn close(&self) {
        let (lock, cvar) = &*self.inner;
        lock.lock().expect("mailbox poisoned").closed = true;
        cvar.notify_all();
    }

    fn pop(&self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let (lock, cvar) = &*self.inner;
        let deadline = Instant::now() + timeout;
        let mut inner = lock.lock().expect("mailbox poisoned");
        loop {
            if let Some(bytes) = inner.queue.pop_front() {
                return Ok(bytes);
            }
            if inner.closed {
                return Err(TransportError::Closed);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout);
            }
            let (guard, _) = cvar
                .wait_timeout(inner, deadline - now)
                .expect("mailbox poisoned");
            inner = guard;
        }
    }
}

/// One end of an in-process duplex pair.
pub struct MemTransport {
    tx: Mailbox,
    rx: Mailbox,
    timeout: Duration,
    max_chunk: usize,
}

/// Create a connected in-process transport pair.
pub fn mem_pair(timeout_ms: u64, max_chunk: usize) -> (MemTransport, MemTransport) {
    let a = Mailbox::default();
    let b = Mailbox::default();
    let timeout = Duration::from_millis(timeout_ms);
    (
        MemTransport {
            tx: a.clone(),
            rx: b.clone(),
            timeout,
            max_chunk,
        },
        MemTransport {
            tx: b,
            rx: a,
            timeout,
            max_chunk,
        },
    )
}

impl MemTransport {
    pub fn close(&self) {
        self.tx.close();
    }
}

impl Transport for MemTransport {
    fn send_msg(&mut self, msg_type: u8, payload: &[u8]) -> Result<(), TransportError> {
        let stream: Vec<u8> = encode_frame(msg_type, payload, self.max_chunk)?.concat();
        self.tx.push(stream);
        Ok(())
    }

    fn recv_msg(&mut self) -> Result<(u8, Vec<u8>), TransportError> {
        let stream = self.rx.pop(self.timeout)?;
        let (msg_type, payload, _) = crate::wire::decode_frames(&stream)?;
        Ok((msg_type, payload))
    }

    fn max_chunk(&self) -> usize {
        self.max_chunk
    }
}

/// Deterministic fault schedule for one direction of a scenario run.
#[derive(Debug, Clone, Default)]
pub struct FaultPlan {
    /// Delay applied before each send.
    pub delay_ms: u64,
    /// Probability in [0, 1] that a send attempt is dropped.
    pub loss_pct: f64,
    /// XOR byte `.1` of message number `.0` (0-based) with mask `.2`.
    pub tamper: Option<(usize, usize, u8)>,
    /// Seed for the loss draws.
    pub seed: u64,
}

/// Wraps a transport with the fault plan. Loss is simulated at send time
/// with one transport-level retransmit; a second consecutive loss means the
/// message never arrives and the peer times out.
pub struct FaultTransport<T: Transport> {
    inner: T,
    plan: FaultPlan,
    rng_state: u64,
    send_index: usize,
}

impl<T: Transport> FaultTransport<T> {
    pub fn new(inner: T, plan: FaultPlan) -> Self {
        let rng_state = plan.seed | 1;
        Self {
            inner,
            plan,
            rng_state,
            send_index: 0,
        }
    }

    /// xorshift64*, plenty for reproducible loss draws.
    fn next_unit(&mut self) -> f64 {
        let mut x = self.rng_state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.rng_state = x;
        let v = x.wrapping_mul(0x2545F4914F6CDD1D) >> 11;
        v as f64 / (1u64 << 53) as f64
    }

    fn dropped(&mut self) -> bool {
        self.plan.loss_pct > 0.0 && self.next_unit() < self.plan.loss_pct
    }
}

impl<T: Transport> Transport for FaultTransport<T> {
    fn send_msg(&mut self, msg_type: u8, payload: &[u8]) -> Result<(), TransportError> {
        let index = self.send_index;
        self.send_index += 1;

        if self.plan.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(self.plan.delay_ms));
        }

        let mut payload = payload.to_vec();
        if let Some((msg_index, offset, mask)) = self.plan.tamper {
            if msg_index == index && offset < payload.len() {
                payload[offset] ^= mask;
            }
        }

        // First attempt, then at most one retransmit.
        if !self.dropped() {
            return self.inner.send_msg(msg_type, &payload);
        }
        if !self.dropped() {
            return self.inner.send_msg(msg_type, &payload);
        }
        // Both copies lost; the peer will time out.
        Ok(())
    }

    fn recv_msg(&mut self) -> Result<(u8, Vec<u8>), TransportError> {
        self.inner.recv_msg()
    }

    fn max_chunk(&self) -> usize {
        self.inner.max_chunk()
    }
}
