//! The post-handshake secure record layer.
//!
//! Records are Ascon-128a AEAD outputs under per-direction keys. The
//! sequence number is implicit — never on the wire — and enters the record
//! twice: the nonce is `base_iv XOR seq` (sequence in the low 8 bytes,
//! big-endian) and the associated data is `msg_type || seq`. The receiver
//! enforces its expected sequence number exactly, so replayed or reordered
//! records reject.
//!
//! Because the sequence is implicit, a failed open is classified by probing
//! a bounded window of neighboring sequence numbers: a record that
//! authenticates at some other nearby sequence is a replay/reorder
//! ([`ChannelError::SeqMismatch`]); anything else is tampering
//! ([`ChannelError::AuthFailure`]).

use thiserror::Error;

pub use crate::handshake::{DirectionKeys, DirectionalKeys};
use crate::suite::{aead_open, aead_seal, SuiteError};
use crate::transport::{Transport, TransportError};
use crate::wire::{MSG_CLOSE, MSG_TABLE_ACK, MSG_TABLE_DATA};

/// Connections close once the send sequence reaches 2^48.
pub const SEQ_LIMIT: u64 = 1 << 48;

/// How far the failed-open classifier probes for a replayed/reordered
/// sequence number in each direction.
const SEQ_PROBE_WINDOW: u64 = 64;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("record failed authentication")]
    AuthFailure,
    #[error("record out of sequence (expected {expected})")]
    SeqMismatch { expected: u64 },
    #[error("sequence space exhausted")]
    Overflow,
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error("unexpected message type {0:#04x}")]
    UnexpectedMessage(u8),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Nonce schedule: base IV XORed with the sequence number in the low 8
/// bytes.
pub fn record_nonce(iv: &[u8; 16], seq: u64) -> [u8; 16] {
    let mut nonce = *iv;
    for (n, s) in nonce[8..].iter_mut().zip(seq.to_be_bytes()) {
        *n ^= s;
    }
    nonce
}

/// Associated data: message type byte followed by the big-endian sequence.
pub fn record_aad(msg_type: u8, seq: u64) -> [u8; 9] {
    let mut aad = [0u8; 9];
    aad[0] = msg_type;
    aad[1..].copy_from_slice(&seq.to_be_bytes());
    aad
}

/// Seal one record.
pub fn seal_record(
    keys: &DirectionKeys,
    msg_type: u8,
    seq: u64,
    plaintext: &[u8],
) -> Result<Vec<u8>, ChannelError> {
    if seq >= SEQ_LIMIT {
        return Err(ChannelError::Overflow);
    }
    let nonce = record_nonce(&keys.iv, seq);
    aead_seal(&keys.key, &nonce, &record_aad(msg_type, seq), plaintext)
        .map_err(|_| ChannelError::AuthFailure)
}

/// Open one record, enforcing `expected_seq` exactly.
pub fn open_record(
    keys: &DirectionKeys,
    msg_type: u8,
    expected_seq: u64,
    record: &[u8],
) -> Result<Vec<u8>, ChannelError> {
    if expected_seq >= SEQ_LIMIT {
        return Err(ChannelError::Overflow);
    }
    let try_open = |seq: u64| -> Result<Vec<u8>, SuiteError> {
        let nonce = record_nonce(&keys.iv, seq);
        aead_open(&keys.key, &nonce, &record_aad(msg_type, seq), record)
    };
    match try_open(expected_seq) {
        Ok(pt) => Ok(pt),
        Err(_) => {
            // Classify: does the record authenticate at a nearby sequence?
            let lo = expected_seq.saturating_sub(SEQ_PROBE_WINDOW);
            let hi = (expected_seq + SEQ_PROBE_WINDOW).min(SEQ_LIMIT - 1);
            for seq in lo..=hi {
                if seq != expected_seq && try_open(seq).is_ok() {
                    return Err(ChannelError::SeqMismatch {
                        expected: expected_seq,
                    });
                }
            }
            Err(ChannelError::AuthFailure)
        }
    }
}

/// Acknowledgment for one table transfer: the table id and how many bytes
/// the receiver reassembled. Carried inside an authenticated record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableAck {
    pub table_id: u16,
    pub byte_count: u64,
}

impl TableAck {
    fn encode(&self) -> [u8; 10] {
        let mut out = [0u8; 10];
        out[..2].copy_from_slice(&self.table_id.to_be_bytes());
        out[2..].copy_from_slice(&self.byte_count.to_be_bytes());
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self, ChannelError> {
        if bytes.len() != 10 {
            return Err(ChannelError::Malformed("table ack"));
        }
        Ok(Self {
            table_id: u16::from_be_bytes(bytes[..2].try_into().expect("len 2")),
            byte_count: u64::from_be_bytes(bytes[2..].try_into().expect("len 8")),
        })
    }
}

/// What [`Channel::serve_next`] received.
#[derive(Debug)]
pub enum Served {
    Table { table_id: u16, data: Vec<u8> },
    Closed,
}

/// An established secure channel over a transport. Each half owns its own
/// sequence counter.
pub struct Channel<T: Transport> {
    transport: T,
    send: DirectionKeys,
    recv: DirectionKeys,
    send_seq: u64,
    recv_seq: u64,
}

impl<T: Transport> Channel<T> {
    /// Client endpoint: sends client-to-server, receives server-to-client.
    pub fn client(transport: T, keys: &DirectionalKeys) -> Self {
        Self {
            transport,
            send: keys.c2s.clone(),
            recv: keys.s2c.clone(),
            send_seq: 0,
            recv_seq: 0,
        }
    }

    /// Server endpoint: the mirror image of [`Channel::client`].
    pub fn server(transport: T, keys: &DirectionalKeys) -> Self {
        Self {
            transport,
            send: keys.s2c.clone(),
            recv: keys.c2s.clone(),
            send_seq: 0,
            recv_seq: 0,
        }
    }

    pub fn send(&mut self, msg_type: u8, plaintext: &[u8]) -> Result<(), ChannelError> {
        let record = seal_record(&self.send, msg_type, self.send_seq, plaintext)?;
        self.send_seq += 1;
        self.transport.send_msg(msg_type, &record)?;
        Ok(())
    }

    pub fn recv(&mut self) -> Result<(u8, Vec<u8>), ChannelError> {
        let (msg_type, record) = self.transport.recv_msg()?;
        let plaintext = open_record(&self.recv, msg_type, self.recv_seq, &record)?;
        self.recv_seq += 1;
        Ok((msg_type, plaintext))
    }

    /// Send one simulated meter table and wait for the authenticated ack.
    pub fn transfer_table(&mut self, table_id: u16, table: &[u8]) -> Result<TableAck, ChannelError> {
        let mut payload = Vec::with_capacity(2 + table.len());
        payload.extend_from_slice(&table_id.to_be_bytes());
        payload.extend_from_slice(table);
        self.send(MSG_TABLE_DATA, &payload)?;

        let (msg_type, ack) = self.recv()?;
        if msg_type != MSG_TABLE_ACK {
            return Err(ChannelError::UnexpectedMessage(msg_type));
        }
        TableAck::decode(&ack)
    }

    /// Receive the next table (answering with an ack) or a close.
    pub fn serve_next(&mut self) -> Result<Served, ChannelError> {
        let (msg_type, plaintext) = self.recv()?;
        match msg_type {
            MSG_TABLE_DATA => {
                if plaintext.len() < 2 {
                    return Err(ChannelError::Malformed("table data"));
                }
                let table_id = u16::from_be_bytes(plaintext[..2].try_into().expect("len 2"));
                let data = plaintext[2..].to_vec();
                let ack = TableAck {
                    table_id,
                    byte_count: data.len() as u64,
                };
                self.send(MSG_TABLE_ACK, &ack.encode())?;
                Ok(Served::Table { table_id, data })
            }
            MSG_CLOSE => Ok(Served::Closed),
            other => Err(ChannelError::UnexpectedMessage(other)),
        }
    }

    pub fn close(&mut self) -> Result<(), ChannelError> {
        self.send(MSG_CLOSE, b"")
    }

    pub fn into_transport(self) -> T {
        self.transport
    }
}
