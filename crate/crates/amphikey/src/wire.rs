//! Byte-exact framing and chunking for constrained links.
//!
//! Every protocol message travels as one or more frames:
//!
//! ```text
//! offset  len  field
//! 0       4    magic "AMPH"
//! 4       1    version (0x01)
//! 5       1    msg_type
//! 6       1    flags (bit0 = more chunks follow)
//! 7       2    chunk_index, big-endian, starting at 0
//! 9       4    payload_len, big-endian
//! 13      n    payload
//! ```
//!
//! Oversized messages are split into chunks of at most `max_chunk` payload
//! bytes; reassembly concatenates chunk payloads in index order. A
//! reassembled message never exceeds [`MAX_MESSAGE_LEN`].

use thiserror::Error;

/// Frame magic.
pub const MAGIC: [u8; 4] = *b"AMPH";
/// Wire format version.
pub const VERSION: u8 = 0x01;
/// Fixed frame header length.
pub const HEADER_LEN: usize = 13;
/// Upper bound on a reassembled message.
pub const MAX_MESSAGE_LEN: usize = 64 * 1024;
/// Default chunk payload bound, sized for constrained-link APDUs.
pub const DEFAULT_MAX_CHUNK: usize = 1024;
/// Smallest permitted chunk payload bound.
pub const MIN_CHUNK: usize = 64;

/// Flag bit: more chunks of the same message follow.
pub const FLAG_MORE_CHUNKS: u8 = 0x01;

/// Handshake message types.
pub const MSG_SERVER_HELLO: u8 = 0x01;
pub const MSG_CLIENT_KEYS: u8 = 0x02;
pub const MSG_CONFIRM: u8 = 0x03;
pub const MSG_ABORT: u8 = 0x7f;
/// Record-layer message types.
pub const MSG_TABLE_DATA: u8 = 0x10;
pub const MSG_TABLE_ACK: u8 = 0x11;
pub const MSG_CLOSE: u8 = 0x12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("bad frame magic")]
    BadMagic,
    #[error("unsupported wire version {0:#04x}")]
    BadVersion(u8),
    #[error("chunk index gap: expected {expected}, got {got}")]
    ChunkGap { expected: u16, got: u16 },
    #[error("message exceeds {MAX_MESSAGE_LEN} byte cap")]
    Oversize,
    #[error("frame truncated")]
    Truncated,
    #[error("payload of {len} bytes exceeds the {MAX_MESSAGE_LEN} byte cap")]
    PayloadTooLarge { len: usize },
    #[error("max_chunk {0} below minimum {MIN_CHUNK}")]
    ChunkTooSmall(usize),
}

/// One decoded frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub flags: u8,
    pub chunk_index: u16,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn more_chunks(&self) -> bool {
        self.flags & FLAG_MORE_CHUNKS != 0
    }
}

/// Split `payload` into encoded frames of at most `max_chunk` payload bytes.
///
/// The concatenated chunk payloads reproduce the input exactly; the final
/// chunk clears the more-chunks flag. An empty payload yields a single
/// frame with `payload_len` 0.
pub fn encode_frame(msg_type: u8, payload: &[u8], max_chunk: usize) -> Result<Vec<Vec<u8>>, WireError> {
    if max_chunk < MIN_CHUNK {
        return Err(WireError::ChunkTooSmall(max_chunk));
    }
    if payload.len() > MAX_MESSAGE_LEN {
        return Err(WireError::PayloadTooLarge { len: payload.len() });
    }

    let chunks: Vec<&[u8]> = if payload.is_empty() {
        vec![&[]]
    } else {
        payload.chunks(max_chunk).collect()
    };

    let mut frames = Vec::with_capacity(chunks.len());
    for (index, chunk) in chunks.iter().enumerate() {
        let more = index + 1 < chunks.len();
        let mut frame = Vec::with_capacity(HEADER_LEN + chunk.len());
        frame.extend_from_slice(&MAGIC);
        frame.push(VERSION);
        frame.push(msg_type);
        frame.push(if more { FLAG_MORE_CHUNKS } else { 0 });
        frame.extend_from_slice(&(index as u16).to_be_bytes());
        frame.extend_from_slice(&(chunk.len() as u32).to_be_bytes());
        frame.extend_from_slice(chunk);
        frames.push(frame);
    }
    Ok(frames)
}

/// Decode a single frame from the front of `bytes`.
///
/// Returns the frame and the number of bytes consumed. Never reads past
/// `bytes`, and never panics on arbitrary input.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated);
    }
    if bytes[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(WireError::BadVersion(bytes[4]));
    }
    let msg_type = bytes[5];
    let flags = bytes[6];
    let chunk_index = u16::from_be_bytes([bytes[7], bytes[8]]);
    let payload_len = u32::from_be_bytes([bytes[9], bytes[10], bytes[11], bytes[12]]) as usize;
    if payload_len > MAX_MESSAGE_LEN {
        return Err(WireError::Oversize);
    }
    let end = HEADER_LEN
        .checked_add(payload_len)
        .ok_or(WireError::Oversize)?;
    if bytes.len() < end {
        return Err(WireError::Truncated);
    }
    Ok((
        Frame {
            msg_type,
            flags,
            chunk_index,
            payload: bytes[HEADER_LEN..end].to_vec(),
        },
        end,
    ))
}

/// Incremental reassembly of one message from its frames.
#[derive(Debug, Default)]
pub struct Reassembler {
    msg_type: Option<u8>,
    next_index: u16,
    buf: Vec<u8>,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed the next frame. Returns the completed `(msg_type, payload)` once
    /// the final chunk arrives.
    pub fn push(&mut self, frame: Frame) -> Result<Option<(u8, Vec<u8>)>, WireError> {
        if frame.chunk_index != self.next_index {
            return Err(WireError::ChunkGap {
                expected: self.next_index,
                got: frame.chunk_index,
            });
        }
        match self.msg_type {
            None => self.msg_type = Some(frame.msg_type),
            // A msg_type switch mid-message is a sequencing violation.
            Some(t) if t != frame.msg_type => {
                return Err(WireError::ChunkGap {
                    expected: self.next_index,
                    got: frame.chunk_index,
                })
            }
            Some(_) => {}
        }
        if self.buf.len() + frame.payload.len() > MAX_MESSAGE_LEN {
            return Err(WireError::Oversize);
        }
        self.buf.extend_from_slice(&frame.payload);
        self.next_index = self.next_index.checked_add(1).ok_or(WireError::Oversize)?;

        if frame.more_chunks() {
            Ok(None)
        } else {
            let msg_type = self.msg_type.take().expect("set on first frame");
            let payload = core::mem::take(&mut self.buf);
            self.next_index = 0;
            Ok(Some((msg_type, payload)))
        }
    }
}

/// Decode one complete message from a byte stream.
///
/// Consumes frames until the final chunk and returns `(msg_type, payload,
/// bytes_consumed)`. Strict about magic, version, chunk ordering, and the
/// message cap; a garbage prefix yields an error, never a panic.
pub fn decode_frames(bytes: &[u8]) -> Result<(u8, Vec<u8>, usize), WireError> {
    let mut reassembler = Reassembler::new();
    let mut offset = 0;
    loop {
        let (frame, used) = decode_frame(&bytes[offset..])?;
        offset += used;
        if let Some((msg_type, payload)) = reassembler.push(frame)? {
            return Ok((msg_type, payload, offset));
        }
    }
}
