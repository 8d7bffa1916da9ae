//! Shared test helpers.

pub mod kats;

use rand_core::{TryCryptoRng, TryRng};

/// Entropy source that replays a fixed byte string (for seeded vectors) or
/// an endless counter-mode SHA-256 stream (for pinned-but-unbounded runs).
pub struct FixedRng {
    mode: Mode,
    pos: usize,
}

enum Mode {
    Fixed(Vec<u8>),
    Counter { seed: u8, block: Vec<u8> },
}

impl FixedRng {
    /// Replay exactly `bytes`; panics when exhausted.
    pub fn new(bytes: &[u8]) -> Self {
        Self {
            mode: Mode::Fixed(bytes.to_vec()),
            pos: 0,
        }
    }

    /// Endless deterministic stream derived from `seed`.
    pub fn counter(seed: u8) -> Self {
        Self {
            mode: Mode::Counter {
                seed,
                block: Vec::new(),
            },
            pos: 0,
        }
    }
}

impl TryRng for FixedRng {
    type Error = core::convert::Infallible;

    fn try_next_u32(&mut self) -> Result<u32, Self::Error> {
        let mut b = [0u8; 4];
        self.try_fill_bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn try_next_u64(&mut self) -> Result<u64, Self::Error> {
        let mut b = [0u8; 8];
        self.try_fill_bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn try_fill_bytes(&mut self, dst: &mut [u8]) -> Result<(), Self::Error> {
        match &mut self.mode {
            Mode::Fixed(bytes) => {
                assert!(
                    self.pos + dst.len() <= bytes.len(),
                    "FixedRng exhausted: asked for {} with {} left",
                    dst.len(),
                    bytes.len() - self.pos
                );
                dst.copy_from_slice(&bytes[self.pos..self.pos + dst.len()]);
                self.pos += dst.len();
            }
            Mode::Counter { seed, block } => {
                use sha2::{Digest, Sha256};
                for byte in dst.iter_mut() {
                    if block.is_empty() {
                        let mut h = Sha256::new();
                        h.update([*seed]);
                        h.update((self.pos as u64).to_be_bytes());
                        *block = h.finalize().to_vec();
                    }
                    *byte = block.remove(0);
                    self.pos += 1;
                }
            }
        }
        Ok(())
    }
}

impl TryCryptoRng for FixedRng {}
