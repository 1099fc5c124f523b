//! Seed-addressed randomness. Every stream is a pure function of the master
//! seed, a node path and a purpose, so estimates made at a node do not depend
//! on which query reached the node first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::boolfn::Restriction;

const DOMAIN: &[u8] = b"dtrecon/tape/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Score,
    Leaf,
    /// Points drawn by testers and harnesses rather than the reconstructor.
    Probe,
}

impl Purpose {
    fn tag(self) -> u8 {
        match self {
            Purpose::Score => 1,
            Purpose::Leaf => 2,
            Purpose::Probe => 3,
        }
    }
}

/// Byte encoding of an ordered path: 4-byte little-endian variable index
/// and one sign byte per assignment.
pub fn path_key(path: &Restriction) -> Vec<u8> {
    let mut key = Vec::with_capacity(path.len() * 5);
    for &(var, sign) in path.assignments() {
        key.extend_from_slice(&(var as u32).to_le_bytes());
        key.push(sign.bit() as u8);
    }
    key
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomTape {
    seed: u64,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        RandomTape { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream for `(path, purpose)`. Paths are ordered: the same set of
    /// assignments in a different order addresses a different stream.
    pub fn stream(&self, path: &Restriction, purpose: Purpose) -> ChaCha8Rng {
        self.stream_for_key(&path_key(path), purpose)
    }

    /// A stream keyed by arbitrary bytes.
    pub fn stream_for_key(&self, key: &[u8], purpose: Purpose) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.seed.to_le_bytes());
        h.update([purpose.tag()]);
        h.update((key.len() as u64).to_le_bytes());
        h.update(key);
        ChaCha8Rng::from_seed(h.finalize().into())
    }
}
