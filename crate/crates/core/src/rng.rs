//! Deterministic random substreams.
//!
//! Every random decision in a run draws from a generator keyed by the master
//! seed and a [`Stream`] label. Two runs with the same seed agree slot by
//! slot, and a single slot can be replayed without running its predecessors.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Label of an independent substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    CommitBit,
    AliceBits,
    BobBits,
    /// Photon `photon` of slot `(sequence, slot)`.
    Photon {
        sequence: usize,
        slot: usize,
        photon: usize,
    },
    /// Photon Alice re-emits after a capture in slot `(sequence, slot)`.
    Resend {
        sequence: usize,
        slot: usize,
        photon: usize,
    },
    /// Alice's choice of which slots of a sequence to intercept.
    Interception {
        sequence: usize,
    },
    /// Alice's choice of which bit to flip when forging an opening.
    Alter,
    /// Seed of trial `index` in a repeated experiment.
    Trial {
        index: u64,
    },
    /// Free-form label for experiment-level draws.
    Custom {
        tag: u64,
        index: u64,
    },
}

impl Stream {
    fn words(self) -> [u64; 4] {
        match self {
            Stream::CommitBit => [1, 0, 0, 0],
            Stream::AliceBits => [2, 0, 0, 0],
            Stream::BobBits => [3, 0, 0, 0],
            Stream::Photon {
                sequence,
                slot,
                photon,
            } => [4, sequence as u64, slot as u64, photon as u64],
            Stream::Resend {
                sequence,
                slot,
                photon,
            } => [5, sequence as u64, slot as u64, photon as u64],
            Stream::Interception { sequence } => [6, sequence as u64, 0, 0],
            Stream::Alter => [7, 0, 0, 0],
            Stream::Trial { index } => [8, index, 0, 0],
            Stream::Custom { tag, index } => [9, tag, index, 0],
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream `stream` under `master`.
pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    stream
        .words()
        .iter()
        .enumerate()
        .fold(mix(master ^ GOLDEN), |acc, (k, &w)| {
            mix(acc ^ mix(w.wrapping_add(GOLDEN.wrapping_mul(k as u64 + 1))))
        })
}

pub fn substream(master: u64, stream: Stream) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, stream))
}
