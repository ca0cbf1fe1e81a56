//! Seed splitting.
//!
//! Every random stream in an experiment is derived from one global seed by
//! [`derive_seed`], keyed by a [`Stream`] purpose and up to two indices. The
//! mixing function is SplitMix64 applied to each word in turn, so changing
//! one input changes every downstream stream of that purpose and no other.

/// Purpose tags for derived random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Model weight initialization.
    Init = 1,
    /// Minibatch shuffling during server-side initialization training.
    ServerShuffle = 2,
    /// Minibatch shuffling for client `a` in round `b`.
    ClientShuffle = 3,
    /// Server-share draw and client partitioning.
    Partition = 4,
    /// Selection of trigger-bearing source samples for malicious client `a`.
    Trigger = 5,
    /// Synthetic training data.
    SyntheticTrain = 6,
    /// Synthetic test data.
    SyntheticTest = 7,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `purpose` indexed by `(a, b)` from `global`.
pub fn derive_seed(global: u64, purpose: Stream, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(global);
    for word in [purpose as u64, a, b] {
        h = splitmix64(h ^ word.wrapping_mul(GOLDEN));
    }
    h
}
