//! Reproducible random streams.
//!
//! Every Monte Carlo sample owns a [`StreamKey`] derived from
//! `(master seed, phase, sample index)`. The key seeds a ChaCha8 generator and
//! each reaction channel reads from its own ChaCha stream, so the unit-rate
//! Poisson process of channel `k` is the same object no matter how the
//! parameters perturb the firing order. Results are therefore independent of
//! the number of worker threads, and two simulations at nearby parameter
//! values driven by the same key share their underlying randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Phase labels used to separate the independent sample families of one run.
pub mod phase {
    pub const PLAIN: u64 = 0x01;
    pub const PATHWISE: u64 = 0x02;
    pub const COUPLED: u64 = 0x03;
    pub const CFD: u64 = 0x04;
    pub const PILOT_PATHWISE: u64 = 0x12;
    pub const PILOT_COUPLED: u64 = 0x13;
    pub const PILOT_BETA: u64 = 0x14;
    pub const BOX_PILOT: u64 = 0x20;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key identifying the random source of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    seed: [u8; 32],
}

impl StreamKey {
    pub fn new(master: u64, phase: u64, index: u64) -> Self {
        let mut seed = [0u8; 32];
        let mut state = mix64(master) ^ mix64(phase.wrapping_mul(0xD134_2543_DE82_EF95));
        state = mix64(state ^ index);
        for chunk in seed.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { seed }
    }

    /// Unit-exponential arrival streams, one per channel.
    pub fn arrivals(&self, channels: usize) -> ChannelStreams {
        let base = ChaCha8Rng::from_seed(self.seed);
        let rngs = (0..channels)
            .map(|k| {
                let mut rng = base.clone();
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        ChannelStreams { rngs }
    }

    /// An auxiliary generator disjoint from every channel stream.
    pub fn aux_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(u64::MAX);
        rng
    }
}

/// Source of unit-rate exponential increments of the channel clocks.
pub trait Arrivals {
    /// Next increment `ln(1/u)` of the Poisson process driving `channel`.
    fn next_arrival(&mut self, channel: usize) -> f64;
}

/// Independent per-channel generators.
#[derive(Clone, Debug)]
pub struct ChannelStreams {
    rngs: Vec<ChaCha8Rng>,
}

impl Arrivals for ChannelStreams {
    fn next_arrival(&mut self, channel: usize) -> f64 {
        // u in (0, 1]
        let u = 1.0 - self.rngs[channel].random::<f64>();
        -u.ln()
    }
}

/// Pre-drawn arrival sequences, for injecting exact values in tests.
#[derive(Clone, Debug)]
pub struct FixedArrivals {
    sequences: Vec<Vec<f64>>,
    cursor: Vec<usize>,
}

impl FixedArrivals {
    pub fn new(sequences: Vec<Vec<f64>>) -> Self {
        let cursor = vec![0; sequences.len()];
        Self { sequences, cursor }
    }
}

impl Arrivals for FixedArrivals {
    /// Returns `+inf` once a channel's sequence is exhausted.
    fn next_arrival(&mut self, channel: usize) -> f64 {
        let pos = self.cursor[channel];
        self.cursor[channel] += 1;
        self.sequences[channel].get(pos).copied().unwrap_or(f64::INFINITY)
    }
}

impl<A: Arrivals + ?Sized> Arrivals for &mut A {
    fn next_arrival(&mut self, channel: usize) -> f64 {
        (**self).next_arrival(channel)
    }
}
