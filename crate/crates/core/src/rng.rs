//! Deterministic 64-bit counter-based random number generator.
//!
//! The generator is splitmix64: the output at counter position `k` is a fixed
//! avalanche hash of `seed + (k+1) * GAMMA`. Because every draw is a pure
//! function of (seed, counter), streams can be derived statelessly and runs
//! replayed from a checkpointed counter alone.
//!
//! Algorithm identifier recorded in run manifests: `splitmix64-v1`.

/// Weyl increment for splitmix64.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Name under which this generator is recorded in manifests and checkpoints.
pub const RNG_ALGORITHM: &str = "splitmix64-v1";

/// Fixed offsets separating the seed streams of one experiment.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const TASK: u64 = 2;
    pub const EVAL: u64 = 3;
    pub const GRADCHECK_INPUTS: u64 = 4;
    pub const GRADCHECK_TARGETS: u64 = 5;
    pub const READOUT: u64 = 6;
}

/// Derives an independent stream seed by hashing (seed, offset).
pub fn derive_seed(seed: u64, offset: u64) -> u64 {
    mix(seed ^ mix(offset.wrapping_mul(GAMMA)))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng64 {
    seed: u64,
    counter: u64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 { seed, counter: 0 }
    }

    /// Resumes a stream at a saved counter position.
    pub fn at_position(seed: u64, counter: u64) -> Self {
        Rng64 { seed, counter }
    }

    pub fn position(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, bound) by rejection-free modulo on 64 bits;
    /// bias is negligible for the desk-scale bounds used here (< 2^32).
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_replayable() {
        let mut a = Rng64::new(42);
        let xs: Vec<u64> = (0..5).map(|_| a.next_u64()).collect();
        let mut b = Rng64::new(42);
        let ys: Vec<u64> = (0..5).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);

        // Resuming at a saved counter reproduces the tail of the stream.
        let mut c = Rng64::at_position(42, 2);
        assert_eq!(c.next_u64(), xs[2]);
    }

    #[test]
    fn streams_differ() {
        assert_ne!(derive_seed(7, stream::INIT), derive_seed(7, stream::TASK));
        assert_ne!(derive_seed(7, stream::TASK), derive_seed(8, stream::TASK));
    }

    #[test]
    fn uniform_in_range() {
        let mut r = Rng64::new(1);
        for _ in 0..1000 {
            let x = r.uniform(-0.25, 0.25);
            assert!((-0.25..0.25).contains(&x));
        }
    }
}
