use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream. Each label gets its own ChaCha stream, so
/// adding draws to one never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamLabel {
    /// The particle's seed vector `u`.
    Seed = 1,
    /// Optimizer starting point.
    Init = 2,
    /// Random-walk proposals.
    Proposal = 3,
    /// Fresh seeds for posterior-predictive draws.
    Predictive = 4,
    /// Baseline samplers' prior/proposal draws.
    Sampler = 5,
}

const LABEL_BITS: u32 = 4;

/// Random streams of one particle, keyed by `(master_seed, index, label)`.
///
/// ChaCha is counter based: the master seed fixes the key and
/// `(index, label)` selects one of 2⁶⁴ streams, so every stream can be
/// reconstructed without touching the others and no stream depends on
/// which worker runs the particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticleSeedStream {
    master_seed: u64,
    index: u64,
}

impl ParticleSeedStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        assert!(index < 1 << (64 - LABEL_BITS), "particle index too large");
        Self { master_seed, index }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn rng(&self, label: StreamLabel) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((self.index << LABEL_BITS) | label as u64);
        rng
    }
}

/// SplitMix64 finalizer; derives per-repetition master seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
