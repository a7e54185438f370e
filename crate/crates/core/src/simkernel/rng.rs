use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream owned by one simulation component.
///
/// Streams are keyed by `(seed, stream_id)`: ChaCha's native stream selector
/// keeps each component's draws independent of how many draws any other
/// component makes.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Stable stream ids for named components, so that adding a component never
/// shifts the ids of existing ones.
pub fn stream_id_for(name: &str) -> u64 {
    // FNV-1a; only needs to be stable, not cryptographic.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
