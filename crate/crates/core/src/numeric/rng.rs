use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tags for the purpose component of derived streams.
pub mod purpose {
    pub const DATA: u64 = 0x01;
    pub const PROJECTOR: u64 = 0x02;
    pub const INIT: u64 = 0x03;
    pub const BATCH: u64 = 0x04;
    pub const CRITIC: u64 = 0x05;
    pub const JITTER: u64 = 0x06;
    pub const TEST: u64 = 0x07;
    pub const NOISE: u64 = 0x08;
    pub const SUBSET: u64 = 0x09;
    pub const QUANTIZE: u64 = 0x0a;
}

/// A reproducible random stream: ChaCha8 keyed by `seed`, on stream `stream_id`.
///
/// ChaCha streams with different ids are independent keystreams, so the output
/// of one cell never depends on how many other cells ran before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Stream for a sub-task identified by `tag`.
    pub fn child(&self, tag: u64) -> Self {
        let id = splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0xD1B5_4A32_D192_ED03)));
        Self { seed: self.seed, stream_id: id }
    }

    /// Stream for a tuple of tags, e.g. `(run, theta, purpose)`.
    pub fn derive(&self, tags: &[u64]) -> Self {
        tags.iter().fold(*self, |s, &t| s.child(t))
    }

    /// Collapse seed and stream into a single 64-bit seed, used where a
    /// serialized record only has room for one integer.
    pub fn fold(&self) -> u64 {
        splitmix64(self.seed ^ splitmix64(self.stream_id))
    }
}
