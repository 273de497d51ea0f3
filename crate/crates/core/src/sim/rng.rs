use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NodeId;

/// What a random stream is used for. Each `(node, purpose)` pair owns an
/// independent stream, so adding a node never shifts another node's draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Channel,
    Drift,
    Sync,
    Hop,
    Scenario,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channel => 1,
            Purpose::Drift => 2,
            Purpose::Sync => 3,
            Purpose::Hop => 4,
            Purpose::Scenario => 5,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the substream seed for `(node, purpose)` from the master seed.
pub fn substream_seed(master: u64, node: NodeId, purpose: Purpose) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ (u64::from(node) << 8) ^ purpose.tag());
    splitmix64(b)
}

pub struct RngStream {
    pub seed: u64,
    pub node: NodeId,
    pub purpose: Purpose,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, node: NodeId, purpose: Purpose) -> Self {
        Self {
            seed: master_seed,
            node,
            purpose,
            rng: ChaCha8Rng::seed_from_u64(substream_seed(master_seed, node, purpose)),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl std::fmt::Debug for RngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("node", &self.node)
            .field("purpose", &self.purpose)
            .finish()
    }
}
