//! Counter-based substream derivation.
//!
//! Every random draw in a simulation comes from a ChaCha8 generator whose key
//! is a pure function of `(master_seed, purpose, asset, map, realization)`.
//! Work units can therefore be evaluated in any order, on any number of
//! threads, and still produce bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a substream is used for. Distinct purposes never share draws, so
/// e.g. the imputed and ground-truth runs see the same damage uniforms
/// even though their class draws differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    GroundMotion = 1,
    ExposureClass = 2,
    Damage = 3,
    UnitCost = 4,
    Synthetic = 5,
}

/// Indices identifying one work unit. Unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamKey {
    pub asset: u64,
    pub map: u64,
    pub realization: u64,
}

impl StreamKey {
    pub fn new(asset: usize, map: usize, realization: usize) -> Self {
        Self {
            asset: asset as u64,
            map: map as u64,
            realization: realization as u64,
        }
    }

    pub fn map(map: usize) -> Self {
        Self {
            map: map as u64,
            ..Self::default()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the generator for one `(purpose, key)` work unit.
pub fn substream(master_seed: u64, purpose: Purpose, key: StreamKey) -> SimRng {
    let mut state = splitmix64(master_seed);
    for word in [purpose as u64, key.asset, key.map, key.realization] {
        state = splitmix64(state ^ word.wrapping_mul(0xd6e8_feb8_6659_fd93));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
