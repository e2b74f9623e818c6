//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream addressed by
//! `(master seed, experiment id, sample index)`. Sample `i` of an experiment
//! always sees the same numbers no matter which worker runs it or in which
//! order, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Experiment ids used by the library so that distinct estimators never share
/// streams under the same master seed.
pub mod experiment {
    pub const GFF_SAMPLE: u64 = 0x01;
    pub const CROSSING: u64 = 0x02;
    pub const CONNECTIVITY: u64 = 0x03;
    pub const DECOMPOSITION: u64 = 0x04;
    pub const CONDITIONAL: u64 = 0x05;
    pub const FKG: u64 = 0x06;
    pub const WALKS: u64 = 0x07;
    pub const BLOCKS: u64 = 0x08;
    pub const PLANE: u64 = 0x09;
    pub const IID: u64 = 0x0a;
    pub const MAX_FIELD: u64 = 0x0b;
    pub const RENORM_SEED: u64 = 0x0c;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Addresses a family of independent streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub experiment: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: u64) -> Self {
        StreamKey { seed, experiment }
    }

    /// Derive a sub-family, e.g. one per system size of a scan.
    pub fn child(&self, tag: u64) -> StreamKey {
        StreamKey {
            seed: self.seed,
            experiment: splitmix64(self.experiment ^ splitmix64(tag.wrapping_add(0x5851_f42d))),
        }
    }

    /// The stream for sample `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        let mut s = splitmix64(self.seed) ^ self.experiment.rotate_left(17);
        for chunk in bytes.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(index);
        rng
    }
}

pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}

pub fn standard_normals<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    fill_standard_normal(rng, &mut v);
    v
}
