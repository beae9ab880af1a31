//! Counter-based random streams.
//!
//! A stream is addressed by a run seed plus a path of integers (purpose,
//! update index, lane, ...). The seed selects the ChaCha key and the hashed
//! path selects the ChaCha stream id, so any two distinct paths are
//! independent and a given path always yields the same sequence no matter
//! which worker consumes it or when.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream purposes used by the training and evaluation drivers.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const SCHEDULER: u64 = 2;
    pub const ROLLOUT: u64 = 3;
    pub const UPDATE: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const LEVELS: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream for `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut id = splitmix64(path.len() as u64);
    for &p in path {
        id = splitmix64(id ^ splitmix64(p));
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id);
    rng
}

/// Child stream seeded from the parent's next output.
pub fn fork(parent: &mut SimRng) -> SimRng {
    let mut seed = [0u8; 32];
    parent.fill_bytes(&mut seed);
    ChaCha8Rng::from_seed(seed)
}

/// `n` child streams, forked in order.
pub fn fork_many(parent: &mut SimRng, n: usize) -> Vec<SimRng> {
    (0..n).map(|_| fork(parent)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_sequence() {
        let a: Vec<u64> = (0..8)
            .map({
                let mut r = stream(7, &[3, 11]);
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..8)
            .map({
                let mut r = stream(7, &[3, 11]);
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_paths_diverge() {
        let mut a = stream(7, &[3, 11]);
        let mut b = stream(7, &[3, 12]);
        let mut c = stream(8, &[3, 11]);
        let x: u64 = a.random();
        assert_ne!(x, b.random::<u64>());
        assert_ne!(x, c.random::<u64>());
    }

    #[test]
    fn fork_is_deterministic() {
        let mut p1 = stream(1, &[]);
        let mut p2 = stream(1, &[]);
        let mut c1 = fork(&mut p1);
        let mut c2 = fork(&mut p2);
        assert_eq!(c1.random::<u64>(), c2.random::<u64>());
    }
}
