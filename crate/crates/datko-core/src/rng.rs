//! Deterministic pseudo-random numbers for probe generation.
//!
//! splitmix64 is enough here: probes only need to be spread out and
//! reproducible bit for bit across platforms and across runs.

use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream
/// index; used so that tasks draw disjoint, order-independent probes.
pub fn derive_stream(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix(self.state)
    }

    /// Uniform in [0, 1), 53 mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// A vector of euclidean length 1, drawn by rejection from the cube.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.range(-1.0, 1.0)).collect();
            let norm_sq: f64 = v.iter().map(|c| c * c).sum();
            if norm_sq >= 1e-4 {
                let norm = norm_sq.sqrt();
                return v.into_iter().map(|c| c / norm).collect();
            }
        }
    }
}
