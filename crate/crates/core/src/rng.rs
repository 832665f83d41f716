//! Counter-based random number streams.
//!
//! Every random quantity in this crate is a pure function of
//! `(master seed, stream index, counter)`, so trials can be run in any
//! order (or in parallel) and still reproduce bit-identically.
//!
//! The generator is a keyed SplitMix64-style bijection: the counter is
//! advanced by the 64-bit golden ratio and pushed through two rounds of
//! the Stafford "variant 13" mixer. Constants:
//!
//! ```text
//! GAMMA = 0x9e3779b97f4a7c15   (2^64 / golden ratio)
//! M1    = 0xbf58476d1ce4e5b9
//! M2    = 0x94d049bb133111eb
//! ```

/// Increment for the counter sequence (odd, so the orbit has period 2^64).
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const M1: u64 = 0xbf58_476d_1ce4_e5b9;
const M2: u64 = 0x94d0_49bb_1331_11eb;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(M1);
    z = (z ^ (z >> 27)).wrapping_mul(M2);
    z ^ (z >> 31)
}

/// A counter-based stream of 64-bit words.
///
/// `CounterRng::stream(master, index)` derives an independent stream for
/// trial `index`; the key derivation is itself one mixer round, so nearby
/// indices give unrelated streams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: mix64(seed ^ GAMMA), counter: 0 }
    }

    /// Independent stream `index` keyed off a master seed.
    pub fn stream(master: u64, index: u64) -> Self {
        CounterRng {
            key: mix64(master ^ mix64(index.wrapping_add(GAMMA))),
            counter: 0,
        }
    }

    /// The word at an absolute counter position, without touching the
    /// stream state. This is what makes itineraries lazily indexable.
    #[inline]
    pub fn at(&self, position: u64) -> u64 {
        mix64(self.key ^ position.wrapping_mul(GAMMA).wrapping_add(GAMMA))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1), 53 bits of mantissa.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [-pi, pi).
    #[inline]
    pub fn next_angle(&mut self) -> f64 {
        (self.next_f64() * 2.0 - 1.0) * std::f64::consts::PI
    }

    /// Uniform integer in [0, n). Rejection-free multiply-shift is fine
    /// here: n is always tiny compared to 2^64, the bias is < 2^-50.
    #[inline]
    pub fn next_below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
