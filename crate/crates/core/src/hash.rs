//! Incremental polynomial hashing of traces modulo the Mersenne prime 2^61 - 1.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dag::Label;

const MODULUS: u64 = (1 << 61) - 1;

/// Seed used when a caller does not pick a hash base explicitly.
pub const DEFAULT_HASH_SEED: u64 = 0x7261_6365_6861_7368;

/// 64-bit hash of a trace. Printed as lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceHash(pub u64);

impl TraceHash {
    /// Hash of the empty trace.
    pub const EMPTY: TraceHash = TraceHash(0);
}

impl fmt::Display for TraceHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Karp-Rabin style hasher: `h(t || l) = h(t) * base + (l + 1) mod 2^61-1`.
///
/// Labels are shifted by one so that a leading label 0 still changes the
/// hash; otherwise `[0, x]` and `[x]` would collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceHasher {
    base: u64,
}

impl TraceHasher {
    /// Draws a base uniformly from `[2^32, 2^61 - 2]` using a seeded RNG.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            base: rng.random_range((1u64 << 32)..MODULUS - 1),
        }
    }

    pub fn with_base(base: u64) -> Self {
        assert!(base > 1 && base < MODULUS, "hash base must lie in (1, 2^61 - 1)");
        Self { base }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    #[inline]
    pub fn extend(&self, h: TraceHash, label: Label) -> TraceHash {
        let prod = h.0 as u128 * self.base as u128 + label.0 as u128 + 1;
        TraceHash(reduce(prod))
    }

    pub fn hash(&self, trace: &[Label]) -> TraceHash {
        trace.iter().fold(TraceHash::EMPTY, |h, &l| self.extend(h, l))
    }
}

impl Default for TraceHasher {
    fn default() -> Self {
        Self::from_seed(DEFAULT_HASH_SEED)
    }
}

#[inline]
fn reduce(x: u128) -> u64 {
    // x < 2^122, so two folds bring it below 2 * MODULUS.
    let folded = (x & MODULUS as u128) + (x >> 61);
    let folded = ((folded & MODULUS as u128) + (folded >> 61)) as u64;
    if folded >= MODULUS {
        folded - MODULUS
    } else {
        folded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slow_hash(base: u64, trace: &[Label]) -> u64 {
        let m = MODULUS as u128;
        trace
            .iter()
            .fold(0u128, |h, l| (h * base as u128 + l.0 as u128 + 1) % m) as u64
    }

    #[test]
    fn deterministic() {
        let h = TraceHasher::from_seed(3);
        let t = [Label(1), Label(2), Label(3)];
        assert_eq!(h.hash(&t), h.hash(&t.clone()));
        assert_eq!(TraceHasher::from_seed(3), h);
    }

    #[test]
    fn leading_zero_label_matters() {
        let h = TraceHasher::default();
        assert_ne!(h.hash(&[Label(0), Label(5)]), h.hash(&[Label(5)]));
        assert_ne!(h.hash(&[Label(0)]), TraceHash::EMPTY);
    }

    #[test]
    fn reduce_edges() {
        assert_eq!(reduce(MODULUS as u128), 0);
        assert_eq!(reduce(MODULUS as u128 - 1), MODULUS - 1);
        let big = (MODULUS as u128 - 1) * (MODULUS as u128 - 1) + u32::MAX as u128;
        assert_eq!(reduce(big) as u128, big % MODULUS as u128);
    }

    #[test]
    fn display_is_lower_hex() {
        assert_eq!(TraceHash(0xabc).to_string(), "0000000000000abc");
    }

    proptest! {
        #[test]
        fn matches_reference(seed in any::<u64>(), t in prop::collection::vec(any::<u32>(), 0..20)) {
            let h = TraceHasher::from_seed(seed);
            let t: Vec<Label> = t.into_iter().map(Label).collect();
            prop_assert_eq!(h.hash(&t).0, slow_hash(h.base(), &t));
        }
    }
}
