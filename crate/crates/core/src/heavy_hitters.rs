//! Misra-Gries frequent-items summary.
//!
//! Keeps at most `k` counters. Any item that occurs more than `n / (k + 1)`
//! times in a stream of length `n` is guaranteed to hold a counter at the
//! end; the counters themselves are underestimates, so survivors are only
//! candidates and need an exact recount.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CounterSet<K> {
    capacity: usize,
    entries: HashMap<K, u64>,
    processed: u64,
    peak: usize,
}

impl<K: Hash + Eq + Clone> CounterSet<K> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::domain("summary capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            entries: HashMap::with_capacity(capacity + 1),
            processed: 0,
            peak: 0,
        })
    }

    /// Feeds one stream element.
    pub fn process(&mut self, item: K) {
        self.processed += 1;
        if let Some(c) = self.entries.get_mut(&item) {
            *c += 1;
        } else if self.entries.len() < self.capacity {
            self.entries.insert(item, 1);
            self.peak = self.peak.max(self.entries.len());
        } else {
            // Full: the new item and one occurrence of every tracked item cancel.
            self.entries.retain(|_, c| {
                *c -= 1;
                *c > 0
            });
        }
    }

    /// All live entries; a superset of the items occurring more than
    /// `n / (k + 1)` times.
    pub fn candidates(&self) -> Vec<K> {
        self.entries.keys().cloned().collect()
    }

    pub fn counter(&self, item: &K) -> Option<u64> {
        self.entries.get(item).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> {
        self.entries.iter().map(|(k, &c)| (k, c))
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stream length seen so far.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Largest number of simultaneously live entries.
    pub fn peak_len(&self) -> usize {
        self.peak
    }
}

/// Summary size for a mining run: `ceil(2 p |S_m| / C)`, which is
/// `ceil(2 / epsilon)` whenever `p` was not clamped to 1.
pub fn summary_capacity(p: f64, total: u64, oversample: f64) -> usize {
    let k = 2.0 * p * total as f64 / oversample;
    // Absorb rounding so that e.g. 2 / 0.1 gives 20, not 21.
    ((k - 1e-9).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(k: usize, stream: &str) -> CounterSet<char> {
        let mut cs = CounterSet::new(k).unwrap();
        for c in stream.chars() {
            cs.process(c);
        }
        cs
    }

    #[test]
    fn hand_simulated_stream() {
        let cs = run(2, "abaca");
        assert_eq!(cs.len(), 1);
        assert_eq!(cs.counter(&'a'), Some(2));
        assert_eq!(cs.candidates(), vec!['a']);
    }

    #[test]
    fn under_capacity() {
        let cs = run(2, "ab");
        assert_eq!(cs.counter(&'a'), Some(1));
        assert_eq!(cs.counter(&'b'), Some(1));
    }

    #[test]
    fn majority_with_one_counter() {
        let cs = run(1, "ababa");
        assert!(cs.counter(&'a').unwrap() >= 1);
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn empty_stream() {
        let cs: CounterSet<u64> = CounterSet::new(3).unwrap();
        assert!(cs.candidates().is_empty());
    }

    #[test]
    fn single_item_stream() {
        let cs = run(3, &"x".repeat(50));
        assert_eq!(cs.counter(&'x'), Some(50));
    }

    #[test]
    fn simultaneous_zeros_are_all_evicted() {
        let cs = run(2, "abc");
        assert!(cs.is_empty());
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(CounterSet::<u8>::new(0).is_err());
    }

    #[test]
    fn capacity_formula() {
        let total = 123_457;
        for (eps, k) in [(0.1, 20), (0.5, 4), (0.05, 40), (0.3, 7)] {
            let p = crate::sampling::choose_p(eps, 10.0, total).unwrap();
            assert_eq!(summary_capacity(p, total, 10.0), k, "epsilon {eps}");
        }
        // p clamped to 1: 2 * 30 / 10.
        assert_eq!(summary_capacity(1.0, 30, 10.0), 6);
        assert_eq!(summary_capacity(1.0, 1, 10.0), 1);
    }

    proptest! {
        #[test]
        fn retains_heavy_items(
            k in 1usize..=20,
            stream in prop::collection::vec(0u8..50, 0..2000),
        ) {
            let mut cs = CounterSet::new(k).unwrap();
            let mut exact = HashMap::new();
            for &x in &stream {
                cs.process(x);
                prop_assert!(cs.len() <= k);
                *exact.entry(x).or_insert(0u64) += 1;
            }
            let n = stream.len() as u64;
            for (x, c) in exact {
                if c * (k as u64 + 1) > n {
                    prop_assert!(cs.counter(&x).is_some(), "lost {} with count {}", x, c);
                }
                if let Some(est) = cs.counter(&x) {
                    prop_assert!(est <= c);
                    prop_assert!(c - est <= n / (k as u64 + 1));
                }
            }
        }
    }
}
