//! Exhaustive generation of every path trace of length at most `m`.
//!
//! This is the exact (and exponential-output) baseline. Besides being useful
//! on small graphs it is the ground truth the counting and sampling code is
//! tested against.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::dag::{Label, LabeledDag, VertexId};
use crate::error::{Error, Result};
use crate::hash::{TraceHash, TraceHasher};

/// A label sequence of length at least one.
pub type Trace = Vec<Label>;

/// Default cap on the number of traces [`exact_frequencies`] will materialize.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Calls `sink` once per path of length at most `m`, with the path's labels.
///
/// Roots are visited in vertex order, successors in sorted order, depth
/// first; each prefix is emitted before its extensions.
pub fn all_traces<F>(dag: &LabeledDag, m: usize, mut sink: F)
where
    F: FnMut(&[Label]),
{
    let mut buf = Vec::with_capacity(m);
    for root in dag.vertices() {
        let _ = walk(dag, root, m, &mut buf, &mut |t: &[Label]| {
            sink(t);
            ControlFlow::Continue(())
        });
    }
}

/// Like [`all_traces`] but only for paths starting at `root`.
pub fn traces_from<F>(dag: &LabeledDag, root: VertexId, m: usize, mut sink: F)
where
    F: FnMut(&[Label]),
{
    let mut buf = Vec::with_capacity(m);
    let _ = walk(dag, root, m, &mut buf, &mut |t: &[Label]| {
        sink(t);
        ControlFlow::Continue(())
    });
}

/// Succinct variant: each trace is also handed over as its hash, which is
/// extended in O(1) per emitted trace.
pub fn all_traces_hashed<F>(dag: &LabeledDag, m: usize, hasher: &TraceHasher, mut sink: F)
where
    F: FnMut(TraceHash, &[Label]),
{
    let mut labels = Vec::with_capacity(m);
    let mut hashes = Vec::with_capacity(m);
    for root in dag.vertices() {
        walk_hashed(dag, root, m, hasher, &mut labels, &mut hashes, &mut sink);
    }
}

fn walk<F>(
    dag: &LabeledDag,
    v: VertexId,
    remaining: usize,
    buf: &mut Vec<Label>,
    sink: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[Label]) -> ControlFlow<()>,
{
    if remaining == 0 {
        return ControlFlow::Continue(());
    }
    buf.push(dag.label(v));
    let mut flow = sink(buf);
    if flow.is_continue() {
        for &w in dag.successors(v) {
            flow = walk(dag, w, remaining - 1, buf, sink);
            if flow.is_break() {
                break;
            }
        }
    }
    buf.pop();
    flow
}

fn walk_hashed<F>(
    dag: &LabeledDag,
    v: VertexId,
    remaining: usize,
    hasher: &TraceHasher,
    labels: &mut Vec<Label>,
    hashes: &mut Vec<TraceHash>,
    sink: &mut F,
) where
    F: FnMut(TraceHash, &[Label]),
{
    if remaining == 0 {
        return;
    }
    let label = dag.label(v);
    let h = hasher.extend(hashes.last().copied().unwrap_or(TraceHash::EMPTY), label);
    labels.push(label);
    hashes.push(h);
    sink(h, labels);
    for &w in dag.successors(v) {
        walk_hashed(dag, w, remaining - 1, hasher, labels, hashes, sink);
    }
    labels.pop();
    hashes.pop();
}

/// Multiset of traces with their multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceMultiset {
    counts: HashMap<Trace, u64>,
    total: u64,
}

impl TraceMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trace: &[Label]) {
        self.insert_n(trace, 1);
    }

    pub fn insert_n(&mut self, trace: &[Label], n: u64) {
        if n == 0 {
            return;
        }
        match self.counts.get_mut(trace) {
            Some(c) => *c += n,
            None => {
                self.counts.insert(trace.to_vec(), n);
            }
        }
        self.total += n;
    }

    /// Total multiplicity (|S_m| when built from all traces).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, trace: &[Label]) -> u64 {
        self.counts.get(trace).copied().unwrap_or(0)
    }

    pub fn relative_frequency(&self, trace: &[Label]) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(trace) as f64 / self.total as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Label], u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_slice(), c))
    }

    /// Traces by decreasing count, ties broken by label sequence.
    pub fn by_frequency(&self) -> Vec<(Trace, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(t, &c)| (t.clone(), c)).collect();
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// Traces whose relative frequency is at least `epsilon`.
    pub fn frequent(&self, epsilon: f64) -> Vec<(Trace, u64)> {
        self.by_frequency()
            .into_iter()
            .filter(|(_, c)| reaches_fraction(*c, self.total, epsilon))
            .collect()
    }

    /// Count of the `rank`-th most frequent trace (1-based). When fewer
    /// traces exist the least frequent one is used; an empty set gives 0.
    pub fn count_at_rank(&self, rank: usize) -> u64 {
        let mut counts: Vec<u64> = self.counts.values().copied().collect();
        if counts.is_empty() || rank == 0 {
            return 0;
        }
        let idx = (rank - 1).min(counts.len() - 1);
        let (_, nth, _) = counts.select_nth_unstable_by(idx, |a, b| b.cmp(a));
        *nth
    }
}

/// `count >= epsilon * total`, tolerant to the rounding in the product.
pub fn reaches_fraction(count: u64, total: u64, epsilon: f64) -> bool {
    count as f64 >= epsilon * total as f64 * (1.0 - 1e-12)
}

/// Materializes the full multiset. Fails once more than `budget` traces have
/// been emitted.
pub fn exact_frequencies(dag: &LabeledDag, m: usize, budget: u64) -> Result<TraceMultiset> {
    if m == 0 {
        return Err(Error::domain("maximum trace length must be at least 1"));
    }
    let mut set = TraceMultiset::new();
    let mut buf = Vec::with_capacity(m);
    for root in dag.vertices() {
        let flow = walk(dag, root, m, &mut buf, &mut |t: &[Label]| {
            if set.total() >= budget {
                return ControlFlow::Break(());
            }
            set.insert(t);
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            return Err(Error::BudgetExceeded { budget });
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn movement_example() -> LabeledDag {
        LabeledDag::from_names(&["1", "2", "3", "6", "7"], &[(0, 1), (0, 2), (1, 2), (3, 4)]).unwrap()
    }

    fn collect(dag: &LabeledDag, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        all_traces(dag, m, |t| out.push(dag.format_trace(t)));
        out
    }

    #[test]
    fn movement_example_traces() {
        let dag = movement_example();
        let got = collect(&dag, 5);
        assert_eq!(
            got,
            ["1", "1-2", "1-2-3", "1-3", "2", "2-3", "3", "6", "6-7", "7"]
        );
    }

    #[test]
    fn length_one_gives_singletons() {
        let dag = movement_example();
        assert_eq!(collect(&dag, 1), ["1", "2", "3", "6", "7"]);
    }

    #[test]
    fn edgeless_graph() {
        let dag = LabeledDag::from_names(&["a", "b", "a", "c"], &[]).unwrap();
        assert_eq!(collect(&dag, 4).len(), 4);
    }

    #[test]
    fn shared_trace_counts_twice() {
        let dag = LabeledDag::from_names(&["a", "x", "x"], &[(0, 1), (0, 2)]).unwrap();
        let set = exact_frequencies(&dag, 3, DEFAULT_BUDGET).unwrap();
        let ax = [dag.dict().get("a").unwrap(), dag.dict().get("x").unwrap()];
        assert_eq!(set.count(&ax), 2);
        assert_eq!(set.total(), 5);
    }

    #[test]
    fn chain_with_horizon_two() {
        let dag = LabeledDag::from_names(&["a", "b", "c"], &[(0, 1), (1, 2)]).unwrap();
        let mut got = collect(&dag, 2);
        got.sort();
        assert_eq!(got, ["a", "a-b", "b", "b-c", "c"]);
    }

    #[test]
    fn movement_example_multiset() {
        let set = exact_frequencies(&movement_example(), 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(set.total(), 10);
        assert_eq!(set.distinct(), 10);
        assert!(set.iter().all(|(_, c)| c == 1));
    }

    #[test]
    fn budget_is_enforced() {
        let dag = movement_example();
        assert!(matches!(
            exact_frequencies(&dag, 5, 9),
            Err(Error::BudgetExceeded { budget: 9 })
        ));
        assert!(exact_frequencies(&dag, 5, 10).is_ok());
    }

    #[test]
    fn hashed_matches_plain() {
        let dag = movement_example();
        let hasher = TraceHasher::from_seed(11);
        let mut plain = Vec::new();
        all_traces(&dag, 5, |t| plain.push(hasher.hash(t)));
        let mut hashed = Vec::new();
        all_traces_hashed(&dag, 5, &hasher, |h, t| {
            assert_eq!(h, hasher.hash(t));
            hashed.push(h);
        });
        assert_eq!(plain, hashed);
    }

    /// S_i(v) = {label(v)} x ({empty} + union over successors of S_{i-1}(v')).
    #[test]
    fn per_vertex_recursion_identity() {
        let dag = LabeledDag::from_names(
            &["a", "b", "a", "c", "b"],
            &[(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 4)],
        )
        .unwrap();
        for m in 1..=4 {
            for v in dag.vertices() {
                let mut lhs = TraceMultiset::new();
                traces_from(&dag, v, m, |t| lhs.insert(t));

                let mut rhs = TraceMultiset::new();
                rhs.insert(&[dag.label(v)]);
                for &w in dag.successors(v) {
                    traces_from(&dag, w, m - 1, |t| {
                        let mut ext = vec![dag.label(v)];
                        ext.extend_from_slice(t);
                        rhs.insert(&ext);
                    });
                }
                assert_eq!(lhs, rhs, "vertex {v}, m={m}");
            }
        }
    }

    #[test]
    fn rank_lookup() {
        let mut set = TraceMultiset::new();
        set.insert_n(&[Label(0)], 5);
        set.insert_n(&[Label(1)], 3);
        set.insert_n(&[Label(2)], 9);
        assert_eq!(set.count_at_rank(1), 9);
        assert_eq!(set.count_at_rank(2), 5);
        assert_eq!(set.count_at_rank(100), 3);
        assert_eq!(TraceMultiset::new().count_at_rank(100), 0);
    }
}
