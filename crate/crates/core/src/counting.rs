//! Path counting: `c[v][i]` is the number of paths of length at most `i`
//! that start at `v`.
//!
//! The table satisfies `c[v][0] = 0` and `c[v][i] = 1 + sum over successors
//! w of c[w][i-1]`. It is filled in reverse topological order, which visits
//! every `(v, i)` once in `O(|E| m)` time without recursion.

use std::io::{self, Write};

use crate::dag::{LabeledDag, VertexId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCountTable {
    max_len: usize,
    // Row-major, one row of `max_len + 1` counts per vertex.
    counts: Vec<u64>,
}

impl PathCountTable {
    /// The horizon `m` this table was built for.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn vertex_count(&self) -> usize {
        self.counts.len() / (self.max_len + 1)
    }

    /// `c[v][0..=m]`.
    pub fn row(&self, v: VertexId) -> &[u64] {
        let stride = self.max_len + 1;
        &self.counts[v as usize * stride..(v as usize + 1) * stride]
    }

    #[inline]
    pub fn get(&self, v: VertexId, len: usize) -> u64 {
        self.counts[v as usize * (self.max_len + 1) + len]
    }

    /// `|S_m| = sum over v of c[v][m]`.
    pub fn total(&self) -> Result<u64> {
        let m = self.max_len;
        (0..self.vertex_count() as VertexId).try_fold(0u64, |acc, v| {
            acc.checked_add(self.get(v, m)).ok_or(Error::Overflow {
                vertex: v,
                length: m,
            })
        })
    }

    /// Debug dump: one `vertex<TAB>c[0]<TAB>...<TAB>c[m]` line per vertex.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "vertex")?;
        for i in 0..=self.max_len {
            write!(w, "\tc[{i}]")?;
        }
        writeln!(w)?;
        for v in 0..self.vertex_count() as VertexId {
            write!(w, "{v}")?;
            for c in self.row(v) {
                write!(w, "\t{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Builds the full `(m + 1)`-column table. Fails with [`Error::Overflow`]
/// rather than saturating if any count leaves the `u64` range.
pub fn count_traces(dag: &LabeledDag, m: usize) -> Result<PathCountTable> {
    let mut table = PathCountTable { max_len: m, counts: Vec::new() };
    count_traces_into(dag, m, &mut table)?;
    Ok(table)
}

/// Like [`count_traces`], but refills `table` in place and reuses its
/// storage. On error the table contents are unspecified.
pub fn count_traces_into(dag: &LabeledDag, m: usize, table: &mut PathCountTable) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("maximum trace length must be at least 1"));
    }
    let stride = m + 1;
    table.max_len = m;
    let counts = &mut table.counts;
    counts.clear();
    counts.resize(dag.vertex_count() * stride, 0);
    let mut acc = vec![0u64; stride];
    for &v in dag.topo_order().iter().rev() {
        acc[1..].fill(1);
        let mut overflow = false;
        // Successors come later in topological order, so their rows are final.
        for &w in dag.successors(v) {
            let row = &counts[w as usize * stride..w as usize * stride + m];
            for (a, &c) in acc[1..].iter_mut().zip(row) {
                let (sum, o) = a.overflowing_add(c);
                *a = sum;
                overflow |= o;
            }
        }
        if overflow {
            return Err(overflow_at(dag, counts, stride, v));
        }
        let base = v as usize * stride;
        counts[base + 1..base + stride].copy_from_slice(&acc[1..]);
    }
    Ok(())
}

/// Shortest length at which the row of `v` overflows.
fn overflow_at(dag: &LabeledDag, counts: &[u64], stride: usize, v: VertexId) -> Error {
    let length = (1..stride)
        .find(|&i| {
            dag.successors(v)
                .iter()
                .try_fold(1u64, |c, &w| c.checked_add(counts[w as usize * stride + i - 1]))
                .is_none()
        })
        .unwrap_or(stride - 1);
    Error::Overflow { vertex: v, length }
}

/// Convenience wrapper: `|S_m|` of `table`.
pub fn total_traces(table: &PathCountTable) -> Result<u64> {
    table.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::Label;

    #[test]
    fn single_vertex() {
        let dag = LabeledDag::from_names(&["a"], &[]).unwrap();
        let t = count_traces(&dag, 3).unwrap();
        assert_eq!(t.row(0), &[0, 1, 1, 1]);
    }

    #[test]
    fn refill_reuses_table() {
        let dag = LabeledDag::from_names(&["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let mut t = count_traces(&dag, 1).unwrap();
        count_traces_into(&dag, 3, &mut t).unwrap();
        assert_eq!(t, count_traces(&dag, 3).unwrap());
    }

    #[test]
    fn short_chain() {
        let dag = LabeledDag::from_names(&["a", "b"], &[(0, 1)]).unwrap();
        let t = count_traces(&dag, 2).unwrap();
        assert_eq!(t.row(0), &[0, 1, 2]);
        assert_eq!(t.row(1), &[0, 1, 1]);
        assert_eq!(total_traces(&t).unwrap(), 3);
    }

    #[test]
    fn movement_example() {
        let dag = LabeledDag::from_names(&["1", "2", "3", "6", "7"], &[(0, 1), (0, 2), (1, 2), (3, 4)])
            .unwrap();
        let t = count_traces(&dag, 5).unwrap();
        let last: Vec<u64> = (0..5).map(|v| t.get(v, 5)).collect();
        assert_eq!(last, [4, 2, 1, 2, 1]);
        assert_eq!(t.total().unwrap(), 10);
    }

    #[test]
    fn edgeless() {
        let dag = LabeledDag::build(vec![Label(0); 7], &[]).unwrap();
        assert_eq!(count_traces(&dag, 4).unwrap().total().unwrap(), 7);
    }

    #[test]
    fn chain_of_three_horizon_two() {
        let dag = LabeledDag::from_names(&["a", "b", "c"], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(count_traces(&dag, 2).unwrap().total().unwrap(), 5);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let dag = LabeledDag::from_names(&["a"], &[]).unwrap();
        assert!(matches!(count_traces(&dag, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn overflow_is_an_error() {
        // Layers of 4 fully connected vertices: path counts grow like 4^i.
        let layers = 40;
        let width = 4u32;
        let mut edges = Vec::new();
        for l in 0..layers - 1 {
            for a in 0..width {
                for b in 0..width {
                    edges.push((l * width + a, (l + 1) * width + b));
                }
            }
        }
        let dag = LabeledDag::build(vec![Label(0); (layers * width) as usize], &edges).unwrap();
        assert!(count_traces(&dag, 20).is_ok());
        assert!(matches!(count_traces(&dag, 39), Err(Error::Overflow { .. })));
    }

    #[test]
    fn tsv_dump() {
        let dag = LabeledDag::from_names(&["a", "b"], &[(0, 1)]).unwrap();
        let mut out = Vec::new();
        count_traces(&dag, 2).unwrap().write_tsv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "vertex\tc[0]\tc[1]\tc[2]\n0\t0\t1\t2\n1\t0\t1\t1\n"
        );
    }
}
