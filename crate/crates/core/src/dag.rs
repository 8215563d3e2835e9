//! Labeled directed acyclic graphs.
//!
//! A [`LabeledDag`] is stored in compressed sparse row form with sorted,
//! duplicate-free successor lists and a precomputed topological order. It is
//! immutable once built, so it can be shared freely between threads.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense vertex index in `0..vertex_count`.
pub type VertexId = u32;

/// Interned vertex label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijection between label strings and dense [`Label`] values.
#[derive(Debug, Clone, Default)]
pub struct LabelDict {
    names: Vec<String>,
    index: HashMap<String, Label>,
}

impl LabelDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the label for `name`, allocating the next free value if the
    /// name has not been seen.
    pub fn intern(&mut self, name: &str) -> Label {
        if let Some(&label) = self.index.get(name) {
            return label;
        }
        let label = Label(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), label);
        label
    }

    pub fn get(&self, name: &str) -> Option<Label> {
        self.index.get(name).copied()
    }

    pub fn name(&self, label: Label) -> Option<&str> {
        self.names.get(label.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Dictionary whose label `i` is named by the decimal string of `i`.
    fn numeric(count: usize) -> Self {
        let mut dict = Self::new();
        for i in 0..count {
            dict.intern(&i.to_string());
        }
        dict
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDag {
    labels: Vec<Label>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    topo_order: Vec<VertexId>,
    dict: LabelDict,
}

impl LabeledDag {
    /// Builds a DAG whose label names are the decimal values of the labels.
    pub fn build(labels: Vec<Label>, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let max = labels.iter().map(|l| l.index() + 1).max().unwrap_or(0);
        Self::with_dict(labels, edges, LabelDict::numeric(max))
    }

    /// Builds a DAG from label strings, interning them in vertex order.
    pub fn from_names<S: AsRef<str>>(names: &[S], edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut dict = LabelDict::new();
        let labels = names.iter().map(|n| dict.intern(n.as_ref())).collect();
        Self::with_dict(labels, edges, dict)
    }

    /// Validates the edge list and builds the graph. Duplicate edges are
    /// collapsed; self loops and longer cycles are rejected with a witness.
    pub fn with_dict(
        labels: Vec<Label>,
        edges: &[(VertexId, VertexId)],
        dict: LabelDict,
    ) -> Result<Self> {
        let n = labels.len();
        if let Some(bad) = labels.iter().find(|l| l.index() >= dict.len()) {
            return Err(Error::domain(format!(
                "label {} has no entry in the label dictionary",
                bad.0
            )));
        }

        let mut sorted = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(Error::Range {
                        vertex: x as u64,
                        vertex_count: n,
                    });
                }
            }
            if u == v {
                return Err(Error::Cycle { witness: vec![u] });
            }
            sorted.push((u, v));
        }
        sorted.sort_unstable();
        sorted.dedup();

        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &sorted {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets: Vec<VertexId> = sorted.iter().map(|&(_, v)| v).collect();

        let topo_order = topological_order(n, &offsets, &targets)?;
        Ok(Self {
            labels,
            offsets,
            targets,
            topo_order,
            dict,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Sorted successors of `v`.
    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        0..self.labels.len() as VertexId
    }

    /// All edges, grouped by source in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices()
            .flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// A topological order: every edge goes from an earlier to a later entry.
    pub fn topo_order(&self) -> &[VertexId] {
        &self.topo_order
    }

    pub fn dict(&self) -> &LabelDict {
        &self.dict
    }

    pub fn label_name(&self, label: Label) -> &str {
        self.dict.name(label).unwrap_or("?")
    }

    /// Text form of a trace: label names joined by `-`.
    pub fn format_trace(&self, trace: &[Label]) -> String {
        let mut out = String::new();
        for (i, &l) in trace.iter().enumerate() {
            if i > 0 {
                out.push('-');
            }
            out.push_str(self.label_name(l));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes the `dag v=<n> e=<k>` text format.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "dag v={} e={}", self.vertex_count(), self.edge_count())?;
        for v in self.vertices() {
            writeln!(w, "vertex {} {}", v, self.label_name(self.label(v)))?;
        }
        for (u, v) in self.edges() {
            writeln!(w, "edge {} {}", u, v)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next_line = || -> Result<Option<(usize, String)>> {
            for (no, line) in lines.by_ref() {
                let line = line?;
                if !line.trim().is_empty() {
                    return Ok(Some((no, line)));
                }
            }
            Ok(None)
        };

        let (no, header) = next_line()?.ok_or_else(|| Error::parse(1, "missing header"))?;
        let (n, k) = parse_header(&header).ok_or_else(|| {
            Error::parse(no, format!("expected `dag v=<n> e=<k>`, found `{header}`"))
        })?;

        let mut names: Vec<Option<String>> = vec![None; n];
        for _ in 0..n {
            let (no, line) = next_line()?
                .ok_or_else(|| Error::parse(no, format!("expected {n} vertex lines")))?;
            let rest = line
                .strip_prefix("vertex ")
                .ok_or_else(|| Error::parse(no, "expected `vertex <id> <label>`"))?;
            let (id, label) = rest
                .trim_start()
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::parse(no, "vertex line is missing its label"))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(no, format!("bad vertex id `{id}`")))?;
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::parse(no, "empty label"));
            }
            match names.get_mut(id) {
                Some(slot @ None) => *slot = Some(label.to_owned()),
                Some(Some(_)) => return Err(Error::parse(no, format!("vertex {id} declared twice"))),
                None => {
                    return Err(Error::parse(
                        no,
                        format!("vertex id {id} out of range for v={n}"),
                    ))
                }
            }
        }

        let mut edges = Vec::with_capacity(k);
        for _ in 0..k {
            let (no, line) = next_line()?
                .ok_or_else(|| Error::parse(no, format!("expected {k} edge lines")))?;
            let mut parts = line.split_whitespace();
            let (Some("edge"), Some(src), Some(dst), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(no, "expected `edge <src> <dst>`"));
            };
            let endpoint = |s: &str| -> Result<VertexId> {
                let id: usize = s
                    .parse()
                    .map_err(|_| Error::parse(no, format!("bad vertex id `{s}`")))?;
                if id >= n {
                    return Err(Error::parse(no, format!("edge references undeclared vertex {id}")));
                }
                Ok(id as VertexId)
            };
            edges.push((endpoint(src)?, endpoint(dst)?));
        }
        if let Some((no, _)) = next_line()? {
            return Err(Error::parse(no, "trailing content after edge section"));
        }

        let names: Vec<String> = names.into_iter().map(|n| n.unwrap_or_default()).collect();
        Self::from_names(&names, &edges)
    }
}

/// Structural equality: same vertex count, per-vertex label names and edge set.
impl PartialEq for LabeledDag {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count() == other.vertex_count()
            && self.offsets == other.offsets
            && self.targets == other.targets
            && self
                .vertices()
                .all(|v| self.label_name(self.label(v)) == other.label_name(other.label(v)))
    }
}

impl Eq for LabeledDag {}

impl fmt::Display for LabeledDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|V|={} |E|={}", self.vertex_count(), self.edge_count())
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split_whitespace();
    if parts.next()? != "dag" {
        return None;
    }
    let n = parts.next()?.strip_prefix("v=")?.parse().ok()?;
    let k = parts.next()?.strip_prefix("e=")?.parse().ok()?;
    parts.next().is_none().then_some((n, k))
}

/// Kahn's algorithm. On failure, walks predecessors inside the unresolved
/// remnant until a vertex repeats and reports that cycle.
fn topological_order(n: usize, offsets: &[usize], targets: &[VertexId]) -> Result<Vec<VertexId>> {
    // Index order is already topological when every edge points forward,
    // and it keeps later passes sequential in memory.
    let forward = (0..n).all(|u| targets[offsets[u]..offsets[u + 1]].iter().all(|&v| v as usize > u));
    if forward {
        return Ok((0..n as VertexId).collect());
    }
    let mut indegree = vec![0u32; n];
    for &v in targets {
        indegree[v as usize] += 1;
    }
    let mut queue: VecDeque<VertexId> = (0..n as VertexId)
        .filter(|&v| indegree[v as usize] == 0)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in &targets[offsets[u as usize]..offsets[u as usize + 1]] {
            indegree[v as usize] -= 1;
            if indegree[v as usize] == 0 {
                queue.push_back(v);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every remnant vertex has a predecessor inside the remnant.
    let mut pred = vec![None; n];
    for u in 0..n {
        if indegree[u] == 0 {
            continue;
        }
        for &v in &targets[offsets[u]..offsets[u + 1]] {
            if indegree[v as usize] > 0 {
                pred[v as usize] = Some(u as VertexId);
            }
        }
    }
    let start = (0..n).find(|&v| indegree[v] > 0).expect("remnant is non-empty") as VertexId;
    let mut seen = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut cur = start;
    while seen[cur as usize] == usize::MAX {
        seen[cur as usize] = walk.len();
        walk.push(cur);
        cur = pred[cur as usize].expect("remnant vertex has a remnant predecessor");
    }
    let mut witness = walk.split_off(seen[cur as usize]);
    witness.reverse();
    Err(Error::Cycle { witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> LabeledDag {
        LabeledDag::from_names(&["1", "2", "3", "6", "7"], &[(0, 1), (0, 2), (1, 2), (3, 4)]).unwrap()
    }

    #[test]
    fn builds_movement_example() {
        let dag = example();
        assert_eq!(dag.vertex_count(), 5);
        assert_eq!(dag.edge_count(), 4);
        assert_eq!(dag.successors(0), &[1, 2]);
        assert_eq!(dag.label_name(dag.label(3)), "6");
    }

    #[test]
    fn single_vertex() {
        let dag = LabeledDag::from_names(&["a"], &[]).unwrap();
        assert_eq!(dag.vertex_count(), 1);
        assert_eq!(dag.edge_count(), 0);
        assert_eq!(dag.topo_order(), &[0]);
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = LabeledDag::from_names(&["a", "b"], &[(0, 1), (1, 0)]).unwrap_err();
        match err {
            Error::Cycle { mut witness } => {
                witness.sort();
                assert_eq!(witness, vec![0, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_witness_is_a_real_cycle() {
        // 0 -> 1 -> 2 -> 3 -> 1, plus a tail 3 -> 4
        let edges = [(0, 1), (1, 2), (2, 3), (3, 1), (3, 4)];
        let Err(Error::Cycle { witness }) = LabeledDag::build(vec![Label(0); 5], &edges) else {
            panic!("expected a cycle");
        };
        assert_eq!(witness.len(), 3);
        for i in 0..witness.len() {
            let e = (witness[i], witness[(i + 1) % witness.len()]);
            assert!(edges.contains(&e), "{e:?} is not an edge");
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        assert!(matches!(
            LabeledDag::build(vec![Label(0)], &[(0, 0)]),
            Err(Error::Cycle { .. })
        ));
    }

    #[test]
    fn out_of_range_endpoint() {
        assert!(matches!(
            LabeledDag::build(vec![Label(0); 2], &[(0, 2)]),
            Err(Error::Range { vertex: 2, .. })
        ));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let dag = LabeledDag::build(vec![Label(0); 3], &[(0, 2), (0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(dag.edge_count(), 3);
        assert_eq!(dag.successors(0), &[1, 2]);
    }

    #[test]
    fn topo_order_respects_edges() {
        let dag = LabeledDag::build(vec![Label(0); 4], &[(3, 0), (2, 3), (1, 2)]).unwrap();
        let mut pos = [0; 4];
        for (i, &v) in dag.topo_order().iter().enumerate() {
            pos[v as usize] = i;
        }
        for (u, v) in dag.edges() {
            assert!(pos[u as usize] < pos[v as usize]);
        }
    }

    #[test]
    fn text_round_trip() {
        let dag = example();
        let mut buf = Vec::new();
        dag.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dag v=5 e=4\nvertex 0 1\n"));
        let back = LabeledDag::read_from(&buf[..]).unwrap();
        assert_eq!(back, dag);
    }

    #[test]
    fn undeclared_vertex_is_a_parse_error() {
        let text = "dag v=2 e=1\nvertex 0 a\nvertex 1 b\nedge 0 5\n";
        match LabeledDag::read_from(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_vertex_section() {
        let dag = LabeledDag::read_from("dag v=0 e=0\n".as_bytes()).unwrap();
        assert!(dag.is_empty());
        assert_eq!(dag.edge_count(), 0);
    }

    #[test]
    fn cyclic_file_is_rejected() {
        let text = "dag v=2 e=2\nvertex 0 a\nvertex 1 b\nedge 0 1\nedge 1 0\n";
        assert!(matches!(
            LabeledDag::read_from(text.as_bytes()),
            Err(Error::Cycle { .. })
        ));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            LabeledDag::read_from("graph 3\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn labels_with_spaces_survive() {
        let dag = LabeledDag::from_names(&["gate A", "gate B"], &[(0, 1)]).unwrap();
        let mut buf = Vec::new();
        dag.write_to(&mut buf).unwrap();
        assert_eq!(LabeledDag::read_from(&buf[..]).unwrap(), dag);
    }
}
