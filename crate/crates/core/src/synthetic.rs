//! Seeded generators for synthetic graphs and event streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dag::{Label, LabeledDag, VertexId};
use crate::error::{Error, Result};
use crate::ingestion::EventRecord;

/// Random DAG on `n` vertices: each pair `i < j` is an edge with
/// probability `edge_prob`, labels uniform over `alphabet` values.
pub fn random_dag(n: usize, edge_prob: f64, alphabet: u32, seed: u64) -> LabeledDag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n).map(|_| Label(rng.random_range(0..alphabet.max(1)))).collect();
    let mut edges = Vec::new();
    for i in 0..n as VertexId {
        for j in i + 1..n as VertexId {
            if rng.random::<f64>() < edge_prob {
                edges.push((i, j));
            }
        }
    }
    LabeledDag::build(labels, &edges).expect("forward edges are acyclic")
}

/// Sparse DAG with `out_degree` edges per vertex, each to one of the next
/// `window` vertices. Memory access stays local, so it scales to millions
/// of edges.
pub fn local_dag(n: usize, out_degree: usize, window: usize, alphabet: u32, seed: u64) -> LabeledDag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n).map(|_| Label(rng.random_range(0..alphabet.max(1)))).collect();
    let mut edges = Vec::with_capacity(n * out_degree);
    for i in 0..n {
        let room = window.min(n - 1 - i);
        if room == 0 {
            continue;
        }
        for _ in 0..out_degree {
            let j = i + 1 + rng.random_range(0..room);
            edges.push((i as VertexId, j as VertexId));
        }
    }
    LabeledDag::build(labels, &edges).expect("forward edges are acyclic")
}

/// Parameters of a synthetic trolley-style event stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub tags: usize,
    pub readings_per_tag: usize,
    /// Number of distinct locations, named `1..=locations`.
    pub locations: u32,
    /// Mean minutes between consecutive readings of one tag.
    pub mean_gap: f64,
    /// Location sequences that tags follow with probability `route_prob`.
    pub routes: Vec<Vec<u32>>,
    pub route_prob: f64,
    pub seed: u64,
}

impl Default for EventSpec {
    fn default() -> Self {
        Self {
            tags: 200,
            readings_per_tag: 50,
            locations: 40,
            mean_gap: 6.0,
            routes: vec![vec![1, 2, 3, 4], vec![5, 6, 7]],
            route_prob: 0.3,
            seed: 0,
        }
    }
}

impl EventSpec {
    pub fn validate(&self) -> Result<()> {
        if self.locations < 2 {
            return Err(Error::domain("need at least two locations"));
        }
        if !(self.mean_gap > 0.0 && self.mean_gap.is_finite()) {
            return Err(Error::domain("mean gap must be positive"));
        }
        if !(0.0..=1.0).contains(&self.route_prob) {
            return Err(Error::domain("route probability must lie in [0, 1]"));
        }
        if self.routes.iter().flatten().any(|&l| l == 0 || l > self.locations) {
            return Err(Error::domain("route locations must lie in 1..=locations"));
        }
        if self.routes.iter().any(|r| r.len() < 2 || r.windows(2).any(|w| w[0] == w[1])) {
            return Err(Error::domain("routes need two or more steps, each moving"));
        }
        Ok(())
    }

    /// Generates the stream, sorted by tag and time. Consecutive readings of
    /// a tag are at different locations.
    pub fn generate(&self) -> Result<Vec<EventRecord>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut events = Vec::with_capacity(self.tags * self.readings_per_tag);
        for tag in 0..self.tags {
            let name = format!("tag{tag:05}");
            let mut t = rng.random::<f64>() * 60.0;
            let mut prev = 0u32;
            let mut produced = 0;
            while produced < self.readings_per_tag {
                let route = (!self.routes.is_empty() && rng.random::<f64>() < self.route_prob)
                    .then(|| &self.routes[rng.random_range(0..self.routes.len())]);
                let steps: Vec<u32> = match route {
                    Some(r) => r.clone(),
                    None => vec![loop {
                        let l = rng.random_range(1..=self.locations);
                        if l != prev {
                            break l;
                        }
                    }],
                };
                for l in steps {
                    if produced == self.readings_per_tag {
                        break;
                    }
                    if l == prev {
                        continue;
                    }
                    // Exponential gaps; 1 - u avoids ln(0).
                    t += -self.mean_gap * (1.0 - rng.random::<f64>()).ln();
                    let t_min = (t * 100.0).round() / 100.0;
                    events.push(EventRecord::new(t_min, name.clone(), l.to_string()));
                    prev = l;
                    produced += 1;
                }
            }
        }
        Ok(events)
    }
}
