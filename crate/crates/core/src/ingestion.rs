//! Timestamped event streams to labeled DAGs.
//!
//! Each event `(t, tag, location)` becomes a vertex after two cleaning steps
//! applied per tag: alternating two-zone runs `(x+ y+)(x+ y+)+` collapse into
//! one synthetic overlap-zone reading, and consecutive readings of the same
//! zone merge into one reading spanning `[t_first, t_last]`. An edge `u -> w`
//! joins two readings of the same tag at different locations when `w` starts
//! after `u` ends and no more than `delta` minutes later.

use std::cmp::Ordering;
use std::io::Read;

use crate::dag::{LabelDict, LabeledDag, VertexId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Minutes.
    pub t: f64,
    pub tag: String,
    pub location: String,
}

impl EventRecord {
    pub fn new(t: f64, tag: impl Into<String>, location: impl Into<String>) -> Self {
        Self {
            t,
            tag: tag.into(),
            location: location.into(),
        }
    }
}

/// A cleaned reading of one tag.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedReading {
    pub label: String,
    pub t_first: f64,
    pub t_last: f64,
    /// Produced by overlap collapsing. Synthetic readings never take part in
    /// another overlap run, which keeps the cleaning idempotent.
    pub synthetic: bool,
    /// Largest gap between consecutive raw readings merged into this one.
    pub max_internal_gap: f64,
}

impl CollapsedReading {
    pub fn point(label: impl Into<String>, t: f64) -> Self {
        Self {
            label: label.into(),
            t_first: t,
            t_last: t,
            synthetic: false,
            max_internal_gap: 0.0,
        }
    }
}

/// Parses the `t,tag,location` CSV format and sorts by `(tag, t)`.
pub fn parse_events<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let expected = ["t", "tag", "location"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::parse(1, "expected header `t,tag,location`"));
    }

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 fields, found {}", record.len())));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad timestamp `{}`", &record[0])))?;
        if !t.is_finite() {
            return Err(Error::parse(line, format!("non-finite timestamp `{}`", &record[0])));
        }
        if record[1].is_empty() || record[2].is_empty() {
            return Err(Error::parse(line, "empty tag or location"));
        }
        events.push(EventRecord::new(t, &record[1], &record[2]));
    }
    sort_events(&mut events);
    Ok(events)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::parse(line, format!("{kind:?}")),
    }
}

/// Sorts by tag, then timestamp. Stable, so equal timestamps keep input order.
pub fn sort_events(events: &mut [EventRecord]) {
    events.sort_by(|a, b| a.tag.cmp(&b.tag).then_with(|| a.t.total_cmp(&b.t)));
}

/// Synthetic label of the overlap zone between `x` and `y`:
/// `min * 100 + max` for numeric labels, `min×max` otherwise.
pub fn overlap_label(x: &str, y: &str) -> String {
    match (x.parse::<u64>(), y.parse::<u64>()) {
        (Ok(a), Ok(b)) => {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            match lo.checked_mul(100).and_then(|v| v.checked_add(hi)) {
                Some(v) => v.to_string(),
                None => format!("{lo}×{hi}"),
            }
        }
        _ => {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            format!("{lo}×{hi}")
        }
    }
}

/// Replaces each maximal alternating run `(x+ y+)(x+ y+)+` by one synthetic
/// reading spanning the run. Input must be one tag's readings in time order.
///
/// Runs are matched left to right, each as long as possible. A run with an
/// odd number of blocks gives back its last block, which may start a new run.
pub fn collapse_overlap(readings: &[CollapsedReading]) -> Vec<CollapsedReading> {
    // Block boundaries: blocks[b] = start index of the b-th run of equal labels.
    let mut blocks = Vec::new();
    for (i, r) in readings.iter().enumerate() {
        let new_block = i == 0 || {
            let prev = &readings[i - 1];
            prev.label != r.label || prev.synthetic || r.synthetic
        };
        if new_block {
            blocks.push(i);
        }
    }
    blocks.push(readings.len());
    let nblocks = blocks.len() - 1;
    let label = |b: usize| &readings[blocks[b]];

    let mut out = Vec::with_capacity(readings.len());
    let mut b = 0;
    while b < nblocks {
        let x = label(b);
        let mut end = b + 1;
        if !x.synthetic && end < nblocks && !label(end).synthetic {
            let y = label(end);
            while end < nblocks {
                let z = label(end);
                let want = if (end - b) % 2 == 0 { &x.label } else { &y.label };
                if z.synthetic || &z.label != want {
                    break;
                }
                end += 1;
            }
        }
        let run_blocks = (end - b) & !1;
        if run_blocks >= 4 {
            let first = blocks[b];
            let last = blocks[b + run_blocks] - 1;
            let span = &readings[first..=last];
            out.push(CollapsedReading {
                label: overlap_label(&x.label, &label(b + 1).label),
                t_first: span[0].t_first,
                t_last: span[span.len() - 1].t_last,
                synthetic: true,
                max_internal_gap: internal_gap(span),
            });
            b += run_blocks;
        } else {
            out.extend_from_slice(&readings[blocks[b]..blocks[b + 1]]);
            b += 1;
        }
    }
    out
}

fn internal_gap(span: &[CollapsedReading]) -> f64 {
    let inner = span.iter().map(|r| r.max_internal_gap).fold(0.0, f64::max);
    span.windows(2)
        .map(|w| w[1].t_first - w[0].t_last)
        .fold(inner, f64::max)
}

/// Merges consecutive readings with the same label into one reading from the
/// first occurrence to the last.
pub fn dedup_same_zone(readings: &[CollapsedReading]) -> Vec<CollapsedReading> {
    let mut out: Vec<CollapsedReading> = Vec::with_capacity(readings.len());
    for r in readings {
        match out.last_mut() {
            Some(prev) if prev.label == r.label => {
                prev.max_internal_gap = prev
                    .max_internal_gap
                    .max(r.max_internal_gap)
                    .max(r.t_first - prev.t_last);
                prev.t_last = prev.t_last.max(r.t_last);
                prev.synthetic |= r.synthetic;
            }
            _ => out.push(r.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Maximum gap in minutes between the end of one reading and the start
    /// of the next for them to be connected.
    pub delta: f64,
    /// Connect readings whose gap is exactly zero.
    pub allow_zero_gap: bool,
}

impl IngestOptions {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            allow_zero_gap: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestStats {
    pub events: usize,
    pub tags: usize,
    pub overlap_runs: usize,
    pub vertices: usize,
    pub edges: usize,
    /// Merged readings whose internal gap exceeds `delta`.
    pub gap_warnings: usize,
}

/// Result of [`build_event_dag`]: the graph plus the reading behind each
/// vertex.
#[derive(Debug, Clone)]
pub struct EventDag {
    pub dag: LabeledDag,
    pub readings: Vec<(String, CollapsedReading)>,
    pub stats: IngestStats,
}

/// One tag's cleaned readings, in time order.
pub fn clean_tag(events: &[EventRecord]) -> Vec<CollapsedReading> {
    let raw: Vec<CollapsedReading> = events
        .iter()
        .map(|e| CollapsedReading::point(e.location.clone(), e.t))
        .collect();
    dedup_same_zone(&collapse_overlap(&raw))
}

/// Builds `G_delta` from events. The events need not be sorted.
pub fn build_event_dag(events: &[EventRecord], opts: IngestOptions) -> Result<EventDag> {
    if opts.delta.is_nan() || opts.delta <= 0.0 {
        return Err(Error::domain(format!("delta must be positive, got {}", opts.delta)));
    }
    let mut sorted = events.to_vec();
    sort_events(&mut sorted);

    let mut stats = IngestStats {
        events: events.len(),
        ..IngestStats::default()
    };
    let mut dict = LabelDict::new();
    let mut labels = Vec::new();
    let mut readings = Vec::new();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();

    for group in sorted.chunk_by(|a, b| a.tag == b.tag) {
        stats.tags += 1;
        let cleaned = clean_tag(group);
        stats.overlap_runs += cleaned.iter().filter(|r| r.synthetic).count();
        let base = labels.len();
        for (i, u) in cleaned.iter().enumerate() {
            if u.max_internal_gap > opts.delta {
                stats.gap_warnings += 1;
            }
            for (j, w) in cleaned.iter().enumerate().skip(i + 1) {
                let gap = w.t_first - u.t_last;
                if gap > opts.delta {
                    break;
                }
                let forward = match gap.partial_cmp(&0.0) {
                    Some(Ordering::Greater) => true,
                    Some(Ordering::Equal) => opts.allow_zero_gap,
                    _ => false,
                };
                if forward && w.label != u.label {
                    edges.push(((base + i) as VertexId, (base + j) as VertexId));
                }
            }
        }
        for r in cleaned {
            labels.push(dict.intern(&r.label));
            readings.push((group[0].tag.clone(), r));
        }
    }

    let dag = LabeledDag::with_dict(labels, &edges, dict)?;
    stats.vertices = dag.vertex_count();
    stats.edges = dag.edge_count();
    Ok(EventDag {
        dag,
        readings,
        stats,
    })
}
