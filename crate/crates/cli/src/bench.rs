//! Trace statistics over a sweep of gap bounds and trace lengths.

use std::io::{self, Write};

use dagtrace::counting::count_traces;
use dagtrace::enumerate::exact_frequencies;
use dagtrace::sampling::{sample_traces_parallel, SampleConfig};
use dagtrace::{Error, LabeledDag, Result, TraceHasher};
use serde::Serialize;

/// Rank whose count sets the frequency threshold of a row.
pub const TOP_RANK: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub delta: f64,
    pub max_len: usize,
    pub total_traces: u64,
    pub distinct_traces: usize,
    /// Count of the 100th most frequent trace.
    pub top_count: u64,
    /// Distinct traces over the `ceil(2 / epsilon)` counters of the summary,
    /// with `epsilon = top_count / total_traces`.
    pub space_ratio: f64,
    /// Size of one sample drawn with `p = C / (epsilon |S_m|)`.
    pub samples: u64,
}

impl BenchRow {
    fn empty(delta: f64, max_len: usize) -> Self {
        Self {
            delta,
            max_len,
            total_traces: 0,
            distinct_traces: 0,
            top_count: 0,
            space_ratio: 0.0,
            samples: 0,
        }
    }

    /// The threshold implied by the top-ranked count.
    pub fn epsilon(&self) -> Option<f64> {
        (self.total_traces > 0).then(|| self.top_count as f64 / self.total_traces as f64)
    }
}

pub fn bench_row(
    dag: &LabeledDag,
    delta: f64,
    max_len: usize,
    oversample: f64,
    seed: u64,
    budget: u64,
    workers: usize,
) -> Result<BenchRow> {
    let table = count_traces(dag, max_len)?;
    let total = table.total()?;
    if total == 0 {
        return Ok(BenchRow::empty(delta, max_len));
    }
    if total > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    let exact = exact_frequencies(dag, max_len, budget)?;
    let top_count = exact.count_at_rank(TOP_RANK);
    let epsilon = top_count as f64 / total as f64;
    let counters = (2.0 / epsilon).ceil();

    let cfg = SampleConfig::new(epsilon, oversample, max_len, seed, total)?;
    let stats = sample_traces_parallel(dag, &table, &cfg, &TraceHasher::default(), workers, |_, _| {})?;

    Ok(BenchRow {
        delta,
        max_len,
        total_traces: total,
        distinct_traces: exact.distinct(),
        top_count,
        space_ratio: exact.distinct() as f64 / counters,
        samples: stats.total_emitted,
    })
}

pub fn write_table<W: Write + ?Sized>(rows: &[BenchRow], w: &mut W) -> io::Result<()> {
    writeln!(w, "delta\tm\ttotal_traces\tdistinct_traces\ttop{TOP_RANK}\tratio\tsamples")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:.1}\t{}",
            r.delta, r.max_len, r.total_traces, r.distinct_traces, r.top_count, r.space_ratio, r.samples
        )?;
    }
    Ok(())
}
