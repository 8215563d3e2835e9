//! End-to-end frequent trace mining.
//!
//! Pass one streams a sample of `S_m` through a Misra-Gries summary keyed by
//! trace hash. Pass two counts the surviving candidates exactly, either on a
//! bit-identical regeneration of the same sample or on an independent one,
//! and keeps those seen at least `C / 2` times. Only the summary and the
//! candidate counters are held in memory, so the mining state is
//! `O(1 / epsilon)` words regardless of `|S_m|`.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::counting::{count_traces, PathCountTable};
use crate::dag::{Label, LabeledDag};
use crate::enumerate::{reaches_fraction, Trace};
use crate::error::{Error, Result};
use crate::hash::{TraceHash, TraceHasher, DEFAULT_HASH_SEED};
use crate::heavy_hitters::{summary_capacity, CounterSet};
use crate::sampling::{sample_traces_parallel, SampleConfig};

/// Default increase of `C` for the independent second sample.
pub const DEFAULT_FRESH_EXTRA: f64 = 2.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    /// Regenerate the pass-one sample from the same seed.
    #[default]
    SameSeed,
    /// Draw an independent sample with `C + extra_oversample`.
    Fresh { extra_oversample: f64 },
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyMode::SameSeed => f.write_str("same-seed"),
            VerifyMode::Fresh { .. } => f.write_str("fresh"),
        }
    }
}

impl FromStr for VerifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same-seed" => Ok(VerifyMode::SameSeed),
            "fresh" => Ok(VerifyMode::Fresh {
                extra_oversample: DEFAULT_FRESH_EXTRA,
            }),
            other => Err(Error::domain(format!(
                "unknown mode `{other}` (expected same-seed or fresh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MineConfig {
    pub max_len: usize,
    pub epsilon: f64,
    pub oversample: f64,
    pub seed: u64,
    pub mode: VerifyMode,
    pub workers: usize,
    pub hash_seed: u64,
}

impl MineConfig {
    pub fn new(max_len: usize, epsilon: f64, oversample: f64, seed: u64) -> Self {
        Self {
            max_len,
            epsilon,
            oversample,
            seed,
            mode: VerifyMode::SameSeed,
            workers: 1,
            hash_seed: DEFAULT_HASH_SEED,
        }
    }

    pub fn with_mode(mut self, mode: VerifyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub hash: TraceHash,
    pub trace: Trace,
    /// Exact number of occurrences in the verification sample.
    pub sample_count: u64,
    /// `sample_count / (p |S_m|)`.
    pub est_frequency: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportMeta {
    pub epsilon: Option<f64>,
    pub oversample: Option<f64>,
    /// Inclusion probability of the verification sample.
    pub p: f64,
    pub total_traces: u64,
    pub sample_size: u64,
    pub threshold: f64,
    pub seed: u64,
    pub verify_seed: u64,
    pub mode: String,
    pub hash_base: u64,
    pub first_pass_sample_size: u64,
    pub summary_capacity: usize,
    pub summary_peak: usize,
    pub candidates: usize,
    /// Peak words held by the summary plus the candidate counters.
    pub peak_state_words: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateReport {
    pub entries: Vec<ReportEntry>,
    pub meta: ReportMeta,
}

impl CandidateReport {
    pub fn traces(&self) -> impl Iterator<Item = &[Label]> {
        self.entries.iter().map(|e| e.trace.as_slice())
    }

    pub fn get(&self, trace: &[Label]) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.trace == trace)
    }

    /// `trace<TAB>sample_count<TAB>est_relative_frequency`, with a header line.
    pub fn write_tsv<W: Write + ?Sized>(&self, dag: &LabeledDag, w: &mut W) -> io::Result<()> {
        writeln!(w, "trace\tsample_count\test_relative_frequency")?;
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{:.6e}",
                dag.format_trace(&e.trace),
                e.sample_count,
                e.est_frequency
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the independent verification sample in fresh mode.
pub fn fresh_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x6672_6573_6873_6565)
}

/// Counts `candidates` exactly in a verification sample and keeps those
/// with at least `C / 2` occurrences (or, when `p = 1`, those reaching
/// relative frequency `epsilon` exactly).
///
/// `cfg` must carry `epsilon` and `C` (see [`SampleConfig::new`]).
pub fn second_pass_verify(
    dag: &LabeledDag,
    table: &PathCountTable,
    cfg: &SampleConfig,
    hasher: &TraceHasher,
    candidates: &[TraceHash],
    mode: VerifyMode,
    workers: usize,
) -> Result<CandidateReport> {
    let (Some(epsilon), Some(oversample)) = (cfg.epsilon(), cfg.oversample()) else {
        return Err(Error::domain(
            "verification needs a configuration built from epsilon and C",
        ));
    };
    let total = table.total()?;
    let (verify_cfg, used_oversample) = match mode {
        VerifyMode::SameSeed => (*cfg, oversample),
        VerifyMode::Fresh { extra_oversample } => {
            let c = oversample + extra_oversample;
            let fresh = SampleConfig::new(epsilon, c, cfg.max_len(), fresh_seed(cfg.seed()), total)?;
            (fresh, c)
        }
    };

    let mut counts: HashMap<TraceHash, (u64, Option<Trace>)> =
        candidates.iter().map(|&h| (h, (0, None))).collect();
    let stats = sample_traces_parallel(dag, table, &verify_cfg, hasher, workers, |h, t| {
        if let Some((c, trace)) = counts.get_mut(&h) {
            *c += 1;
            if trace.is_none() {
                *trace = Some(t.to_vec());
            }
        }
    })?;

    // With p = 1 the sample is S_m itself, so the exact threshold applies.
    let exact = verify_cfg.p() >= 1.0;
    let threshold = if exact {
        epsilon * total as f64
    } else {
        used_oversample / 2.0
    };
    let keep = |c: u64| {
        if exact {
            reaches_fraction(c, total, epsilon)
        } else {
            c as f64 >= threshold
        }
    };
    let scale = verify_cfg.p() * total as f64;
    let stored_words: usize = counts
        .values()
        .map(|(_, t)| 2 + t.as_ref().map_or(0, |t| t.len().div_ceil(2)))
        .sum();
    let mut entries: Vec<ReportEntry> = counts
        .into_iter()
        .filter(|(_, (c, _))| keep(*c))
        .map(|(hash, (c, trace))| ReportEntry {
            hash,
            trace: trace.expect("counted candidates have a recorded trace"),
            sample_count: c,
            est_frequency: c as f64 / scale,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.sample_count
            .cmp(&a.sample_count)
            .then_with(|| a.trace.cmp(&b.trace))
    });

    Ok(CandidateReport {
        entries,
        meta: ReportMeta {
            epsilon: Some(epsilon),
            oversample: Some(used_oversample),
            p: verify_cfg.p(),
            total_traces: total,
            sample_size: stats.total_emitted,
            threshold,
            seed: cfg.seed(),
            verify_seed: verify_cfg.seed(),
            mode: mode.to_string(),
            hash_base: hasher.base(),
            candidates: candidates.len(),
            peak_state_words: stored_words,
            ..ReportMeta::default()
        },
    })
}

/// Full pipeline: count, choose `p`, sample into the summary, verify.
pub fn mine_frequent(dag: &LabeledDag, cfg: &MineConfig) -> Result<CandidateReport> {
    let table = count_traces(dag, cfg.max_len)?;
    mine_with_table(dag, &table, cfg)
}

/// [`mine_frequent`] with a precomputed count table.
pub fn mine_with_table(
    dag: &LabeledDag,
    table: &PathCountTable,
    cfg: &MineConfig,
) -> Result<CandidateReport> {
    let total = table.total()?;
    let hasher = TraceHasher::from_seed(cfg.hash_seed);
    if total == 0 {
        // Still validate the parameters.
        crate::sampling::choose_p(cfg.epsilon, cfg.oversample, 1)?;
        return Ok(CandidateReport {
            entries: Vec::new(),
            meta: ReportMeta {
                epsilon: Some(cfg.epsilon),
                oversample: Some(cfg.oversample),
                p: 1.0,
                threshold: cfg.oversample / 2.0,
                seed: cfg.seed,
                verify_seed: cfg.seed,
                mode: cfg.mode.to_string(),
                hash_base: hasher.base(),
                summary_capacity: 1,
                ..ReportMeta::default()
            },
        });
    }

    let sample_cfg = SampleConfig::new(cfg.epsilon, cfg.oversample, cfg.max_len, cfg.seed, total)?;
    // ceil(2 / epsilon) also covers the clamped case, where the expected
    // sample of a frequent trace is below C.
    let capacity = summary_capacity(sample_cfg.p(), total, cfg.oversample)
        .max(summary_capacity(1.0, 1, cfg.epsilon));
    let mut summary = CounterSet::new(capacity)?;
    let first = sample_traces_parallel(dag, table, &sample_cfg, &hasher, cfg.workers, |h, _| {
        summary.process(h)
    })?;
    let candidates = summary.candidates();
    let summary_peak = summary.peak_len();
    drop(summary);

    let mut report = second_pass_verify(
        dag,
        table,
        &sample_cfg,
        &hasher,
        &candidates,
        cfg.mode,
        cfg.workers,
    )?;
    report.meta.first_pass_sample_size = first.total_emitted;
    report.meta.summary_capacity = capacity;
    report.meta.summary_peak = summary_peak;
    report.meta.peak_state_words = report.meta.peak_state_words.max(2 * summary_peak);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{exact_frequencies, DEFAULT_BUDGET};
    use crate::sampling::sample_traces;

    fn movement_example() -> LabeledDag {
        LabeledDag::from_names(&["1", "2", "3", "6", "7"], &[(0, 1), (0, 2), (1, 2), (3, 4)]).unwrap()
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("same-seed".parse::<VerifyMode>().unwrap(), VerifyMode::SameSeed);
        assert!(matches!("fresh".parse::<VerifyMode>().unwrap(), VerifyMode::Fresh { .. }));
        assert!("other".parse::<VerifyMode>().is_err());
    }

    #[test]
    fn same_seed_regeneration_is_identical() {
        let dag = movement_example();
        let table = count_traces(&dag, 5).unwrap();
        let cfg = SampleConfig::with_probability(0.5, 5, 99).unwrap();
        let hasher = TraceHasher::default();
        let run = || {
            let mut v = Vec::new();
            sample_traces(&dag, &table, &cfg, &hasher, |h, t| v.push((h, t.to_vec())));
            v
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn absent_candidate_is_filtered() {
        let dag = movement_example();
        let table = count_traces(&dag, 5).unwrap();
        let cfg = SampleConfig::new(0.5, 2.0, 5, 1, 10).unwrap();
        let bogus = TraceHash(12345);
        let report = second_pass_verify(
            &dag,
            &table,
            &cfg,
            &TraceHasher::default(),
            &[bogus],
            VerifyMode::SameSeed,
            1,
        )
        .unwrap();
        assert!(report.entries.is_empty());
        assert_eq!(report.meta.candidates, 1);
    }

    #[test]
    fn clamped_p_reproduces_exact_frequent_set() {
        // Path a -> b -> a -> b -> a: 15 traces, `a` occurs 3 times and
        // `b`, `a-b`, `b-a`, `a-b-a` twice each.
        let dag = LabeledDag::from_names(&["a", "b", "a", "b", "a"], &[(0, 1), (1, 2), (2, 3), (3, 4)])
            .unwrap();
        let exact = exact_frequencies(&dag, 5, DEFAULT_BUDGET).unwrap();
        for eps in [0.2, 0.1, 0.05] {
            let report = mine_frequent(&dag, &MineConfig::new(5, eps, 4.0, 7)).unwrap();
            assert_eq!(report.meta.p, 1.0);
            let mut got: Vec<(Trace, u64)> =
                report.entries.iter().map(|e| (e.trace.clone(), e.sample_count)).collect();
            got.sort();
            let mut want = exact.frequent(eps);
            want.sort();
            assert_eq!(got, want, "epsilon {eps}");
        }
        let report = mine_frequent(&dag, &MineConfig::new(5, 0.2, 4.0, 7)).unwrap();
        assert_eq!(report.entries.len(), 1);
        for e in &report.entries {
            assert!((e.est_frequency - exact.relative_frequency(&e.trace)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_graph_gives_empty_report() {
        let dag = LabeledDag::from_names::<&str>(&[], &[]).unwrap();
        let report = mine_frequent(&dag, &MineConfig::new(3, 0.1, 10.0, 0)).unwrap();
        assert!(report.entries.is_empty());
        assert!(mine_frequent(&dag, &MineConfig::new(3, 0.0, 10.0, 0)).is_err());
    }

    #[test]
    fn fresh_mode_uses_a_different_seed_and_larger_c() {
        let dag = movement_example();
        let cfg = MineConfig::new(5, 0.5, 2.0, 3).with_mode(VerifyMode::Fresh {
            extra_oversample: 2.0,
        });
        let report = mine_frequent(&dag, &cfg).unwrap();
        assert_ne!(report.meta.verify_seed, report.meta.seed);
        assert_eq!(report.meta.oversample, Some(4.0));
        assert_eq!(report.meta.threshold, 2.0);
        assert_eq!(report.meta.mode, "fresh");
    }

    #[test]
    fn tsv_layout() {
        let dag = movement_example();
        let report = CandidateReport {
            entries: vec![ReportEntry {
                hash: TraceHash(1),
                trace: vec![dag.label(0), dag.label(1)],
                sample_count: 7,
                est_frequency: 0.25,
            }],
            meta: ReportMeta::default(),
        };
        let mut out = Vec::new();
        report.write_tsv(&dag, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "trace\tsample_count\test_relative_frequency\n1-2\t7\t2.500000e-1\n"
        );
    }
}
