//! Command-line front end for `dagtrace`.

pub mod args;
pub mod bench;
pub mod manifest;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;
use std::time::Instant;

use dagtrace::counting::count_traces;
use dagtrace::enumerate::{all_traces, all_traces_hashed, exact_frequencies};
use dagtrace::ingestion::{build_event_dag, parse_events, EventRecord, IngestOptions, IngestStats};
use dagtrace::mining::{mine_with_table, CandidateReport, MineConfig};
use dagtrace::sampling::{choose_p, sample_traces_parallel, SampleConfig};
use dagtrace::synthetic::EventSpec;
use dagtrace::{Error, LabeledDag, Result, TraceHasher};

use crate::args::{
    BenchArgs, Cli, Command, CountArgs, EnumerateArgs, IngestArgs, MineArgs, SampleArgs, Source,
};
use crate::bench::{bench_row, write_table};
use crate::manifest::RunManifest;

/// Exit status for `err`: 1 for bad input or parameters, 2 for I/O failures.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_domain() {
        1
    } else {
        2
    }
}

/// Runs `cli`, writing primary output to `out` and the manifest line to
/// `log`.
pub fn run(cli: &Cli, argv: Vec<String>, out: &mut dyn Write, log: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let mut manifest = match &cli.command {
        Command::Ingest(a) => ingest(a, argv, out, log)?,
        Command::Enumerate(a) => enumerate(a, argv, out)?,
        Command::Count(a) => count(a, argv, out)?,
        Command::Sample(a) => sample(a, argv, out)?,
        Command::Mine(a) => mine(a, argv, out)?,
        Command::Bench(a) => run_bench(a, argv, out)?,
    };
    out.flush()?;
    manifest.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    manifest.write_line(log)?;
    if let Some(path) = &cli.manifest {
        manifest.save(path)?;
    }
    Ok(())
}

enum Input {
    Dag(LabeledDag),
    Events(Vec<EventRecord>),
}

/// Reads a saved DAG or an event CSV, told apart by the first line.
fn read_input(path: &Path) -> Result<Input> {
    let mut reader = open(path)?;
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let whole = BufReader::new(Cursor::new(first.clone()).chain(reader));
    if first.starts_with("dag ") {
        Ok(Input::Dag(LabeledDag::read_from(whole)?))
    } else {
        Ok(Input::Events(parse_events(whole)?))
    }
}

impl Input {
    fn graph(&self, delta: f64, allow_zero_gap: bool) -> Result<(LabeledDag, Option<IngestStats>)> {
        match self {
            Input::Dag(dag) => Ok((dag.clone(), None)),
            Input::Events(events) => {
                let opts = IngestOptions {
                    delta,
                    allow_zero_gap,
                };
                let ed = build_event_dag(events, opts)?;
                Ok((ed.dag, Some(ed.stats)))
            }
        }
    }

    fn is_events(&self) -> bool {
        matches!(self, Input::Events(_))
    }
}

/// Loads the graph; the flag says whether it was ingested from events.
fn load(source: &Source, manifest: &mut RunManifest) -> Result<(LabeledDag, bool)> {
    manifest.input(&source.input);
    let input = read_input(&source.input)?;
    if input.is_events() {
        manifest.param("delta", source.delta);
        manifest.param("allow_zero_gap", source.allow_zero_gap);
    }
    let (dag, stats) = input.graph(source.delta, source.allow_zero_gap)?;
    if let Some(s) = stats {
        record_ingest(manifest, &s);
    }
    manifest.stat("vertices", dag.vertex_count());
    manifest.stat("edges", dag.edge_count());
    Ok((dag, input.is_events()))
}

fn record_ingest(manifest: &mut RunManifest, s: &IngestStats) {
    manifest.stat("events", s.events);
    manifest.stat("tags", s.tags);
    manifest.stat("overlap_runs", s.overlap_runs);
    manifest.stat("gap_warnings", s.gap_warnings);
}

fn workers(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| with_path(e, path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| with_path(e, path))
}

fn with_path(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn ingest(a: &IngestArgs, argv: Vec<String>, out: &mut dyn Write, log: &mut dyn Write) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("ingest", argv);
    manifest.param("delta", a.delta);
    manifest.param("allow_zero_gap", a.allow_zero_gap);
    manifest.input(&a.events);
    let events = parse_events(open(&a.events)?)?;
    let ed = build_event_dag(
        &events,
        IngestOptions {
            delta: a.delta,
            allow_zero_gap: a.allow_zero_gap,
        },
    )?;
    writeln!(out, "{}", ed.dag)?;
    if ed.stats.gap_warnings > 0 {
        writeln!(
            log,
            "warning: {} merged readings span gaps longer than delta",
            ed.stats.gap_warnings
        )?;
    }
    if let Some(path) = &a.output {
        let mut w = create(path)?;
        ed.dag.write_to(&mut w)?;
        w.flush()?;
        manifest.output(path);
    }
    record_ingest(&mut manifest, &ed.stats);
    manifest.stat("vertices", ed.stats.vertices);
    manifest.stat("edges", ed.stats.edges);
    Ok(manifest)
}

fn enumerate(a: &EnumerateArgs, argv: Vec<String>, out: &mut dyn Write) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("enumerate", argv);
    manifest.param("max_len", a.max_len);
    manifest.param("budget", a.budget);
    manifest.param("hashed_output", a.hashed_output);
    manifest.param("distinct", a.distinct);
    let (dag, _) = load(&a.source, &mut manifest)?;
    let total = count_traces(&dag, a.max_len)?.total()?;
    if total > a.budget {
        return Err(Error::BudgetExceeded { budget: a.budget });
    }
    manifest.stat("total_traces", total);

    let hasher = TraceHasher::default();
    let mut written: io::Result<()> = Ok(());
    if a.distinct {
        let set = exact_frequencies(&dag, a.max_len, a.budget)?;
        manifest.stat("distinct_traces", set.distinct());
        for (t, c) in set.by_frequency() {
            if a.hashed_output {
                writeln!(out, "{}\t{c}", hasher.hash(&t))?;
            } else {
                writeln!(out, "{}\t{c}", dag.format_trace(&t))?;
            }
        }
    } else if a.hashed_output {
        all_traces_hashed(&dag, a.max_len, &hasher, |h, _| {
            if written.is_ok() {
                written = writeln!(out, "{h}");
            }
        });
    } else {
        all_traces(&dag, a.max_len, |t| {
            if written.is_ok() {
                written = writeln!(out, "{}", dag.format_trace(t));
            }
        });
    }
    written?;
    Ok(manifest)
}

fn count(a: &CountArgs, argv: Vec<String>, out: &mut dyn Write) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("count", argv);
    manifest.param("max_len", &a.max_len);
    manifest.input(&a.input);
    let input = read_input(&a.input)?;
    let deltas: Vec<Option<f64>> = if input.is_events() {
        manifest.param("delta", &a.delta);
        manifest.param("allow_zero_gap", a.allow_zero_gap);
        a.delta.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };

    let mut rows = Vec::new();
    for delta in deltas {
        let (dag, _) = input.graph(delta.unwrap_or(0.0), a.allow_zero_gap)?;
        for &m in &a.max_len {
            let table = count_traces(&dag, m)?;
            let total = table.total()?;
            if rows.is_empty() {
                if let Some(path) = &a.table {
                    let mut w = create(path)?;
                    table.write_tsv(&mut w)?;
                    w.flush()?;
                    manifest.output(path);
                }
            }
            rows.push((delta, m, dag.vertex_count(), dag.edge_count(), total));
        }
    }

    writeln!(out, "total={}", rows[0].4)?;
    writeln!(out, "delta\tm\tvertices\tedges\ttotal_traces")?;
    for &(delta, m, v, e, total) in &rows {
        let delta = delta.map_or_else(|| "-".to_string(), |d| d.to_string());
        writeln!(out, "{delta}\t{m}\t{v}\t{e}\t{total}")?;
    }
    manifest.stat("total_traces", rows.iter().map(|r| r.4).collect::<Vec<_>>());
    Ok(manifest)
}

fn sample(a: &SampleArgs, argv: Vec<String>, out: &mut dyn Write) -> Result<RunManifest> {
    let s = &a.sampling;
    let workers = workers(s.workers);
    let mut manifest = RunManifest::new("sample", argv);
    manifest.param("max_len", a.max_len);
    manifest.param("epsilon", s.epsilon);
    manifest.param("oversample_c", s.oversample);
    manifest.param("seed", s.seed);
    manifest.param("workers", workers);
    manifest.param("hashed_output", a.hashed_output);
    let (dag, from_events) = load(&a.source, &mut manifest)?;
    let table = count_traces(&dag, a.max_len)?;
    let total = table.total()?;

    let mut emitted = 0u64;
    if total == 0 {
        choose_p(s.epsilon, s.oversample, 1)?;
    } else {
        let cfg = SampleConfig::new(s.epsilon, s.oversample, a.max_len, s.seed, total)?;
        let mut sink: Box<dyn Write> = match &a.output {
            Some(path) => {
                manifest.output(path);
                Box::new(create(path)?)
            }
            None => Box::new(io::sink()),
        };
        let hasher = TraceHasher::default();
        let mut written: io::Result<()> = Ok(());
        let stats = sample_traces_parallel(&dag, &table, &cfg, &hasher, workers, |h, t| {
            if written.is_ok() {
                written = if a.hashed_output {
                    writeln!(sink, "{h}")
                } else {
                    writeln!(sink, "{}", dag.format_trace(t))
                };
            }
        })?;
        written?;
        sink.flush()?;
        emitted = stats.total_emitted;
        manifest.stat("p", cfg.p());
        manifest.stat("expected_samples", cfg.expected_sample_size(total));
        manifest.stat("sample", &stats);
    }

    let delta = if from_events {
        a.source.delta.to_string()
    } else {
        "-".to_string()
    };
    let ratio = if emitted == 0 {
        "-".to_string()
    } else {
        format!("{:.1}", total as f64 / emitted as f64)
    };
    writeln!(out, "delta\tm\ttotal_traces\tsamples\tratio")?;
    writeln!(out, "{delta}\t{}\t{total}\t{emitted}\t{ratio}", a.max_len)?;
    manifest.stat("total_traces", total);
    Ok(manifest)
}

fn mine(a: &MineArgs, argv: Vec<String>, out: &mut dyn Write) -> Result<RunManifest> {
    let s = &a.sampling;
    let workers = workers(s.workers);
    let mut manifest = RunManifest::new("mine", argv);
    manifest.param("max_len", a.max_len);
    manifest.param("epsilon", s.epsilon);
    manifest.param("oversample_c", s.oversample);
    manifest.param("seed", s.seed);
    manifest.param("mode", a.mode.to_string());
    manifest.param("workers", workers);
    manifest.param("hashed_output", a.hashed_output);
    let (dag, _) = load(&a.source, &mut manifest)?;
    let table = count_traces(&dag, a.max_len)?;
    let cfg = MineConfig::new(a.max_len, s.epsilon, s.oversample, s.seed)
        .with_mode(a.mode)
        .with_workers(workers);
    let report = mine_with_table(&dag, &table, &cfg)?;
    if a.hashed_output {
        write_hashed(&report, out)?;
    } else {
        report.write_tsv(&dag, out)?;
    }
    manifest.stat("report", &report.meta);
    manifest.stat("reported", report.entries.len());
    Ok(manifest)
}

fn write_hashed(report: &CandidateReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "hash\tsample_count\test_relative_frequency")?;
    for e in &report.entries {
        writeln!(out, "{}\t{}\t{:.6e}", e.hash, e.sample_count, e.est_frequency)?;
    }
    Ok(())
}

fn run_bench(a: &BenchArgs, argv: Vec<String>, out: &mut dyn Write) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("bench", argv);
    manifest.param("delta", &a.delta);
    manifest.param("max_len", &a.max_len);
    manifest.param("oversample_c", a.oversample);
    manifest.param("seed", a.seed);
    manifest.param("budget", a.budget);
    manifest.param("workers", a.workers);
    manifest.param("allow_zero_gap", a.allow_zero_gap);
    let input = match &a.events {
        Some(path) => {
            manifest.input(path);
            read_input(path)?
        }
        None => {
            let spec = EventSpec {
                tags: a.tags,
                readings_per_tag: a.readings_per_tag,
                locations: a.locations,
                mean_gap: a.mean_gap,
                route_prob: a.route_prob,
                seed: a.seed,
                ..EventSpec::default()
            };
            manifest.param(
                "generator",
                serde_json::json!({
                    "tags": spec.tags,
                    "readings_per_tag": spec.readings_per_tag,
                    "locations": spec.locations,
                    "mean_gap": spec.mean_gap,
                    "routes": spec.routes,
                    "route_prob": spec.route_prob,
                    "seed": spec.seed,
                }),
            );
            Input::Events(spec.generate()?)
        }
    };
    if !input.is_events() {
        return Err(Error::Domain("bench needs an event CSV, not a saved DAG".into()));
    }

    let mut rows = Vec::new();
    for &delta in &a.delta {
        let (dag, _) = input.graph(delta, a.allow_zero_gap)?;
        for &m in &a.max_len {
            rows.push(bench_row(&dag, delta, m, a.oversample, a.seed, a.budget, a.workers.max(1))?);
        }
    }
    write_table(&rows, out)?;
    manifest.stat("rows", &rows);
    Ok(manifest)
}
