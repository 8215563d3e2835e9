//! Frequent label sequences ("traces") among the paths of a labeled DAG.
//!
//! The pipeline counts paths per vertex ([`counting`]), samples each trace
//! independently with probability `p` without enumerating them
//! ([`sampling`]), and finds the frequent ones with a Misra-Gries summary
//! followed by an exact recount ([`heavy_hitters`], [`mining`]).
//! [`enumerate`] is the exhaustive reference and [`ingestion`] turns
//! timestamped event streams into DAGs.

pub mod counting;
pub mod dag;
pub mod enumerate;
pub mod error;
pub mod hash;
pub mod heavy_hitters;
pub mod ingestion;
pub mod mining;
pub mod sampling;
pub mod synthetic;

pub use counting::{count_traces, count_traces_into, total_traces, PathCountTable};
pub use dag::{Label, LabelDict, LabeledDag, VertexId};
pub use enumerate::{all_traces, all_traces_hashed, exact_frequencies, Trace, TraceMultiset};
pub use error::{Error, Result};
pub use hash::{TraceHash, TraceHasher};
pub use heavy_hitters::CounterSet;
pub use ingestion::{build_event_dag, parse_events, EventRecord, IngestOptions};
pub use mining::{mine_frequent, CandidateReport, MineConfig, VerifyMode};
pub use sampling::{choose_p, sample_traces, SampleConfig, SampleStats};
