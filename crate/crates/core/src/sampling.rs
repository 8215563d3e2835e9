//! Independent Bernoulli sampling of path traces without enumerating them.
//!
//! Every trace of `S_m` is kept independently with probability `p`. A root
//! `v` is entered only if at least one trace starting at `v` is kept, which
//! happens with probability `1 - (1-p)^c[v][m]`. Inside an entered call the
//! children that contribute at least one kept trace are chosen from the
//! correct conditional law, so every call emits at least one trace and the
//! work done is proportional to the output.
//!
//! Children are selected by binary search over prefix products of their
//! no-recursion probabilities instead of flipping one coin per child.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::PathCountTable;
use crate::dag::{Label, LabeledDag, VertexId};
use crate::error::{Error, Result};
use crate::hash::{TraceHash, TraceHasher};

/// Probabilities below this are treated as zero.
const NEGLIGIBLE: f64 = 1.0 / (1u64 << 60) as f64;

/// Inclusion probability giving an expected `oversample / epsilon` samples:
/// `min(1, C / (epsilon * |S_m|))`.
pub fn choose_p(epsilon: f64, oversample: f64, total: u64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(oversample > 1.0 && oversample.is_finite()) {
        return Err(Error::domain(format!(
            "oversampling constant must be finite and > 1, got {oversample}"
        )));
    }
    if total == 0 {
        return Err(Error::domain("cannot sample from an empty trace multiset"));
    }
    Ok((oversample / (epsilon * total as f64)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleConfig {
    epsilon: Option<f64>,
    oversample: Option<f64>,
    max_len: usize,
    seed: u64,
    p: f64,
}

impl SampleConfig {
    /// Derives `p` from the frequency threshold and `|S_m|`.
    pub fn new(epsilon: f64, oversample: f64, max_len: usize, seed: u64, total: u64) -> Result<Self> {
        let p = choose_p(epsilon, oversample, total)?;
        Self::check_len(max_len)?;
        Ok(Self {
            epsilon: Some(epsilon),
            oversample: Some(oversample),
            max_len,
            seed,
            p,
        })
    }

    /// Uses `p` directly.
    pub fn with_probability(p: f64, max_len: usize, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("probability must lie in (0, 1], got {p}")));
        }
        Self::check_len(max_len)?;
        Ok(Self {
            epsilon: None,
            oversample: None,
            max_len,
            seed,
            p,
        })
    }

    fn check_len(max_len: usize) -> Result<()> {
        if max_len == 0 {
            return Err(Error::domain("maximum trace length must be at least 1"));
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn oversample(&self) -> Option<f64> {
        self.oversample
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `p * |S_m|`, which equals `C / epsilon` whenever `p < 1`.
    pub fn expected_sample_size(&self, total: u64) -> f64 {
        self.p * total as f64
    }
}

/// How the per-child recursion probabilities are derived.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChildRule {
    /// Conditional law: until some child has recursed, child `j` recurses
    /// with probability `(1 - (1-p)^c_j) / (1 - (1-p)^R_j)`, where `R_j`
    /// counts the traces of child `j`, all later children and the singleton.
    /// Afterwards children recurse independently with `1 - (1-p)^c_j`.
    #[default]
    Exact,
    /// Each child independently skips with probability
    /// `(1-p)^c_j / (1 - (1-p)^c_v)` clamped to `[0, 1]`. Kept for
    /// comparison; it does not reproduce the conditional law.
    Literal,
}

/// `(1-p)^k` and `1-(1-p)^k` evaluated in log space.
#[derive(Debug, Clone, Copy)]
struct Survival {
    log_q: f64,
}

impl Survival {
    fn new(p: f64) -> Self {
        Self { log_q: (-p).ln_1p() }
    }

    /// `ln (1-p)^k`, exact even where the power itself would underflow.
    fn log_none(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            k as f64 * self.log_q
        }
    }

    fn none(&self, k: u64) -> f64 {
        let v = self.log_none(k).exp();
        if v < NEGLIGIBLE {
            0.0
        } else {
            v
        }
    }

    fn some(&self, k: u64) -> f64 {
        -self.log_none(k).exp_m1()
    }
}

/// Prefix products of no-recursion probabilities for one `(vertex, length)`
/// pair, stored as natural logs so that long products never underflow.
///
/// `log_first[j]` is the log-probability that none of the first `j` children
/// recurse given that the call was entered; `log_rest[j]` is the
/// unconditional log-probability of the same event, used once one child has
/// recursed. Both start at 0 and are non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSkipTable {
    pub log_first: Vec<f64>,
    pub log_rest: Vec<f64>,
}

impl EdgeSkipTable {
    pub fn first(&self) -> Vec<f64> {
        self.log_first.iter().map(|x| x.exp()).collect()
    }

    pub fn rest(&self) -> Vec<f64> {
        self.log_rest.iter().map(|x| x.exp()).collect()
    }
}

/// Smallest `j > start` with `q[j] <= r`, i.e. the next child to recurse
/// when `r` is uniform on `[0, q[start])`. `None` when `r < q[d]`.
///
/// Only the order of the values matters, so the same search works on
/// log-probabilities with `r` replaced by its log.
pub fn next_recursing(q: &[f64], start: usize, r: f64) -> Option<usize> {
    let tail = &q[start + 1..];
    let j = start + 1 + tail.partition_point(|&x| x > r);
    (j < q.len()).then_some(j)
}

/// Draws the set of recursing children (1-based indices into `q`) for
/// independent per-child skip probabilities whose prefix products are `q`.
pub fn select_recursing_children<R: Rng + ?Sized>(q: &[f64], rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos + 1 < q.len() && q[pos] > 0.0 {
        let r = rng.random::<f64>() * q[pos];
        match next_recursing(q, pos, r) {
            Some(j) => {
                out.push(j);
                pos = j;
            }
            None => break,
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleStats {
    pub seed: u64,
    pub p: f64,
    pub total_emitted: u64,
    /// `per_length[l - 1]` counts emitted traces of length `l`.
    pub per_length: Vec<u64>,
    pub roots_entered: u64,
    pub invocations: u64,
    /// Invocations that produced no output. Always zero for a correct sampler.
    pub empty_invocations: u64,
}

impl SampleStats {
    fn new(seed: u64, p: f64, max_len: usize) -> Self {
        Self {
            seed,
            p,
            per_length: vec![0; max_len],
            ..Self::default()
        }
    }

    fn merge(&mut self, other: &SampleStats) {
        self.total_emitted += other.total_emitted;
        for (a, b) in self.per_length.iter_mut().zip(&other.per_length) {
            *a += b;
        }
        self.roots_entered += other.roots_entered;
        self.invocations += other.invocations;
        self.empty_invocations += other.empty_invocations;
    }
}

/// Per-worker sampling state: lazily built skip tables plus the current
/// trace prefix.
pub struct Sampler<'a> {
    dag: &'a LabeledDag,
    table: &'a PathCountTable,
    p: f64,
    surv: Survival,
    rule: ChildRule,
    hasher: TraceHasher,
    // Skip tables live in one arena: `log_first` then `log_rest`, each `d + 1` long.
    arena: Vec<f64>,
    memo: HashMap<(VertexId, u32), usize>,
    labels: Vec<Label>,
    hashes: Vec<TraceHash>,
    stats: SampleStats,
}

impl<'a> Sampler<'a> {
    pub fn new(dag: &'a LabeledDag, table: &'a PathCountTable, p: f64, hasher: TraceHasher) -> Self {
        assert_eq!(dag.vertex_count(), table.vertex_count(), "count table belongs to another graph");
        let m = table.max_len();
        Self {
            dag,
            table,
            p,
            surv: Survival::new(p),
            rule: ChildRule::Exact,
            hasher,
            arena: Vec::new(),
            memo: HashMap::new(),
            labels: Vec::with_capacity(m),
            hashes: Vec::with_capacity(m),
            stats: SampleStats::new(0, p, m),
        }
    }

    pub fn with_rule(mut self, rule: ChildRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn stats(&self) -> &SampleStats {
        &self.stats
    }

    /// Probability that root `v` is entered: `1 - (1-p)^c[v][m]`.
    pub fn root_probability(&self, v: VertexId) -> f64 {
        self.surv.some(self.table.get(v, self.table.max_len()))
    }

    /// Whether a uniform draw `u` on `[0, 1)` enters root `v`.
    fn enters(&self, v: VertexId, u: f64) -> bool {
        u >= self.surv.none(self.table.get(v, self.table.max_len()))
    }

    /// Runs the sampler body at `root` with the full horizon, conditioned on
    /// at least one trace from `root` being kept.
    pub fn sample_root<R, F>(&mut self, root: VertexId, rng: &mut R, sink: &mut F)
    where
        R: Rng + ?Sized,
        F: FnMut(TraceHash, &[Label]),
    {
        self.stats.roots_entered += 1;
        self.body(root, self.table.max_len(), rng, sink);
    }

    /// Builds the prefix-product table for `v` at remaining length `len`.
    pub fn build_skip_table(&self, v: VertexId, len: usize) -> EdgeSkipTable {
        let children = if len >= 2 { self.dag.successors(v) } else { &[] };
        let d = children.len();
        let c_v = self.table.get(v, len);
        let log_denom = self.surv.some(c_v).ln();
        let mut log_first = vec![0.0; d + 1];
        let mut log_rest = vec![0.0; d + 1];
        match self.rule {
            ChildRule::Exact => {
                // first[j] = (1-p)^C_j * (1 - (1-p)^(c_v - C_j)) / (1 - (1-p)^c_v)
                // where C_j sums the counts of the first j children.
                let mut prefix = 0u64;
                for (j, &w) in children.iter().enumerate() {
                    prefix += self.table.get(w, len - 1);
                    let log_none = self.surv.log_none(prefix);
                    log_rest[j + 1] = log_none.min(log_rest[j]);
                    let cond = log_none + self.surv.some(c_v - prefix).ln() - log_denom;
                    log_first[j + 1] = cond.min(log_first[j]);
                }
            }
            ChildRule::Literal => {
                let denom = self.surv.some(c_v);
                for (j, &w) in children.iter().enumerate() {
                    let skip = (self.surv.none(self.table.get(w, len - 1)) / denom).clamp(0.0, 1.0);
                    log_rest[j + 1] = log_rest[j] + skip.ln();
                }
                log_first.copy_from_slice(&log_rest);
            }
        }
        EdgeSkipTable { log_first, log_rest }
    }

    fn skip_offset(&mut self, v: VertexId, len: usize) -> usize {
        if let Some(&off) = self.memo.get(&(v, len as u32)) {
            return off;
        }
        let table = self.build_skip_table(v, len);
        let off = self.arena.len();
        self.arena.extend_from_slice(&table.log_first);
        self.arena.extend_from_slice(&table.log_rest);
        self.memo.insert((v, len as u32), off);
        off
    }

    fn body<R, F>(&mut self, v: VertexId, len: usize, rng: &mut R, sink: &mut F)
    where
        R: Rng + ?Sized,
        F: FnMut(TraceHash, &[Label]),
    {
        self.stats.invocations += 1;
        let emitted_before = self.stats.total_emitted;

        let label = self.dag.label(v);
        let h = self
            .hasher
            .extend(self.hashes.last().copied().unwrap_or(TraceHash::EMPTY), label);
        self.labels.push(label);
        self.hashes.push(h);

        let mut out = false;
        let d = if len >= 2 { self.dag.out_degree(v) } else { 0 };
        if d > 0 {
            let off = self.skip_offset(v, len);
            let width = d + 1;
            let dag = self.dag;
            let children = dag.successors(v);
            // The first pick uses the conditional table, later picks the
            // unconditional one.
            let mut q_off = off;
            let mut pos = 0;
            loop {
                let log_q = &self.arena[q_off..q_off + width];
                let log_r = log_q[pos] + rng.random::<f64>().ln();
                let Some(j) = next_recursing(log_q, pos, log_r) else {
                    break;
                };
                self.body(children[j - 1], len - 1, rng, sink);
                out = true;
                pos = j;
                q_off = off + width;
                if pos == d {
                    break;
                }
            }
        }

        if !out || rng.random::<f64>() < self.p {
            self.stats.total_emitted += 1;
            self.stats.per_length[self.labels.len() - 1] += 1;
            sink(h, &self.labels);
        }

        self.labels.pop();
        self.hashes.pop();
        if self.stats.total_emitted == emitted_before {
            self.stats.empty_invocations += 1;
        }
    }
}

fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for the body of root `v`.
fn root_rng(seed: u64, v: VertexId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(v as u64 + 1);
    rng
}

/// Samples `S_m` sequentially, streaming each kept trace into `sink` as it
/// is produced.
pub fn sample_traces<F>(
    dag: &LabeledDag,
    table: &PathCountTable,
    cfg: &SampleConfig,
    hasher: &TraceHasher,
    mut sink: F,
) -> SampleStats
where
    F: FnMut(TraceHash, &[Label]),
{
    sample_traces_with_rule(dag, table, cfg, hasher, ChildRule::Exact, &mut sink)
}

pub fn sample_traces_with_rule<F>(
    dag: &LabeledDag,
    table: &PathCountTable,
    cfg: &SampleConfig,
    hasher: &TraceHasher,
    rule: ChildRule,
    sink: &mut F,
) -> SampleStats
where
    F: FnMut(TraceHash, &[Label]),
{
    check_table(table, cfg);
    let mut sampler = Sampler::new(dag, table, cfg.p, *hasher).with_rule(rule);
    let mut master = master_rng(cfg.seed);
    for v in dag.vertices() {
        let u = master.random::<f64>();
        if sampler.enters(v, u) {
            let mut rng = root_rng(cfg.seed, v);
            sampler.sample_root(v, &mut rng, sink);
        }
    }
    let mut stats = sampler.stats.clone();
    stats.seed = cfg.seed;
    stats
}

/// Parallel variant. Roots are sampled concurrently on `workers` threads but
/// handed to `sink` in root order, so the output is identical to
/// [`sample_traces`] for the same seed.
pub fn sample_traces_parallel<F>(
    dag: &LabeledDag,
    table: &PathCountTable,
    cfg: &SampleConfig,
    hasher: &TraceHasher,
    workers: usize,
    mut sink: F,
) -> Result<SampleStats>
where
    F: FnMut(TraceHash, &[Label]),
{
    if workers <= 1 {
        return Ok(sample_traces(dag, table, cfg, hasher, sink));
    }
    check_table(table, cfg);

    let probe = Sampler::new(dag, table, cfg.p, *hasher);
    let mut master = master_rng(cfg.seed);
    let entered: Vec<VertexId> = dag
        .vertices()
        .filter(|&v| probe.enters(v, master.random::<f64>()))
        .collect();

    struct RootOutput {
        labels: Vec<Label>,
        traces: Vec<(TraceHash, usize)>,
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let (outputs, stats): (Vec<RootOutput>, Vec<SampleStats>) = pool.install(|| {
        let chunk = entered.len().div_ceil(workers * 4).max(1);
        entered
            .par_chunks(chunk)
            .map(|roots| {
                let mut sampler = Sampler::new(dag, table, cfg.p, *hasher);
                let mut out = RootOutput {
                    labels: Vec::new(),
                    traces: Vec::new(),
                };
                for &v in roots {
                    let mut rng = root_rng(cfg.seed, v);
                    sampler.sample_root(v, &mut rng, &mut |h, t: &[Label]| {
                        out.labels.extend_from_slice(t);
                        out.traces.push((h, t.len()));
                    });
                }
                (out, sampler.stats.clone())
            })
            .unzip()
    });

    let mut total = SampleStats::new(cfg.seed, cfg.p, table.max_len());
    for s in &stats {
        total.merge(s);
    }
    for out in outputs {
        let mut start = 0;
        for (h, len) in out.traces {
            sink(h, &out.labels[start..start + len]);
            start += len;
        }
    }
    Ok(total)
}

fn check_table(table: &PathCountTable, cfg: &SampleConfig) {
    assert_eq!(
        table.max_len(),
        cfg.max_len,
        "count table horizon differs from the sampling horizon"
    );
}
