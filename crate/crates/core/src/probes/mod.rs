//! Metrics and the training-dynamics experiments.
//!
//! Every experiment is a set of independent trials keyed by a string such as
//! `"sweep/p=0.30/seed=2"`. A trial's random streams are seeded from the
//! global seed plus a stable hash of its key, so results do not depend on how
//! trials are scheduled across threads. Trials run in parallel on the current
//! rayon pool and are collected in key order.

mod metrics;
mod report;

pub use metrics::{
    aggregate_runs, exact_match, f1_score, median, normalize_tokens, smooth_trailing, spearman, steps_to_threshold,
    EvalResult,
};
pub use report::{dataset_hash, write_csv, write_long_csv, LongRow};

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::construct::{sample_mixture, shortcut_count, ConstructError, MixtureSpec};
use crate::corpus::{Entry, Instance, Version};
use crate::model::{
    best_span, encode, forward_encoded, init_model, train_step_encoded, BatchSampler, Encoded, MaskSpec, ModelConfig,
    ModelError, ModelState, Vocab,
};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("no gold answers to score against")]
    NoGold,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("no values to aggregate")]
    EmptyInput,
    #[error("invalid probe argument: {0}")]
    InvalidArgument(String),
    #[error("trial {key}: {source}")]
    Trial {
        key: String,
        #[source]
        source: Box<ProbeError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("i/o failure on {path}: {detail}")]
    Io { path: String, detail: String },
}

impl ProbeError {
    fn in_trial(self, key: &str) -> Self {
        ProbeError::Trial { key: key.to_string(), source: Box::new(self) }
    }
}

/// Global seed plus the first eight bytes of SHA-256(key).
pub fn trial_seed(global: u64, key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    global.wrapping_add(u64::from_le_bytes(b))
}

/// Budget and seeding shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub model: ModelConfig,
    pub steps: usize,
    pub checkpoint_every: usize,
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings { model: ModelConfig::default(), steps: 1500, checkpoint_every: 25, n_seeds: 5, seed: 0 }
    }
}

impl ProbeSettings {
    fn validate(&self) -> Result<(), ProbeError> {
        if self.n_seeds == 0 || self.steps == 0 || self.checkpoint_every == 0 {
            return Err(ProbeError::InvalidArgument("n_seeds, steps and checkpoint_every must be positive".into()));
        }
        Ok(())
    }

    /// Model initialisation seed, shared by all trials of one seed index so
    /// that conditions are compared from the same starting point.
    fn init_seed(&self, seed_index: usize) -> u64 {
        trial_seed(self.seed, &format!("init/seed={seed_index}"))
    }
}

/// An instance with its encoding and gold strings, ready for scoring.
pub struct Prepared {
    pub instance: Instance,
    pub encoded: Encoded,
    pub golds: Vec<String>,
}

pub fn prepare(vocab: &Vocab, instances: &[Instance]) -> Vec<Prepared> {
    instances
        .iter()
        .map(|i| {
            let golds: BTreeSet<String> = i.answers.iter().map(|a| a.text.clone()).collect();
            Prepared { instance: i.clone(), encoded: encode(vocab, i), golds: golds.into_iter().collect() }
        })
        .collect()
}

fn predict_prepared(state: &ModelState, p: &Prepared, mask: MaskSpec) -> Result<String, ModelError> {
    let dist = forward_encoded(state, &p.encoded, mask)?;
    let (a, b) = best_span(&dist, state.config.max_span_len);
    let passage = &p.instance.passage;
    let start = passage.tokens().nth(a).map(|t| t.char_span.start).unwrap_or(0);
    let end = passage.tokens().nth(b).map(|t| t.char_span.end).unwrap_or(0);
    Ok(passage.text[start..end].to_string())
}

pub fn evaluate_prepared(state: &ModelState, set: &[Prepared], mask: MaskSpec) -> Result<EvalResult, ProbeError> {
    let mut scores = Vec::with_capacity(set.len());
    for p in set {
        let pred = predict_prepared(state, p, mask)?;
        scores.push((exact_match(&pred, &p.golds)?, f1_score(&pred, &p.golds)?));
    }
    EvalResult::from_scores(&scores)
}

/// EM and mean F1 of the model's predictions on `instances`.
pub fn evaluate(state: &ModelState, instances: &[Instance], mask: MaskSpec) -> Result<EvalResult, ProbeError> {
    evaluate_prepared(state, &prepare(&state.vocab, instances), mask)
}

/// Vocabulary over both versions of every entry given.
pub fn entry_vocab<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> Vocab {
    let instances: Vec<&Instance> = entries.into_iter().flat_map(|e| [&e.shortcut, &e.challenging]).collect();
    Vocab::build(instances, 1)
}

fn versions(entries: &[Entry], version: Version) -> Vec<Instance> {
    entries.iter().map(|e| e.version(version).clone()).collect()
}

/// Scores recorded at one checkpoint, one per evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub evals: Vec<EvalResult>,
}

struct Trial<'a> {
    model: &'a ModelConfig,
    vocab: &'a Vocab,
    init_seed: u64,
    batch_seed: u64,
    mask: Option<usize>,
    steps: usize,
    /// Evaluate at step 0, every this many steps, and at the end.
    checkpoint_every: Option<usize>,
}

impl Trial<'_> {
    fn run(&self, train: &[Encoded], evals: &[&[Prepared]]) -> Result<(ModelState, Vec<Checkpoint>), ProbeError> {
        let cfg = ModelConfig { seed: self.init_seed, ..self.model.clone() };
        let mut state = init_model(&cfg, self.vocab.clone())?;
        let mask = MaskSpec::keep(self.mask.unwrap_or(cfg.hidden_dim));
        let mut sampler = BatchSampler::new(train.len(), cfg.batch_size, self.batch_seed);
        let mut checkpoints = Vec::new();
        let mut record = |state: &ModelState, step: usize| -> Result<(), ProbeError> {
            let evals = evals.iter().map(|set| evaluate_prepared(state, set, mask)).collect::<Result<_, _>>()?;
            checkpoints.push(Checkpoint { step, evals });
            Ok(())
        };
        if self.checkpoint_every.is_some() {
            record(&state, 0)?;
        }
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for step in 1..=self.steps {
            batch.clear();
            batch.extend(sampler.next_batch().into_iter().map(|i| train[i].clone()));
            train_step_encoded(&mut state, &batch, mask)?;
            if let Some(every) = self.checkpoint_every {
                if step % every == 0 || step == self.steps {
                    record(&state, step)?;
                }
            }
        }
        if self.checkpoint_every.is_none() {
            record(&state, self.steps)?;
        }
        Ok((state, checkpoints))
    }
}

fn run_trials<T, R>(trials: Vec<(String, T)>, f: impl Fn(&str, &T) -> Result<R, ProbeError> + Sync) -> Result<Vec<(String, R)>, ProbeError>
where
    T: Sync,
    R: Send,
{
    let mut out: Vec<(String, R)> = trials
        .par_iter()
        .map(|(key, t)| f(key, t).map(|r| (key.clone(), r)).map_err(|e| e.in_trial(key)))
        .collect::<Result<_, _>>()?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Proportion sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub key: String,
    pub proportion: f64,
    pub seed_index: usize,
    pub mixture_seed: u64,
    pub n_train: usize,
    pub n_shortcut: usize,
    pub challenging: EvalResult,
    pub shortcut: EvalResult,
}

/// One aggregated cell of the sweep (CSV row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub proportion: f64,
    pub n_runs: usize,
    pub challenging_em_mean: f64,
    pub challenging_em_std: f64,
    pub challenging_f1_mean: f64,
    pub challenging_f1_std: f64,
    pub shortcut_em_mean: f64,
    pub shortcut_em_std: f64,
    pub shortcut_f1_mean: f64,
    pub shortcut_f1_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub steps: usize,
    pub rows: Vec<SweepRow>,
    pub runs: Vec<SweepRun>,
}

impl SweepReport {
    pub fn row(&self, proportion: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.proportion - proportion).abs() < 1e-9)
    }
}

/// Trains one model per (proportion, seed) on a mixture of the training
/// entries and scores it on the pure challenging and pure shortcut versions
/// of the test entries.
pub fn proportion_sweep(
    train: &[Entry],
    test: &[Entry],
    grid: &[f64],
    settings: &ProbeSettings,
) -> Result<SweepReport, ProbeError> {
    settings.validate()?;
    if grid.is_empty() || train.is_empty() || test.is_empty() {
        return Err(ProbeError::InvalidArgument("sweep needs a grid and non-empty train and test entries".into()));
    }
    let vocab = entry_vocab(train.iter().chain(test));
    let chall = prepare(&vocab, &versions(test, Version::Challenging));
    let short = prepare(&vocab, &versions(test, Version::Shortcut));
    let mut trials = Vec::new();
    for &p in grid {
        for s in 0..settings.n_seeds {
            trials.push((format!("sweep/p={p:.2}/seed={s}"), (p, s)));
        }
    }
    let runs = run_trials(trials, |key, &(p, s)| {
        let mixture_seed = trial_seed(settings.seed, key);
        let spec = MixtureSpec { proportion: p, seed: mixture_seed, n_entries: train.len() };
        let mix = sample_mixture(train, &spec)?;
        let encoded: Vec<Encoded> = mix.iter().map(|i| encode(&vocab, i)).collect();
        let trial = Trial {
            model: &settings.model,
            vocab: &vocab,
            init_seed: settings.init_seed(s),
            batch_seed: mixture_seed,
            mask: None,
            steps: settings.steps,
            checkpoint_every: None,
        };
        let (_, cps) = trial.run(&encoded, &[&chall, &short])?;
        let last = cps.last().expect("final checkpoint");
        Ok(SweepRun {
            key: key.to_string(),
            proportion: p,
            seed_index: s,
            mixture_seed,
            n_train: mix.len(),
            n_shortcut: mix.iter().filter(|i| i.version == Version::Shortcut).count(),
            challenging: last.evals[0],
            shortcut: last.evals[1],
        })
    })?;
    let runs: Vec<SweepRun> = runs.into_iter().map(|(_, r)| r).collect();
    debug_assert!(runs.iter().all(|r| r.n_shortcut == shortcut_count(r.proportion, r.n_train)));
    let mut rows = Vec::new();
    for &p in grid {
        let cell: Vec<&SweepRun> = runs.iter().filter(|r| r.proportion == p).collect();
        let agg = |f: fn(&SweepRun) -> f64| aggregate_runs(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
        let (cem, cems) = agg(|r| r.challenging.em)?;
        let (cf1, cf1s) = agg(|r| r.challenging.f1)?;
        let (sem, sems) = agg(|r| r.shortcut.em)?;
        let (sf1, sf1s) = agg(|r| r.shortcut.f1)?;
        rows.push(SweepRow {
            proportion: p,
            n_runs: cell.len(),
            challenging_em_mean: cem,
            challenging_em_std: cems,
            challenging_f1_mean: cf1,
            challenging_f1_std: cf1s,
            shortcut_em_mean: sem,
            shortcut_em_std: sems,
            shortcut_f1_mean: sf1,
            shortcut_f1_std: sf1s,
        });
    }
    Ok(SweepReport { steps: settings.steps, rows, runs })
}

// ---------------------------------------------------------------------------
// Learning speed and capacity

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    ShortcutOnly,
    ChallengingOnly,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::ShortcutOnly, Condition::ChallengingOnly];

    pub fn version(self) -> Version {
        match self {
            Condition::ShortcutOnly => Version::Shortcut,
            Condition::ChallengingOnly => Version::Challenging,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::ShortcutOnly => "SHORTCUT_ONLY",
            Condition::ChallengingOnly => "CHALLENGING_ONLY",
        })
    }
}

/// The entries used for one seed; both conditions train on versions of
/// exactly these.
fn sample_pairs(entries: &[Entry], n_pairs: usize, settings: &ProbeSettings, probe: &str, s: usize) -> Vec<Entry> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(settings.seed, &format!("{probe}/pairs/seed={s}")));
    let mut picked = index::sample(&mut rng, entries.len(), n_pairs).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| entries[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedRun {
    pub key: String,
    pub condition: Condition,
    pub seed_index: usize,
    pub entry_ids: Vec<String>,
    /// Interpolated step at which train F1 first reached the threshold.
    pub steps_to_threshold: Option<f64>,
    /// (step, train F1) at every checkpoint.
    pub curve: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub threshold: f64,
    pub runs: Vec<SpeedRun>,
}

/// Median of steps-to-threshold with "not reached" ranked above every step.
/// `None` when the median itself is "not reached".
pub fn median_steps(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    median(&v).filter(|m| m.is_finite())
}

impl SpeedReport {
    pub fn median_steps(&self, condition: Condition) -> Option<f64> {
        let v: Vec<Option<f64>> =
            self.runs.iter().filter(|r| r.condition == condition).map(|r| r.steps_to_threshold).collect();
        median_steps(&v)
    }
}

/// Trains on the pure shortcut and the pure challenging versions of the same
/// sampled entries and records how fast training-set F1 climbs.
pub fn learning_speed_probe(
    entries: &[Entry],
    n_pairs: usize,
    threshold: f64,
    settings: &ProbeSettings,
) -> Result<SpeedReport, ProbeError> {
    settings.validate()?;
    if n_pairs == 0 || n_pairs > entries.len() {
        return Err(ProbeError::InvalidArgument(format!("n_pairs {n_pairs} not in 1..={}", entries.len())));
    }
    let vocab = entry_vocab(entries);
    let mut trials = Vec::new();
    for s in 0..settings.n_seeds {
        let pairs = sample_pairs(entries, n_pairs, settings, "speed", s);
        for c in Condition::ALL {
            trials.push((format!("speed/{c}/seed={s}"), (c, s, pairs.clone())));
        }
    }
    let runs = run_trials(trials, |key, (c, s, pairs)| {
        let set = prepare(&vocab, &versions(pairs, c.version()));
        let encoded: Vec<Encoded> = set.iter().map(|p| p.encoded.clone()).collect();
        let trial = Trial {
            model: &settings.model,
            vocab: &vocab,
            init_seed: settings.init_seed(*s),
            batch_seed: trial_seed(settings.seed, &format!("speed/batches/seed={s}")),
            mask: None,
            steps: settings.steps,
            checkpoint_every: Some(settings.checkpoint_every),
        };
        let (_, cps) = trial.run(&encoded, &[&set])?;
        let curve: Vec<(usize, f64)> = cps.iter().map(|c| (c.step, c.evals[0].f1)).collect();
        Ok(SpeedRun {
            key: key.to_string(),
            condition: *c,
            seed_index: *s,
            entry_ids: pairs.iter().map(|e| e.id.clone()).collect(),
            steps_to_threshold: steps_to_threshold(&curve, threshold),
            curve,
        })
    })?;
    Ok(SpeedReport { threshold, runs: runs.into_iter().map(|(_, r)| r).collect() })
}

/// {H/16, H/8, H/4, H/2, H} rounded down, without zeros or duplicates.
pub fn default_capacity_grid(hidden_dim: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = [16, 8, 4, 2, 1].iter().map(|d| hidden_dim / d).filter(|&k| k > 0).collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRun {
    pub key: String,
    pub condition: Condition,
    pub unmasked_units: usize,
    pub seed_index: usize,
    pub entry_ids: Vec<String>,
    pub final_train_f1: f64,
}

/// Smallest k whose final train F1 reaches the threshold, per condition and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinK {
    pub condition: Condition,
    pub seed_index: usize,
    pub threshold: f64,
    pub min_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub capacity_grid: Vec<usize>,
    pub threshold_ratio: f64,
    pub runs: Vec<WidthRun>,
    pub min_k: Vec<MinK>,
}

impl WidthReport {
    pub fn min_k(&self, condition: Condition, seed_index: usize) -> Option<usize> {
        self.min_k.iter().find(|m| m.condition == condition && m.seed_index == seed_index).and_then(|m| m.min_k)
    }
}

/// Trains with only `k` final hidden units for each k on the grid, a fixed
/// number of steps each. The threshold for each (condition, seed) is
/// `threshold_ratio` times that condition's unmasked final train F1.
pub fn parameter_size_probe(
    entries: &[Entry],
    n_pairs: usize,
    capacity_grid: &[usize],
    threshold_ratio: f64,
    settings: &ProbeSettings,
) -> Result<WidthReport, ProbeError> {
    settings.validate()?;
    let h = settings.model.hidden_dim;
    let mut grid: Vec<usize> = capacity_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] == 0 || *grid.last().unwrap() > h {
        return Err(ProbeError::InvalidArgument(format!("capacity grid must lie in [1, {h}]")));
    }
    if n_pairs == 0 || n_pairs > entries.len() {
        return Err(ProbeError::InvalidArgument(format!("n_pairs {n_pairs} not in 1..={}", entries.len())));
    }
    let vocab = entry_vocab(entries);
    // The unmasked run anchors the threshold even when H is off the grid.
    let mut trial_ks = grid.clone();
    if !trial_ks.contains(&h) {
        trial_ks.push(h);
    }
    let mut trials = Vec::new();
    for s in 0..settings.n_seeds {
        let pairs = sample_pairs(entries, n_pairs, settings, "width", s);
        for c in Condition::ALL {
            for &k in &trial_ks {
                trials.push((format!("width/{c}/k={k:05}/seed={s}"), (c, k, s, pairs.clone())));
            }
        }
    }
    let runs = run_trials(trials, |key, (c, k, s, pairs)| {
        let set = prepare(&vocab, &versions(pairs, c.version()));
        let encoded: Vec<Encoded> = set.iter().map(|p| p.encoded.clone()).collect();
        let trial = Trial {
            model: &settings.model,
            vocab: &vocab,
            init_seed: settings.init_seed(*s),
            batch_seed: trial_seed(settings.seed, &format!("width/batches/seed={s}")),
            mask: Some(*k),
            steps: settings.steps,
            checkpoint_every: None,
        };
        let (_, cps) = trial.run(&encoded, &[&set])?;
        Ok(WidthRun {
            key: key.to_string(),
            condition: *c,
            unmasked_units: *k,
            seed_index: *s,
            entry_ids: pairs.iter().map(|e| e.id.clone()).collect(),
            final_train_f1: cps.last().expect("final checkpoint").evals[0].f1,
        })
    })?;
    let runs: Vec<WidthRun> = runs.into_iter().map(|(_, r)| r).collect();
    let mut min_k = Vec::new();
    for c in Condition::ALL {
        for s in 0..settings.n_seeds {
            let f1_at = |k: usize| {
                runs.iter()
                    .find(|r| r.condition == c && r.seed_index == s && r.unmasked_units == k)
                    .map(|r| r.final_train_f1)
                    .unwrap_or(0.0)
            };
            let threshold = threshold_ratio * f1_at(h);
            let k = grid.iter().copied().find(|&k| f1_at(k) >= threshold);
            min_k.push(MinK { condition: c, seed_index: s, threshold, min_k: k });
        }
    }
    Ok(WidthReport { capacity_grid: grid, threshold_ratio, runs, min_k })
}

// ---------------------------------------------------------------------------
// Gap tracing

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub f1_shortcut_test: f64,
    pub f1_challenging_test: f64,
    /// `f1_shortcut_test − f1_challenging_test`.
    pub gap: f64,
}

impl TracePoint {
    pub fn new(step: usize, f1_shortcut_test: f64, f1_challenging_test: f64) -> Self {
        TracePoint { step, f1_shortcut_test, f1_challenging_test, gap: f1_shortcut_test - f1_challenging_test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeed {
    pub key: String,
    pub seed_index: usize,
    pub trace: Vec<TracePoint>,
    pub smoothed_gap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub proportion: f64,
    pub window: usize,
    pub steps: usize,
    pub seeds: Vec<GapSeed>,
    /// Per checkpoint, the mean over seeds.
    pub mean_trace: Vec<TracePoint>,
    /// Trailing-window smoothing of the mean gap.
    pub smoothed_gap: Vec<f64>,
    pub peak_gap: f64,
    pub peak_step: usize,
    pub final_gap: f64,
}

/// Tracks the shortcut-minus-challenging test F1 gap through training on a
/// mixture with shortcut proportion `p`.
pub fn gap_trace(
    train: &[Entry],
    test: &[Entry],
    p: f64,
    window: usize,
    settings: &ProbeSettings,
) -> Result<GapReport, ProbeError> {
    settings.validate()?;
    if window == 0 || train.is_empty() || test.is_empty() {
        return Err(ProbeError::InvalidArgument("gap trace needs window ≥ 1 and non-empty data".into()));
    }
    let vocab = entry_vocab(train.iter().chain(test));
    let chall = prepare(&vocab, &versions(test, Version::Challenging));
    let short = prepare(&vocab, &versions(test, Version::Shortcut));
    let trials: Vec<(String, usize)> = (0..settings.n_seeds).map(|s| (format!("gap/p={p:.2}/seed={s}"), s)).collect();
    let seeds = run_trials(trials, |key, &s| {
        let mixture_seed = trial_seed(settings.seed, key);
        let mix = sample_mixture(train, &MixtureSpec { proportion: p, seed: mixture_seed, n_entries: train.len() })?;
        let encoded: Vec<Encoded> = mix.iter().map(|i| encode(&vocab, i)).collect();
        let trial = Trial {
            model: &settings.model,
            vocab: &vocab,
            init_seed: settings.init_seed(s),
            batch_seed: mixture_seed,
            mask: None,
            steps: settings.steps,
            checkpoint_every: Some(settings.checkpoint_every),
        };
        let (_, cps) = trial.run(&encoded, &[&short, &chall])?;
        let trace: Vec<TracePoint> = cps.iter().map(|c| TracePoint::new(c.step, c.evals[0].f1, c.evals[1].f1)).collect();
        let gaps: Vec<f64> = trace.iter().map(|t| t.gap).collect();
        Ok(GapSeed { key: key.to_string(), seed_index: s, smoothed_gap: smooth_trailing(&gaps, window), trace })
    })?;
    let seeds: Vec<GapSeed> = seeds.into_iter().map(|(_, g)| g).collect();
    let n = seeds.len() as f64;
    let mean_trace: Vec<TracePoint> = (0..seeds[0].trace.len())
        .map(|i| {
            let sf = seeds.iter().map(|g| g.trace[i].f1_shortcut_test).sum::<f64>() / n;
            let cf = seeds.iter().map(|g| g.trace[i].f1_challenging_test).sum::<f64>() / n;
            TracePoint::new(seeds[0].trace[i].step, sf, cf)
        })
        .collect();
    let gaps: Vec<f64> = mean_trace.iter().map(|t| t.gap).collect();
    let smoothed_gap = smooth_trailing(&gaps, window);
    let (peak_idx, peak_gap) = smoothed_gap
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, g)| if g > best.1 { (i, g) } else { best });
    Ok(GapReport {
        proportion: p,
        window,
        steps: settings.steps,
        peak_step: mean_trace[peak_idx].step,
        peak_gap,
        final_gap: *smoothed_gap.last().expect("at least one checkpoint"),
        mean_trace,
        smoothed_gap,
        seeds,
    })
}
