//! Command-line front end.
//!
//! Every command writes its outputs plus a `manifest.json` under `--out`.
//! Manifests echo the resolved config and the SHA-256 of every input and
//! output; the wall-clock time sits alone under the `timestamp` key so that
//! two identical runs differ only there.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 runtime error.

mod config;

pub use config::{parse_grid, RunConfig};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::construct::{construct_all, read_entries, sample_mixture, split_entries, write_entries, MixtureSpec, Recipe};
use crate::corpus::{export_dataset, generate_corpus, load_squad, CorpusError, EntityPools, Entry, Instance, Version};
use crate::model::{init_model, save_checkpoint, BatchSampler, Encoded, MaskSpec, ModelConfig};
use crate::paraphrase::{ParaphraseError, Paraphraser};
use crate::probes::{
    dataset_hash, entry_vocab, evaluate_prepared, gap_trace, learning_speed_probe, parameter_size_probe, prepare,
    proportion_sweep, trial_seed, Condition,
};

/// Errors that carry their own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {key}: {detail}")]
    Config { key: String, detail: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
}

#[derive(Parser, Debug)]
#[command(name = "shortcut-lab", version, about = "Shortcut/challenging QA datasets and training-dynamics probes")]
struct Cli {
    /// TOML config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the fully resolved config and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Io {
    /// Input file (corpus JSON, SQuAD JSON or paired-entry JSONL, per command).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[command(flatten)]
    io: Io,
    /// Recipe used when entries are built on the fly (no `--in`): qwm, spm or qwm-subs.
    #[arg(long, default_value = "qwm")]
    recipe: Recipe,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic corpus.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build paired entries from a corpus or SQuAD file.
    Construct {
        #[command(flatten)]
        io: Io,
        /// qwm, spm or qwm-subs.
        #[arg(long)]
        recipe: Recipe,
    },
    /// Train one model on a mixture and evaluate it on both test versions.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        proportion: Option<f64>,
    },
    /// Proportion sweep.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// `start:stop:step` or a comma list.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Learning-speed probe.
    ProbeSpeed {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Hidden-width (capacity) probe.
    ProbeWidth {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Gap trace through training.
    GapTrace {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        proportion: Option<f64>,
    },
    /// Write each version of a paired-entry file as SQuAD JSON.
    Export {
        #[command(flatten)]
        io: Io,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return match c {
                CliError::Config { .. } | CliError::Usage(_) => 1,
                CliError::Data(_) => 2,
            };
        }
        if cause.is::<CorpusError>() || cause.is::<ParaphraseError>() || cause.is::<crate::construct::ConstructError>() {
            return 2;
        }
    }
    3
}

fn config_err(key: &str, detail: impl Into<String>) -> anyhow::Error {
    CliError::Config { key: key.into(), detail: detail.into() }.into()
}

fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|d| config_err("<file>", d))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let data = match &cli.command {
        Command::Train { data, proportion } | Command::GapTrace { data, proportion } => {
            if let Some(p) = proportion {
                cfg.probe.proportion = *p;
            }
            Some(data)
        }
        Command::Sweep { data, grid } => {
            if let Some(g) = grid {
                cfg.probe.grid = parse_grid(g).map_err(|d| config_err("--grid", d))?;
            }
            Some(data)
        }
        Command::ProbeSpeed { data } | Command::ProbeWidth { data } => Some(data),
        Command::Generate { n: Some(n), .. } => {
            cfg.generate.n_entries = *n;
            None
        }
        _ => None,
    };
    if let Some(d) = data {
        if let Some(s) = d.steps {
            cfg.probe.steps = s;
        }
        if let Some(s) = d.seeds {
            cfg.probe.n_seeds = s;
        }
    }
    cfg.validate().map_err(|d| config_err("config", d))?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()).into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().context("building the worker pool")?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Generate { out, .. } => cmd_generate(cfg, out),
        Command::Construct { io, recipe } => cmd_construct(cfg, io, *recipe),
        Command::Train { data, .. } => cmd_train(cfg, data),
        Command::Sweep { data, .. } => cmd_sweep(cfg, data),
        Command::ProbeSpeed { data } => cmd_speed(cfg, data),
        Command::ProbeWidth { data } => cmd_width(cfg, data),
        Command::GapTrace { data, .. } => cmd_gap(cfg, data),
        Command::Export { io } => cmd_export(io),
    }
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(dataset_hash(&bytes))
}

/// Manifest writer shared by every command.
struct Manifest {
    command: &'static str,
    out: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    extra: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    fn new(command: &'static str, out: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Manifest {
            command,
            out: out.to_path_buf(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            extra: serde_json::Map::new(),
        })
    }

    fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        // An unreadable input is a data problem, not a runtime failure.
        let bytes = fs::read(path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), dataset_hash(&bytes));
        Ok(())
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.extra.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    fn write(self, cfg: &RunConfig) -> anyhow::Result<()> {
        let mut outputs = BTreeMap::new();
        for p in &self.outputs {
            let name = p.strip_prefix(&self.out).unwrap_or(p).display().to_string();
            outputs.insert(name, sha256_file(p)?);
        }
        let manifest = json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "inputs": self.inputs,
            "outputs": outputs,
            "details": self.extra,
            "timestamp": { "written_at": chrono::Utc::now().to_rfc3339() },
        });
        let path = self.out.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let mut m = Manifest::new("generate", out)?;
    let corpus = generate_corpus(&cfg.gen_spec())?;
    let path = out.join("corpus.json");
    write_json(&path, &corpus)?;
    m.outputs.push(path);
    m.set("n_instances", corpus.len());
    m.write(cfg)
}

/// A generated corpus (JSON array of instances) or a SQuAD file.
fn load_instances(path: &Path) -> anyhow::Result<Vec<Instance>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: not JSON: {e}", path.display())))?;
    if value.get("data").is_some() {
        return Ok(load_squad(path)?);
    }
    serde_json::from_value(value).map_err(|e| CliError::Data(format!("{}: {e}", path.display())).into())
}

fn paraphraser(cfg: &RunConfig) -> anyhow::Result<Paraphraser> {
    let spec = cfg.paraphraser_spec().map_err(|d| config_err("paraphrase", d))?;
    Ok(Paraphraser::new(&spec)?)
}

fn build_entries(cfg: &RunConfig, instances: &[Instance], recipe: Recipe) -> anyhow::Result<(Vec<Entry>, BTreeMap<String, usize>)> {
    let p = paraphraser(cfg)?;
    Ok(construct_all(instances, recipe, &p, &EntityPools::embedded(), cfg.seed)?)
}

fn cmd_construct(cfg: &RunConfig, io: &Io, recipe: Recipe) -> anyhow::Result<()> {
    let input = io.input.as_ref().ok_or_else(|| CliError::Usage("construct needs --in".into()))?;
    let mut m = Manifest::new("construct", &io.out)?;
    m.input(input)?;
    let instances = load_instances(input)?;
    let (entries, histogram) = build_entries(cfg, &instances, recipe)?;
    let path = io.out.join("entries.jsonl");
    write_entries(&path, &entries)?;
    let hist_path = io.out.join("rejections.json");
    write_json(&hist_path, &histogram)?;
    for (reason, n) in &histogram {
        eprintln!("{reason}: {n}");
    }
    m.outputs.extend([path, hist_path]);
    m.set("recipe", recipe);
    m.set("n_input", instances.len());
    m.set("n_entries", entries.len());
    m.set("outcomes", &histogram);
    m.write(cfg)
}

/// Entries from `--in`, or generated and constructed from the config.
fn load_entries(cfg: &RunConfig, data: &DataArgs, m: &mut Manifest) -> anyhow::Result<Vec<Entry>> {
    let entries = match &data.io.input {
        Some(path) => {
            m.input(path)?;
            read_entries(path)?
        }
        None => {
            let corpus = generate_corpus(&cfg.gen_spec())?;
            let (entries, hist) = build_entries(cfg, &corpus, data.recipe)?;
            m.set("recipe", data.recipe);
            m.set("construction_outcomes", hist);
            entries
        }
    };
    if entries.is_empty() {
        return Err(CliError::Data("no entries".into()).into());
    }
    m.set("entries_hash", dataset_hash(&entries));
    Ok(entries)
}

fn split(cfg: &RunConfig, entries: &[Entry], m: &mut Manifest) -> anyhow::Result<(Vec<Entry>, Vec<Entry>)> {
    let (train, test) = split_entries(entries, cfg.data.test_fraction, trial_seed(cfg.seed, "split"));
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data(format!("split of {} entries leaves an empty side", entries.len())).into());
    }
    m.set("n_train_entries", train.len());
    m.set("n_test_entries", test.len());
    m.set("train_hash", dataset_hash(&train));
    m.set("test_hash", dataset_hash(&test));
    Ok((train, test))
}

/// One manifest per trial under `runs/`.
fn write_run_manifests<T: Serialize>(out: &Path, runs: &[(String, T)]) -> anyhow::Result<Vec<PathBuf>> {
    let dir = out.join("runs");
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    for (key, run) in runs {
        let name: String = key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
        let path = dir.join(format!("{name}.json"));
        write_json(&path, &json!({ "key": key, "run": run }))?;
        files.push(path);
    }
    Ok(files)
}

fn cmd_train(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<()> {
    let mut m = Manifest::new("train", &data.io.out)?;
    let entries = load_entries(cfg, data, &mut m)?;
    let (train, test) = split(cfg, &entries, &mut m)?;
    let settings = cfg.probe_settings();
    let vocab = entry_vocab(train.iter().chain(&test));
    let mix_seed = trial_seed(cfg.seed, "train/mixture");
    let mix = sample_mixture(&train, &MixtureSpec { proportion: cfg.probe.proportion, seed: mix_seed, n_entries: train.len() })?;
    let encoded: Vec<Encoded> = mix.iter().map(|i| crate::model::encode(&vocab, i)).collect();
    let model_cfg = ModelConfig { seed: trial_seed(cfg.seed, "init/seed=0"), ..settings.model.clone() };
    let mut state = init_model(&model_cfg, vocab.clone())?;
    let mask = MaskSpec::none(model_cfg.hidden_dim);
    let mut sampler = BatchSampler::new(encoded.len(), model_cfg.batch_size, mix_seed);
    let mut losses = Vec::new();
    for step in 1..=settings.steps {
        let batch: Vec<Encoded> = sampler.next_batch().into_iter().map(|i| encoded[i].clone()).collect();
        let loss = crate::model::train_step_encoded(&mut state, &batch, mask)?;
        if step % settings.checkpoint_every == 0 || step == settings.steps {
            losses.push((step, loss));
        }
    }
    let versions = |v: Version| test.iter().map(|e| e.version(v).clone()).collect::<Vec<_>>();
    let chall = evaluate_prepared(&state, &prepare(&vocab, &versions(Version::Challenging)), mask)?;
    let short = evaluate_prepared(&state, &prepare(&vocab, &versions(Version::Shortcut)), mask)?;
    let out = &data.io.out;
    let files = [out.join("model.ckpt"), out.join("vocab.txt"), out.join("eval.json")];
    save_checkpoint(&state, &files[0])?;
    vocab.save(&files[1])?;
    write_json(&files[2], &json!({ "challenging": chall, "shortcut": short, "loss_curve": losses }))?;
    println!("challenging F1 {:.4}  shortcut F1 {:.4}", chall.f1, short.f1);
    m.outputs.extend(files);
    m.set("n_shortcut_in_train", mix.iter().filter(|i| i.version == Version::Shortcut).count());
    m.write(cfg)
}

fn cmd_sweep(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<()> {
    let mut m = Manifest::new("sweep", &data.io.out)?;
    let entries = load_entries(cfg, data, &mut m)?;
    let (train, test) = split(cfg, &entries, &mut m)?;
    let report = proportion_sweep(&train, &test, &cfg.probe.grid, &cfg.probe_settings())?;
    for r in &report.rows {
        println!(
            "p={:.2}  challenging F1 {:.4} ± {:.4}  shortcut F1 {:.4} ± {:.4}",
            r.proportion, r.challenging_f1_mean, r.challenging_f1_std, r.shortcut_f1_mean, r.shortcut_f1_std
        );
    }
    m.outputs.extend(report.write(&data.io.out)?);
    let runs: Vec<_> = report.runs.iter().map(|r| (r.key.clone(), r)).collect();
    m.outputs.extend(write_run_manifests(&data.io.out, &runs)?);
    m.set("n_runs", report.runs.len());
    m.write(cfg)
}

fn cmd_speed(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<()> {
    let mut m = Manifest::new("probe-speed", &data.io.out)?;
    let entries = load_entries(cfg, data, &mut m)?;
    let n_pairs = cfg.probe.n_pairs.min(entries.len());
    let report = learning_speed_probe(&entries, n_pairs, cfg.probe.threshold, &cfg.probe_settings())?;
    for c in Condition::ALL {
        let med = report.median_steps(c).map(|s| format!("{s:.1}")).unwrap_or_else(|| "not reached".into());
        println!("{c}: median steps to {:.2} train F1: {med}", cfg.probe.threshold);
    }
    m.outputs.extend(report.write(&data.io.out)?);
    let runs: Vec<_> = report.runs.iter().map(|r| (r.key.clone(), r)).collect();
    m.outputs.extend(write_run_manifests(&data.io.out, &runs)?);
    m.set("n_pairs", n_pairs);
    m.write(cfg)
}

fn cmd_width(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<()> {
    let mut m = Manifest::new("probe-width", &data.io.out)?;
    let entries = load_entries(cfg, data, &mut m)?;
    let n_pairs = cfg.probe.n_pairs.min(entries.len());
    let report =
        parameter_size_probe(&entries, n_pairs, &cfg.capacity_grid(), cfg.probe.threshold_ratio, &cfg.probe_settings())?;
    for mk in &report.min_k {
        let k = mk.min_k.map(|k| k.to_string()).unwrap_or_else(|| "not reached".into());
        println!("{} seed {}: min k {k}", mk.condition, mk.seed_index);
    }
    m.outputs.extend(report.write(&data.io.out)?);
    let runs: Vec<_> = report.runs.iter().map(|r| (r.key.clone(), r)).collect();
    m.outputs.extend(write_run_manifests(&data.io.out, &runs)?);
    m.set("n_pairs", n_pairs);
    m.write(cfg)
}

fn cmd_gap(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<()> {
    let mut m = Manifest::new("gap-trace", &data.io.out)?;
    let entries = load_entries(cfg, data, &mut m)?;
    let (train, test) = split(cfg, &entries, &mut m)?;
    let report = gap_trace(&train, &test, cfg.probe.proportion, cfg.probe.window, &cfg.probe_settings())?;
    println!(
        "p={:.2}: peak smoothed gap {:.4} at step {}, final {:.4}",
        report.proportion, report.peak_gap, report.peak_step, report.final_gap
    );
    m.outputs.extend(report.write(&data.io.out)?);
    let runs: Vec<_> = report.seeds.iter().map(|s| (s.key.clone(), s)).collect();
    m.outputs.extend(write_run_manifests(&data.io.out, &runs)?);
    m.write(cfg)
}

fn cmd_export(io: &Io) -> anyhow::Result<()> {
    let input = io.input.as_ref().ok_or_else(|| CliError::Usage("export needs --in".into()))?;
    let cfg = RunConfig::default();
    let mut m = Manifest::new("export", &io.out)?;
    m.input(input)?;
    let entries = read_entries(input)?;
    for v in [Version::Shortcut, Version::Challenging] {
        let instances: Vec<Instance> = entries.iter().map(|e| e.version(v).clone()).collect();
        let path = io.out.join(format!("{v}.json"));
        export_dataset(&instances, &path)?;
        m.outputs.push(path);
    }
    m.write(&cfg).map_err(|e| anyhow!(e))
}
