use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{builtin_families, GenSpec};
use crate::model::ModelConfig;
use crate::paraphrase::{Method, ParaphraserSpec};
use crate::probes::{default_capacity_grid, ProbeSettings};

/// Fully resolved run configuration. Every key has a default, so an empty
/// file (or none) is a valid config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; per-trial seeds derive from it.
    pub seed: u64,
    pub generate: GenerateSection,
    pub paraphrase: ParaphraseSection,
    pub data: DataSection,
    pub model: ModelConfig,
    pub probe: ProbeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub n_entries: usize,
    pub distractor_count: usize,
    pub filler_count: usize,
    /// Template families per entity type (at most 48).
    pub families_per_type: usize,
}

impl Default for GenerateSection {
    fn default() -> Self {
        let g = GenSpec::default();
        GenerateSection {
            n_entries: g.n_entries,
            distractor_count: g.distractor_count,
            filler_count: g.filler_count,
            families_per_type: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParaphraseSection {
    pub method: Method,
    /// For the lexical method: a TOML file of `word = "replacement"` pairs.
    pub lexicon_file: Option<String>,
    pub pivot_chain: Vec<String>,
    pub endpoint: Option<String>,
    pub credential_env: Option<String>,
    pub rate_unlimited: bool,
}

impl Default for ParaphraseSection {
    fn default() -> Self {
        ParaphraseSection {
            method: Method::Template,
            lexicon_file: None,
            pivot_chain: ["en", "de", "zh", "en"].map(String::from).to_vec(),
            endpoint: None,
            credential_env: Some("TRANSLATE_API_KEY".into()),
            rate_unlimited: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Fraction of entries held out for testing.
    pub test_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub steps: usize,
    pub checkpoint_every: usize,
    pub n_seeds: usize,
    /// Shortcut proportions for `sweep`.
    pub grid: Vec<f64>,
    /// Shortcut proportion for `train` and `gap-trace`.
    pub proportion: f64,
    pub n_pairs: usize,
    /// Train-F1 threshold for the speed probe.
    pub threshold: f64,
    /// Unmasked-unit grid for the width probe; empty means H/16 … H.
    pub capacity_grid: Vec<usize>,
    /// Width-probe threshold as a fraction of the unmasked final train F1.
    pub threshold_ratio: f64,
    /// Trailing smoothing window for gap traces, in checkpoints.
    pub window: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let s = ProbeSettings::default();
        ProbeSection {
            steps: s.steps,
            checkpoint_every: s.checkpoint_every,
            n_seeds: s.n_seeds,
            grid: (0..10).map(|i| i as f64 / 10.0).collect(),
            proportion: 0.1,
            n_pairs: 1000,
            threshold: 0.8,
            capacity_grid: Vec::new(),
            threshold_ratio: 0.9,
            window: 5,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gen_spec(&self) -> GenSpec {
        GenSpec {
            n_entries: self.generate.n_entries,
            distractor_count: self.generate.distractor_count,
            filler_count: self.generate.filler_count,
            template_families: builtin_families(self.generate.families_per_type),
            seed: self.seed,
            ..GenSpec::default()
        }
    }

    pub fn paraphraser_spec(&self) -> Result<ParaphraserSpec, String> {
        let p = &self.paraphrase;
        Ok(match p.method {
            Method::Template => ParaphraserSpec::template(builtin_families(self.generate.families_per_type)),
            Method::Lexical => {
                let lexicon = match &p.lexicon_file {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| format!("paraphrase.lexicon_file: {e}"))?;
                        toml::from_str(&text).map_err(|e| format!("paraphrase.lexicon_file: {e}"))?
                    }
                    None => Default::default(),
                };
                ParaphraserSpec::lexical(lexicon)
            }
            Method::Backtranslation => {
                let endpoint = p.endpoint.as_deref().ok_or("paraphrase.endpoint is required for backtranslation")?;
                let chain: Vec<&str> = p.pivot_chain.iter().map(String::as_str).collect();
                ParaphraserSpec {
                    rate_unlimited: p.rate_unlimited,
                    ..ParaphraserSpec::backtranslation(endpoint, &chain, p.credential_env.as_deref())
                }
            }
        })
    }

    pub fn probe_settings(&self) -> ProbeSettings {
        ProbeSettings {
            model: ModelConfig { seed: self.seed, ..self.model.clone() },
            steps: self.probe.steps,
            checkpoint_every: self.probe.checkpoint_every,
            n_seeds: self.probe.n_seeds,
            seed: self.seed,
        }
    }

    pub fn capacity_grid(&self) -> Vec<usize> {
        if self.probe.capacity_grid.is_empty() {
            default_capacity_grid(self.model.hidden_dim)
        } else {
            self.probe.capacity_grid.clone()
        }
    }

    /// Checks value ranges, naming the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let p = &self.probe;
        if !(0.0..1.0).contains(&self.data.test_fraction) {
            return Err("data.test_fraction must lie in [0, 1)".into());
        }
        if p.grid.iter().any(|x| !(0.0..=1.0).contains(x)) || !(0.0..=1.0).contains(&p.proportion) {
            return Err("probe.grid and probe.proportion must lie in [0, 1]".into());
        }
        if p.steps == 0 || p.checkpoint_every == 0 || p.n_seeds == 0 || p.window == 0 {
            return Err("probe.steps, probe.checkpoint_every, probe.n_seeds and probe.window must be positive".into());
        }
        let m = ModelConfig { vocab_size: 1, ..self.model.clone() };
        m.validate().map_err(|e| format!("model: {e}"))?;
        Ok(())
    }
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("bad grid {text:?}; expected start:stop:step or a comma list");
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // Round to suppress accumulation error (0.30000000000000004).
        return Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    text.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}
