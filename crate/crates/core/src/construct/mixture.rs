use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConstructError;
use crate::corpus::{Entry, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Fraction of entries contributing their shortcut version.
    pub proportion: f64,
    pub seed: u64,
    pub n_entries: usize,
}

impl MixtureSpec {
    /// The default sweep grid 0.0, 0.1, ..., 0.9.
    pub fn grid() -> Vec<f64> {
        (0..10).map(|i| i as f64 / 10.0).collect()
    }
}

/// round-half-up(p · n). The small epsilon absorbs binary representation
/// error so that e.g. 0.5 · 5 rounds to 3.
pub fn shortcut_count(proportion: f64, n: usize) -> usize {
    let p = proportion.clamp(0.0, 1.0);
    ((p * n as f64 + 0.5 + 1e-9).floor() as usize).min(n)
}

/// One instance per entry: `shortcut_count(p, N)` entries chosen uniformly
/// without replacement give their shortcut version, the rest their
/// challenging version, all in a seeded random order.
pub fn sample_mixture(entries: &[Entry], spec: &MixtureSpec) -> Result<Vec<Instance>, ConstructError> {
    if spec.n_entries != entries.len() {
        return Err(ConstructError::MixtureSize { expected: spec.n_entries, actual: entries.len() });
    }
    let n = entries.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut shortcut = vec![false; n];
    for i in index::sample(&mut rng, n, shortcut_count(spec.proportion, n)) {
        shortcut[i] = true;
    }
    let mut out: Vec<Instance> = entries
        .iter()
        .zip(&shortcut)
        .map(|(e, &s)| if s { e.shortcut.clone() } else { e.challenging.clone() })
        .collect();
    out.shuffle(&mut rng);
    Ok(out)
}
