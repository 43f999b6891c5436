//! Compact span extractor trained from scratch.
//!
//! Per passage position `i`:
//!
//! ```text
//! q   = tanh(Wq · mean(question embeddings) + bq)
//! h_i = tanh(Wp · e_i + Wc · mean(e_{i-w..=i+w}) + bh)
//! u_i = tanh(Wuh · h_i + Wuq · q + Wux · (h_i ⊙ q) + bu)
//! s_i = ws · u_i[..k]      t_i = we · u_i[..k]
//! ```
//!
//! Start and end distributions are softmaxes of `s` and `t`. Units `k..H` of
//! `u` are masked: they are never computed, so parameters feeding only them
//! have no influence on the output. Gradients are written out by hand and
//! parameters are updated with AdamW.

mod checkpoint;
mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use vocab::{Vocab, UNK};

use std::ops::Range;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Instance;

/// Probability floor applied before the log in [`span_loss`].
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("instance {0} has an empty passage")]
    EmptyPassage(String),
    #[error("instance {0} has no gold span")]
    NoGoldSpan(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o failure on {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub context_window: usize,
    pub max_span_len: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 0,
            embed_dim: 32,
            hidden_dim: 64,
            context_window: 2,
            max_span_len: 15,
            learning_rate: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// Training schedules of the two full-size readers this learner stands in for.
/// They are kept for reference; nothing in-process runs them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullScalePreset {
    pub name: &'static str,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Width of the last hidden layer.
    pub hidden_dim: usize,
}

pub const FULL_SCALE_PRESETS: [FullScalePreset; 2] = [
    FullScalePreset { name: "bert-base", epochs: 3, batch_size: 6, learning_rate: 3e-5, hidden_dim: 768 },
    FullScalePreset { name: "bidaf", epochs: 15, batch_size: 30, learning_rate: 1e-3, hidden_dim: 200 },
];

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("embed_dim and hidden_dim must be at least 1");
        }
        if self.vocab_size == 0 {
            return bad("vocab_size must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) || self.weight_decay < 0.0 {
            return bad("epsilon must be positive and weight_decay non-negative");
        }
        if self.max_span_len == 0 || self.batch_size == 0 {
            return bad("max_span_len and batch_size must be at least 1");
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.vocab_size, self.embed_dim, self.hidden_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layout().len
    }
}

/// Where each tensor lives in the flat parameter vector. Matrices are
/// row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub emb: Range<usize>,
    pub wp: Range<usize>,
    pub wc: Range<usize>,
    pub wq: Range<usize>,
    pub wuh: Range<usize>,
    pub wuq: Range<usize>,
    pub wux: Range<usize>,
    pub ws: Range<usize>,
    pub we: Range<usize>,
    pub bq: Range<usize>,
    pub bh: Range<usize>,
    pub bu: Range<usize>,
    pub len: usize,
}

impl Layout {
    fn new(v: usize, e: usize, h: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let emb = take(v * e);
        let wp = take(h * e);
        let wc = take(h * e);
        let wq = take(h * e);
        let wuh = take(h * h);
        let wuq = take(h * h);
        let wux = take(h * h);
        let ws = take(h);
        let we = take(h);
        let bq = take(h);
        let bh = take(h);
        let bu = take(h);
        Layout { emb, wp, wc, wq, wuh, wuq, wux, ws, we, bq, bh, bu, len: at }
    }

    /// (name, range) for every tensor, in storage order.
    pub fn tensors(&self) -> [(&'static str, Range<usize>); 12] {
        [
            ("emb", self.emb.clone()),
            ("wp", self.wp.clone()),
            ("wc", self.wc.clone()),
            ("wq", self.wq.clone()),
            ("wuh", self.wuh.clone()),
            ("wuq", self.wuq.clone()),
            ("wux", self.wux.clone()),
            ("ws", self.ws.clone()),
            ("we", self.we.clone()),
            ("bq", self.bq.clone()),
            ("bh", self.bh.clone()),
            ("bu", self.bu.clone()),
        ]
    }
}

/// Number of final hidden units left unmasked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub unmasked_units: usize,
}

impl MaskSpec {
    pub fn keep(k: usize) -> Self {
        MaskSpec { unmasked_units: k }
    }

    /// No masking for a model of width `hidden_dim`.
    pub fn none(hidden_dim: usize) -> Self {
        MaskSpec { unmasked_units: hidden_dim }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: Vec<f64>,
    /// First and second moment accumulators, aligned with `params`.
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl ModelState {
    pub fn layout(&self) -> Layout {
        self.config.layout()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Fresh state: weights uniform in ±1/√fan_in (Wc a copy of Wq), embeddings uniform in ±1,
/// biases and moments zero. `config.vocab_size` is taken from `vocab`.
pub fn init_model(config: &ModelConfig, vocab: Vocab) -> Result<ModelState, ModelError> {
    let config = ModelConfig { vocab_size: vocab.len(), ..config.clone() };
    config.validate()?;
    let layout = config.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = vec![0.0; layout.len];
    let (e, h) = (config.embed_dim as f64, config.hidden_dim as f64);
    let mut fill = |range: Range<usize>, bound: f64| {
        for p in &mut params[range] {
            *p = rng.gen_range(-bound..bound);
        }
    };
    fill(layout.emb.clone(), 1.0);
    for r in [&layout.wp, &layout.wc, &layout.wq] {
        fill(r.clone(), 1.0 / e.sqrt());
    }
    for r in [&layout.wuh, &layout.wuq, &layout.wux, &layout.ws, &layout.we] {
        fill(r.clone(), 1.0 / h.sqrt());
    }
    // The context projection starts as a copy of the question projection, so a
    // window that repeats the question's words lines up with q from step 0.
    let wq = params[layout.wq.clone()].to_vec();
    params[layout.wc.clone()].copy_from_slice(&wq);
    let n = params.len();
    Ok(ModelState { config, vocab, params, m: vec![0.0; n], v: vec![0.0; n], step: 0 })
}

/// An instance as vocabulary ids plus passage-level gold token spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub id: String,
    pub question: Vec<u32>,
    pub passage: Vec<u32>,
    pub golds: Vec<(usize, usize)>,
}

pub fn encode(vocab: &Vocab, instance: &Instance) -> Encoded {
    Encoded {
        id: instance.id().to_string(),
        question: instance.question.tokens.iter().map(|t| vocab.id(&t.surface)).collect(),
        passage: instance.passage.tokens().map(|t| vocab.id(&t.surface)).collect(),
        golds: instance.gold_token_spans(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanDistribution {
    pub start_probs: Vec<f64>,
    pub end_probs: Vec<f64>,
}

/// Activations kept for the backward pass.
struct Cache {
    qbar: Vec<f64>,
    q: Vec<f64>,
    /// Per position, window mean of embeddings (T×E).
    cbar: Vec<f64>,
    h: Vec<f64>,
    /// Per position, unmasked units of `u` (T×k).
    u: Vec<f64>,
    dist: SpanDistribution,
}

fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// out += Wᵀ · d, for `W` with `d.len()` rows.
fn matvec_t_add(out: &mut [f64], w: &[f64], d: &[f64]) {
    let cols = out.len();
    for (row, &di) in w.chunks_exact(cols).zip(d) {
        if di != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * di;
            }
        }
    }
}

/// g += d · xᵀ, for a gradient matrix with `d.len()` rows.
fn outer_add(g: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &di) in g.chunks_exact_mut(cols).zip(d) {
        if di != 0.0 {
            for (o, a) in row.iter_mut().zip(x) {
                *o += di * a;
            }
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|x| x / z).collect()
}

fn window(i: usize, t: usize, w: usize) -> Range<usize> {
    i.saturating_sub(w)..(i + w + 1).min(t)
}

fn forward_cached(state: &ModelState, ex: &Encoded, mask: MaskSpec) -> Result<Cache, ModelError> {
    let t = ex.passage.len();
    if t == 0 {
        return Err(ModelError::EmptyPassage(ex.id.clone()));
    }
    let cfg = &state.config;
    let (e, h) = (cfg.embed_dim, cfg.hidden_dim);
    let k = mask.unmasked_units.min(h);
    let l = state.layout();
    let p = &state.params;
    let emb = |id: u32| &p[l.emb.start + id as usize * e..l.emb.start + (id as usize + 1) * e];

    let mut qbar = vec![0.0; e];
    for &id in &ex.question {
        for (a, b) in qbar.iter_mut().zip(emb(id)) {
            *a += b;
        }
    }
    let nq = ex.question.len().max(1) as f64;
    qbar.iter_mut().for_each(|x| *x /= nq);
    let mut q = p[l.bq.clone()].to_vec();
    matvec_add(&mut q, &p[l.wq.clone()], &qbar);
    q.iter_mut().for_each(|x| *x = x.tanh());

    // Question-side input to u, shared by all positions (unmasked rows only).
    let mut gq = p[l.bu.start..l.bu.start + k].to_vec();
    matvec_add(&mut gq, &p[l.wuq.start..l.wuq.start + k * h], &q);

    let mut cbar = vec![0.0; t * e];
    let mut hs = vec![0.0; t * h];
    let mut us = vec![0.0; t * k];
    let mut s = vec![0.0; t];
    let mut tl = vec![0.0; t];
    let mut hq = vec![0.0; h];
    let ws = &p[l.ws.start..l.ws.start + k];
    let we = &p[l.we.start..l.we.start + k];
    for i in 0..t {
        let win = window(i, t, cfg.context_window);
        let c = &mut cbar[i * e..(i + 1) * e];
        for j in win.clone() {
            for (a, b) in c.iter_mut().zip(emb(ex.passage[j])) {
                *a += b;
            }
        }
        let n = win.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);

        let hi = &mut hs[i * h..(i + 1) * h];
        hi.copy_from_slice(&p[l.bh.clone()]);
        matvec_add(hi, &p[l.wp.clone()], emb(ex.passage[i]));
        matvec_add(hi, &p[l.wc.clone()], c);
        hi.iter_mut().for_each(|x| *x = x.tanh());

        for ((o, a), b) in hq.iter_mut().zip(hi.iter()).zip(&q) {
            *o = a * b;
        }
        let ui = &mut us[i * k..(i + 1) * k];
        ui.copy_from_slice(&gq);
        matvec_add(ui, &p[l.wuh.start..l.wuh.start + k * h], hi);
        matvec_add(ui, &p[l.wux.start..l.wux.start + k * h], &hq);
        ui.iter_mut().for_each(|x| *x = x.tanh());
        s[i] = ui.iter().zip(ws).map(|(a, b)| a * b).sum();
        tl[i] = ui.iter().zip(we).map(|(a, b)| a * b).sum();
    }
    let dist = SpanDistribution { start_probs: softmax(&s), end_probs: softmax(&tl) };
    Ok(Cache { qbar, q, cbar, h: hs, u: us, dist })
}

pub fn forward_encoded(state: &ModelState, ex: &Encoded, mask: MaskSpec) -> Result<SpanDistribution, ModelError> {
    Ok(forward_cached(state, ex, mask)?.dist)
}

pub fn forward(state: &ModelState, instance: &Instance, mask: MaskSpec) -> Result<SpanDistribution, ModelError> {
    forward_encoded(state, &encode(&state.vocab, instance), mask)
}

/// Sum of start·end probability over gold spans.
fn gold_mass(dist: &SpanDistribution, golds: &[(usize, usize)]) -> f64 {
    golds.iter().map(|&(a, b)| dist.start_probs[a] * dist.end_probs[b]).sum()
}

/// −log Σ_golds P_start(a)·P_end(b), with the sum floored at [`PROB_FLOOR`].
pub fn span_loss(dist: &SpanDistribution, golds: &[(usize, usize)]) -> Result<f64, ModelError> {
    if golds.is_empty() {
        return Err(ModelError::NoGoldSpan(String::new()));
    }
    Ok(-gold_mass(dist, golds).max(PROB_FLOOR).ln())
}

/// Loss of one example, accumulating `scale ·` its gradient into `grad`.
fn backward(state: &ModelState, ex: &Encoded, mask: MaskSpec, grad: &mut [f64], scale: f64) -> Result<f64, ModelError> {
    if ex.golds.is_empty() {
        return Err(ModelError::NoGoldSpan(ex.id.clone()));
    }
    let c = forward_cached(state, ex, mask)?;
    let z = gold_mass(&c.dist, &ex.golds);
    if z < PROB_FLOOR {
        return Ok(-PROB_FLOOR.ln());
    }
    let loss = -z.ln();

    let cfg = &state.config;
    let (e, h) = (cfg.embed_dim, cfg.hidden_dim);
    let k = mask.unmasked_units.min(h);
    let t = ex.passage.len();
    let l = state.layout();
    let p = &state.params;

    let (ps, pe) = (&c.dist.start_probs, &c.dist.end_probs);
    let mut ds: Vec<f64> = ps.iter().map(|x| x * scale).collect();
    let mut dt: Vec<f64> = pe.iter().map(|x| x * scale).collect();
    for &(a, b) in &ex.golds {
        let share = ps[a] * pe[b] / z * scale;
        ds[a] -= share;
        dt[b] -= share;
    }

    let ws = &p[l.ws.start..l.ws.start + k];
    let we = &p[l.we.start..l.we.start + k];
    let wuh = &p[l.wuh.start..l.wuh.start + k * h];
    let wux = &p[l.wux.start..l.wux.start + k * h];
    let mut dzu_sum = vec![0.0; k];
    let mut dq = vec![0.0; h];
    let mut dzu = vec![0.0; k];
    let mut hq = vec![0.0; h];
    let mut dh = vec![0.0; h];
    let mut dhq = vec![0.0; h];
    let mut dc = vec![0.0; e];
    let emb_at = |id: u32| l.emb.start + id as usize * e;

    for i in 0..t {
        let ui = &c.u[i * k..(i + 1) * k];
        let hi = &c.h[i * h..(i + 1) * h];
        for j in 0..k {
            grad[l.ws.start + j] += ds[i] * ui[j];
            grad[l.we.start + j] += dt[i] * ui[j];
            let du = ds[i] * ws[j] + dt[i] * we[j];
            dzu[j] = du * (1.0 - ui[j] * ui[j]);
            dzu_sum[j] += dzu[j];
        }
        for ((o, a), b) in hq.iter_mut().zip(hi).zip(&c.q) {
            *o = a * b;
        }
        outer_add(&mut grad[l.wuh.start..l.wuh.start + k * h], &dzu, hi);
        outer_add(&mut grad[l.wux.start..l.wux.start + k * h], &dzu, &hq);

        dh.iter_mut().for_each(|x| *x = 0.0);
        matvec_t_add(&mut dh, wuh, &dzu);
        dhq.iter_mut().for_each(|x| *x = 0.0);
        matvec_t_add(&mut dhq, wux, &dzu);
        for j in 0..h {
            dq[j] += dhq[j] * hi[j];
            // Reuse dh as dz_h.
            dh[j] = (dh[j] + dhq[j] * c.q[j]) * (1.0 - hi[j] * hi[j]);
        }
        let dzh = &dh;
        let ei = emb_at(ex.passage[i]);
        outer_add(&mut grad[l.wp.clone()], dzh, &p[ei..ei + e]);
        outer_add(&mut grad[l.wc.clone()], dzh, &c.cbar[i * e..(i + 1) * e]);
        for (g, d) in grad[l.bh.clone()].iter_mut().zip(dzh) {
            *g += d;
        }
        matvec_t_add(&mut grad[ei..ei + e], &p[l.wp.clone()], dzh);
        dc.iter_mut().for_each(|x| *x = 0.0);
        matvec_t_add(&mut dc, &p[l.wc.clone()], dzh);
        let win = window(i, t, cfg.context_window);
        let n = win.len() as f64;
        for j in win {
            let at = emb_at(ex.passage[j]);
            for (g, d) in grad[at..at + e].iter_mut().zip(&dc) {
                *g += d / n;
            }
        }
    }

    for (g, d) in grad[l.bu.start..l.bu.start + k].iter_mut().zip(&dzu_sum) {
        *g += d;
    }
    outer_add(&mut grad[l.wuq.start..l.wuq.start + k * h], &dzu_sum, &c.q);
    matvec_t_add(&mut dq, &p[l.wuq.start..l.wuq.start + k * h], &dzu_sum);

    let dzq: Vec<f64> = dq.iter().zip(&c.q).map(|(d, q)| d * (1.0 - q * q)).collect();
    outer_add(&mut grad[l.wq.clone()], &dzq, &c.qbar);
    for (g, d) in grad[l.bq.clone()].iter_mut().zip(&dzq) {
        *g += d;
    }
    let mut dqbar = vec![0.0; e];
    matvec_t_add(&mut dqbar, &p[l.wq.clone()], &dzq);
    let nq = ex.question.len().max(1) as f64;
    for &id in &ex.question {
        let at = emb_at(id);
        for (g, d) in grad[at..at + e].iter_mut().zip(&dqbar) {
            *g += d / nq;
        }
    }
    Ok(loss)
}

/// Mean loss over `batch` and its gradient with respect to every parameter.
pub fn loss_and_grad(state: &ModelState, batch: &[Encoded], mask: MaskSpec) -> Result<(f64, Vec<f64>), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut grad = vec![0.0; state.params.len()];
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        total += backward(state, ex, mask, &mut grad, scale)?;
    }
    Ok((total * scale, grad))
}

/// Mean loss over `batch` without gradients.
pub fn batch_loss(state: &ModelState, batch: &[Encoded], mask: MaskSpec) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = 0.0;
    for ex in batch {
        let dist = forward_encoded(state, ex, mask)?;
        total += span_loss(&dist, &ex.golds).map_err(|_| ModelError::NoGoldSpan(ex.id.clone()))?;
    }
    Ok(total / batch.len() as f64)
}

/// One AdamW update (bias-corrected moments, decoupled weight decay).
pub fn adamw_update(state: &mut ModelState, grad: &[f64]) {
    state.step += 1;
    let cfg = &state.config;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..state.params.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let mhat = state.m[i] / c1;
        let vhat = state.v[i] / c2;
        state.params[i] -= cfg.learning_rate * (mhat / (vhat.sqrt() + cfg.epsilon) + cfg.weight_decay * state.params[i]);
    }
}

/// One optimizer step on pre-encoded examples; returns the mean batch loss.
pub fn train_step_encoded(state: &mut ModelState, batch: &[Encoded], mask: MaskSpec) -> Result<f64, ModelError> {
    let (loss, grad) = loss_and_grad(state, batch, mask)?;
    adamw_update(state, &grad);
    Ok(loss)
}

/// One optimizer step on `batch`; returns the mean batch loss.
pub fn train_step(state: &mut ModelState, batch: &[Instance], mask: MaskSpec) -> Result<f64, ModelError> {
    let encoded: Vec<Encoded> = batch.iter().map(|i| encode(&state.vocab, i)).collect();
    train_step_encoded(state, &encoded, mask)
}

/// Best span `(a, b)` with `a ≤ b < a + max_len`; ties go to the smaller
/// start, then the shorter span.
pub fn best_span(dist: &SpanDistribution, max_len: usize) -> (usize, usize) {
    let t = dist.start_probs.len();
    let mut best = (0, 0);
    let mut best_p = f64::NEG_INFINITY;
    for a in 0..t {
        for b in a..(a + max_len).min(t) {
            let p = dist.start_probs[a] * dist.end_probs[b];
            if p > best_p {
                best_p = p;
                best = (a, b);
            }
        }
    }
    best
}

/// Decoded answer text, sliced from the passage.
pub fn predict(state: &ModelState, instance: &Instance, mask: MaskSpec) -> Result<String, ModelError> {
    let dist = forward(state, instance, mask)?;
    let (a, b) = best_span(&dist, state.config.max_span_len);
    let tokens: Vec<_> = instance.passage.tokens().collect();
    Ok(instance.passage.text[tokens[a].char_span.start..tokens[b].char_span.end].to_string())
}

/// Epoch-wise shuffled mini-batches over `n` examples.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        BatchSampler { order, cursor: 0, batch_size: batch_size.max(1), rng }
    }

    /// Indices of the next batch; reshuffles when the epoch runs out.
    pub fn next_batch(&mut self) -> Vec<usize> {
        let n = self.order.len();
        let mut out = Vec::with_capacity(self.batch_size.min(n));
        while out.len() < self.batch_size.min(n) {
            if self.cursor == n {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests;
