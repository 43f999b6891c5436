use proptest::prelude::*;

use super::checkpoint::{from_bytes, to_bytes};
use super::*;
use crate::corpus::{generate_corpus, GenSpec};

fn data(n: usize, seed: u64) -> Vec<Instance> {
    generate_corpus(&GenSpec { n_entries: n, seed, distractor_count: 1, filler_count: 1, ..GenSpec::default() }).unwrap()
}

fn small_state(instances: &[Instance], e: usize, h: usize, seed: u64) -> ModelState {
    let cfg = ModelConfig { embed_dim: e, hidden_dim: h, seed, ..ModelConfig::default() };
    init_model(&cfg, Vocab::build(instances, 1)).unwrap()
}

fn dist(start: &[f64], end: &[f64]) -> SpanDistribution {
    SpanDistribution { start_probs: start.to_vec(), end_probs: end.to_vec() }
}

#[test]
fn param_count_matches_closed_form() {
    let cfg = ModelConfig { vocab_size: 100, embed_dim: 8, hidden_dim: 16, ..ModelConfig::default() };
    let (v, e, h) = (100, 8, 16);
    assert_eq!(cfg.param_count(), v * e + 3 * h * e + 3 * h * h + 2 * h + 3 * h);
}

#[test]
fn invalid_configs_are_rejected() {
    let vocab = Vocab::from_tokens(vec!["a".into()], 1);
    for cfg in [
        ModelConfig { hidden_dim: 0, ..ModelConfig::default() },
        ModelConfig { embed_dim: 0, ..ModelConfig::default() },
        ModelConfig { learning_rate: 0.0, ..ModelConfig::default() },
        ModelConfig { beta1: 1.0, ..ModelConfig::default() },
        ModelConfig { beta2: -0.1, ..ModelConfig::default() },
    ] {
        assert!(matches!(init_model(&cfg, vocab.clone()), Err(ModelError::InvalidConfig(_))));
    }
}

#[test]
fn init_is_deterministic() {
    let d = data(5, 1);
    assert_eq!(small_state(&d, 8, 16, 3), small_state(&d, 8, 16, 3));
    assert_ne!(small_state(&d, 8, 16, 3).params, small_state(&d, 8, 16, 4).params);
}

#[test]
fn span_loss_examples() {
    assert_eq!(span_loss(&dist(&[1.0, 0.0], &[0.0, 1.0]), &[(0, 1)]).unwrap(), 0.0);
    let d = dist(&[0.5, 0.5], &[0.5, 0.5]);
    let loss = span_loss(&d, &[(0, 0), (1, 1)]).unwrap();
    assert!((loss - 0.5f64.ln().abs()).abs() < 1e-12);
    assert!(matches!(span_loss(&d, &[]), Err(ModelError::NoGoldSpan(_))));
    let floor = span_loss(&dist(&[1.0, 0.0], &[1.0, 0.0]), &[(1, 1)]).unwrap();
    assert!((floor - 1e12f64.ln()).abs() < 1e-9);
}

#[test]
fn uniform_prediction_is_first_token() {
    let d = dist(&[0.25; 4], &[0.25; 4]);
    assert_eq!(best_span(&d, 15), (0, 0));
}

#[test]
fn masks_behave_at_the_extremes() {
    let d = data(4, 2);
    let s = small_state(&d, 8, 12, 5);
    for inst in &d {
        let full = forward(&s, inst, MaskSpec::none(12)).unwrap();
        assert_eq!(full, forward(&s, inst, MaskSpec::keep(12)).unwrap());
        let zero = forward(&s, inst, MaskSpec::keep(0)).unwrap();
        let t = zero.start_probs.len() as f64;
        for p in zero.start_probs.iter().chain(&zero.end_probs) {
            assert!((p - 1.0 / t).abs() < 1e-15);
        }
        for probs in [&full.start_probs, &full.end_probs] {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(probs.iter().all(|&p| p >= 0.0));
        }
    }
}

#[test]
fn masked_units_have_no_influence() {
    let d = data(3, 3);
    let mut s = small_state(&d, 6, 10, 7);
    let k = 4;
    let before: Vec<_> = d.iter().map(|i| forward(&s, i, MaskSpec::keep(k)).unwrap()).collect();
    let l = s.layout();
    let h = 10;
    // Rows k.. of the u-layer and entries k.. of the output vectors feed only masked units.
    for r in [&l.wuh, &l.wuq, &l.wux] {
        for x in &mut s.params[r.start + k * h..r.end] {
            *x += 3.7;
        }
    }
    for r in [&l.ws, &l.we, &l.bu] {
        for x in &mut s.params[r.start + k..r.end] {
            *x -= 1.3;
        }
    }
    let after: Vec<_> = d.iter().map(|i| forward(&s, i, MaskSpec::keep(k)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn empty_passage_is_an_error() {
    let mut inst = data(1, 4).remove(0);
    let s = small_state(std::slice::from_ref(&inst), 4, 4, 0);
    inst.passage = crate::corpus::Passage::from_drafts("p", &[]);
    assert!(matches!(forward(&s, &inst, MaskSpec::none(4)), Err(ModelError::EmptyPassage(_))));
}

/// Central finite differences of the forward-only loss, compared tensor by
/// tensor and element by element with the analytic gradient.
fn gradient_check(seed: u64, e: usize, h: usize, k: usize) {
    let d = data(3, 100 + seed);
    let state = small_state(&d, e, h, seed);
    let batch: Vec<Encoded> = d.iter().map(|i| encode(&state.vocab, i)).collect();
    let mask = MaskSpec::keep(k);
    let (_, analytic) = loss_and_grad(&state, &batch, mask).unwrap();
    let step = 1e-4;
    let mut probe = state.clone();
    for (name, range) in state.layout().tensors() {
        let (mut diff2, mut norm2) = (0.0f64, 0.0f64);
        for i in range {
            let orig = probe.params[i];
            probe.params[i] = orig + step;
            let up = batch_loss(&probe, &batch, mask).unwrap();
            probe.params[i] = orig - step;
            let down = batch_loss(&probe, &batch, mask).unwrap();
            probe.params[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "seed {seed} {name}[{i}]: analytic {a} numeric {numeric}");
            diff2 += (a - numeric).powi(2);
            norm2 += (a.abs() + numeric.abs()).powi(2);
        }
        if norm2 > 0.0 {
            assert!((diff2 / norm2).sqrt() < 1e-4, "seed {seed} tensor {name}");
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..5 {
        gradient_check(seed, 4, 6, 6);
    }
    gradient_check(9, 4, 6, 3);
}

fn train(state: &mut ModelState, d: &[Instance], steps: usize) -> Vec<f64> {
    let enc: Vec<Encoded> = d.iter().map(|i| encode(&state.vocab, i)).collect();
    let mut sampler = BatchSampler::new(enc.len(), state.config.batch_size, state.config.seed);
    let mask = MaskSpec::none(state.config.hidden_dim);
    (0..steps)
        .map(|_| {
            let batch: Vec<Encoded> = sampler.next_batch().into_iter().map(|i| enc[i].clone()).collect();
            train_step_encoded(state, &batch, mask).unwrap()
        })
        .collect()
}

#[test]
fn overfits_ten_instances() {
    let d = data(10, 5);
    let mut losses_at_end = Vec::new();
    for seed in 0..5 {
        let cfg = ModelConfig { seed, ..ModelConfig::default() };
        let mut s = init_model(&cfg, Vocab::build(&d, 1)).unwrap();
        let enc: Vec<Encoded> = d.iter().map(|i| encode(&s.vocab, i)).collect();
        let start = batch_loss(&s, &enc, MaskSpec::none(cfg.hidden_dim)).unwrap();
        train(&mut s, &d, 200);
        assert!(s.is_finite());
        let end = batch_loss(&s, &enc, MaskSpec::none(cfg.hidden_dim)).unwrap();
        assert!(end < start, "seed {seed}: {start} -> {end}");
        losses_at_end.push(end);
        if seed == 0 {
            assert!(end < 0.1, "overfit loss {end}");
            for inst in &d {
                assert_eq!(predict(&s, inst, MaskSpec::none(cfg.hidden_dim)).unwrap(), inst.answer_text());
            }
        }
    }
    losses_at_end.sort_by(f64::total_cmp);
    assert!(losses_at_end[2] < 0.1, "median final loss {:?}", losses_at_end);
}

#[test]
fn training_is_bitwise_deterministic() {
    let d = data(12, 6);
    let run = || {
        let mut s = small_state(&d, 8, 16, 11);
        let losses = train(&mut s, &d, 20);
        (s, losses)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(a, b);
    assert_eq!(la.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), lb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.step, 20);
}

#[test]
fn checkpoint_round_trips() {
    let d = data(6, 7);
    let mut s = small_state(&d, 4, 6, 2);
    train(&mut s, &d, 3);
    let bytes = to_bytes(&s);
    assert_eq!(from_bytes(&bytes).unwrap(), s);
    assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[6] = 99;
    assert!(matches!(from_bytes(&bad), Err(ModelError::Checkpoint(_))));
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(&s, dir.path().join("m.ckpt")).unwrap();
    assert_eq!(load_checkpoint(dir.path().join("m.ckpt")).unwrap(), s);
}

#[test]
fn vocab_round_trips_and_maps_unknowns() {
    let d = data(5, 8);
    let v = Vocab::build(&d, 2);
    assert_eq!(v.id("zzzz-not-a-token"), 0);
    assert_eq!(v.token(0), UNK);
    let back = Vocab::from_text(&v.to_text()).unwrap();
    assert_eq!(back, v);
    let json = serde_json::to_string(&v).unwrap();
    let again: Vocab = serde_json::from_str(&json).unwrap();
    assert_eq!(again.id(v.token(1)), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn best_span_respects_max_len(probs in prop::collection::vec(0.0f64..1.0, 1..40), max_len in 1usize..20) {
        let z: f64 = probs.iter().sum::<f64>() + 1e-9;
        let p: Vec<f64> = probs.iter().map(|x| x / z).collect();
        let mut rev = p.clone();
        rev.reverse();
        let (a, b) = best_span(&dist(&p, &rev), max_len);
        prop_assert!(a <= b && b < a + max_len && b < p.len());
    }

    #[test]
    fn forward_is_normalised(seed in 0u64..200, k in 0usize..9) {
        let d = data(1, seed);
        let s = small_state(&d, 4, 8, seed);
        let out = forward(&s, &d[0], MaskSpec::keep(k)).unwrap();
        for probs in [&out.start_probs, &out.end_probs] {
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            prop_assert!(probs.iter().all(|&x| x >= 0.0));
        }
    }
}
