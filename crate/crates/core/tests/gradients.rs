//! Gradient oracles: finite differences of a smooth surrogate loss for the
//! gate logits, and a naive triple loop for the connection gradient.

mod oracles;

use oracles::{surrogate_loss, triple_loop_connection_gradient};

use boolnet_core::train::{backward, forward_hard};
use boolnet_core::{BitMatrix, NetworkModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gate_logit_gradient_matches_central_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = NetworkModel::random(4, &[8, 8], 2, 2.0, 3, 1.0, &mut rng).unwrap();
        let x: Vec<Vec<bool>> = (0..16).map(|r| (0..4).map(|c| (r >> c) & 1 == 1).collect()).collect();
        let labels: Vec<u32> = (0..16).map(|_| rng.random_range(0..2)).collect();
        let bits = BitMatrix::from_fn(16, 4, |r, c| x[r][c]);

        let fwd = forward_hard(&model, &bits).unwrap();
        let grads = backward(&model, &fwd, &labels).unwrap();
        let h = 1e-4;
        for l in 0..model.layers.len() {
            for k in 0..model.layers[l].gate_logits.len() {
                let mut plus = model.clone();
                plus.layers[l].gate_logits[k] += h;
                let mut minus = model.clone();
                minus.layers[l].gate_logits[k] -= h;
                let numeric = (surrogate_loss(&plus, &model, &x, &labels)
                    - surrogate_loss(&minus, &model, &x, &labels))
                    / (2.0 * h);
                let analytic = grads.layers[l].d_logits[k];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    rel < 1e-4,
                    "layer {l} coord {k}: analytic {analytic} numeric {numeric} rel {rel}"
                );
                worst = worst.max(rel);
            }
        }
        // the surrogate agrees with the reported loss at the reference point
        assert!((surrogate_loss(&model, &model, &x, &labels) - grads.loss).abs() < 1e-12);
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn connection_gradient_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let b = rng.random_range(1..=8);
        let inputs = rng.random_range(8..=64);
        let gates = rng.random_range(1..=8) * 2;
        let c = rng.random_range(1..=8);
        let mut model = NetworkModel::random(inputs, &[gates], 2, 3.0, c, 1.0, &mut rng).unwrap();
        for w in model.layers[0].conn_weights.iter_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        let x = BitMatrix::from_fn(b, inputs, |_, _| rng.random_bool(0.5));
        let labels: Vec<u32> = (0..b).map(|_| rng.random_range(0..2)).collect();
        let fwd = forward_hard(&model, &x).unwrap();
        let grads = backward(&model, &fwd, &labels).unwrap();
        let layer = &model.layers[0];
        let dy = &grads.layers[0].dy;
        for g in 0..gates {
            for j in 0..2 {
                for k in 0..c {
                    let i = layer.slot_candidates(g, j)[k] as usize;
                    let naive = triple_loop_connection_gradient(&x, i, &dy[(g * 2 + j) * b..][..b]);
                    let got = grads.layers[0].d_conn[layer.slot_offset(g, j) + k];
                    assert!((got - naive).abs() <= 1e-9, "{got} vs {naive}");
                }
            }
        }
    }
}
