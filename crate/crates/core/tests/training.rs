use boolnet_core::data::{synth_boolean_task, Split, SynthKind};
use boolnet_core::train::{backward, evaluate, forward_hard, NoopObserver, PhaseKind, TrainData, Trainer};
use boolnet_core::{harden, BitMatrix, InterconnectMode, NetworkModel, SamplingMode, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Reads the parameters directly, one sample at a time.
fn naive_logits(model: &NetworkModel, x: &[bool]) -> Vec<f64> {
    let mut prev = x.to_vec();
    for layer in &model.layers {
        let c = layer.candidates_per_slot;
        prev = (0..layer.gates)
            .map(|g| {
                let code = first_max(&layer.gate_logits[g * 16..(g + 1) * 16]);
                let pick = |j: usize| {
                    let off = (g * 2 + j) * c;
                    prev[layer.candidates[off + first_max(&layer.conn_weights[off..off + c])] as usize]
                };
                (code >> (2 * pick(0) as usize + pick(1) as usize)) & 1 == 1
            })
            .collect();
    }
    let per = prev.len() / model.num_classes;
    (0..model.num_classes)
        .map(|k| prev[k * per..(k + 1) * per].iter().filter(|&&b| b).count() as f64 / model.group_tau)
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng) -> NetworkModel {
    let inputs = rng.random_range(2..40);
    let classes = rng.random_range(1..5);
    let mut widths: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..30)).collect();
    *widths.last_mut().unwrap() = classes * rng.random_range(1..6);
    let c = rng.random_range(1..8);
    let mut m = NetworkModel::random(inputs, &widths, classes, rng.random_range(0.5..20.0), c, 1.0, rng).unwrap();
    for l in &mut m.layers {
        // coarse weights, so ties between candidates happen
        for w in &mut l.conn_weights {
            *w = rng.random_range(-2i32..3) as f64 / 2.0;
        }
        if rng.random_bool(0.3) {
            l.gate_logits.iter_mut().for_each(|v| *v = v.round());
        }
    }
    m
}

fn random_bits(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> BitMatrix {
    BitMatrix::from_fn(rows, cols, |_, _| rng.random_bool(0.5))
}

#[test]
fn forward_matches_parameter_interpreter_and_hardened_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let m = random_model(&mut rng);
        let n = rng.random_range(1..200);
        let x = random_bits(&mut rng, n, m.input_width);
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..m.num_classes as u32)).collect();
        let fwd = forward_hard(&m, &x).unwrap();
        let circuit = harden(&m).unwrap();
        let circuit_logits = circuit.logits(&x).unwrap();
        for r in 0..n {
            let bits: Vec<bool> = (0..m.input_width).map(|i| x.get(r, i)).collect();
            let want = naive_logits(&m, &bits);
            assert_eq!(fwd.logits.row(r), want.as_slice());
            assert_eq!(circuit_logits.row(r), want.as_slice());
        }
        assert_eq!(
            evaluate(&m, &x, &labels).unwrap().0,
            circuit.accuracy(&x, &labels).unwrap()
        );
        assert_eq!(harden(&m).unwrap(), circuit);
    }
}

#[test]
fn small_perturbations_below_the_gap_keep_the_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let m = random_model(&mut rng);
        let reference = harden(&m).unwrap();
        let mut p = m.clone();
        for layer in &mut p.layers {
            let c = layer.candidates_per_slot;
            for chunk in layer.gate_logits.chunks_mut(16).chain(layer.conn_weights.chunks_mut(c)) {
                let best = first_max(chunk);
                let max = chunk[best];
                for (i, v) in chunk.iter_mut().enumerate() {
                    if i != best && *v < max {
                        let gap = max - *v;
                        *v += rng.random_range(-1.0..1.0) * gap * 0.99;
                    }
                }
            }
        }
        assert_eq!(harden(&p).unwrap(), reference);
    }
}

#[test]
fn split_batches_evaluate_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let m = random_model(&mut rng);
        let circuit = harden(&m).unwrap();
        let n = rng.random_range(2..300);
        let x = random_bits(&mut rng, n, m.input_width);
        let whole = circuit.eval(&x).unwrap();
        let whole_fwd = forward_hard(&m, &x).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let cut = rng.random_range(1..n);
        for part in [&order[..cut], &order[cut..]] {
            let sub = x.select_rows(part);
            let out = circuit.eval(&sub).unwrap();
            let fwd = forward_hard(&m, &sub).unwrap();
            for (k, &r) in part.iter().enumerate() {
                assert_eq!(out.row(k), whole.row(r));
                assert_eq!(fwd.logits.row(k), whole_fwd.logits.row(r));
            }
        }
    }
}

#[test]
fn batch_gradient_is_the_weighted_mean_of_its_parts() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let m = random_model(&mut rng);
        let n = rng.random_range(2..150);
        let x = random_bits(&mut rng, n, m.input_width);
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..m.num_classes as u32)).collect();
        let cut = rng.random_range(1..n);
        let full = backward(&m, &forward_hard(&m, &x).unwrap(), &labels).unwrap();
        let part = |lo: usize, hi: usize| {
            let rows: Vec<usize> = (lo..hi).collect();
            backward(&m, &forward_hard(&m, &x.select_rows(&rows)).unwrap(), &labels[lo..hi]).unwrap()
        };
        let (a, b) = (part(0, cut), part(cut, n));
        let (wa, wb) = (cut as f64 / n as f64, (n - cut) as f64 / n as f64);
        assert!((full.loss - (wa * a.loss + wb * b.loss)).abs() < 1e-12);
        for l in 0..m.layers.len() {
            for (which, f, ga, gb) in [
                (
                    "logits",
                    &full.layers[l].d_logits,
                    &a.layers[l].d_logits,
                    &b.layers[l].d_logits,
                ),
                ("conn", &full.layers[l].d_conn, &a.layers[l].d_conn, &b.layers[l].d_conn),
            ] {
                for k in 0..f.len() {
                    // per-part gradients are averaged over their own batch
                    let want = wa * ga[k] + wb * gb[k];
                    assert!(
                        (f[k] - want).abs() <= 1e-12 * (1.0 + want.abs()),
                        "{which} layer {l} coord {k}"
                    );
                }
            }
        }
    }
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        layer_widths: vec![32, 32, 16],
        candidates: 4,
        replacements: 2,
        refresh_interval: 3,
        tau: 4.0,
        batch_size: 32,
        interconnect_epochs: 4,
        finetune_epochs: 2,
        layers_to_learn: 2,
        seed,
        ..TrainConfig::default()
    }
}

fn parity_data() -> (BitMatrix, Vec<u32>, BitMatrix, Vec<u32>) {
    let task = synth_boolean_task(SynthKind::Parity { bits: 2 }, 6, 400, 3).unwrap();
    let (tx, ty) = task.dataset.split(Split::Train);
    let (vx, vy) = task.dataset.split(Split::Val);
    (
        task.encoder.encode(&tx).unwrap(),
        ty,
        task.encoder.encode(&vx).unwrap(),
        vy,
    )
}

#[test]
fn frozen_parameters_are_bitwise_unchanged() {
    let (x, y, _, _) = parity_data();
    let cfg = small_config(4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = NetworkModel::random(x.cols(), &cfg.layer_widths, 2, cfg.tau, cfg.candidates, 1.0, &mut rng).unwrap();
    let mut t = Trainer::new(model, cfg).unwrap();
    t.enter_phase(PhaseKind::Interconnect(1));
    let before = t.model().clone();
    let mut obs = NoopObserver;
    for s in 0..40 {
        let rows: Vec<usize> = (s * 7..s * 7 + 32).map(|r| r % x.rows()).collect();
        let labels: Vec<u32> = rows.iter().map(|&r| y[r]).collect();
        t.step(x.select_rows(&rows).transpose(), &labels, 0.05, &mut obs)
            .unwrap();
    }
    let after = t.model();
    // layer 0: fully frozen; layers 1 and 2: gates train
    assert_eq!(after.layers[0], before.layers[0]);
    for l in [1, 2] {
        assert_ne!(after.layers[l].gate_logits, before.layers[l].gate_logits);
    }
    // only layer 1 has a live interconnect
    assert_ne!(after.layers[1].conn_weights, before.layers[1].conn_weights);
    assert_ne!(after.layers[1].candidates, before.layers[1].candidates);
    assert_eq!(after.layers[2].conn_weights, before.layers[2].conn_weights);
    assert_eq!(after.layers[2].candidates, before.layers[2].candidates);
}

#[test]
fn fixed_interconnect_never_moves() {
    let (x, y, _, _) = parity_data();
    let cfg = TrainConfig {
        interconnect_mode: InterconnectMode::Fixed,
        ..small_config(9)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = NetworkModel::random(x.cols(), &cfg.layer_widths, 2, cfg.tau, cfg.candidates, 1.0, &mut rng).unwrap();
    let mut t = Trainer::new(model.clone(), cfg).unwrap();
    let data = TrainData {
        train_inputs: &x,
        train_labels: &y,
        val: None,
        test: None,
    };
    t.run(data, &mut NoopObserver).unwrap();
    for (a, b) in t.model().layers.iter().zip(&model.layers) {
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.conn_weights, b.conn_weights);
        assert_ne!(a.gate_logits, b.gate_logits);
    }
}

#[test]
fn same_seed_same_run() {
    let (x, y, vx, vy) = parity_data();
    let run = |seed: u64, mode: SamplingMode| {
        let cfg = TrainConfig {
            sampling_mode: mode,
            ..small_config(seed)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model =
            NetworkModel::random(x.cols(), &cfg.layer_widths, 2, cfg.tau, cfg.candidates, 1.0, &mut rng).unwrap();
        let mut t = Trainer::new(model, cfg).unwrap();
        let metrics = t
            .run(
                TrainData {
                    train_inputs: &x,
                    train_labels: &y,
                    val: Some((&vx, &vy)),
                    test: None,
                },
                &mut NoopObserver,
            )
            .unwrap();
        (metrics, t.into_parts())
    };
    for mode in [SamplingMode::Random, SamplingMode::GradientGuided] {
        let a = run(2, mode);
        let b = run(2, mode);
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 6);
        let c = run(3, mode);
        assert_ne!(a.1 .0, c.1 .0);
    }
}
