//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use boolnet_core::gate::GateTruthTable;
use boolnet_core::interconnect::{BatchContext, SlotRef};
use boolnet_core::{BitMatrix, HardCircuit, HardGate, NetworkModel, Source};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn softmax(l: &[f64]) -> Vec<f64> {
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = l.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Softmax mixture of the 16 tables, extended multilinearly to real inputs.
pub fn mix(logits: &[f64], a: f64, b: f64) -> f64 {
    softmax(logits)
        .iter()
        .zip(GateTruthTable::all())
        .map(|(p, f)| p * f.eval_multilinear(a, b))
        .sum()
}

/// Surrogate loss: every gate outputs its hard value plus the change of the
/// mixture between the reference parameters `base` and `model`, so the
/// value equals the hard loss at `base` and its derivatives follow the
/// mixture along every path.
pub fn surrogate_loss(model: &NetworkModel, base: &NetworkModel, x: &[Vec<bool>], labels: &[u32]) -> f64 {
    let mut total = 0.0;
    for (xs, &y) in x.iter().zip(labels) {
        let mut prev_hard: Vec<bool> = xs.clone();
        let mut prev_soft: Vec<f64> = xs.iter().map(|&v| v as u8 as f64).collect();
        for (layer, base_layer) in model.layers.iter().zip(&base.layers) {
            let mut hard = Vec::with_capacity(layer.gates);
            let mut soft = Vec::with_capacity(layer.gates);
            for g in 0..layer.gates {
                let ia = layer.selected_input(g, 0) as usize;
                let ib = layer.selected_input(g, 1) as usize;
                let (ha, hb) = (prev_hard[ia], prev_hard[ib]);
                let h = base_layer.gate_table(g).eval(ha, hb);
                let y0 = mix(base_layer.logits(g), ha as u8 as f64, hb as u8 as f64);
                let y1 = mix(layer.logits(g), prev_soft[ia], prev_soft[ib]);
                hard.push(h);
                soft.push(h as u8 as f64 + y1 - y0);
            }
            prev_hard = hard;
            prev_soft = soft;
        }
        let per = prev_soft.len() / model.num_classes;
        let logits: Vec<f64> = (0..model.num_classes)
            .map(|c| prev_soft[c * per..(c + 1) * per].iter().sum::<f64>() / model.group_tau)
            .collect();
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - logits[y as usize];
    }
    total / x.len() as f64
}

/// Connection gradient of one candidate by the defining sum over samples:
/// `(2 x - 1) * dy`, with `x` the candidate's bit and `dy` the slot's
/// upstream gradient.
pub fn triple_loop_connection_gradient(x: &BitMatrix, input: usize, slot_dy: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (s, &d) in slot_dy.iter().enumerate() {
        sum += if x.get(s, input) { d } else { -d };
    }
    sum
}

/// Gradients are multiples of 1/8 so every sum is exact and ties are real.
pub fn random_context(rng: &mut ChaCha8Rng, inputs: usize, gates: usize, batch: usize) -> BatchContext {
    // few distinct rows, so many inputs share a gradient
    let distinct = rng.random_range(1..=inputs.min(6));
    let rows: Vec<Vec<bool>> = (0..distinct)
        .map(|_| (0..batch).map(|_| rng.random_bool(0.5)).collect())
        .collect();
    let pick: Vec<usize> = (0..inputs).map(|_| rng.random_range(0..distinct)).collect();
    let inputs_t = BitMatrix::from_fn(inputs, batch, |i, b| rows[pick[i]][b]);
    let dy = (0..gates * 2 * batch)
        .map(|_| rng.random_range(-8i32..=8) as f64 / 8.0)
        .collect();
    BatchContext { inputs_t, dy }
}

pub fn argsort_oracle(ctx: &BatchContext, slot: SlotRef, count: usize, exclude: &[u32]) -> Vec<u32> {
    let b = ctx.inputs_t.cols();
    let dy = &ctx.dy[(slot.gate * 2 + slot.slot) * b..][..b];
    let mut all: Vec<(f64, u32)> = (0..ctx.inputs_t.rows())
        .filter(|i| !exclude.contains(&(*i as u32)))
        .map(|i| {
            let g: f64 = (0..b)
                .map(|s| if ctx.inputs_t.get(i, s) { dy[s] } else { -dy[s] })
                .sum();
            (g, i as u32)
        })
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    all.into_iter().take(count).map(|(_, i)| i).collect()
}

/// Per-sample interpreter, independent of the word-parallel evaluator.
pub fn naive_outputs(c: &HardCircuit, x: &[bool]) -> Vec<bool> {
    let read = |src: Source, prev: &[bool]| match src {
        Source::Signal(i) => prev[i as usize],
        Source::Const(v) => v,
    };
    let mut prev = x.to_vec();
    for layer in &c.layers {
        prev = layer
            .iter()
            .map(|g| {
                let (a, b) = (read(g.inputs[0], &prev), read(g.inputs[1], &prev));
                (g.table.code() >> (2 * a as u8 + b as u8)) & 1 == 1
            })
            .collect();
    }
    c.outputs.iter().map(|&s| read(s, &prev)).collect()
}

pub fn all_inputs(width: usize) -> BitMatrix {
    BitMatrix::from_fn(1 << width, width, |r, c| (r >> c) & 1 == 1)
}

/// Random circuits rich in prunable structure: constant and projection
/// tables, and inputs drawn from a narrow window so cones coincide.
pub fn random_circuit(rng: &mut ChaCha8Rng, max_inputs: usize, max_layers: usize, max_gates: usize) -> HardCircuit {
    let input_width = rng.random_range(2..=max_inputs);
    let layers = rng.random_range(1..=max_layers);
    let classes = rng.random_range(1..=4);
    let mut width = input_width;
    let mut out = Vec::new();
    for l in 0..layers {
        let g = if l + 1 == layers {
            classes * rng.random_range(1..=max_gates / classes)
        } else {
            rng.random_range(1..=max_gates)
        };
        let window = rng.random_range(1..=width);
        let layer = (0..g)
            .map(|_| {
                let code = match rng.random_range(0..10) {
                    0 => [0, 15][rng.random_range(0..2)],
                    1 => [3, 5, 10, 12][rng.random_range(0..4)],
                    2 => [6, 9][rng.random_range(0..2)],
                    _ => rng.random_range(0..16),
                };
                let table = GateTruthTable::from_code(code).unwrap();
                HardGate::new(
                    table,
                    rng.random_range(0..window) as u32,
                    rng.random_range(0..width) as u32,
                )
            })
            .collect::<Vec<_>>();
        width = layer.len();
        out.push(layer);
    }
    HardCircuit {
        input_width,
        num_classes: classes,
        group_tau: 1.0,
        layers: out,
        outputs: (0..width as u32).map(Source::Signal).collect(),
    }
}
