//! Hardened netlists and bit-parallel evaluation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::gate::GateTruthTable;
use crate::matrix::RealMatrix;
use crate::model::NetworkModel;

/// Where a gate input (or a head output) reads its value from.
///
/// `Signal(i)` is output `i` of the previous layer, or primary input `i`
/// for the first layer. Constants are free wires and do not count as gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Source {
    Signal(u32),
    Const(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HardGate {
    pub table: GateTruthTable,
    pub inputs: [Source; 2],
}

impl HardGate {
    pub fn new(table: GateTruthTable, in0: u32, in1: u32) -> Self {
        HardGate {
            table,
            inputs: [Source::Signal(in0), Source::Signal(in1)],
        }
    }
}

/// A static layered Boolean circuit with a GroupSum head.
///
/// `outputs` lists, in head order, which last-layer signal feeds each
/// GroupSum position; class `c` owns positions
/// `[c * n / classes, (c + 1) * n / classes)`. Hardening produces the
/// identity map; pruning may redirect outputs to surviving gates or
/// constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HardCircuit {
    pub input_width: usize,
    pub num_classes: usize,
    pub group_tau: f64,
    pub layers: Vec<Vec<HardGate>>,
    pub outputs: Vec<Source>,
}

/// Turns trained parameters into a circuit: every gate takes the argmax of
/// its logits and every slot the argmax-weighted candidate. Ties resolve to
/// the lowest index.
pub fn harden(model: &NetworkModel) -> Result<HardCircuit> {
    model.validate()?;
    let layers = model
        .layers
        .iter()
        .map(|layer| {
            (0..layer.gates)
                .map(|g| {
                    HardGate::new(
                        layer.gate_table(g),
                        layer.selected_input(g, 0),
                        layer.selected_input(g, 1),
                    )
                })
                .collect()
        })
        .collect();
    let out_width = model.output_width();
    Ok(HardCircuit {
        input_width: model.input_width,
        num_classes: model.num_classes,
        group_tau: model.group_tau,
        layers,
        outputs: (0..out_width as u32).map(Source::Signal).collect(),
    })
}

/// Number of set bits per class group, from activations laid out signals ×
/// samples. Returns a `samples × num_classes` table.
pub(crate) fn group_counts(outputs_t: &BitMatrix, num_classes: usize) -> Vec<u32> {
    let width = outputs_t.rows();
    let samples = outputs_t.cols();
    let per_class = width / num_classes;
    let mut counts = vec![0u32; samples * num_classes];
    for o in 0..width {
        let c = o / per_class;
        for (wi, &word) in outputs_t.row(o).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let s = wi * 64 + w.trailing_zeros() as usize;
                counts[s * num_classes + c] += 1;
                w &= w - 1;
            }
        }
    }
    counts
}

/// Class index with the largest group count per sample; lowest class wins ties.
pub(crate) fn predict_from_counts(counts: &[u32], num_classes: usize) -> Vec<usize> {
    counts
        .chunks(num_classes)
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// GroupSum logits: `logit[b][c]` is the number of ones in class `c`'s
/// contiguous group of outputs for sample `b`, divided by `tau`.
pub fn group_logits(activations: &BitMatrix, num_classes: usize, tau: f64) -> Result<RealMatrix> {
    if num_classes == 0 || !activations.cols().is_multiple_of(num_classes) {
        return Err(Error::structural(format!(
            "activation width {} is not divisible by {num_classes} classes",
            activations.cols()
        )));
    }
    let per_class = activations.cols() / num_classes;
    let mut logits = RealMatrix::zeros(activations.rows(), num_classes);
    for b in 0..activations.rows() {
        for c in 0..num_classes {
            let ones = (c * per_class..(c + 1) * per_class)
                .filter(|&o| activations.get(b, o))
                .count();
            logits.set(b, c, ones as f64 / tau);
        }
    }
    Ok(logits)
}

#[inline]
pub(crate) fn source_words<'a>(src: Source, prev: &'a BitMatrix, zeros: &'a [u64], ones: &'a [u64]) -> &'a [u64] {
    match src {
        Source::Signal(i) => prev.row(i as usize),
        Source::Const(false) => zeros,
        Source::Const(true) => ones,
    }
}

/// Evaluates one layer of gates on signal-major activations.
pub(crate) fn eval_gates(gates: &[HardGate], prev: &BitMatrix) -> BitMatrix {
    let samples = prev.cols();
    let wpr = prev.words_per_row();
    let zeros = vec![0u64; wpr];
    let ones = vec![!0u64; wpr];
    let mut out = BitMatrix::zeros(gates.len(), samples);
    for (g, gate) in gates.iter().enumerate() {
        let a = source_words(gate.inputs[0], prev, &zeros, &ones);
        let b = source_words(gate.inputs[1], prev, &zeros, &ones);
        for ((dst, &wa), &wb) in out.row_mut(g).iter_mut().zip(a).zip(b) {
            *dst = gate.table.eval_word(wa, wb);
        }
        out.clear_padding(g);
    }
    out
}

impl HardCircuit {
    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Gates that only pass one input through (learned skip connections).
    pub fn projection_count(&self) -> usize {
        self.layers.iter().flatten().filter(|g| g.table.is_projection()).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.outputs.is_empty() || !self.outputs.len().is_multiple_of(self.num_classes) {
            return Err(Error::structural(
                "output count must be a positive multiple of num_classes",
            ));
        }
        if !(self.group_tau > 0.0 && self.group_tau.is_finite()) {
            return Err(Error::structural("group_tau must be positive"));
        }
        let check = |src: &Source, width: usize, what: &str| match *src {
            Source::Signal(i) if i as usize >= width => Err(Error::structural(format!(
                "{what} reads signal {i} but only {width} are available"
            ))),
            _ => Ok(()),
        };
        let mut width = self.input_width;
        for (l, layer) in self.layers.iter().enumerate() {
            for (g, gate) in layer.iter().enumerate() {
                for s in &gate.inputs {
                    check(s, width, &format!("layer {l} gate {g}"))?;
                }
            }
            width = layer.len();
        }
        for (o, s) in self.outputs.iter().enumerate() {
            check(s, width, &format!("output {o}"))?;
        }
        Ok(())
    }

    /// Activations of every layer, each laid out signals × samples, given
    /// inputs laid out signals × samples.
    pub fn eval_layers_t(&self, inputs_t: &BitMatrix) -> Result<Vec<BitMatrix>> {
        if inputs_t.rows() != self.input_width {
            return Err(Error::structural(format!(
                "expected {} input signals, got {}",
                self.input_width,
                inputs_t.rows()
            )));
        }
        let mut acts: Vec<BitMatrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let prev = acts.last().unwrap_or(inputs_t);
            let next = eval_gates(layer, prev);
            acts.push(next);
        }
        Ok(acts)
    }

    /// Head outputs laid out signals × samples.
    pub fn eval_outputs_t(&self, inputs_t: &BitMatrix) -> Result<BitMatrix> {
        let acts = self.eval_layers_t(inputs_t)?;
        let last = acts.last().unwrap_or(inputs_t);
        let samples = inputs_t.cols();
        let mut out = BitMatrix::zeros(self.outputs.len(), samples);
        let zeros = vec![0u64; last.words_per_row()];
        let ones = vec![!0u64; last.words_per_row()];
        for (o, &src) in self.outputs.iter().enumerate() {
            out.row_mut(o).copy_from_slice(source_words(src, last, &zeros, &ones));
            out.clear_padding(o);
        }
        Ok(out)
    }

    /// Evaluates the circuit on `samples × input_width` inputs and returns
    /// the `samples × outputs` head bits.
    pub fn eval(&self, inputs: &BitMatrix) -> Result<BitMatrix> {
        if inputs.cols() != self.input_width {
            return Err(Error::structural(format!(
                "expected {} input columns, got {}",
                self.input_width,
                inputs.cols()
            )));
        }
        Ok(self.eval_outputs_t(&inputs.transpose())?.transpose())
    }

    pub fn logits(&self, inputs: &BitMatrix) -> Result<RealMatrix> {
        let outputs = self.eval(inputs)?;
        group_logits(&outputs, self.num_classes, self.group_tau)
    }

    pub fn predict(&self, inputs: &BitMatrix) -> Result<Vec<usize>> {
        if inputs.cols() != self.input_width {
            return Err(Error::structural("input width mismatch"));
        }
        self.predict_t(&inputs.transpose())
    }

    pub fn predict_t(&self, inputs_t: &BitMatrix) -> Result<Vec<usize>> {
        self.validate()?;
        let out = self.eval_outputs_t(inputs_t)?;
        Ok(predict_from_counts(
            &group_counts(&out, self.num_classes),
            self.num_classes,
        ))
    }

    /// Fraction of samples whose predicted class equals the label.
    pub fn accuracy(&self, inputs: &BitMatrix, labels: &[u32]) -> Result<f64> {
        accuracy_of(&self.predict(inputs)?, labels)
    }
}

pub(crate) fn accuracy_of(predictions: &[usize], labels: &[u32]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::structural("label count does not match sample count"));
    }
    if labels.is_empty() {
        return Err(Error::structural("cannot compute accuracy of an empty set"));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| p == l as usize)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}
