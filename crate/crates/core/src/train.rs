//! Straight-through training of gate networks.
//!
//! The forward pass is always hard: every gate applies its argmax truth
//! table to its argmax-selected inputs, so training accuracy is exactly the
//! accuracy of the hardened circuit. Gradients come from a softmax mixture
//! over the 16 gate functions evaluated at the realized binary inputs, and
//! the connection weights receive `sum_b (2 x[b,i] - 1) * dy[b,g,j]` for each
//! stored candidate `i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitMatrix;
use crate::circuit::{accuracy_of, group_counts, predict_from_counts};
use crate::error::{Error, Result};
use crate::gate::{GateTruthTable, NUM_GATE_FUNCTIONS};
use crate::interconnect::{refresh_candidates, BatchContext, GradientGuidedSampler, RandomSampler, RefreshEvent};
use crate::matrix::RealMatrix;
use crate::model::{NetworkModel, ARITY};
use crate::optim::{cosine_lr, AdamConfig, AdamMoments};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplingMode {
    Random,
    GradientGuided,
    /// Keep the initial candidate sets forever.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InterconnectMode {
    /// Every slot stays wired to its initial first candidate.
    Fixed,
    Learnable,
}

/// Every hyperparameter of a training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    /// Gates per layer, input side first.
    pub layer_widths: Vec<usize>,
    /// Thermometer thresholds per feature.
    pub thermometer_levels: usize,
    /// `C`: candidate connections per gate input slot.
    pub candidates: usize,
    /// `R`: candidates replaced per slot at each refresh.
    pub replacements: usize,
    /// `beta`: steps between refreshes.
    pub refresh_interval: usize,
    /// GroupSum temperature.
    pub tau: f64,
    pub batch_size: usize,
    pub lr_init: f64,
    pub lr_final: f64,
    /// Epochs shared by the interconnect phases; each of the `L` phases
    /// gets `interconnect_epochs / L`.
    pub interconnect_epochs: usize,
    /// Epochs of the final gate-only pass.
    pub finetune_epochs: usize,
    /// `L`: number of layers, from the input side, whose interconnect is
    /// trained, one after another.
    pub layers_to_learn: usize,
    pub sampling_mode: SamplingMode,
    pub interconnect_mode: InterconnectMode,
    /// Standard deviation of the initial gate logits.
    pub gate_init_std: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layer_widths: vec![12_000; 3],
            thermometer_levels: 10,
            candidates: 8,
            replacements: 4,
            refresh_interval: 20,
            tau: 30.0,
            batch_size: 100,
            lr_init: 1e-2,
            lr_final: 1e-5,
            interconnect_epochs: 2000,
            finetune_epochs: 100,
            layers_to_learn: 1,
            sampling_mode: SamplingMode::Random,
            interconnect_mode: InterconnectMode::Learnable,
            gate_init_std: 1.0,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::config(m));
        if self.layer_widths.is_empty() || self.layer_widths.contains(&0) {
            return err("layer_widths must list at least one non-empty layer");
        }
        if self.candidates == 0 {
            return err("candidates must be positive");
        }
        if self.replacements == 0 || self.replacements > self.candidates {
            return err("replacements must satisfy 0 < R <= C");
        }
        if self.refresh_interval == 0 {
            return err("refresh_interval must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return err("tau must be positive");
        }
        if self.batch_size == 0 {
            return err("batch_size must be positive");
        }
        if !(self.lr_final > 0.0 && self.lr_final <= self.lr_init && self.lr_init.is_finite()) {
            return err("learning rates must satisfy 0 < lr_final <= lr_init");
        }
        if self.layers_to_learn > self.layer_widths.len() {
            return Err(Error::config(format!(
                "layers_to_learn = {} exceeds the {} layers of the network",
                self.layers_to_learn,
                self.layer_widths.len()
            )));
        }
        if self.thermometer_levels == 0 {
            return err("thermometer_levels must be positive");
        }
        if !(self.gate_init_std >= 0.0 && self.gate_init_std.is_finite()) {
            return err("gate_init_std must be finite and non-negative");
        }
        Ok(())
    }

    /// The layer-wise schedule: one interconnect phase per learned layer,
    /// then the gate fine-tuning pass. Phases with zero epochs are dropped.
    pub fn phases(&self) -> Vec<Phase> {
        let mut phases = Vec::new();
        if let Some(per_layer) = self.interconnect_epochs.checked_div(self.layers_to_learn) {
            for layer in 0..self.layers_to_learn {
                phases.push(Phase {
                    kind: PhaseKind::Interconnect(layer),
                    epochs: per_layer,
                });
            }
        }
        phases.push(Phase {
            kind: PhaseKind::Finetune,
            epochs: self.finetune_epochs,
        });
        phases.retain(|p| p.epochs > 0);
        phases
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PhaseKind {
    /// Interconnect of this layer is trained; lower layers are frozen.
    Interconnect(usize),
    /// Every interconnect fixed, every gate trainable.
    Finetune,
}

impl core::fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PhaseKind::Interconnect(l) => write!(f, "interconnect_{l}"),
            PhaseKind::Finetune => f.write_str("finetune"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    pub kind: PhaseKind,
    pub epochs: usize,
}

/// Result of a hard forward pass over one batch.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Inputs laid out signals × samples.
    pub inputs_t: BitMatrix,
    /// Activations of every layer, signals × samples.
    pub activations: Vec<BitMatrix>,
    /// Input indices each gate read, per layer.
    pub selected: Vec<Vec<[u32; ARITY]>>,
    /// Ones per class group, samples × classes.
    pub counts: Vec<u32>,
    /// GroupSum logits, samples × classes.
    pub logits: RealMatrix,
}

impl ForwardPass {
    pub fn batch_size(&self) -> usize {
        self.inputs_t.cols()
    }

    pub fn predictions(&self, num_classes: usize) -> Vec<usize> {
        predict_from_counts(&self.counts, num_classes)
    }

    /// Layer activations in samples × signals orientation.
    pub fn activations_by_sample(&self, layer: usize) -> BitMatrix {
        self.activations[layer].transpose()
    }
}

/// Hard forward pass on `samples × input_width` inputs.
pub fn forward_hard(model: &NetworkModel, inputs: &BitMatrix) -> Result<ForwardPass> {
    if inputs.cols() != model.input_width {
        return Err(Error::structural(format!(
            "expected {} input columns, got {}",
            model.input_width,
            inputs.cols()
        )));
    }
    forward_hard_t(model, inputs.transpose())
}

/// Hard forward pass on inputs laid out signals × samples.
pub fn forward_hard_t(model: &NetworkModel, inputs_t: BitMatrix) -> Result<ForwardPass> {
    if inputs_t.rows() != model.input_width {
        return Err(Error::structural(format!(
            "expected {} input signals, got {}",
            model.input_width,
            inputs_t.rows()
        )));
    }
    let samples = inputs_t.cols();
    let mut activations: Vec<BitMatrix> = Vec::with_capacity(model.layers.len());
    let mut selected = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let prev = activations.last().unwrap_or(&inputs_t);
        let mut out = BitMatrix::zeros(layer.gates, samples);
        let mut sel = Vec::with_capacity(layer.gates);
        for g in 0..layer.gates {
            let ia = layer.selected_input(g, 0);
            let ib = layer.selected_input(g, 1);
            let table = layer.gate_table(g);
            let (ra, rb) = (prev.row(ia as usize), prev.row(ib as usize));
            for ((dst, &a), &b) in out.row_mut(g).iter_mut().zip(ra).zip(rb) {
                *dst = table.eval_word(a, b);
            }
            out.clear_padding(g);
            sel.push([ia, ib]);
        }
        activations.push(out);
        selected.push(sel);
    }
    let last = activations.last().unwrap_or(&inputs_t);
    if !last.rows().is_multiple_of(model.num_classes) {
        return Err(Error::structural("output width not divisible by num_classes"));
    }
    let counts = group_counts(last, model.num_classes);
    let logits = RealMatrix::from_vec(
        samples,
        model.num_classes,
        counts.iter().map(|&c| c as f64 / model.group_tau).collect(),
    )?;
    Ok(ForwardPass {
        inputs_t,
        activations,
        selected,
        counts,
        logits,
    })
}

/// Gradients of one layer for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    /// `G × 16`; zero when the layer's gates are frozen.
    pub d_logits: Vec<f64>,
    /// `G × ARITY × C`; zero when the layer's interconnect is frozen.
    pub d_conn: Vec<f64>,
    /// Upstream gradient at every gate input, `G × ARITY × B`.
    pub dy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub layers: Vec<LayerGradients>,
    /// Mean softmax cross-entropy of the batch.
    pub loss: f64,
}

fn softmax16(logits: &[f64]) -> [f64; NUM_GATE_FUNCTIONS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_GATE_FUNCTIONS];
    let mut sum = 0.0;
    for (pi, &l) in p.iter_mut().zip(logits) {
        *pi = libm::exp(l - max);
        sum += *pi;
    }
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Softmax cross-entropy of GroupSum logits. Returns the mean loss and
/// `dL/dlogit` (samples × classes), averaged over the batch.
pub fn cross_entropy(logits: &RealMatrix, labels: &[u32]) -> Result<(f64, Vec<f64>)> {
    let (rows, classes) = (logits.rows(), logits.cols());
    if labels.len() != rows {
        return Err(Error::structural("label count does not match batch size"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::structural(format!(
            "label {l} out of range for {classes} classes"
        )));
    }
    let mut grad = vec![0.0; rows * classes];
    let mut loss = 0.0;
    let inv_b = 1.0 / rows.max(1) as f64;
    for b in 0..rows {
        let row = logits.row(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
        let log_z = max + libm::log(sum);
        let label = labels[b] as usize;
        loss += log_z - row[label];
        for c in 0..classes {
            let p = libm::exp(row[c] - log_z);
            grad[b * classes + c] = (p - if c == label { 1.0 } else { 0.0 }) * inv_b;
        }
    }
    Ok((loss * inv_b, grad))
}

/// Lowest layer that still has something to learn; nothing below it needs
/// a gradient.
fn lowest_trainable(model: &NetworkModel) -> Option<usize> {
    model
        .layers
        .iter()
        .position(|l| !l.frozen_gates || !l.frozen_interconnect)
}

/// Backpropagates the GroupSum cross-entropy of a hard forward pass.
pub fn backward(model: &NetworkModel, fwd: &ForwardPass, labels: &[u32]) -> Result<BatchGradients> {
    let batch = fwd.batch_size();
    if fwd.activations.len() != model.layers.len() {
        return Err(Error::Usage("forward cache does not belong to this model".into()));
    }
    let classes = model.num_classes;
    let (loss, d_logit) = cross_entropy(&fwd.logits, labels)?;

    let mut grads: Vec<LayerGradients> = model
        .layers
        .iter()
        .map(|l| LayerGradients {
            d_logits: vec![0.0; l.gate_logits.len()],
            d_conn: vec![0.0; l.conn_weights.len()],
            dy: vec![0.0; l.gates * ARITY * batch],
        })
        .collect();
    let Some(lowest) = lowest_trainable(model) else {
        return Ok(BatchGradients { layers: grads, loss });
    };

    // dL/d(output bit) of the last layer
    let last = model.layers.len() - 1;
    let out_width = model.layers[last].gates;
    let per_class = out_width / classes;
    let inv_tau = 1.0 / model.group_tau;
    let mut d_out = vec![0.0; out_width * batch];
    for o in 0..out_width {
        let c = o / per_class;
        for b in 0..batch {
            d_out[o * batch + b] = d_logit[b * classes + c] * inv_tau;
        }
    }

    for li in (lowest..=last).rev() {
        let layer = &model.layers[li];
        let prev = if li == 0 {
            &fwd.inputs_t
        } else {
            &fwd.activations[li - 1]
        };
        let mut d_prev = if li > lowest {
            vec![0.0; prev.rows() * batch]
        } else {
            Vec::new()
        };
        let lg = &mut grads[li];
        for g in 0..layer.gates {
            let p = softmax16(layer.logits(g));
            let [ia, ib] = fwd.selected[li][g];
            let d_y = &d_out[g * batch..(g + 1) * batch];

            // slot sensitivities of the mixture at binary points
            let mut da = [0.0; 2];
            let mut db = [0.0; 2];
            for (f, &pf) in GateTruthTable::all().zip(&p) {
                for v in [false, true] {
                    da[v as usize] += pf * (f.eval_f64(true, v) - f.eval_f64(false, v));
                    db[v as usize] += pf * (f.eval_f64(v, true) - f.eval_f64(v, false));
                }
            }

            // d_y summed by input pattern (a, b)
            let mut by_pattern = [0.0; 4];
            let (ra, rb) = (prev.row(ia as usize), prev.row(ib as usize));
            let dy_off = g * ARITY * batch;
            let (dy0, dy1) = lg.dy[dy_off..dy_off + 2 * batch].split_at_mut(batch);
            for b in 0..batch {
                let (w, bit) = (b / 64, b % 64);
                let a = (ra[w] >> bit) & 1;
                let bb = (rb[w] >> bit) & 1;
                by_pattern[(a << 1 | bb) as usize] += d_y[b];
                dy0[b] = d_y[b] * da[bb as usize];
                dy1[b] = d_y[b] * db[a as usize];
            }

            if !layer.frozen_gates {
                let out = &mut lg.d_logits[g * NUM_GATE_FUNCTIONS..(g + 1) * NUM_GATE_FUNCTIONS];
                for (pattern, &s) in by_pattern.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let (a, b) = (pattern >> 1 == 1, pattern & 1 == 1);
                    let mix: f64 = GateTruthTable::all()
                        .zip(&p)
                        .map(|(f, &pf)| pf * f.eval_f64(a, b))
                        .sum();
                    for ((o, f), &pf) in out.iter_mut().zip(GateTruthTable::all()).zip(&p) {
                        *o += s * pf * (f.eval_f64(a, b) - mix);
                    }
                }
            }

            if !layer.frozen_interconnect {
                let c = layer.candidates_per_slot;
                for (j, dy_j) in [&*dy0, &*dy1].into_iter().enumerate() {
                    let total: f64 = dy_j.iter().sum();
                    let off = layer.slot_offset(g, j);
                    for k in 0..c {
                        let cand = layer.candidates[off + k] as usize;
                        let mut on = 0.0;
                        for (wi, &word) in prev.row(cand).iter().enumerate() {
                            let mut w = word;
                            while w != 0 {
                                on += dy_j[wi * 64 + w.trailing_zeros() as usize];
                                w &= w - 1;
                            }
                        }
                        lg.d_conn[off + k] = 2.0 * on - total;
                    }
                }
            }

            if li > lowest {
                for (idx, dy_j) in [(ia, &*dy0), (ib, &*dy1)] {
                    let dst = &mut d_prev[idx as usize * batch..(idx as usize + 1) * batch];
                    for (d, &v) in dst.iter_mut().zip(dy_j) {
                        *d += v;
                    }
                }
            }
        }
        d_out = d_prev;
    }
    Ok(BatchGradients { layers: grads, loss })
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochMetrics {
    /// Zero-based epoch across all phases.
    pub epoch: usize,
    pub phase: PhaseKind,
    pub train_accuracy: f64,
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
    pub val_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_loss: Option<f64>,
    /// Learning rate at the last step of the epoch.
    pub lr: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Hooks called by the training loop.
pub trait TrainObserver {
    fn on_epoch(&mut self, _metrics: &EpochMetrics) -> Control {
        Control::Continue
    }

    fn on_refresh(&mut self, _event: &RefreshEvent) {}
}

/// Observer that never stops training.
pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// Encoded training data, samples × signals.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train_inputs: &'a BitMatrix,
    pub train_labels: &'a [u32],
    pub val: Option<(&'a BitMatrix, &'a [u32])>,
    /// Monitored only; never used for any training decision.
    pub test: Option<(&'a BitMatrix, &'a [u32])>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerOptimizerState {
    pub logits: AdamMoments,
    pub conn: AdamMoments,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerState {
    pub layers: Vec<LayerOptimizerState>,
    pub step: u64,
}

/// Owns a model during training together with optimizer state and RNG.
pub struct Trainer {
    model: NetworkModel,
    config: TrainConfig,
    optim: OptimizerState,
    rng: ChaCha8Rng,
    cache: Option<(ForwardPass, Vec<u32>)>,
    last_batch: Option<BatchContext>,
}

impl Trainer {
    pub fn new(model: NetworkModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        if config.layers_to_learn > model.layers.len() {
            return Err(Error::config("layers_to_learn exceeds the model's layer count"));
        }
        let layers = model
            .layers
            .iter()
            .map(|l| LayerOptimizerState {
                logits: AdamMoments::new(l.gate_logits.len()),
                conn: AdamMoments::new(l.conn_weights.len()),
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7261_696e_5f72_6e67);
        Ok(Trainer {
            model,
            config,
            optim: OptimizerState { layers, step: 0 },
            rng,
            cache: None,
            last_batch: None,
        })
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn optimizer_state(&self) -> &OptimizerState {
        &self.optim
    }

    pub fn into_parts(self) -> (NetworkModel, OptimizerState) {
        (self.model, self.optim)
    }

    /// Applies the freeze flags of a schedule phase to the model.
    pub fn enter_phase(&mut self, kind: PhaseKind) {
        let learnable = self.config.interconnect_mode == InterconnectMode::Learnable;
        for (i, layer) in self.model.layers.iter_mut().enumerate() {
            match kind {
                PhaseKind::Interconnect(active) => {
                    layer.frozen_gates = i < active;
                    layer.frozen_interconnect = !(learnable && i == active);
                }
                PhaseKind::Finetune => {
                    layer.frozen_gates = false;
                    layer.frozen_interconnect = true;
                }
            }
        }
    }

    /// Hard forward pass over a batch (signals × samples), cached for
    /// [`Trainer::backward`].
    pub fn forward(&mut self, inputs_t: BitMatrix, labels: &[u32]) -> Result<&ForwardPass> {
        if labels.len() != inputs_t.cols() {
            return Err(Error::structural("label count does not match batch size"));
        }
        let fwd = forward_hard_t(&self.model, inputs_t)?;
        self.cache = Some((fwd, labels.to_vec()));
        Ok(&self.cache.as_ref().expect("just set").0)
    }

    /// Gradients for the cached forward pass.
    pub fn backward(&self) -> Result<BatchGradients> {
        let (fwd, labels) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("backward called without a cached forward pass".into()))?;
        backward(&self.model, fwd, labels)
    }

    fn apply(&mut self, grads: &BatchGradients, lr: f64) {
        let adam = self.config.adam;
        for ((layer, g), st) in self
            .model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.optim.layers)
        {
            if !layer.frozen_gates {
                st.logits.update(&mut layer.gate_logits, &g.d_logits, lr, &adam);
            }
            if !layer.frozen_interconnect {
                st.conn.update(&mut layer.conn_weights, &g.d_conn, lr, &adam);
            }
        }
    }

    /// One optimization step on a batch. Returns (loss, correct predictions).
    pub fn step(
        &mut self,
        inputs_t: BitMatrix,
        labels: &[u32],
        lr: f64,
        observer: &mut dyn TrainObserver,
    ) -> Result<(f64, usize)> {
        let classes = self.model.num_classes;
        let correct = {
            let fwd = self.forward(inputs_t, labels)?;
            fwd.predictions(classes)
                .iter()
                .zip(labels)
                .filter(|(&p, &l)| p == l as usize)
                .count()
        };
        let grads = self.backward()?;
        self.apply(&grads, lr);
        self.optim.step += 1;

        let active = self.model.layers.iter().position(|l| !l.frozen_interconnect);
        if let Some(li) = active {
            if self.config.sampling_mode != SamplingMode::None
                && self.optim.step.is_multiple_of(self.config.refresh_interval as u64)
            {
                let (fwd, _) = self.cache.take().expect("forward cached above");
                let inputs_t = if li == 0 {
                    fwd.inputs_t
                } else {
                    fwd.activations.into_iter().nth(li - 1).expect("layer exists")
                };
                let dy = grads.layers.into_iter().nth(li).expect("layer exists").dy;
                self.last_batch = Some(BatchContext { inputs_t, dy });
                let event = self.refresh(li)?;
                observer.on_refresh(&event);
            }
        }
        Ok((grads.loss, correct))
    }

    fn refresh(&mut self, li: usize) -> Result<RefreshEvent> {
        let step = self.optim.step;
        let replace = self.config.replacements.min(self.model.layers[li].candidates_per_slot);
        let layer = &mut self.model.layers[li];
        let event = match self.config.sampling_mode {
            SamplingMode::Random => {
                let mut sampler = RandomSampler { rng: &mut self.rng };
                refresh_candidates(layer, li, step, &mut sampler, replace)?
            }
            SamplingMode::GradientGuided => {
                let mut sampler = GradientGuidedSampler {
                    ctx: self.last_batch.as_ref(),
                };
                refresh_candidates(layer, li, step, &mut sampler, replace)?
            }
            SamplingMode::None => return Err(Error::Usage("refresh without a sampling mode".into())),
        };
        let conn = &mut self.optim.layers[li].conn;
        for s in &event.slots {
            let off = layer.slot_offset(s.gate, s.slot);
            for &p in &s.positions {
                conn.reset(off + p);
            }
        }
        Ok(event)
    }

    /// Runs the whole layer-wise schedule.
    pub fn run(&mut self, data: TrainData<'_>, observer: &mut dyn TrainObserver) -> Result<Vec<EpochMetrics>> {
        let n = data.train_inputs.rows();
        if data.train_labels.len() != n {
            return Err(Error::structural("train label count does not match sample count"));
        }
        if data.train_inputs.cols() != self.model.input_width {
            return Err(Error::structural("train input width does not match the model"));
        }
        let mut metrics = Vec::new();
        let phases = self.config.phases();
        if n == 0 || phases.is_empty() {
            return Ok(metrics);
        }
        let batch = self.config.batch_size.min(n);
        let batches_per_epoch = n.div_ceil(batch);
        let mut order: Vec<usize> = (0..n).collect();
        let mut epoch = 0;
        for phase in phases {
            self.enter_phase(phase.kind);
            let total_steps = phase.epochs * batches_per_epoch;
            let mut phase_step = 0;
            for _ in 0..phase.epochs {
                order.shuffle(&mut self.rng);
                let (mut loss_sum, mut correct) = (0.0, 0usize);
                let mut lr = self.config.lr_init;
                for chunk in order.chunks(batch) {
                    lr = cosine_lr(phase_step, total_steps, self.config.lr_init, self.config.lr_final);
                    let inputs_t = data.train_inputs.select_rows(chunk).transpose();
                    let labels: Vec<u32> = chunk.iter().map(|&i| data.train_labels[i]).collect();
                    let (loss, hits) = self.step(inputs_t, &labels, lr, observer)?;
                    loss_sum += loss * chunk.len() as f64;
                    correct += hits;
                    phase_step += 1;
                }
                let (val_accuracy, val_loss) = self.evaluate_optional(data.val)?;
                let (test_accuracy, test_loss) = self.evaluate_optional(data.test)?;
                let m = EpochMetrics {
                    epoch,
                    phase: phase.kind,
                    train_accuracy: correct as f64 / n as f64,
                    train_loss: loss_sum / n as f64,
                    val_accuracy,
                    val_loss,
                    test_accuracy,
                    test_loss,
                    lr,
                    steps: self.optim.step,
                };
                epoch += 1;
                let control = observer.on_epoch(&m);
                metrics.push(m);
                if control == Control::Stop {
                    self.cache = None;
                    return Ok(metrics);
                }
            }
        }
        self.cache = None;
        Ok(metrics)
    }

    fn evaluate_optional(&self, split: Option<(&BitMatrix, &[u32])>) -> Result<(Option<f64>, Option<f64>)> {
        match split {
            Some((x, y)) if !y.is_empty() => {
                let (acc, loss) = self.evaluate(x, y)?;
                Ok((Some(acc), Some(loss)))
            }
            _ => Ok((None, None)),
        }
    }

    /// Accuracy and mean loss of the current model, through the hard
    /// forward pass.
    pub fn evaluate(&self, inputs: &BitMatrix, labels: &[u32]) -> Result<(f64, f64)> {
        evaluate(&self.model, inputs, labels)
    }
}

/// Accuracy and mean cross-entropy of a model on `samples × inputs` data.
pub fn evaluate(model: &NetworkModel, inputs: &BitMatrix, labels: &[u32]) -> Result<(f64, f64)> {
    let fwd = forward_hard(model, inputs)?;
    let acc = accuracy_of(&fwd.predictions(model.num_classes), labels)?;
    let (loss, _) = cross_entropy(&fwd.logits, labels)?;
    Ok((acc, loss))
}

/// Trains `model` under `config`; returns the trained model and the
/// per-epoch metrics.
pub fn train(
    model: NetworkModel,
    data: TrainData<'_>,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<(NetworkModel, Vec<EpochMetrics>)> {
    let mut trainer = Trainer::new(model, config.clone())?;
    let metrics = trainer.run(data, observer)?;
    Ok((trainer.into_parts().0, metrics))
}
