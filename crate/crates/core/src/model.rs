//! Trainable network parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gate::{GateTruthTable, NUM_GATE_FUNCTIONS};
use crate::matrix::argmax;

/// Inputs per gate. Only two-input gates are trained.
pub const ARITY: usize = 2;

/// Parameters of one gate layer.
///
/// Tensors are flat and row-major: `gate_logits` is `G × 16`, while
/// `candidates` and `conn_weights` are `G × ARITY × C`. Candidate entries
/// are indices into the previous layer's outputs (or the binarized input
/// for the first layer).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerParams {
    pub gates: usize,
    pub input_width: usize,
    pub candidates_per_slot: usize,
    pub gate_logits: Vec<f64>,
    pub candidates: Vec<u32>,
    pub conn_weights: Vec<f64>,
    pub frozen_interconnect: bool,
    pub frozen_gates: bool,
}

impl LayerParams {
    /// Random layer: gate logits drawn from `N(0, init_std²)`, connection
    /// weights zero, candidates drawn without replacement per slot.
    pub fn random<R: Rng + ?Sized>(
        gates: usize,
        input_width: usize,
        candidates_per_slot: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if candidates_per_slot == 0 || candidates_per_slot > input_width {
            return Err(Error::config(format!(
                "candidates per slot ({candidates_per_slot}) must be in 1..={input_width}"
            )));
        }
        let normal =
            Normal::new(0.0, init_std).map_err(|_| Error::config("gate init std must be finite and non-negative"))?;
        let gate_logits = (0..gates * NUM_GATE_FUNCTIONS).map(|_| normal.sample(rng)).collect();
        let mut candidates = Vec::with_capacity(gates * ARITY * candidates_per_slot);
        for _ in 0..gates * ARITY {
            let picks = rand::seq::index::sample(rng, input_width, candidates_per_slot);
            candidates.extend(picks.iter().map(|i| i as u32));
        }
        Ok(LayerParams {
            gates,
            input_width,
            candidates_per_slot,
            gate_logits,
            candidates,
            conn_weights: vec![0.0; gates * ARITY * candidates_per_slot],
            frozen_interconnect: false,
            frozen_gates: false,
        })
    }

    /// Offset of slot `(gate, j)` in `candidates` / `conn_weights`.
    #[inline]
    pub fn slot_offset(&self, gate: usize, j: usize) -> usize {
        (gate * ARITY + j) * self.candidates_per_slot
    }

    #[inline]
    pub fn slot_candidates(&self, gate: usize, j: usize) -> &[u32] {
        let o = self.slot_offset(gate, j);
        &self.candidates[o..o + self.candidates_per_slot]
    }

    #[inline]
    pub fn slot_weights(&self, gate: usize, j: usize) -> &[f64] {
        let o = self.slot_offset(gate, j);
        &self.conn_weights[o..o + self.candidates_per_slot]
    }

    #[inline]
    pub fn logits(&self, gate: usize) -> &[f64] {
        &self.gate_logits[gate * NUM_GATE_FUNCTIONS..(gate + 1) * NUM_GATE_FUNCTIONS]
    }

    /// Candidate position picked by the hard argmax of slot `(gate, j)`.
    #[inline]
    pub fn selected_position(&self, gate: usize, j: usize) -> usize {
        argmax(self.slot_weights(gate, j))
    }

    /// Global input index wired to slot `(gate, j)` in the hard forward pass.
    #[inline]
    pub fn selected_input(&self, gate: usize, j: usize) -> u32 {
        self.slot_candidates(gate, j)[self.selected_position(gate, j)]
    }

    #[inline]
    pub fn gate_table(&self, gate: usize) -> GateTruthTable {
        GateTruthTable::from_code(argmax(self.logits(gate)) as u8).expect("argmax over 16 logits")
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.candidates_per_slot;
        if self.gate_logits.len() != self.gates * NUM_GATE_FUNCTIONS {
            return Err(Error::structural("gate_logits shape mismatch"));
        }
        if self.candidates.len() != self.gates * ARITY * c || self.conn_weights.len() != self.candidates.len() {
            return Err(Error::structural("candidates / conn_weights shape mismatch"));
        }
        if c == 0 {
            return Err(Error::structural("empty candidate set"));
        }
        for slot in self.candidates.chunks(c) {
            for (i, &a) in slot.iter().enumerate() {
                if a as usize >= self.input_width {
                    return Err(Error::structural(format!(
                        "candidate {a} out of range for input width {}",
                        self.input_width
                    )));
                }
                if slot[..i].contains(&a) {
                    return Err(Error::structural(format!("duplicate candidate {a} within a slot")));
                }
            }
        }
        if self
            .gate_logits
            .iter()
            .chain(&self.conn_weights)
            .any(|v| !v.is_finite())
        {
            return Err(Error::structural("non-finite parameter"));
        }
        Ok(())
    }
}

/// A layered network of two-input gates with a GroupSum head.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkModel {
    pub input_width: usize,
    pub num_classes: usize,
    pub group_tau: f64,
    pub layers: Vec<LayerParams>,
}

impl NetworkModel {
    pub fn random<R: Rng + ?Sized>(
        input_width: usize,
        layer_widths: &[usize],
        num_classes: usize,
        group_tau: f64,
        candidates_per_slot: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(layer_widths.len());
        let mut width = input_width;
        for &g in layer_widths {
            layers.push(LayerParams::random(
                g,
                width,
                candidates_per_slot.min(width),
                init_std,
                rng,
            )?);
            width = g;
        }
        let model = NetworkModel {
            input_width,
            num_classes,
            group_tau,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(self.input_width, |l| l.gates)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::structural("network has no layers"));
        }
        if self.num_classes == 0 {
            return Err(Error::structural("num_classes must be positive"));
        }
        if !(self.group_tau > 0.0 && self.group_tau.is_finite()) {
            return Err(Error::structural("group_tau must be positive"));
        }
        let mut width = self.input_width;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.input_width != width {
                return Err(Error::structural(format!(
                    "layer {i} expects {} inputs but previous width is {width}",
                    layer.input_width
                )));
            }
            layer.validate()?;
            width = layer.gates;
        }
        if !width.is_multiple_of(self.num_classes) {
            return Err(Error::structural(format!(
                "last layer width {width} is not divisible by {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }
}
