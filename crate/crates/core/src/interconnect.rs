//! Candidate-set maintenance for the learnable interconnect.
//!
//! Each gate input slot keeps `C` candidate connections with a weight each.
//! Every `beta` steps the `R` weakest candidates of every slot are swapped
//! for new ones, drawn either uniformly or by the connection gradient
//! evaluated against every input of the layer. Newcomers inherit the
//! smallest weight that survived, so the slot's argmax never changes
//! because of a refresh.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::model::{LayerParams, ARITY};

/// One `(gate, input slot)` pair of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRef {
    pub gate: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotReplacement {
    pub gate: usize,
    pub slot: usize,
    /// Candidate positions (`0..C`) that were overwritten.
    pub positions: Vec<usize>,
    pub old: Vec<u32>,
    pub new: Vec<u32>,
    pub w_floor: f64,
}

/// Record of one refresh of a layer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefreshEvent {
    pub layer: usize,
    pub step: u64,
    pub slots: Vec<SlotReplacement>,
}

/// Source of replacement candidates.
pub trait CandidateSampler {
    /// Appends `count` distinct indices from `[0, input_width)` that are not
    /// in `exclude` to `out`.
    fn sample(
        &mut self,
        slot: SlotRef,
        count: usize,
        input_width: usize,
        exclude: &[u32],
        out: &mut Vec<u32>,
    ) -> Result<()>;
}

fn check_pool(count: usize, input_width: usize, exclude: &[u32]) -> Result<usize> {
    let excluded = exclude.iter().filter(|&&e| (e as usize) < input_width).count();
    let pool = input_width.saturating_sub(excluded);
    if pool < count {
        return Err(Error::structural(format!(
            "cannot draw {count} new candidates from {pool} available inputs"
        )));
    }
    Ok(pool)
}

/// `count` distinct indices uniform over `[0, input_width) \ exclude`.
pub fn sample_random<R: Rng + ?Sized>(
    count: usize,
    input_width: usize,
    exclude: &[u32],
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    sample_random_into(count, input_width, exclude, rng, &mut out)?;
    Ok(out)
}

fn sample_random_into<R: Rng + ?Sized>(
    count: usize,
    input_width: usize,
    exclude: &[u32],
    rng: &mut R,
    out: &mut Vec<u32>,
) -> Result<()> {
    let pool = check_pool(count, input_width, exclude)?;
    if count == 0 {
        return Ok(());
    }
    let mut excluded: Vec<u32> = exclude
        .iter()
        .copied()
        .filter(|&e| (e as usize) < input_width)
        .collect();
    excluded.sort_unstable();
    excluded.dedup();
    // draw ranks within the pool, then map rank -> index by skipping the
    // excluded entries that precede it
    for rank in rand::seq::index::sample(rng, pool, count).iter() {
        let mut idx = rank as u32;
        for &e in &excluded {
            if e <= idx {
                idx += 1;
            } else {
                break;
            }
        }
        out.push(idx);
    }
    Ok(())
}

pub struct RandomSampler<R> {
    pub rng: R,
}

impl<R: Rng> CandidateSampler for RandomSampler<R> {
    fn sample(
        &mut self,
        _slot: SlotRef,
        count: usize,
        input_width: usize,
        exclude: &[u32],
        out: &mut Vec<u32>,
    ) -> Result<()> {
        sample_random_into(count, input_width, exclude, &mut self.rng, out)
    }
}

/// The most recent mini-batch seen by a layer: its inputs (signals ×
/// samples) and the upstream gradient at every gate input slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchContext {
    pub inputs_t: BitMatrix,
    /// Flat `G × ARITY × B`, so one slot's gradients are contiguous.
    pub dy: Vec<f64>,
}

impl BatchContext {
    pub fn batch_size(&self) -> usize {
        self.inputs_t.cols()
    }

    pub fn slot_dy(&self, slot: SlotRef) -> &[f64] {
        let b = self.batch_size();
        let o = (slot.gate * ARITY + slot.slot) * b;
        &self.dy[o..o + b]
    }

    /// Connection gradient `sum_b (2 x[b, input] - 1) * dy[b, slot]`.
    #[inline]
    pub fn connection_gradient(&self, slot_dy: &[f64], input: usize, dy_total: f64) -> f64 {
        // sum over x=1 minus sum over x=0 == 2 * sum(x=1) - total
        let mut on = 0.0;
        for (wi, &word) in self.inputs_t.row(input).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                on += slot_dy[wi * 64 + w.trailing_zeros() as usize];
                w &= w - 1;
            }
        }
        2.0 * on - dy_total
    }
}

/// The `count` inputs with the most negative connection gradient for
/// `slot`, skipping `exclude`; ties go to the lowest index.
///
/// Scans all inputs once while keeping only the current best `count`
/// entries, so extra memory does not depend on the input width.
pub fn sample_gradient_guided(count: usize, slot: SlotRef, ctx: &BatchContext, exclude: &[u32]) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    gradient_guided_into(count, slot, ctx, exclude, &mut out)?;
    Ok(out)
}

fn gradient_guided_into(
    count: usize,
    slot: SlotRef,
    ctx: &BatchContext,
    exclude: &[u32],
    out: &mut Vec<u32>,
) -> Result<()> {
    let input_width = ctx.inputs_t.rows();
    check_pool(count, input_width, exclude)?;
    let b = ctx.batch_size();
    if (slot.gate * ARITY + slot.slot + 1) * b > ctx.dy.len() {
        return Err(Error::structural("batch context has no gradient for this slot"));
    }
    if count == 0 {
        return Ok(());
    }
    let dy = ctx.slot_dy(slot);
    let total: f64 = dy.iter().sum();
    // sorted ascending by (gradient, index)
    let mut best: Vec<(f64, u32)> = Vec::with_capacity(count);
    for i in 0..input_width {
        if exclude.contains(&(i as u32)) {
            continue;
        }
        let g = ctx.connection_gradient(dy, i, total);
        if best.len() == count {
            // later indices never win a tie
            if g >= best[count - 1].0 {
                continue;
            }
            best.pop();
        }
        let pos = best.partition_point(|&(v, _)| v <= g);
        best.insert(pos, (g, i as u32));
    }
    out.extend(best.iter().map(|&(_, i)| i));
    Ok(())
}

/// Gradient-guided sampler over the last batch of a layer.
pub struct GradientGuidedSampler<'a> {
    pub ctx: Option<&'a BatchContext>,
}

impl CandidateSampler for GradientGuidedSampler<'_> {
    fn sample(
        &mut self,
        slot: SlotRef,
        count: usize,
        input_width: usize,
        exclude: &[u32],
        out: &mut Vec<u32>,
    ) -> Result<()> {
        let ctx = self
            .ctx
            .ok_or_else(|| Error::Usage("gradient-guided sampling needs a batch context".into()))?;
        if ctx.inputs_t.rows() != input_width {
            return Err(Error::structural("batch context width differs from layer input width"));
        }
        gradient_guided_into(count, slot, ctx, exclude, out)
    }
}

/// Replaces the `replace` lowest-weighted candidates of every slot of
/// `layer` with sampler output. Each newcomer gets the smallest weight
/// among the kept candidates of its slot (zero when the whole slot is
/// replaced). Ties among the weakest go to the lowest position.
pub fn refresh_candidates(
    layer: &mut LayerParams,
    layer_index: usize,
    step: u64,
    sampler: &mut dyn CandidateSampler,
    replace: usize,
) -> Result<RefreshEvent> {
    if layer.frozen_interconnect {
        return Err(Error::Usage("cannot refresh a frozen interconnect".into()));
    }
    let c = layer.candidates_per_slot;
    if replace > c {
        return Err(Error::config(format!(
            "replacement budget {replace} exceeds {c} candidates"
        )));
    }
    let mut event = RefreshEvent {
        layer: layer_index,
        step,
        slots: Vec::new(),
    };
    if replace == 0 {
        return Ok(event);
    }
    let mut order: Vec<usize> = Vec::with_capacity(c);
    let mut kept: Vec<u32> = Vec::with_capacity(c);
    let mut fresh: Vec<u32> = Vec::with_capacity(replace);
    for gate in 0..layer.gates {
        for slot in 0..ARITY {
            let off = layer.slot_offset(gate, slot);
            let weights = &layer.conn_weights[off..off + c];
            order.clear();
            order.extend(0..c);
            order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
            let (weak, strong) = order.split_at(replace);
            let w_floor = strong.iter().map(|&p| weights[p]).fold(f64::INFINITY, f64::min);
            let w_floor = if strong.is_empty() { 0.0 } else { w_floor };
            kept.clear();
            kept.extend(strong.iter().map(|&p| layer.candidates[off + p]));
            fresh.clear();
            sampler.sample(SlotRef { gate, slot }, replace, layer.input_width, &kept, &mut fresh)?;
            let mut positions: Vec<usize> = weak.to_vec();
            positions.sort_unstable();
            let old = positions.iter().map(|&p| layer.candidates[off + p]).collect();
            for (&p, &n) in positions.iter().zip(&fresh) {
                layer.candidates[off + p] = n;
                layer.conn_weights[off + p] = w_floor;
            }
            event.slots.push(SlotReplacement {
                gate,
                slot,
                positions,
                old,
                new: fresh.clone(),
                w_floor,
            });
        }
    }
    Ok(event)
}
