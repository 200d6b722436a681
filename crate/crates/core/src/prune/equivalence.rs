use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::cone::{layer_cones, DEFAULT_SUPPORT_LIMIT};
use super::{apply_plan, empty_plan, PassKind, PruneReport};
use crate::circuit::{HardCircuit, Source};
use crate::error::Result;

/// Merges gates of the same layer that compute the same Boolean function of
/// the primary inputs, keeping the lowest-indexed one, and ties constant
/// gates to constant wires. The circuit's output is unchanged on every
/// input. Fails without touching anything if a cone is too wide to
/// enumerate.
pub fn logic_equivalence_prune(circuit: &HardCircuit) -> Result<(HardCircuit, PruneReport)> {
    logic_equivalence_prune_with_limit(circuit, DEFAULT_SUPPORT_LIMIT)
}

pub fn logic_equivalence_prune_with_limit(
    circuit: &HardCircuit,
    support_limit: usize,
) -> Result<(HardCircuit, PruneReport)> {
    let cones = layer_cones(circuit, support_limit)?;
    let mut plan = empty_plan(circuit);
    for (l, layer_cones) in cones.iter().enumerate() {
        let mut buckets: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (g, f) in layer_cones.iter().enumerate() {
            if let Some(v) = f.as_constant() {
                plan[l][g] = Some(Source::Const(v));
                continue;
            }
            let reps = buckets.entry(f.support_hash()).or_default();
            match reps.iter().find(|&&r| layer_cones[r] == *f) {
                Some(&r) => plan[l][g] = Some(Source::Signal(r as u32)),
                None => reps.push(g),
            }
        }
    }
    Ok(apply_plan(circuit, &plan, PassKind::LogicEquiv))
}
