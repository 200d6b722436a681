//! Compression passes over hardened circuits.
//!
//! Every pass builds an immutable rewrite plan (which gates disappear and
//! what their readers read instead), applies it in one go, and then drops
//! every gate left without readers. Gate indices in reports always refer
//! to the circuit the pass received.

mod cone;
mod equivalence;
mod profile;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use cone::{cone_of, layer_cones, ConeFunction, DEFAULT_SUPPORT_LIMIT};
pub use equivalence::{logic_equivalence_prune, logic_equivalence_prune_with_limit};
pub use profile::{greedy_prune, phi_coefficient, profile_activations, similarity_prune, spearman, ActivationProfile};

use crate::circuit::{HardCircuit, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PassKind {
    Trivial,
    LogicEquiv,
    Greedy,
    Similarity,
}

impl PassKind {
    pub fn name(self) -> &'static str {
        match self {
            PassKind::Trivial => "trivial",
            PassKind::LogicEquiv => "logic-equiv",
            PassKind::Greedy => "greedy",
            PassKind::Similarity => "similarity",
        }
    }
}

impl core::str::FromStr for PassKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trivial" => Ok(PassKind::Trivial),
            "logic-equiv" | "logic_equiv" | "equivalence" => Ok(PassKind::LogicEquiv),
            "greedy" => Ok(PassKind::Greedy),
            "similarity" => Ok(PassKind::Similarity),
            other => Err(crate::Error::Config(alloc::format!("unknown pruning pass '{other}'"))),
        }
    }
}

/// What a removed gate's readers were redirected to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RerouteTarget {
    /// Another gate of the same layer (index in the input circuit).
    Gate(usize),
    Const(bool),
    /// The gate had no readers left.
    Unused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reroute {
    pub layer: usize,
    pub gate: usize,
    pub target: RerouteTarget,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PruneReport {
    pub pass: PassKind,
    pub gates_before: Vec<usize>,
    pub gates_after: Vec<usize>,
    pub reroutes: Vec<Reroute>,
    pub accuracy_before: Option<f64>,
    pub accuracy_after: Option<f64>,
    pub split: Option<String>,
}

impl PruneReport {
    pub fn total_before(&self) -> usize {
        self.gates_before.iter().sum()
    }

    pub fn total_after(&self) -> usize {
        self.gates_after.iter().sum()
    }

    pub fn removed(&self) -> usize {
        self.total_before() - self.total_after()
    }

    pub fn with_accuracy(mut self, split: impl Into<String>, before: f64, after: f64) -> Self {
        self.split = Some(split.into());
        self.accuracy_before = Some(before);
        self.accuracy_after = Some(after);
        self
    }
}

/// Per layer, the replacement for each gate: `None` keeps it,
/// `Some(Signal(s))` merges it into gate `s` of the same layer,
/// `Some(Const(v))` ties its readers to a constant.
pub(crate) type Plan = Vec<Vec<Option<Source>>>;

pub(crate) fn empty_plan(circuit: &HardCircuit) -> Plan {
    circuit.layers.iter().map(|l| vec![None; l.len()]).collect()
}

fn resolve(plan_layer: &[Option<Source>], src: Source) -> Source {
    let mut cur = src;
    for _ in 0..=plan_layer.len() {
        match cur {
            Source::Signal(i) => match plan_layer[i as usize] {
                Some(next) if next != cur => cur = next,
                _ => return cur,
            },
            Source::Const(_) => return cur,
        }
    }
    panic!("cyclic rewrite plan");
}

/// Applies `plan`, removes every gate without readers and compacts indices.
pub(crate) fn apply_plan(circuit: &HardCircuit, plan: &Plan, pass: PassKind) -> (HardCircuit, PruneReport) {
    let depth = circuit.layers.len();
    let mut layers = circuit.layers.clone();
    let mut outputs = circuit.outputs.clone();

    // redirect readers of replaced gates
    for l in 0..depth {
        if l + 1 < depth {
            for src in layers[l + 1].iter_mut().flat_map(|g| g.inputs.iter_mut()) {
                *src = resolve(&plan[l], *src);
            }
        } else {
            for src in outputs.iter_mut() {
                *src = resolve(&plan[l], *src);
            }
        }
    }

    // liveness from the head back to the inputs
    let mut live: Vec<Vec<bool>> = layers.iter().map(|l| vec![false; l.len()]).collect();
    if depth > 0 {
        for s in &outputs {
            if let Source::Signal(i) = s {
                live[depth - 1][*i as usize] = true;
            }
        }
        for l in (1..depth).rev() {
            for (g, gate) in layers[l].iter().enumerate() {
                if live[l][g] {
                    for s in &gate.inputs {
                        if let Source::Signal(i) = s {
                            live[l - 1][*i as usize] = true;
                        }
                    }
                }
            }
        }
    }

    // compaction
    let mut remap: Vec<Vec<Option<u32>>> = Vec::with_capacity(depth);
    let mut reroutes = Vec::new();
    for l in 0..depth {
        let mut next = 0u32;
        let mut map = vec![None; layers[l].len()];
        for g in 0..layers[l].len() {
            if live[l][g] {
                map[g] = Some(next);
                next += 1;
            } else {
                let target = match plan[l][g] {
                    Some(Source::Signal(s)) => RerouteTarget::Gate(s as usize),
                    Some(Source::Const(v)) => RerouteTarget::Const(v),
                    None => RerouteTarget::Unused,
                };
                reroutes.push(Reroute {
                    layer: l,
                    gate: g,
                    target,
                });
            }
        }
        remap.push(map);
    }
    let fix = |src: Source, map: &[Option<u32>]| match src {
        Source::Signal(i) => Source::Signal(map[i as usize].expect("live gate reads a live signal")),
        c => c,
    };
    let mut new_layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut kept = Vec::new();
        for (g, gate) in layers[l].iter().enumerate() {
            if !live[l][g] {
                continue;
            }
            let mut gate = *gate;
            if l > 0 {
                gate.inputs = gate.inputs.map(|s| fix(s, &remap[l - 1]));
            }
            kept.push(gate);
        }
        new_layers.push(kept);
    }
    if depth > 0 {
        outputs = outputs.into_iter().map(|s| fix(s, &remap[depth - 1])).collect();
    }
    let pruned = HardCircuit {
        input_width: circuit.input_width,
        num_classes: circuit.num_classes,
        group_tau: circuit.group_tau,
        layers: new_layers,
        outputs,
    };
    let report = PruneReport {
        pass,
        gates_before: circuit.layer_sizes(),
        gates_after: pruned.layer_sizes(),
        reroutes,
        accuracy_before: None,
        accuracy_after: None,
        split: None,
    };
    (pruned, report)
}

/// Removes gates whose output is never read, repeatedly, until none are left.
pub fn trivial_prune(circuit: &HardCircuit) -> (HardCircuit, PruneReport) {
    apply_plan(circuit, &empty_plan(circuit), PassKind::Trivial)
}
