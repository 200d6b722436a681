//! Exact Boolean functions of gates over the primary inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{HardCircuit, Source};
use crate::error::{Error, Result};
use crate::gate::GateTruthTable;

/// Largest support for which a cone's truth table is materialized.
pub const DEFAULT_SUPPORT_LIMIT: usize = 24;

/// A gate's function over the primary inputs it genuinely depends on.
///
/// `support` is sorted; bit `m` of `table` is the output when
/// `support[i]` takes the value of bit `i` of `m`. Non-essential variables
/// are always removed, so two cones describe the same function iff they
/// are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConeFunction {
    pub support: Vec<u32>,
    pub table: Vec<u64>,
}

impl ConeFunction {
    pub fn constant(value: bool) -> Self {
        ConeFunction {
            support: Vec::new(),
            table: vec![value as u64],
        }
    }

    pub fn variable(input: u32) -> Self {
        ConeFunction {
            support: vec![input],
            table: vec![0b10],
        }
    }

    pub fn as_constant(&self) -> Option<bool> {
        self.support.is_empty().then(|| self.table[0] & 1 == 1)
    }

    #[inline]
    pub fn bit(&self, m: usize) -> bool {
        (self.table[m / 64] >> (m % 64)) & 1 == 1
    }

    /// Bucket key: the sum of the support indices.
    pub fn support_hash(&self) -> u64 {
        self.support.iter().map(|&v| v as u64).sum()
    }

    /// Evaluates the function on a full primary-input assignment.
    pub fn eval(&self, input: impl Fn(u32) -> bool) -> bool {
        let m = self
            .support
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &v)| acc | (input(v) as usize) << i);
        self.bit(m)
    }

    fn from_bits(support: Vec<u32>, bits: impl Fn(usize) -> bool) -> Self {
        let n = 1usize << support.len();
        let mut table = vec![0u64; n.div_ceil(64)];
        for m in 0..n {
            if bits(m) {
                table[m / 64] |= 1 << (m % 64);
            }
        }
        ConeFunction { support, table }
    }

    /// Drops every variable the function does not depend on.
    fn reduce(mut self) -> Self {
        let mut t = self.support.len();
        while t > 0 {
            t -= 1;
            let n = 1usize << self.support.len();
            let stride = 1usize << t;
            let essential = (0..n)
                .filter(|m| m & stride == 0)
                .any(|m| self.bit(m) != self.bit(m | stride));
            if !essential {
                let low = stride - 1;
                let mut support = self.support.clone();
                support.remove(t);
                let old = &self;
                self = ConeFunction::from_bits(support, |m| old.bit((m & low) | ((m & !low) << 1)));
            }
        }
        self
    }

    /// Function of `table(a, b)`, support-reduced. Fails when the union of
    /// the operand supports exceeds `limit`.
    pub fn compose(table: GateTruthTable, a: &ConeFunction, b: &ConeFunction, limit: usize) -> Option<Self> {
        let mut support: Vec<u32> = a.support.iter().chain(&b.support).copied().collect();
        support.sort_unstable();
        support.dedup();
        if support.len() > limit {
            return None;
        }
        let position = |v: &u32| support.binary_search(v).expect("operand var in union");
        let pa: Vec<usize> = a.support.iter().map(position).collect();
        let pb: Vec<usize> = b.support.iter().map(position).collect();
        let gather = |m: usize, pos: &[usize]| pos.iter().enumerate().fold(0, |acc, (k, &p)| acc | ((m >> p) & 1) << k);
        let f = ConeFunction::from_bits(support, |m| table.eval(a.bit(gather(m, &pa)), b.bit(gather(m, &pb))));
        Some(f.reduce())
    }
}

fn source_cone(src: Source, prev: Option<&[ConeFunction]>) -> ConeFunction {
    match (src, prev) {
        (Source::Const(v), _) => ConeFunction::constant(v),
        (Source::Signal(i), None) => ConeFunction::variable(i),
        (Source::Signal(i), Some(p)) => p[i as usize].clone(),
    }
}

/// Cones of every gate, layer by layer.
pub fn layer_cones(circuit: &HardCircuit, limit: usize) -> Result<Vec<Vec<ConeFunction>>> {
    circuit.validate()?;
    let mut all: Vec<Vec<ConeFunction>> = Vec::with_capacity(circuit.layers.len());
    for (l, layer) in circuit.layers.iter().enumerate() {
        let prev = all.last().map(Vec::as_slice);
        let mut cones = Vec::with_capacity(layer.len());
        for (g, gate) in layer.iter().enumerate() {
            let a = source_cone(gate.inputs[0], prev);
            let b = source_cone(gate.inputs[1], prev);
            let f = ConeFunction::compose(gate.table, &a, &b, limit).ok_or_else(|| {
                let mut s: Vec<u32> = a.support.iter().chain(&b.support).copied().collect();
                s.sort_unstable();
                s.dedup();
                Error::OversizedCone {
                    layer: l,
                    gate: g,
                    support: s.len(),
                    limit,
                }
            })?;
            cones.push(f);
        }
        all.push(cones);
    }
    Ok(all)
}

/// Exact function of one gate over the primary inputs.
pub fn cone_of(circuit: &HardCircuit, layer: usize, gate: usize, limit: usize) -> Result<ConeFunction> {
    if layer >= circuit.layers.len() || gate >= circuit.layers[layer].len() {
        return Err(Error::structural("no such gate"));
    }
    // only the transitive fan-in matters
    let mut needed: Vec<Vec<bool>> = circuit.layers.iter().map(|l| vec![false; l.len()]).collect();
    needed[layer][gate] = true;
    for l in (1..=layer).rev() {
        for g in 0..circuit.layers[l].len() {
            if needed[l][g] {
                for s in circuit.layers[l][g].inputs {
                    if let Source::Signal(i) = s {
                        needed[l - 1][i as usize] = true;
                    }
                }
            }
        }
    }
    let mut prev: Vec<ConeFunction> = Vec::new();
    for l in 0..=layer {
        let mut cur = vec![ConeFunction::constant(false); circuit.layers[l].len()];
        for (g, gate_def) in circuit.layers[l].iter().enumerate() {
            if !needed[l][g] {
                continue;
            }
            let p = (l > 0).then_some(prev.as_slice());
            let a = source_cone(gate_def.inputs[0], p);
            let b = source_cone(gate_def.inputs[1], p);
            cur[g] = ConeFunction::compose(gate_def.table, &a, &b, limit).ok_or(Error::OversizedCone {
                layer: l,
                gate: g,
                support: limit + 1,
                limit,
            })?;
        }
        prev = cur;
    }
    Ok(prev.swap_remove(gate))
}
