//! Data-driven passes: activation profiling, greedy constant folding and
//! similarity merging.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{apply_plan, empty_plan, PassKind, PruneReport};
use crate::bits::BitMatrix;
use crate::circuit::{HardCircuit, Source};
use crate::error::{Error, Result};

/// Activations of every gate over a profiling set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationProfile {
    pub sample_count: usize,
    /// Per layer, gates × samples.
    pub activations: Vec<BitMatrix>,
    /// Per layer, number of samples on which each gate output 1.
    pub ones: Vec<Vec<usize>>,
}

impl ActivationProfile {
    fn check_shape(&self, circuit: &HardCircuit) -> Result<()> {
        let sizes: Vec<usize> = self.activations.iter().map(BitMatrix::rows).collect();
        if sizes != circuit.layer_sizes() {
            return Err(Error::structural("activation profile does not match the circuit"));
        }
        Ok(())
    }
}

/// Records every gate's output on each profiling sample (`samples × inputs`).
pub fn profile_activations(circuit: &HardCircuit, data: &BitMatrix) -> Result<ActivationProfile> {
    if data.cols() != circuit.input_width {
        return Err(Error::structural(format!(
            "profiling data has {} columns, circuit expects {}",
            data.cols(),
            circuit.input_width
        )));
    }
    let activations = circuit.eval_layers_t(&data.transpose())?;
    let ones = activations
        .iter()
        .map(|m| (0..m.rows()).map(|g| m.count_ones_row(g)).collect())
        .collect();
    Ok(ActivationProfile {
        sample_count: data.rows(),
        activations,
        ones,
    })
}

/// Replaces every gate whose majority output reaches `threshold` of the
/// profiling samples by that constant. Readers are not simplified further.
pub fn greedy_prune(
    circuit: &HardCircuit,
    profile: &ActivationProfile,
    threshold: f64,
) -> Result<(HardCircuit, PruneReport)> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::config(format!("greedy threshold {threshold} outside (0.5, 1]")));
    }
    profile.check_shape(circuit)?;
    let n = profile.sample_count;
    let mut plan = empty_plan(circuit);
    if n > 0 {
        for (l, ones) in profile.ones.iter().enumerate() {
            for (g, &k) in ones.iter().enumerate() {
                let (value, count) = if 2 * k >= n { (true, k) } else { (false, n - k) };
                if count as f64 / n as f64 >= threshold {
                    plan[l][g] = Some(Source::Const(value));
                }
            }
        }
    }
    Ok(apply_plan(circuit, &plan, PassKind::Greedy))
}

/// Pearson correlation of two binary vectors from their popcounts: `n`
/// samples, `ni` and `nj` ones, `nij` common ones. `None` when either
/// vector is constant.
pub fn phi_coefficient(n: usize, ni: usize, nj: usize, nij: usize) -> Option<f64> {
    if ni == 0 || ni == n || nj == 0 || nj == n {
        return None;
    }
    if nij == ni && nij == nj {
        return Some(1.0);
    }
    if nij == 0 && ni + nj == n {
        return Some(-1.0);
    }
    let (n, ni, nj, nij) = (n as f64, ni as f64, nj as f64, nij as f64);
    let num = n * nij - ni * nj;
    let den = libm::sqrt(ni * (n - ni)) * libm::sqrt(nj * (n - nj));
    Some(num / den)
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either input has zero variance or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}

/// Merges pairs of gates in the same layer whose activation vectors have
/// rank correlation at least `c`. Pairs are taken in descending
/// correlation (ties by index); the higher-indexed gate's readers move to
/// the lower-indexed one. A removed gate never absorbs another, and a gate
/// that absorbed one is never removed. Constant gates are skipped.
pub fn similarity_prune(
    circuit: &HardCircuit,
    profile: &ActivationProfile,
    c: f64,
) -> Result<(HardCircuit, PruneReport)> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::config(format!("similarity threshold {c} outside (0, 1]")));
    }
    profile.check_shape(circuit)?;
    let n = profile.sample_count;
    let mut plan = empty_plan(circuit);
    for (l, acts) in profile.activations.iter().enumerate() {
        let ones = &profile.ones[l];
        let gates = acts.rows();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..gates {
            if ones[i] == 0 || ones[i] == n {
                continue;
            }
            let ri = acts.row(i);
            for j in i + 1..gates {
                if ones[j] == 0 || ones[j] == n {
                    continue;
                }
                let nij: usize = ri
                    .iter()
                    .zip(acts.row(j))
                    .map(|(a, b)| (a & b).count_ones() as usize)
                    .sum();
                if let Some(rho) = phi_coefficient(n, ones[i], ones[j], nij) {
                    if rho >= c {
                        pairs.push((rho, i, j));
                    }
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut removed = vec![false; gates];
        let mut survivor = vec![false; gates];
        for (_, i, j) in pairs {
            if removed[i] || removed[j] || survivor[j] {
                continue;
            }
            plan[l][j] = Some(Source::Signal(i as u32));
            removed[j] = true;
            survivor[i] = true;
        }
    }
    Ok(apply_plan(circuit, &plan, PassKind::Similarity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::HardGate;
    use crate::gate::GateTruthTable as T;

    fn rank_rho(a: &[u8], b: &[u8]) -> Option<f64> {
        let f = |v: &[u8]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        spearman(&f(a), &f(b))
    }

    fn popcount_rho(a: &[u8], b: &[u8]) -> Option<f64> {
        let n = a.len();
        let ni = a.iter().filter(|&&v| v == 1).count();
        let nj = b.iter().filter(|&&v| v == 1).count();
        let nij = a.iter().zip(b).filter(|(&x, &y)| x == 1 && y == 1).count();
        phi_coefficient(n, ni, nj, nij)
    }

    #[test]
    fn anti_correlated_vectors() {
        let (a, b) = ([0, 1, 1, 0], [1, 0, 0, 1]);
        assert_eq!(popcount_rho(&a, &b), Some(-1.0));
        assert!((rank_rho(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_over_root_three() {
        let (a, b) = ([1, 1, 0, 0], [1, 0, 0, 0]);
        let expect = 1.0 / libm::sqrt(3.0);
        assert!((popcount_rho(&a, &b).unwrap() - expect).abs() < 1e-12);
        assert!((rank_rho(&a, &b).unwrap() - expect).abs() < 1e-12);
        assert_eq!(popcount_rho(&a, &[1, 1, 1, 1]), None);
    }

    fn circuit_with_profile(gates: Vec<HardGate>) -> (HardCircuit, BitMatrix) {
        let n = gates.len();
        let c = HardCircuit {
            input_width: 3,
            num_classes: 1,
            group_tau: 1.0,
            layers: vec![gates],
            outputs: (0..n as u32).map(Source::Signal).collect(),
        };
        let x = BitMatrix::from_fn(8, 3, |r, col| (r >> col) & 1 == 1);
        (c, x)
    }

    #[test]
    fn similarity_merges_identical_and_skips_anticorrelated() {
        let (c, x) = circuit_with_profile(vec![
            HardGate::new(T::AND, 0, 1),
            HardGate::new(T::NAND, 0, 1),
            HardGate::new(T::AND, 1, 0),
            HardGate::new(T::A, 2, 2),
        ]);
        let prof = profile_activations(&c, &x).unwrap();
        let (p, r) = similarity_prune(&c, &prof, 1.0).unwrap();
        assert_eq!(p.gate_count(), 3);
        assert_eq!(r.reroutes[0].gate, 2);
        assert_eq!(p.eval(&x).unwrap(), c.eval(&x).unwrap());
        assert!(similarity_prune(&c, &prof, 0.0).is_err());
        assert!(similarity_prune(&c, &prof, 1.5).is_err());
    }

    #[test]
    fn similarity_threshold_boundary() {
        // on 4 samples (x0,x1): AND = 0001, A(x1) = 0011 -> rho = 1/sqrt(3)
        let (c, _) = circuit_with_profile(vec![HardGate::new(T::AND, 0, 1), HardGate::new(T::A, 1, 1)]);
        let x = BitMatrix::from_fn(4, 3, |r, col| col < 2 && (r >> col) & 1 == 1);
        let prof = profile_activations(&c, &x).unwrap();
        assert_eq!(similarity_prune(&c, &prof, 0.577).unwrap().1.removed(), 1);
        assert_eq!(similarity_prune(&c, &prof, 0.578).unwrap().1.removed(), 0);
    }

    #[test]
    fn greedy_thresholds() {
        let (c, x) = circuit_with_profile(vec![
            HardGate::new(T::TRUE, 0, 0),
            HardGate::new(T::OR, 0, 1),
            HardGate::new(T::XOR, 0, 1),
        ]);
        let prof = profile_activations(&c, &x).unwrap();
        assert_eq!(prof.ones[0], vec![8, 6, 4]);
        let (p, r) = greedy_prune(&c, &prof, 1.0).unwrap();
        assert_eq!(r.removed(), 1);
        assert_eq!(p.outputs[0], Source::Const(true));
        assert_eq!(p.eval(&x).unwrap(), c.eval(&x).unwrap());
        // OR is 1 on 6/8 = 75%
        assert_eq!(greedy_prune(&c, &prof, 0.75).unwrap().1.removed(), 2);
        assert_eq!(greedy_prune(&c, &prof, 0.76).unwrap().1.removed(), 1);
        assert!(greedy_prune(&c, &prof, 0.5).is_err());
    }

    #[test]
    fn greedy_ninety_six_percent_is_folded() {
        // one gate reading a single input that is 1 on 96 of 100 samples
        let c = HardCircuit {
            input_width: 1,
            num_classes: 1,
            group_tau: 1.0,
            layers: vec![vec![HardGate::new(T::A, 0, 0), HardGate::new(T::NOT_A, 0, 0)]],
            outputs: vec![Source::Signal(0), Source::Signal(1)],
        };
        let x = BitMatrix::from_fn(100, 1, |r, _| r >= 4);
        let prof = profile_activations(&c, &x).unwrap();
        let (p, _) = greedy_prune(&c, &prof, 0.95).unwrap();
        assert_eq!(p.outputs, vec![Source::Const(true), Source::Const(false)]);
        // 60% ones stays
        let x60 = BitMatrix::from_fn(100, 1, |r, _| r >= 40);
        let prof60 = profile_activations(&c, &x60).unwrap();
        assert_eq!(greedy_prune(&c, &prof60, 0.95).unwrap().1.removed(), 0);
    }
}
