//! In-memory datasets, seeded splits and synthetic Boolean tasks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitMatrix;
use crate::circuit::{HardCircuit, HardGate, Source};
use crate::encoding::ThermometerEncoder;
use crate::error::{Error, Result};
use crate::gate::GateTruthTable;
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl core::fmt::Display for Split {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::config(format!("unknown split '{other}'"))),
        }
    }
}

/// Raw (unnormalized) features with labels and a split tag per sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub features: RealMatrix,
    pub labels: Vec<u32>,
    pub num_classes: usize,
    pub splits: Vec<Split>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        features: RealMatrix,
        labels: Vec<u32>,
        num_classes: usize,
        splits: Vec<Split>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let d = Dataset {
            features,
            labels,
            num_classes,
            splits,
            provenance: provenance.into(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.labels.len() != n || self.splits.len() != n {
            return Err(Error::structural(format!(
                "{} samples but {} labels and {} split tags",
                n,
                self.labels.len(),
                self.splits.len()
            )));
        }
        if let Some((i, &y)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y as usize >= self.num_classes)
        {
            return Err(Error::structural(format!(
                "sample {i} has label {y} outside 0..{}",
                self.num_classes
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Sample indices of `split`, ascending.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|&&s| s == split).count()
    }

    /// Features and labels of one split, in dataset order.
    pub fn split(&self, split: Split) -> (RealMatrix, Vec<u32>) {
        let idx = self.indices(split);
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        (self.features.select_rows(&idx), labels)
    }

    /// Moves `count` samples, drawn uniformly with a seeded RNG, from split
    /// `from` to split `to`. The same seed always moves the same samples.
    pub fn carve(&mut self, from: Split, to: Split, count: usize, seed: u64) -> Result<()> {
        let pool = self.indices(from);
        if count > pool.len() {
            return Err(Error::config(format!(
                "cannot move {count} samples out of {} {from} samples",
                pool.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in sample(&mut rng, pool.len(), count) {
            self.splits[pool[k]] = to;
        }
        Ok(())
    }

    /// Keeps only the samples selected by `keep`, preserving order.
    pub fn retain(&mut self, mut keep: impl FnMut(usize, Split) -> bool) {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i, self.splits[i])).collect();
        self.features = self.features.select_rows(&idx);
        self.labels = idx.iter().map(|&i| self.labels[i]).collect();
        self.splits = idx.iter().map(|&i| self.splits[i]).collect();
    }
}

/// Ground-truth rule of a synthetic task. Features are uniform in `[0, 1)`
/// and binarize at 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Label is the XOR of `bits` distinct randomly chosen features.
    Parity { bits: usize },
    /// Label is 1 iff strictly more than half of the features are set.
    ThresholdVote,
    /// Label is the prediction of a random two-class circuit.
    RandomCircuit { layers: usize, width: usize },
}

#[derive(Debug, Clone)]
pub struct SynthTask {
    pub dataset: Dataset,
    /// One threshold (0.5) per feature.
    pub encoder: ThermometerEncoder,
    /// Circuit over the encoded features whose predictions are the labels.
    pub teacher: HardCircuit,
}

fn parity_teacher(input_width: usize, chosen: &[u32]) -> HardCircuit {
    let mut layers: Vec<Vec<HardGate>> = Vec::new();
    let mut signals: Vec<u32> = chosen.to_vec();
    while signals.len() > 2 {
        let mut layer = Vec::new();
        for pair in signals.chunks(2) {
            match *pair {
                [a, b] => layer.push(HardGate::new(GateTruthTable::XOR, a, b)),
                [a] => layer.push(HardGate::new(GateTruthTable::A, a, a)),
                _ => unreachable!(),
            }
        }
        signals = (0..layer.len() as u32).collect();
        layers.push(layer);
    }
    let head = match *signals.as_slice() {
        [a, b] => vec![
            HardGate::new(GateTruthTable::XNOR, a, b),
            HardGate::new(GateTruthTable::XOR, a, b),
        ],
        [a] => vec![
            HardGate::new(GateTruthTable::NOT_A, a, a),
            HardGate::new(GateTruthTable::A, a, a),
        ],
        _ => unreachable!(),
    };
    layers.push(head);
    HardCircuit {
        input_width,
        num_classes: 2,
        group_tau: 1.0,
        layers,
        outputs: vec![Source::Signal(0), Source::Signal(1)],
    }
}

fn vote_teacher(input_width: usize) -> HardCircuit {
    let n = input_width as u32;
    let layer = (0..n)
        .map(|i| HardGate::new(GateTruthTable::NOT_A, i, i))
        .chain((0..n).map(|i| HardGate::new(GateTruthTable::A, i, i)))
        .collect();
    HardCircuit {
        input_width,
        num_classes: 2,
        group_tau: 1.0,
        layers: vec![layer],
        outputs: (0..2 * n).map(Source::Signal).collect(),
    }
}

fn random_teacher(input_width: usize, depth: usize, width: usize, rng: &mut ChaCha8Rng) -> HardCircuit {
    // only non-constant tables so the labels depend on the inputs
    let tables: Vec<GateTruthTable> = GateTruthTable::all().filter(|t| t.is_constant().is_none()).collect();
    let width = width.max(2) & !1;
    let mut layers = Vec::with_capacity(depth);
    let mut prev = input_width;
    for _ in 0..depth.max(1) {
        let layer = (0..width)
            .map(|_| {
                let t = tables[rng.random_range(0..tables.len())];
                HardGate::new(t, rng.random_range(0..prev) as u32, rng.random_range(0..prev) as u32)
            })
            .collect();
        layers.push(layer);
        prev = width;
    }
    HardCircuit {
        input_width,
        num_classes: 2,
        group_tau: 1.0,
        layers,
        outputs: (0..width as u32).map(Source::Signal).collect(),
    }
}

/// Generates a seeded synthetic classification task. A fifth of the samples
/// is tagged test and a tenth validation.
pub fn synth_boolean_task(kind: SynthKind, n_features: usize, n_samples: usize, seed: u64) -> Result<SynthTask> {
    if n_features == 0 || n_samples == 0 {
        return Err(Error::config(
            "synthetic task needs at least one feature and one sample",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (teacher, name) = match kind {
        SynthKind::Parity { bits } => {
            if bits == 0 || bits > n_features {
                return Err(Error::config(format!("parity over {bits} of {n_features} features")));
            }
            let mut chosen: Vec<u32> = sample(&mut rng, n_features, bits).iter().map(|i| i as u32).collect();
            chosen.sort_unstable();
            (
                parity_teacher(n_features, &chosen),
                format!("synthetic parity of {chosen:?}"),
            )
        }
        SynthKind::ThresholdVote => (vote_teacher(n_features), String::from("synthetic threshold vote")),
        SynthKind::RandomCircuit { layers, width } => (
            random_teacher(n_features, layers, width, &mut rng),
            format!("synthetic random circuit {layers}x{width}"),
        ),
    };
    let data: Vec<f64> = (0..n_samples * n_features).map(|_| rng.random::<f64>()).collect();
    let features = RealMatrix::from_vec(n_samples, n_features, data)?;
    let encoder = ThermometerEncoder::from_thresholds(vec![vec![0.5]; n_features])?;
    let bits: BitMatrix = encoder.encode(&features)?;
    let labels: Vec<u32> = teacher.predict(&bits)?.into_iter().map(|c| c as u32).collect();
    let mut dataset = Dataset::new(
        features,
        labels,
        2,
        vec![Split::Train; n_samples],
        format!("{name}, {n_features} features, {n_samples} samples, seed {seed}"),
    )?;
    let split_seed = rng.random::<u64>();
    dataset.carve(Split::Train, Split::Test, n_samples / 5, split_seed)?;
    dataset.carve(Split::Train, Split::Val, n_samples / 10, split_seed ^ 1)?;
    Ok(SynthTask {
        dataset,
        encoder,
        teacher,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carve_is_seeded_and_partitions() {
        let f = RealMatrix::zeros(100, 1);
        let mut a = Dataset::new(f.clone(), vec![0; 100], 1, vec![Split::Train; 100], "t").unwrap();
        let mut b = a.clone();
        a.carve(Split::Train, Split::Val, 30, 7).unwrap();
        b.carve(Split::Train, Split::Val, 30, 7).unwrap();
        assert_eq!(a.splits, b.splits);
        assert_eq!(a.count(Split::Val), 30);
        assert_eq!(a.count(Split::Train), 70);
        assert!(a.carve(Split::Val, Split::Test, 31, 0).is_err());
    }

    #[test]
    fn labels_checked() {
        let f = RealMatrix::zeros(2, 1);
        assert!(Dataset::new(f.clone(), vec![0, 3], 3, vec![Split::Train; 2], "").is_err());
        assert!(Dataset::new(f, vec![0], 3, vec![Split::Train; 2], "").is_err());
    }

    #[test]
    fn teachers_reproduce_their_rules() {
        let t = synth_boolean_task(SynthKind::Parity { bits: 3 }, 6, 400, 1).unwrap();
        let bits = t.encoder.encode(&t.dataset.features).unwrap();
        let chosen: Vec<usize> = t
            .dataset
            .provenance
            .split(['[', ']'])
            .nth(1)
            .unwrap()
            .split(", ")
            .map(|s| s.parse().unwrap())
            .collect();
        for i in 0..t.dataset.len() {
            let p = chosen.iter().filter(|&&c| bits.get(i, c)).count() % 2;
            assert_eq!(t.dataset.labels[i] as usize, p);
        }

        let t = synth_boolean_task(SynthKind::ThresholdVote, 5, 300, 2).unwrap();
        let bits = t.encoder.encode(&t.dataset.features).unwrap();
        for i in 0..t.dataset.len() {
            let ones = (0..5).filter(|&c| bits.get(i, c)).count();
            assert_eq!(t.dataset.labels[i], (ones > 2) as u32);
        }
    }

    #[test]
    fn same_seed_same_task() {
        let k = SynthKind::RandomCircuit { layers: 2, width: 8 };
        let a = synth_boolean_task(k, 8, 200, 5).unwrap();
        let b = synth_boolean_task(k, 8, 200, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.teacher, b.teacher);
        assert_eq!(a.dataset.count(Split::Test), 40);
        assert_eq!(a.dataset.count(Split::Val), 20);
    }
}
