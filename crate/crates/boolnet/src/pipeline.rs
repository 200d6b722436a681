//! Data preparation, training and pruning flows shared by the CLI and tests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use boolnet_core::data::{synth_boolean_task, Dataset, Split, SynthKind};
use boolnet_core::interconnect::RefreshEvent;
use boolnet_core::prune::{self, PassKind, PruneReport};
use boolnet_core::train::{Control, EpochMetrics, OptimizerState, TrainData, TrainObserver, Trainer};
use boolnet_core::{BitMatrix, HardCircuit, NetworkModel, ThermometerEncoder, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DataConfig, DatasetKind, PruneConfig};
use crate::datasets::{load_cifar10, load_mnist_idx, resolve_data_path, SplitOptions};
use crate::error::{BoolnetError, Result};
use crate::report::RefreshAudit;

/// Loads the dataset a [`DataConfig`] describes.
pub fn load_dataset(cfg: &DataConfig) -> Result<Dataset> {
    Ok(load_source(cfg)?.0)
}

/// Loads a dataset and, for synthetic tasks, the encoder that defines its
/// labels (so no fitted threshold can disagree with the teacher).
pub fn load_source(cfg: &DataConfig) -> Result<(Dataset, Option<ThermometerEncoder>)> {
    let opts = SplitOptions {
        seed: cfg.split_seed,
        val_size: cfg.val_size,
        test_fraction: cfg.test_fraction,
    };
    let path = || -> Result<PathBuf> {
        let p = cfg
            .path
            .as_ref()
            .ok_or_else(|| BoolnetError::Config("data.path is required for this dataset".into()))?;
        Ok(resolve_data_path(p))
    };
    let synth = |kind| -> Result<(Dataset, Option<ThermometerEncoder>)> {
        let task = synth_boolean_task(kind, cfg.features, cfg.samples, cfg.split_seed)?;
        Ok((task.dataset, Some(task.encoder)))
    };
    match cfg.dataset {
        DatasetKind::Mnist => Ok((load_mnist_idx(&path()?, &opts)?, None)),
        DatasetKind::Cifar10 => Ok((load_cifar10(&path()?, &opts)?, None)),
        DatasetKind::SynthParity => synth(SynthKind::Parity { bits: cfg.parity_bits }),
        DatasetKind::SynthVote => synth(SynthKind::ThresholdVote),
        DatasetKind::SynthCircuit => synth(SynthKind::RandomCircuit {
            layers: cfg.teacher_layers,
            width: cfg.teacher_width,
        }),
    }
}

/// One encoded split.
#[derive(Debug, Clone)]
pub struct EncodedSplit {
    pub inputs: BitMatrix,
    pub labels: Vec<u32>,
}

/// A dataset binarized with an encoder fitted on its training split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: Dataset,
    pub encoder: ThermometerEncoder,
    pub train: EncodedSplit,
    pub val: EncodedSplit,
    pub test: EncodedSplit,
}

impl PreparedData {
    pub fn split(&self, split: Split) -> &EncodedSplit {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

fn encode_split(ds: &Dataset, enc: &ThermometerEncoder, split: Split) -> Result<EncodedSplit> {
    let (x, labels) = ds.split(split);
    Ok(EncodedSplit {
        inputs: enc.encode(&x)?,
        labels,
    })
}

/// Loads and encodes the configured data. Real datasets get an encoder with
/// `levels` thresholds fitted on their training split; synthetic tasks keep
/// their teacher's encoder.
pub fn load_prepared(cfg: &DataConfig, levels: usize) -> Result<PreparedData> {
    match load_source(cfg)? {
        (dataset, Some(encoder)) => prepare_with_encoder(dataset, encoder),
        (dataset, None) => prepare(dataset, levels),
    }
}

/// Fits a thermometer encoder with `levels` thresholds on the training split.
pub fn prepare(dataset: Dataset, levels: usize) -> Result<PreparedData> {
    let (train_x, _) = dataset.split(Split::Train);
    let encoder = ThermometerEncoder::fit(&train_x, levels)?;
    prepare_with_encoder(dataset, encoder)
}

pub fn prepare_with_encoder(dataset: Dataset, encoder: ThermometerEncoder) -> Result<PreparedData> {
    Ok(PreparedData {
        train: encode_split(&dataset, &encoder, Split::Train)?,
        val: encode_split(&dataset, &encoder, Split::Val)?,
        test: encode_split(&dataset, &encoder, Split::Test)?,
        dataset,
        encoder,
    })
}

/// Initial model for a config: seeded by `config.seed`.
pub fn init_model(config: &TrainConfig, input_width: usize, num_classes: usize) -> Result<NetworkModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(NetworkModel::random(
        input_width,
        &config.layer_widths,
        num_classes,
        config.tau,
        config.candidates,
        config.gate_init_std,
        &mut rng,
    )?)
}

type Progress<'a> = Box<dyn FnMut(&EpochMetrics, f64) + 'a>;

/// Observer used by [`train_model`]: records wall-clock per epoch, enforces
/// an optional time budget and forwards refresh events to an audit file.
pub struct RunObserver<'a> {
    start: Instant,
    budget_s: Option<f64>,
    pub wall_clock: Vec<f64>,
    audit: Option<&'a mut RefreshAudit>,
    audit_error: Option<BoolnetError>,
    progress: Option<Progress<'a>>,
}

impl<'a> RunObserver<'a> {
    pub fn new(budget_s: Option<f64>) -> Self {
        RunObserver {
            start: Instant::now(),
            budget_s,
            wall_clock: Vec::new(),
            audit: None,
            audit_error: None,
            progress: None,
        }
    }

    pub fn with_audit(mut self, audit: &'a mut RefreshAudit) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn with_progress(mut self, f: impl FnMut(&EpochMetrics, f64) + 'a) -> Self {
        self.progress = Some(Box::new(f));
        self
    }
}

impl TrainObserver for RunObserver<'_> {
    fn on_epoch(&mut self, m: &EpochMetrics) -> Control {
        let t = self.start.elapsed().as_secs_f64();
        self.wall_clock.push(t);
        if let Some(p) = self.progress.as_mut() {
            p(m, t);
        }
        match self.budget_s {
            Some(b) if t >= b => Control::Stop,
            _ if self.audit_error.is_some() => Control::Stop,
            _ => Control::Continue,
        }
    }

    fn on_refresh(&mut self, event: &RefreshEvent) {
        if let Some(a) = self.audit.as_mut() {
            if let Err(e) = a.record(event) {
                self.audit_error.get_or_insert(e);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NetworkModel,
    pub optimizer: OptimizerState,
    pub metrics: Vec<EpochMetrics>,
    pub wall_clock: Vec<f64>,
}

/// Trains a fresh model on prepared data. Validation and test accuracy are
/// recorded every epoch.
pub fn train_model(config: &TrainConfig, data: &PreparedData, mut observer: RunObserver<'_>) -> Result<TrainOutcome> {
    let model = init_model(config, data.encoder.output_width(), data.dataset.num_classes)?;
    let mut trainer = Trainer::new(model, config.clone())?;
    fn split(s: &EncodedSplit) -> Option<(&BitMatrix, &[u32])> {
        (!s.labels.is_empty()).then_some((&s.inputs, s.labels.as_slice()))
    }
    let metrics = trainer.run(
        TrainData {
            train_inputs: &data.train.inputs,
            train_labels: &data.train.labels,
            val: split(&data.val),
            test: split(&data.test),
        },
        &mut observer,
    )?;
    if let Some(e) = observer.audit_error.take() {
        return Err(e);
    }
    let (model, optimizer) = trainer.into_parts();
    Ok(TrainOutcome {
        model,
        optimizer,
        metrics,
        wall_clock: observer.wall_clock,
    })
}

/// Applies the configured passes in order. Each report carries the
/// accuracy before and after the pass on `eval`.
pub fn run_passes(
    circuit: &HardCircuit,
    cfg: &PruneConfig,
    profile_data: &BitMatrix,
    eval: (&str, &EncodedSplit),
) -> Result<(HardCircuit, Vec<PruneReport>)> {
    let passes: Vec<PassKind> = cfg
        .passes
        .iter()
        .map(|p| p.parse().map_err(BoolnetError::Core))
        .collect::<Result<_>>()?;
    let (eval_name, eval_split) = eval;
    let accuracy = |c: &HardCircuit| -> Result<f64> {
        if eval_split.labels.is_empty() {
            return Err(BoolnetError::Config(format!("split '{eval_name}' is empty")));
        }
        Ok(c.accuracy(&eval_split.inputs, &eval_split.labels)?)
    };
    let mut current = circuit.clone();
    let mut reports = Vec::with_capacity(passes.len());
    for pass in passes {
        let before = accuracy(&current)?;
        let (next, report) = match pass {
            PassKind::Trivial => prune::trivial_prune(&current),
            PassKind::LogicEquiv => prune::logic_equivalence_prune(&current)?,
            PassKind::Greedy => {
                let profile = prune::profile_activations(&current, profile_data)?;
                prune::greedy_prune(&current, &profile, cfg.greedy_threshold)?
            }
            PassKind::Similarity => {
                let profile = prune::profile_activations(&current, profile_data)?;
                prune::similarity_prune(&current, &profile, cfg.similarity_c)?
            }
        };
        let after = accuracy(&next)?;
        reports.push(report.with_accuracy(eval_name, before, after));
        current = next;
    }
    Ok((current, reports))
}

/// Output directory helper: creates it and returns the joined file path.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| BoolnetError::io(dir, e))?;
    Ok(dir.join(name))
}
