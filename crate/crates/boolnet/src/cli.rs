//! Command-line surface: `train`, `prune`, `eval`, `estimate-mem`.

use std::io::Write;
use std::path::{Path, PathBuf};

use boolnet_core::data::Split;
use boolnet_core::{estimate_interconnect_memory, harden, train, HardCircuit};
use clap::{Args, Parser, Subcommand};

use crate::checkpoint::{is_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::error::{BoolnetError, Result};
use crate::manifest::RunManifest;
use crate::netlist;
use crate::pipeline::{self, out_path, prepare_with_encoder, PreparedData, RunObserver};
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "boolnet",
    version,
    about = "Train, harden, prune and evaluate deep Boolean networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration, or a manifest.json of an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `train.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; recorded in the manifest (computation is single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Stop training after the first epoch that ends past this many seconds.
    #[arg(long, global = true)]
    pub budget_seconds: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "boolnet-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model; writes checkpoint, hardened netlist, metrics and manifest.
    Train {
        /// Dataset directory (overrides `data.path`).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also log every candidate refresh to refresh_audit.ndjson.
        #[arg(long)]
        refresh_audit: bool,
    },
    /// Apply pruning passes to a checkpoint or netlist.
    Prune {
        /// Checkpoint or netlist file.
        #[arg(long)]
        artifact: PathBuf,
        /// Comma-separated passes: trivial, logic-equiv, greedy, similarity.
        #[arg(long, value_delimiter = ',')]
        passes: Option<Vec<String>>,
        /// Greedy pass: minimum agreement with a constant, in (0.5, 1].
        #[arg(long)]
        greedy_threshold: Option<f64>,
        /// Similarity pass: minimum |phi| to merge two gates, in (0, 1].
        #[arg(long)]
        similarity_c: Option<f64>,
        /// Split used to profile activations.
        #[arg(long)]
        profile_split: Option<String>,
        /// Split on which accuracy is reported.
        #[arg(long)]
        split: Option<String>,
        /// Dataset directory (overrides `data.path`).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Accuracy and confusion matrix of a checkpoint or netlist.
    Eval {
        /// Checkpoint or netlist file.
        #[arg(long)]
        artifact: PathBuf,
        /// train, val or test.
        #[arg(long, default_value = "test")]
        split: String,
        /// Dataset directory (overrides `data.path`).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Interconnect memory of a dense versus a candidate-set layer stack.
    EstimateMem {
        /// Gates per layer.
        #[arg(long)]
        gates: u64,
        /// Width of the layer input.
        #[arg(long)]
        inputs: u64,
        /// Inputs per gate.
        #[arg(long, default_value_t = 2)]
        arity: u64,
        /// Candidates per input slot.
        #[arg(long, default_value_t = 8)]
        candidates: u64,
    },
}

fn load_config(global: &GlobalArgs) -> Result<Option<RunConfig>> {
    let Some(path) = &global.config else { return Ok(None) };
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(Some(RunManifest::load(path)?.config));
    }
    RunConfig::load(path).map(Some)
}

fn parse_split(name: &str) -> Result<Split> {
    name.parse().map_err(BoolnetError::Core)
}

/// Bytes with a decimal SI unit and three decimals.
pub fn human_bytes(bytes: u64) -> String {
    let units = ["B", "kB", "MB", "GB", "TB", "PB"];
    let mut v = bytes as f64;
    let mut u = 0;
    while v >= 1000.0 && u + 1 < units.len() {
        v /= 1000.0;
        u += 1;
    }
    if u == 0 {
        format!("{bytes} B")
    } else {
        format!("{v:.3} {}", units[u])
    }
}

/// Runs one command, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let g = cli.global;
    let say = |out: &mut dyn Write, s: String| {
        let _ = writeln!(out, "{s}");
    };
    match cli.command {
        Command::Train { data, refresh_audit } => {
            let mut cfg = load_config(&g)?.unwrap_or_default();
            if let Some(s) = g.seed {
                cfg.train.seed = s;
            }
            if data.is_some() {
                cfg.data.path = data;
            }
            cfg.train.validate()?;
            let mut manifest = RunManifest::new("train", cfg.clone(), cfg.train.seed, g.threads);
            manifest.budget_seconds = g.budget_seconds;
            let prepared = pipeline::load_prepared(&cfg.data, cfg.train.thermometer_levels)?;
            manifest.dataset_provenance = prepared.dataset.provenance.clone();

            let audit_path = out_path(&g.out, "refresh_audit.ndjson")?;
            let mut audit = if refresh_audit {
                Some(report::RefreshAudit::create(&audit_path)?)
            } else {
                None
            };
            let mut rows = Vec::new();
            let mut observer = RunObserver::new(g.budget_seconds).with_progress(|m, t| {
                rows.extend(report::metrics_rows(m, t));
                eprintln!(
                    "epoch {:>4} {:<15} train {:.4} val {} {:.1}s",
                    m.epoch,
                    m.phase.to_string(),
                    m.train_accuracy,
                    m.val_accuracy.map_or("-".into(), |v| format!("{v:.4}")),
                    t
                );
            });
            if let Some(a) = audit.as_mut() {
                observer = observer.with_audit(a);
            }
            let outcome = pipeline::train_model(&cfg.train, &prepared, observer)?;
            if let Some(a) = audit {
                a.finish()?;
                manifest.outputs.insert("refresh_audit".into(), audit_path);
            }

            let circuit = harden(&outcome.model)?;
            let ckpt = Checkpoint {
                model: outcome.model,
                encoder: prepared.encoder.clone(),
                config: cfg.train.clone(),
                optimizer: outcome.optimizer,
                data: cfg.data.clone(),
            };
            let files = [
                ("checkpoint", "checkpoint.bin"),
                ("netlist", "netlist.txt"),
                ("metrics", "metrics.csv"),
                ("curves", "curves.csv"),
            ];
            let paths: Vec<PathBuf> = files.iter().map(|(_, f)| g.out.join(f)).collect();
            ckpt.save(&paths[0])?;
            netlist::write(&paths[1], &circuit, Some(&prepared.encoder))?;
            report::write_metrics(&paths[2], &rows)?;
            report::write_curves(
                &paths[3],
                &report::curve_rows(&[(outcome.metrics.clone(), outcome.wall_clock)]),
            )?;
            for ((role, _), p) in files.iter().zip(paths) {
                manifest.outputs.insert((*role).into(), p);
            }
            manifest.write(&g.out.join("manifest.json"))?;

            say(stdout, format!("epochs {}", outcome.metrics.len()));
            say(stdout, format!("gates {}", circuit.gate_count()));
            for split in Split::ALL {
                let s = prepared.split(split);
                if !s.labels.is_empty() {
                    say(
                        stdout,
                        format!("{split} accuracy {:.4}", circuit.accuracy(&s.inputs, &s.labels)?),
                    );
                }
            }
            say(stdout, format!("wrote {}", g.out.display()));
            Ok(())
        }

        Command::Prune {
            artifact,
            passes,
            greedy_threshold,
            similarity_c,
            profile_split,
            split,
            data,
        } => {
            let (circuit, prepared, mut cfg) = load_artifact(&g, &artifact, data)?;
            if let Some(p) = passes {
                cfg.prune.passes = p;
            }
            if let Some(t) = greedy_threshold {
                cfg.prune.greedy_threshold = t;
            }
            if let Some(c) = similarity_c {
                cfg.prune.similarity_c = c;
            }
            if let Some(s) = profile_split {
                cfg.prune.profile_split = s;
            }
            if let Some(s) = split {
                cfg.prune.eval_split = s;
            }
            let profile = prepared.split(parse_split(&cfg.prune.profile_split)?);
            let eval_split = parse_split(&cfg.prune.eval_split)?;
            let mut manifest = RunManifest::new("prune", cfg.clone(), cfg.train.seed, g.threads);
            manifest.dataset_provenance = prepared.dataset.provenance.clone();
            manifest.inputs.insert("artifact".into(), artifact);
            let (pruned, reports) = pipeline::run_passes(
                &circuit,
                &cfg.prune,
                &profile.inputs,
                (eval_split.name(), prepared.split(eval_split)),
            )?;
            let net_path = out_path(&g.out, "pruned_netlist.txt")?;
            let csv_path = g.out.join("prune_report.csv");
            netlist::write(&net_path, &pruned, Some(&prepared.encoder))?;
            report::write_prune_report(&csv_path, &reports)?;
            manifest.outputs.insert("netlist".into(), net_path);
            manifest.outputs.insert("prune_report".into(), csv_path);
            manifest.write(&g.out.join("manifest.json"))?;
            for r in &reports {
                say(
                    stdout,
                    format!(
                        "{:<12} gates {:>7} -> {:>7}  {} accuracy {:.4} -> {:.4}",
                        r.pass.name(),
                        r.total_before(),
                        r.total_after(),
                        eval_split,
                        r.accuracy_before.unwrap_or(f64::NAN),
                        r.accuracy_after.unwrap_or(f64::NAN)
                    ),
                );
            }
            Ok(())
        }

        Command::Eval { artifact, split, data } => {
            let split = parse_split(&split)?;
            let (circuit, prepared, cfg) = load_artifact(&g, &artifact, data)?;
            let s = prepared.split(split);
            if s.labels.is_empty() {
                return Err(BoolnetError::Config(format!("split '{split}' is empty")));
            }
            let predictions = circuit.predict(&s.inputs)?;
            let accuracy = circuit.accuracy(&s.inputs, &s.labels)?;
            let matrix = report::confusion(&predictions, &s.labels, circuit.num_classes);
            let path = out_path(&g.out, "confusion.csv")?;
            report::write_confusion(&path, &matrix)?;
            let mut manifest = RunManifest::new("eval", cfg.clone(), cfg.train.seed, g.threads);
            manifest.dataset_provenance = prepared.dataset.provenance.clone();
            manifest.inputs.insert("artifact".into(), artifact);
            manifest.outputs.insert("confusion".into(), path);
            manifest.write(&g.out.join("manifest.json"))?;
            say(
                stdout,
                format!("{split} accuracy {accuracy:.6} ({} samples)", s.labels.len()),
            );
            Ok(())
        }

        Command::EstimateMem {
            gates,
            inputs,
            arity,
            candidates,
        } => {
            if gates == 0 || inputs == 0 || arity == 0 || candidates == 0 {
                return Err(BoolnetError::Config("all sizes must be positive".into()));
            }
            let (full, sparse) = estimate_interconnect_memory(gates, inputs, arity, candidates);
            say(stdout, format!("full interconnect:   {full} B ({})", human_bytes(full)));
            say(
                stdout,
                format!("sparse interconnect: {sparse} B ({})", human_bytes(sparse)),
            );
            say(stdout, format!("ratio: {:.3e}", sparse as f64 / full as f64));
            let path = out_path(&g.out, "memory.csv")?;
            let text = format!(
                "gates,inputs,arity,candidates,bytes_full,bytes_sparse\n{gates},{inputs},{arity},{candidates},{full},{sparse}\n"
            );
            std::fs::write(&path, text).map_err(|e| BoolnetError::io(&path, e))
        }
    }
}

/// Loads a checkpoint (hardened on the fly) or a netlist, plus the data it
/// is evaluated on. Data comes from `--config` when given, otherwise from
/// the checkpoint.
fn load_artifact(
    g: &GlobalArgs,
    artifact: &Path,
    data: Option<PathBuf>,
) -> Result<(HardCircuit, PreparedData, RunConfig)> {
    let cli_cfg = load_config(g)?;
    let (circuit, encoder, mut cfg) = if is_checkpoint(artifact)? {
        let ckpt = Checkpoint::load(artifact)?;
        let circuit = harden(&ckpt.model)?;
        let cfg = cli_cfg.unwrap_or_else(|| RunConfig {
            train: ckpt.config.clone(),
            data: ckpt.data.clone(),
            ..Default::default()
        });
        (circuit, ckpt.encoder, cfg)
    } else {
        let net = netlist::read(artifact)?;
        let encoder = net
            .encoder
            .ok_or_else(|| BoolnetError::ingestion(artifact, "netlist carries no encoder block"))?;
        let cfg = cli_cfg
            .ok_or_else(|| BoolnetError::Config("evaluating a netlist needs --config for the dataset".into()))?;
        (net.circuit, encoder, cfg)
    };
    if data.is_some() {
        cfg.data.path = data;
    }
    let dataset = pipeline::load_dataset(&cfg.data)?;
    if encoder.num_features() != dataset.num_features() {
        return Err(BoolnetError::Config(format!(
            "artifact expects {} features, dataset has {}",
            encoder.num_features(),
            dataset.num_features()
        )));
    }
    let prepared = prepare_with_encoder(dataset, encoder)?;
    Ok((circuit, prepared, cfg))
}

/// Evaluates a checkpoint through the training-time forward pass.
pub fn checkpoint_accuracy(ckpt: &Checkpoint, inputs: &boolnet_core::BitMatrix, labels: &[u32]) -> Result<f64> {
    Ok(train::evaluate(&ckpt.model, inputs, labels)?.0)
}
