//! CSV and NDJSON outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use boolnet_core::interconnect::RefreshEvent;
use boolnet_core::prune::PruneReport;
use boolnet_core::train::EpochMetrics;
use serde::Serialize;

use crate::error::{BoolnetError, Result};

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| BoolnetError::Internal(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BoolnetError + '_ {
    move |e| BoolnetError::Internal(format!("{}: {e}", path.display()))
}

/// One long-format metrics row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub split: &'static str,
    pub accuracy: f64,
    pub loss: f64,
    pub wall_clock_s: f64,
    pub phase: String,
}

/// Rows of one epoch: train always, val and test when measured.
pub fn metrics_rows(m: &EpochMetrics, wall_clock_s: f64) -> Vec<MetricsRow> {
    let phase = m.phase.to_string();
    let mut rows = vec![MetricsRow {
        epoch: m.epoch,
        split: "train",
        accuracy: m.train_accuracy,
        loss: m.train_loss,
        wall_clock_s,
        phase: phase.clone(),
    }];
    for (split, acc, loss) in [
        ("val", m.val_accuracy, m.val_loss),
        ("test", m.test_accuracy, m.test_loss),
    ] {
        if let (Some(accuracy), Some(loss)) = (acc, loss) {
            rows.push(MetricsRow {
                epoch: m.epoch,
                split,
                accuracy,
                loss,
                wall_clock_s,
                phase: phase.clone(),
            });
        }
    }
    rows
}

/// `epoch, split, accuracy, loss, wall_clock_s, phase`.
pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BoolnetError::io(path, e))
}

/// Wide accuracy curve of one run or the mean over several.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub time: f64,
    pub train_mean: f64,
    pub val_mean: Option<f64>,
    pub test_mean: Option<f64>,
}

/// Averages per-epoch metrics of several runs (epochs missing from a run
/// are skipped for that run).
pub fn curve_rows(runs: &[(Vec<EpochMetrics>, Vec<f64>)]) -> Vec<CurveRow> {
    let epochs = runs.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    (0..epochs)
        .map(|e| {
            let present: Vec<(&EpochMetrics, f64)> =
                runs.iter().filter_map(|(m, t)| m.get(e).map(|x| (x, t[e]))).collect();
            let pick = |f: &dyn Fn(&EpochMetrics) -> Option<f64>| {
                mean(&present.iter().filter_map(|(m, _)| f(m)).collect::<Vec<_>>())
            };
            CurveRow {
                epoch: e,
                time: mean(&present.iter().map(|&(_, t)| t).collect::<Vec<_>>()).unwrap_or(0.0),
                train_mean: pick(&|m| Some(m.train_accuracy)).unwrap_or(0.0),
                val_mean: pick(&|m| m.val_accuracy),
                test_mean: pick(&|m| m.test_accuracy),
            }
        })
        .collect()
}

/// `epoch, time, train_mean, val_mean, test_mean`.
pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BoolnetError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneRow {
    pub pass: &'static str,
    /// Layer index, or `all` for the whole circuit.
    pub layer: String,
    pub before: usize,
    pub after: usize,
    pub accuracy: Option<f64>,
}

/// One row per layer and a total row per report; the accuracy column holds
/// the accuracy after the pass on the report's split.
pub fn prune_rows(reports: &[PruneReport]) -> Vec<PruneRow> {
    let mut rows = Vec::new();
    for r in reports {
        for (l, (&b, &a)) in r.gates_before.iter().zip(&r.gates_after).enumerate() {
            rows.push(PruneRow {
                pass: r.pass.name(),
                layer: l.to_string(),
                before: b,
                after: a,
                accuracy: None,
            });
        }
        rows.push(PruneRow {
            pass: r.pass.name(),
            layer: "all".into(),
            before: r.total_before(),
            after: r.total_after(),
            accuracy: r.accuracy_after,
        });
    }
    rows
}

/// `pass, layer, before, after, accuracy`.
pub fn write_prune_report(path: &Path, reports: &[PruneReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in prune_rows(reports) {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BoolnetError::io(path, e))
}

/// `true_class, predicted_class, count` for every pair, row-major.
pub fn confusion(predictions: &[usize], labels: &[u32], classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes]; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        m[y as usize][p] += 1;
    }
    m
}

pub fn write_confusion(path: &Path, matrix: &[Vec<u64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["true_class", "predicted_class", "count"])
        .map_err(csv_err(path))?;
    for (t, row) in matrix.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            w.write_record([t.to_string(), p.to_string(), n.to_string()])
                .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| BoolnetError::io(path, e))
}

/// Appends refresh events to a newline-delimited JSON file.
pub struct RefreshAudit {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl RefreshAudit {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| BoolnetError::io(path, e))?;
        Ok(RefreshAudit {
            out: BufWriter::new(f),
            path: path.to_path_buf(),
        })
    }

    pub fn record(&mut self, event: &RefreshEvent) -> Result<()> {
        serde_json::to_writer(&mut self.out, event).map_err(|e| BoolnetError::Internal(e.to_string()))?;
        self.out.write_all(b"\n").map_err(|e| BoolnetError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| BoolnetError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use boolnet_core::train::PhaseKind;

    fn epoch(e: usize, acc: f64) -> EpochMetrics {
        EpochMetrics {
            epoch: e,
            phase: PhaseKind::Interconnect(0),
            train_accuracy: acc,
            train_loss: 1.0,
            val_accuracy: Some(acc / 2.0),
            val_loss: Some(2.0),
            test_accuracy: None,
            test_loss: None,
            lr: 0.01,
            steps: 1,
        }
    }

    #[test]
    fn metrics_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics(&p, &metrics_rows(&epoch(0, 0.5), 1.5)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "epoch,split,accuracy,loss,wall_clock_s,phase\n0,train,0.5,1.0,1.5,interconnect_0\n0,val,0.25,2.0,1.5,interconnect_0\n"
        );
    }

    #[test]
    fn curves_average_runs() {
        let runs = vec![
            (vec![epoch(0, 0.4)], vec![1.0]),
            (vec![epoch(0, 0.6), epoch(1, 0.8)], vec![3.0, 4.0]),
        ];
        let rows = curve_rows(&runs);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].train_mean - 0.5).abs() < 1e-12);
        assert_eq!(rows[0].time, 2.0);
        assert_eq!(rows[1].train_mean, 0.8);
        assert_eq!(rows[0].test_mean, None);
    }

    #[test]
    fn confusion_counts() {
        let m = confusion(&[0, 1, 1, 2], &[0, 1, 2, 2], 3);
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]]);
    }
}
