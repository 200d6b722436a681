//! Dataset loaders for the CIFAR-10 binary batches and MNIST IDX files.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use boolnet_core::data::{Dataset, Split};
use boolnet_core::RealMatrix;
use flate2::read::GzDecoder;

use crate::error::{BoolnetError, Result};

/// Environment variable naming the directory that holds datasets.
pub const DATA_DIR_ENV: &str = "BOOLNET_DATA_DIR";

/// Validation samples carved out of a full training split.
pub const DEFAULT_VAL_SIZE: usize = 5000;

/// Resolves a dataset path: absolute or existing paths are used as is,
/// anything else is looked up under `$BOOLNET_DATA_DIR`.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

/// How train/validation/test are assigned after loading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    pub seed: u64,
    /// Samples moved from train to validation.
    pub val_size: usize,
    /// Fraction of samples tagged test when the files carry no test split.
    pub test_fraction: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            seed: 0,
            val_size: DEFAULT_VAL_SIZE,
            test_fraction: 0.2,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| BoolnetError::ingestion(path, format!("gzip: {e}")))?;
        return Ok(out);
    }
    Ok(raw)
}

/// Finds `name` or `name.gz` in `dir`.
fn find(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names
        .iter()
        .flat_map(|n| [dir.join(n), dir.join(format!("{n}.gz"))])
        .find(|p| p.is_file())
}

fn carve(ds: &mut Dataset, opts: &SplitOptions) -> Result<()> {
    let val = opts.val_size.min(ds.count(Split::Train));
    ds.carve(Split::Train, Split::Val, val, opts.seed)?;
    Ok(())
}

const CIFAR_RECORD: usize = 1 + 3072;

fn read_cifar_batch(path: &Path, features: &mut Vec<f64>, labels: &mut Vec<u32>) -> Result<usize> {
    let raw = read_file(path)?;
    if raw.is_empty() || raw.len() % CIFAR_RECORD != 0 {
        return Err(BoolnetError::ingestion(
            path,
            format!("size {} is not a multiple of the {CIFAR_RECORD}-byte record", raw.len()),
        ));
    }
    for rec in raw.chunks_exact(CIFAR_RECORD) {
        if rec[0] > 9 {
            return Err(BoolnetError::ingestion(path, format!("label {} outside 0..10", rec[0])));
        }
        labels.push(rec[0] as u32);
        features.extend(rec[1..].iter().map(|&v| v as f64));
    }
    Ok(raw.len() / CIFAR_RECORD)
}

/// Loads `data_batch_{1..5}.bin` and `test_batch.bin` from `dir`.
/// Validation samples are carved from the training batches by seed.
pub fn load_cifar10(dir: &Path, opts: &SplitOptions) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let files = (1..=5)
        .map(|i| (format!("data_batch_{i}.bin"), Split::Train))
        .chain([("test_batch.bin".to_string(), Split::Test)]);
    for (name, split) in files {
        let path = find(dir, &[&name]).unwrap_or_else(|| dir.join(&name));
        let n = read_cifar_batch(&path, &mut features, &mut labels)?;
        splits.extend(std::iter::repeat_n(split, n));
    }
    let rows = labels.len();
    let features = RealMatrix::from_vec(rows, 3072, features)?;
    let mut ds = Dataset::new(
        features,
        labels,
        10,
        splits,
        format!("cifar10 binary batches in {}", dir.display()),
    )?;
    carve(&mut ds, opts)?;
    Ok(ds)
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Reads an IDX image file (magic 0x00000803). Returns (count, rows·cols, pixels).
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let raw = read_file(path)?;
    if raw.len() < 16 {
        return Err(BoolnetError::ingestion(path, "truncated IDX header"));
    }
    let magic = be_u32(&raw, 0);
    if magic != 0x0803 {
        return Err(BoolnetError::ingestion(
            path,
            format!("magic {magic:#010x}, expected 0x00000803"),
        ));
    }
    let (n, r, c) = (
        be_u32(&raw, 4) as usize,
        be_u32(&raw, 8) as usize,
        be_u32(&raw, 12) as usize,
    );
    let body = &raw[16..];
    if body.len() != n * r * c {
        return Err(BoolnetError::ingestion(
            path,
            format!("{} pixel bytes for {n} images of {r}x{c}", body.len()),
        ));
    }
    Ok((n, r * c, body.to_vec()))
}

/// Reads an IDX label file (magic 0x00000801).
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let raw = read_file(path)?;
    if raw.len() < 8 {
        return Err(BoolnetError::ingestion(path, "truncated IDX header"));
    }
    let magic = be_u32(&raw, 0);
    if magic != 0x0801 {
        return Err(BoolnetError::ingestion(
            path,
            format!("magic {magic:#010x}, expected 0x00000801"),
        ));
    }
    let n = be_u32(&raw, 4) as usize;
    if raw.len() - 8 != n {
        return Err(BoolnetError::ingestion(
            path,
            format!("{} label bytes for {n} labels", raw.len() - 8),
        ));
    }
    Ok(raw[8..].to_vec())
}

fn read_idx_pair(images: &Path, labels: &Path) -> Result<(usize, Vec<u8>, Vec<u8>)> {
    let (n, width, pixels) = read_idx_images(images)?;
    let ys = read_idx_labels(labels)?;
    if ys.len() != n {
        return Err(BoolnetError::ingestion(
            labels,
            format!("{} labels for {n} images", ys.len()),
        ));
    }
    if let Some(&y) = ys.iter().find(|&&y| y > 9) {
        return Err(BoolnetError::ingestion(labels, format!("label {y} outside 0..10")));
    }
    Ok((width, pixels, ys))
}

/// Loads MNIST from IDX files, gzipped or not.
///
/// Two layouts are recognized: the standard `train-*` / `t10k-*` pairs, and
/// a single `images-idx3-ubyte` / `labels-idx1-ubyte` pair holding a subset,
/// whose test split is carved by seed (`test_fraction`). Validation is
/// carved from train in both cases.
pub fn load_mnist_idx(dir: &Path, opts: &SplitOptions) -> Result<Dataset> {
    let mut width = None;
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let mut add = |images: &Path, label_file: &Path, split: Split| -> Result<()> {
        let (w, px, ys) = read_idx_pair(images, label_file)?;
        if *width.get_or_insert(w) != w {
            return Err(BoolnetError::ingestion(
                images,
                "image size differs from the other IDX file",
            ));
        }
        pixels.extend(px);
        splits.extend(std::iter::repeat_n(split, ys.len()));
        labels.extend(ys.into_iter().map(u32::from));
        Ok(())
    };
    let standard = find(dir, &["train-images-idx3-ubyte", "train-images.idx3-ubyte"]);
    let subset = standard.is_none();
    if let Some(train_images) = standard {
        let need = |names: &[&str]| {
            find(dir, names).ok_or_else(|| BoolnetError::ingestion(dir.join(names[0]), "file not found"))
        };
        let train_labels = need(&["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"])?;
        let test_images = need(&["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"])?;
        let test_labels = need(&["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"])?;
        add(&train_images, &train_labels, Split::Train)?;
        add(&test_images, &test_labels, Split::Test)?;
    } else {
        let images = find(dir, &["images-idx3-ubyte"])
            .ok_or_else(|| BoolnetError::ingestion(dir.join("train-images-idx3-ubyte"), "file not found"))?;
        let label_file = find(dir, &["labels-idx1-ubyte"])
            .ok_or_else(|| BoolnetError::ingestion(dir.join("labels-idx1-ubyte"), "file not found"))?;
        add(&images, &label_file, Split::Train)?;
    }
    let width = width.unwrap_or(0);
    let rows = labels.len();
    let features = RealMatrix::from_vec(rows, width, pixels.into_iter().map(f64::from).collect())?;
    let mut ds = Dataset::new(features, labels, 10, splits, format!("mnist idx in {}", dir.display()))?;
    if subset {
        if !(0.0..1.0).contains(&opts.test_fraction) {
            return Err(BoolnetError::Config(format!(
                "test_fraction {} outside [0, 1)",
                opts.test_fraction
            )));
        }
        let test = (rows as f64 * opts.test_fraction).round() as usize;
        ds.carve(Split::Train, Split::Test, test, opts.seed ^ 0x7465_7374)?;
    }
    carve(&mut ds, opts)?;
    Ok(ds)
}
