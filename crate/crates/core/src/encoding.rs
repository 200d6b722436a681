//! Distributive thermometer binarization.

use alloc::format;
use alloc::vec::Vec;

use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Per-feature thresholds placed at the empirical quantiles of the
/// training data. A feature value becomes `T` bits, bit `i` set iff the
/// value is strictly greater than threshold `i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThermometerEncoder {
    thresholds: Vec<Vec<f64>>,
}

/// Linear interpolation between order statistics: position `q * (n - 1)`
/// in the sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

impl ThermometerEncoder {
    /// Thresholds at quantile levels `i / (T + 1)` for `i = 1..=T`.
    pub fn fit(train: &RealMatrix, levels: usize) -> Result<Self> {
        if train.rows() == 0 || train.cols() == 0 {
            return Err(Error::structural("cannot fit thresholds on empty data"));
        }
        if levels == 0 {
            return Err(Error::config("thermometer needs at least one threshold"));
        }
        let mut column = Vec::with_capacity(train.rows());
        let mut thresholds = Vec::with_capacity(train.cols());
        for f in 0..train.cols() {
            column.clear();
            column.extend((0..train.rows()).map(|r| train.get(r, f)));
            if column.iter().any(|v| v.is_nan()) {
                return Err(Error::structural(format!("feature {f} contains NaN")));
            }
            column.sort_by(f64::total_cmp);
            let t = (1..=levels)
                .map(|i| quantile_sorted(&column, i as f64 / (levels + 1) as f64))
                .collect();
            thresholds.push(t);
        }
        Ok(ThermometerEncoder { thresholds })
    }

    /// Builds an encoder from explicit thresholds (sorted per feature, same
    /// count for every feature).
    pub fn from_thresholds(thresholds: Vec<Vec<f64>>) -> Result<Self> {
        let levels = thresholds.first().map_or(0, Vec::len);
        if levels == 0 {
            return Err(Error::structural("encoder needs at least one feature and threshold"));
        }
        for t in &thresholds {
            if t.len() != levels {
                return Err(Error::structural("every feature needs the same threshold count"));
            }
            // negated so NaN fails too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if t.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(Error::structural("thresholds must be non-decreasing"));
            }
        }
        Ok(ThermometerEncoder { thresholds })
    }

    pub fn num_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn levels(&self) -> usize {
        self.thresholds.first().map_or(0, Vec::len)
    }

    pub fn output_width(&self) -> usize {
        self.num_features() * self.levels()
    }

    pub fn thresholds(&self, feature: usize) -> &[f64] {
        &self.thresholds[feature]
    }

    /// Encodes `samples × features` into `samples × (features * T)` bits,
    /// feature-major: column `f * T + i` holds threshold `i` of feature `f`.
    pub fn encode(&self, data: &RealMatrix) -> Result<BitMatrix> {
        if data.cols() != self.num_features() {
            return Err(Error::structural(format!(
                "encoder expects {} features, got {}",
                self.num_features(),
                data.cols()
            )));
        }
        let t = self.levels();
        let mut out = BitMatrix::zeros(data.rows(), self.output_width());
        for r in 0..data.rows() {
            for (f, th) in self.thresholds.iter().enumerate() {
                let v = data.get(r, f);
                // thresholds are sorted, so the set bits form a prefix
                let n = th.iter().take_while(|&&x| v > x).count();
                for i in 0..n {
                    out.set(r, f * t + i, true);
                }
            }
        }
        Ok(out)
    }
}
