use serde::{Deserialize, Serialize};

use super::{IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub min: f64,
    pub range: f64,
}

impl ColumnScale {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / self.range
    }

    pub fn invert(&self, u: f64) -> f64 {
        self.min + u * self.range
    }
}

/// Min-max maps from original units to the unit cube. Constant feature
/// columns are dropped and restored at their constant value on inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    /// Number of feature columns in the raw data.
    pub n_raw: usize,
    /// Raw indices of the retained features, in model order.
    pub kept: Vec<usize>,
    pub features: Vec<ColumnScale>,
    /// `(raw index, value)` of each dropped constant column.
    pub dropped: Vec<(usize, f64)>,
    pub label: Option<ColumnScale>,
    /// Names of the retained features, when the data had a header.
    #[serde(default)]
    pub names: Vec<String>,
}

fn column_scale(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Fits the scaling on raw feature rows and, when given, labels. A constant
/// label keeps range 1 so that it maps to 0.
pub fn fit_scaling(features: &[Vec<f64>], labels: Option<&[f64]>) -> Result<ScalingSpec> {
    let n_raw = features.first().map_or(0, Vec::len);
    let mut kept = Vec::new();
    let mut scales = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..n_raw {
        let (lo, hi) = column_scale(features.iter().map(|r| r[j]));
        if hi > lo {
            kept.push(j);
            scales.push(ColumnScale { min: lo, range: hi - lo });
        } else {
            log::warn!("feature column {} is constant ({lo}); dropped", j + 1);
            dropped.push((j, lo));
        }
    }
    if kept.is_empty() {
        return Err(IoError::NoFeatures);
    }
    let label = labels.map(|y| {
        let (lo, hi) = column_scale(y.iter().copied());
        if hi > lo {
            ColumnScale { min: lo, range: hi - lo }
        } else {
            log::warn!("labels are constant ({lo})");
            ColumnScale { min: lo, range: 1.0 }
        }
    });
    Ok(ScalingSpec {
        n_raw,
        kept,
        features: scales,
        dropped,
        label,
        names: Vec::new(),
    })
}

impl ScalingSpec {
    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    pub fn apply_features(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.n_raw {
            return Err(IoError::Schema(format!(
                "row has {} features, scaling expects {}",
                raw.len(),
                self.n_raw
            )));
        }
        Ok(self.kept.iter().zip(&self.features).map(|(&j, s)| s.apply(raw[j])).collect())
    }

    pub fn invert_features(&self, scaled: &[f64]) -> Vec<f64> {
        let mut raw = vec![0.0; self.n_raw];
        for ((&j, s), u) in self.kept.iter().zip(&self.features).zip(scaled) {
            raw[j] = s.invert(*u);
        }
        for &(j, v) in &self.dropped {
            raw[j] = v;
        }
        raw
    }

    pub fn apply_label(&self, y: f64) -> f64 {
        self.label.map_or(y, |s| s.apply(y))
    }

    pub fn invert_label(&self, u: f64) -> f64 {
        self.label.map_or(u, |s| s.invert(u))
    }

    /// Display name of retained feature `k`.
    pub fn name(&self, k: usize) -> String {
        self.names.get(k).cloned().unwrap_or_else(|| format!("x{}", k + 1))
    }

    /// `(min, range)` pairs in the layout stored on a symbolic model.
    pub fn feature_pairs(&self) -> Vec<(f64, f64)> {
        self.features.iter().map(|s| (s.min, s.range)).collect()
    }
}
