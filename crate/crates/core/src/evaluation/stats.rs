use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{IofRecord, Region};
use crate::detector::SaliencyTarget;

/// Order statistics of one IOF field; the raw values are kept for violin plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
    pub values: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl FieldStats {
    pub fn from_values(values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self {
                count: 0,
                mean: None,
                min: None,
                q25: None,
                median: None,
                q75: None,
                max: None,
                values,
            };
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            count: values.len(),
            mean: Some(values.iter().sum::<f64>() / values.len() as f64),
            min: Some(sorted[0]),
            q25: Some(quantile(&sorted, 0.25)),
            median: Some(quantile(&sorted, 0.5)),
            q75: Some(quantile(&sorted, 0.75)),
            max: Some(sorted[sorted.len() - 1]),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub record_count: usize,
    /// Keyed `<parameter>_<region>`, e.g. `xmin_left`, `xmin_mid_x`, `cls_full_polygon`.
    pub fields: BTreeMap<String, FieldStats>,
    /// All four box parameters pooled: outer-third IOFs.
    pub pooled_target: FieldStats,
    /// All four box parameters pooled: middle-third IOFs.
    pub pooled_background: FieldStats,
}

impl SummaryStats {
    pub fn field(&self, target: SaliencyTarget, region: Region) -> Option<&FieldStats> {
        self.fields.get(&field_key(target, region))
    }
}

pub fn field_key(target: SaliencyTarget, region: Region) -> String {
    format!("{}_{}", target.as_str(), region.as_str())
}

/// Per-field statistics over non-null values. Raw value lists keep input order.
pub fn aggregate(records: &[IofRecord]) -> SummaryStats {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut pooled_target = Vec::new();
    let mut pooled_background = Vec::new();
    for t in SaliencyTarget::ALL {
        columns.entry(field_key(t, Region::target_side(t))).or_default();
        if let Some(bg) = Region::background(t) {
            columns.entry(field_key(t, bg)).or_default();
        }
    }
    for rec in records {
        for (t, region, v) in rec.entries() {
            let Some(v) = v else { continue };
            columns.entry(field_key(t, region)).or_default().push(v);
            if t != SaliencyTarget::Cls {
                if Region::background(t) == Some(region) {
                    pooled_background.push(v);
                } else {
                    pooled_target.push(v);
                }
            }
        }
    }
    SummaryStats {
        record_count: records.len(),
        fields: columns
            .into_iter()
            .map(|(k, v)| (k, FieldStats::from_values(v)))
            .collect(),
        pooled_target: FieldStats::from_values(pooled_target),
        pooled_background: FieldStats::from_values(pooled_background),
    }
}
