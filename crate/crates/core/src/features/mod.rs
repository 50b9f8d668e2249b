//! The fourteen condition-monitoring statistics, computed on raw segments
//! or on Haar approximation coefficients.
//!
//! All moments use population (1/n) normalization. Kurtosis is the excess
//! form (fourth standardized moment minus 3), so a Gaussian scores 0.
//! "Absolute" features and every factor denominator use `|x_i|`:
//!
//! | feature          | definition                                |
//! |------------------|-------------------------------------------|
//! | abs_mean         | mean of `|x|`                             |
//! | abs_max          | max of `|x|`                              |
//! | clearance_factor | abs_max / (mean of `sqrt|x|`)^2           |
//! | impulse_factor   | abs_max / abs_mean                        |
//! | crest_factor     | abs_max / rms                             |
//! | shape_factor     | rms / abs_mean                            |

mod wavelet;

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use wavelet::{haar_dwt_step, inverse_haar, wavelet_approx, WaveletCoeffs};

use crate::error::{Error, Result};
use crate::ingest::Dataset;

pub const N_FEATURES: usize = 14;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "mean",
    "abs_mean",
    "maximum",
    "minimum",
    "peak_to_peak",
    "abs_max",
    "rms",
    "variance",
    "clearance_factor",
    "kurtosis",
    "skewness",
    "impulse_factor",
    "crest_factor",
    "shape_factor",
];

/// Variance below which kurtosis and skewness are undefined.
pub const DEGENERATE_VARIANCE: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Time,
    WaveletL1,
    WaveletL2,
    WaveletL3,
}

impl DomainTag {
    pub fn wavelet_level(self) -> Option<usize> {
        match self {
            DomainTag::Time => None,
            DomainTag::WaveletL1 => Some(1),
            DomainTag::WaveletL2 => Some(2),
            DomainTag::WaveletL3 => Some(3),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::Time => "time",
            DomainTag::WaveletL1 => "wavelet_l1",
            DomainTag::WaveletL2 => "wavelet_l2",
            DomainTag::WaveletL3 => "wavelet_l3",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean: f64,
    pub abs_mean: f64,
    pub maximum: f64,
    pub minimum: f64,
    pub peak_to_peak: f64,
    pub abs_max: f64,
    pub rms: f64,
    pub variance: f64,
    pub clearance_factor: f64,
    pub kurtosis: f64,
    pub skewness: f64,
    pub impulse_factor: f64,
    pub crest_factor: f64,
    pub shape_factor: f64,
    pub domain_tag: DomainTag,
    pub label: usize,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.mean,
            self.abs_mean,
            self.maximum,
            self.minimum,
            self.peak_to_peak,
            self.abs_max,
            self.rms,
            self.variance,
            self.clearance_factor,
            self.kurtosis,
            self.skewness,
            self.impulse_factor,
            self.crest_factor,
            self.shape_factor,
        ]
    }
}

/// Computes the fourteen statistics of `values`.
pub fn time_domain_features(values: &[f64]) -> Result<FeatureVector> {
    compute(values, DomainTag::Time, 0, "segment")
}

fn compute(values: &[f64], domain_tag: DomainTag, label: usize, source: &str) -> Result<FeatureVector> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, actual: n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(source.to_string()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;

    let mut maximum = f64::NEG_INFINITY;
    let mut minimum = f64::INFINITY;
    let (mut abs_sum, mut sqrt_abs_sum, mut sq_sum) = (0.0, 0.0, 0.0);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in values {
        maximum = maximum.max(x);
        minimum = minimum.min(x);
        abs_sum += x.abs();
        sqrt_abs_sum += x.abs().sqrt();
        sq_sum += x * x;
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / nf;
    if variance < DEGENERATE_VARIANCE {
        return Err(Error::DegenerateSignal {
            source_ref: source.to_string(),
        });
    }
    let abs_mean = abs_sum / nf;
    let abs_max = maximum.abs().max(minimum.abs());
    let rms = (sq_sum / nf).sqrt();
    let sqrt_abs_mean = sqrt_abs_sum / nf;

    Ok(FeatureVector {
        mean,
        abs_mean,
        maximum,
        minimum,
        peak_to_peak: maximum - minimum,
        abs_max,
        rms,
        variance,
        clearance_factor: abs_max / (sqrt_abs_mean * sqrt_abs_mean),
        kurtosis: m4 / (nf * variance * variance) - 3.0,
        skewness: (m3 / nf) / variance.powf(1.5),
        impulse_factor: abs_max / abs_mean,
        crest_factor: abs_max / rms,
        shape_factor: rms / abs_mean,
        domain_tag,
        label,
    })
}

/// Features of `values` in the given domain (raw, or Haar approximation at
/// the tagged level).
pub fn features_in_domain(values: &[f64], domain_tag: DomainTag) -> Result<FeatureVector> {
    domain_features(values, domain_tag, 0, "segment")
}

fn domain_features(values: &[f64], tag: DomainTag, label: usize, source: &str) -> Result<FeatureVector> {
    match tag.wavelet_level() {
        None => compute(values, tag, label, source),
        Some(level) => compute(&wavelet_approx(values, level)?, tag, label, source),
    }
}

/// One feature vector per segment, in dataset order.
pub fn featurize_dataset(dataset: &Dataset, domain_tag: DomainTag) -> Result<Vec<FeatureVector>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset
        .segments
        .iter()
        .map(|s| domain_features(&s.values, domain_tag, s.label, &s.parent))
        .collect()
}

/// Header line of the feature CSV export.
pub fn feature_csv_header() -> String {
    let mut h = FEATURE_NAMES.join(",");
    h.push_str(",label,domain_tag");
    h
}

/// Renders feature vectors as CSV: the fourteen features in
/// [`FEATURE_NAMES`] order, then `label`, then `domain_tag`.
pub fn features_to_csv(vectors: &[FeatureVector]) -> String {
    let mut out = feature_csv_header();
    out.push('\n');
    for v in vectors {
        for x in v.to_array() {
            write!(out, "{x:?},").unwrap();
        }
        writeln!(out, "{},{}", v.label, v.domain_tag).unwrap();
    }
    out
}

pub fn write_features_csv(path: impl AsRef<Path>, vectors: &[FeatureVector]) -> Result<()> {
    crate::cli::write_atomic(path.as_ref(), features_to_csv(vectors).as_bytes())
}
