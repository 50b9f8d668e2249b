//! Raw signal ingestion: file parsing, segmentation, synthetic signals and
//! labeled dataset assembly.
//!
//! Two segmentation schemes mirror the public bearing datasets:
//!
//! * **CWRU** – consecutive 1670-sample windows (one shaft revolution at
//!   1750 rpm / 48 kHz) with 35 samples trimmed from each end, giving
//!   1600-sample segments. A 467 600-sample record yields 280 segments.
//! * **Paderborn** – the first and last sixteenth of the record are clipped,
//!   and the remainder is cut into 2500-sample windows. A 256 000-sample
//!   record keeps 224 000 samples and yields 89 segments.
//!
//! Remainders after windowing are discarded, never zero-padded.

mod csv_signal;
mod dataset;
pub mod manifest;
pub mod mat5;
mod segment;
mod synth;

pub use csv_signal::{read_csv_signal, write_csv_signal};
pub use dataset::{build_dataset, build_dataset_with, Dataset, Scheme, SegmentParams};
pub use segment::{segment_cwru, segment_paderborn, segment_plain};
pub use synth::{impulse_onsets, synth_generate, synth_generate_record, SynthSpec};

use crate::error::{Error, Result};

/// A raw labeled vibration signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub samples: Vec<f64>,
    pub sampling_rate_hz: f64,
    pub label: usize,
    /// File/variable name, or `"synthetic"`.
    pub source: String,
}

impl SignalRecord {
    pub fn new(samples: Vec<f64>, sampling_rate_hz: f64, label: usize, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        if samples.is_empty() {
            return Err(Error::EmptyFile);
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{source}: sample {i}")));
        }
        Ok(Self {
            samples,
            sampling_rate_hz,
            label,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A fixed-length window cut from a [`SignalRecord`]; the unit of
/// featurization and classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub values: Vec<f64>,
    pub label: usize,
    /// `"<record source>#<window index>"`.
    pub parent: String,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
