use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{segment_cwru, segment_paderborn, segment_plain, Segment, SignalRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Ten CWRU health conditions, 1670-sample windows trimmed to 1600.
    Cwru10,
    /// Healthy / inner race / outer race, clipped then 2500-sample windows.
    Paderborn3,
    /// Generated signals, plain windows.
    Synthetic,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Cwru10 => "cwru10",
            Scheme::Paderborn3 => "paderborn3",
            Scheme::Synthetic => "synthetic",
        })
    }
}

const CWRU_CLASSES: [&str; 10] = [
    "normal",
    "ball_0.18mm",
    "ball_0.36mm",
    "ball_0.53mm",
    "inner_race_0.18mm",
    "inner_race_0.36mm",
    "inner_race_0.53mm",
    "outer_race_0.18mm",
    "outer_race_0.36mm",
    "outer_race_0.53mm",
];

const PADERBORN_CLASSES: [&str; 3] = ["healthy", "inner_race", "outer_race"];

impl Scheme {
    /// Fixed class names, or `None` for the synthetic scheme whose classes
    /// come from the records.
    pub fn class_names(&self) -> Option<&'static [&'static str]> {
        match self {
            Scheme::Cwru10 => Some(&CWRU_CLASSES),
            Scheme::Paderborn3 => Some(&PADERBORN_CLASSES),
            Scheme::Synthetic => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentParams {
    pub cwru_window: usize,
    pub cwru_trim: usize,
    pub paderborn_window: usize,
    pub paderborn_clip_fraction: f64,
    pub synthetic_window: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            cwru_window: 1670,
            cwru_trim: 35,
            paderborn_window: 2500,
            paderborn_clip_fraction: 1.0 / 16.0,
            synthetic_window: 2500,
        }
    }
}

impl SegmentParams {
    pub fn segment_len(&self, scheme: Scheme) -> usize {
        match scheme {
            Scheme::Cwru10 => self.cwru_window - 2 * self.cwru_trim,
            Scheme::Paderborn3 => self.paderborn_window,
            Scheme::Synthetic => self.synthetic_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub segments: Vec<Segment>,
    pub class_names: BTreeMap<usize, String>,
    pub scheme: Scheme,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.keys().next_back().map_or(0, |k| k + 1)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.label).collect()
    }

    /// Segment count per class label.
    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts: BTreeMap<usize, usize> = self.class_names.keys().map(|&k| (k, 0)).collect();
        for s in &self.segments {
            *counts.entry(s.label).or_default() += 1;
        }
        counts
    }

    pub fn segment_len(&self) -> Option<usize> {
        self.segments.first().map(Segment::len)
    }

    /// A dataset view restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            segments: indices.iter().map(|&i| self.segments[i].clone()).collect(),
            class_names: self.class_names.clone(),
            scheme: self.scheme,
        }
    }
}

pub fn build_dataset(records: &[SignalRecord], scheme: Scheme) -> Result<Dataset> {
    build_dataset_with(records, scheme, &SegmentParams::default())
}

/// Segments each record with the scheme's rule and labels the result.
pub fn build_dataset_with(records: &[SignalRecord], scheme: Scheme, params: &SegmentParams) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut class_names = BTreeMap::new();
    match scheme.class_names() {
        Some(names) => {
            for r in records {
                if r.label >= names.len() {
                    return Err(Error::UnknownLabel {
                        label: r.label,
                        scheme: scheme.to_string(),
                    });
                }
            }
            class_names.extend(names.iter().enumerate().map(|(i, n)| (i, n.to_string())));
        }
        None => {
            let max = records.iter().map(|r| r.label).max().unwrap_or(0);
            class_names.extend((0..=max).map(|i| (i, format!("class{i}"))));
        }
    }

    let mut segments = Vec::new();
    for r in records {
        let segs = match scheme {
            Scheme::Cwru10 => segment_cwru(r, params.cwru_window, params.cwru_trim)?,
            Scheme::Paderborn3 => segment_paderborn(r, params.paderborn_window, params.paderborn_clip_fraction)?,
            Scheme::Synthetic => segment_plain(r, params.synthetic_window)?,
        };
        segments.extend(segs);
    }
    if segments.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        segments,
        class_names,
        scheme,
    })
}
