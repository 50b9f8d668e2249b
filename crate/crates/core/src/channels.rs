//! FaultNet input construction: a segment reshaped row-major into an
//! `h x w` image, optionally stacked with sliding-window mean and median
//! channels.
//!
//! The derived channels scan the 1-D segment with a stride-1 window after
//! appending `window - 1` zeros to its tail, so they have the same length
//! as the segment. They are computed before reshaping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Segment;
use crate::nn::Tensor;

pub const DEFAULT_WINDOW: usize = 10;

fn check(values: &[f64], window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::InvalidSpec("window must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(())
}

fn padded(values: &[f64], window: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(values.len() + window - 1);
    p.extend_from_slice(values);
    p.resize(values.len() + window - 1, 0.0);
    p
}

/// `out[i]` = mean of `padded[i..i + window]`.
pub fn sliding_mean_channel(values: &[f64], window: usize) -> Result<Vec<f64>> {
    check(values, window)?;
    let w = window as f64;
    Ok(padded(values, window)
        .windows(window)
        .map(|win| win.iter().sum::<f64>() / w)
        .collect())
}

/// `out[i]` = median of `padded[i..i + window]`; an even window averages the
/// two central order statistics.
pub fn sliding_median_channel(values: &[f64], window: usize) -> Result<Vec<f64>> {
    check(values, window)?;
    let mut buf = vec![0.0; window];
    Ok(padded(values, window)
        .windows(window)
        .map(|win| {
            buf.copy_from_slice(win);
            buf.sort_unstable_by(f64::total_cmp);
            if window % 2 == 1 {
                buf[window / 2]
            } else {
                (buf[window / 2 - 1] + buf[window / 2]) / 2.0
            }
        })
        .collect())
}

/// Which derived channels to stack behind the raw channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    pub mean: bool,
    pub median: bool,
    pub window: usize,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self::all()
    }
}

impl ChannelSpec {
    pub fn raw_only() -> Self {
        Self {
            mean: false,
            median: false,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn raw_mean() -> Self {
        Self {
            mean: true,
            ..Self::raw_only()
        }
    }

    pub fn all() -> Self {
        Self {
            mean: true,
            median: true,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn n_channels(&self) -> usize {
        1 + usize::from(self.mean) + usize::from(self.median)
    }
}

/// A `C x H x W` network input. Channel 0 is the raw signal, followed by
/// the mean channel and then the median channel when present.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub data: Tensor,
    pub label: usize,
}

/// Builds the stacked input for one segment.
pub fn stack_and_reshape(segment: &Segment, channels: &ChannelSpec, h: usize, w: usize) -> Result<ChannelTensor> {
    let n = segment.len();
    if n != h * w {
        return Err(Error::ShapeMismatch(format!(
            "segment of {n} samples cannot be reshaped to {h}x{w}"
        )));
    }
    let mut data = Vec::with_capacity(channels.n_channels() * n);
    data.extend_from_slice(&segment.values);
    if channels.mean {
        data.extend(sliding_mean_channel(&segment.values, channels.window)?);
    }
    if channels.median {
        data.extend(sliding_median_channel(&segment.values, channels.window)?);
    }
    Ok(ChannelTensor {
        data: Tensor::new(vec![channels.n_channels(), h, w], data)?,
        label: segment.label,
    })
}

/// Side length of a square image holding `len` samples, if one exists.
pub fn square_side(len: usize) -> Option<usize> {
    let s = (len as f64).sqrt().round() as usize;
    (s * s == len).then_some(s)
}
