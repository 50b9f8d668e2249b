use super::{Segment, SignalRecord};
use crate::error::{Error, Result};

fn window(record: &SignalRecord, index: usize, values: &[f64]) -> Segment {
    Segment {
        values: values.to_vec(),
        label: record.label,
        parent: format!("{}#{}", record.source, index),
    }
}

/// Cuts consecutive `seg_len` windows and trims `trim` samples from both
/// ends of each, so segments have `seg_len - 2 * trim` samples.
pub fn segment_cwru(record: &SignalRecord, seg_len: usize, trim: usize) -> Result<Vec<Segment>> {
    if seg_len == 0 || 2 * trim >= seg_len {
        return Err(Error::InvalidSpec(format!(
            "window {seg_len} cannot be trimmed by {trim} at both ends"
        )));
    }
    let n = record.len();
    if n < seg_len {
        return Err(Error::TooShort {
            needed: seg_len,
            actual: n,
        });
    }
    Ok(record
        .samples
        .chunks_exact(seg_len)
        .enumerate()
        .map(|(i, w)| window(record, i, &w[trim..seg_len - trim]))
        .collect())
}

/// Drops the first and last `floor(clip_fraction * n)` samples and cuts
/// the remainder into consecutive `window`-sample segments.
pub fn segment_paderborn(record: &SignalRecord, window_len: usize, clip_fraction: f64) -> Result<Vec<Segment>> {
    if window_len == 0 || !(0.0..0.5).contains(&clip_fraction) {
        return Err(Error::InvalidSpec(format!(
            "window {window_len} with clip fraction {clip_fraction}"
        )));
    }
    let n = record.len();
    let clip = (clip_fraction * n as f64).floor() as usize;
    let kept = &record.samples[clip..n - clip];
    if kept.len() < window_len {
        return Err(Error::TooShort {
            needed: (window_len as f64 / (1.0 - 2.0 * clip_fraction)).ceil() as usize,
            actual: n,
        });
    }
    Ok(kept
        .chunks_exact(window_len)
        .enumerate()
        .map(|(i, w)| window(record, i, w))
        .collect())
}

/// Consecutive non-overlapping windows without trimming or clipping.
pub fn segment_plain(record: &SignalRecord, window_len: usize) -> Result<Vec<Segment>> {
    if window_len == 0 {
        return Err(Error::InvalidSpec("window length must be positive".into()));
    }
    if record.len() < window_len {
        return Err(Error::TooShort {
            needed: window_len,
            actual: record.len(),
        });
    }
    Ok(record
        .samples
        .chunks_exact(window_len)
        .enumerate()
        .map(|(i, w)| window(record, i, w))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> SignalRecord {
        SignalRecord::new((0..n).map(|i| i as f64).collect(), 48_000.0, 3, "ramp").unwrap()
    }

    #[test]
    fn cwru_full_record_gives_280_segments() {
        let segs = segment_cwru(&ramp(467_600), 1670, 35).unwrap();
        assert_eq!(segs.len(), 280);
        assert!(segs.iter().all(|s| s.len() == 1600 && s.label == 3));
    }

    #[test]
    fn cwru_too_short() {
        assert!(matches!(
            segment_cwru(&ramp(1000), 1670, 35),
            Err(Error::TooShort {
                needed: 1670,
                actual: 1000
            })
        ));
    }

    #[test]
    fn cwru_index_arithmetic() {
        let segs = segment_cwru(&ramp(3340), 1670, 35).unwrap();
        assert_eq!(segs.len(), 2);
        // oracle: window w keeps indices w*1670+35 .. (w+1)*1670-35
        for (w, seg) in segs.iter().enumerate() {
            let expected: Vec<f64> = (w * 1670 + 35..(w + 1) * 1670 - 35).map(|i| i as f64).collect();
            assert_eq!(seg.values, expected);
        }
        assert_eq!(segs[0].values[0], 35.0);
        assert_eq!(*segs[0].values.last().unwrap(), 1634.0);
        assert_eq!(segs[1].parent, "ramp#1");
    }

    #[test]
    fn cwru_accounting_identity() {
        for n in [1670, 1671, 5000, 10_019] {
            let segs = segment_cwru(&ramp(n), 1670, 35).unwrap();
            let kept: usize = segs.iter().map(Segment::len).sum();
            let trims = segs.len() * 70;
            let remainder = n % 1670;
            assert_eq!(kept + trims + remainder, n);
        }
    }

    #[test]
    fn paderborn_clipping_and_windows() {
        let segs = segment_paderborn(&ramp(256_000), 2500, 1.0 / 16.0).unwrap();
        assert_eq!(segs.len(), 89);
        assert_eq!(segs[0].values[0], 16_000.0);
        let kept = 256_000 - 2 * 16_000;
        assert_eq!(kept, 224_000);
        assert_eq!(kept / 2500, 89);
    }

    #[test]
    fn paderborn_too_short() {
        assert!(matches!(
            segment_paderborn(&ramp(100), 2500, 1.0 / 16.0),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn segmentation_is_pure() {
        let r = ramp(9000);
        assert_eq!(segment_cwru(&r, 1670, 35).unwrap(), segment_cwru(&r, 1670, 35).unwrap());
    }
}
