use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::SignalRecord;
use crate::error::{Error, Result};

/// Reads a one-sample-per-line text file (LF or CRLF). When `has_header`
/// is set the first line is skipped. Blank lines are ignored.
pub fn read_csv_signal(
    path: impl AsRef<Path>,
    label: usize,
    sampling_rate_hz: f64,
    has_header: bool,
) -> Result<SignalRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let samples = parse_samples(&text, has_header)?;
    SignalRecord::new(samples, sampling_rate_hz, label, path.display().to_string())
}

pub(crate) fn parse_samples(text: &str, has_header: bool) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate().skip(usize::from(has_header)) {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("`{field}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("`{field}` is not finite"),
            });
        }
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(samples)
}

/// Writes samples one per line using the shortest round-trip representation.
pub fn write_csv_signal(path: impl AsRef<Path>, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(samples.len() * 20);
    for v in samples {
        writeln!(out, "{v:?}").expect("writing to a String cannot fail");
    }
    crate::cli::write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_in_file_order() {
        assert_eq!(parse_samples("1.5\n-2.0\n0.0", false).unwrap(), vec![1.5, -2.0, 0.0]);
        assert_eq!(parse_samples("1.5\r\n-2.0\r\n", false).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn header_handling() {
        assert!(matches!(
            parse_samples("a\n1", false),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(parse_samples("a\n1", true).unwrap(), vec![1.0]);
        assert!(matches!(
            parse_samples("x\n1\nbad", true),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn empty_file() {
        assert!(matches!(parse_samples("", false), Err(Error::EmptyFile)));
        assert!(matches!(parse_samples("header\n", true), Err(Error::EmptyFile)));
    }

    #[test]
    fn large_generated_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        let samples: Vec<f64> = (0..48_000).map(|i| (i as f64 * 0.01).sin()).collect();
        write_csv_signal(&path, &samples).unwrap();
        let rec = read_csv_signal(&path, 2, 48_000.0, false).unwrap();
        assert_eq!(rec.len(), 48_000);
        assert_eq!(rec.samples, samples);
        assert_eq!(rec.label, 2);
    }
}
