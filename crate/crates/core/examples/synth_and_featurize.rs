//! Generate a synthetic three-class dataset, cut it into segments and print
//! the fourteen statistics of the first segment of each class, in the time
//! domain and on level 1-3 Haar approximations.
//!
//! ```bash
//! cargo run --example synth_and_featurize
//! ```

use faultlab::features::{features_in_domain, featurize_dataset, DomainTag, FEATURE_NAMES};
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 2.0,
        ..SynthSpec::default()
    };
    let records = (0..spec.n_classes)
        .map(|c| synth_generate(&spec, c))
        .collect::<faultlab::Result<Vec<_>>>()?;
    let data = build_dataset(&records, Scheme::Synthetic)?;
    println!(
        "{} segments of {} samples, counts {:?}",
        data.len(),
        data.segment_len().unwrap_or(0),
        data.class_counts()
    );

    let firsts: Vec<_> = (0..spec.n_classes)
        .filter_map(|c| data.segments.iter().find(|s| s.label == c))
        .collect();
    for tag in [
        DomainTag::Time,
        DomainTag::WaveletL1,
        DomainTag::WaveletL2,
        DomainTag::WaveletL3,
    ] {
        println!("\n[{tag}]");
        println!(
            "{:>18} {}",
            "",
            (0..firsts.len())
                .map(|c| format!("{:>12}", format!("class {c}")))
                .collect::<String>()
        );
        let vectors = firsts
            .iter()
            .map(|s| features_in_domain(&s.values, tag).map(|f| f.to_array()))
            .collect::<faultlab::Result<Vec<_>>>()?;
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let row: String = vectors.iter().map(|v| format!("{:>12.4}", v[i])).collect();
            println!("{name:>18} {row}");
        }
    }

    let all = featurize_dataset(&data, DomainTag::Time)?;
    println!("\nfeaturized {} segments", all.len());
    Ok(())
}
