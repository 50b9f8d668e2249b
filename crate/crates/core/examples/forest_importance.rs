//! Rank the fourteen statistics by random-forest impurity importance on
//! synthetic segments, in each wavelet domain.
//!
//! ```bash
//! cargo run --release --example forest_importance
//! ```

use faultlab::baselines::{importance_csv, train_random_forest, FeatureMatrix, ForestConfig};
use faultlab::features::{featurize_dataset, DomainTag};
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 5.0,
        noise_std: 0.3,
        ..SynthSpec::default()
    };
    let records = (0..spec.n_classes)
        .map(|c| synth_generate(&spec, c))
        .collect::<faultlab::Result<Vec<_>>>()?;
    let data = build_dataset(&records, Scheme::Synthetic)?;

    for tag in [DomainTag::Time, DomainTag::WaveletL1, DomainTag::WaveletL3] {
        let matrix = FeatureMatrix::from_features(&featurize_dataset(&data, tag)?)?;
        let forest = train_random_forest(&matrix, &ForestConfig::default())?;
        println!("[{tag}] top five of {}:", matrix.n_features());
        for line in importance_csv(&forest).lines().skip(1).take(5) {
            println!("  {line}");
        }
    }
    Ok(())
}
