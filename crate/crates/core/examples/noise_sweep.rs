//! Train on clean segments, then evaluate with white Gaussian noise added
//! to the held-out folds at each SNR.
//!
//! ```bash
//! cargo run --release --example noise_sweep
//! ```

use faultlab::baselines::ForestConfig;
use faultlab::eval::{noise_sweep, stratified_kfold, sweep_csv, CvOptions, NoiseSpec, Pipeline};
use faultlab::features::DomainTag;
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 6.0,
        ..SynthSpec::default()
    };
    let records = (0..spec.n_classes)
        .map(|c| synth_generate(&spec, c))
        .collect::<faultlab::Result<Vec<_>>>()?;
    let data = build_dataset(&records, Scheme::Synthetic)?;
    let plan = stratified_kfold(&data.labels(), 5, 4)?;
    let pipeline = Pipeline::RandomForest {
        domain: DomainTag::WaveletL1,
        forest: ForestConfig {
            n_trees: 50,
            ..ForestConfig::default()
        },
    };
    for noisy_train in [false, true] {
        let noise = NoiseSpec {
            noisy_train,
            ..NoiseSpec::default()
        };
        let rows = noise_sweep(&data, &pipeline, &plan, &CvOptions::default(), &noise)?;
        println!("noisy_train={noisy_train}\n{}", sweep_csv(&rows));
    }
    Ok(())
}
