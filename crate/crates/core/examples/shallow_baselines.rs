//! Five-fold comparison of the shallow classifiers on time-domain and
//! level-1 wavelet features.
//!
//! ```bash
//! cargo run --release --example shallow_baselines
//! ```

use faultlab::baselines::{ForestConfig, LogRegConfig, MlpConfig};
use faultlab::eval::{run_cv, stratified_kfold, CvOptions, Pipeline};
use faultlab::features::DomainTag;
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 6.0,
        noise_std: 0.4,
        ..SynthSpec::default()
    };
    let records = (0..spec.n_classes)
        .map(|c| synth_generate(&spec, c))
        .collect::<faultlab::Result<Vec<_>>>()?;
    let data = build_dataset(&records, Scheme::Synthetic)?;
    let plan = stratified_kfold(&data.labels(), 5, 1)?;
    let opts = CvOptions::default();

    for domain in [DomainTag::Time, DomainTag::WaveletL1] {
        let pipelines = [
            Pipeline::RandomForest {
                domain,
                forest: ForestConfig::default(),
            },
            Pipeline::Knn { domain, k: 5 },
            Pipeline::LogReg {
                domain,
                logreg: LogRegConfig::default(),
            },
            Pipeline::Mlp {
                domain,
                mlp: MlpConfig {
                    epochs: 50,
                    ..MlpConfig::default()
                },
            },
        ];
        for p in &pipelines {
            let r = run_cv(&data, p, &plan, &opts, None)?;
            println!(
                "{:<22} accuracy {:.3} +- {:.3}  macro F1 {:.3}",
                r.classifier, r.mean_accuracy, r.std_accuracy, r.f1
            );
        }
    }
    Ok(())
}
