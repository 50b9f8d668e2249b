//! Train the CNN on a small synthetic split, report held-out accuracy, and
//! round-trip the model through a checkpoint file.
//!
//! ```bash
//! cargo run --release --example train_faultnet
//! ```

use faultlab::channels::ChannelSpec;
use faultlab::eval::{accuracy, channel_tensors, confusion_matrix, stratified_kfold};
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};
use faultlab::model::{train, FaultNetConfig, TrainedModel};

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 15.0,
        ..SynthSpec::default()
    };
    let records = (0..spec.n_classes)
        .map(|c| synth_generate(&spec, c))
        .collect::<faultlab::Result<Vec<_>>>()?;
    let data = build_dataset(&records, Scheme::Synthetic)?;
    let plan = stratified_kfold(&data.labels(), 4, 3)?;
    let (train_set, test_set) = (data.subset(&plan.train_indices(0)), data.subset(plan.test_indices(0)));

    let channels = ChannelSpec::all();
    let config = FaultNetConfig {
        in_channels: channels.n_channels(),
        n_classes: data.n_classes(),
        epochs: 6,
        batch_size: 16,
        seed: 11,
        ..FaultNetConfig::default()
    };
    let model = train(&config, &channel_tensors(&train_set, &channels)?, &train_set.labels())?;
    for e in &model.history {
        println!(
            "epoch {:>2}  loss {:.4}  train accuracy {:.3}",
            e.epoch, e.loss, e.accuracy
        );
    }

    let test_x = channel_tensors(&test_set, &channels)?;
    let (pred, _) = model.predict(&test_x)?;
    let cm = confusion_matrix(&test_set.labels(), &pred, data.n_classes())?;
    println!(
        "held-out accuracy {:.3} on {} segments, confusion {cm:?}",
        accuracy(&cm),
        test_set.len()
    );

    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("faultnet.json");
    model.save(&path)?;
    let restored = TrainedModel::load(&path)?;
    println!(
        "checkpoint {} bytes, same predictions after reload: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        restored.predict(&test_x)?.0 == pred
    );
    Ok(())
}
