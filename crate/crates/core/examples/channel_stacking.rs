//! Turn one 2500-sample segment into the 3x50x50 network input: the raw
//! signal plus its sliding-window mean and median, each reshaped to 50x50.
//!
//! ```bash
//! cargo run --example channel_stacking
//! ```

use faultlab::channels::{square_side, stack_and_reshape, ChannelSpec};
use faultlab::ingest::{build_dataset, synth_generate, Scheme, SynthSpec};

fn summary(name: &str, v: &[f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    println!(
        "{name:>7}: mean {mean:+.4} std {:.4} range [{lo:+.3}, {hi:+.3}]",
        var.sqrt()
    );
}

fn main() -> faultlab::Result<()> {
    let spec = SynthSpec {
        duration_s: 0.5,
        ..SynthSpec::default()
    };
    let data = build_dataset(&[synth_generate(&spec, 1)?], Scheme::Synthetic)?;
    let segment = &data.segments[0];
    let side = square_side(segment.len()).expect("square segment");

    for spec in [ChannelSpec::raw_only(), ChannelSpec::raw_mean(), ChannelSpec::all()] {
        let t = stack_and_reshape(segment, &spec, side, side)?;
        println!("{spec:?} -> shape {:?}", t.data.shape());
    }

    let t = stack_and_reshape(segment, &ChannelSpec::all(), side, side)?;
    let plane = side * side;
    for (i, name) in ["raw", "mean", "median"].iter().enumerate() {
        summary(name, &t.data.data()[i * plane..(i + 1) * plane]);
    }
    Ok(())
}
