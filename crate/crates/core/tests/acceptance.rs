//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if
//! any fails. Oracles here are written independently of the library.

#[path = "common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use faultlab::baselines::{predict_forest, train_random_forest, FeatureMatrix, ForestConfig};
use faultlab::channels::ChannelSpec;
use faultlab::cli::{cmd_run, ExperimentConfig};
use faultlab::eval::{
    add_awgn, confusion_matrix, macro_prf, noise_sweep, run_cv, stratified_kfold, CvOptions, EvalReport, NoiseSpec,
    Pipeline,
};
use faultlab::features::{haar_dwt_step, inverse_haar, time_domain_features, FEATURE_NAMES, N_FEATURES};
use faultlab::ingest::mat5::{parse_mat5, MatMatrix};
use faultlab::ingest::{build_dataset_with, synth_generate_record, Dataset, Scheme, SegmentParams, SynthSpec};
use faultlab::model::{build_faultnet, FaultNetConfig};
use faultlab::nn::Layer;
use faultlab::seed;
use faultlab::Error;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn oracle_features(x: &[f64]) -> [f64; N_FEATURES] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let abs_mean = abs.iter().sum::<f64>() / n;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (minimum, maximum) = (sorted[0], sorted[sorted.len() - 1]);
    let abs_max = abs.iter().cloned().fold(0.0, f64::max);
    let rms = (x.iter().map(|v| v.powi(2)).sum::<f64>() / n).sqrt();
    let central = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let root_mean = x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / n;
    [
        mean,
        abs_mean,
        maximum,
        minimum,
        maximum - minimum,
        abs_max,
        rms,
        m2,
        abs_max / root_mean.powi(2),
        m4 / m2.powi(2) - 3.0,
        m3 / m2.powf(1.5),
        abs_max / abs_mean,
        abs_max / rms,
        rms / abs_mean,
    ]
}

fn feature_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(1);
    let mut worst = (0.0f64, "");
    for _ in 0..1000 {
        let len = rng.random_range(16..4096);
        let offset = rng.random_range(-2.0..2.0);
        let scale = rng.random_range(0.01..10.0);
        let x: Vec<f64> = (0..len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                offset + scale * z.powi(3).cbrt() * if rng.random_bool(0.05) { 6.0 } else { 1.0 }
            })
            .collect();
        let got = time_domain_features(&x).map_err(|e| e.to_string())?.to_array();
        for ((g, o), name) in got.iter().zip(oracle_features(&x)).zip(FEATURE_NAMES) {
            let rel = (g - o).abs() / g.abs().max(o.abs()).max(f64::MIN_POSITIVE);
            if rel > worst.0 {
                worst = (rel, name);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst.0 <= 1e-9 && secs < 10.0,
        format!("worst relative error {:.2e} ({}), {secs:.2} s", worst.0, worst.1),
    )
}

// ---------------------------------------------------------------- 2

fn gaussian_moments() -> Outcome {
    let mut rng = seed::rng(2);
    let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let f = time_domain_features(&x).map_err(|e| e.to_string())?;
    ensure(
        f.kurtosis.abs() <= 0.1 && f.skewness.abs() <= 0.05,
        format!("kurtosis {:.4}, skewness {:.4}", f.kurtosis, f.skewness),
    )
}

// ---------------------------------------------------------------- 3

fn haar_invariants() -> Outcome {
    let mut rng = seed::rng(3);
    let (mut energy, mut recon) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let len = 8 * rng.random_range(1..200);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut levels = vec![x.clone()];
        let mut details = Vec::new();
        for _ in 0..3 {
            let input = levels.last().unwrap();
            let c = haar_dwt_step(input).map_err(|e| e.to_string())?;
            let e_in: f64 = input.iter().map(|v| v * v).sum();
            let e_out: f64 = c.approx.iter().chain(&c.detail).map(|v| v * v).sum();
            energy = energy.max((e_in - e_out).abs() / e_in);
            details.push(c.detail);
            levels.push(c.approx);
        }
        let mut back = levels.pop().unwrap();
        while let Some(d) = details.pop() {
            back = inverse_haar(&back, &d).map_err(|e| e.to_string())?;
            let expect = levels.pop().unwrap();
            for (a, b) in expect.iter().zip(&back) {
                recon = recon.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    ensure(
        energy <= 1e-9 && recon <= 1e-12,
        format!("energy error {energy:.2e}, reconstruction error {recon:.2e}"),
    )
}

// ---------------------------------------------------------------- 4

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let results = common::suite::all_layers();
    let secs = start.elapsed().as_secs_f64();
    let (name, worst) = results
        .iter()
        .cloned()
        .fold(("", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    ensure(
        worst < common::TOL && secs < 60.0,
        format!(
            "{} layers x {} instances, worst {worst:.2e} ({name}), {secs:.2} s",
            results.len(),
            common::suite::INSTANCES
        ),
    )
}

// ---------------------------------------------------------------- 5

fn flatten_width(hw: usize) -> Result<usize, String> {
    let config = FaultNetConfig {
        input_hw: (hw, hw),
        ..FaultNetConfig::default()
    };
    let net = build_faultnet(&config).map_err(|e| e.to_string())?;
    net.layers
        .iter()
        .find_map(|l| match l {
            Layer::Dense(d) => Some(d.weight.shape()[0]),
            _ => None,
        })
        .ok_or_else(|| "no dense layer".to_string())
}

fn architecture_shape() -> Outcome {
    let (a, b) = (flatten_width(50)?, flatten_width(40)?);
    ensure(a == 5184 && b == 3136, format!("50x50 -> {a}, 40x40 -> {b}"))
}

// ---------------------------------------------------------------- 6-8

const EPOCHS: usize = 6;
const BATCH: usize = 16;
const MASTER: u64 = 2024;

fn synthetic_dataset() -> Dataset {
    let spec = SynthSpec::default();
    let records: Vec<_> = (0..spec.n_classes)
        .map(|c| synth_generate_record(&spec, c, 0).unwrap())
        .collect();
    build_dataset_with(&records, Scheme::Synthetic, &SegmentParams::default()).unwrap()
}

fn faultnet(channels: ChannelSpec) -> Pipeline {
    Pipeline::FaultNet {
        channels,
        model: FaultNetConfig {
            epochs: EPOCHS,
            batch_size: BATCH,
            ..FaultNetConfig::default()
        },
    }
}

fn cross_validate(data: &Dataset, pipeline: &Pipeline) -> Result<EvalReport, String> {
    let plan = stratified_kfold(&data.labels(), 5, seed::derive(MASTER, &[0])).map_err(|e| e.to_string())?;
    let opts = CvOptions {
        model_seed: seed::derive(MASTER, &[1]),
        ..CvOptions::default()
    };
    run_cv(data, pipeline, &plan, &opts, None).map_err(|e| e.to_string())
}

fn end_to_end(data: &Dataset, three: &mut Option<f64>) -> Outcome {
    let start = Instant::now();
    let report = cross_validate(data, &faultnet(ChannelSpec::all()))?;
    let secs = start.elapsed().as_secs_f64();
    *three = Some(report.mean_accuracy);
    let seg_len = data.segment_len().unwrap_or(0);
    ensure(
        data.len() >= 300 && seg_len == 2500 && report.mean_accuracy >= 0.95 && secs < 300.0,
        format!(
            "{} segments of {seg_len}, {EPOCHS} epochs, folds {:?}, mean {:.4}, {secs:.1} s",
            data.len(),
            rounded(&report.fold_accuracy),
            report.mean_accuracy
        ),
    )
}

fn channel_trend(data: &Dataset, three: Option<f64>) -> Outcome {
    let three = three.ok_or("3-channel run did not complete")?;
    let one = cross_validate(data, &faultnet(ChannelSpec::raw_only()))?.mean_accuracy;
    ensure(three >= one - 0.02, format!("3-channel {three:.4}, 1-channel {one:.4}"))
}

fn noise_trend(data: &Dataset) -> Outcome {
    let plan = stratified_kfold(&data.labels(), 5, seed::derive(MASTER, &[0])).map_err(|e| e.to_string())?;
    let opts = CvOptions {
        model_seed: seed::derive(MASTER, &[1]),
        ..CvOptions::default()
    };
    let spec = NoiseSpec {
        snr_db: vec![-4.0, 0.0, 10.0],
        seed: seed::derive(MASTER, &[2]),
        noisy_train: false,
    };
    let rows = noise_sweep(data, &faultnet(ChannelSpec::all()), &plan, &opts, &spec).map_err(|e| e.to_string())?;
    let acc: BTreeMap<i64, f64> = rows.iter().map(|r| (r.snr_db as i64, r.mean_accuracy)).collect();
    let (lo, mid, hi) = (acc[&-4], acc[&0], acc[&10]);
    ensure(
        hi >= mid && mid >= lo - 0.02,
        format!("accuracy at -4 dB {lo:.4}, 0 dB {mid:.4}, 10 dB {hi:.4}"),
    )
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| (a * 1e4).round() / 1e4).collect()
}

// ---------------------------------------------------------------- 9

fn awgn_calibration() -> Outcome {
    let n = 1_000_000;
    let signal: Vec<f64> = (0..n)
        .map(|i| std::f64::consts::SQRT_2 * (i as f64 * 0.0123).sin())
        .collect();
    let power = signal.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut parts = Vec::new();
    let mut ok = (power - 1.0).abs() < 1e-3;
    for (i, target) in [-4.0, 0.0, 10.0].into_iter().enumerate() {
        let mut rng = seed::rng(90 + i as u64);
        let noisy = add_awgn(&signal, target, &mut rng).map_err(|e| e.to_string())?;
        let noise_power = noisy.iter().zip(&signal).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        let snr = 10.0 * (power / noise_power).log10();
        ok &= (snr - target).abs() <= 0.2;
        parts.push(format!("{target} dB -> {snr:.3}"));
    }
    ensure(ok, parts.join(", "))
}

// ---------------------------------------------------------------- 10

fn fold_properties() -> Outcome {
    let mut rng = seed::rng(10);
    for case in 0..200 {
        let k = rng.random_range(2..8);
        let n_classes = rng.random_range(2..6);
        let mut labels = Vec::new();
        for c in 0..n_classes {
            labels.extend(std::iter::repeat_n(c, rng.random_range(k..k + 40)));
        }
        for i in (1..labels.len()).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let s: u64 = rng.random();
        let plan = stratified_kfold(&labels, k, s).map_err(|e| format!("case {case}: {e}"))?;
        let mut seen = vec![0usize; labels.len()];
        for f in &plan.folds {
            for &i in f {
                *seen.get_mut(i).ok_or(format!("case {case}: index {i} out of range"))? += 1;
            }
        }
        if plan.folds.len() != k || seen.iter().any(|&c| c != 1) {
            return Err(format!("case {case}: not a partition into {k} folds"));
        }
        for c in 0..n_classes {
            let per: Vec<usize> = plan
                .folds
                .iter()
                .map(|f| f.iter().filter(|&&i| labels[i] == c).count())
                .collect();
            if per.iter().max().unwrap() - per.iter().min().unwrap() > 1 {
                return Err(format!("case {case}: class {c} counts {per:?}"));
            }
        }
        if stratified_kfold(&labels, k, s).map_err(|e| e.to_string())? != plan {
            return Err(format!("case {case}: not deterministic"));
        }
    }
    Ok("200 label vectors: partition, stratification, determinism".into())
}

// ---------------------------------------------------------------- 11

fn metric_oracle() -> Outcome {
    let cm = confusion_matrix(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).map_err(|e| e.to_string())?;
    let f1 = macro_prf(&cm).f1;
    ensure(
        cm == vec![vec![1, 1], vec![0, 2]] && (f1 - 11.0 / 15.0).abs() <= 1e-12,
        format!("cm {cm:?}, macro F1 {f1:.15} vs 11/15"),
    )
}

// ---------------------------------------------------------------- 12

fn forest_sanity() -> Outcome {
    let mut rng = seed::rng(12);
    let (mut rows, mut labels) = (Vec::new(), Vec::new());
    for i in 0..150 {
        let c = i % 3;
        let mut row: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        row[2] = c as f64 + rng.random_range(0.0..0.5);
        rows.push(row);
        labels.push(c);
    }
    let matrix = FeatureMatrix::unnamed(rows.clone(), labels.clone()).map_err(|e| e.to_string())?;
    let model = train_random_forest(&matrix, &ForestConfig::default()).map_err(|e| e.to_string())?;
    let pred = predict_forest(&model, &rows).map_err(|e| e.to_string())?;
    let acc = pred.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64;
    let imp = &model.importances;
    let top = (0..imp.len()).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
    let sum: f64 = imp.iter().sum();
    ensure(
        top == 2 && imp[2] > 0.5 && acc == 1.0 && (sum - 1.0).abs() <= 1e-9,
        format!("top feature f{top} share {:.4}, accuracy {acc}, sum {sum:.12}", imp[2]),
    )
}

// ---------------------------------------------------------------- 13

/// Level-5 MAT bytes for one double matrix, built field by field.
fn golden_mat(name: &str, rows: u32, cols: u32, col_major: &[f64], big: bool, compress: bool) -> Vec<u8> {
    let u32b = |v: u32| if big { v.to_be_bytes() } else { v.to_le_bytes() };
    let i32b = |v: i32| if big { v.to_be_bytes() } else { v.to_le_bytes() };
    let pad = |b: &mut Vec<u8>| b.resize(b.len().div_ceil(8) * 8, 0);
    let mut m = Vec::new();
    m.extend(u32b(6)); // miUINT32
    m.extend(u32b(8));
    m.extend(u32b(6)); // mxDOUBLE_CLASS, no flags
    m.extend(u32b(0));
    m.extend(u32b(5)); // miINT32
    m.extend(u32b(8));
    m.extend(i32b(rows as i32));
    m.extend(i32b(cols as i32));
    m.extend(u32b(1)); // miINT8
    m.extend(u32b(name.len() as u32));
    m.extend(name.as_bytes());
    pad(&mut m);
    m.extend(u32b(9)); // miDOUBLE
    m.extend(u32b(8 * col_major.len() as u32));
    for v in col_major {
        m.extend(if big { v.to_be_bytes() } else { v.to_le_bytes() });
    }
    let mut element = Vec::new();
    element.extend(u32b(14)); // miMATRIX
    element.extend(u32b(m.len() as u32));
    element.extend(m);

    let mut out = format!("MATLAB 5.0 MAT-file, Platform: test, Created on: {}", "never").into_bytes();
    out.resize(116, b' ');
    out.extend([0u8; 8]);
    out.extend(if big {
        0x0100u16.to_be_bytes()
    } else {
        0x0100u16.to_le_bytes()
    });
    out.extend(if big { b"MI" } else { b"IM" });
    if compress {
        let mut z = flate2::write::ZlibEncoder::new(Vec::new(), flate2::Compression::default());
        z.write_all(&element).unwrap();
        let packed = z.finish().unwrap();
        out.extend(u32b(15)); // miCOMPRESSED
        out.extend(u32b(packed.len() as u32));
        out.extend(packed);
    } else {
        out.extend(element);
    }
    out
}

fn mat_round_trip() -> Outcome {
    let cases: [(&str, u32, u32, Vec<f64>); 2] = [
        ("X_DE_time", 3, 1, vec![1.0, 2.0, 3.0]),
        ("B", 2, 3, vec![1.5, -4.0, 2.25, 5.0, -0.125, 6.0]),
    ];
    let mut n = 0;
    for (name, r, c, col_major) in &cases {
        let row_major: Vec<f64> = (0..*r as usize)
            .flat_map(|i| (0..*c as usize).map(move |j| (i, j)))
            .map(|(i, j)| col_major[j * *r as usize + i])
            .collect();
        let expect = MatMatrix::from_row_major(*r as usize, *c as usize, row_major).map_err(|e| e.to_string())?;
        for big in [false, true] {
            for compress in [false, true] {
                let bytes = golden_mat(name, *r, *c, col_major, big, compress);
                let parsed = parse_mat5(&bytes).map_err(|e| format!("{name} big={big} z={compress}: {e}"))?;
                if parsed.len() != 1 || parsed.get(*name) != Some(&expect) {
                    return Err(format!("{name} big={big} z={compress}: got {parsed:?}"));
                }
                n += 1;
            }
        }
    }
    let good = golden_mat("X_DE_time", 3, 1, &[1.0, 2.0, 3.0], false, false);
    let mut text = good.clone();
    text[0] = b'N';
    let mut endian = good;
    endian[126..128].copy_from_slice(b"XX");
    let bad = [parse_mat5(&text), parse_mat5(&endian)];
    ensure(
        bad.iter().all(|r| matches!(r, Err(Error::BadMagic))),
        format!(
            "{n} golden fixtures exact; corrupt headers give {:?}",
            bad.iter()
                .map(|r| r.as_ref().err().map(|e| e.kind()))
                .collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 14

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        ("random_forest", "[pipeline]\nkind = \"random_forest\"\n[evaluation]\nseed = 77\n"),
        (
            "faultnet",
            "[dataset.synth]\nduration_s = 3.0\n[pipeline]\nkind = \"fault_net\"\n[pipeline.model]\nepochs = 2\nbatch_size = 8\n[evaluation]\nk = 3\nseed = 77\n",
        ),
    ];
    let mut parts = Vec::new();
    for (label, text) in configs {
        let cfg = ExperimentConfig::from_toml(text, "inline.toml".as_ref()).map_err(|e| e.to_string())?;
        let mut files: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
        for run in ["a", "b"] {
            let out = dir.path().join(format!("{label}_{run}"));
            cmd_run(&cfg, dir.path(), &out).map_err(|e| e.to_string())?;
            let mut m = BTreeMap::new();
            for entry in std::fs::read_dir(&out).map_err(|e| e.to_string())? {
                let p = entry.map_err(|e| e.to_string())?.path();
                m.insert(
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).map_err(|e| e.to_string())?,
                );
            }
            files.push(m);
        }
        if files[0] != files[1] {
            return Err(format!("{label}: report files differ"));
        }
        parts.push(format!("{label}: {} files identical", files[0].len()));
    }
    Ok(parts.join(", "))
}

// ----------------------------------------------------------------

fn main() {
    let data = std::cell::OnceCell::new();
    let data = || data.get_or_init(synthetic_dataset);
    let mut three = None;
    let mut failed = 0;
    let mut report = |id: u32, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {title}: {detail}");
    };
    report(1, "feature oracle", &mut feature_oracle);
    report(2, "gaussian moments", &mut gaussian_moments);
    report(3, "haar invariants", &mut haar_invariants);
    report(4, "gradient suite", &mut gradient_suite);
    report(5, "flatten width", &mut architecture_shape);
    report(6, "synthetic end to end", &mut || end_to_end(data(), &mut three));
    report(7, "channel trend", &mut || channel_trend(data(), three));
    report(8, "noise trend", &mut || noise_trend(data()));
    report(9, "awgn calibration", &mut awgn_calibration);
    report(10, "fold plan", &mut fold_properties);
    report(11, "metric oracle", &mut metric_oracle);
    report(12, "random forest", &mut forest_sanity);
    report(13, "mat round trip", &mut mat_round_trip);
    report(14, "reproducibility", &mut reproducibility);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
