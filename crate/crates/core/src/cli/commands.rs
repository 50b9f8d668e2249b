use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SeedPlan};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::eval::{
    confusion_csv, noise_sweep, run_cv, stratified_kfold, sweep_csv, CvOptions, EvalReport, NoiseSpec, SweepRow,
};
use crate::ingest::manifest::{Manifest, ManifestEntry, MANIFEST_VERSION};
use crate::ingest::{build_dataset_with, synth_generate_record, write_csv_signal, Dataset, Scheme};

pub const REPORT_FORMAT: &str = "faultlab-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub scheme: Scheme,
    pub n_segments: usize,
    pub segment_len: usize,
    /// `(class name, segment count)` by label.
    pub class_counts: Vec<(String, usize)>,
}

impl DatasetSummary {
    fn of(data: &Dataset) -> Self {
        let counts = data.class_counts();
        Self {
            scheme: data.scheme,
            n_segments: data.len(),
            segment_len: data.segment_len().unwrap_or(0),
            class_counts: counts
                .iter()
                .map(|(c, n)| {
                    (
                        data.class_names.get(c).cloned().unwrap_or_else(|| format!("class{c}")),
                        *n,
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    /// Resolved config; rerunning it reproduces this report.
    pub config: ExperimentConfig,
    pub seeds: SeedPlan,
    pub dataset: DatasetSummary,
    pub evaluation: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub version: u32,
    pub config: ExperimentConfig,
    pub seeds: SeedPlan,
    pub dataset: DatasetSummary,
    pub rows: Vec<SweepRow>,
}

/// Files written so far; removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn rollback(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }

    /// Runs `f`, undoing its writes on error.
    fn guarded(mut self, f: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        match f(&mut self) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.rollback();
                Err(e)
            }
        }
    }
}

fn synth_records(cfg: &ExperimentConfig) -> Result<Vec<(usize, u64)>> {
    cfg.dataset.synth.validate()?;
    Ok((0..cfg.dataset.synth.n_classes)
        .flat_map(|c| (0..cfg.dataset.records_per_class as u64).map(move |r| (c, r)))
        .collect())
}

/// The segmented dataset named by `cfg`. A relative manifest path resolves
/// against `base_dir`, and record paths against the manifest's directory.
pub fn load_dataset(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Dataset> {
    let d = &cfg.dataset;
    match &d.manifest {
        Some(m) => {
            let path = base_dir.join(m);
            let manifest = Manifest::load(&path)?;
            if let Some(s) = d.scheme.filter(|&s| s != manifest.scheme) {
                return Err(Error::InvalidConfig(format!(
                    "dataset.scheme {s} disagrees with manifest scheme {}",
                    manifest.scheme
                )));
            }
            let records = manifest.load_records(path.parent().unwrap_or(Path::new("")))?;
            build_dataset_with(&records, manifest.scheme, &d.segment)
        }
        None => {
            let records = synth_records(cfg)?
                .into_iter()
                .map(|(c, r)| synth_generate_record(&d.synth, c, r))
                .collect::<Result<Vec<_>>>()?;
            build_dataset_with(&records, Scheme::Synthetic, &d.segment)
        }
    }
}

/// Writes one CSV per class and record plus `manifest.toml`; returns the
/// manifest path.
pub fn cmd_synth(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let plan = synth_records(cfg)?;
    let spec = &cfg.dataset.synth;
    let mut entries = Vec::new();
    Outputs::new(out_dir)?.guarded(|out| {
        for &(c, r) in &plan {
            let name = format!("class{c}_rec{r}.csv");
            let record = synth_generate_record(spec, c, r)?;
            write_csv_signal(out.dir.join(&name), &record.samples)?;
            out.written.push(out.dir.join(&name));
            entries.push(ManifestEntry {
                path: name.into(),
                label: c,
                sampling_rate_hz: spec.sampling_rate_hz,
                variable: None,
                has_header: false,
            });
        }
        let manifest = Manifest {
            version: MANIFEST_VERSION,
            scheme: Scheme::Synthetic,
            records: entries,
        };
        out.write("manifest.toml", manifest.to_toml().as_bytes())
    })?;
    Ok(out_dir.join("manifest.toml"))
}

struct Prepared {
    echo: ExperimentConfig,
    seeds: SeedPlan,
    data: Dataset,
}

fn prepare(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Prepared> {
    cfg.validate()?;
    let data = load_dataset(cfg, base_dir)?;
    let noise_stream = cfg.evaluation.noise.as_ref().map_or(0, |n| n.seed);
    Ok(Prepared {
        echo: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        seeds: SeedPlan::new(cfg.evaluation.seed, noise_stream),
        data,
    })
}

fn history_csv(eval: &EvalReport) -> String {
    let mut s = String::from("fold,epoch,loss,accuracy\n");
    for (fold, h) in eval.histories.iter().enumerate() {
        for e in h {
            s.push_str(&format!("{fold},{},{:?},{:?}\n", e.epoch, e.loss, e.accuracy));
        }
    }
    s
}

fn importance_csv(imp: &[(String, f64)]) -> String {
    let mut order: Vec<usize> = (0..imp.len()).collect();
    order.sort_by(|&a, &b| imp[b].1.total_cmp(&imp[a].1).then(a.cmp(&b)));
    let mut s = String::from("feature,importance\n");
    for i in order {
        s.push_str(&format!("{},{:?}\n", imp[i].0, imp[i].1));
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

/// Cross-validates the configured pipeline and writes the run artifacts.
pub fn cmd_run(cfg: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<RunReport> {
    let p = prepare(cfg, base_dir)?;
    let plan = stratified_kfold(&p.data.labels(), cfg.evaluation.k, p.seeds.fold_plan)?;
    let opts = CvOptions {
        model_seed: p.seeds.model,
        averaging: cfg.evaluation.averaging,
    };
    let evaluation = run_cv(&p.data, &cfg.pipeline, &plan, &opts, None)?;
    let report = RunReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        config: p.echo,
        seeds: p.seeds,
        dataset: DatasetSummary::of(&p.data),
        evaluation,
    };
    let ev = &report.evaluation;
    Outputs::new(out_dir)?.guarded(|out| {
        out.write("report.json", &to_json(&report))?;
        out.write(
            "confusion.csv",
            confusion_csv(&ev.confusion, &ev.class_names).as_bytes(),
        )?;
        out.write("history.csv", history_csv(ev).as_bytes())?;
        if let Some(imp) = &ev.importances {
            out.write("importance.csv", importance_csv(imp).as_bytes())?;
        }
        Ok(())
    })?;
    Ok(report)
}

/// Cross-validates at every SNR of `evaluation.noise`; writes `sweep.csv`
/// and `sweep_report.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<SweepReport> {
    let spec = cfg
        .evaluation
        .noise
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("sweep needs an [evaluation.noise] section".into()))?;
    spec.validate()?;
    let p = prepare(cfg, base_dir)?;
    let plan = stratified_kfold(&p.data.labels(), cfg.evaluation.k, p.seeds.fold_plan)?;
    let opts = CvOptions {
        model_seed: p.seeds.model,
        averaging: cfg.evaluation.averaging,
    };
    let noise = NoiseSpec {
        seed: p.seeds.noise,
        ..spec.clone()
    };
    let rows = noise_sweep(&p.data, &cfg.pipeline, &plan, &opts, &noise)?;
    let report = SweepReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        config: p.echo,
        seeds: p.seeds,
        dataset: DatasetSummary::of(&p.data),
        rows,
    };
    Outputs::new(out_dir)?.guarded(|out| {
        out.write("sweep_report.json", &to_json(&report))?;
        out.write("sweep.csv", sweep_csv(&report.rows).as_bytes())
    })?;
    Ok(report)
}
