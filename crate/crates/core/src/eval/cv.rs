use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::{accuracy, confusion_matrix, prf, Averaging, ConfusionMatrix};
use super::noise::{add_awgn, NoiseSpec};
use crate::baselines::{
    knn_classify, predict_forest, train_logreg, train_mlp_baseline, train_random_forest, FeatureMatrix, ForestConfig,
    ForestModel, LogRegConfig, LogRegModel, MlpConfig, MlpModel, Standardizer, DEFAULT_K,
};
use crate::channels::{square_side, stack_and_reshape, ChannelSpec};
use crate::error::{Error, Result};
use crate::features::{featurize_dataset, DomainTag};
use crate::ingest::Dataset;
use crate::model::{train, FaultNetConfig, TrainedModel};
use crate::nn::{EpochStats, Tensor};
use crate::seed;

/// A model fitted on one training split.
pub trait Fitted {
    fn predict(&self, test: &Dataset) -> Result<Vec<usize>>;

    /// Fingerprint of the fitted parameters.
    fn checksum(&self) -> u64;

    fn history(&self) -> Vec<EpochStats> {
        Vec::new()
    }

    /// Per-feature importances with names, when the model has them.
    fn importances(&self) -> Option<Vec<(String, f64)>> {
        None
    }
}

/// Anything cross-validation can fit.
pub trait Classifier {
    fn name(&self) -> String;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Box<dyn Fitted>>;
}

fn fnv(h: &mut u64, v: f64) {
    for b in v.to_bits().to_le_bytes() {
        *h ^= u64::from(b);
        *h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// Classifier descriptor as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pipeline {
    /// `input_hw`, `in_channels` and `n_classes` of `model` are filled in
    /// from the data and the channel flags.
    FaultNet {
        #[serde(default)]
        channels: ChannelSpec,
        #[serde(default)]
        model: FaultNetConfig,
    },
    RandomForest {
        #[serde(default = "time_domain")]
        domain: DomainTag,
        #[serde(default)]
        forest: ForestConfig,
    },
    Knn {
        #[serde(default = "time_domain")]
        domain: DomainTag,
        #[serde(default = "default_k")]
        k: usize,
    },
    LogReg {
        #[serde(default = "time_domain")]
        domain: DomainTag,
        #[serde(default)]
        logreg: LogRegConfig,
    },
    Mlp {
        #[serde(default = "time_domain")]
        domain: DomainTag,
        #[serde(default)]
        mlp: MlpConfig,
    },
}

fn time_domain() -> DomainTag {
    DomainTag::Time
}

fn default_k() -> usize {
    DEFAULT_K
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::FaultNet {
            channels: ChannelSpec::default(),
            model: FaultNetConfig::default(),
        }
    }
}

/// Stacks every segment into a `[C, side, side]` tensor.
pub fn channel_tensors(data: &Dataset, channels: &ChannelSpec) -> Result<Vec<Tensor>> {
    let len = data.segment_len().ok_or(Error::EmptyDataset)?;
    let side = square_side(len)
        .ok_or_else(|| Error::ShapeMismatch(format!("segment length {len} is not a perfect square")))?;
    data.segments
        .iter()
        .map(|s| stack_and_reshape(s, channels, side, side).map(|t| t.data))
        .collect()
}

impl Pipeline {
    /// The FaultNet config with its data-dependent fields resolved.
    pub fn resolve_faultnet(channels: &ChannelSpec, model: &FaultNetConfig, data: &Dataset) -> Result<FaultNetConfig> {
        let len = data.segment_len().ok_or(Error::EmptyDataset)?;
        let side = square_side(len)
            .ok_or_else(|| Error::ShapeMismatch(format!("segment length {len} is not a perfect square")))?;
        Ok(FaultNetConfig {
            input_hw: (side, side),
            in_channels: channels.n_channels(),
            n_classes: data.n_classes().max(2),
            ..model.clone()
        })
    }
}

struct FaultNetFit {
    model: TrainedModel,
    channels: ChannelSpec,
}

impl Fitted for FaultNetFit {
    fn predict(&self, test: &Dataset) -> Result<Vec<usize>> {
        if test.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.model.predict(&channel_tensors(test, &self.channels)?)?.0)
    }

    fn checksum(&self) -> u64 {
        self.model.checksum()
    }

    fn history(&self) -> Vec<EpochStats> {
        self.model.history.clone()
    }
}

enum FeatureModel {
    Forest(ForestModel),
    Knn(FeatureMatrix, usize),
    LogReg(LogRegModel),
    Mlp(MlpModel),
}

struct FeatureFit {
    domain: DomainTag,
    scaler: Option<Standardizer>,
    model: FeatureModel,
}

impl FeatureFit {
    fn rows(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        if data.is_empty() {
            return Ok(Vec::new());
        }
        let m = FeatureMatrix::from_features(&featurize_dataset(data, self.domain)?)?;
        match &self.scaler {
            Some(s) => s.transform_rows(&m.rows),
            None => Ok(m.rows),
        }
    }
}

impl Fitted for FeatureFit {
    fn predict(&self, test: &Dataset) -> Result<Vec<usize>> {
        let rows = self.rows(test)?;
        match &self.model {
            FeatureModel::Forest(f) => predict_forest(f, &rows),
            FeatureModel::Knn(train, k) => knn_classify(train, &rows, *k),
            FeatureModel::LogReg(m) => m.predict(&rows),
            FeatureModel::Mlp(m) => m.predict(&rows),
        }
    }

    fn checksum(&self) -> u64 {
        let mut h = FNV_OFFSET;
        if let Some(s) = &self.scaler {
            s.mean.iter().chain(&s.std).for_each(|&v| fnv(&mut h, v));
        }
        match &self.model {
            FeatureModel::Forest(f) => {
                for t in &f.trees {
                    for n in &t.nodes {
                        match n {
                            crate::baselines::Node::Split { feature, threshold, .. } => {
                                fnv(&mut h, *feature as f64);
                                fnv(&mut h, *threshold);
                            }
                            crate::baselines::Node::Leaf { counts } => {
                                counts.iter().for_each(|&c| fnv(&mut h, c as f64));
                            }
                        }
                    }
                }
            }
            FeatureModel::Knn(m, k) => {
                fnv(&mut h, *k as f64);
                m.rows.iter().flatten().for_each(|&v| fnv(&mut h, v));
            }
            FeatureModel::LogReg(m) => m.weights.iter().chain(&m.bias).for_each(|&v| fnv(&mut h, v)),
            FeatureModel::Mlp(m) => fnv(&mut h, f64::from_bits(m.network.checksum())),
        }
        h
    }

    fn history(&self) -> Vec<EpochStats> {
        match &self.model {
            FeatureModel::Mlp(m) => m.history.clone(),
            _ => Vec::new(),
        }
    }

    fn importances(&self) -> Option<Vec<(String, f64)>> {
        match &self.model {
            FeatureModel::Forest(f) => Some(
                f.feature_names
                    .iter()
                    .cloned()
                    .zip(f.importances.iter().copied())
                    .collect(),
            ),
            _ => None,
        }
    }
}

impl Classifier for Pipeline {
    fn name(&self) -> String {
        match self {
            Pipeline::FaultNet { channels, .. } => format!("faultnet_{}ch", channels.n_channels()),
            Pipeline::RandomForest { domain, .. } => format!("random_forest_{}", domain.as_str()),
            Pipeline::Knn { domain, .. } => format!("knn_{}", domain.as_str()),
            Pipeline::LogReg { domain, .. } => format!("logreg_{}", domain.as_str()),
            Pipeline::Mlp { domain, .. } => format!("mlp_{}", domain.as_str()),
        }
    }

    fn fit(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Fitted>> {
        let (domain, standardize) = match self {
            Pipeline::FaultNet { channels, model } => {
                let config = FaultNetConfig {
                    seed,
                    ..Self::resolve_faultnet(channels, model, data)?
                };
                let model = train(&config, &channel_tensors(data, channels)?, &data.labels())?;
                return Ok(Box::new(FaultNetFit {
                    model,
                    channels: *channels,
                }));
            }
            Pipeline::RandomForest { domain, .. } => (*domain, false),
            Pipeline::Knn { domain, .. } | Pipeline::LogReg { domain, .. } | Pipeline::Mlp { domain, .. } => {
                (*domain, true)
            }
        };
        let raw = FeatureMatrix::from_features(&featurize_dataset(data, domain)?)?;
        let scaler = if standardize {
            Some(Standardizer::fit(&raw)?)
        } else {
            None
        };
        let m = match &scaler {
            Some(s) => s.transform(&raw)?,
            None => raw,
        };
        let model = match self {
            Pipeline::RandomForest { forest, .. } => {
                FeatureModel::Forest(train_random_forest(&m, &ForestConfig { seed, ..forest.clone() })?)
            }
            Pipeline::Knn { k, .. } => {
                m.require_classes()?;
                if *k == 0 || *k > m.len() {
                    return Err(Error::KTooLarge { k: *k, n: m.len() });
                }
                FeatureModel::Knn(m, *k)
            }
            Pipeline::LogReg { logreg, .. } => {
                FeatureModel::LogReg(train_logreg(&m, &LogRegConfig { seed, ..logreg.clone() })?)
            }
            Pipeline::Mlp { mlp, .. } => FeatureModel::Mlp(train_mlp_baseline(&m, &MlpConfig { seed, ..mlp.clone() })?),
            Pipeline::FaultNet { .. } => unreachable!(),
        };
        Ok(Box::new(FeatureFit { domain, scaler, model }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvOptions {
    /// Fold `f` fits with seed `derive(model_seed, [f])`.
    pub model_seed: u64,
    pub averaging: Averaging,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            model_seed: 0,
            averaging: Averaging::Macro,
        }
    }
}

/// One noise condition of a cross-validation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSetting {
    pub snr_db: f64,
    pub seed: u64,
    pub noisy_train: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: String,
    pub class_names: Vec<String>,
    pub k: usize,
    pub fold_plan_seed: u64,
    pub fold_sizes: Vec<usize>,
    pub fold_seeds: Vec<u64>,
    pub noise: Option<NoiseSetting>,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub averaging: Averaging,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Summed over folds; rows are true classes.
    pub confusion: ConfusionMatrix,
    /// Hex fingerprints of each fold's fitted model.
    pub model_checksums: Vec<String>,
    /// Per-fold training curves (empty for non-iterative models).
    pub histories: Vec<Vec<EpochStats>>,
    /// Fold-averaged feature importances, for models that have them.
    pub importances: Option<Vec<(String, f64)>>,
}

/// Noisy copy of `data`: each segment gets AWGN at `snr_db`, drawn
/// sequentially from one stream.
pub fn with_noise(data: &Dataset, snr_db: f64, rng: &mut seed::Rng) -> Result<Dataset> {
    let mut out = data.clone();
    for s in &mut out.segments {
        s.values = add_awgn(&s.values, snr_db, rng)?;
    }
    Ok(out)
}

fn noise_rng(setting: &NoiseSetting, fold: usize, train_split: bool) -> seed::Rng {
    seed::derived_rng(
        setting.seed,
        &[fold as u64, setting.snr_db.to_bits(), u64::from(train_split)],
    )
}

struct Accumulator {
    n_classes: usize,
    noise: Option<NoiseSetting>,
    fold_accuracy: Vec<f64>,
    confusion: ConfusionMatrix,
    checksums: Vec<String>,
    histories: Vec<Vec<EpochStats>>,
    importances: Option<Vec<(String, f64)>>,
}

impl Accumulator {
    fn new(n_classes: usize, noise: Option<NoiseSetting>) -> Self {
        Self {
            n_classes,
            noise,
            fold_accuracy: Vec::new(),
            confusion: vec![vec![0; n_classes]; n_classes],
            checksums: Vec::new(),
            histories: Vec::new(),
            importances: None,
        }
    }

    fn add(&mut self, fitted: &dyn Fitted, truth: &[usize], pred: &[usize]) -> Result<()> {
        let cm = confusion_matrix(truth, pred, self.n_classes)?;
        self.fold_accuracy.push(accuracy(&cm));
        for (acc_row, row) in self.confusion.iter_mut().zip(&cm) {
            acc_row.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        self.checksums.push(format!("{:016x}", fitted.checksum()));
        self.histories.push(fitted.history());
        if let Some(imp) = fitted.importances() {
            match &mut self.importances {
                None => self.importances = Some(imp),
                Some(total) => total.iter_mut().zip(&imp).for_each(|(t, (_, v))| t.1 += v),
            }
        }
        Ok(())
    }

    fn finish(mut self, classifier: String, data: &Dataset, plan: &FoldPlan, opts: &CvOptions) -> EvalReport {
        let k = self.fold_accuracy.len() as f64;
        let mean = self.fold_accuracy.iter().sum::<f64>() / k;
        let var = self.fold_accuracy.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k;
        if let Some(imp) = &mut self.importances {
            imp.iter_mut().for_each(|(_, v)| *v /= k);
        }
        let m = prf(&self.confusion, opts.averaging);
        EvalReport {
            classifier,
            class_names: (0..self.n_classes)
                .map(|c| data.class_names.get(&c).cloned().unwrap_or_else(|| format!("class{c}")))
                .collect(),
            k: plan.k(),
            fold_plan_seed: plan.seed,
            fold_sizes: plan.folds.iter().map(Vec::len).collect(),
            fold_seeds: (0..plan.k())
                .map(|f| seed::derive(opts.model_seed, &[f as u64]))
                .collect(),
            noise: self.noise,
            fold_accuracy: self.fold_accuracy,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            averaging: opts.averaging,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            confusion: self.confusion,
            model_checksums: self.checksums,
            histories: self.histories,
            importances: self.importances,
        }
    }
}

/// Shared fold loop: fits once per fold unless the training split is
/// itself noisy, then scores every noise condition.
fn cv_many(
    data: &Dataset,
    classifier: &dyn Classifier,
    plan: &FoldPlan,
    opts: &CvOptions,
    conditions: &[Option<NoiseSetting>],
) -> Result<Vec<EvalReport>> {
    plan.validate(data.len())?;
    let n_classes = data.n_classes().max(data.labels().iter().max().map_or(0, |m| m + 1));
    let mut accs: Vec<Accumulator> = conditions.iter().map(|c| Accumulator::new(n_classes, *c)).collect();
    for fold in 0..plan.k() {
        let train = data.subset(&plan.train_indices(fold));
        let test = data.subset(plan.test_indices(fold));
        let truth = test.labels();
        let fold_seed = seed::derive(opts.model_seed, &[fold as u64]);
        let mut clean_fit: Option<Box<dyn Fitted>> = None;
        for (cond, acc) in conditions.iter().zip(&mut accs) {
            let noisy_fit;
            let fitted: &dyn Fitted = match cond {
                Some(n) if n.noisy_train => {
                    let noisy_train = with_noise(&train, n.snr_db, &mut noise_rng(n, fold, true))?;
                    noisy_fit = classifier.fit(&noisy_train, fold_seed)?;
                    noisy_fit.as_ref()
                }
                _ => {
                    if clean_fit.is_none() {
                        clean_fit = Some(classifier.fit(&train, fold_seed)?);
                    }
                    clean_fit.as_deref().expect("fitted above")
                }
            };
            let pred = match cond {
                Some(n) => fitted.predict(&with_noise(&test, n.snr_db, &mut noise_rng(n, fold, false))?)?,
                None => fitted.predict(&test)?,
            };
            acc.add(fitted, &truth, &pred)?;
        }
    }
    Ok(accs
        .into_iter()
        .map(|a| a.finish(classifier.name(), data, plan, opts))
        .collect())
}

/// k-fold cross-validation. Noise, when given, corrupts the held-out fold
/// after fitting (and the training folds too if `noisy_train`).
pub fn run_cv(
    data: &Dataset,
    classifier: &dyn Classifier,
    plan: &FoldPlan,
    opts: &CvOptions,
    noise: Option<NoiseSetting>,
) -> Result<EvalReport> {
    Ok(cv_many(data, classifier, plan, opts, &[noise])?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub report: EvalReport,
}

/// One cross-validation per SNR, rows ascending by SNR. With clean
/// training each fold is fitted once and reused across SNRs, which gives
/// the same reports as separate [`run_cv`] calls.
pub fn noise_sweep(
    data: &Dataset,
    classifier: &dyn Classifier,
    plan: &FoldPlan,
    opts: &CvOptions,
    spec: &NoiseSpec,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let conditions: Vec<Option<NoiseSetting>> = spec
        .sorted_snr()
        .into_iter()
        .map(|snr_db| {
            Some(NoiseSetting {
                snr_db,
                seed: spec.seed,
                noisy_train: spec.noisy_train,
            })
        })
        .collect();
    Ok(cv_many(data, classifier, plan, opts, &conditions)?
        .into_iter()
        .map(|report| SweepRow {
            snr_db: report.noise.expect("noisy condition").snr_db,
            mean_accuracy: report.mean_accuracy,
            std_accuracy: report.std_accuracy,
            report,
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("snr_db,mean_accuracy,std\n");
    for r in rows {
        s.push_str(&format!("{:?},{:?},{:?}\n", r.snr_db, r.mean_accuracy, r.std_accuracy));
    }
    s
}
