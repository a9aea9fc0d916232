use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::manifest::{LabelSet, Manifest};
use super::nn_classify;
use crate::error::{Error, Result};
use crate::patterns::serialize::{decode_blocks, to_binary};
use crate::patterns::{Descriptor, ExtractConfig, Extractor};
use crate::raster::load_gray;
use crate::selection::{apply_mask, learn_mask, FeatureMask, SelectionConfig, SelectionMethod, TrainingSet};

/// JSON has no infinity; non-finite values are written as strings.
fn float_text<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Selection {
    pub method: SelectionMethod,
    #[serde(serialize_with = "float_text")]
    pub parameter: f64,
}

/// Everything that determines an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub extract: ExtractConfig,
    /// `None` keeps every bin.
    pub selection: Option<Selection>,
    pub selection_config: SelectionConfig,
    /// Seeds the choice of training sample per class in leave-samples-out runs.
    pub seed: u64,
}

impl PipelineConfig {
    /// Variance selection with `phi = 2` and seed 0.
    pub fn new(extract: ExtractConfig) -> Self {
        PipelineConfig {
            extract,
            selection: Some(Selection {
                method: SelectionMethod::VarThreshold,
                parameter: 2.0,
            }),
            selection_config: SelectionConfig::default(),
            seed: 0,
        }
    }

    pub fn with_selection(mut self, selection: Option<Selection>) -> Self {
        self.selection = selection;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    /// `(class label, group)` pairs used for training.
    pub training_groups: Vec<(String, String)>,
    pub accuracy: f64,
    pub dimension: usize,
    pub train_count: usize,
    pub test_count: usize,
}

/// Outcome of an evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Correct test classifications over all test items, in percent.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub class_labels: Vec<String>,
    /// `None` for classes without test items.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// Descriptor length after masking (the largest over folds).
    pub dimension: usize,
    pub train_count: usize,
    pub folds: Vec<FoldReport>,
    pub mean_fold_accuracy: Option<f64>,
    /// Population standard deviation of fold accuracies.
    pub fold_spread: Option<f64>,
    pub config: PipelineConfig,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn from_predictions(
        labels: &LabelSet,
        predictions: &[(usize, usize)],
        dimension: usize,
        train_count: usize,
        config: PipelineConfig,
    ) -> Self {
        let c = labels.len();
        let mut confusion = vec![vec![0usize; c]; c];
        for &(pred, truth) in predictions {
            confusion[truth][pred] += 1;
        }
        let correct = (0..c).map(|i| confusion[i][i]).sum();
        let total = predictions.len();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 * 100.0 / n as f64)
            })
            .collect();
        EvalReport {
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 * 100.0 / total as f64
            },
            correct,
            total,
            class_labels: labels.names().to_vec(),
            per_class_accuracy,
            confusion,
            dimension,
            train_count,
            folds: Vec::new(),
            mean_fold_accuracy: None,
            fold_spread: None,
            config,
        }
    }
}

/// Confusion matrix as CSV with a header row of predicted labels.
pub fn confusion_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("true\\predicted");
    for l in &report.class_labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (label, row) in report.class_labels.iter().zip(&report.confusion) {
        out.push_str(label);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// On-disk descriptor cache in the binary `AGLB` format, keyed by
/// extraction settings and the image file's path, size and mtime.
#[derive(Debug, Clone)]
pub struct DescriptorCache {
    dir: PathBuf,
}

impl DescriptorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DescriptorCache { dir })
    }

    fn entry(&self, config: &ExtractConfig, image: &Path) -> Option<PathBuf> {
        let meta = fs::metadata(image).ok()?;
        let mtime = meta
            .modified()
            .ok()
            .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        let mut h = Sha256::new();
        h.update(b"aglbp-cache-v1\0");
        h.update(serde_json::to_string(config).ok()?.as_bytes());
        h.update(b"\0");
        h.update(image.to_string_lossy().as_bytes());
        h.update(meta.len().to_le_bytes());
        h.update(mtime.to_le_bytes());
        Some(self.dir.join(format!("{}.aglb", hex::encode(h.finalize()))))
    }

    fn get(&self, config: &ExtractConfig, image: &Path) -> Option<Descriptor> {
        let bytes = fs::read(self.entry(config, image)?).ok()?;
        let blocks = decode_blocks(&bytes).ok()?;
        let d = Descriptor::from_blocks(
            config.descriptor,
            &config.spec,
            config.mapping,
            config.normalization,
            blocks,
        )
        .ok()?;
        Some(d)
    }

    fn put(&self, config: &ExtractConfig, image: &Path, d: &Descriptor) -> Result<()> {
        let Some(path) = self.entry(config, image) else {
            return Ok(());
        };
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, to_binary(d)).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

/// Runs extraction, mask learning and classification for one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator {
    config: PipelineConfig,
    extractor: Extractor,
    cache: Option<DescriptorCache>,
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

impl Evaluator {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        Ok(Evaluator {
            extractor: Extractor::new(config.extract)?,
            config,
            cache: None,
        })
    }

    pub fn with_cache(mut self, cache: DescriptorCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Loads and describes one image, naming the file in any error.
    pub fn describe(&self, path: &Path) -> Result<Descriptor> {
        let cfg = self.extractor.config();
        if let Some(d) = self.cache.as_ref().and_then(|c| c.get(cfg, path)) {
            return Ok(d);
        }
        let img = load_gray(path)?;
        let d = self.extractor.extract(&img).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(c) = &self.cache {
            c.put(cfg, path, &d)?;
        }
        Ok(d)
    }

    /// Describes every manifest entry in parallel, keeping manifest order.
    pub fn describe_manifest(&self, m: &Manifest, labels: &[usize]) -> Result<Vec<(Descriptor, usize)>> {
        let results: Vec<Result<(Descriptor, usize)>> = m
            .entries
            .par_iter()
            .zip(labels.par_iter())
            .map(|(e, &l)| Ok((self.describe(&m.resolve(e))?, l)))
            .collect();
        first_error(results)
    }

    /// Learns the configured mask on `train` and returns it with the masked
    /// gallery.
    pub fn fit(&self, train: Vec<(Descriptor, usize)>) -> Result<(FeatureMask, Vec<(Descriptor, usize)>)> {
        let training = TrainingSet::new(train)?;
        let mask = match self.config.selection {
            Some(s) => learn_mask(&training, s.method, s.parameter, &self.config.selection_config)?,
            None => FeatureMask::identity(&training.items()[0].0),
        };
        let gallery = training
            .into_items()
            .into_iter()
            .map(|(d, l)| Ok((apply_mask(&d, &mask)?, l)))
            .collect::<Result<Vec<_>>>()?;
        Ok((mask, gallery))
    }

    fn predict(
        &self,
        test: &Manifest,
        labels: &[usize],
        mask: &FeatureMask,
        gallery: &[(Descriptor, usize)],
    ) -> Result<Vec<(usize, usize)>> {
        let results: Vec<Result<(usize, usize)>> = test
            .entries
            .par_iter()
            .zip(labels.par_iter())
            .map(|(e, &truth)| {
                let d = apply_mask(&self.describe(&test.resolve(e))?, mask)?;
                Ok((nn_classify(&d, gallery)?, truth))
            })
            .collect();
        first_error(results)
    }

    /// Train/test protocol: the mask is learned on the training manifest only
    /// and every test image is classified against the masked training set.
    pub fn evaluate(&self, train: &Manifest, test: &Manifest) -> Result<EvalReport> {
        let labels = LabelSet::from_manifest(train);
        let train_labels = labels.intern(train)?;
        let test_labels = labels.intern(test)?;
        let described = self.describe_manifest(train, &train_labels)?;
        let train_count = described.len();
        let (mask, gallery) = self.fit(described)?;
        let predictions = self.predict(test, &test_labels, &mask, &gallery)?;
        Ok(EvalReport::from_predictions(
            &labels,
            &predictions,
            mask.dimension(),
            train_count,
            self.config,
        ))
    }

    /// Leave-samples-out protocol. Every class must list the same number of
    /// groups; fold `k` trains on the `k`-th group of each class (in a seeded
    /// per-class order) and tests on all other images. `fold` restricts the
    /// run to one fold.
    pub fn evaluate_groups(&self, m: &Manifest, fold: Option<usize>) -> Result<EvalReport> {
        let labels = LabelSet::from_manifest(m);
        let interned = labels.intern(m)?;
        let mut groups: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
        for (e, &l) in m.entries.iter().zip(&interned) {
            let g = e.group.as_deref().ok_or_else(|| Error::Manifest {
                path: m.source.clone(),
                line: e.line,
                message: "leave-samples-out runs need a group column".into(),
            })?;
            groups.entry(l).or_default().insert(g);
        }
        let fold_count = groups.values().map(BTreeSet::len).min().unwrap_or(0);
        if fold_count < 2 || groups.values().any(|g| g.len() != fold_count) {
            let counts: Vec<usize> = groups.values().map(BTreeSet::len).collect();
            return Err(Error::Data {
                path: m.source.clone(),
                message: format!("every class needs the same number (>= 2) of groups, found {counts:?}"),
            });
        }
        if let Some(k) = fold.filter(|&k| k >= fold_count) {
            return Err(Error::InvalidParameter(format!(
                "fold {k} out of range 0..{fold_count}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let order: BTreeMap<usize, Vec<&str>> = groups
            .into_iter()
            .map(|(l, g)| {
                let mut g: Vec<&str> = g.into_iter().collect();
                g.shuffle(&mut rng);
                (l, g)
            })
            .collect();

        let folds: Vec<usize> = match fold {
            Some(k) => vec![k],
            None => (0..fold_count).collect(),
        };
        let described = self.describe_manifest(m, &interned)?;
        let mut pooled = Vec::new();
        let mut reports = Vec::new();
        for k in folds {
            let is_train = |i: usize| m.entries[i].group.as_deref() == Some(order[&interned[i]][k]);
            let train: Vec<(Descriptor, usize)> = (0..m.len())
                .filter(|&i| is_train(i))
                .map(|i| described[i].clone())
                .collect();
            let train_count = train.len();
            let (mask, gallery) = self.fit(train)?;
            let predictions = (0..m.len())
                .into_par_iter()
                .filter(|&i| !is_train(i))
                .map(|i| {
                    let (d, truth) = &described[i];
                    Ok((nn_classify(&apply_mask(d, &mask)?, &gallery)?, *truth))
                })
                .collect::<Vec<Result<_>>>();
            let predictions = first_error(predictions)?;
            reports.push(FoldReport {
                fold: k,
                training_groups: order
                    .iter()
                    .map(|(&l, g)| (labels.names()[l].clone(), g[k].to_string()))
                    .collect(),
                accuracy: super::accuracy_percent(&predictions),
                dimension: mask.dimension(),
                train_count,
                test_count: predictions.len(),
            });
            pooled.extend(predictions);
        }
        let dimension = reports.iter().map(|r| r.dimension).max().unwrap_or(0);
        let train_count = reports.iter().map(|r| r.train_count).sum();
        let mut report = EvalReport::from_predictions(&labels, &pooled, dimension, train_count, self.config);
        let accs: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64;
        report.mean_fold_accuracy = Some(mean);
        report.fold_spread = Some(var.sqrt());
        report.folds = reports;
        Ok(report)
    }
}

/// [`Evaluator::evaluate`] without a cache.
pub fn run_protocol(train: &Manifest, test: &Manifest, config: &PipelineConfig) -> Result<EvalReport> {
    Evaluator::new(*config)?.evaluate(train, test)
}

/// [`Evaluator::evaluate_groups`] without a cache.
pub fn run_kth(manifest: &Manifest, config: &PipelineConfig, fold: Option<usize>) -> Result<EvalReport> {
    Evaluator::new(*config)?.evaluate_groups(manifest, fold)
}
