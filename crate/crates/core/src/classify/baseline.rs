use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedExample, ClassifierBackend, ClassifyError, Sentiment};
use crate::textprep::NormalizedText;

pub const BASELINE_BACKEND_ID: &str = "baseline-bow-logreg";
const MODEL_FORMAT: &str = "solsent-baseline";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Epochs without dev-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            learning_rate: 1.0,
            l2: 1e-4,
            max_epochs: 200,
            patience: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub n_train: usize,
    pub n_dev: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Regularized training loss after each epoch.
    pub train_loss: Vec<f64>,
    pub dev_loss: Vec<f64>,
}

/// L2-regularized logistic regression over L2-normalized unigram and bigram
/// counts, trained by full-batch gradient descent from zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    format: String,
    version: u32,
    pub vocabulary: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub metadata: TrainingMetadata,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

type SparseVec = Vec<(usize, f64)>;

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn feature_counts(text: &str) -> BTreeMap<String, f64> {
    let toks = tokens(text);
    let mut counts = BTreeMap::new();
    for t in &toks {
        *counts.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    for pair in toks.windows(2) {
        *counts
            .entry(format!("{} {}", pair[0], pair[1]))
            .or_insert(0.0) += 1.0;
    }
    counts
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-z))` for the true class margin `z`.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

struct Dataset {
    x: Vec<SparseVec>,
    y: Vec<f64>,
}

impl BaselineModel {
    pub fn train(
        train: &[AnnotatedExample],
        dev: &[AnnotatedExample],
        config: &BaselineConfig,
    ) -> Result<BaselineModel, ClassifyError> {
        if train.is_empty() {
            return Err(ClassifyError::NoExamples);
        }
        if !train.iter().any(|e| e.label.is_positive())
            || train.iter().all(|e| e.label.is_positive())
        {
            return Err(ClassifyError::SingleClass);
        }
        let vocab: BTreeSet<String> = train
            .iter()
            .flat_map(|e| feature_counts(&e.text).into_keys())
            .collect();
        let mut model = BaselineModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            weights: vec![0.0; vocab.len()],
            vocabulary: vocab.into_iter().collect(),
            bias: 0.0,
            metadata: TrainingMetadata {
                seed: config.seed,
                n_train: train.len(),
                n_dev: dev.len(),
                learning_rate: config.learning_rate,
                l2: config.l2,
                epochs_run: 0,
                best_epoch: 0,
                train_loss: Vec::new(),
                dev_loss: Vec::new(),
            },
            index: HashMap::new(),
        };
        model.rebuild_index();
        let train_set = model.dataset(train);
        let dev_set = model.dataset(dev);

        let mut best = (f64::INFINITY, model.weights.clone(), model.bias, 0);
        let mut stale = 0;
        for epoch in 1..=config.max_epochs {
            model.step(&train_set, config);
            let train_loss = model.loss(&train_set)
                + 0.5 * config.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
            model.metadata.train_loss.push(train_loss);
            model.metadata.epochs_run = epoch;
            let monitored = if dev_set.y.is_empty() {
                train_loss
            } else {
                let l = model.loss(&dev_set);
                model.metadata.dev_loss.push(l);
                l
            };
            if monitored < best.0 - 1e-12 {
                best = (monitored, model.weights.clone(), model.bias, epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
        model.weights = best.1;
        model.bias = best.2;
        model.metadata.best_epoch = best.3;
        Ok(model)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
    }

    /// Sparse, L2-normalized in-vocabulary features.
    pub fn featurize(&self, text: &str) -> Vec<(usize, f64)> {
        let mut v: SparseVec = feature_counts(text)
            .into_iter()
            .filter_map(|(f, c)| self.index.get(&f).map(|&i| (i, c)))
            .collect();
        v.sort_unstable_by_key(|&(i, _)| i);
        let norm = v.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, c) in &mut v {
                *c /= norm;
            }
        }
        v
    }

    fn dataset(&self, examples: &[AnnotatedExample]) -> Dataset {
        Dataset {
            x: examples.iter().map(|e| self.featurize(&e.text)).collect(),
            y: examples
                .iter()
                .map(|e| {
                    if e.label == Sentiment::Positive {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }

    fn logit(&self, x: &[(usize, f64)]) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    /// Mean unregularized log loss.
    fn loss(&self, data: &Dataset) -> f64 {
        let total: f64 = data
            .x
            .iter()
            .zip(&data.y)
            .map(|(x, &y)| {
                let z = self.logit(x);
                log_loss(if y > 0.5 { z } else { -z })
            })
            .sum();
        total / data.y.len() as f64
    }

    fn step(&mut self, data: &Dataset, config: &BaselineConfig) {
        let n = data.y.len() as f64;
        let mut grad: Vec<f64> = self.weights.iter().map(|w| config.l2 * w).collect();
        let mut grad_b = 0.0;
        for (x, &y) in data.x.iter().zip(&data.y) {
            let r = (sigmoid(self.logit(x)) - y) / n;
            grad_b += r;
            for &(i, v) in x {
                grad[i] += r * v;
            }
        }
        for (w, g) in self.weights.iter_mut().zip(grad) {
            *w -= config.learning_rate * g;
        }
        self.bias -= config.learning_rate * grad_b;
    }

    pub fn predict_proba(&self, text: &str) -> f64 {
        sigmoid(self.logit(&self.featurize(text)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(body: &str) -> Result<BaselineModel, ClassifyError> {
        let mut model: BaselineModel =
            serde_json::from_str(body).map_err(|e| ClassifyError::Model(e.to_string()))?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(ClassifyError::Model(format!(
                "unsupported model {} v{}",
                model.format, model.version
            )));
        }
        if model.weights.len() != model.vocabulary.len() {
            return Err(ClassifyError::Model(
                "weights and vocabulary differ in length".into(),
            ));
        }
        model.rebuild_index();
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|source| ClassifyError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<BaselineModel, ClassifyError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| ClassifyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        BaselineModel::from_json(&body)
    }
}

impl ClassifierBackend for BaselineModel {
    fn backend_id(&self) -> &str {
        BASELINE_BACKEND_ID
    }

    fn score(&mut self, items: &[NormalizedText]) -> Result<Vec<f64>, ClassifyError> {
        Ok(items.iter().map(|t| self.predict_proba(&t.value)).collect())
    }
}
