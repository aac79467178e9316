//! Dual kernel ridge regression on precomputed kernels.
//!
//! Fitting solves `(K_tt + λI)·α = t` for each one-vs-rest ±1 target
//! vector, sharing one Cholesky factorization across all targets.
//! Scores are `K_et·α`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelCodec, Partition};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matrix::{dot, Cholesky};
use crate::transforms::KernelMatrix;

pub const DEFAULT_LAMBDA: f64 = 1e-5;

const MODEL_MAGIC: &[u8; 4] = b"KRRM";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrrConfig {
    pub lambda: f64,
}

impl Default for KrrConfig {
    fn default() -> Self {
        KrrConfig {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl KrrConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let c = KrrConfig { lambda };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda > 0.0 && self.lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "lambda must be a positive number, got {}",
                self.lambda
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrrModel {
    train_indices: Vec<usize>,
    alphas: Vec<Vec<f64>>,
    codec: LabelCodec,
}

impl KrrModel {
    /// Fits one dual coefficient vector per codec output from string labels.
    pub fn fit<S: AsRef<str>>(
        k: &KernelMatrix,
        train_indices: &[usize],
        labels: &[S],
        config: &KrrConfig,
        exec: Execution,
    ) -> Result<Self> {
        let codec = LabelCodec::from_labels(labels)?;
        Self::fit_with_codec(k, train_indices, labels, codec, config, exec)
    }

    /// Like [`KrrModel::fit`] with a fixed class list.
    pub fn fit_with_codec<S: AsRef<str>>(
        k: &KernelMatrix,
        train_indices: &[usize],
        labels: &[S],
        codec: LabelCodec,
        config: &KrrConfig,
        exec: Execution,
    ) -> Result<Self> {
        if labels.len() != train_indices.len() {
            return Err(Error::Validation(format!(
                "{} labels for {} training samples",
                labels.len(),
                train_indices.len()
            )));
        }
        let targets = codec.targets(labels)?;
        let alphas = solve_dual(k, train_indices, &targets, config, exec)?;
        Ok(KrrModel {
            train_indices: train_indices.to_vec(),
            alphas,
            codec,
        })
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_indices
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn codec(&self) -> &LabelCodec {
        &self.codec
    }

    /// Scores, labels and confidences for the samples at `eval_indices`.
    pub fn predict(
        &self,
        k: &KernelMatrix,
        eval_indices: &[usize],
        exec: Execution,
    ) -> Result<PredictionSet> {
        let d = k.dim();
        if let Some(&bad) = self.train_indices.iter().find(|&&i| i >= d) {
            return Err(Error::Validation(format!(
                "model trained on index {bad}, kernel has {d} samples"
            )));
        }
        if let Some(&bad) = eval_indices.iter().find(|&&i| i >= d) {
            return Err(Error::Validation(format!(
                "eval index {bad} out of range for {d} samples"
            )));
        }
        let values = k.values();
        let predictions = exec::map_indices(exec, eval_indices.len(), |e| {
            let index = eval_indices[e];
            let row = values.row(index);
            let kt: Vec<f64> = self.train_indices.iter().map(|&j| row[j]).collect();
            let scores: Vec<f64> = self.alphas.iter().map(|a| dot(&kt, a)).collect();
            let class = self.codec.decide(&scores);
            Prediction {
                index,
                label: self.codec.classes()[class].clone(),
                confidence: score_confidence(&scores),
                scores,
            }
        });
        Ok(PredictionSet {
            classes: self.codec.classes().to_vec(),
            predictions,
        })
    }

    /// Versioned little-endian binary encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.train_indices.len() as u64).to_le_bytes());
        for &i in &self.train_indices {
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.codec.classes().len() as u32).to_le_bytes());
        for c in self.codec.classes() {
            out.extend_from_slice(&(c.len() as u32).to_le_bytes());
            out.extend_from_slice(c.as_bytes());
        }
        out.extend_from_slice(&(self.alphas.len() as u32).to_le_bytes());
        for a in &self.alphas {
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(bytes);
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a KRR model file".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {version}"
            )));
        }
        let n = r.u64()? as usize;
        let train_indices = (0..n)
            .map(|_| r.u64().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let nc = r.u32()? as usize;
        let classes = (0..nc)
            .map(|_| {
                let len = r.u32()? as usize;
                String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|_| Error::Format("class name is not UTF-8".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let codec = LabelCodec::from_classes(classes).map_err(|e| Error::Format(e.to_string()))?;
        let outputs = r.u32()? as usize;
        if outputs != codec.outputs() {
            return Err(Error::Format(format!(
                "{outputs} coefficient vectors for {} classes",
                codec.classes().len()
            )));
        }
        let alphas = (0..outputs)
            .map(|_| (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        if !r.0.is_empty() {
            return Err(Error::Format("trailing bytes after model".into()));
        }
        Ok(KrrModel {
            train_indices,
            alphas,
            codec,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Format("truncated model file".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Solves `(K_tt + λI)·α = t` for every target vector.
pub fn solve_dual(
    k: &KernelMatrix,
    train_indices: &[usize],
    targets: &[Vec<f64>],
    config: &KrrConfig,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let d = k.dim();
    if let Some(&bad) = train_indices.iter().find(|&&i| i >= d) {
        return Err(Error::Validation(format!(
            "train index {bad} out of range for {d} samples"
        )));
    }
    if let Some(t) = targets.iter().find(|t| t.len() != train_indices.len()) {
        return Err(Error::Validation(format!(
            "target vector of length {} for {} training samples",
            t.len(),
            train_indices.len()
        )));
    }
    let mut ktt = k.values().select(train_indices, train_indices);
    for i in 0..train_indices.len() {
        ktt[(i, i)] += config.lambda;
    }
    let chol = Cholesky::factor(&ktt, exec)?;
    Ok(exec::map_indices(exec, targets.len(), |c| {
        chol.solve(&targets[c])
    }))
}

/// `|s|` for a single score, else the margin between the two best scores.
pub fn score_confidence(scores: &[f64]) -> f64 {
    match scores {
        [] => 0.0,
        [s] => s.abs(),
        _ => {
            let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &s in scores {
                if s > top {
                    second = top;
                    top = s;
                } else if s > second {
                    second = s;
                }
            }
            top - second
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Index into the joint sample order.
    pub index: usize,
    /// One score per model output (a single decision value for binary problems).
    pub scores: Vec<f64>,
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub classes: Vec<String>,
    pub predictions: Vec<Prediction>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.predictions.iter().map(|p| p.label.as_str()).collect()
    }

    /// `id<TAB>label<TAB>confidence` lines, ids taken from the joint order.
    pub fn to_tsv(&self, partition: &Partition) -> Result<String> {
        let mut out = String::new();
        for p in &self.predictions {
            let id = partition.order().get(p.index).ok_or_else(|| {
                Error::Validation(format!("prediction index {} outside partition", p.index))
            })?;
            out.push_str(&format!("{id}\t{}\t{}\n", p.label, p.confidence));
        }
        Ok(out)
    }
}
