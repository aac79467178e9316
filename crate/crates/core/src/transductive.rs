//! Two-iteration self-training on a transductive kernel.
//!
//! Iteration 1 trains on the labeled block and scores every test sample.
//! The `r` most confident test samples join the training set with their
//! predicted labels, and iteration 2 retrains and re-scores all test
//! samples. Test labels are not an input.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelCodec, Partition};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::krr::{KrrConfig, KrrModel, PredictionSet};
use crate::transforms::KernelMatrix;

pub const DEFAULT_ADOPTED: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TkcConfig {
    /// Test samples adopted after the first iteration (clamped to `n`).
    pub r: usize,
    /// Must be 2.
    pub iterations: usize,
    pub krr: KrrConfig,
}

impl Default for TkcConfig {
    fn default() -> Self {
        TkcConfig {
            r: DEFAULT_ADOPTED,
            iterations: 2,
            krr: KrrConfig::default(),
        }
    }
}

impl TkcConfig {
    pub fn new(r: i64, krr: KrrConfig) -> Result<Self> {
        let r = usize::try_from(r)
            .map_err(|_| Error::Config(format!("r must be non-negative, got {r}")))?;
        let c = TkcConfig {
            r,
            iterations: 2,
            krr,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations != 2 {
            return Err(Error::Config(format!(
                "self-training runs exactly 2 iterations, got {}",
                self.iterations
            )));
        }
        self.krr.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adopted {
    /// Index into the joint order.
    pub index: usize,
    pub id: String,
    pub pseudo_label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TkcTrace {
    pub iteration1: PredictionSet,
    /// Most confident first.
    pub adopted: Vec<Adopted>,
    pub iteration2: PredictionSet,
}

impl TkcTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Runs the self-training classifier over `k` (typically a transductive
/// or summed kernel). The returned predictions are the iteration-2
/// predictions for every test sample, adopted ones included.
pub fn tkc_run<S: AsRef<str>>(
    k: &KernelMatrix,
    partition: &Partition,
    train_labels: &[S],
    config: &TkcConfig,
    exec: Execution,
) -> Result<(PredictionSet, TkcTrace)> {
    config.validate()?;
    k.check_partition(partition)?;
    let (m, n) = (partition.m(), partition.n());
    if train_labels.len() != m {
        return Err(Error::Validation(format!(
            "{} training labels for {m} training samples",
            train_labels.len()
        )));
    }
    let codec = LabelCodec::from_labels(train_labels)?;
    let train = partition.train_indices();
    let test = partition.test_indices();

    let first =
        KrrModel::fit_with_codec(k, &train, train_labels, codec.clone(), &config.krr, exec)?;
    let iteration1 = first.predict(k, &test, exec)?;

    let take = if config.r > n {
        log::warn!(
            "r={} exceeds the {n} test samples; adopting all of them",
            config.r
        );
        n
    } else {
        config.r
    };
    let adopted: Vec<Adopted> = confidence_order(&iteration1)
        .into_iter()
        .take(take)
        .map(|t| {
            let p = &iteration1.predictions[t];
            Adopted {
                index: p.index,
                id: partition.order()[p.index].clone(),
                pseudo_label: p.label.clone(),
                confidence: p.confidence,
            }
        })
        .collect();

    let mut indices = train;
    indices.extend(adopted.iter().map(|a| a.index));
    let mut labels: Vec<&str> = train_labels.iter().map(AsRef::as_ref).collect();
    labels.extend(adopted.iter().map(|a| a.pseudo_label.as_str()));

    let second = KrrModel::fit_with_codec(k, &indices, &labels, codec, &config.krr, exec)?;
    let iteration2 = second.predict(k, &test, exec)?;

    let trace = TkcTrace {
        iteration1,
        adopted,
        iteration2: iteration2.clone(),
    };
    Ok((iteration2, trace))
}

/// Positions in `preds` by descending confidence, ties by ascending position.
pub fn confidence_order(preds: &PredictionSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (
            preds.predictions[a].confidence,
            preds.predictions[b].confidence,
        );
        cb.total_cmp(&ca).then(a.cmp(&b))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::transforms::Stage;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(m: usize, n: usize, seed: u64) -> (KernelMatrix, Partition, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feats = Matrix::from_fn(m + n, 6, |_, _| rng.gen_range(-1.0..1.0));
        let k = KernelMatrix::new(
            feats.row_gram(Execution::Sequential),
            m,
            n,
            Stage::Transductive,
        )
        .unwrap();
        let p = Partition::from_ids(
            (0..m).map(|i| format!("tr{i}")).collect(),
            (0..n).map(|i| format!("te{i}")).collect(),
        )
        .unwrap();
        let labels = (0..m)
            .map(|i| if feats[(i, 0)] > 0.0 { "pos" } else { "neg" }.to_string())
            .collect();
        (k, p, labels)
    }

    #[test]
    fn r_zero_matches_plain_classifier() {
        let (k, p, labels) = setup(20, 10, 1);
        let cfg = TkcConfig::new(0, KrrConfig::default()).unwrap();
        let (preds, trace) = tkc_run(&k, &p, &labels, &cfg, Execution::Parallel).unwrap();
        let plain = KrrModel::fit(
            &k,
            &p.train_indices(),
            &labels,
            &cfg.krr,
            Execution::Parallel,
        )
        .unwrap()
        .predict(&k, &p.test_indices(), Execution::Parallel)
        .unwrap();
        assert_eq!(preds, plain);
        assert_eq!(trace.iteration1, trace.iteration2);
        assert!(trace.adopted.is_empty());
    }

    #[test]
    fn r_clamped_to_n() {
        let (k, p, labels) = setup(15, 8, 2);
        let cfg = TkcConfig::new(1000, KrrConfig::default()).unwrap();
        let (preds, trace) = tkc_run(&k, &p, &labels, &cfg, Execution::Parallel).unwrap();
        assert_eq!(preds.len(), 8);
        assert_eq!(trace.adopted.len(), 8);
    }

    #[test]
    fn adopted_dominate_the_rest() {
        let (k, p, labels) = setup(30, 25, 3);
        let cfg = TkcConfig::new(10, KrrConfig::default()).unwrap();
        let (_, trace) = tkc_run(&k, &p, &labels, &cfg, Execution::Parallel).unwrap();
        assert_eq!(trace.adopted.len(), 10);
        let adopted: Vec<usize> = trace.adopted.iter().map(|a| a.index).collect();
        let min_in = trace
            .adopted
            .iter()
            .map(|a| a.confidence)
            .fold(f64::INFINITY, f64::min);
        let max_out = trace
            .iteration1
            .predictions
            .iter()
            .filter(|q| !adopted.contains(&q.index))
            .map(|q| q.confidence)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_in >= max_out);
        for a in &trace.adopted {
            let q = trace
                .iteration1
                .predictions
                .iter()
                .find(|q| q.index == a.index)
                .unwrap();
            assert_eq!(a.pseudo_label, q.label);
            assert_eq!(a.id, p.order()[a.index]);
        }
    }

    #[test]
    fn deterministic_and_execution_independent() {
        let (k, p, labels) = setup(25, 20, 4);
        let cfg = TkcConfig::new(7, KrrConfig::default()).unwrap();
        let a = tkc_run(&k, &p, &labels, &cfg, Execution::Parallel).unwrap();
        let b = tkc_run(&k, &p, &labels, &cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_keep_test_order() {
        let preds = PredictionSet {
            classes: vec!["a".into(), "b".into()],
            predictions: [0.5, 0.9, 0.5, 0.9]
                .iter()
                .enumerate()
                .map(|(i, &c)| crate::krr::Prediction {
                    index: i,
                    scores: vec![c],
                    label: "a".into(),
                    confidence: c,
                })
                .collect(),
        };
        assert_eq!(confidence_order(&preds), [1, 3, 0, 2]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            TkcConfig::new(-1, KrrConfig::default()),
            Err(Error::Config(_))
        ));
        let bad = TkcConfig {
            iterations: 3,
            ..Default::default()
        };
        let (k, p, labels) = setup(5, 3, 5);
        assert!(tkc_run(&k, &p, &labels, &bad, Execution::Parallel).is_err());
        assert!(tkc_run(
            &k,
            &p,
            &labels[..4],
            &TkcConfig::default(),
            Execution::Parallel
        )
        .is_err());
    }
}
