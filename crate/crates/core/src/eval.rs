//! Accuracy and the paired McNemar test.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::transductive::TkcTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// Per-sample correctness, in prediction order.
    #[serde(skip)]
    pub hits: Vec<bool>,
}

pub fn accuracy<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> Result<EvalResult> {
    if predicted.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Validation(
            "accuracy of an empty prediction set".into(),
        ));
    }
    let hits: Vec<bool> = predicted
        .iter()
        .zip(gold)
        .map(|(p, g)| p.as_ref() == g.as_ref())
        .collect();
    let correct = hits.iter().filter(|&&h| h).count();
    Ok(EvalResult {
        correct,
        total: hits.len(),
        accuracy: correct as f64 / hits.len() as f64,
        hits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: usize,
    /// A wrong, B correct.
    pub c: usize,
    pub statistic: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Chi-square critical value with one degree of freedom.
pub fn chi2_critical(alpha: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 3] = [(0.05, 3.841), (0.01, 6.635), (0.001, 10.828)];
    TABLE
        .iter()
        .find(|(a, _)| *a == alpha)
        .map(|&(_, v)| v)
        .ok_or_else(|| Error::Config(format!("unsupported significance level {alpha}")))
}

/// Continuity-corrected McNemar statistic `max(|b-c|-1, 0)² / (b+c)`,
/// zero when the classifiers never disagree.
pub fn mcnemar_statistic(b: usize, c: usize) -> f64 {
    if b + c == 0 {
        return 0.0;
    }
    let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    diff * diff / (b + c) as f64
}

pub fn mcnemar(a: &EvalResult, b: &EvalResult, alpha: f64) -> Result<McNemarResult> {
    if a.hits.len() != b.hits.len() {
        return Err(Error::Validation(format!(
            "McNemar over {} and {} samples",
            a.hits.len(),
            b.hits.len()
        )));
    }
    let critical = chi2_critical(alpha)?;
    let (mut nb, mut nc) = (0, 0);
    for (&x, &y) in a.hits.iter().zip(&b.hits) {
        match (x, y) {
            (true, false) => nb += 1,
            (false, true) => nc += 1,
            _ => {}
        }
    }
    let statistic = mcnemar_statistic(nb, nc);
    Ok(McNemarResult {
        b: nb,
        c: nc,
        statistic,
        alpha,
        significant: statistic > critical,
    })
}

/// Rows of a prediction file: `id<TAB>label<TAB>confidence`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub label: String,
    pub confidence: f64,
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let err = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut f = line.split('\t');
            match (f.next(), f.next(), f.next(), f.next()) {
                (Some(id), Some(label), Some(conf), None) => Ok(PredictionRow {
                    id: id.to_string(),
                    label: label.to_string(),
                    confidence: conf.parse().map_err(|_| err("bad confidence"))?,
                }),
                _ => Err(err("expected `id<TAB>label<TAB>confidence`")),
            }
        })
        .collect()
}

/// Gold labels for `ids`, looked up in a labeled corpus.
pub fn gold_for<'a>(ids: impl IntoIterator<Item = &'a str>, gold: &Corpus) -> Result<Vec<String>> {
    ids.into_iter()
        .map(|id| {
            gold.get(id)
                .and_then(|d| d.label.clone())
                .ok_or_else(|| Error::Validation(format!("no gold label for `{id}`")))
        })
        .collect()
}

/// Fraction of adopted pseudo-labels that disagree with the gold labels.
pub fn pseudo_label_error_rate(
    trace: &TkcTrace,
    gold: &HashMap<String, String>,
) -> Result<Option<f64>> {
    if trace.adopted.is_empty() {
        return Ok(None);
    }
    let mut wrong = 0;
    for a in &trace.adopted {
        let g = gold
            .get(&a.id)
            .ok_or_else(|| Error::Validation(format!("no gold label for `{}`", a.id)))?;
        if *g != a.pseudo_label {
            wrong += 1;
        }
    }
    Ok(Some(wrong as f64 / trace.adopted.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(hits: &[bool]) -> EvalResult {
        let correct = hits.iter().filter(|&&h| h).count();
        EvalResult {
            correct,
            total: hits.len(),
            accuracy: correct as f64 / hits.len() as f64,
            hits: hits.to_vec(),
        }
    }

    /// Builds paired results with the given disagreement counts.
    fn paired(b: usize, c: usize, agree: usize) -> (EvalResult, EvalResult) {
        let mut ha = vec![true; b];
        let mut hb = vec![false; b];
        ha.extend(vec![false; c]);
        hb.extend(vec![true; c]);
        ha.extend(vec![true; agree]);
        hb.extend(vec![true; agree]);
        (result(&ha), result(&hb))
    }

    #[test]
    fn accuracy_examples() {
        let r = accuracy(&["a", "b", "a", "a"], &["a", "b", "b", "a"]).unwrap();
        assert_eq!((r.correct, r.total, r.accuracy), (3, 4, 0.75));
        assert_eq!(r.hits, [true, true, false, true]);
        assert_eq!(accuracy(&["x"], &["x"]).unwrap().accuracy, 1.0);
        assert!(accuracy::<&str, &str>(&[], &[]).is_err());
        assert!(accuracy(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn mcnemar_examples() {
        let (a, b) = paired(10, 30, 5);
        let r = mcnemar(&a, &b, 0.01).unwrap();
        assert_eq!((r.b, r.c), (10, 30));
        assert!((r.statistic - 9.025).abs() < 1e-12);
        assert!(r.significant);

        let (a, b) = paired(5, 5, 3);
        let r = mcnemar(&a, &b, 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.significant);

        let (a, b) = paired(0, 0, 4);
        let r = mcnemar(&a, &b, 0.01).unwrap();
        assert_eq!((r.b, r.c, r.statistic, r.significant), (0, 0, 0.0, false));

        assert_eq!(mcnemar_statistic(3, 4), 0.0);
        assert!(mcnemar(&a, &result(&[true]), 0.01).is_err());
        assert!(mcnemar(&a, &b, 0.2).is_err());
    }

    #[test]
    fn mcnemar_swap_symmetry() {
        let (a, b) = paired(7, 19, 2);
        let ab = mcnemar(&a, &b, 0.01).unwrap();
        let ba = mcnemar(&b, &a, 0.01).unwrap();
        assert_eq!((ab.b, ab.c), (ba.c, ba.b));
        assert_eq!(ab.statistic, ba.statistic);
    }
}
