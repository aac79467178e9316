//! Synthetic two-domain, two-class corpora.
//!
//! Each class owns a few marker 5-grams that appear in both domains. The
//! background vocabulary differs completely between the source domain
//! (training) and the target domain (test): source words use letters
//! `a`–`m`, target words `n`–`z`. Within each domain half the vocabulary
//! leans towards each class, so the target domain carries class signal
//! that no training document exhibits. A class-neutral vocabulary over the
//! whole alphabet is shared by both domains.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::Result;

pub const CLASSES: [&str; 2] = ["neg", "pos"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Distinct marker 5-grams per class.
    pub markers_per_class: usize,
    /// Marker tokens per document.
    pub markers_per_doc: usize,
    /// Probability that a marker token comes from the document's own class.
    pub marker_fidelity: f64,
    /// Background words per document.
    pub words_per_doc: usize,
    /// Background vocabulary size per domain.
    pub vocab_size: usize,
    /// Probability that a domain word comes from the class-leaning half.
    pub background_bias: f64,
    /// Size of the class-neutral vocabulary shared by both domains.
    pub shared_vocab_size: usize,
    /// Probability that a background word is drawn from the shared vocabulary.
    pub shared_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_train: 500,
            n_test: 500,
            markers_per_class: 3,
            markers_per_doc: 2,
            marker_fidelity: 0.7,
            words_per_doc: 20,
            vocab_size: 60,
            background_bias: 0.7,
            shared_vocab_size: 60,
            shared_fraction: 0.5,
        }
    }
}

/// A generated task: labeled source corpus, target corpus with gold labels.
#[derive(Debug, Clone)]
pub struct SynthTask {
    pub train: Corpus,
    pub test: Corpus,
}

impl SynthTask {
    pub fn test_unlabeled(&self) -> Corpus {
        self.test.without_labels()
    }

    pub fn gold(&self) -> Vec<String> {
        self.test
            .labels()
            .expect("generated test documents are labeled")
    }
}

fn word(rng: &mut ChaCha8Rng, letters: &[u8]) -> String {
    let len = rng.gen_range(3..=6);
    (0..len)
        .map(|_| *letters.choose(rng).unwrap() as char)
        .collect()
}

fn vocabulary(rng: &mut ChaCha8Rng, letters: &[u8], size: usize) -> Vec<String> {
    let mut v: Vec<String> = Vec::with_capacity(size);
    while v.len() < size {
        let w = word(rng, letters);
        if !v.contains(&w) {
            v.push(w);
        }
    }
    v
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut markers: Vec<String> = Vec::new();
    while markers.len() < 2 * cfg.markers_per_class {
        let m: String = (0..5).map(|_| rng.gen_range(b'A'..=b'H') as char).collect();
        if !markers.contains(&m) {
            markers.push(m);
        }
    }
    let source = vocabulary(&mut rng, b"abcdefghijklm", cfg.vocab_size);
    let target = vocabulary(&mut rng, b"nopqrstuvwxyz", cfg.vocab_size);
    let shared = vocabulary(
        &mut rng,
        b"abcdefghijklmnopqrstuvwxyz",
        cfg.shared_vocab_size,
    );

    let doc = |rng: &mut ChaCha8Rng, vocab: &[String], class: usize| -> String {
        let half = vocab.len() / 2;
        let mut tokens: Vec<&str> = Vec::with_capacity(cfg.words_per_doc + cfg.markers_per_doc);
        for _ in 0..cfg.words_per_doc {
            if !shared.is_empty() && rng.gen_bool(cfg.shared_fraction) {
                tokens.push(shared.choose(rng).unwrap());
                continue;
            }
            let lean = if rng.gen_bool(cfg.background_bias) {
                class
            } else {
                1 - class
            };
            let w = &vocab[lean * half..(lean + 1) * half];
            tokens.push(w.choose(rng).unwrap());
        }
        for _ in 0..cfg.markers_per_doc {
            let c = if rng.gen_bool(cfg.marker_fidelity) {
                class
            } else {
                1 - class
            };
            let k = cfg.markers_per_class;
            tokens.push(&markers[c * k + rng.gen_range(0..k)]);
        }
        tokens.shuffle(rng);
        tokens.join(" ")
    };

    let make = |prefix: &str, count: usize, vocab: &[String], rng: &mut ChaCha8Rng| {
        (0..count)
            .map(|i| {
                let class = i % 2;
                Document::new(
                    format!("{prefix}{i}"),
                    doc(rng, vocab, class),
                    Some(CLASSES[class]),
                )
            })
            .collect::<Vec<_>>()
    };
    let train = make("src", cfg.n_train, &source, &mut rng);
    let test = make("tgt", cfg.n_test, &target, &mut rng);
    Ok(SynthTask {
        train: Corpus::new(train)?,
        test: Corpus::new(test)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig {
            n_train: 10,
            n_test: 6,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.train.to_tsv(), b.train.to_tsv());
        assert_eq!(a.test.to_tsv(), b.test.to_tsv());
        let c = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.train.to_tsv(), c.train.to_tsv());
        assert_eq!(a.train.len(), 10);
        assert_eq!(a.gold().len(), 6);
        assert!(a.test_unlabeled().docs().iter().all(|d| d.label.is_none()));
    }

    #[test]
    fn domains_share_no_background_letters() {
        let t = generate(&SynthConfig {
            n_train: 20,
            n_test: 20,
            shared_vocab_size: 0,
            ..Default::default()
        })
        .unwrap();
        for d in t.train.docs() {
            assert!(d.text.iter().all(|b| !(b'n'..=b'z').contains(b)));
        }
        for d in t.test.docs() {
            assert!(d.text.iter().all(|b| !(b'a'..=b'm').contains(b)));
        }
    }
}
