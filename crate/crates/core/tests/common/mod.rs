#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tskern::{KernelKind, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_string(rng: &mut ChaCha8Rng, max_len: usize, alphabet: usize) -> Vec<u8> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| b'a' + rng.gen_range(0..alphabet) as u8)
        .collect()
}

/// Kernel value by explicit substring enumeration, independent of any
/// profile or hashing code.
pub fn oracle_kernel(x: &[u8], y: &[u8], p_min: usize, p_max: usize, kind: KernelKind) -> u64 {
    let mut total = 0u64;
    for p in p_min..=p_max {
        let wx: Vec<&[u8]> = if x.len() >= p {
            x.windows(p).collect()
        } else {
            vec![]
        };
        let wy: Vec<&[u8]> = if y.len() >= p {
            y.windows(p).collect()
        } else {
            vec![]
        };
        match kind {
            KernelKind::Spectrum => {
                for a in &wx {
                    for b in &wy {
                        if a == b {
                            total += 1;
                        }
                    }
                }
            }
            KernelKind::Presence | KernelKind::Intersection => {
                for (i, v) in wx.iter().enumerate() {
                    if wx[..i].contains(v) {
                        continue;
                    }
                    let cx = wx.iter().filter(|w| *w == v).count() as u64;
                    let cy = wy.iter().filter(|w| *w == v).count() as u64;
                    if cy > 0 {
                        total += match kind {
                            KernelKind::Presence => 1,
                            _ => cx.min(cy),
                        };
                    }
                }
            }
        }
    }
    total
}

pub fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    SymmetricEigen::new(to_nalgebra(m)).eigenvalues.min()
}

pub fn residual_norm(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x)
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Writes `count` small labeled domains `D0.tsv`, `D1.tsv`, ... into `dir`,
/// alternating between the two synthetic vocabularies.
pub fn write_domains(dir: &std::path::Path, count: usize, docs: usize) -> Vec<std::path::PathBuf> {
    use tskern::synth::{generate, SynthConfig};
    (0..count)
        .map(|d| {
            let task = generate(&SynthConfig {
                seed: 100 + d as u64,
                n_train: docs,
                n_test: docs,
                ..Default::default()
            })
            .unwrap();
            let source = if d % 2 == 0 { &task.train } else { &task.test };
            let renamed: Vec<tskern::Document> = source
                .docs()
                .iter()
                .map(|doc| {
                    tskern::Document::new(
                        format!("d{d}_{}", doc.id),
                        doc.text.clone(),
                        doc.label.as_deref(),
                    )
                })
                .collect();
            let path = dir.join(format!("D{d}.tsv"));
            tskern::Corpus::new(renamed).unwrap().save(&path).unwrap();
            path
        })
        .collect()
}
