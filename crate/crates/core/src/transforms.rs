//! Kernel matrices over the joint train+test order and the transductive
//! pipeline: normalization, RBF re-embedding, the row-feature linear
//! kernel `K̃·K̃ᵀ`, and kernel sums.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Partition;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matrix::Matrix;

/// Relative tolerance for the symmetry check on construction and load.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub const KMAT_MAGIC: &[u8] = b"KMAT1\n";
const MAX_HEADER: usize = 256;

/// Default RBF width; with normalized inputs `σ² = 0.5` gives `exp(K̂ - 1)`.
pub const DEFAULT_SIGMA2: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Normalized,
    Rbf,
    Transductive,
    Sum,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Raw => "raw",
            Stage::Normalized => "normalized",
            Stage::Rbf => "rbf",
            Stage::Transductive => "transductive",
            Stage::Sum => "sum",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Stage::Raw),
            "normalized" => Ok(Stage::Normalized),
            "rbf" => Ok(Stage::Rbf),
            "transductive" => Ok(Stage::Transductive),
            "sum" => Ok(Stage::Sum),
            _ => Err(Error::Format(format!("unknown stage `{s}`"))),
        }
    }
}

/// Dense symmetric kernel matrix over `m` training and `n` test samples,
/// in joint order (training block first).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: Matrix,
    m: usize,
    n: usize,
    stage: Stage,
}

impl KernelMatrix {
    pub fn new(values: Matrix, m: usize, n: usize, stage: Stage) -> Result<Self> {
        if !values.is_square() || values.rows() != m + n {
            return Err(Error::Validation(format!(
                "kernel matrix is {}x{}, expected {}x{} for m={m} n={n}",
                values.rows(),
                values.cols(),
                m + n,
                m + n
            )));
        }
        if !values.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::Validation(format!(
                "kernel matrix is not symmetric (max deviation {:e})",
                values.asymmetry().unwrap_or(f64::NAN)
            )));
        }
        Ok(KernelMatrix {
            values,
            m,
            n,
            stage,
        })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Checks that this matrix was built over `partition`'s block sizes.
    pub fn check_partition(&self, partition: &Partition) -> Result<()> {
        if self.m != partition.m() || self.n != partition.n() {
            return Err(Error::Validation(format!(
                "kernel has m={} n={}, partition has m={} n={}",
                self.m,
                self.n,
                partition.m(),
                partition.n()
            )));
        }
        Ok(())
    }

    fn expect_stage(&self, want: Stage, op: &str) -> Result<()> {
        if self.stage != want {
            return Err(Error::Validation(format!(
                "{op} expects a {want} kernel, got {}",
                self.stage
            )));
        }
        Ok(())
    }

    fn derive(&self, values: Matrix, stage: Stage) -> KernelMatrix {
        KernelMatrix {
            values,
            m: self.m,
            n: self.n,
            stage,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_kmat()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_kmat(&bytes)
    }

    /// KMAT encoding: magic, one ASCII header line, then `dim²`
    /// little-endian `f64` values in row-major order.
    pub fn to_kmat(&self) -> Vec<u8> {
        let d = self.dim();
        let header = format!("dim={d} m={} n={} stage={}\n", self.m, self.n, self.stage);
        let mut out = Vec::with_capacity(KMAT_MAGIC.len() + header.len() + d * d * 8);
        out.extend_from_slice(KMAT_MAGIC);
        out.extend_from_slice(header.as_bytes());
        for v in self.values.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_kmat(bytes: &[u8]) -> Result<Self> {
        let rest = bytes
            .strip_prefix(KMAT_MAGIC)
            .ok_or_else(|| Error::Format("missing KMAT1 magic".into()))?;
        let nl = rest
            .iter()
            .take(MAX_HEADER)
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("unterminated KMAT header".into()))?;
        let header = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::Format("KMAT header is not ASCII".into()))?;
        let payload = &rest[nl + 1..];

        let mut fields = HashMap::new();
        for tok in header.split(' ') {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad KMAT header field `{tok}`")))?;
            if fields.insert(k, v).is_some() {
                return Err(Error::Format(format!("repeated KMAT header field `{k}`")));
            }
        }
        let num = |key: &str| -> Result<usize> {
            fields
                .get(key)
                .ok_or_else(|| Error::Format(format!("KMAT header lacks `{key}`")))?
                .parse()
                .map_err(|_| Error::Format(format!("KMAT header `{key}` is not a count")))
        };
        let (d, m, n) = (num("dim")?, num("m")?, num("n")?);
        let stage: Stage = fields
            .get("stage")
            .ok_or_else(|| Error::Format("KMAT header lacks `stage`".into()))?
            .parse()?;
        if fields.len() != 4 {
            return Err(Error::Format(format!("unexpected KMAT header `{header}`")));
        }
        if m.checked_add(n) != Some(d) {
            return Err(Error::Format(format!(
                "KMAT dim={d} but m+n={}",
                m as u128 + n as u128
            )));
        }
        let want = d
            .checked_mul(d)
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| Error::Format(format!("KMAT dim={d} too large")))?;
        if payload.len() != want {
            return Err(Error::Format(format!(
                "KMAT payload has {} bytes, dim={d} needs {want}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let values = Matrix::from_vec(d, d, data)?;
        KernelMatrix::new(values, m, n, stage).map_err(|e| match e {
            Error::Validation(msg) => Error::Format(msg),
            e => e,
        })
    }

    /// Debug export: comma-separated rows, 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        for i in 0..self.dim() {
            let row: Vec<String> = self
                .values
                .row(i)
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `K̂_ij = K_ij / sqrt(K_ii·K_jj)`.
///
/// A sample with zero self-similarity (empty or too-short document) gets
/// 1 on the diagonal and 0 elsewhere in its row and column.
pub fn normalize(k: &KernelMatrix) -> Result<KernelMatrix> {
    k.expect_stage(Stage::Raw, "normalize")?;
    Ok(k.derive(normalize_values(&k.values)?, Stage::Normalized))
}

/// Stage-agnostic normalization, for re-normalizing transductive kernels.
pub fn normalize_values(values: &Matrix) -> Result<Matrix> {
    let d = values.rows();
    let diag = values.diagonal();
    if let Some((i, v)) = diag
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v < 0.0)
    {
        return Err(Error::Validation(format!(
            "negative diagonal entry {v} at {i}"
        )));
    }
    let mut out = Matrix::zeros(d, d);
    exec::for_each_chunk_mut(
        Execution::Parallel,
        out.as_mut_slice(),
        d.max(1),
        |i, row| {
            let kii = diag[i];
            for (j, o) in row.iter_mut().enumerate() {
                *o = if i == j {
                    1.0
                } else if kii == 0.0 || diag[j] == 0.0 {
                    0.0
                } else {
                    values[(i, j)] / (kii * diag[j]).sqrt()
                };
            }
        },
    );
    Ok(out)
}

/// `K̃_ij = exp(-(1 - K̂_ij) / (2σ²))`; at the default `σ² = 0.5` this is
/// `exp(K̂_ij - 1)`.
pub fn rbf_transform(k: &KernelMatrix, sigma2: f64) -> Result<KernelMatrix> {
    k.expect_stage(Stage::Normalized, "rbf_transform")?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let mut values = k.values.clone();
    if sigma2 == DEFAULT_SIGMA2 {
        values
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = (*v - 1.0).exp());
    } else {
        let scale = 2.0 * sigma2;
        values
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = (-(1.0 - *v) / scale).exp());
    }
    Ok(k.derive(values, Stage::Rbf))
}

/// `K̈ = K̃·K̃ᵀ`: every row of the RBF matrix (similarities to all train
/// *and* test samples) becomes a feature vector under a linear kernel.
pub fn transductive_kernel(k: &KernelMatrix, exec: Execution) -> Result<KernelMatrix> {
    k.expect_stage(Stage::Rbf, "transductive_kernel")?;
    Ok(k.derive(k.values.row_gram(exec), Stage::Transductive))
}

/// Elementwise sum of kernels of one stage over one partition.
pub fn sum_kernels(ks: &[KernelMatrix]) -> Result<KernelMatrix> {
    let (first, rest) = ks
        .split_first()
        .ok_or_else(|| Error::Validation("sum of zero kernels".into()))?;
    let mut values = first.values.clone();
    for k in rest {
        if (k.m, k.n) != (first.m, first.n) {
            return Err(Error::Validation(format!(
                "cannot sum kernels over m={} n={} and m={} n={}",
                first.m, first.n, k.m, k.n
            )));
        }
        if k.stage != first.stage {
            return Err(Error::Validation(format!(
                "cannot sum {} and {} kernels",
                first.stage, k.stage
            )));
        }
        values.add_assign(&k.values)?;
    }
    Ok(first.derive(values, Stage::Sum))
}

/// `K_ij = exp(-γ·‖u_i - u_j‖²)` over dense feature vectors in joint order.
pub fn rbf_dense_kernel(
    features: &[Vec<f64>],
    gamma: f64,
    m: usize,
    n: usize,
    exec: Execution,
) -> Result<KernelMatrix> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if features.len() != m + n {
        return Err(Error::Validation(format!(
            "{} feature vectors for m+n={} samples",
            features.len(),
            m + n
        )));
    }
    let dim = features.first().map_or(0, Vec::len);
    if let Some(i) = features.iter().position(|f| f.len() != dim) {
        return Err(Error::Validation(format!(
            "feature vector {i} has dimension {}, expected {dim}",
            features[i].len()
        )));
    }
    let d = features.len();
    let mut out = Matrix::zeros(d, d);
    exec::for_each_chunk_mut(exec, out.as_mut_slice(), d.max(1), |i, row| {
        for j in i..d {
            let dist2: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            row[j] = (-gamma * dist2).exp();
        }
    });
    let data = out.as_mut_slice();
    for i in 0..d {
        for j in 0..i {
            data[i * d + j] = data[j * d + i];
        }
    }
    KernelMatrix::new(out, m, n, Stage::Raw)
}

/// Reads `id<TAB>v1,v2,...` lines (commas or whitespace between values).
pub fn load_features(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `id<TAB>values`".into()))?;
        let values = rest
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad number `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if out.insert(id.to_owned(), values).is_some() {
            return Err(parse_err(format!("duplicate id `{id}`")));
        }
    }
    Ok(out)
}

/// Feature vectors aligned to the partition's joint order.
pub fn align_features(
    partition: &Partition,
    features: &HashMap<String, Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    partition
        .order()
        .iter()
        .map(|id| {
            features
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Validation(format!("no feature vector for id `{id}`")))
        })
        .collect()
}

/// The raw → normalized → RBF → transductive chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransductivePipeline {
    pub sigma2: f64,
    /// Normalize `K̈` once more after the product. Off by default.
    pub renormalize: bool,
}

impl Default for TransductivePipeline {
    fn default() -> Self {
        TransductivePipeline {
            sigma2: DEFAULT_SIGMA2,
            renormalize: false,
        }
    }
}

impl TransductivePipeline {
    pub fn run(&self, raw: &KernelMatrix, exec: Execution) -> Result<KernelMatrix> {
        let rbf = rbf_transform(&normalize(raw)?, self.sigma2)?;
        let k = transductive_kernel(&rbf, exec)?;
        if self.renormalize {
            let values = normalize_values(&k.values)?;
            return Ok(k.derive(values, Stage::Transductive));
        }
        Ok(k)
    }
}
