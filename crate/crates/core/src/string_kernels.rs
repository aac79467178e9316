//! Character n-gram profiles and the spectrum, presence-bits and
//! intersection string kernels.
//!
//! An n-gram range `[p_min, p_max]` blends lengths by summing the per-length
//! kernels, which is the same as one profile keyed by the n-gram bytes
//! (n-grams of different lengths never collide).

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Partition};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matrix::Matrix;
use crate::transforms::{KernelMatrix, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `Σ_v num_v(x)·num_v(y)`
    Spectrum,
    /// `Σ_v [v∈x]·[v∈y]`
    Presence,
    /// `Σ_v min(num_v(x), num_v(y))`
    Intersection,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [
        KernelKind::Spectrum,
        KernelKind::Presence,
        KernelKind::Intersection,
    ];

    #[inline]
    fn combine(self, a: u32, b: u32) -> u64 {
        match self {
            KernelKind::Spectrum => a as u64 * b as u64,
            KernelKind::Presence => 1,
            KernelKind::Intersection => a.min(b) as u64,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Spectrum => "spectrum",
            KernelKind::Presence => "presence",
            KernelKind::Intersection => "intersection",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectrum" => Ok(KernelKind::Spectrum),
            "presence" => Ok(KernelKind::Presence),
            "intersection" => Ok(KernelKind::Intersection),
            _ => Err(Error::Config(format!(
                "unknown kernel kind `{s}` (expected spectrum, presence or intersection)"
            ))),
        }
    }
}

/// Inclusive n-gram length range, `1 <= min <= max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct NGramRange {
    min: usize,
    max: usize,
}

impl NGramRange {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min == 0 || min > max {
            return Err(Error::Config(format!(
                "invalid n-gram range {min}..={max} (need 1 <= pmin <= pmax)"
            )));
        }
        Ok(NGramRange { min, max })
    }

    pub fn min(self) -> usize {
        self.min
    }

    pub fn max(self) -> usize {
        self.max
    }
}

impl TryFrom<(usize, usize)> for NGramRange {
    type Error = Error;

    fn try_from((a, b): (usize, usize)) -> Result<Self> {
        NGramRange::new(a, b)
    }
}

impl From<NGramRange> for (usize, usize) {
    fn from(r: NGramRange) -> Self {
        (r.min, r.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub range: NGramRange,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, p_min: usize, p_max: usize) -> Result<Self> {
        Ok(KernelSpec {
            kind,
            range: NGramRange::new(p_min, p_max)?,
        })
    }
}

/// Text handling applied before n-gram extraction. Both flags default off:
/// n-grams are raw contiguous byte substrings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextOptions {
    /// Count n-grams of Unicode scalar values instead of bytes.
    #[serde(default)]
    pub unicode: bool,
    #[serde(default)]
    pub lowercase: bool,
}

impl TextOptions {
    fn prepare<'a>(&self, text: &'a [u8]) -> Cow<'a, [u8]> {
        match (self.lowercase, self.unicode) {
            (false, _) => Cow::Borrowed(text),
            (true, false) => Cow::Owned(text.to_ascii_lowercase()),
            (true, true) => Cow::Owned(String::from_utf8_lossy(text).to_lowercase().into_bytes()),
        }
    }
}

/// Calls `f` on every n-gram of `text` with length in `range`.
fn for_each_gram<'t>(
    text: &'t [u8],
    range: NGramRange,
    unicode: bool,
    mut f: impl FnMut(&'t [u8]),
) {
    if !unicode {
        for p in range.min..=range.max {
            text.windows(p).for_each(&mut f);
        }
        return;
    }
    // Char boundaries, including the end of the text. Invalid UTF-8 bytes
    // count as one character each.
    let mut bounds = Vec::with_capacity(text.len() + 1);
    let mut pos = 0;
    for chunk in text.utf8_chunks() {
        for (i, _) in chunk.valid().char_indices() {
            bounds.push(pos + i);
        }
        pos += chunk.valid().len();
        for _ in chunk.invalid() {
            bounds.push(pos);
            pos += 1;
        }
    }
    bounds.push(text.len());
    let chars = bounds.len() - 1;
    for p in range.min..=range.max {
        for s in 0..chars.saturating_sub(p - 1) {
            f(&text[bounds[s]..bounds[s + p]]);
        }
    }
}

/// Multiset of the n-grams of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    range: NGramRange,
    counts: HashMap<Vec<u8>, u32>,
}

impl NGramProfile {
    pub fn new(text: &[u8], range: NGramRange) -> Self {
        Self::with_options(text, range, &TextOptions::default())
    }

    pub fn with_options(text: &[u8], range: NGramRange, opts: &TextOptions) -> Self {
        let text = opts.prepare(text);
        let mut counts: HashMap<Vec<u8>, u32> = HashMap::new();
        for_each_gram(&text, range, opts.unicode, |g| {
            if let Some(c) = counts.get_mut(g) {
                *c += 1;
            } else {
                counts.insert(g.to_vec(), 1);
            }
        });
        NGramProfile { range, counts }
    }

    pub fn range(&self) -> NGramRange {
        self.range
    }

    pub fn count(&self, gram: &[u8]) -> u32 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<Vec<u8>, u32> {
        &self.counts
    }

    /// Number of distinct n-grams.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total n-gram occurrences.
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }
}

/// Kernel value between two profiles built over the same range.
pub fn kernel_value(a: &NGramProfile, b: &NGramProfile, kind: KernelKind) -> Result<f64> {
    if a.range != b.range {
        return Err(Error::Validation(format!(
            "profiles built over different n-gram ranges ({:?} vs {:?})",
            a.range, b.range
        )));
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let sum: u64 = small
        .counts
        .iter()
        .filter_map(|(g, &c)| large.counts.get(g).map(|&d| kind.combine(c, d)))
        .sum();
    Ok(sum as f64)
}

/// Gram matrix over the documents of `partition`, looked up by id in `corpora`.
pub fn gram_matrix(
    partition: &Partition,
    corpora: &[&Corpus],
    spec: KernelSpec,
    opts: &TextOptions,
    exec: Execution,
) -> Result<KernelMatrix> {
    let texts: Vec<&[u8]> = partition
        .order()
        .iter()
        .map(|id| {
            corpora
                .iter()
                .find_map(|c| c.get(id))
                .map(|d| d.text.as_slice())
                .ok_or_else(|| Error::Validation(format!("no document for id `{id}`")))
        })
        .collect::<Result<_>>()?;
    let values = gram_values(&texts, spec, opts, exec);
    KernelMatrix::new(values, partition.m(), partition.n(), Stage::Raw)
}

/// Dense symmetric Gram matrix of `texts` under `spec`.
///
/// N-grams are interned into integer ids and inverted into per-gram
/// posting lists, so each row costs the sum of the posting-list lengths
/// of its n-grams rather than a hash probe per pair. Values are summed
/// as integers, so the result is exact and independent of `exec`.
pub fn gram_values(
    texts: &[&[u8]],
    spec: KernelSpec,
    opts: &TextOptions,
    exec: Execution,
) -> Matrix {
    let prepared: Vec<Cow<'_, [u8]>> = texts.iter().map(|t| opts.prepare(t)).collect();
    let local: Vec<HashMap<&[u8], u32>> = exec::map_indices(exec, prepared.len(), |d| {
        let mut counts = HashMap::new();
        for_each_gram(&prepared[d], spec.range, opts.unicode, |g| {
            *counts.entry(g).or_insert(0u32) += 1;
        });
        counts
    });

    let mut ids: HashMap<&[u8], u32> = HashMap::new();
    let mut sparse: Vec<Vec<(u32, u32)>> = Vec::with_capacity(local.len());
    for counts in &local {
        let mut v: Vec<(u32, u32)> = counts
            .iter()
            .map(|(g, &c)| {
                let next = ids.len() as u32;
                (*ids.entry(g).or_insert(next), c)
            })
            .collect();
        v.sort_unstable();
        sparse.push(v);
    }
    drop(local);

    let mut postings: Vec<Vec<(u32, u32)>> = vec![Vec::new(); ids.len()];
    for (d, v) in sparse.iter().enumerate() {
        for &(g, c) in v {
            postings[g as usize].push((d as u32, c));
        }
    }

    let n = texts.len();
    let mut out = Matrix::zeros(n, n);
    if n == 0 {
        return out;
    }
    let kind = spec.kind;
    exec::for_each_chunk_mut_init(
        exec,
        out.as_mut_slice(),
        n,
        || (vec![0u64; n], Vec::<u32>::new()),
        |(acc, touched), i, row| {
            for &(g, ci) in &sparse[i] {
                let list = &postings[g as usize];
                let start = list.partition_point(|&(d, _)| (d as usize) < i);
                for &(j, cj) in &list[start..] {
                    let slot = &mut acc[j as usize];
                    if *slot == 0 {
                        touched.push(j);
                    }
                    *slot += kind.combine(ci, cj);
                }
            }
            for &j in touched.iter() {
                row[j as usize] = acc[j as usize] as f64;
                acc[j as usize] = 0;
            }
            touched.clear();
        },
    );
    let data = out.as_mut_slice();
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    out
}
