//! Declarative cross-domain experiments.
//!
//! A TOML config names the corpora, the base kernels and the methods to
//! compare. Each *cell* is one (training set, test set) pair:
//!
//! * `multi-source`: train on every domain but one, test on the held-out one.
//! * `single-source`: train on one domain, test on each other domain.
//! * `split`: one explicit train file and one test file.
//!
//! Every method in every cell is scored for accuracy and compared with a
//! baseline method by McNemar's test.
//!
//! ```toml
//! mode = "multi-source"
//! r = 1000
//! lambda = 1e-5
//! baseline = "best"
//! output_json = "report.json"
//!
//! [[domain]]
//! name = "B"
//! path = "books.tsv"
//!
//! [[kernel]]
//! name = "K01"
//! kind = "presence"
//! pmin = 5
//! pmax = 8
//!
//! [[method]]
//! name = "K01+TKC"
//! kernels = ["K01"]
//! pipeline = "tkc"
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Partition};
use crate::error::{Error, Result};
use crate::eval::{self, EvalResult, McNemarResult};
use crate::exec::{self, Execution};
use crate::krr::{KrrConfig, KrrModel, PredictionSet};
use crate::string_kernels::{gram_matrix, KernelKind, KernelSpec, TextOptions};
use crate::transductive::{tkc_run, TkcConfig, DEFAULT_ADOPTED};
use crate::transforms::{
    self, align_features, load_features, rbf_dense_kernel, KernelMatrix, Stage,
    TransductivePipeline,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    MultiSource,
    SingleSource,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Normalized base kernel(s).
    Baseline,
    /// `K̈` of each base kernel.
    Transductive,
    /// `K̈` plus two-iteration self-training.
    Tkc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Gold labels for the test set; defaults to the labels in `test`.
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub name: String,
    /// `spectrum`, `presence`, `intersection`, `rbf-dense` or `precomputed`.
    pub kind: String,
    pub pmin: Option<usize>,
    pub pmax: Option<usize>,
    /// Feature file for `rbf-dense`.
    pub features: Option<PathBuf>,
    pub gamma: Option<f64>,
    /// Raw KMAT file for `precomputed` (split mode only).
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub kernels: Vec<String>,
    pub pipeline: Pipeline,
}

fn default_r() -> i64 {
    DEFAULT_ADOPTED as i64
}

fn default_lambda() -> f64 {
    crate::krr::DEFAULT_LAMBDA
}

fn default_sigma2() -> f64 {
    transforms::DEFAULT_SIGMA2
}

fn default_alpha() -> f64 {
    0.01
}

fn default_baseline() -> String {
    "best".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_r")]
    pub r: i64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub renormalize: bool,
    /// `best` (best baseline-pipeline method per cell) or a method name.
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default)]
    pub lowercase: bool,
    #[serde(default)]
    pub unicode: bool,
    pub output_json: Option<PathBuf>,
    pub output_text: Option<PathBuf>,
    #[serde(default, rename = "domain")]
    pub domains: Vec<DomainConfig>,
    pub split: Option<SplitConfig>,
    #[serde(default, rename = "kernel")]
    pub kernels: Vec<KernelConfig>,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodConfig>,
}

#[derive(Debug, Clone)]
enum KernelSource {
    Strings(KernelSpec),
    Dense { features: PathBuf, gamma: f64 },
    Precomputed(PathBuf),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file, resolving relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.domains.iter_mut().for_each(|d| fix(&mut d.path));
        if let Some(s) = &mut self.split {
            fix(&mut s.train);
            fix(&mut s.test);
            if let Some(g) = &mut s.gold {
                fix(g);
            }
        }
        for k in &mut self.kernels {
            if let Some(p) = &mut k.features {
                fix(p);
            }
            if let Some(p) = &mut k.path {
                fix(p);
            }
        }
        if let Some(p) = &mut self.output_json {
            fix(p);
        }
        if let Some(p) = &mut self.output_text {
            fix(p);
        }
    }

    fn tkc(&self) -> Result<TkcConfig> {
        TkcConfig::new(self.r, KrrConfig::new(self.lambda)?)
    }

    fn text_options(&self) -> TextOptions {
        TextOptions {
            unicode: self.unicode,
            lowercase: self.lowercase,
        }
    }

    fn kernel_source(&self, k: &KernelConfig) -> Result<KernelSource> {
        let need = |v: &Option<PathBuf>, what: &str| {
            v.clone()
                .ok_or_else(|| Error::Config(format!("kernel `{}` needs `{what}`", k.name)))
        };
        match k.kind.as_str() {
            "rbf-dense" => Ok(KernelSource::Dense {
                features: need(&k.features, "features")?,
                gamma: k
                    .gamma
                    .ok_or_else(|| Error::Config(format!("kernel `{}` needs `gamma`", k.name)))?,
            }),
            "precomputed" => Ok(KernelSource::Precomputed(need(&k.path, "path")?)),
            kind => {
                let kind: KernelKind = kind.parse()?;
                let (Some(a), Some(b)) = (k.pmin, k.pmax) else {
                    return Err(Error::Config(format!(
                        "kernel `{}` needs `pmin` and `pmax`",
                        k.name
                    )));
                };
                Ok(KernelSource::Strings(KernelSpec::new(kind, a, b)?))
            }
        }
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        self.tkc()?;
        eval::chi2_critical(self.alpha)?;
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        let exists = |p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(Error::Config(format!("missing file {}", p.display())))
            }
        };
        match self.mode {
            Mode::MultiSource | Mode::SingleSource => {
                if self.domains.len() < 2 {
                    return Err(Error::Config(
                        "cross-domain modes need at least two domains".into(),
                    ));
                }
                if self.split.is_some() {
                    return Err(Error::Config("`split` is only used in split mode".into()));
                }
                let mut names = std::collections::HashSet::new();
                for d in &self.domains {
                    if !names.insert(&d.name) {
                        return Err(Error::Config(format!("duplicate domain `{}`", d.name)));
                    }
                    exists(&d.path)?;
                }
            }
            Mode::Split => {
                let s = self
                    .split
                    .as_ref()
                    .ok_or_else(|| Error::Config("split mode needs a [split] table".into()))?;
                if !self.domains.is_empty() {
                    return Err(Error::Config(
                        "split mode takes no [[domain]] entries".into(),
                    ));
                }
                exists(&s.train)?;
                exists(&s.test)?;
                if let Some(g) = &s.gold {
                    exists(g)?;
                }
            }
        }
        if self.kernels.is_empty() || self.methods.is_empty() {
            return Err(Error::Config(
                "need at least one kernel and one method".into(),
            ));
        }
        let mut kernel_names = std::collections::HashSet::new();
        for k in &self.kernels {
            if !kernel_names.insert(k.name.as_str()) {
                return Err(Error::Config(format!("duplicate kernel `{}`", k.name)));
            }
            match self.kernel_source(k)? {
                KernelSource::Precomputed(p) => {
                    if self.mode != Mode::Split {
                        return Err(Error::Config(format!(
                            "precomputed kernel `{}` is only allowed in split mode",
                            k.name
                        )));
                    }
                    exists(&p)?;
                }
                KernelSource::Dense { features, gamma } => {
                    if !(gamma > 0.0 && gamma.is_finite()) {
                        return Err(Error::Config(format!(
                            "kernel `{}`: gamma must be positive",
                            k.name
                        )));
                    }
                    exists(&features)?;
                }
                KernelSource::Strings(_) => {}
            }
        }
        let mut method_names = std::collections::HashSet::new();
        for m in &self.methods {
            if !method_names.insert(m.name.as_str()) {
                return Err(Error::Config(format!("duplicate method `{}`", m.name)));
            }
            if m.kernels.is_empty() {
                return Err(Error::Config(format!("method `{}` uses no kernel", m.name)));
            }
            if let Some(k) = m
                .kernels
                .iter()
                .find(|k| !kernel_names.contains(k.as_str()))
            {
                return Err(Error::Config(format!(
                    "method `{}` uses unknown kernel `{k}`",
                    m.name
                )));
            }
        }
        if self.baseline == "best" {
            if !self
                .methods
                .iter()
                .any(|m| m.pipeline == Pipeline::Baseline)
            {
                return Err(Error::Config(
                    "baseline `best` needs a baseline-pipeline method".into(),
                ));
            }
        } else if !method_names.contains(self.baseline.as_str()) {
            return Err(Error::Config(format!(
                "unknown baseline method `{}`",
                self.baseline
            )));
        }
        Ok(())
    }
}

/// One (training set, test set) pair.
struct Cell {
    name: String,
    sources: Vec<String>,
    target: String,
    train: Corpus,
    /// Test corpus with labels removed.
    test: Corpus,
    gold: Vec<String>,
}

fn cell_name(sources: &[String], target: &str) -> String {
    let sep = if sources.iter().all(|s| s.chars().count() == 1) {
        ""
    } else {
        "+"
    };
    format!("{}→{target}", sources.join(sep))
}

fn build_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let strip =
        |c: &Corpus| -> Result<(Corpus, Vec<String>)> { Ok((c.without_labels(), c.labels()?)) };
    match cfg.mode {
        Mode::Split => {
            let s = cfg.split.as_ref().expect("validated");
            let train = Corpus::load(&s.train)?;
            train.labels()?;
            let raw_test = Corpus::load(&s.test)?;
            let (test, gold) = match &s.gold {
                Some(g) => {
                    let gold_corpus = Corpus::load(g)?;
                    (
                        raw_test.without_labels(),
                        eval::gold_for(raw_test.ids(), &gold_corpus)?,
                    )
                }
                None => strip(&raw_test)?,
            };
            let target = s
                .test
                .file_stem()
                .map_or_else(|| "test".to_string(), |n| n.to_string_lossy().into_owned());
            let source = s
                .train
                .file_stem()
                .map_or_else(|| "train".to_string(), |n| n.to_string_lossy().into_owned());
            Ok(vec![Cell {
                name: format!("{source}→{target}"),
                sources: vec![source],
                target,
                train,
                test,
                gold,
            }])
        }
        Mode::MultiSource | Mode::SingleSource => {
            let corpora: Vec<Corpus> = cfg
                .domains
                .iter()
                .map(|d| Corpus::load(&d.path))
                .collect::<Result<_>>()?;
            for (d, c) in cfg.domains.iter().zip(&corpora) {
                c.labels()
                    .map_err(|e| Error::Validation(format!("domain `{}`: {e}", d.name)))?;
            }
            let mut cells = Vec::new();
            for (t, target) in cfg.domains.iter().enumerate() {
                let source_sets: Vec<Vec<usize>> = match cfg.mode {
                    Mode::MultiSource => vec![(0..corpora.len()).filter(|&s| s != t).collect()],
                    _ => (0..corpora.len())
                        .filter(|&s| s != t)
                        .map(|s| vec![s])
                        .collect(),
                };
                for set in source_sets {
                    let sources: Vec<String> =
                        set.iter().map(|&s| cfg.domains[s].name.clone()).collect();
                    let train = Corpus::concat(set.iter().map(|&s| &corpora[s]))?;
                    let (test, gold) = strip(&corpora[t])?;
                    cells.push(Cell {
                        name: cell_name(&sources, &target.name),
                        sources,
                        target: target.name.clone(),
                        train,
                        test,
                        gold,
                    });
                }
            }
            Ok(cells)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub pipeline: Pipeline,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// McNemar against the cell's baseline (absent for the baseline itself).
    pub vs_baseline: Option<McNemarResult>,
    pub significantly_better: bool,
    /// Share of adopted pseudo-labels that were wrong (self-training methods).
    pub pseudo_label_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub name: String,
    pub sources: Vec<String>,
    pub target: String,
    pub m: usize,
    pub n: usize,
    pub baseline: String,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub r: i64,
    pub lambda: f64,
    pub sigma2: f64,
    pub alpha: f64,
    pub renormalize: bool,
    pub baseline: String,
    pub text: TextOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub settings: Settings,
    pub methods: Vec<String>,
    pub cells: Vec<CellReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Methods as rows, cells as columns, accuracy in percent; `*` marks a
    /// significant improvement over the cell's baseline.
    pub fn to_text(&self) -> String {
        let mut cols = vec!["Method".to_string()];
        cols.extend(self.cells.iter().map(|c| c.name.clone()));
        let mut rows = vec![cols];
        for method in &self.methods {
            let mut row = vec![method.clone()];
            for cell in &self.cells {
                let r = cell
                    .results
                    .iter()
                    .find(|r| &r.method == method)
                    .expect("every method runs in every cell");
                let star = if r.significantly_better { "*" } else { "" };
                row.push(format!("{:.1}{star}", 100.0 * r.accuracy));
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, &w))| {
                    let pad = w - s.chars().count();
                    if c == 0 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        let _ = writeln!(
            out,
            "\n* significantly better than the baseline (McNemar, alpha = {})",
            self.settings.alpha
        );
        for c in &self.cells {
            let _ = writeln!(out, "  {}: baseline {}", c.name, c.baseline);
        }
        out
    }
}

/// Kernel matrices of one cell, derived lazily and cached.
struct KernelCache<'a> {
    cfg: &'a ExperimentConfig,
    cell: &'a Cell,
    partition: Partition,
    exec: Execution,
    features: &'a HashMap<PathBuf, HashMap<String, Vec<f64>>>,
    raw: HashMap<String, KernelMatrix>,
    normalized: HashMap<String, KernelMatrix>,
    transductive: HashMap<String, KernelMatrix>,
}

impl KernelCache<'_> {
    fn raw(&mut self, name: &str) -> Result<&KernelMatrix> {
        if !self.raw.contains_key(name) {
            let kc = self
                .cfg
                .kernels
                .iter()
                .find(|k| k.name == name)
                .expect("validated");
            let k = match self.cfg.kernel_source(kc)? {
                KernelSource::Strings(spec) => gram_matrix(
                    &self.partition,
                    &[&self.cell.train, &self.cell.test],
                    spec,
                    &self.cfg.text_options(),
                    self.exec,
                )?,
                KernelSource::Dense { features, gamma } => {
                    let feats = align_features(&self.partition, &self.features[&features])?;
                    rbf_dense_kernel(
                        &feats,
                        gamma,
                        self.partition.m(),
                        self.partition.n(),
                        self.exec,
                    )?
                }
                KernelSource::Precomputed(path) => {
                    let k = KernelMatrix::load(&path)?;
                    k.check_partition(&self.partition)
                        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
                    if k.stage() != Stage::Raw {
                        return Err(Error::Validation(format!(
                            "{}: precomputed kernels must be raw, got {}",
                            path.display(),
                            k.stage()
                        )));
                    }
                    k
                }
            };
            log::info!(
                "{}: kernel {name} ({}x{})",
                self.cell.name,
                k.dim(),
                k.dim()
            );
            self.raw.insert(name.to_string(), k);
        }
        Ok(&self.raw[name])
    }

    fn normalized(&mut self, name: &str) -> Result<KernelMatrix> {
        if !self.normalized.contains_key(name) {
            let k = transforms::normalize(self.raw(name)?)?;
            self.normalized.insert(name.to_string(), k);
        }
        Ok(self.normalized[name].clone())
    }

    fn transductive(&mut self, name: &str) -> Result<KernelMatrix> {
        if !self.transductive.contains_key(name) {
            let pipeline = TransductivePipeline {
                sigma2: self.cfg.sigma2,
                renormalize: self.cfg.renormalize,
            };
            let exec = self.exec;
            let k = pipeline.run(self.raw(name)?, exec)?;
            self.transductive.insert(name.to_string(), k);
        }
        Ok(self.transductive[name].clone())
    }

    fn combined(&mut self, method: &MethodConfig) -> Result<KernelMatrix> {
        let parts = method
            .kernels
            .iter()
            .map(|k| match method.pipeline {
                Pipeline::Baseline => self.normalized(k),
                Pipeline::Transductive | Pipeline::Tkc => self.transductive(k),
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.len() == 1 {
            Ok(parts.into_iter().next().unwrap())
        } else {
            transforms::sum_kernels(&parts)
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    features: &HashMap<PathBuf, HashMap<String, Vec<f64>>>,
    exec: Execution,
) -> Result<CellReport> {
    let partition = Partition::new(&cell.train, &cell.test)?;
    let labels = cell.train.labels()?;
    let tkc = cfg.tkc()?;
    let mut cache = KernelCache {
        cfg,
        cell,
        partition: partition.clone(),
        exec,
        features,
        raw: HashMap::new(),
        normalized: HashMap::new(),
        transductive: HashMap::new(),
    };
    let gold_by_id: HashMap<String, String> = partition
        .test_ids()
        .iter()
        .cloned()
        .zip(cell.gold.iter().cloned())
        .collect();

    let mut evals: Vec<(EvalResult, Option<f64>)> = Vec::new();
    for method in &cfg.methods {
        let k = cache.combined(method)?;
        let (preds, pseudo_err): (PredictionSet, Option<f64>) = match method.pipeline {
            Pipeline::Baseline | Pipeline::Transductive => {
                let model = KrrModel::fit(&k, &partition.train_indices(), &labels, &tkc.krr, exec)?;
                (model.predict(&k, &partition.test_indices(), exec)?, None)
            }
            Pipeline::Tkc => {
                let (preds, trace) = tkc_run(&k, &partition, &labels, &tkc, exec)?;
                (preds, eval::pseudo_label_error_rate(&trace, &gold_by_id)?)
            }
        };
        log::info!("{}: {} done", cell.name, method.name);
        evals.push((eval::accuracy(&preds.labels(), &cell.gold)?, pseudo_err));
    }

    let baseline = if cfg.baseline == "best" {
        let mut best: Option<usize> = None;
        for (i, m) in cfg.methods.iter().enumerate() {
            if m.pipeline == Pipeline::Baseline
                && best.is_none_or(|b| evals[i].0.accuracy > evals[b].0.accuracy)
            {
                best = Some(i);
            }
        }
        best.expect("validated")
    } else {
        cfg.methods
            .iter()
            .position(|m| m.name == cfg.baseline)
            .expect("validated")
    };

    let mut results = Vec::with_capacity(cfg.methods.len());
    for (i, (method, (ev, pseudo))) in cfg.methods.iter().zip(&evals).enumerate() {
        let vs = if i == baseline {
            None
        } else {
            // A = baseline, B = method: c counts samples only the method gets right.
            Some(eval::mcnemar(&evals[baseline].0, ev, cfg.alpha)?)
        };
        results.push(MethodResult {
            method: method.name.clone(),
            pipeline: method.pipeline,
            accuracy: ev.accuracy,
            correct: ev.correct,
            total: ev.total,
            significantly_better: vs.is_some_and(|v| v.significant && v.c > v.b),
            vs_baseline: vs,
            pseudo_label_error: *pseudo,
        });
    }
    Ok(CellReport {
        name: cell.name.clone(),
        sources: cell.sources.clone(),
        target: cell.target.clone(),
        m: partition.m(),
        n: partition.n(),
        baseline: cfg.methods[baseline].name.clone(),
        results,
    })
}

/// Runs every cell of a validated config. Cells run concurrently; the
/// report keeps config order.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<Report> {
    cfg.validate()?;
    let mut features = HashMap::new();
    for k in &cfg.kernels {
        if let KernelSource::Dense { features: path, .. } = cfg.kernel_source(k)? {
            if let Entry::Vacant(slot) = features.entry(path) {
                let f = load_features(slot.key())?;
                slot.insert(f);
            }
        }
    }
    let cells = build_cells(cfg)?;
    let reports = exec::map_indices(exec, cells.len(), |i| {
        run_cell(cfg, &cells[i], &features, exec)
    });
    let cells = reports.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Report {
        mode: cfg.mode,
        settings: Settings {
            r: cfg.r,
            lambda: cfg.lambda,
            sigma2: cfg.sigma2,
            alpha: cfg.alpha,
            renormalize: cfg.renormalize,
            baseline: cfg.baseline.clone(),
            text: cfg.text_options(),
        },
        methods: cfg.methods.iter().map(|m| m.name.clone()).collect(),
        cells,
    })
}

/// Runs an experiment and writes the configured outputs.
pub fn run_and_write(cfg: &ExperimentConfig, exec: Execution) -> Result<Report> {
    let report = run_experiment(cfg, exec)?;
    if let Some(p) = &cfg.output_json {
        std::fs::write(p, report.to_json()).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &cfg.output_text {
        std::fs::write(p, report.to_text()).map_err(|e| Error::io(p, e))?;
    }
    Ok(report)
}

/// Per-cell accuracy by method name, handy for tests and summaries.
pub fn accuracy_table(report: &Report) -> BTreeMap<(String, String), f64> {
    report
        .cells
        .iter()
        .flat_map(|c| {
            c.results
                .iter()
                .map(move |r| ((c.name.clone(), r.method.clone()), r.accuracy))
        })
        .collect()
}
