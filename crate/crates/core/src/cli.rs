//! Command-line interface.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::corpus::{Corpus, Partition};
use crate::error::{Error, Result};
use crate::eval;
use crate::exec::Execution;
use crate::experiment::{self, ExperimentConfig};
use crate::krr::{KrrConfig, KrrModel, DEFAULT_LAMBDA};
use crate::string_kernels::{gram_matrix, KernelKind, KernelSpec, TextOptions};
use crate::synth::{self, SynthConfig};
use crate::transductive::{tkc_run, TkcConfig, TkcTrace, DEFAULT_ADOPTED};
use crate::transforms::{self, KernelMatrix, TransductivePipeline, DEFAULT_SIGMA2};

#[derive(Debug, Parser)]
#[command(
    name = "tskern",
    version,
    about = "Transductive string kernels for text classification"
)]
pub struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a raw kernel matrix over train+test and save it as KMAT.
    Kernel(KernelArgs),
    /// Apply normalize / rbf / transductive / sum to KMAT files.
    Transform(TransformArgs),
    /// Fit kernel ridge regression on the training block of a kernel.
    Train(TrainArgs),
    /// Score the test block of a kernel with a trained model.
    Predict(PredictArgs),
    /// Run the two-iteration self-training classifier.
    Tkc(TkcArgs),
    /// Accuracy of a prediction file against gold labels.
    Evaluate(EvaluateArgs),
    /// Paired McNemar test between two prediction files.
    Mcnemar(McnemarArgs),
    /// Run a cross-domain experiment described by a TOML config.
    Experiment(ExperimentArgs),
    /// Generate a synthetic two-domain corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Spectrum,
    Presence,
    Intersection,
}

impl From<KindArg> for KernelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Spectrum => KernelKind::Spectrum,
            KindArg::Presence => KernelKind::Presence,
            KindArg::Intersection => KernelKind::Intersection,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Labeled training corpus (TSV).
    #[arg(long)]
    pub train: PathBuf,
    /// Test corpus (TSV); its labels are never read.
    #[arg(long)]
    pub test: PathBuf,
}

impl CorpusArgs {
    fn load(&self) -> Result<(Corpus, Corpus, Partition)> {
        let train = Corpus::load(&self.train)?;
        let test = Corpus::load(&self.test)?.without_labels();
        let partition = Partition::new(&train, &test)?;
        Ok((train, test, partition))
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "intersection")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 5)]
    pub pmin: usize,
    #[arg(long, default_value_t = 8)]
    pub pmax: usize,
    #[arg(long)]
    pub lowercase: bool,
    /// Count n-grams of Unicode characters instead of bytes.
    #[arg(long)]
    pub unicode: bool,
    /// Dense feature file (`id<TAB>v1,v2,...`): build an RBF kernel instead.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the matrix as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformOp {
    Normalize,
    Rbf,
    Transductive,
    /// normalize, rbf and transductive in one go.
    Pipeline,
    Sum,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub op: TransformOp,
    /// Input KMAT file(s); `sum` takes several.
    #[arg(short, long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SIGMA2)]
    pub sigma2: f64,
    /// Normalize K̈ after the product (pipeline only).
    #[arg(long)]
    pub renormalize: bool,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    /// Labeled training corpus, in the kernel's training order.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TkcArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = DEFAULT_ADOPTED as i64, allow_negative_numbers = true)]
    pub r: i64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Write the self-training trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labeled corpus holding the gold test labels.
    #[arg(long)]
    pub gold: PathBuf,
    /// Self-training trace; reports the pseudo-label error rate.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McnemarArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub n_train: usize,
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    /// Output directory for train.tsv, test.tsv (unlabeled) and gold.tsv.
    #[arg(short, long)]
    pub output: PathBuf,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn save_kernel(k: &KernelMatrix, out: &Path, csv: Option<&Path>) -> Result<()> {
    k.save(out)?;
    if let Some(p) = csv {
        let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        k.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn gold_map(path: &Path) -> Result<HashMap<String, String>> {
    let c = Corpus::load(path)?;
    let labels = c.labels()?;
    Ok(c.ids().map(str::to_owned).zip(labels).collect())
}

pub fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Kernel(a) => {
            let (train, test, partition) = a.corpus.load()?;
            let k = match &a.features {
                Some(path) => {
                    let feats =
                        transforms::align_features(&partition, &transforms::load_features(path)?)?;
                    transforms::rbf_dense_kernel(
                        &feats,
                        a.gamma,
                        partition.m(),
                        partition.n(),
                        exec,
                    )?
                }
                None => {
                    let spec = KernelSpec::new(a.kind.into(), a.pmin, a.pmax)?;
                    let opts = TextOptions {
                        unicode: a.unicode,
                        lowercase: a.lowercase,
                    };
                    gram_matrix(&partition, &[&train, &test], spec, &opts, exec)?
                }
            };
            save_kernel(&k, &a.output, a.csv.as_deref())
        }
        Command::Transform(a) => {
            let ks = a
                .inputs
                .iter()
                .map(KernelMatrix::load)
                .collect::<Result<Vec<_>>>()?;
            let single = || -> Result<&KernelMatrix> {
                match ks.as_slice() {
                    [k] => Ok(k),
                    _ => Err(Error::Config(format!("{:?} takes exactly one input", a.op))),
                }
            };
            let out = match a.op {
                TransformOp::Normalize => transforms::normalize(single()?)?,
                TransformOp::Rbf => transforms::rbf_transform(single()?, a.sigma2)?,
                TransformOp::Transductive => transforms::transductive_kernel(single()?, exec)?,
                TransformOp::Pipeline => TransductivePipeline {
                    sigma2: a.sigma2,
                    renormalize: a.renormalize,
                }
                .run(single()?, exec)?,
                TransformOp::Sum => transforms::sum_kernels(&ks)?,
            };
            save_kernel(&out, &a.output, a.csv.as_deref())
        }
        Command::Train(a) => {
            let k = KernelMatrix::load(&a.kernel)?;
            let train = Corpus::load(&a.train)?;
            if train.len() != k.m() {
                return Err(Error::Validation(format!(
                    "{} training documents for a kernel with m={}",
                    train.len(),
                    k.m()
                )));
            }
            let labels = train.labels()?;
            let idx: Vec<usize> = (0..k.m()).collect();
            let model = KrrModel::fit(&k, &idx, &labels, &KrrConfig::new(a.lambda)?, exec)?;
            model.save(&a.output)
        }
        Command::Predict(a) => {
            let model = KrrModel::load(&a.model)?;
            let k = KernelMatrix::load(&a.kernel)?;
            let (_, _, partition) = a.corpus.load()?;
            k.check_partition(&partition)?;
            let preds = model.predict(&k, &partition.test_indices(), exec)?;
            write(&a.output, preds.to_tsv(&partition)?)
        }
        Command::Tkc(a) => {
            let k = KernelMatrix::load(&a.kernel)?;
            let (train, _, partition) = a.corpus.load()?;
            let config = TkcConfig::new(a.r, KrrConfig::new(a.lambda)?)?;
            let (preds, trace) = tkc_run(&k, &partition, &train.labels()?, &config, exec)?;
            write(&a.output, preds.to_tsv(&partition)?)?;
            if let Some(p) = &a.trace {
                write(p, trace.to_json())?;
            }
            Ok(())
        }
        Command::Evaluate(a) => {
            let rows = eval::read_predictions(&a.predictions)?;
            let gold = Corpus::load(&a.gold)?;
            let gold_labels = eval::gold_for(rows.iter().map(|r| r.id.as_str()), &gold)?;
            let predicted: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
            let result = eval::accuracy(&predicted, &gold_labels)?;
            let mut out = json!({
                "accuracy": result.accuracy,
                "correct": result.correct,
                "total": result.total,
            });
            if let Some(p) = &a.trace {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let trace: TkcTrace = serde_json::from_str(&text)
                    .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
                out["pseudo_label_error"] =
                    json!(eval::pseudo_label_error_rate(&trace, &gold_map(&a.gold)?)?);
                out["adopted"] = json!(trace.adopted.len());
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            Ok(())
        }
        Command::Mcnemar(a) => {
            let ra = eval::read_predictions(&a.a)?;
            let rb = eval::read_predictions(&a.b)?;
            let ids_a: Vec<&str> = ra.iter().map(|r| r.id.as_str()).collect();
            let ids_b: Vec<&str> = rb.iter().map(|r| r.id.as_str()).collect();
            if ids_a != ids_b {
                return Err(Error::Validation(
                    "prediction files list different samples".into(),
                ));
            }
            let gold = eval::gold_for(ids_a.iter().copied(), &Corpus::load(&a.gold)?)?;
            let ea = eval::accuracy(
                &ra.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
                &gold,
            )?;
            let eb = eval::accuracy(
                &rb.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
                &gold,
            )?;
            let m = eval::mcnemar(&ea, &eb, a.alpha)?;
            let out = json!({
                "accuracy_a": ea.accuracy,
                "accuracy_b": eb.accuracy,
                "b": m.b,
                "c": m.c,
                "statistic": m.statistic,
                "alpha": m.alpha,
                "significant": m.significant,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            Ok(())
        }
        Command::Experiment(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let report = experiment::run_and_write(&cfg, exec)?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Synth(a) => {
            let task = synth::generate(&SynthConfig {
                seed: a.seed,
                n_train: a.n_train,
                n_test: a.n_test,
                ..Default::default()
            })?;
            std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
            task.train.save(a.output.join("train.tsv"))?;
            task.test_unlabeled().save(a.output.join("test.tsv"))?;
            task.test.save(a.output.join("gold.tsv"))
        }
    }
}
