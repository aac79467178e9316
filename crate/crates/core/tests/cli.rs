use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tskern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tskern"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tskern(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    tskern(args).status.code().expect("exit code")
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn synth(d: &Dir) {
    ok(&[
        "synth",
        "--seed",
        "3",
        "--n-train",
        "80",
        "--n-test",
        "60",
        "-o",
        &d.p(""),
    ]);
}

#[test]
fn end_to_end_pipeline() {
    let d = Dir::new();
    synth(&d);
    let (train, test, gold) = (d.p("train.tsv"), d.p("test.tsv"), d.p("gold.tsv"));
    for kind in ["presence", "intersection"] {
        ok(&[
            "kernel",
            "--train",
            &train,
            "--test",
            &test,
            "--kind",
            kind,
            "--pmin",
            "4",
            "--pmax",
            "6",
            "-o",
            &d.p(&format!("{kind}.kmat")),
        ]);
    }
    ok(&[
        "transform",
        "--op",
        "normalize",
        "-i",
        &d.p("presence.kmat"),
        "-o",
        &d.p("norm.kmat"),
        "--csv",
        &d.p("norm.csv"),
    ]);
    ok(&[
        "transform",
        "--op",
        "rbf",
        "-i",
        &d.p("norm.kmat"),
        "-o",
        &d.p("rbf.kmat"),
    ]);
    ok(&[
        "transform",
        "--op",
        "transductive",
        "-i",
        &d.p("rbf.kmat"),
        "-o",
        &d.p("kt.kmat"),
    ]);
    ok(&[
        "transform",
        "--op",
        "pipeline",
        "-i",
        &d.p("presence.kmat"),
        "-o",
        &d.p("kt2.kmat"),
    ]);
    assert_eq!(
        std::fs::read(d.path("kt.kmat")).unwrap(),
        std::fs::read(d.path("kt2.kmat")).unwrap()
    );
    ok(&[
        "transform",
        "--op",
        "pipeline",
        "-i",
        &d.p("intersection.kmat"),
        "-o",
        &d.p("kti.kmat"),
    ]);
    ok(&[
        "transform",
        "--op",
        "sum",
        "-i",
        &d.p("kt.kmat"),
        "-i",
        &d.p("kti.kmat"),
        "-o",
        &d.p("sum.kmat"),
    ]);

    let csv = std::fs::read_to_string(d.path("norm.csv")).unwrap();
    assert_eq!(csv.lines().count(), 140);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 140);

    ok(&[
        "train",
        "--kernel",
        &d.p("norm.kmat"),
        "--train",
        &train,
        "-o",
        &d.p("base.model"),
    ]);
    ok(&[
        "predict",
        "--model",
        &d.p("base.model"),
        "--kernel",
        &d.p("norm.kmat"),
        "--train",
        &train,
        "--test",
        &test,
        "-o",
        &d.p("base.tsv"),
    ]);
    ok(&[
        "tkc",
        "--kernel",
        &d.p("sum.kmat"),
        "--train",
        &train,
        "--test",
        &test,
        "--r",
        "30",
        "-o",
        &d.p("tkc.tsv"),
        "--trace",
        &d.p("trace.json"),
    ]);

    let preds = std::fs::read_to_string(d.path("tkc.tsv")).unwrap();
    assert_eq!(preds.lines().count(), 60);
    assert!(preds.lines().all(|l| l.split('\t').count() == 3));

    let eval: serde_json::Value = serde_json::from_str(&ok(&[
        "evaluate",
        "--predictions",
        &d.p("tkc.tsv"),
        "--gold",
        &gold,
        "--trace",
        &d.p("trace.json"),
    ]))
    .unwrap();
    assert_eq!(eval["total"], 60);
    assert_eq!(eval["adopted"], 30);
    assert!(eval["pseudo_label_error"].as_f64().is_some());

    let m: serde_json::Value = serde_json::from_str(&ok(&[
        "mcnemar",
        "--a",
        &d.p("base.tsv"),
        "--b",
        &d.p("tkc.tsv"),
        "--gold",
        &gold,
    ]))
    .unwrap();
    assert_eq!(m["alpha"], 0.01);
    assert!(m["statistic"].as_f64().unwrap() >= 0.0);

    // The sequential fallback produces the same bytes.
    ok(&[
        "--sequential",
        "tkc",
        "--kernel",
        &d.p("sum.kmat"),
        "--train",
        &train,
        "--test",
        &test,
        "--r",
        "30",
        "-o",
        &d.p("tkc_seq.tsv"),
    ]);
    assert_eq!(
        preds,
        std::fs::read_to_string(d.path("tkc_seq.tsv")).unwrap()
    );
}

#[test]
fn dense_feature_kernel() {
    let d = Dir::new();
    std::fs::write(d.path("train.tsv"), "a\tpos\tx\nb\tneg\ty\n").unwrap();
    std::fs::write(d.path("test.tsv"), "c\t?\tz\n").unwrap();
    std::fs::write(d.path("feat.txt"), "a\t0,0\nb\t1,0\nc\t0,1\n").unwrap();
    ok(&[
        "kernel",
        "--train",
        &d.p("train.tsv"),
        "--test",
        &d.p("test.tsv"),
        "--features",
        &d.p("feat.txt"),
        "--gamma",
        "0.5",
        "-o",
        &d.p("k.kmat"),
        "--csv",
        &d.p("k.csv"),
    ]);
    let csv = std::fs::read_to_string(d.path("k.csv")).unwrap();
    let row0: Vec<f64> = csv
        .lines()
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row0, [1.0, (-0.5f64).exp(), (-0.5f64).exp()]);
}

#[test]
fn experiment_command_prints_table() {
    let d = Dir::new();
    synth(&d);
    let config = "mode = \"split\"\nr = 10\noutput_json = \"out.json\"\n\
         [split]\ntrain = \"train.tsv\"\ntest = \"test.tsv\"\ngold = \"gold.tsv\"\n\
         [[kernel]]\nname = \"I\"\nkind = \"intersection\"\npmin = 4\npmax = 5\n\
         [[method]]\nname = \"I\"\nkernels = [\"I\"]\npipeline = \"baseline\"\n\
         [[method]]\nname = \"I+TKC\"\nkernels = [\"I\"]\npipeline = \"tkc\"\n";
    std::fs::write(d.path("exp.toml"), config).unwrap();
    let out = ok(&["experiment", "--config", &d.p("exp.toml")]);
    assert!(out.contains("train→test") && out.contains("I+TKC"), "{out}");
    assert!(d.path("out.json").is_file());
}

fn write_kmat(path: &Path, values: &[f64], m: usize, n: usize, stage: &str) {
    let mut bytes = format!("KMAT1\ndim={} m={m} n={n} stage={stage}\n", m + n).into_bytes();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn exit_codes() {
    let d = Dir::new();
    synth(&d);
    let (train, test) = (d.p("train.tsv"), d.p("test.tsv"));

    // Configuration and validation errors.
    assert_eq!(
        code(&[
            "kernel",
            "--train",
            &train,
            "--test",
            &test,
            "--pmin",
            "6",
            "--pmax",
            "4",
            "-o",
            &d.p("k.kmat")
        ]),
        2
    );
    ok(&[
        "kernel",
        "--train",
        &train,
        "--test",
        &test,
        "--pmin",
        "3",
        "--pmax",
        "4",
        "-o",
        &d.p("k.kmat"),
    ]);
    assert_eq!(
        code(&[
            "tkc",
            "--kernel",
            &d.p("k.kmat"),
            "--train",
            &train,
            "--test",
            &test,
            "--r",
            "-1",
            "-o",
            &d.p("x.tsv")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--kernel",
            &d.p("k.kmat"),
            "--train",
            &train,
            "--lambda",
            "0",
            "-o",
            &d.p("m")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "transform",
            "--op",
            "rbf",
            "-i",
            &d.p("k.kmat"),
            "-o",
            &d.p("r.kmat")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "kernel",
            "--train",
            &train,
            "--test",
            &train,
            "-o",
            &d.p("k2.kmat")
        ]),
        2
    );
    std::fs::write(d.path("bad.toml"), "mode = \"split\"\nbogus = 1\n").unwrap();
    assert_eq!(code(&["experiment", "--config", &d.p("bad.toml")]), 2);

    // Data format and I/O errors.
    std::fs::write(d.path("broken.tsv"), "a\tpos\n").unwrap();
    assert_eq!(
        code(&[
            "kernel",
            "--train",
            &d.p("broken.tsv"),
            "--test",
            &test,
            "-o",
            &d.p("k3.kmat")
        ]),
        3
    );
    assert_eq!(
        code(&[
            "kernel",
            "--train",
            &d.p("missing.tsv"),
            "--test",
            &test,
            "-o",
            &d.p("k3.kmat")
        ]),
        3
    );
    let mut truncated = std::fs::read(d.path("k.kmat")).unwrap();
    truncated.truncate(truncated.len() - 3);
    std::fs::write(d.path("t.kmat"), truncated).unwrap();
    assert_eq!(
        code(&[
            "transform",
            "--op",
            "normalize",
            "-i",
            &d.p("t.kmat"),
            "-o",
            &d.p("n.kmat")
        ]),
        3
    );

    // Numerical failure: a negative definite training block.
    std::fs::write(d.path("two.tsv"), "a\tpos\tx\nb\tneg\ty\n").unwrap();
    write_kmat(&d.path("neg.kmat"), &[-1.0, 0.0, 0.0, -1.0], 2, 0, "raw");
    assert_eq!(
        code(&[
            "train",
            "--kernel",
            &d.p("neg.kmat"),
            "--train",
            &d.p("two.tsv"),
            "-o",
            &d.p("m")
        ]),
        4
    );
}
