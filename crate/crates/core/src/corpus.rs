//! Text corpora, the joint train/test ordering and label encoding.
//!
//! Corpus files are TSV, one document per line: `id<TAB>label<TAB>text`.
//! The label `?` marks an unlabeled document. Text is kept as raw bytes
//! and may itself contain tabs.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// Label marker for unlabeled documents.
pub const UNLABELED: &str = "?";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: Vec<u8>,
    pub label: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<Vec<u8>>, label: Option<&str>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_owned),
        }
    }
}

/// Documents in file order, with unique non-empty ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.id.is_empty() {
                return Err(Error::Validation(format!(
                    "document {} has an empty id",
                    i + 1
                )));
            }
            if index.insert(d.id.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate document id `{}`",
                    d.id
                )));
            }
        }
        Ok(Corpus { docs, index })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes, path)
    }

    /// Parses TSV bytes; `origin` is only used in error messages.
    pub fn parse(bytes: &[u8], origin: &Path) -> Result<Self> {
        let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
        let mut docs = Vec::new();
        if !body.is_empty() {
            for (lineno, line) in body.split(|&b| b == b'\n').enumerate() {
                docs.push(parse_line(line).map_err(|msg| Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    msg,
                })?);
            }
        }
        Corpus::new(docs)
    }

    pub fn to_tsv(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for d in &self.docs {
            out.extend_from_slice(d.id.as_bytes());
            out.push(b'\t');
            out.extend_from_slice(d.label.as_deref().unwrap_or(UNLABELED).as_bytes());
            out.push(b'\t');
            out.extend_from_slice(&d.text);
            out.push(b'\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }

    /// Labels of every document; errors on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<String>> {
        self.docs
            .iter()
            .map(|d| {
                d.label
                    .clone()
                    .ok_or_else(|| Error::Validation(format!("document `{}` has no label", d.id)))
            })
            .collect()
    }

    /// Copy with every label removed.
    pub fn without_labels(&self) -> Corpus {
        let docs = self
            .docs
            .iter()
            .map(|d| Document {
                label: None,
                ..d.clone()
            })
            .collect();
        Corpus {
            docs,
            index: self.index.clone(),
        }
    }

    /// Concatenation of several corpora (ids must stay unique).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Corpus>) -> Result<Corpus> {
        Corpus::new(
            parts
                .into_iter()
                .flat_map(|c| c.docs.iter().cloned())
                .collect(),
        )
    }
}

fn parse_line(line: &[u8]) -> std::result::Result<Document, String> {
    let mut fields = line.splitn(3, |&b| b == b'\t');
    let id = fields.next().unwrap_or_default();
    let (Some(label), Some(text)) = (fields.next(), fields.next()) else {
        return Err("expected `id<TAB>label<TAB>text`".into());
    };
    let id = std::str::from_utf8(id).map_err(|_| "id is not valid UTF-8".to_string())?;
    let label = std::str::from_utf8(label).map_err(|_| "label is not valid UTF-8".to_string())?;
    if id.is_empty() {
        return Err("empty id".into());
    }
    if label.is_empty() {
        return Err("empty label (use `?` for unlabeled)".into());
    }
    Ok(Document {
        id: id.to_owned(),
        text: text.to_vec(),
        label: (label != UNLABELED).then(|| label.to_owned()),
    })
}

/// Joint sample order: the training block followed by the test block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    m: usize,
    n: usize,
    order: Vec<String>,
}

impl Partition {
    pub fn new(train: &Corpus, test: &Corpus) -> Result<Self> {
        Self::from_ids(
            train.ids().map(str::to_owned).collect(),
            test.ids().map(str::to_owned).collect(),
        )
    }

    pub fn from_ids(train: Vec<String>, test: Vec<String>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(train.len() + test.len());
        for (i, id) in train.iter().chain(&test).enumerate() {
            if let Some(prev) = seen.insert(id.as_str(), i) {
                let what = if prev < train.len() && i >= train.len() {
                    "appears in both train and test"
                } else {
                    "is duplicated"
                };
                return Err(Error::Validation(format!("id `{id}` {what}")));
            }
        }
        let m = train.len();
        let n = test.len();
        let mut order = train;
        order.extend(test);
        Ok(Partition { m, n, order })
    }

    /// Number of training samples.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of test samples.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m + self.n
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn train_ids(&self) -> &[String] {
        &self.order[..self.m]
    }

    pub fn test_ids(&self) -> &[String] {
        &self.order[self.m..]
    }

    pub fn is_train(&self, index: usize) -> bool {
        index < self.m
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.m).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (self.m..self.m + self.n).collect()
    }
}

/// Sorted class list with one-vs-rest ±1 encoding.
///
/// Two classes share a single target vector: `+1` for the first class,
/// `-1` for the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCodec {
    classes: Vec<String>,
}

impl LabelCodec {
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let set: BTreeSet<&str> = labels.iter().map(AsRef::as_ref).collect();
        if set.is_empty() {
            return Err(Error::Validation("no labels to build classes from".into()));
        }
        Ok(LabelCodec {
            classes: set.into_iter().map(str::to_owned).collect(),
        })
    }

    pub fn from_classes(classes: Vec<String>) -> Result<Self> {
        let sorted = classes.windows(2).all(|w| w[0] < w[1]);
        if classes.is_empty() || !sorted {
            return Err(Error::Validation(
                "class list must be non-empty, sorted and distinct".into(),
            ));
        }
        Ok(LabelCodec { classes })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn is_binary(&self) -> bool {
        self.classes.len() == 2
    }

    /// Number of score columns: 1 for binary problems, else one per class.
    pub fn outputs(&self) -> usize {
        if self.is_binary() {
            1
        } else {
            self.classes.len()
        }
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
    }

    /// One ±1 target vector per output.
    pub fn targets<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<Vec<f64>>> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.class_index(l.as_ref())
                    .ok_or_else(|| Error::Validation(format!("unknown label `{}`", l.as_ref())))
            })
            .collect::<Result<_>>()?;
        Ok((0..self.outputs())
            .map(|c| {
                idx.iter()
                    .map(|&k| if k == c { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect())
    }

    /// Class index chosen for a score vector (argmax; ties go to the lower index).
    pub fn decide(&self, scores: &[f64]) -> usize {
        if self.is_binary() {
            return if scores[0] >= 0.0 { 0 } else { 1 };
        }
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Corpus> {
        Corpus::parse(s.as_bytes(), Path::new("mem.tsv"))
    }

    #[test]
    fn loads_labeled_docs() {
        let c = parse("a\tpos\tgood book\nb\tneg\tbad\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.docs()[0], Document::new("a", "good book", Some("pos")));
        assert_eq!(c.get("b").unwrap().label.as_deref(), Some("neg"));
    }

    #[test]
    fn question_mark_is_unlabeled() {
        let c = parse("a\t?\tunknown text").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.docs()[0].label, None);
        assert!(c.labels().is_err());
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = parse("a\tpos\tx\na\tneg\ty\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("a\tpos\tx\nbroken line\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse("a\tpos\tx\n\n").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn text_keeps_tabs_and_may_be_empty() {
        let c = parse("a\tpos\tx\ty\nb\tneg\t\n").unwrap();
        assert_eq!(c.docs()[0].text, b"x\ty");
        assert!(c.docs()[1].text.is_empty());
        assert_eq!(c.to_tsv(), b"a\tpos\tx\ty\nb\tneg\t\n");
    }

    #[test]
    fn partition_counts() {
        let train = parse("a\tx\t1\nb\tx\t2\nc\ty\t3\n").unwrap();
        let test = parse("d\t?\t4\ne\t?\t5\n").unwrap();
        let p = Partition::new(&train, &test).unwrap();
        assert_eq!((p.m(), p.n(), p.len()), (3, 2, 5));
        assert_eq!(p.order(), ["a", "b", "c", "d", "e"]);
        assert_eq!(p.test_ids(), ["d", "e"]);
        assert!(p.is_train(2) && !p.is_train(3));
    }

    #[test]
    fn partition_rejects_shared_id() {
        let train = parse("a\tx\t1\n").unwrap();
        let test = parse("a\t?\t1\n").unwrap();
        let err = Partition::new(&train, &test).unwrap_err();
        assert!(err.to_string().contains("both train and test"));
    }

    #[test]
    fn empty_test_is_legal() {
        let train = parse("a\tx\t1\n").unwrap();
        let p = Partition::new(&train, &Corpus::default()).unwrap();
        assert_eq!((p.m(), p.n()), (1, 0));
    }

    #[test]
    fn codec_binary_and_multiclass() {
        let b = LabelCodec::from_labels(&["pos", "neg", "pos"]).unwrap();
        assert_eq!(b.classes(), ["neg", "pos"]);
        assert_eq!(b.targets(&["pos", "neg"]).unwrap(), vec![vec![-1.0, 1.0]]);
        assert_eq!(b.decide(&[0.0]), 0);
        assert_eq!(b.decide(&[-0.1]), 1);

        let m = LabelCodec::from_labels(&["EGY", "GLF", "LAV", "MSA", "NOR"]).unwrap();
        assert_eq!(m.outputs(), 5);
        let t = m.targets(&["LAV"]).unwrap();
        assert_eq!(
            t.iter().map(|v| v[0]).collect::<Vec<_>>(),
            [-1.0, -1.0, 1.0, -1.0, -1.0]
        );
        assert_eq!(m.decide(&[0.2, 0.9, 0.9, -0.1, 0.0]), 1);
        assert!(m.targets(&["XXX"]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn doc() -> impl Strategy<Value = (String, Option<String>, Vec<u8>)> {
            (
                "[a-z0-9_]{1,8}",
                prop::option::of("[a-zA-Z]{1,5}"),
                prop::collection::vec(
                    any::<u8>().prop_filter("no newline", |b| *b != b'\n'),
                    0..40,
                ),
            )
        }

        proptest! {
            #[test]
            fn tsv_round_trip(docs in prop::collection::vec(doc(), 0..12)) {
                let mut seen = std::collections::HashSet::new();
                let docs: Vec<Document> = docs
                    .into_iter()
                    .filter(|(id, _, _)| seen.insert(id.clone()))
                    .map(|(id, label, text)| Document { id, text, label })
                    .collect();
                let c = Corpus::new(docs).unwrap();
                let bytes = c.to_tsv();
                let back = Corpus::parse(&bytes, Path::new("rt")).unwrap();
                prop_assert_eq!(back.to_tsv(), bytes);
                prop_assert_eq!(back.docs(), c.docs());
            }

            #[test]
            fn partition_indices_round_trip(m in 0usize..20, n in 0usize..20) {
                let train: Vec<String> = (0..m).map(|i| format!("tr{i}")).collect();
                let test: Vec<String> = (0..n).map(|i| format!("te{i}")).collect();
                let p = Partition::from_ids(train.clone(), test.clone()).unwrap();
                for (i, id) in p.order().iter().enumerate() {
                    if p.is_train(i) {
                        prop_assert_eq!(id, &train[i]);
                    } else {
                        prop_assert_eq!(id, &test[i - m]);
                    }
                }
            }
        }
    }
}
