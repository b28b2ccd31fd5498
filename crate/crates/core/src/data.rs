//! Query/document collections: LETOR text ingestion, fold layout and
//! synthetic corpora with a known optimal linear ranker.
//!
//! A LETOR record is one line:
//!
//! ```text
//! <grade> qid:<q> <fid>:<val> <fid>:<val> ... #<comment>
//! ```
//!
//! Feature ids are 1-based. The dense dimension is the largest feature id
//! seen in the input; absent ids read as `0.0`. A `docid=<token>` entry in the
//! comment becomes the document id, otherwise ids are synthesized from the
//! position within the query.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const MAX_GRADE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub features: Vec<f64>,
    pub relevance: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub qid: String,
    pub documents: Vec<Document>,
}

impl Query {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.documents.first().map_or(0, |d| d.features.len())
    }

    pub fn grades(&self) -> Vec<u8> {
        self.documents.iter().map(|d| d.relevance).collect()
    }
}

/// A non-empty collection of queries sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    queries: Vec<Query>,
    dim: usize,
}

impl QuerySet {
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let first = queries
            .first()
            .ok_or_else(|| Error::config("query set must not be empty"))?;
        let dim = first.dim();
        for q in &queries {
            if q.is_empty() {
                return Err(Error::config(format!("query {} has no documents", q.qid)));
            }
            if let Some(doc) = q.documents.iter().find(|d| d.features.len() != dim) {
                return Err(Error::config(format!(
                    "query {} document {} has {} features, expected {}",
                    q.qid,
                    doc.doc_id,
                    doc.features.len(),
                    dim
                )));
            }
            let mut seen = HashSet::new();
            if let Some(doc) = q.documents.iter().find(|d| !seen.insert(d.doc_id.as_str())) {
                return Err(Error::config(format!(
                    "query {} repeats document id {}",
                    q.qid, doc.doc_id
                )));
            }
        }
        Ok(QuerySet { queries, dim })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn into_queries(self) -> Vec<Query> {
        self.queries
    }

    /// Zero-extends every feature vector to `dim` features.
    pub fn pad_to(&mut self, dim: usize) -> Result<()> {
        if dim < self.dim {
            return Err(Error::config(format!(
                "cannot shrink feature dimension from {} to {}",
                self.dim, dim
            )));
        }
        for doc in self.queries.iter_mut().flat_map(|q| q.documents.iter_mut()) {
            doc.features.resize(dim, 0.0);
        }
        self.dim = dim;
        Ok(())
    }

    /// Checks a declared dimension against the one inferred from the data.
    pub fn expect_dim(&self, declared: usize) -> Result<()> {
        if declared != self.dim {
            return Err(Error::config(format!(
                "declared dimension {} does not match inferred dimension {}",
                declared, self.dim
            )));
        }
        Ok(())
    }
}

/// Training stream and held-out evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub train: QuerySet,
    pub test: QuerySet,
}

impl FoldSplit {
    /// Builds a split, zero-padding both sides to a common dimension.
    pub fn new(mut train: QuerySet, mut test: QuerySet) -> Result<Self> {
        let train_ids: HashSet<&str> = train.queries.iter().map(|q| q.qid.as_str()).collect();
        if let Some(q) = test.queries.iter().find(|q| train_ids.contains(q.qid.as_str())) {
            return Err(Error::config(format!(
                "qid {} appears in both train and test",
                q.qid
            )));
        }
        let dim = train.dim.max(test.dim);
        train.pad_to(dim)?;
        test.pad_to(dim)?;
        Ok(FoldSplit { train, test })
    }

    pub fn dim(&self) -> usize {
        self.train.dim
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn comment_doc_id(comment: &str) -> Option<String> {
    let rest = &comment[comment.find("docid")? + "docid".len()..];
    let rest = rest.trim_start().strip_prefix('=')?.trim_start();
    let token = rest.split_whitespace().next()?;
    Some(token.to_string())
}

struct Record {
    qid: String,
    grade: u8,
    features: Vec<(usize, f64)>,
    doc_id: Option<String>,
}

fn parse_record(text: &str, line: usize) -> Result<Option<Record>> {
    let (body, comment) = match text.find('#') {
        Some(pos) => (&text[..pos], Some(&text[pos + 1..])),
        None => (text, None),
    };
    let mut tokens = body.split_whitespace();
    let Some(grade_tok) = tokens.next() else {
        return Ok(None);
    };
    let grade: f64 = grade_tok
        .parse()
        .map_err(|_| parse_error(line, format!("invalid relevance grade {grade_tok:?}")))?;
    if grade.fract() != 0.0 || !(0.0..=MAX_GRADE as f64).contains(&grade) {
        return Err(parse_error(
            line,
            format!("relevance grade {grade_tok} outside 0..={MAX_GRADE}"),
        ));
    }
    let qid_tok = tokens
        .next()
        .ok_or_else(|| parse_error(line, "missing qid"))?;
    let qid = qid_tok
        .strip_prefix("qid:")
        .filter(|q| !q.is_empty())
        .ok_or_else(|| parse_error(line, format!("expected qid:<id>, found {qid_tok:?}")))?;

    let mut features = Vec::new();
    for tok in tokens {
        let (fid, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_error(line, format!("expected <fid>:<value>, found {tok:?}")))?;
        let fid: usize = fid
            .parse()
            .ok()
            .filter(|&f| f >= 1)
            .ok_or_else(|| parse_error(line, format!("invalid feature id {fid:?}")))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(line, format!("invalid feature value {val:?}")))?;
        features.push((fid, val));
    }

    Ok(Some(Record {
        qid: qid.to_string(),
        grade: grade as u8,
        features,
        doc_id: comment.and_then(comment_doc_id),
    }))
}

/// Parses LETOR text into queries grouped by qid in order of first appearance.
pub fn parse_letor<R: BufRead>(reader: R) -> Result<QuerySet> {
    let mut records = Vec::new();
    let mut dim = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(rec) = parse_record(&line, idx + 1)? {
            dim = rec.features.iter().map(|&(f, _)| f).max().unwrap_or(0).max(dim);
            records.push((idx + 1, rec));
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut queries: Vec<Query> = Vec::new();
    for (line, rec) in records {
        let slot = *slots.entry(rec.qid.clone()).or_insert_with(|| {
            queries.push(Query {
                qid: rec.qid.clone(),
                documents: Vec::new(),
            });
            queries.len() - 1
        });
        let query = &mut queries[slot];
        let mut features = vec![0.0; dim];
        for (fid, val) in rec.features {
            features[fid - 1] = val;
        }
        let doc_id = rec
            .doc_id
            .unwrap_or_else(|| format!("{}-{}", query.qid, query.documents.len()));
        if query.documents.iter().any(|d| d.doc_id == doc_id) {
            return Err(parse_error(
                line,
                format!("duplicate document id {doc_id} in qid {}", query.qid),
            ));
        }
        query.documents.push(Document {
            doc_id,
            features,
            relevance: rec.grade,
        });
    }
    QuerySet::new(queries)
}

pub fn parse_letor_str(text: &str) -> Result<QuerySet> {
    parse_letor(text.as_bytes())
}

pub fn load_letor_file(path: impl AsRef<Path>) -> Result<QuerySet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_letor(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

/// Writes queries in LETOR format, every feature id explicit.
pub fn write_letor<W: Write>(set: &QuerySet, mut out: W) -> std::io::Result<()> {
    for q in set.queries() {
        for doc in &q.documents {
            write!(out, "{} qid:{}", doc.relevance, q.qid)?;
            for (i, v) in doc.features.iter().enumerate() {
                write!(out, " {}:{}", i + 1, v)?;
            }
            writeln!(out, " #docid={}", doc.doc_id)?;
        }
    }
    Ok(())
}

pub fn to_letor_string(set: &QuerySet) -> String {
    let mut buf = Vec::new();
    write_letor(set, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("LETOR output is UTF-8")
}

/// Loads `<dir>/Fold<fold>/{train,test}.txt`.
pub fn load_fold(dir: impl AsRef<Path>, fold: usize) -> Result<FoldSplit> {
    load_split(dir.as_ref().join(format!("Fold{fold}")))
}

/// Loads `<dir>/train.txt` and `<dir>/test.txt`.
pub fn load_split(dir: impl AsRef<Path>) -> Result<FoldSplit> {
    let dir = dir.as_ref();
    let train = load_letor_file(dir.join("train.txt"))?;
    let test = load_letor_file(dir.join("test.txt"))?;
    FoldSplit::new(train, test)
}

/// Sizes of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub n_queries: usize,
    pub docs_per_query: usize,
    pub seed: u64,
}

/// Tercile grade of the document at `position` (0-based, descending score)
/// among `len` documents. Remainders go to the higher grades.
fn tercile_grade(position: usize, len: usize) -> u8 {
    2 - (3 * position / len) as u8
}

/// Generates a corpus whose ideal linear ranker is the returned unit vector.
///
/// Features are i.i.d. standard normal. Within each query, documents are
/// graded 2/1/0 by terciles of their score under the reference weights.
pub fn gen_synthetic(spec: SyntheticSpec) -> Result<(QuerySet, Vec<f64>)> {
    if spec.dim < 2 {
        return Err(Error::config("synthetic dimension must be at least 2"));
    }
    if spec.n_queries < 1 {
        return Err(Error::config("synthetic corpus needs at least one query"));
    }
    if spec.docs_per_query < 3 {
        return Err(Error::config("synthetic queries need at least 3 documents"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let reference = loop {
        let v: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };

    let mut queries = Vec::with_capacity(spec.n_queries);
    for qi in 0..spec.n_queries {
        let qid = (qi + 1).to_string();
        let mut documents: Vec<Document> = (0..spec.docs_per_query)
            .map(|j| Document {
                doc_id: format!("q{}d{}", qi + 1, j),
                features: (0..spec.dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
                relevance: 0,
            })
            .collect();
        let scores: Vec<f64> = documents
            .iter()
            .map(|d| d.features.iter().zip(&reference).map(|(x, w)| x * w).sum())
            .collect();
        let mut order: Vec<usize> = (0..documents.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for (pos, &idx) in order.iter().enumerate() {
            documents[idx].relevance = tercile_grade(pos, spec.docs_per_query);
        }
        queries.push(Query { qid, documents });
    }
    Ok((QuerySet::new(queries)?, reference))
}

/// Synthetic corpus split into leading training queries and trailing test
/// queries, sharing one reference ranker.
pub fn gen_synthetic_split(
    dim: usize,
    n_train: usize,
    n_test: usize,
    docs_per_query: usize,
    seed: u64,
) -> Result<(FoldSplit, Vec<f64>)> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::config("train and test sets must both be non-empty"));
    }
    let (set, reference) = gen_synthetic(SyntheticSpec {
        dim,
        n_queries: n_train + n_test,
        docs_per_query,
        seed,
    })?;
    let mut queries = set.into_queries();
    let test = queries.split_off(n_train);
    Ok((
        FoldSplit::new(QuerySet::new(queries)?, QuerySet::new(test)?)?,
        reference,
    ))
}
