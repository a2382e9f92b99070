//! Problem embeddings composed from concept vectors, plus cosine similarity
//! queries.
//!
//! A problem with concept set `C` embeds as the average of its concept
//! vectors, each scaled down by the concept's document frequency:
//! `E = (1/|C|) Σ_c E(c)/f_c`. High-frequency concepts carry less identity
//! than rare ones, so they are penalized at composition time.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Provenance tag for a set of problem vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Prob2Vec,
    WordAvgUniform,
    WordAvgWeighted,
    Sif,
    SvdEig,
    SvdWandc,
    SvdSub,
    SvdShifted,
    SvdCds,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Prob2Vec,
        Method::WordAvgUniform,
        Method::WordAvgWeighted,
        Method::Sif,
        Method::SvdEig,
        Method::SvdWandc,
        Method::SvdSub,
        Method::SvdShifted,
        Method::SvdCds,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Prob2Vec => "prob2vec",
            Method::WordAvgUniform => "word-avg-uniform",
            Method::WordAvgWeighted => "word-avg-weighted",
            Method::Sif => "sif",
            Method::SvdEig => "svd-eig",
            Method::SvdWandc => "svd-wandc",
            Method::SvdSub => "svd-sub",
            Method::SvdShifted => "svd-shifted",
            Method::SvdCds => "svd-cds",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dense per-problem vectors from one embedding method.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub method: Method,
    pub dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(method: Method, dim: usize) -> Self {
        EmbeddingSet {
            method,
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite embedding entry".into()));
        }
        self.vectors.insert(id.into(), vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(|v| v.as_slice())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Text export: a header line with the method tag and dimension, then
    /// `problem-id<TAB>v1 v2 ... vd` per line in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# method={} dim={}", self.method, self.dim)
            .map_err(|e| Error::io(path, e))?;
        for (id, vec) in &self.vectors {
            let values: Vec<String> = vec.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{id}\t{}", values.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::malformed(path, 1, "empty embedding file")),
        };
        let parse_header = || -> Option<(Method, usize)> {
            let rest = header.strip_prefix("# ")?;
            let mut method = None;
            let mut dim = None;
            for field in rest.split_whitespace() {
                if let Some(m) = field.strip_prefix("method=") {
                    method = m.parse().ok();
                } else if let Some(d) = field.strip_prefix("dim=") {
                    dim = d.parse().ok();
                }
            }
            Some((method?, dim?))
        };
        let (method, dim) = parse_header()
            .ok_or_else(|| Error::malformed(path, 1, "bad embedding header"))?;
        let mut set = EmbeddingSet::new(method, dim);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(path, lineno + 1, "expected id<TAB>values"))?;
            let values: std::result::Result<Vec<f64>, _> =
                rest.split_whitespace().map(str::parse).collect();
            let values =
                values.map_err(|e| Error::malformed(path, lineno + 1, format!("bad value: {e}")))?;
            set.insert(id, values)
                .map_err(|e| Error::malformed(path, lineno + 1, e.to_string()))?;
        }
        Ok(set)
    }
}

/// Frequency-penalized average of concept vectors: `(1/|C|) Σ_c E(c)/f_c`.
///
/// `concept_freq[c]` must be positive for every concept of the problem; an
/// empty concept set is unembeddable.
pub fn embed_problem(
    concepts: &BTreeSet<usize>,
    concept_vectors: &Array2<f64>,
    concept_freq: &[u64],
) -> Result<Vec<f64>> {
    if concepts.is_empty() {
        return Err(Error::Unembeddable("empty concept set".into()));
    }
    let dim = concept_vectors.ncols();
    let n = concept_vectors.nrows();
    let mut acc = vec![0.0; dim];
    for &c in concepts {
        if c >= n {
            return Err(Error::IndexOutOfRange { index: c, size: n });
        }
        let f = *concept_freq.get(c).unwrap_or(&0);
        if f == 0 {
            return Err(Error::InvalidConfig(format!(
                "concept {c} has zero frequency in the corpus"
            )));
        }
        let row = concept_vectors.row(c);
        for (a, &v) in acc.iter_mut().zip(row.iter()) {
            *a += v / f as f64;
        }
    }
    let len = concepts.len() as f64;
    for a in &mut acc {
        *a /= len;
    }
    Ok(acc)
}

/// Cosine similarity, clamped to `[-1, 1]` against floating-point overshoot.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (&a, &b) in u.iter().zip(v.iter()) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// An embedding set plus the ids of problems that could not be embedded.
#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    pub set: EmbeddingSet,
    pub skipped: Vec<String>,
}

/// Embed every embeddable problem of the corpus with the given concept
/// vectors; concept-free problems land in the skip report.
pub fn embed_corpus(
    corpus: &Corpus,
    concept_vectors: &Array2<f64>,
    method: Method,
) -> Result<EmbedOutcome> {
    let mut set = EmbeddingSet::new(method, concept_vectors.ncols());
    let mut skipped = Vec::new();
    for p in &corpus.problems {
        if !p.is_embeddable() {
            skipped.push(p.id.clone());
            continue;
        }
        let vec = embed_problem(&p.concepts, concept_vectors, &corpus.concept_freq)?;
        set.insert(p.id.clone(), vec)?;
    }
    Ok(EmbedOutcome { set, skipped })
}

/// Top-`k` problems by cosine similarity to the query problem's vector, query
/// excluded; ties break toward the lexicographically smaller id.
pub fn rank_similar(set: &EmbeddingSet, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let query_vec = set.get(query).ok_or_else(|| Error::MissingEmbeddings {
        ids: vec![query.to_string()],
    })?;
    let mut scored = Vec::with_capacity(set.len().saturating_sub(1));
    for (id, vec) in set.iter() {
        if id == query {
            continue;
        }
        scored.push((id.to_string(), cosine(query_vec, vec)?));
    }
    // Stable sort on descending score keeps the id order (already sorted) for
    // exact ties.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    scored.truncate(k);
    Ok(scored)
}
