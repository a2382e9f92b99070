//! Comparison embedding methods: word-vector averaging, SIF with first
//! principal component removal, and SVD factorizations of the concept
//! co-occurrence PPMI matrix plugged into the same composition rule as the
//! skip-gram pipeline.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Problem, WordSelection};
use crate::error::{Error, Result};
use crate::linalg;
use crate::prob_embed::{embed_corpus, EmbedOutcome, EmbeddingSet, Method};

/// What to do with tokens absent from a word-vector table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OovPolicy {
    /// Drop the token.
    Skip,
    /// Give it a deterministic uniform `[-1, 1]` vector derived from the seed
    /// and the token text.
    Random { seed: u64 },
}

/// A pluggable token → vector table (pretrained word vectors, or seeded
/// random vectors for desk-scale runs).
#[derive(Debug, Clone)]
pub struct WordVectorTable {
    pub dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    pub oov_policy: OovPolicy,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn seeded_token_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mix = fnv1a64(token.as_bytes()) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

impl WordVectorTable {
    pub fn new(dim: usize, oov_policy: OovPolicy) -> Self {
        WordVectorTable {
            dim,
            vectors: HashMap::new(),
            oov_policy,
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite word vector entry".into()));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    /// Load the standard text layout `token v1 .. vdim`, one token per line,
    /// dimension auto-detected from the first line.
    pub fn load(path: impl AsRef<Path>, oov_policy: OovPolicy) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table: Option<WordVectorTable> = None;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields
                .next()
                .ok_or_else(|| Error::malformed(path, lineno + 1, "missing token"))?;
            let values: std::result::Result<Vec<f64>, _> = fields.map(str::parse).collect();
            let values = values
                .map_err(|e| Error::malformed(path, lineno + 1, format!("bad value: {e}")))?;
            if values.is_empty() {
                return Err(Error::malformed(path, lineno + 1, "no vector values"));
            }
            let table = table.get_or_insert_with(|| WordVectorTable::new(values.len(), oov_policy));
            table
                .insert(token, values)
                .map_err(|e| Error::malformed(path, lineno + 1, e.to_string()))?;
        }
        table.ok_or_else(|| Error::malformed(path, 1, "empty word-vector file"))
    }

    /// Seeded random table covering a whole vocabulary; entries match what the
    /// `Random` OOV policy would generate for the same seed.
    pub fn random_for_vocab<'a>(
        vocab: impl IntoIterator<Item = &'a str>,
        dim: usize,
        seed: u64,
    ) -> Self {
        let mut table = WordVectorTable::new(dim, OovPolicy::Random { seed });
        for token in vocab {
            let v = seeded_token_vector(token, dim, seed);
            table.vectors.insert(token.to_string(), v);
        }
        table
    }

    /// Vector actually stored for a token, bypassing the OOV policy.
    pub fn stored(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }

    /// Vector for a token under the table's OOV policy.
    pub fn vector(&self, token: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.vectors.get(token) {
            return Some(v.clone());
        }
        match self.oov_policy {
            OovPolicy::Skip => None,
            OovPolicy::Random { seed } => Some(seeded_token_vector(token, self.dim, seed)),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Token weighting for plain word averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Scale each word vector by 1/f̂_w, its corpus occurrence count.
    InvFreq,
}

fn kept_tokens<'a>(problem: &'a Problem, selection: Option<&WordSelection>) -> Vec<&'a str> {
    problem
        .words
        .iter()
        .map(|w| w.as_str())
        .filter(|w| selection.map_or(true, |s| s.contains(w)))
        .collect()
}

/// Average the word vectors of a problem's (optionally selected) tokens.
pub fn word_average(
    problem: &Problem,
    table: &WordVectorTable,
    weighting: Weighting,
    selection: Option<&WordSelection>,
    word_freq: &HashMap<String, u64>,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; table.dim];
    let mut used = 0usize;
    for token in kept_tokens(problem, selection) {
        let Some(vec) = table.vector(token) else {
            continue;
        };
        let scale = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::InvFreq => {
                let f = *word_freq.get(token).unwrap_or(&0);
                if f == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "token `{token}` has no corpus frequency"
                    )));
                }
                1.0 / f as f64
            }
        };
        for (a, v) in acc.iter_mut().zip(vec.iter()) {
            *a += scale * v;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Unembeddable(format!(
            "problem `{}` has no usable tokens",
            problem.id
        )));
    }
    for a in &mut acc {
        *a /= used as f64;
    }
    Ok(acc)
}

/// Word-average embeddings for a whole corpus; problems with no usable tokens
/// land in the skip report.
pub fn word_average_corpus(
    corpus: &Corpus,
    table: &WordVectorTable,
    weighting: Weighting,
    selection: Option<&WordSelection>,
) -> Result<EmbedOutcome> {
    let method = match weighting {
        Weighting::Uniform => Method::WordAvgUniform,
        Weighting::InvFreq => Method::WordAvgWeighted,
    };
    let mut set = EmbeddingSet::new(method, table.dim);
    let mut skipped = Vec::new();
    for p in &corpus.problems {
        match word_average(p, table, weighting, selection, &corpus.word_freq) {
            Ok(vec) => set.insert(p.id.clone(), vec)?,
            Err(Error::Unembeddable(_)) => skipped.push(p.id.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok(EmbedOutcome { set, skipped })
}

/// Default SIF weight parameter.
pub const SIF_A_DEFAULT: f64 = 1e-3;
/// Weight parameters worth sweeping: the small values suit all-word runs, the
/// large one selected-word runs.
pub const SIF_A_GRID: [f64; 3] = [1e-5, 1e-3, 2e-2];

/// Smooth-inverse-frequency weighted rows, before component removal:
/// `Ē_i = (1/|W_i|) Σ_w [a/(a+p(w))]·Ê_w` over the problem's usable tokens.
/// Returns the ids that produced rows and the ids skipped for having none.
pub fn sif_weighted_rows(
    corpus: &Corpus,
    table: &WordVectorTable,
    a: f64,
    selection: Option<&WordSelection>,
) -> Result<(Vec<String>, Array2<f64>, Vec<String>)> {
    if a <= 0.0 {
        return Err(Error::InvalidConfig(format!("a must be positive, got {a}")));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for p in &corpus.problems {
        let mut acc = vec![0.0; table.dim];
        let mut used = 0usize;
        for token in kept_tokens(p, selection) {
            let Some(vec) = table.vector(token) else {
                continue;
            };
            let pw = *corpus.word_prob.get(token).unwrap_or(&0.0);
            let weight = a / (a + pw);
            for (acc_v, v) in acc.iter_mut().zip(vec.iter()) {
                *acc_v += weight * v;
            }
            used += 1;
        }
        if used == 0 {
            skipped.push(p.id.clone());
            continue;
        }
        for v in &mut acc {
            *v /= used as f64;
        }
        ids.push(p.id.clone());
        rows.extend(acc);
    }
    let matrix = Array2::from_shape_vec((ids.len(), table.dim), rows)
        .expect("row count times dim matches buffer");
    Ok((ids, matrix, skipped))
}

/// Project the first principal direction `u` out of every row.
pub fn remove_component(rows: &Array2<f64>, u: &Array1<f64>) -> Array2<f64> {
    let coefficients = rows.dot(u);
    let mut out = rows.clone();
    for (mut row, &coef) in out.rows_mut().into_iter().zip(coefficients.iter()) {
        for (r, &uv) in row.iter_mut().zip(u.iter()) {
            *r -= coef * uv;
        }
    }
    out
}

/// SIF problem embeddings: weighted averaging followed by removal of the
/// first principal component of the weighted rows.
pub fn sif_embed(
    corpus: &Corpus,
    table: &WordVectorTable,
    a: f64,
    selection: Option<&WordSelection>,
) -> Result<EmbedOutcome> {
    let (ids, rows, skipped) = sif_weighted_rows(corpus, table, a, selection)?;
    if ids.len() < 2 {
        return Err(Error::InvalidConfig(
            "SIF needs at least two embeddable problems to fit the principal component".into(),
        ));
    }
    let u = linalg::first_right_singular_vector(&rows)?;
    let cleaned = remove_component(&rows, &u);
    let mut set = EmbeddingSet::new(Method::Sif, table.dim);
    for (i, id) in ids.iter().enumerate() {
        set.insert(id.clone(), cleaned.row(i).to_vec())?;
    }
    Ok(EmbedOutcome { set, skipped })
}

/// Symmetric zero-diagonal document co-occurrence counts: entry (i, j) is the
/// number of problems labeled with both concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    pub counts: Array2<u64>,
}

pub fn cooccurrence(corpus: &Corpus) -> CooccurrenceMatrix {
    let n = corpus.n_concepts();
    let mut counts = Array2::zeros((n, n));
    for p in &corpus.problems {
        for &a in &p.concepts {
            for &b in &p.concepts {
                if a != b {
                    counts[[a, b]] += 1;
                }
            }
        }
    }
    CooccurrenceMatrix { counts }
}

/// Threshold flavor of the positive pointwise mutual information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PpmiVariant {
    /// Keep log(ratio) where ratio > 1.
    Standard,
    /// Keep log(ratio) where ratio > k.
    Shifted(f64),
    /// Context-distribution smoothing: column marginal raised to 0.75.
    Cds,
}

/// Default shift threshold for the shifted variant.
pub const DEFAULT_SHIFT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PpmiMatrix {
    pub matrix: Array2<f64>,
    pub variant: PpmiVariant,
}

/// Build the PPMI matrix from co-occurrence counts. Natural logarithm; rows
/// or columns with zero marginal yield zeros. The standard and shifted
/// variants are exactly symmetric for symmetric input.
pub fn ppmi(cooc: &CooccurrenceMatrix, variant: PpmiVariant) -> PpmiMatrix {
    let n = cooc.counts.nrows();
    let row_sums: Vec<f64> = (0..n)
        .map(|i| cooc.counts.row(i).iter().map(|&v| v as f64).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();

    let threshold = match variant {
        PpmiVariant::Standard | PpmiVariant::Cds => 1.0,
        PpmiVariant::Shifted(k) => k,
    };

    let mut matrix = Array2::zeros((n, n));
    if total == 0.0 {
        return PpmiMatrix { matrix, variant };
    }
    let w: Vec<f64> = row_sums.iter().map(|&s| s / total).collect();
    let col_weight: Vec<f64> = match variant {
        PpmiVariant::Standard | PpmiVariant::Shifted(_) => w.clone(),
        PpmiVariant::Cds => {
            let smoothed: Vec<f64> = row_sums.iter().map(|&s| s.powf(0.75)).collect();
            let d_c: f64 = smoothed.iter().sum();
            smoothed.iter().map(|&s| s / d_c).collect()
        }
    };

    for i in 0..n {
        for j in 0..n {
            // Grouping the marginal product keeps symmetric variants exactly
            // symmetric in floating point.
            let marginal = w[i] * col_weight[j];
            if marginal == 0.0 {
                continue;
            }
            let ratio = cooc.counts[[i, j]] as f64 / (total * marginal);
            if ratio > threshold {
                matrix[[i, j]] = ratio.ln();
            }
        }
    }
    PpmiMatrix { matrix, variant }
}

/// Which SVD factors become concept embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdFlavor {
    /// Rows of `U_d`.
    Eig,
    /// Rows of `U_d S_d + C` where `C` is the first `d` columns of `V`.
    Wandc,
    /// Rows of `U_d S_d`.
    Sub,
    /// Rows of `U_d S_d` over the shifted PPMI matrix.
    Shifted,
    /// Rows of `U_d S_d` over the smoothed PPMI matrix.
    Cds,
}

impl SvdFlavor {
    pub fn method(&self) -> Method {
        match self {
            SvdFlavor::Eig => Method::SvdEig,
            SvdFlavor::Wandc => Method::SvdWandc,
            SvdFlavor::Sub => Method::SvdSub,
            SvdFlavor::Shifted => Method::SvdShifted,
            SvdFlavor::Cds => Method::SvdCds,
        }
    }

    fn variant_matches(&self, variant: PpmiVariant) -> bool {
        matches!(
            (self, variant),
            (SvdFlavor::Eig, PpmiVariant::Standard)
                | (SvdFlavor::Wandc, PpmiVariant::Standard)
                | (SvdFlavor::Sub, PpmiVariant::Standard)
                | (SvdFlavor::Shifted, PpmiVariant::Shifted(_))
                | (SvdFlavor::Cds, PpmiVariant::Cds)
        )
    }
}

/// Concept embeddings from the SVD of a PPMI matrix. Singular values are
/// sorted descending and each left singular vector is flipped so its
/// largest-magnitude entry is positive, making the output deterministic.
pub fn svd_concept_embed(p: &PpmiMatrix, d: usize, flavor: SvdFlavor) -> Result<Array2<f64>> {
    let n = p.matrix.nrows();
    if d == 0 || d > n {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension {d} out of range 1..={n}"
        )));
    }
    if !flavor.variant_matches(p.variant) {
        return Err(Error::InvalidConfig(format!(
            "flavor {flavor:?} does not match PPMI variant {:?}",
            p.variant
        )));
    }
    let (u, s, vt) = linalg::svd(&p.matrix)?;
    let mut out = Array2::zeros((n, d));
    match flavor {
        SvdFlavor::Eig => {
            for i in 0..n {
                for j in 0..d {
                    out[[i, j]] = u[[i, j]];
                }
            }
        }
        SvdFlavor::Sub | SvdFlavor::Shifted | SvdFlavor::Cds => {
            for i in 0..n {
                for j in 0..d {
                    out[[i, j]] = u[[i, j]] * s[j];
                }
            }
        }
        SvdFlavor::Wandc => {
            // W = U_d S_d; C = first d rows of the paper's V, transposed to
            // N×d, i.e. the first d rows of Vt read column-wise.
            for i in 0..n {
                for j in 0..d {
                    out[[i, j]] = u[[i, j]] * s[j] + vt[[j, i]];
                }
            }
        }
    }
    Ok(out)
}

/// Full SVD baseline pipeline: co-occurrence → PPMI (variant picked by the
/// flavor; `shift_k` applies to the shifted flavor) → concept embeddings →
/// frequency-penalized composition, exactly as the skip-gram pipeline.
pub fn svd_prob_embed(
    corpus: &Corpus,
    flavor: SvdFlavor,
    d: usize,
    shift_k: f64,
) -> Result<EmbedOutcome> {
    let cooc = cooccurrence(corpus);
    let variant = match flavor {
        SvdFlavor::Eig | SvdFlavor::Wandc | SvdFlavor::Sub => PpmiVariant::Standard,
        SvdFlavor::Shifted => PpmiVariant::Shifted(shift_k),
        SvdFlavor::Cds => PpmiVariant::Cds,
    };
    let p = ppmi(&cooc, variant);
    let vectors = svd_concept_embed(&p, d, flavor)?;
    let mut outcome = embed_corpus(corpus, &vectors, flavor.method())?;
    outcome.set.method = flavor.method();
    Ok(outcome)
}
