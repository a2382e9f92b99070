//! Similarity-detection test over ordered triplets.
//!
//! A triplet (A, B, C) carries the ground truth that A is more similar to B
//! than to C. A method gets the triplet right when its own cosines satisfy
//! `sim(A,B) > sim(A,C)`; an exact tie counts as an error.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob_embed::{cosine, EmbeddingSet, Method};

/// Ground-truth ordered triplet of problem ids: `a` is more similar to `b`
/// than to `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triplet {
    pub a: String,
    pub b: String,
    pub c: String,
}

impl Triplet {
    pub fn new(a: impl Into<String>, b: impl Into<String>, c: impl Into<String>) -> Result<Self> {
        let (a, b, c) = (a.into(), b.into(), c.into());
        if a == b || b == c || a == c {
            return Err(Error::InvalidConfig(format!(
                "triplet ids must be distinct: ({a}, {b}, {c})"
            )));
        }
        Ok(Triplet { a, b, c })
    }

    /// Load a triplet file: `A<TAB>B<TAB>C` per line. Lines starting with `#`
    /// and columns past the third (provenance notes) are ignored.
    pub fn load_file(path: impl AsRef<Path>) -> Result<Vec<Triplet>> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let mut next = |name: &str| {
                fields
                    .next()
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .ok_or_else(|| {
                        Error::malformed(path, lineno + 1, format!("missing field {name}"))
                    })
            };
            let (a, b, c) = (next("A")?, next("B")?, next("C")?);
            out.push(
                Triplet::new(a, b, c)
                    .map_err(|e| Error::malformed(path, lineno + 1, e.to_string()))?,
            );
        }
        Ok(out)
    }

    pub fn save_file(triplets: &[Triplet], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for t in triplets {
            writeln!(out, "{}\t{}\t{}", t.a, t.b, t.c).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Per-triplet outcome: the similarity gap `sim(A,B) − sim(A,C)` and whether
/// the method ordered the pair correctly.
#[derive(Debug, Clone, Serialize)]
pub struct TripletRecord {
    pub triplet: Triplet,
    pub gap: f64,
    pub correct: bool,
}

/// One histogram bin: half-open interval `[lower, lower + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBin {
    pub lower: f64,
    pub count: usize,
    pub errors: usize,
}

/// Default similarity-gap bin width.
pub const DEFAULT_BIN_WIDTH: f64 = 0.2;
/// Default origin of the first bin.
pub const DEFAULT_BIN_ORIGIN: f64 = 0.01;

/// Evaluation result for one method over one triplet set.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub method: Method,
    pub accuracy: f64,
    pub records: Vec<TripletRecord>,
    /// Gap histogram with the default binning.
    pub histogram: Vec<GapBin>,
}

fn similarity(set: &EmbeddingSet, x: &str, y: &str) -> Result<f64> {
    let vx = set.get(x).expect("presence checked");
    let vy = set.get(y).expect("presence checked");
    cosine(vx, vy)
}

fn check_ids(set: &EmbeddingSet, triplets: &[Triplet]) -> Result<()> {
    let mut missing: Vec<String> = Vec::new();
    for t in triplets {
        for id in [&t.a, &t.b, &t.c] {
            if set.get(id).is_none() && !missing.contains(id) {
                missing.push(id.clone());
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingEmbeddings { ids: missing })
    }
}

/// Score a method on a triplet set: correct iff `sim(A,B) > sim(A,C)`
/// strictly. Gaps are recorded from the evaluated method's own similarities.
pub fn eval_triplets(set: &EmbeddingSet, triplets: &[Triplet]) -> Result<EvalReport> {
    eval_impl(set, None, triplets)
}

/// Like [`eval_triplets`], but gaps come from a fixed reference embedding set
/// while the correct/error flags come from the evaluated method. This mirrors
/// per-bin error reporting against a common gap axis.
pub fn eval_triplets_with_reference(
    set: &EmbeddingSet,
    reference: &EmbeddingSet,
    triplets: &[Triplet],
) -> Result<EvalReport> {
    eval_impl(set, Some(reference), triplets)
}

fn eval_impl(
    set: &EmbeddingSet,
    reference: Option<&EmbeddingSet>,
    triplets: &[Triplet],
) -> Result<EvalReport> {
    check_ids(set, triplets)?;
    if let Some(r) = reference {
        check_ids(r, triplets)?;
    }
    let mut records = Vec::with_capacity(triplets.len());
    let mut correct_count = 0usize;
    for t in triplets {
        let sim_ab = similarity(set, &t.a, &t.b)?;
        let sim_ac = similarity(set, &t.a, &t.c)?;
        let correct = sim_ab > sim_ac;
        let gap = match reference {
            None => sim_ab - sim_ac,
            Some(r) => similarity(r, &t.a, &t.b)? - similarity(r, &t.a, &t.c)?,
        };
        if correct {
            correct_count += 1;
        }
        records.push(TripletRecord {
            triplet: t.clone(),
            gap,
            correct,
        });
    }
    let accuracy = if records.is_empty() {
        0.0
    } else {
        correct_count as f64 / records.len() as f64
    };
    let histogram = gap_histogram(&records, DEFAULT_BIN_WIDTH, DEFAULT_BIN_ORIGIN)?;
    Ok(EvalReport {
        method: set.method,
        accuracy,
        records,
        histogram,
    })
}

/// Bin triplet records by gap into `[origin + n·width, origin + (n+1)·width)`
/// intervals. Bins between the lowest and highest occupied one are emitted
/// contiguously; counts always sum to the record count.
pub fn gap_histogram(
    records: &[TripletRecord],
    bin_width: f64,
    origin: f64,
) -> Result<Vec<GapBin>> {
    if bin_width <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let index_of = |gap: f64| ((gap - origin) / bin_width).floor() as i64;
    let lo = records.iter().map(|r| index_of(r.gap)).min().unwrap();
    let hi = records.iter().map(|r| index_of(r.gap)).max().unwrap();
    let mut bins: Vec<GapBin> = (lo..=hi)
        .map(|n| GapBin {
            lower: origin + n as f64 * bin_width,
            count: 0,
            errors: 0,
        })
        .collect();
    for r in records {
        let slot = (index_of(r.gap) - lo) as usize;
        bins[slot].count += 1;
        if !r.correct {
            bins[slot].errors += 1;
        }
    }
    Ok(bins)
}

/// Accuracy of several methods on the same triplets.
pub fn compare_methods(
    sets: &[&EmbeddingSet],
    triplets: &[Triplet],
) -> Result<Vec<(Method, f64)>> {
    sets.iter()
        .map(|set| Ok((set.method, eval_triplets(set, triplets)?.accuracy)))
        .collect()
}

/// Aligned text table of per-method accuracies.
pub fn render_accuracy_table(rows: &[(Method, f64)]) -> String {
    let name_width = rows
        .iter()
        .map(|(m, _)| m.as_str().len())
        .max()
        .unwrap_or(6)
        .max("method".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:name_width$}  accuracy", "method");
    for (method, accuracy) in rows {
        let _ = writeln!(out, "{:name_width$}  {:6.2}%", method.as_str(), accuracy * 100.0);
    }
    out
}

/// Histogram as `bin_lower<TAB>count<TAB>errors` lines.
pub fn render_histogram(bins: &[GapBin]) -> String {
    let mut out = String::new();
    for b in bins {
        let _ = writeln!(out, "{}\t{}\t{}", b.lower, b.count, b.errors);
    }
    out
}
