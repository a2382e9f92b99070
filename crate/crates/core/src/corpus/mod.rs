//! Corpus ingestion: tokenization, rule-based concept extraction, and
//! frequency statistics.
//!
//! A [`Corpus`] is a list of [`Problem`]s plus a [`ConceptDictionary`]. Problems
//! start with raw text only; concept sets arrive either from annotations in the
//! corpus file or by applying a [`CompiledRules`] set to the raw text (the
//! abstraction step). All frequency statistics are recomputed from the problems
//! and are immutable between mutations.

pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Split raw problem text into lowercase tokens.
///
/// Backslash-prefixed markup commands (`\choose`, `\frac`, ...) are kept as
/// single tokens, backslash included; every other token is a maximal run of
/// alphanumeric characters. Everything else is a separator.
pub fn tokenize(raw_text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = raw_text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() && chars[i + 1].is_alphabetic() {
            let mut tok = String::from('\\');
            i += 1;
            while i < chars.len() && chars[i].is_alphabetic() {
                tok.extend(chars[i].to_lowercase());
                i += 1;
            }
            tokens.push(tok);
        } else if c.is_alphanumeric() {
            let mut tok = String::new();
            while i < chars.len() && chars[i].is_alphanumeric() {
                tok.extend(chars[i].to_lowercase());
                i += 1;
            }
            tokens.push(tok);
        } else {
            i += 1;
        }
    }
    tokens
}

/// One problem: raw text, its token stream, and a (possibly empty) concept set.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub raw_text: String,
    /// Tokens of `raw_text`; kept consistent by construction.
    pub words: Vec<String>,
    /// Indices into the corpus dictionary. Empty until extraction or
    /// annotation loading.
    pub concepts: BTreeSet<usize>,
}

impl Problem {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let words = tokenize(&raw_text);
        Problem {
            id: id.into(),
            raw_text,
            words,
            concepts: BTreeSet::new(),
        }
    }

    /// A problem with no concepts cannot be embedded by concept composition.
    pub fn is_embeddable(&self) -> bool {
        !self.concepts.is_empty()
    }
}

/// Ordered list of concept names; the position of a name is its index for the
/// corpus lifetime.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptDictionary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ConceptDictionary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate concept name `{name}` in dictionary"
                )));
            }
        }
        Ok(ConceptDictionary { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(|s| s.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// One extraction rule: the concept fires if any pattern matches the raw text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptRule {
    pub concept: String,
    pub patterns: Vec<String>,
}

/// Rule set compiled against a dictionary; compilation catches unknown
/// concepts and bad patterns up front rather than per problem.
#[derive(Debug)]
pub struct CompiledRules {
    dictionary: ConceptDictionary,
    /// (concept index, compiled patterns) per rule record.
    entries: Vec<(usize, Vec<Regex>)>,
}

impl CompiledRules {
    /// Compile `rules` against an existing dictionary.
    pub fn compile(rules: &[ConceptRule], dictionary: &ConceptDictionary) -> Result<Self> {
        let mut entries = Vec::with_capacity(rules.len());
        for rule in rules {
            let idx = dictionary
                .index_of(&rule.concept)
                .ok_or_else(|| Error::UnknownConcept(rule.concept.clone()))?;
            let mut compiled = Vec::with_capacity(rule.patterns.len());
            for pat in &rule.patterns {
                let re = Regex::new(pat).map_err(|e| Error::BadPattern {
                    concept: rule.concept.clone(),
                    source: Box::new(e),
                })?;
                compiled.push(re);
            }
            entries.push((idx, compiled));
        }
        Ok(CompiledRules {
            dictionary: dictionary.clone(),
            entries,
        })
    }

    /// Compile rules whose concepts define the dictionary (first-appearance
    /// order; repeated concept records merge into one dictionary entry).
    pub fn compile_with_own_dictionary(rules: &[ConceptRule]) -> Result<Self> {
        let mut names = Vec::new();
        let mut seen = HashMap::new();
        for rule in rules {
            if !seen.contains_key(&rule.concept) {
                seen.insert(rule.concept.clone(), names.len());
                names.push(rule.concept.clone());
            }
        }
        let dictionary = ConceptDictionary::new(names)?;
        Self::compile(rules, &dictionary)
    }

    pub fn dictionary(&self) -> &ConceptDictionary {
        &self.dictionary
    }

    /// Load a rules file: a JSON array of `{concept, patterns[]}` records.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: Vec<ConceptRule> = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(path, e.line(), e.to_string()))?;
        Self::compile_with_own_dictionary(&rules)
    }
}

/// Apply compiled rules to one problem. Matching runs on the raw text, not on
/// tokens, so patterns may span punctuation and markup.
pub fn extract_concepts(problem: &Problem, rules: &CompiledRules) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (concept, patterns) in &rules.entries {
        if patterns.iter().any(|re| re.is_match(&problem.raw_text)) {
            out.insert(*concept);
        }
    }
    out
}

/// The token list kept by a word-selection filter.
#[derive(Debug, Clone, Default)]
pub struct WordSelection {
    pub keep: BTreeSet<String>,
}

impl WordSelection {
    pub fn new(tokens: impl IntoIterator<Item = String>) -> Self {
        WordSelection {
            keep: tokens.into_iter().collect(),
        }
    }

    /// Load a selection file: one token per line, blank lines ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from),
        ))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.keep.contains(token)
    }

    /// Tokens in the selection that never occur in the corpus; callers should
    /// warn about these and otherwise ignore them.
    pub fn out_of_vocabulary(&self, corpus: &Corpus) -> Vec<String> {
        self.keep
            .iter()
            .filter(|t| !corpus.word_freq.contains_key(*t))
            .cloned()
            .collect()
    }
}

/// On-disk record: one problem per line.
#[derive(Debug, Serialize, Deserialize)]
struct ProblemRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concepts: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct AnnotationRecord {
    id: String,
    concepts: Vec<String>,
}

/// Problems, dictionary, and the frequency statistics derived from them.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub problems: Vec<Problem>,
    pub dictionary: ConceptDictionary,
    /// Document frequency per concept index: number of problems containing it.
    pub concept_freq: Vec<u64>,
    /// Total occurrence count per token.
    pub word_freq: HashMap<String, u64>,
    /// Occurrence count / total token count.
    pub word_prob: HashMap<String, f64>,
}

impl Corpus {
    /// Build a corpus and compute its statistics. Fails on duplicate problem
    /// ids or concept indices outside the dictionary.
    pub fn from_problems(problems: Vec<Problem>, dictionary: ConceptDictionary) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &problems {
            if !seen.insert(p.id.clone()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
            if let Some(&c) = p.concepts.iter().next_back() {
                if c >= dictionary.len() {
                    return Err(Error::IndexOutOfRange {
                        index: c,
                        size: dictionary.len(),
                    });
                }
            }
        }
        let mut corpus = Corpus {
            problems,
            dictionary,
            concept_freq: Vec::new(),
            word_freq: HashMap::new(),
            word_prob: HashMap::new(),
        };
        corpus.recompute_stats();
        Ok(corpus)
    }

    /// Recompute `concept_freq`, `word_freq`, and `word_prob` from the
    /// problems. Called after any mutation of concept sets.
    pub fn recompute_stats(&mut self) {
        self.concept_freq = vec![0; self.dictionary.len()];
        self.word_freq.clear();
        let mut total: u64 = 0;
        for p in &self.problems {
            for &c in &p.concepts {
                self.concept_freq[c] += 1;
            }
            for w in &p.words {
                *self.word_freq.entry(w.clone()).or_insert(0) += 1;
                total += 1;
            }
        }
        self.word_prob = self
            .word_freq
            .iter()
            .map(|(w, &n)| (w.clone(), n as f64 / total as f64))
            .collect();
    }

    /// Replace every problem's concept set by rule extraction and adopt the
    /// rule set's dictionary. Returns the ids of problems left concept-free.
    pub fn extract_with_rules(&mut self, rules: &CompiledRules) -> Vec<String> {
        self.dictionary = rules.dictionary().clone();
        let mut flagged = Vec::new();
        for p in &mut self.problems {
            p.concepts = extract_concepts(p, rules);
            if p.concepts.is_empty() {
                flagged.push(p.id.clone());
            }
        }
        self.recompute_stats();
        flagged
    }

    pub fn problem(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn n_concepts(&self) -> usize {
        self.dictionary.len()
    }

    /// Load a line-delimited corpus file. Inline `concepts` fields are honored
    /// when present; the dictionary is the sorted set of annotation names.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_impl(path.as_ref(), None)
    }

    /// Like [`Corpus::load`], but concept sets come from a separate
    /// annotations file (`{id, concepts[]}` per line), overriding any inline
    /// annotations.
    pub fn load_with_annotations(
        path: impl AsRef<Path>,
        annotations: impl AsRef<Path>,
    ) -> Result<Self> {
        Self::load_impl(path.as_ref(), Some(annotations.as_ref()))
    }

    fn load_impl(path: &Path, annotations: Option<&Path>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ProblemRecord = serde_json::from_str(&line)
                .map_err(|e| Error::malformed(path, lineno + 1, e.to_string()))?;
            records.push((lineno + 1, record));
        }

        let mut annotation_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        if let Some(ann_path) = annotations {
            let file = File::open(ann_path).map_err(|e| Error::io(ann_path, e))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(ann_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: AnnotationRecord = serde_json::from_str(&line)
                    .map_err(|e| Error::malformed(ann_path, lineno + 1, e.to_string()))?;
                annotation_map.insert(record.id, record.concepts);
            }
        }

        // Dictionary: sorted union of all annotation names.
        let mut names: BTreeSet<String> = BTreeSet::new();
        for (_, rec) in &records {
            if annotations.is_none() {
                if let Some(cs) = &rec.concepts {
                    names.extend(cs.iter().cloned());
                }
            }
        }
        for cs in annotation_map.values() {
            names.extend(cs.iter().cloned());
        }
        let dictionary = ConceptDictionary::new(names.into_iter().collect())?;

        let mut problems = Vec::with_capacity(records.len());
        for (lineno, rec) in records {
            let mut problem = Problem::new(rec.id.clone(), rec.text);
            let concept_names = match annotations {
                Some(_) => annotation_map.get(&rec.id).cloned(),
                None => rec.concepts,
            };
            if let Some(cs) = concept_names {
                for name in cs {
                    let idx = dictionary.index_of(&name).ok_or_else(|| {
                        Error::malformed(path, lineno, format!("unknown concept `{name}`"))
                    })?;
                    problem.concepts.insert(idx);
                }
            }
            problems.push(problem);
        }
        Self::from_problems(problems, dictionary)
    }

    /// Write the corpus back out, one record per line. Concept sets are
    /// written whenever the corpus carries a dictionary.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for p in &self.problems {
            let concepts = if self.dictionary.is_empty() {
                None
            } else {
                Some(
                    p.concepts
                        .iter()
                        .map(|&c| self.dictionary.name(c).unwrap().to_string())
                        .collect(),
                )
            };
            let record = ProblemRecord {
                id: p.id.clone(),
                text: p.raw_text.clone(),
                concepts,
            };
            serde_json::to_writer(&mut out, &record).map_err(|e| {
                Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
            })?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_plain_words() {
        assert_eq!(
            tokenize("Bob flips a coin"),
            vec!["bob", "flips", "a", "coin"]
        );
    }

    #[test]
    fn tokenize_preserves_markup_commands() {
        // Derived by hand from the tokenizer contract: `$`, `{`, `}` separate,
        // `\choose` stays one token.
        assert_eq!(
            tokenize("compute ${5 \\choose 2}$"),
            vec!["compute", "5", "\\choose", "2"]
        );
    }

    #[test]
    fn tokenize_lowercases_and_splits_mixed() {
        assert_eq!(tokenize("X1 and \\Frac{a}{b}"), vec!["x1", "and", "\\frac", "a", "b"]);
    }

    #[test]
    fn tokenize_is_fixed_point_on_rejoin() {
        let samples = [
            "compute ${5 \\choose 2}$",
            "Bob flips a coin",
            "P(A|B) = 0.5, via \\Bayes rule!",
        ];
        for s in samples {
            let once = tokenize(s);
            let again = tokenize(&once.join(" "));
            assert_eq!(once, again);
        }
    }

    #[test]
    fn extract_matches_markup_rule() {
        let rules = vec![ConceptRule {
            concept: "nchoosek".into(),
            patterns: vec![r"\\choose".into(), r"\\binom".into()],
        }];
        let compiled = CompiledRules::compile_with_own_dictionary(&rules).unwrap();
        let p = Problem::new("p1", "compute ${5 \\choose 2}$");
        let got = extract_concepts(&p, &compiled);
        assert_eq!(got, BTreeSet::from([0]));
    }

    #[test]
    fn extract_empty_text_matches_nothing() {
        let rules = vec![ConceptRule {
            concept: "a".into(),
            patterns: vec!["alpha".into()],
        }];
        let compiled = CompiledRules::compile_with_own_dictionary(&rules).unwrap();
        let p = Problem::new("p1", "");
        assert!(extract_concepts(&p, &compiled).is_empty());
    }

    #[test]
    fn extract_synthetic_two_rules() {
        let rules = vec![
            ConceptRule {
                concept: "A".into(),
                patterns: vec!["alpha".into()],
            },
            ConceptRule {
                concept: "B".into(),
                patterns: vec!["beta".into()],
            },
        ];
        let compiled = CompiledRules::compile_with_own_dictionary(&rules).unwrap();
        let p = Problem::new("p1", "alpha and beta and alpha");
        assert_eq!(extract_concepts(&p, &compiled), BTreeSet::from([0, 1]));
    }

    #[test]
    fn compile_rejects_unknown_concept() {
        let dict = ConceptDictionary::new(vec!["known".into()]).unwrap();
        let rules = vec![ConceptRule {
            concept: "unknown".into(),
            patterns: vec!["x".into()],
        }];
        assert!(matches!(
            CompiledRules::compile(&rules, &dict),
            Err(Error::UnknownConcept(_))
        ));
    }

    #[test]
    fn compile_rejects_bad_pattern() {
        let rules = vec![ConceptRule {
            concept: "a".into(),
            patterns: vec!["(unclosed".into()],
        }];
        assert!(matches!(
            CompiledRules::compile_with_own_dictionary(&rules),
            Err(Error::BadPattern { .. })
        ));
    }

    fn tiny_corpus() -> Corpus {
        let dict = ConceptDictionary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let mut p1 = Problem::new("p1", "one two two");
        p1.concepts = BTreeSet::from([0, 1]);
        let mut p2 = Problem::new("p2", "two three");
        p2.concepts = BTreeSet::from([0, 1, 2]);
        Corpus::from_problems(vec![p1, p2], dict).unwrap()
    }

    #[test]
    fn stats_match_hand_counts() {
        let corpus = tiny_corpus();
        assert_eq!(corpus.concept_freq, vec![2, 2, 1]);
        assert_eq!(corpus.word_freq["two"], 3);
        assert_eq!(corpus.word_freq["one"], 1);
        let total: f64 = corpus.word_prob.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recompute_stats_is_idempotent() {
        let mut corpus = tiny_corpus();
        let freq = corpus.concept_freq.clone();
        let words = corpus.word_freq.clone();
        corpus.recompute_stats();
        assert_eq!(corpus.concept_freq, freq);
        assert_eq!(corpus.word_freq, words);
    }

    #[test]
    fn duplicate_id_rejected() {
        let dict = ConceptDictionary::default();
        let problems = vec![Problem::new("p", "x"), Problem::new("p", "y")];
        assert!(matches!(
            Corpus::from_problems(problems, dict),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn roundtrip_save_load() {
        let corpus = tiny_corpus();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        corpus.save(&path).unwrap();
        let loaded = Corpus::load(&path).unwrap();
        assert_eq!(loaded.problems.len(), 2);
        assert_eq!(loaded.dictionary.names(), corpus.dictionary.names());
        assert_eq!(loaded.problems[1].concepts, corpus.problems[1].concepts);
        assert_eq!(loaded.concept_freq, corpus.concept_freq);
    }

    #[test]
    fn load_reports_line_number_on_malformed_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\":\"p1\",\"text\":\"ok\"}\nnot json\n").unwrap();
        match Corpus::load(&path) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn separate_annotations_override_inline() {
        let dir = tempfile::tempdir().unwrap();
        let corpus_path = dir.path().join("corpus.jsonl");
        let ann_path = dir.path().join("ann.jsonl");
        std::fs::write(
            &corpus_path,
            "{\"id\":\"p1\",\"text\":\"x\",\"concepts\":[\"inline\"]}\n",
        )
        .unwrap();
        std::fs::write(&ann_path, "{\"id\":\"p1\",\"concepts\":[\"separate\"]}\n").unwrap();
        let corpus = Corpus::load_with_annotations(&corpus_path, &ann_path).unwrap();
        assert_eq!(corpus.dictionary.names(), ["separate"]);
        assert_eq!(corpus.problems[0].concepts, BTreeSet::from([0]));
    }

    #[test]
    fn selection_out_of_vocabulary_detected() {
        let corpus = tiny_corpus();
        let sel = WordSelection::new(["two".to_string(), "ghost".to_string()]);
        assert_eq!(sel.out_of_vocabulary(&corpus), vec!["ghost".to_string()]);
    }
}
