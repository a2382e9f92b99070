//! Seeded synthetic corpora for desk-scale testing.
//!
//! Two generators:
//!
//! * [`generate_synthetic_corpus`] plants concept clusters: every problem's
//!   concepts come from a single cluster, so intra-cluster concepts co-occur
//!   and inter-cluster concepts never do. Each concept leaves a textual
//!   footprint that is a distinct *ordering* of one shared marker word set,
//!   so regex rules can recover concepts from raw text while the token
//!   multiset carries no concept information at all — wording is decorrelated
//!   from concept structure by construction.
//! * [`generate_imbalanced_corpus`] plants one rare target concept with a
//!   separable token signal inside label-free noise wording, plus auxiliary
//!   concepts for transfer pre-training.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::WordVectorTable;
use crate::corpus::{ConceptDictionary, ConceptRule, Corpus, Problem, WordSelection};
use crate::error::{Error, Result};
use crate::triplet_eval::Triplet;

/// Words whose orderings encode concept identities. Disjoint from the filler
/// vocabulary.
const MARKER_ALPHABET: [&str; 7] = ["zeta", "eta", "theta", "iota", "kappa", "lambda", "sigma"];

/// Concept-free filler wording.
const FILLER_WORDS: [&str; 40] = [
    "consider", "compute", "suppose", "random", "variable", "value", "coin", "dice", "draw",
    "urn", "ball", "red", "blue", "green", "number", "total", "find", "chance", "event", "trial",
    "player", "game", "round", "card", "deck", "pick", "first", "second", "third", "result",
    "outcome", "fair", "biased", "independent", "given", "observed", "sample", "least", "most",
    "exactly",
];

/// Shape of a planted-cluster corpus.
#[derive(Debug, Clone)]
pub struct ClusterSpec {
    /// Concepts per cluster; must sum to the requested concept count.
    pub cluster_sizes: Vec<usize>,
    /// Ground-truth triplets to generate alongside the corpus.
    pub n_triplets: usize,
    /// Inclusive range of concepts planted per problem (capped by cluster size).
    pub concepts_per_problem: (usize, usize),
    /// Inclusive range of filler tokens per problem.
    pub fillers_per_problem: (usize, usize),
}

impl ClusterSpec {
    pub fn new(cluster_sizes: Vec<usize>, n_triplets: usize) -> Self {
        ClusterSpec {
            cluster_sizes,
            n_triplets,
            concepts_per_problem: (2, 3),
            fillers_per_problem: (25, 35),
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

/// Lexicographically `n`-th permutation of `items` (Lehmer decode).
fn nth_permutation(items: &[&str], mut n: usize) -> Vec<String> {
    let mut pool: Vec<&str> = items.to_vec();
    let mut out = Vec::with_capacity(items.len());
    for i in (0..items.len()).rev() {
        let f = factorial(i);
        out.push(pool.remove(n / f).to_string());
        n %= f;
    }
    out
}

fn concept_name(i: usize, n_concepts: usize) -> String {
    let width = (n_concepts.saturating_sub(1)).to_string().len().max(2);
    format!("c{i:0width$}")
}

/// Marker word sequence identifying concept `i` out of `n_concepts`.
fn marker_sequence(i: usize, n_concepts: usize) -> Result<Vec<String>> {
    let m = (3..=MARKER_ALPHABET.len())
        .find(|&m| factorial(m) >= n_concepts)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "too many concepts ({n_concepts}) for marker alphabet"
            ))
        })?;
    Ok(nth_permutation(&MARKER_ALPHABET[..m], i))
}

/// Extraction rules recovering the planted concepts of a synthetic corpus:
/// one rule per concept, matching its marker word sequence.
pub fn marker_rules(n_concepts: usize) -> Result<Vec<ConceptRule>> {
    (0..n_concepts)
        .map(|i| {
            let seq = marker_sequence(i, n_concepts)?;
            Ok(ConceptRule {
                concept: concept_name(i, n_concepts),
                patterns: vec![format!(r"\b{}\b", seq.join(r"\s+"))],
            })
        })
        .collect()
}

/// Generate a planted-cluster corpus and matching ground-truth triplets.
///
/// Every problem's concepts lie inside one cluster. Triplet (A, B, C) always
/// satisfies |concepts(A) ∩ concepts(B)| > |concepts(A) ∩ concepts(C)|: B
/// shares at least one concept with A, C comes from a different cluster.
/// Deterministic given the seed.
pub fn generate_synthetic_corpus(
    n_concepts: usize,
    n_problems: usize,
    spec: &ClusterSpec,
    seed: u64,
) -> Result<(Corpus, Vec<Triplet>)> {
    if n_concepts < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 concepts, got {n_concepts}"
        )));
    }
    if n_problems < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 problems, got {n_problems}"
        )));
    }
    if spec.cluster_sizes.is_empty() || spec.cluster_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidConfig("cluster sizes must be positive".into()));
    }
    if spec.cluster_sizes.iter().sum::<usize>() != n_concepts {
        return Err(Error::InvalidConfig(format!(
            "cluster sizes sum to {}, expected {n_concepts}",
            spec.cluster_sizes.iter().sum::<usize>()
        )));
    }
    let (k_min, k_max) = spec.concepts_per_problem;
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidConfig(
            "concepts_per_problem range must be nonempty and positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let markers: Vec<Vec<String>> = (0..n_concepts)
        .map(|i| marker_sequence(i, n_concepts))
        .collect::<Result<_>>()?;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    for &size in &spec.cluster_sizes {
        clusters.push((next..next + size).collect());
        next += size;
    }

    let id_width = (n_problems - 1).to_string().len().max(3);
    let mut problems = Vec::with_capacity(n_problems);
    let mut problem_cluster = Vec::with_capacity(n_problems);
    for p in 0..n_problems {
        let cluster = p % clusters.len();
        problem_cluster.push(cluster);
        let members = &clusters[cluster];
        let k_hi = k_max.min(members.len());
        let k_lo = k_min.min(k_hi);
        let k = rng.random_range(k_lo..=k_hi);
        let chosen: BTreeSet<usize> = members
            .choose_multiple(&mut rng, k)
            .copied()
            .collect();

        // Interleave marker sequences with at least one filler between them
        // so sequences never touch and cannot fake another concept's rule.
        let f = rng
            .random_range(spec.fillers_per_problem.0..=spec.fillers_per_problem.1)
            .max(k + 1);
        let mut chunk_sizes = vec![1usize; k + 1];
        for _ in 0..f - (k + 1) {
            let slot = rng.random_range(0..chunk_sizes.len());
            chunk_sizes[slot] += 1;
        }
        let mut order: Vec<usize> = chosen.iter().copied().collect();
        order.shuffle(&mut rng);

        let mut tokens: Vec<&str> = Vec::new();
        for (slot, &size) in chunk_sizes.iter().enumerate() {
            for _ in 0..size {
                tokens.push(FILLER_WORDS.choose(&mut rng).unwrap());
            }
            if slot < k {
                for w in &markers[order[slot]] {
                    tokens.push(w.as_str());
                }
            }
        }

        let mut problem = Problem::new(
            format!("p{p:0id_width$}"),
            tokens.join(" "),
        );
        problem.concepts = chosen;
        problems.push(problem);
    }

    let names = (0..n_concepts).map(|i| concept_name(i, n_concepts)).collect();
    let dictionary = ConceptDictionary::new(names)?;
    let corpus = Corpus::from_problems(problems, dictionary)?;

    let mut triplets = Vec::with_capacity(spec.n_triplets);
    let mut attempts = 0usize;
    while triplets.len() < spec.n_triplets {
        attempts += 1;
        if attempts > 10_000 * spec.n_triplets.max(1) {
            return Err(Error::InvalidConfig(
                "cluster structure too sparse to generate the requested triplets".into(),
            ));
        }
        let a = rng.random_range(0..n_problems);
        let b_candidates: Vec<usize> = (0..n_problems)
            .filter(|&b| {
                b != a
                    && problem_cluster[b] == problem_cluster[a]
                    && !corpus.problems[a]
                        .concepts
                        .is_disjoint(&corpus.problems[b].concepts)
            })
            .collect();
        let c_candidates: Vec<usize> = (0..n_problems)
            .filter(|&c| problem_cluster[c] != problem_cluster[a])
            .collect();
        let (Some(&b), Some(&c)) = (b_candidates.choose(&mut rng), c_candidates.choose(&mut rng))
        else {
            continue;
        };
        triplets.push(Triplet::new(
            corpus.problems[a].id.clone(),
            corpus.problems[b].id.clone(),
            corpus.problems[c].id.clone(),
        )?);
    }

    Ok((corpus, triplets))
}

/// Shape of the imbalanced concept-classification task.
#[derive(Debug, Clone)]
pub struct ImbalancedSpec {
    /// Problems carrying the rare target concept.
    pub target_positives: usize,
    /// Problems without it.
    pub negatives: usize,
    /// Other concepts available for transfer pre-training bags.
    pub aux_concepts: usize,
    /// Probability that any problem carries a given auxiliary concept.
    pub aux_positive_rate: f64,
    /// Signal words per concept; every positive for a concept contains all of
    /// them, every negative none of them.
    pub signal_tokens: usize,
    /// Inclusive range of noise tokens per problem.
    pub fillers_per_problem: (usize, usize),
    /// Size of the label-free noise vocabulary.
    pub noise_vocab: usize,
    /// The noise vocabulary splits into this many disjoint topics; each
    /// problem draws all its noise tokens from a single topic. Topics give
    /// the negative class a multi-modal structure that a handful of balanced
    /// negatives cannot cover.
    pub noise_topics: usize,
}

impl Default for ImbalancedSpec {
    fn default() -> Self {
        ImbalancedSpec {
            target_positives: 12,
            negatives: 600,
            aux_concepts: 4,
            aux_positive_rate: 0.03,
            signal_tokens: 8,
            fillers_per_problem: (3, 6),
            noise_vocab: 180,
            noise_topics: 18,
        }
    }
}

/// Name of the rare concept planted by [`generate_imbalanced_corpus`].
pub const IMBALANCED_TARGET: &str = "target";

fn signal_words(concept: &str, spec: &ImbalancedSpec) -> Vec<String> {
    (0..spec.signal_tokens)
        .map(|k| format!("sig{concept}{k}"))
        .collect()
}

/// The subject-related keyword list for the imbalanced task: every concept's
/// signal words plus a couple of words per noise topic, so that selected
/// negatives still carry content. Used by selection-enabled training regimes.
pub fn imbalanced_selection(spec: &ImbalancedSpec) -> WordSelection {
    let mut keep = Vec::new();
    keep.extend(signal_words(IMBALANCED_TARGET, spec));
    for j in 0..spec.aux_concepts {
        keep.extend(signal_words(&format!("aux{j}"), spec));
    }
    let topic_size = spec.noise_vocab / spec.noise_topics.max(1);
    for t in 0..spec.noise_topics {
        for k in 0..topic_size.min(2) {
            keep.push(format!("noise{:03}", t * topic_size + k));
        }
    }
    WordSelection::new(keep)
}

/// Structured word vectors for the imbalanced task, standing in for a
/// pretrained table: words of one noise topic cluster around a shared topic
/// direction, and each concept's signal words cluster around a concept
/// direction. Used to initialize the classifier's embedding layer so that
/// inputs carry usable structure from the start, the way a pretrained table
/// would.
pub fn imbalanced_word_table(spec: &ImbalancedSpec, dim: usize, seed: u64) -> WordVectorTable {
    use crate::baselines::OovPolicy;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direction = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let jitter = 0.35;
    let mut table = WordVectorTable::new(dim, OovPolicy::Skip);
    let add_cluster =
        |rng: &mut ChaCha8Rng, table: &mut WordVectorTable, center: &[f64], words: &[String]| {
            for w in words {
                let v: Vec<f64> = center
                    .iter()
                    .map(|&c| c + jitter * rng.random_range(-1.0..1.0))
                    .collect();
                table.insert(w.clone(), v).expect("dim matches");
            }
        };

    let signal_center = direction(&mut rng);
    let topic_size = spec.noise_vocab / spec.noise_topics.max(1);
    let noise: Vec<String> = (0..spec.noise_vocab).map(|k| format!("noise{k:03}")).collect();
    for t in 0..spec.noise_topics {
        let hi = if t + 1 == spec.noise_topics {
            noise.len()
        } else {
            (t + 1) * topic_size
        };
        let center = direction(&mut rng);
        add_cluster(&mut rng, &mut table, &center, &noise[t * topic_size..hi]);
    }
    add_cluster(
        &mut rng,
        &mut table,
        &signal_center,
        &signal_words(IMBALANCED_TARGET, spec),
    );
    for j in 0..spec.aux_concepts {
        let center = direction(&mut rng);
        add_cluster(
            &mut rng,
            &mut table,
            &center,
            &signal_words(&format!("aux{j}"), spec),
        );
    }
    table
}

/// Generate the annotated imbalanced corpus: `target_positives` problems carry
/// the target concept (its signal words planted in the text), the rest do not;
/// auxiliary concepts are sprinkled independently. All other wording is noise
/// drawn from a label-free vocabulary. Deterministic given the seed.
pub fn generate_imbalanced_corpus(spec: &ImbalancedSpec, seed: u64) -> Result<Corpus> {
    if spec.target_positives < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 target positives".into(),
        ));
    }
    if spec.negatives == 0 || spec.noise_vocab == 0 || spec.signal_tokens == 0 {
        return Err(Error::InvalidConfig(
            "negatives, noise_vocab, and signal_tokens must be positive".into(),
        ));
    }
    if spec.noise_topics == 0 || spec.noise_topics > spec.noise_vocab {
        return Err(Error::InvalidConfig(format!(
            "noise_topics must lie in 1..={}, got {}",
            spec.noise_vocab, spec.noise_topics
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.target_positives + spec.negatives;

    let mut names: Vec<String> = (0..spec.aux_concepts).map(|j| format!("aux{j}")).collect();
    names.push(IMBALANCED_TARGET.to_string());
    names.sort();
    let dictionary = ConceptDictionary::new(names)?;
    let target_idx = dictionary.index_of(IMBALANCED_TARGET).unwrap();

    let noise: Vec<String> = (0..spec.noise_vocab).map(|k| format!("noise{k:03}")).collect();
    let target_signal = signal_words(IMBALANCED_TARGET, spec);
    let aux_signal: Vec<Vec<String>> = (0..spec.aux_concepts)
        .map(|j| signal_words(&format!("aux{j}"), spec))
        .collect();

    // Which problems are target-positive.
    let mut positive_flags = vec![false; n];
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    for &i in indices.iter().take(spec.target_positives) {
        positive_flags[i] = true;
    }

    let topic_size = spec.noise_vocab / spec.noise_topics;
    let id_width = (n - 1).to_string().len().max(3);
    let mut problems = Vec::with_capacity(n);
    for i in 0..n {
        let mut tokens: Vec<String> = Vec::new();
        let topic = rng.random_range(0..spec.noise_topics);
        let pool = if topic + 1 == spec.noise_topics {
            &noise[topic * topic_size..]
        } else {
            &noise[topic * topic_size..(topic + 1) * topic_size]
        };
        let f = rng.random_range(spec.fillers_per_problem.0..=spec.fillers_per_problem.1);
        for _ in 0..f {
            tokens.push(pool.choose(&mut rng).unwrap().clone());
        }
        let mut concepts = BTreeSet::new();
        if positive_flags[i] {
            concepts.insert(target_idx);
            tokens.extend(target_signal.iter().cloned());
        }
        for (j, words) in aux_signal.iter().enumerate() {
            if rng.random_range(0.0..1.0) < spec.aux_positive_rate {
                concepts.insert(dictionary.index_of(&format!("aux{j}")).unwrap());
                tokens.extend(words.iter().cloned());
            }
        }
        tokens.shuffle(&mut rng);
        let mut problem = Problem::new(format!("q{i:0id_width$}"), tokens.join(" "));
        problem.concepts = concepts;
        problems.push(problem);
    }

    Corpus::from_problems(problems, dictionary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_concepts, CompiledRules};

    fn spec_2x3() -> ClusterSpec {
        ClusterSpec::new(vec![3, 3], 20)
    }

    #[test]
    fn same_seed_identical_corpora() {
        let (c1, t1) = generate_synthetic_corpus(6, 30, &spec_2x3(), 7).unwrap();
        let (c2, t2) = generate_synthetic_corpus(6, 30, &spec_2x3(), 7).unwrap();
        assert_eq!(c1.problems, c2.problems);
        assert_eq!(t1, t2);
    }

    #[test]
    fn concepts_stay_within_one_cluster() {
        let (corpus, _) = generate_synthetic_corpus(6, 30, &spec_2x3(), 7).unwrap();
        for p in &corpus.problems {
            let in_first = p.concepts.iter().all(|&c| c < 3);
            let in_second = p.concepts.iter().all(|&c| c >= 3);
            assert!(in_first || in_second, "{}: {:?}", p.id, p.concepts);
            assert!(!p.concepts.is_empty());
        }
    }

    #[test]
    fn triplet_ground_truth_holds() {
        let (corpus, triplets) = generate_synthetic_corpus(6, 30, &spec_2x3(), 7).unwrap();
        assert_eq!(triplets.len(), 20);
        for t in &triplets {
            let a = &corpus.problem(&t.a).unwrap().concepts;
            let b = &corpus.problem(&t.b).unwrap().concepts;
            let c = &corpus.problem(&t.c).unwrap().concepts;
            assert!(a.intersection(b).count() > a.intersection(c).count());
        }
    }

    #[test]
    fn marker_rules_recover_planted_concepts() {
        let (corpus, _) = generate_synthetic_corpus(8, 24, &ClusterSpec::new(vec![4, 4], 5), 11)
            .unwrap();
        let rules = marker_rules(8).unwrap();
        let compiled = CompiledRules::compile(&rules, &corpus.dictionary).unwrap();
        for p in &corpus.problems {
            assert_eq!(extract_concepts(p, &compiled), p.concepts, "{}", p.id);
        }
    }

    #[test]
    fn marker_tokens_carry_no_concept_information() {
        // Each concept's marker is a permutation of the same alphabet prefix,
        // so a problem with k concepts contains exactly k copies of each
        // alphabet word regardless of which concepts they are.
        let (corpus, _) = generate_synthetic_corpus(6, 30, &spec_2x3(), 3).unwrap();
        for p in &corpus.problems {
            let k = p.concepts.len();
            for w in &MARKER_ALPHABET[..3] {
                let count = p.words.iter().filter(|t| t == w).count();
                assert_eq!(count, k, "{}: {w}", p.id);
            }
        }
    }

    #[test]
    fn bad_cluster_sizes_rejected() {
        let err = generate_synthetic_corpus(6, 30, &ClusterSpec::new(vec![3, 4], 5), 7);
        assert!(err.is_err());
    }

    #[test]
    fn too_few_problems_rejected() {
        assert!(generate_synthetic_corpus(6, 0, &spec_2x3(), 7).is_err());
        assert!(generate_synthetic_corpus(6, 2, &spec_2x3(), 7).is_err());
    }

    #[test]
    fn imbalanced_corpus_shape() {
        let spec = ImbalancedSpec::default();
        let corpus = generate_imbalanced_corpus(&spec, 5).unwrap();
        assert_eq!(corpus.problems.len(), 612);
        let target = corpus.dictionary.index_of(IMBALANCED_TARGET).unwrap();
        let positives = corpus
            .problems
            .iter()
            .filter(|p| p.concepts.contains(&target))
            .count();
        assert_eq!(positives, 12);
        // Separable signal: positives carry all signal words, negatives none.
        for p in &corpus.problems {
            let has_signal = p.words.iter().any(|w| w.starts_with("sigtarget"));
            assert_eq!(has_signal, p.concepts.contains(&target), "{}", p.id);
        }
    }

    #[test]
    fn imbalanced_same_seed_identical() {
        let spec = ImbalancedSpec::default();
        let a = generate_imbalanced_corpus(&spec, 9).unwrap();
        let b = generate_imbalanced_corpus(&spec, 9).unwrap();
        assert_eq!(a.problems, b.problems);
    }
}
