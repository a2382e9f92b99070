//! Per-concept classifiers under heavy class imbalance, and the training
//! regimes that fight it.
//!
//! One small feed-forward network is trained per concept: a trainable
//! embedding layer pooled by token mean, two sigmoid hidden layers, one
//! sigmoid output. The interesting part is the schedule. *Down-sampling*
//! throws the surplus negatives away and trains on a balanced subset.
//! *Negative pre-training* first trains on the surplus negatives alone and
//! uses the result as a warm start for balanced fine-tuning. *One-shot*
//! pre-training warm-starts on balanced classification bags of other
//! concepts. A word-selection filter may shrink the vocabulary to
//! subject-related tokens in any regime.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::WordVectorTable;
use crate::corpus::{Corpus, Problem, WordSelection};
use crate::error::{Error, Result};

/// Token → embedding-row index for the classifier input.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Sorted unique corpus tokens, optionally restricted to a selection.
    pub fn from_corpus(corpus: &Corpus, selection: Option<&WordSelection>) -> Self {
        let mut tokens: Vec<String> = corpus
            .word_freq
            .keys()
            .filter(|t| selection.map_or(true, |s| s.contains(t)))
            .cloned()
            .collect();
        tokens.sort();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Embedding-row indices of a problem's kept tokens (selection filter first,
/// then vocabulary lookup). Duplicate tokens keep their multiplicity.
pub fn problem_token_ids(
    problem: &Problem,
    vocab: &Vocabulary,
    selection: Option<&WordSelection>,
) -> Vec<usize> {
    problem
        .words
        .iter()
        .filter(|w| selection.map_or(true, |s| s.contains(w)))
        .filter_map(|w| vocab.lookup(w))
        .collect()
}

/// Classifier shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpConfig {
    pub embed_dim: usize,
    pub hidden: (usize, usize),
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            embed_dim: 300,
            hidden: (60, 60),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable binary cross-entropy on the pre-sigmoid logit.
fn bce_from_logit(z: f64, target: f64) -> f64 {
    z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()
}

/// The per-concept classifier: trainable embedding layer pooled by token
/// mean, two sigmoid hidden layers, sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub embedding: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array1<f64>,
    pub b3: f64,
}

/// Gradients of the loss with respect to every parameter, same shapes as the
/// classifier fields.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub embedding: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array1<f64>,
    pub b3: f64,
}

struct ForwardParts {
    pooled: Array1<f64>,
    a1: Array1<f64>,
    a2: Array1<f64>,
    logit: f64,
}

impl MlpClassifier {
    /// Seeded init. Embedding rows come from the word-vector table where the
    /// token is present; all other rows are uniform in `[-1, 1]`. Hidden
    /// weights are uniform in `±1/√fan_in` so pooled inputs cannot saturate
    /// the sigmoids at the start.
    pub fn new(
        vocab: &Vocabulary,
        table: Option<&WordVectorTable>,
        config: &MlpConfig,
        seed: u64,
    ) -> Result<Self> {
        let m = config.embed_dim;
        let (h1, h2) = config.hidden;
        if m == 0 || h1 == 0 || h2 == 0 {
            return Err(Error::InvalidConfig(
                "embedding and hidden dimensions must be positive".into(),
            ));
        }
        if let Some(t) = table {
            if t.dim != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: t.dim,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut embedding = Array2::zeros((vocab.len(), m));
        for (i, token) in vocab.tokens().iter().enumerate() {
            match table.and_then(|t| t.stored(token)) {
                Some(row) => embedding.row_mut(i).assign(&Array1::from_iter(row.iter().copied())),
                None => {
                    for v in embedding.row_mut(i).iter_mut() {
                        *v = rng.random_range(-1.0..1.0);
                    }
                }
            }
        }
        let mut uniform = |rows: usize, cols: usize| {
            let s = 1.0 / (rows as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-s..s))
        };
        let w1 = uniform(m, h1);
        let w2 = uniform(h1, h2);
        let s3 = 1.0 / (h2 as f64).sqrt();
        let w3 = Array1::from_shape_fn(h2, |_| rng.random_range(-s3..s3));
        Ok(MlpClassifier {
            embedding,
            w1,
            b1: Array1::zeros(h1),
            w2,
            b2: Array1::zeros(h2),
            w3,
            b3: 0.0,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.ncols()
    }

    /// Mean of the embedding rows of the kept tokens. An empty token list
    /// yields the zero vector, flagged.
    pub fn problem_to_input(&self, token_ids: &[usize]) -> (Array1<f64>, bool) {
        let mut pooled = Array1::zeros(self.embed_dim());
        if token_ids.is_empty() {
            return (pooled, true);
        }
        for &t in token_ids {
            pooled += &self.embedding.row(t);
        }
        pooled /= token_ids.len() as f64;
        (pooled, false)
    }

    fn forward(&self, token_ids: &[usize]) -> ForwardParts {
        let (pooled, _) = self.problem_to_input(token_ids);
        let a1 = (pooled.dot(&self.w1) + &self.b1).mapv(sigmoid);
        let a2 = (a1.dot(&self.w2) + &self.b2).mapv(sigmoid);
        let logit = a2.dot(&self.w3) + self.b3;
        ForwardParts {
            pooled,
            a1,
            a2,
            logit,
        }
    }

    /// Sigmoid output in (0, 1).
    pub fn predict(&self, token_ids: &[usize]) -> f64 {
        sigmoid(self.forward(token_ids).logit)
    }

    /// Binary cross-entropy against a 0/1 target.
    pub fn loss(&self, token_ids: &[usize], target: f64) -> f64 {
        bce_from_logit(self.forward(token_ids).logit, target)
    }

    /// Loss plus analytic gradients for every parameter.
    pub fn loss_and_gradients(&self, token_ids: &[usize], target: f64) -> (f64, MlpGradients) {
        let parts = self.forward(token_ids);
        let loss = bce_from_logit(parts.logit, target);
        let dz = sigmoid(parts.logit) - target;

        let gw3 = &parts.a2 * dz;
        let da2 = &self.w3 * dz;
        let d2 = &da2 * &parts.a2 * &(1.0 - &parts.a2);

        let mut gw2 = Array2::zeros(self.w2.dim());
        for i in 0..self.w2.nrows() {
            for j in 0..self.w2.ncols() {
                gw2[[i, j]] = parts.a1[i] * d2[j];
            }
        }
        let da1 = self.w2.dot(&d2);
        let d1 = &da1 * &parts.a1 * &(1.0 - &parts.a1);

        let mut gw1 = Array2::zeros(self.w1.dim());
        for i in 0..self.w1.nrows() {
            for j in 0..self.w1.ncols() {
                gw1[[i, j]] = parts.pooled[i] * d1[j];
            }
        }
        let dx = self.w1.dot(&d1);

        let mut gemb = Array2::zeros(self.embedding.dim());
        if !token_ids.is_empty() {
            let scale = 1.0 / token_ids.len() as f64;
            for &t in token_ids {
                let mut row = gemb.row_mut(t);
                for (g, &d) in row.iter_mut().zip(dx.iter()) {
                    *g += scale * d;
                }
            }
        }

        (
            loss,
            MlpGradients {
                embedding: gemb,
                w1: gw1,
                b1: d1,
                w2: gw2,
                b2: d2,
                w3: gw3,
                b3: dz,
            },
        )
    }

    /// One SGD step on a single example, updating only the touched embedding
    /// rows.
    fn sgd_step(&mut self, token_ids: &[usize], target: f64, lr: f64) {
        let parts = self.forward(token_ids);
        let dz = sigmoid(parts.logit) - target;

        let da2 = &self.w3 * dz;
        let d2 = &da2 * &parts.a2 * &(1.0 - &parts.a2);
        let da1 = self.w2.dot(&d2);
        let d1 = &da1 * &parts.a1 * &(1.0 - &parts.a1);
        let dx = self.w1.dot(&d1);

        for (w, &a) in self.w3.iter_mut().zip(parts.a2.iter()) {
            *w -= lr * a * dz;
        }
        self.b3 -= lr * dz;
        for i in 0..self.w2.nrows() {
            let ai = parts.a1[i];
            let mut row = self.w2.row_mut(i);
            for (w, &d) in row.iter_mut().zip(d2.iter()) {
                *w -= lr * ai * d;
            }
        }
        for (b, &d) in self.b2.iter_mut().zip(d2.iter()) {
            *b -= lr * d;
        }
        for i in 0..self.w1.nrows() {
            let xi = parts.pooled[i];
            let mut row = self.w1.row_mut(i);
            for (w, &d) in row.iter_mut().zip(d1.iter()) {
                *w -= lr * xi * d;
            }
        }
        for (b, &d) in self.b1.iter_mut().zip(d1.iter()) {
            *b -= lr * d;
        }
        if !token_ids.is_empty() {
            let scale = lr / token_ids.len() as f64;
            for &t in token_ids {
                let mut row = self.embedding.row_mut(t);
                for (e, &d) in row.iter_mut().zip(dx.iter()) {
                    *e -= scale * d;
                }
            }
        }
    }
}

/// Epochs and learning rate of one training phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

/// Default pre-training phase.
pub const PRETRAIN_PHASE: PhaseConfig = PhaseConfig {
    epochs: 50,
    learning_rate: 0.05,
};

/// Default balanced fine-tuning phase.
pub const FINETUNE_PHASE: PhaseConfig = PhaseConfig {
    epochs: 200,
    learning_rate: 0.05,
};

fn train_epochs(
    model: &mut MlpClassifier,
    samples: &[(&[usize], f64)],
    phase: &PhaseConfig,
    rng: &mut ChaCha8Rng,
) {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..phase.epochs {
        order.shuffle(rng);
        for &i in &order {
            let (ids, target) = samples[i];
            model.sgd_step(ids, target, phase.learning_rate);
        }
    }
}

/// Phase one of negative pre-training: fit the surplus negatives alone (all
/// targets zero); the result is the warm start for balanced fine-tuning.
pub fn pretrain_negative(
    model: &mut MlpClassifier,
    negatives: &[&[usize]],
    phase: &PhaseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if negatives.is_empty() {
        return Err(Error::InvalidConfig(
            "negative pre-training needs at least one negative sample".into(),
        ));
    }
    let samples: Vec<(&[usize], f64)> = negatives.iter().map(|ids| (*ids, 0.0)).collect();
    train_epochs(model, &samples, phase, rng);
    Ok(())
}

/// Transfer warm start: train sequentially on balanced classification bags of
/// concepts other than the one of interest.
pub fn pretrain_oneshot(
    model: &mut MlpClassifier,
    bags: &[Vec<(&[usize], f64)>],
    phase: &PhaseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if bags.is_empty() {
        return Err(Error::InvalidConfig(
            "one-shot pre-training needs at least one bag".into(),
        ));
    }
    for bag in bags {
        train_epochs(model, bag, phase, rng);
    }
    Ok(())
}

/// Final phase of every regime: train on a balanced mixture of positives and
/// negatives.
pub fn train_balanced(
    model: &mut MlpClassifier,
    positives: &[&[usize]],
    negatives: &[&[usize]],
    phase: &PhaseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if positives.is_empty() || positives.len() != negatives.len() {
        return Err(Error::InvalidConfig(format!(
            "balanced training needs equal nonempty sets, got {} positives and {} negatives",
            positives.len(),
            negatives.len()
        )));
    }
    let mut samples: Vec<(&[usize], f64)> = Vec::with_capacity(2 * positives.len());
    samples.extend(positives.iter().map(|ids| (*ids, 1.0)));
    samples.extend(negatives.iter().map(|ids| (*ids, 0.0)));
    train_epochs(model, &samples, phase, rng);
    Ok(())
}

/// False-negative and false-positive ratios on one test set; a ratio whose
/// denominator is empty is reported as absent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FnFp {
    pub fn_ratio: Option<f64>,
    pub fp_ratio: Option<f64>,
}

/// Score a classifier on labeled test samples. A sample is predicted positive
/// when the output exceeds `threshold`.
pub fn evaluate_fnfp(
    model: &MlpClassifier,
    test: &[(&[usize], bool)],
    threshold: f64,
) -> FnFp {
    let mut positives = 0usize;
    let mut negatives = 0usize;
    let mut missed = 0usize;
    let mut false_alarms = 0usize;
    for (ids, label) in test {
        let predicted_positive = model.predict(ids) > threshold;
        if *label {
            positives += 1;
            if !predicted_positive {
                missed += 1;
            }
        } else {
            negatives += 1;
            if predicted_positive {
                false_alarms += 1;
            }
        }
    }
    FnFp {
        fn_ratio: (positives > 0).then(|| missed as f64 / positives as f64),
        fp_ratio: (negatives > 0).then(|| false_alarms as f64 / negatives as f64),
    }
}

/// Which warm start precedes balanced fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pretraining {
    /// Plain down-sampling: no warm start.
    None,
    Negative,
    OneShot,
    /// One-shot bags first, then the negative phase.
    OneShotThenNegative,
}

/// A full training recipe: warm-start choice, word selection, per-phase
/// epochs and learning rates, and the seed all round randomness derives from.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub pretraining: Pretraining,
    pub word_selection: bool,
    pub pretrain_phase: PhaseConfig,
    pub finetune_phase: PhaseConfig,
    pub seed: u64,
}

impl Regime {
    pub fn new(pretraining: Pretraining, word_selection: bool, seed: u64) -> Self {
        Regime {
            pretraining,
            word_selection,
            pretrain_phase: PRETRAIN_PHASE,
            finetune_phase: FINETUNE_PHASE,
            seed,
        }
    }

    /// Parse a preset name: `+`-separated parts out of `down-sampling`,
    /// `negative`, `one-shot`, and `word-selection`.
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        let mut down_sampling = false;
        let mut negative = false;
        let mut one_shot = false;
        let mut word_selection = false;
        for part in name.split('+').map(str::trim) {
            match part {
                "down-sampling" => down_sampling = true,
                "negative" => negative = true,
                "one-shot" => one_shot = true,
                "word-selection" => word_selection = true,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown regime component `{other}`"
                    )))
                }
            }
        }
        if down_sampling && (negative || one_shot) {
            return Err(Error::InvalidConfig(
                "down-sampling excludes pre-training components".into(),
            ));
        }
        if !(down_sampling || negative || one_shot) {
            return Err(Error::InvalidConfig(format!(
                "regime `{name}` names no training scheme"
            )));
        }
        let pretraining = match (one_shot, negative) {
            (false, false) => Pretraining::None,
            (false, true) => Pretraining::Negative,
            (true, false) => Pretraining::OneShot,
            (true, true) => Pretraining::OneShotThenNegative,
        };
        Ok(Regime::new(pretraining, word_selection, seed))
    }

    pub fn name(&self) -> String {
        let base = match self.pretraining {
            Pretraining::None => "down-sampling",
            Pretraining::Negative => "negative",
            Pretraining::OneShot => "one-shot",
            Pretraining::OneShotThenNegative => "one-shot+negative",
        };
        if self.word_selection {
            format!("word-selection+{base}")
        } else {
            base.to_string()
        }
    }
}

/// One round's data split for a concept, as problem indices into the corpus.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub concept: usize,
    /// Training positives (P_i minus the held-out ones).
    pub train_positives: Vec<usize>,
    /// Balanced negatives, same cardinality as `train_positives`.
    pub balanced_negatives: Vec<usize>,
    /// Remaining training-pool negatives, used by negative pre-training.
    pub surplus_negatives: Vec<usize>,
    /// Held-out (problem index, is-positive) pairs.
    pub test: Vec<(usize, bool)>,
    pub seed: u64,
}

/// Draw one split from a dedicated seed.
pub fn make_split(
    corpus: &Corpus,
    concept: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_split_with_rng(corpus, concept, test_fraction, seed, &mut rng)
}

fn make_split_with_rng(
    corpus: &Corpus,
    concept: usize,
    test_fraction: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<SplitSpec> {
    if concept >= corpus.n_concepts() {
        return Err(Error::IndexOutOfRange {
            index: concept,
            size: corpus.n_concepts(),
        });
    }
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut positives: Vec<usize> = Vec::new();
    let mut negatives: Vec<usize> = Vec::new();
    for (i, p) in corpus.problems.iter().enumerate() {
        if p.concepts.contains(&concept) {
            positives.push(i);
        } else {
            negatives.push(i);
        }
    }
    if positives.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "concept {concept} has {} positives; at least 2 are needed to split",
            positives.len()
        )));
    }
    positives.shuffle(rng);
    negatives.shuffle(rng);

    let test_pos = ((positives.len() as f64 * test_fraction).round() as usize)
        .clamp(1, positives.len() - 1);
    let test_neg = ((negatives.len() as f64 * test_fraction).round() as usize)
        .min(negatives.len().saturating_sub(1));

    let (held_pos, train_pos) = positives.split_at(test_pos);
    let (held_neg, pool_neg) = negatives.split_at(test_neg);
    if pool_neg.len() < train_pos.len() {
        return Err(Error::InvalidConfig(format!(
            "concept {concept}: only {} training negatives for {} positives",
            pool_neg.len(),
            train_pos.len()
        )));
    }
    let (balanced, surplus) = pool_neg.split_at(train_pos.len());

    let mut test: Vec<(usize, bool)> = held_pos.iter().map(|&i| (i, true)).collect();
    test.extend(held_neg.iter().map(|&i| (i, false)));

    Ok(SplitSpec {
        concept,
        train_positives: train_pos.to_vec(),
        balanced_negatives: balanced.to_vec(),
        surplus_negatives: surplus.to_vec(),
        test,
        seed,
    })
}

/// Cross-validation parameters shared by every regime run.
#[derive(Debug, Clone, Copy)]
pub struct RoundsConfig {
    pub rounds: usize,
    pub test_fraction: f64,
    pub threshold: f64,
    pub mlp: MlpConfig,
}

impl Default for RoundsConfig {
    fn default() -> Self {
        RoundsConfig {
            rounds: 100,
            test_fraction: 0.25,
            threshold: 0.5,
            mlp: MlpConfig::default(),
        }
    }
}

/// Mean FN/FP ratios over all rounds, with the full per-round trace retained.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FnFpResult {
    pub fn_ratio: Option<f64>,
    pub fp_ratio: Option<f64>,
    pub rounds: usize,
    pub per_round: Vec<FnFp>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Everything needed to run rounds for one corpus: the vocabulary and
/// token-id index under a fixed selection choice.
struct IndexedCorpus {
    token_ids: Vec<Vec<usize>>,
    vocab: Vocabulary,
}

impl IndexedCorpus {
    fn build(corpus: &Corpus, selection: Option<&WordSelection>) -> Self {
        let vocab = Vocabulary::from_corpus(corpus, selection);
        let token_ids = corpus
            .problems
            .iter()
            .map(|p| problem_token_ids(p, &vocab, selection))
            .collect();
        IndexedCorpus { token_ids, vocab }
    }
}

/// Run one cross-validation round: split, build, pre-train per the regime,
/// fine-tune balanced, evaluate. Exposed so tests can replay single rounds.
pub fn run_round(
    corpus: &Corpus,
    concept: usize,
    regime: &Regime,
    table: Option<&WordVectorTable>,
    cfg: &RoundsConfig,
    selection: Option<&WordSelection>,
    round: u64,
) -> Result<FnFp> {
    let sel = if regime.word_selection {
        Some(selection.ok_or_else(|| {
            Error::InvalidConfig("regime requires a word-selection list".into())
        })?)
    } else {
        None
    };
    let indexed = IndexedCorpus::build(corpus, sel);
    run_round_indexed(corpus, &indexed, concept, regime, table, cfg, round)
}

fn run_round_indexed(
    corpus: &Corpus,
    indexed: &IndexedCorpus,
    concept: usize,
    regime: &Regime,
    table: Option<&WordVectorTable>,
    cfg: &RoundsConfig,
    round: u64,
) -> Result<FnFp> {
    let mut rng = ChaCha8Rng::seed_from_u64(regime.seed);
    rng.set_stream(round + 1);

    let split = make_split_with_rng(corpus, concept, cfg.test_fraction, regime.seed, &mut rng)?;
    let model_seed: u64 = rng.random();
    let mut model = MlpClassifier::new(&indexed.vocab, table, &cfg.mlp, model_seed)?;

    let ids_of = |list: &[usize]| -> Vec<&[usize]> {
        list.iter().map(|&i| indexed.token_ids[i].as_slice()).collect()
    };

    match regime.pretraining {
        Pretraining::None => {}
        Pretraining::Negative => {
            let surplus = ids_of(&split.surplus_negatives);
            pretrain_negative(&mut model, &surplus, &regime.pretrain_phase, &mut rng)?;
        }
        Pretraining::OneShot => {
            let bags = oneshot_bags(corpus, indexed, &split, &mut rng)?;
            pretrain_oneshot(&mut model, &bags, &regime.pretrain_phase, &mut rng)?;
        }
        Pretraining::OneShotThenNegative => {
            let bags = oneshot_bags(corpus, indexed, &split, &mut rng)?;
            pretrain_oneshot(&mut model, &bags, &regime.pretrain_phase, &mut rng)?;
            let surplus = ids_of(&split.surplus_negatives);
            pretrain_negative(&mut model, &surplus, &regime.pretrain_phase, &mut rng)?;
        }
    }

    let positives = ids_of(&split.train_positives);
    let negatives = ids_of(&split.balanced_negatives);
    train_balanced(&mut model, &positives, &negatives, &regime.finetune_phase, &mut rng)?;

    let test: Vec<(&[usize], bool)> = split
        .test
        .iter()
        .map(|&(i, label)| (indexed.token_ids[i].as_slice(), label))
        .collect();
    Ok(evaluate_fnfp(&model, &test, cfg.threshold))
}

/// Balanced bags `P_j ∪ N̄_j` for every concept j other than the target,
/// drawn from problems outside the round's test set.
fn oneshot_bags<'a>(
    corpus: &Corpus,
    indexed: &'a IndexedCorpus,
    split: &SplitSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<(&'a [usize], f64)>>> {
    let held_out: Vec<bool> = {
        let mut mask = vec![false; corpus.problems.len()];
        for &(i, _) in &split.test {
            mask[i] = true;
        }
        mask
    };
    let mut bags = Vec::new();
    for j in 0..corpus.n_concepts() {
        if j == split.concept {
            continue;
        }
        let mut pos: Vec<usize> = Vec::new();
        let mut neg: Vec<usize> = Vec::new();
        for (i, p) in corpus.problems.iter().enumerate() {
            if held_out[i] {
                continue;
            }
            if p.concepts.contains(&j) {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        if pos.is_empty() || neg.len() < pos.len() {
            continue;
        }
        neg.shuffle(rng);
        neg.truncate(pos.len());
        let mut bag: Vec<(&[usize], f64)> = Vec::with_capacity(2 * pos.len());
        bag.extend(pos.iter().map(|&i| (indexed.token_ids[i].as_slice(), 1.0)));
        bag.extend(neg.iter().map(|&i| (indexed.token_ids[i].as_slice(), 0.0)));
        bags.push(bag);
    }
    if bags.is_empty() {
        return Err(Error::InvalidConfig(
            "no other concepts available for one-shot pre-training".into(),
        ));
    }
    Ok(bags)
}

/// Multi-round cross validation of one regime on one concept. Each round
/// draws a fresh split and model from a round-derived seed; the reported
/// ratios are arithmetic means over the rounds.
pub fn run_rounds(
    corpus: &Corpus,
    concept: usize,
    regime: &Regime,
    table: Option<&WordVectorTable>,
    cfg: &RoundsConfig,
    selection: Option<&WordSelection>,
) -> Result<FnFpResult> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be positive".into()));
    }
    let sel = if regime.word_selection {
        Some(selection.ok_or_else(|| {
            Error::InvalidConfig("regime requires a word-selection list".into())
        })?)
    } else {
        None
    };
    let indexed = IndexedCorpus::build(corpus, sel);
    let mut per_round = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        per_round.push(run_round_indexed(
            corpus,
            &indexed,
            concept,
            regime,
            table,
            cfg,
            round as u64,
        )?);
    }
    Ok(FnFpResult {
        fn_ratio: mean_defined(per_round.iter().map(|r| r.fn_ratio)),
        fp_ratio: mean_defined(per_round.iter().map(|r| r.fp_ratio)),
        rounds: cfg.rounds,
        per_round,
    })
}

/// FN/FP per (regime, concept).
pub fn regime_comparison(
    corpus: &Corpus,
    concepts: &[usize],
    regimes: &[Regime],
    table: Option<&WordVectorTable>,
    cfg: &RoundsConfig,
    selection: Option<&WordSelection>,
) -> Result<Vec<Vec<FnFpResult>>> {
    regimes
        .iter()
        .map(|regime| {
            concepts
                .iter()
                .map(|&c| run_rounds(corpus, c, regime, table, cfg, selection))
                .collect()
        })
        .collect()
}

fn percent(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}%", x * 100.0),
        None => "-".to_string(),
    }
}

/// Aligned text table of a regime comparison: two rows (FN, FP) per regime,
/// one column per concept.
pub fn render_comparison_table(
    regimes: &[Regime],
    concept_names: &[String],
    matrix: &[Vec<FnFpResult>],
) -> String {
    let name_width = regimes
        .iter()
        .map(|r| r.name().len())
        .max()
        .unwrap_or(6)
        .max("regime".len());
    let col_width = concept_names.iter().map(|n| n.len()).max().unwrap_or(6).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:name_width$}  metric", "regime");
    for name in concept_names {
        let _ = write!(out, "  {name:>col_width$}");
    }
    let _ = writeln!(out);
    for (regime, row) in regimes.iter().zip(matrix.iter()) {
        let _ = write!(out, "{:name_width$}  FN    ", regime.name());
        for cell in row {
            let _ = write!(out, "  {:>col_width$}", percent(cell.fn_ratio));
        }
        let _ = writeln!(out);
        let _ = write!(out, "{:name_width$}  FP    ", "");
        for cell in row {
            let _ = write!(out, "  {:>col_width$}", percent(cell.fp_ratio));
        }
        let _ = writeln!(out);
    }
    out
}
