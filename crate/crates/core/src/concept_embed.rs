//! Skip-gram concept embedding.
//!
//! Concept co-occurrence inside problems provides the training signal: a
//! one-hidden-layer network with a full softmax output is trained to predict,
//! for an input concept, which other concepts co-occur with it. The rows of
//! the hidden-layer weight matrix are the concept vectors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ConceptDictionary, Corpus};
use crate::error::{Error, Result};
use crate::prob_embed::cosine;

/// One (input concept, output concept) training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub input: usize,
    pub output: usize,
}

/// Emit all ordered pairs of distinct concepts per problem; a problem with
/// concept set `C` contributes `|C|·(|C|−1)` pairs.
pub fn make_pairs(corpus: &Corpus) -> Vec<TrainingPair> {
    let mut pairs = Vec::new();
    for p in &corpus.problems {
        for &a in &p.concepts {
            for &b in &p.concepts {
                if a != b {
                    pairs.push(TrainingPair { input: a, output: b });
                }
            }
        }
    }
    pairs
}

/// Training hyperparameters. `learning_rate` decays linearly to `lr_floor`
/// over all updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub lr_floor: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            dim: 10,
            learning_rate: 0.05,
            lr_floor: 1e-4,
            epochs: 200,
            seed,
            init_scale: 0.5 / 10.0,
        }
    }

    /// Change the embedding dimension, rescaling the default weight
    /// initialization range with it.
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self.init_scale = 0.5 / dim as f64;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0
            || self.epochs == 0
            || self.learning_rate <= 0.0
            || self.lr_floor <= 0.0
            || self.init_scale <= 0.0
        {
            return Err(Error::InvalidConfig(
                "dim, epochs, learning rate, lr floor, and init scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(0)
    }
}

/// Hidden-layer weights `w_in` (N×d; row c is concept c's vector) and output
/// weights `w_out` (d×N).
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramModel {
    w_in: Array2<f64>,
    w_out: Array2<f64>,
    config: TrainConfig,
}

impl SkipGramModel {
    /// Seeded uniform init of both weight matrices in
    /// `[-init_scale, init_scale)`.
    pub fn init(n_concepts: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if n_concepts == 0 {
            return Err(Error::InvalidConfig("need at least one concept".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let s = config.init_scale;
        let d = config.dim;
        let w_in = Array2::from_shape_fn((n_concepts, d), |_| rng.random_range(-s..s));
        let w_out = Array2::from_shape_fn((d, n_concepts), |_| rng.random_range(-s..s));
        Ok(SkipGramModel {
            w_in,
            w_out,
            config: *config,
        })
    }

    /// Wrap hand-set weight matrices (mainly for tests and file loading).
    pub fn from_weights(w_in: Array2<f64>, w_out: Array2<f64>) -> Result<Self> {
        let (n, d) = w_in.dim();
        if w_out.dim() != (d, n) {
            return Err(Error::DimensionMismatch {
                expected: d * n,
                got: w_out.len(),
            });
        }
        if w_in.iter().chain(w_out.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite weight".into()));
        }
        let mut config = TrainConfig::default().with_dim(d);
        config.epochs = 0;
        Ok(SkipGramModel { w_in, w_out, config })
    }

    pub fn n_concepts(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// All concept vectors as an N×d matrix (the hidden-layer weights).
    pub fn concept_vectors(&self) -> &Array2<f64> {
        &self.w_in
    }

    /// Output-layer weights (d×N).
    pub fn output_weights(&self) -> &Array2<f64> {
        &self.w_out
    }

    /// Row `c` of the hidden-layer weight matrix.
    pub fn concept_vector(&self, c: usize) -> Result<Array1<f64>> {
        self.check_index(c)?;
        Ok(self.w_in.row(c).to_owned())
    }

    fn check_index(&self, c: usize) -> Result<()> {
        if c >= self.n_concepts() {
            return Err(Error::IndexOutOfRange {
                index: c,
                size: self.n_concepts(),
            });
        }
        Ok(())
    }

    fn logits(&self, c: usize) -> Array1<f64> {
        self.w_in.row(c).dot(&self.w_out)
    }

    /// Softmax over all concepts for input concept `c`.
    pub fn forward(&self, c: usize) -> Result<Array1<f64>> {
        self.check_index(c)?;
        Ok(softmax(&self.logits(c)))
    }

    /// Cross-entropy loss −log p(output | input) for one pair.
    pub fn pair_loss(&self, pair: &TrainingPair) -> Result<f64> {
        self.check_index(pair.input)?;
        self.check_index(pair.output)?;
        let logits = self.logits(pair.input);
        let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
        Ok(log_sum - logits[pair.output])
    }

    /// Analytic gradients of [`SkipGramModel::pair_loss`] with respect to all
    /// entries of `w_in` and `w_out`.
    pub fn pair_gradients(&self, pair: &TrainingPair) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_index(pair.input)?;
        self.check_index(pair.output)?;
        let mut err = softmax(&self.logits(pair.input));
        err[pair.output] -= 1.0;

        let mut grad_in = Array2::zeros(self.w_in.dim());
        let grad_row = self.w_out.dot(&err);
        grad_in.row_mut(pair.input).assign(&grad_row);

        let hidden = self.w_in.row(pair.input);
        let mut grad_out = Array2::zeros(self.w_out.dim());
        for k in 0..self.dim() {
            for j in 0..self.n_concepts() {
                grad_out[[k, j]] = hidden[k] * err[j];
            }
        }
        Ok((grad_in, grad_out))
    }

    /// Mean pair loss over a pair set.
    pub fn mean_loss(&self, pairs: &[TrainingPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::InvalidConfig("empty pair set".into()));
        }
        let mut total = 0.0;
        for p in pairs {
            total += self.pair_loss(p)?;
        }
        Ok(total / pairs.len() as f64)
    }

    /// One SGD step on a single pair at learning rate `lr`. Both weight
    /// matrices move along the gradient evaluated at the current parameters.
    fn sgd_step(&mut self, pair: &TrainingPair, lr: f64) {
        let mut err = softmax(&self.logits(pair.input));
        err[pair.output] -= 1.0;
        let hidden = self.w_in.row(pair.input).to_owned();
        let grad_row = self.w_out.dot(&err);
        for k in 0..self.dim() {
            let hk = hidden[k];
            let row = &mut self.w_out.row_mut(k);
            for j in 0..err.len() {
                row[j] -= lr * hk * err[j];
            }
        }
        let mut in_row = self.w_in.row_mut(pair.input);
        for k in 0..grad_row.len() {
            in_row[k] -= lr * grad_row[k];
        }
    }

    /// The `k` concepts most similar to `c` (excluding `c`), sorted by
    /// descending cosine; ties break toward the lower concept index.
    pub fn nearest_concepts(&self, c: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        self.check_index(c)?;
        if k >= self.n_concepts() {
            return Err(Error::InvalidConfig(format!(
                "k = {k} must be smaller than the concept count {}",
                self.n_concepts()
            )));
        }
        let query = self.w_in.row(c).to_owned();
        let mut scored = Vec::with_capacity(self.n_concepts() - 1);
        for other in 0..self.n_concepts() {
            if other == c {
                continue;
            }
            let score = cosine(
                query.as_slice().unwrap(),
                self.w_in.row(other).to_owned().as_slice().unwrap(),
            )?;
            scored.push((other, score));
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Binary model file: magic, header (N, d, config echo), then `w_in` and
    /// `w_out` row-major as little-endian f64.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
        write(MODEL_MAGIC)?;
        write(&1u32.to_le_bytes())?;
        write(&(self.n_concepts() as u64).to_le_bytes())?;
        write(&(self.dim() as u64).to_le_bytes())?;
        write(&self.config.seed.to_le_bytes())?;
        write(&(self.config.epochs as u64).to_le_bytes())?;
        write(&self.config.learning_rate.to_le_bytes())?;
        write(&self.config.lr_floor.to_le_bytes())?;
        write(&self.config.init_scale.to_le_bytes())?;
        for v in self.w_in.iter().chain(self.w_out.iter()) {
            write(&v.to_le_bytes())?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut buf = Vec::new();
        reader
            .read_to_end(&mut buf)
            .map_err(|e| Error::io(path, e))?;
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
            if *off + n > buf.len() {
                return Err(Error::malformed(path, 0, "truncated model file"));
            }
            let s = &buf[*off..*off + n];
            *off += n;
            Ok(s)
        };
        if take(&mut off, 4)? != MODEL_MAGIC {
            return Err(Error::malformed(path, 0, "not a model file"));
        }
        let version = u32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap());
        if version != 1 {
            return Err(Error::malformed(path, 0, format!("unsupported version {version}")));
        }
        let read_u64 =
            |off: &mut usize| -> Result<u64> { Ok(u64::from_le_bytes(take(off, 8)?.try_into().unwrap())) };
        let n = read_u64(&mut off)? as usize;
        let d = read_u64(&mut off)? as usize;
        let seed = read_u64(&mut off)?;
        let epochs = read_u64(&mut off)? as usize;
        let read_f64 =
            |off: &mut usize| -> Result<f64> { Ok(f64::from_le_bytes(take(off, 8)?.try_into().unwrap())) };
        let learning_rate = read_f64(&mut off)?;
        let lr_floor = read_f64(&mut off)?;
        let init_scale = read_f64(&mut off)?;
        let mut values = Vec::with_capacity(2 * n * d);
        for _ in 0..2 * n * d {
            values.push(read_f64(&mut off)?);
        }
        if off != buf.len() {
            return Err(Error::malformed(path, 0, "trailing bytes in model file"));
        }
        let w_in = Array2::from_shape_vec((n, d), values[..n * d].to_vec()).unwrap();
        let w_out = Array2::from_shape_vec((d, n), values[n * d..].to_vec()).unwrap();
        Ok(SkipGramModel {
            w_in,
            w_out,
            config: TrainConfig {
                dim: d,
                learning_rate,
                lr_floor,
                epochs,
                seed,
                init_scale,
            },
        })
    }

    /// Text export: `concept<TAB>v1 v2 ... vd` per line.
    pub fn export_text(
        &self,
        path: impl AsRef<Path>,
        dictionary: &ConceptDictionary,
    ) -> Result<()> {
        let path = path.as_ref();
        if dictionary.len() != self.n_concepts() {
            return Err(Error::DimensionMismatch {
                expected: self.n_concepts(),
                got: dictionary.len(),
            });
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for c in 0..self.n_concepts() {
            let values: Vec<String> = self.w_in.row(c).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}\t{}", dictionary.name(c).unwrap(), values.join(" "))
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

const MODEL_MAGIC: &[u8; 4] = b"P2VM";

fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out = logits.mapv(|z| (z - max).exp());
    let sum = out.sum();
    out /= sum;
    out
}

/// Train by stochastic gradient descent over the pair set, shuffling pair
/// order each epoch. Deterministic given the config seed.
pub fn train(pairs: &[TrainingPair], n_concepts: usize, config: &TrainConfig) -> Result<SkipGramModel> {
    Ok(train_traced(pairs, n_concepts, config)?.0)
}

/// Like [`train`], additionally returning the mean loss over the full pair
/// set before training and after every epoch (`epochs + 1` values).
pub fn train_traced(
    pairs: &[TrainingPair],
    n_concepts: usize,
    config: &TrainConfig,
) -> Result<(SkipGramModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("empty pair set".into()));
    }
    for p in pairs {
        let max = p.input.max(p.output);
        if max >= n_concepts {
            return Err(Error::IndexOutOfRange {
                index: max,
                size: n_concepts,
            });
        }
        if p.input == p.output {
            return Err(Error::InvalidConfig(format!(
                "training pair with identical input and output {}",
                p.input
            )));
        }
    }

    let mut model = SkipGramModel::init(n_concepts, config)?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total_steps = (config.epochs * pairs.len()) as f64;
    let mut losses = Vec::with_capacity(config.epochs + 1);
    losses.push(model.mean_loss(pairs)?);

    let mut step = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let progress = step as f64 / total_steps;
            let lr = (config.learning_rate
                + (config.lr_floor - config.learning_rate) * progress)
                .max(config.lr_floor);
            model.sgd_step(&pairs[i], lr);
            step += 1;
        }
        losses.push(model.mean_loss(pairs)?);
    }
    Ok((model, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ConceptDictionary, Corpus, Problem};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::collections::BTreeSet;

    fn corpus_with_sets(sets: &[&[usize]], n: usize) -> Corpus {
        let names = (0..n).map(|i| format!("k{i}")).collect();
        let dict = ConceptDictionary::new(names).unwrap();
        let problems = sets
            .iter()
            .enumerate()
            .map(|(i, cs)| {
                let mut p = Problem::new(format!("p{i}"), "text");
                p.concepts = cs.iter().copied().collect::<BTreeSet<_>>();
                p
            })
            .collect();
        Corpus::from_problems(problems, dict).unwrap()
    }

    #[test]
    fn pairs_for_three_concepts() {
        let corpus = corpus_with_sets(&[&[0, 1, 4]], 5);
        let pairs = make_pairs(&corpus);
        let expect = [(0, 1), (0, 4), (1, 0), (1, 4), (4, 0), (4, 1)];
        assert_eq!(pairs.len(), 6);
        for (input, output) in expect {
            assert!(pairs.contains(&TrainingPair { input, output }));
        }
    }

    #[test]
    fn single_concept_contributes_nothing() {
        let corpus = corpus_with_sets(&[&[2]], 3);
        assert!(make_pairs(&corpus).is_empty());
    }

    #[test]
    fn pair_count_over_two_problems() {
        // {A,B} gives 2 pairs, {A,B,C} gives 6.
        let corpus = corpus_with_sets(&[&[0, 1], &[0, 1, 2]], 3);
        assert_eq!(make_pairs(&corpus).len(), 8);
    }

    fn toy_model() -> SkipGramModel {
        let w_in = array![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6]];
        let w_out = array![[0.2, -0.1, 0.4], [0.3, 0.5, -0.6]];
        SkipGramModel::from_weights(w_in, w_out).unwrap()
    }

    #[test]
    fn forward_matches_hand_computed_softmax() {
        // Frozen from an independent softmax computation on these weights.
        let model = toy_model();
        let p0 = model.forward(0).unwrap();
        assert_abs_diff_eq!(p0[0], 0.31707815493071267, epsilon = 1e-15);
        assert_abs_diff_eq!(p0[1], 0.29564171208457724, epsilon = 1e-15);
        assert_abs_diff_eq!(p0[2], 0.38728013298471009, epsilon = 1e-15);
        let p2 = model.forward(2).unwrap();
        assert_abs_diff_eq!(p2[0], 0.35245310669265539, epsilon = 1e-15);
        assert_abs_diff_eq!(p2[1], 0.46170104031787096, epsilon = 1e-15);
        assert_abs_diff_eq!(p2[2], 0.18584585298947351, epsilon = 1e-15);
    }

    #[test]
    fn forward_sums_to_one() {
        let model = SkipGramModel::init(7, &TrainConfig::new(3)).unwrap();
        for c in 0..7 {
            let p = model.forward(c).unwrap();
            assert!(p.iter().all(|&x| x > 0.0));
            assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_output_weights_give_uniform() {
        let w_in = array![[0.4, -0.3], [0.1, 0.2], [0.0, 0.9]];
        let w_out = Array2::zeros((2, 3));
        let model = SkipGramModel::from_weights(w_in, w_out).unwrap();
        let p = model.forward(1).unwrap();
        for &x in p.iter() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_rejects_out_of_range() {
        let model = toy_model();
        assert!(model.forward(3).is_err());
    }

    #[test]
    fn concept_vector_is_hidden_row() {
        let model = toy_model();
        assert_eq!(model.concept_vector(1).unwrap(), array![0.3, 0.4]);
        assert!(model.concept_vector(9).is_err());
        let default_dim = SkipGramModel::init(4, &TrainConfig::new(0)).unwrap();
        assert_eq!(default_dim.concept_vector(0).unwrap().len(), 10);
    }

    #[test]
    fn init_is_seed_reproducible() {
        let a = SkipGramModel::init(5, &TrainConfig::new(42)).unwrap();
        let b = SkipGramModel::init(5, &TrainConfig::new(42)).unwrap();
        assert_eq!(a.w_in, b.w_in);
        assert_eq!(a.w_out, b.w_out);
        let c = SkipGramModel::init(5, &TrainConfig::new(43)).unwrap();
        assert_ne!(a.w_in, c.w_in);
    }

    #[test]
    fn sgd_step_matches_pair_gradients() {
        let pair = TrainingPair { input: 0, output: 2 };
        let model = toy_model();
        let (gi, go) = model.pair_gradients(&pair).unwrap();
        let lr = 0.1;
        let mut stepped = model.clone();
        stepped.sgd_step(&pair, lr);
        let expect_in = &model.w_in - &(lr * &gi);
        let expect_out = &model.w_out - &(lr * &go);
        for (a, b) in stepped.w_in.iter().zip(expect_in.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        for (a, b) in stepped.w_out.iter().zip(expect_out.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_pairs_rejected() {
        assert!(train(&[], 3, &TrainConfig::new(1)).is_err());
    }

    #[test]
    fn pair_index_beyond_n_rejected() {
        let pairs = vec![TrainingPair { input: 0, output: 5 }];
        assert!(train(&pairs, 3, &TrainConfig::new(1)).is_err());
    }

    #[test]
    fn repeated_pair_drives_probability_up() {
        let pairs = vec![TrainingPair { input: 0, output: 1 }; 8];
        let config = TrainConfig::new(11).with_dim(4).with_epochs(300);
        let model = train(&pairs, 2, &config).unwrap();
        let p = model.forward(0).unwrap();
        assert!(p[1] > 0.95, "p = {p}");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let corpus = corpus_with_sets(&[&[0, 1], &[0, 1, 2], &[2, 3]], 4);
        let pairs = make_pairs(&corpus);
        let config = TrainConfig::new(5).with_epochs(40);
        let a = train(&pairs, 4, &config).unwrap();
        let b = train(&pairs, 4, &config).unwrap();
        assert_eq!(a.w_in, b.w_in);
        assert_eq!(a.w_out, b.w_out);
    }

    #[test]
    fn correlated_concepts_score_higher() {
        // Two planted clusters {0,1,2} and {3,4,5}. Concepts 0 and 1 share
        // contexts (both co-occur with 2), which is what pulls their vectors
        // together; concept 3 never appears with any of them.
        let corpus = corpus_with_sets(
            &[
                &[0, 1],
                &[0, 2],
                &[1, 2],
                &[0, 1, 2],
                &[3, 4],
                &[3, 5],
                &[4, 5],
                &[3, 4, 5],
            ],
            6,
        );
        let pairs = make_pairs(&corpus);
        let config = TrainConfig::new(7).with_dim(4);
        let model = train(&pairs, 6, &config).unwrap();
        // C0 co-occurs with C1 and never with C3.
        let p = model.forward(0).unwrap();
        assert!(p[1] > p[3], "p = {p}");
        let v0 = model.concept_vector(0).unwrap();
        let v1 = model.concept_vector(1).unwrap();
        let v3 = model.concept_vector(3).unwrap();
        let c01 = cosine(v0.as_slice().unwrap(), v1.as_slice().unwrap()).unwrap();
        let c03 = cosine(v0.as_slice().unwrap(), v3.as_slice().unwrap()).unwrap();
        assert!(c01 > c03, "cos(0,1) = {c01}, cos(0,3) = {c03}");
    }

    #[test]
    fn loss_trace_starts_high_ends_lower() {
        let corpus = corpus_with_sets(&[&[0, 1], &[0, 1, 2], &[2, 3]], 4);
        let pairs = make_pairs(&corpus);
        let config = TrainConfig::new(5).with_epochs(50);
        let (_, losses) = train_traced(&pairs, 4, &config).unwrap();
        assert_eq!(losses.len(), 51);
        assert!(losses.last().unwrap() <= losses.first().unwrap());
    }

    #[test]
    fn nearest_concepts_basics() {
        let model = toy_model();
        assert!(model.nearest_concepts(0, 0).unwrap().is_empty());
        assert!(model.nearest_concepts(0, 3).is_err());
        // Identical vectors score 1.0.
        let w_in = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let w_out = Array2::zeros((2, 3));
        let twin = SkipGramModel::from_weights(w_in, w_out).unwrap();
        let ranked = twin.nearest_concepts(0, 2).unwrap();
        assert_eq!(ranked[0].0, 1);
        assert_abs_diff_eq!(ranked[0].1, 1.0, epsilon = 1e-12);
        assert_eq!(ranked[1].0, 2);
    }

    #[test]
    fn nearest_concepts_tie_breaks_by_index() {
        let w_in = array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let w_out = Array2::zeros((2, 3));
        let model = SkipGramModel::from_weights(w_in, w_out).unwrap();
        let ranked = model.nearest_concepts(0, 2).unwrap();
        assert_eq!(ranked[0].0, 1);
        assert_eq!(ranked[1].0, 2);
    }

    #[test]
    fn model_file_roundtrip_is_exact() {
        let corpus = corpus_with_sets(&[&[0, 1], &[1, 2]], 3);
        let pairs = make_pairs(&corpus);
        let config = TrainConfig::new(13).with_epochs(10);
        let model = train(&pairs, 3, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let loaded = SkipGramModel::load(&path).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn text_export_lists_all_concepts() {
        let model = toy_model();
        let dict =
            ConceptDictionary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.tsv");
        model.export_text(&path, &dict).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("a\t"));
        assert_eq!(lines[1].split('\t').nth(1).unwrap().split(' ').count(), 2);
    }
}
