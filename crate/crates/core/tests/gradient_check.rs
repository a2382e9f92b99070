//! Central finite-difference checks of the analytic gradients in the
//! skip-gram trainer and the imbalanced-lab classifier.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prob2vec::concept_embed::{SkipGramModel, TrainConfig, TrainingPair};
use prob2vec::imbalanced::{MlpClassifier, MlpConfig, Vocabulary};

const H: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-8 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[test]
fn skipgram_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(812);
    for instance in 0..25 {
        let n = rng.random_range(2..=5);
        let d = rng.random_range(1..=3);
        let config = TrainConfig::new(rng.random()).with_dim(d);
        let model = SkipGramModel::init(n, &config).unwrap();
        let input = rng.random_range(0..n);
        let mut output = rng.random_range(0..n);
        if output == input {
            output = (output + 1) % n;
        }
        let pair = TrainingPair { input, output };
        let (grad_in, grad_out) = model.pair_gradients(&pair).unwrap();

        let loss_at = |w_in: Array2<f64>, w_out: Array2<f64>| {
            SkipGramModel::from_weights(w_in, w_out)
                .unwrap()
                .pair_loss(&pair)
                .unwrap()
        };
        let w_in = model.concept_vectors().clone();
        let w_out = model.output_weights().clone();

        for i in 0..n {
            for j in 0..d {
                let mut plus = w_in.clone();
                plus[[i, j]] += H;
                let mut minus = w_in.clone();
                minus[[i, j]] -= H;
                let numeric =
                    (loss_at(plus, w_out.clone()) - loss_at(minus, w_out.clone())) / (2.0 * H);
                let err = relative_error(grad_in[[i, j]], numeric);
                assert!(
                    err < TOLERANCE,
                    "instance {instance}: w_in[{i},{j}] err = {err}"
                );
            }
        }
        for i in 0..d {
            for j in 0..n {
                let mut plus = w_out.clone();
                plus[[i, j]] += H;
                let mut minus = w_out.clone();
                minus[[i, j]] -= H;
                let numeric =
                    (loss_at(w_in.clone(), plus) - loss_at(w_in.clone(), minus)) / (2.0 * H);
                let err = relative_error(grad_out[[i, j]], numeric);
                assert!(
                    err < TOLERANCE,
                    "instance {instance}: w_out[{i},{j}] err = {err}"
                );
            }
        }
    }
}

fn tiny_vocabulary(n: usize) -> Vocabulary {
    use prob2vec::corpus::{ConceptDictionary, Corpus, Problem};
    let text: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let corpus = Corpus::from_problems(
        vec![Problem::new("p0", text.join(" "))],
        ConceptDictionary::default(),
    )
    .unwrap();
    Vocabulary::from_corpus(&corpus, None)
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let vocab = tiny_vocabulary(4);
    let config = MlpConfig {
        embed_dim: 3,
        hidden: (2, 2),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for instance in 0..25 {
        let model = MlpClassifier::new(&vocab, None, &config, rng.random()).unwrap();
        let n_tokens = rng.random_range(1..=5);
        let ids: Vec<usize> = (0..n_tokens).map(|_| rng.random_range(0..4)).collect();
        let target = if rng.random_range(0.0..1.0) < 0.5 { 0.0 } else { 1.0 };
        let (_, grads) = model.loss_and_gradients(&ids, target);

        let mut check = |name: &str, analytic: f64, perturb: &mut dyn FnMut(&mut MlpClassifier, f64)| {
            let mut plus = model.clone();
            perturb(&mut plus, H);
            let mut minus = model.clone();
            perturb(&mut minus, -H);
            let numeric = (plus.loss(&ids, target) - minus.loss(&ids, target)) / (2.0 * H);
            let err = relative_error(analytic, numeric);
            assert!(err < TOLERANCE, "instance {instance}: {name} err = {err}");
        };

        for i in 0..4 {
            for j in 0..3 {
                check(
                    &format!("embedding[{i},{j}]"),
                    grads.embedding[[i, j]],
                    &mut |m, h| m.embedding[[i, j]] += h,
                );
            }
        }
        for i in 0..3 {
            for j in 0..2 {
                check(&format!("w1[{i},{j}]"), grads.w1[[i, j]], &mut |m, h| {
                    m.w1[[i, j]] += h
                });
            }
        }
        for j in 0..2 {
            check(&format!("b1[{j}]"), grads.b1[j], &mut |m, h| m.b1[j] += h);
            check(&format!("b2[{j}]"), grads.b2[j], &mut |m, h| m.b2[j] += h);
            check(&format!("w3[{j}]"), grads.w3[j], &mut |m, h| m.w3[j] += h);
            for i in 0..2 {
                check(&format!("w2[{i},{j}]"), grads.w2[[i, j]], &mut |m, h| {
                    m.w2[[i, j]] += h
                });
            }
        }
        check("b3", grads.b3, &mut |m, h| m.b3 += h);
    }
}
