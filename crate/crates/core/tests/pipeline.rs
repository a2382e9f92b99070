//! Library-level pipeline on a planted-cluster corpus: extraction, skip-gram
//! training, composition, and the triplet test against the baselines.

use prob2vec::baselines::{
    sif_embed, svd_prob_embed, word_average_corpus, OovPolicy, SvdFlavor, Weighting,
    WordVectorTable, DEFAULT_SHIFT, SIF_A_DEFAULT,
};
use prob2vec::concept_embed::{make_pairs, train, TrainConfig};
use prob2vec::corpus::synthetic::{generate_synthetic_corpus, marker_rules, ClusterSpec};
use prob2vec::corpus::CompiledRules;
use prob2vec::prob_embed::{embed_corpus, Method};
use prob2vec::triplet_eval::eval_triplets;

#[test]
fn planted_cluster_pipeline_orders_methods() {
    let n_concepts = 8;
    let spec = ClusterSpec::new(vec![4, 4], 60);
    let (mut corpus, triplets) = generate_synthetic_corpus(n_concepts, 40, &spec, 20240601).unwrap();

    // Rule extraction reproduces the planted annotations.
    let annotated: Vec<_> = corpus.problems.iter().map(|p| p.concepts.clone()).collect();
    let rules = marker_rules(n_concepts).unwrap();
    let compiled = CompiledRules::compile(&rules, &corpus.dictionary).unwrap();
    let flagged = corpus.extract_with_rules(&compiled);
    assert!(flagged.is_empty());
    for (p, before) in corpus.problems.iter().zip(annotated.iter()) {
        assert_eq!(&p.concepts, before);
    }

    // Skip-gram concept vectors, composed per problem.
    let pairs = make_pairs(&corpus);
    let model = train(&pairs, n_concepts, &TrainConfig::new(71)).unwrap();
    let prob2vec = embed_corpus(&corpus, model.concept_vectors(), Method::Prob2Vec).unwrap();
    assert!(prob2vec.skipped.is_empty());

    // Nearest concepts stay inside their own planted cluster.
    for c in 0..n_concepts {
        let (top, _) = model.nearest_concepts(c, 1).unwrap()[0];
        assert_eq!(top < 4, c < 4, "concept {c} nearest to {top}");
    }

    // Baselines over a seeded random word-vector table.
    let table = WordVectorTable::random_for_vocab(
        corpus.word_freq.keys().map(|s| s.as_str()),
        8,
        909,
    );
    let avg_uniform = word_average_corpus(&corpus, &table, Weighting::Uniform, None).unwrap();
    let avg_weighted = word_average_corpus(&corpus, &table, Weighting::InvFreq, None).unwrap();
    let sif = sif_embed(&corpus, &table, SIF_A_DEFAULT, None).unwrap();
    let svd_sub = svd_prob_embed(&corpus, SvdFlavor::Sub, n_concepts.min(10), DEFAULT_SHIFT).unwrap();

    let acc = |set| eval_triplets(set, &triplets).unwrap().accuracy;
    let a_p2v = acc(&prob2vec.set);
    let a_uni = acc(&avg_uniform.set);
    let a_wgt = acc(&avg_weighted.set);
    let a_sif = acc(&sif.set);
    let a_svd = acc(&svd_sub.set);
    println!(
        "accuracy: prob2vec={a_p2v:.4} word-avg-uniform={a_uni:.4} \
         word-avg-weighted={a_wgt:.4} sif={a_sif:.4} svd-sub={a_svd:.4}"
    );

    assert!(a_p2v >= 0.95, "prob2vec accuracy {a_p2v}");
    assert!(a_p2v > a_uni, "prob2vec {a_p2v} vs uniform {a_uni}");
    assert!(a_p2v > a_wgt, "prob2vec {a_p2v} vs weighted {a_wgt}");
    assert!(a_svd >= a_uni && a_svd >= a_wgt, "svd-sub {a_svd}");
}

#[test]
fn oov_random_policy_embeds_every_problem() {
    let spec = ClusterSpec::new(vec![3, 3], 5);
    let (corpus, _) = generate_synthetic_corpus(6, 12, &spec, 5).unwrap();
    // Empty table with the random policy: every token gets a derived vector.
    let table = WordVectorTable::new(6, OovPolicy::Random { seed: 4 });
    let outcome = word_average_corpus(&corpus, &table, Weighting::Uniform, None).unwrap();
    assert!(outcome.skipped.is_empty());
    assert_eq!(outcome.set.len(), corpus.problems.len());
}
