//! Command-line front end for the concept-based problem-embedding pipeline:
//! concept extraction, skip-gram training, embedding, similarity queries,
//! triplet evaluation, the imbalanced-training benchmark, and synthetic
//! corpus generation.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prob2vec::baselines::{
    sif_embed, svd_prob_embed, word_average_corpus, OovPolicy, SvdFlavor, Weighting,
    WordVectorTable, DEFAULT_SHIFT, SIF_A_DEFAULT,
};
use prob2vec::concept_embed::{make_pairs, train, SkipGramModel, TrainConfig};
use prob2vec::corpus::synthetic::{generate_synthetic_corpus, marker_rules, ClusterSpec};
use prob2vec::corpus::{CompiledRules, Corpus, WordSelection};
use prob2vec::imbalanced::{
    regime_comparison, render_comparison_table, MlpConfig, Regime, RoundsConfig,
};
use prob2vec::prob_embed::{rank_similar, EmbedOutcome, EmbeddingSet, Method};
use prob2vec::triplet_eval::{
    eval_triplets, eval_triplets_with_reference, gap_histogram, render_accuracy_table,
    render_histogram, Triplet, DEFAULT_BIN_ORIGIN, DEFAULT_BIN_WIDTH,
};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "prob2vec",
    version,
    about = "Concept-based problem embeddings and their evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate a corpus by applying concept extraction rules to problem text
    Extract(ExtractArgs),
    /// Train skip-gram concept vectors from concept co-occurrence
    Train(TrainArgs),
    /// Produce problem embeddings with any method
    Embed(EmbedArgs),
    /// Rank problems by cosine similarity to a query problem
    Similar(SimilarArgs),
    /// Score embedding files on a triplet similarity test
    Eval(EvalArgs),
    /// Compare imbalanced-training regimes (FN/FP cross validation)
    BenchImbalanced(BenchArgs),
    /// Generate a planted-cluster synthetic corpus with triplets and rules
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Corpus file (one JSON record per line)
    #[arg(long)]
    corpus: PathBuf,
    /// Rules file (JSON array of {concept, patterns[]})
    #[arg(long)]
    rules: PathBuf,
    /// Annotated corpus output
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Annotated corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Model file output
    #[arg(long)]
    out: PathBuf,
    /// Embedding dimension
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Training epochs
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Initial learning rate (decays linearly)
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    /// Seed for weight init and epoch shuffling
    #[arg(long)]
    seed: u64,
    /// Also write a text export (concept<TAB>values)
    #[arg(long)]
    export_text: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Annotated corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Embedding method
    #[arg(long)]
    method: Method,
    /// Embedding file output
    #[arg(long)]
    out: PathBuf,
    /// Trained model file (prob2vec method)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Word-vector table file (word-avg and sif methods)
    #[arg(long)]
    table: Option<PathBuf>,
    /// Instead of a table file, derive a seeded random table of this
    /// dimension over the corpus vocabulary
    #[arg(long)]
    random_table_dim: Option<usize>,
    /// What to do with tokens missing from the table
    #[arg(long, default_value = "skip", value_parser = ["skip", "random"])]
    oov: String,
    /// Word-selection file: one token per line
    #[arg(long)]
    select_words: Option<PathBuf>,
    /// SIF weight parameter
    #[arg(long, default_value_t = SIF_A_DEFAULT)]
    a: f64,
    /// Shift threshold for the shifted PPMI variant
    #[arg(long, default_value_t = DEFAULT_SHIFT)]
    k_shift: f64,
    /// Embedding dimension for SVD methods (default min(10, N))
    #[arg(long)]
    dim: Option<usize>,
    /// Seed for any derived randomness (random tables, OOV vectors)
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct SimilarArgs {
    /// Embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Query problem id
    #[arg(long)]
    id: String,
    /// Number of neighbors
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding file(s); pass several to compare methods on the same triplets
    #[arg(long, required = true, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    /// Triplet file: A<TAB>B<TAB>C per line
    #[arg(long)]
    triplets: PathBuf,
    /// Histogram bin width
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    /// Lower edge of the first histogram bin
    #[arg(long, default_value_t = DEFAULT_BIN_ORIGIN)]
    origin: f64,
    /// Compute histogram gaps from this reference embedding file instead of
    /// each evaluated method's own similarities
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the full reports as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Annotated corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated concept names to benchmark
    #[arg(long, value_delimiter = ',', required = true)]
    concepts: Vec<String>,
    /// Comma-separated regime names, e.g. down-sampling,negative,
    /// word-selection+negative, one-shot+negative
    #[arg(long, value_delimiter = ',', required = true)]
    regimes: Vec<String>,
    /// Cross-validation rounds per (regime, concept)
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    /// Master seed; every round derives from it
    #[arg(long)]
    seed: u64,
    /// Word-selection file, required by word-selection regimes
    #[arg(long)]
    select_words: Option<PathBuf>,
    /// Word-vector table initializing the embedding layer
    #[arg(long)]
    table: Option<PathBuf>,
    /// Embedding layer width
    #[arg(long, default_value_t = 300)]
    embed_dim: usize,
    /// Hidden layer widths
    #[arg(long, default_value = "60,60")]
    hidden: String,
    /// Pre-training epochs per phase
    #[arg(long, default_value_t = 50)]
    pretrain_epochs: usize,
    /// Balanced fine-tuning epochs
    #[arg(long, default_value_t = 200)]
    finetune_epochs: usize,
    /// Learning rate for both phases
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    /// Held-out fraction per round
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Decision threshold on the sigmoid output
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Write machine-readable results as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of concepts
    #[arg(long, default_value_t = 8)]
    concepts: usize,
    /// Comma-separated cluster sizes (must sum to the concept count)
    #[arg(long, default_value = "4,4")]
    clusters: String,
    /// Number of problems
    #[arg(long, default_value_t = 40)]
    problems: usize,
    /// Number of ground-truth triplets
    #[arg(long, default_value_t = 60)]
    triplets: usize,
    /// Generator seed
    #[arg(long)]
    seed: u64,
    /// Corpus output (annotated)
    #[arg(long)]
    out_corpus: PathBuf,
    /// Triplet output
    #[arg(long)]
    out_triplets: PathBuf,
    /// Rules output recovering the planted concepts from raw text
    #[arg(long)]
    out_rules: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Similar(args) => cmd_similar(args),
        Command::Eval(args) => cmd_eval(args),
        Command::BenchImbalanced(args) => cmd_bench_imbalanced(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::load(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn load_selection(path: &Path, corpus: &Corpus) -> Result<WordSelection> {
    let selection = WordSelection::load(path)
        .with_context(|| format!("loading word selection {}", path.display()))?;
    let unknown = selection.out_of_vocabulary(corpus);
    if !unknown.is_empty() {
        eprintln!(
            "warning: {} selected token(s) not in the corpus vocabulary: {}",
            unknown.len(),
            unknown.join(", ")
        );
    }
    Ok(selection)
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let mut corpus = load_corpus(&args.corpus)?;
    let rules = CompiledRules::load(&args.rules)
        .with_context(|| format!("loading rules {}", args.rules.display()))?;
    let flagged = corpus.extract_with_rules(&rules);
    corpus
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if !flagged.is_empty() {
        eprintln!(
            "warning: {} problem(s) matched no rule and are concept-free: {}",
            flagged.len(),
            flagged.join(", ")
        );
    }
    let mut manifest = RunManifest::new("extract", None);
    manifest.input(&args.corpus)?;
    manifest.input(&args.rules)?;
    manifest.output(&args.out);
    manifest.write_next_to(&args.out)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    if corpus.n_concepts() == 0 {
        bail!(
            "corpus {} carries no concept annotations; run extract first",
            args.corpus.display()
        );
    }
    let pairs = make_pairs(&corpus);
    let mut config = TrainConfig::new(args.seed).with_dim(args.dim);
    config.epochs = args.epochs;
    config.learning_rate = args.learning_rate;
    let model = train(&pairs, corpus.n_concepts(), &config)
        .context("training skip-gram model")?;
    model
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(text_path) = &args.export_text {
        model
            .export_text(text_path, &corpus.dictionary)
            .with_context(|| format!("writing {}", text_path.display()))?;
    }
    let mut manifest = RunManifest::new("train", Some(args.seed));
    manifest.input(&args.corpus)?;
    manifest.output(&args.out);
    if let Some(text_path) = &args.export_text {
        manifest.output(text_path);
    }
    manifest.write_next_to(&args.out)
}

fn build_table(args: &EmbedArgs, corpus: &Corpus) -> Result<WordVectorTable> {
    let oov = match args.oov.as_str() {
        "random" => OovPolicy::Random { seed: args.seed },
        _ => OovPolicy::Skip,
    };
    match (&args.table, args.random_table_dim) {
        (Some(path), None) => WordVectorTable::load(path, oov)
            .with_context(|| format!("loading word vectors {}", path.display())),
        (None, Some(dim)) => Ok(WordVectorTable::random_for_vocab(
            corpus.word_freq.keys().map(|s| s.as_str()),
            dim,
            args.seed,
        )),
        (Some(_), Some(_)) => bail!("--table and --random-table-dim are mutually exclusive"),
        (None, None) => bail!(
            "method {} needs --table or --random-table-dim",
            args.method
        ),
    }
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let selection = match &args.select_words {
        Some(path) => Some(load_selection(path, &corpus)?),
        None => None,
    };
    let outcome: EmbedOutcome = match args.method {
        Method::Prob2Vec => {
            let model_path = args
                .model
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("method prob2vec needs --model"))?;
            let model = SkipGramModel::load(model_path)
                .with_context(|| format!("loading model {}", model_path.display()))?;
            if model.n_concepts() != corpus.n_concepts() {
                bail!(
                    "model has {} concepts but corpus has {}",
                    model.n_concepts(),
                    corpus.n_concepts()
                );
            }
            prob2vec::prob_embed::embed_corpus(
                &corpus,
                model.concept_vectors(),
                Method::Prob2Vec,
            )?
        }
        Method::WordAvgUniform | Method::WordAvgWeighted => {
            let table = build_table(&args, &corpus)?;
            let weighting = if args.method == Method::WordAvgUniform {
                Weighting::Uniform
            } else {
                Weighting::InvFreq
            };
            word_average_corpus(&corpus, &table, weighting, selection.as_ref())?
        }
        Method::Sif => {
            let table = build_table(&args, &corpus)?;
            sif_embed(&corpus, &table, args.a, selection.as_ref())?
        }
        Method::SvdEig | Method::SvdWandc | Method::SvdSub | Method::SvdShifted
        | Method::SvdCds => {
            let flavor = match args.method {
                Method::SvdEig => SvdFlavor::Eig,
                Method::SvdWandc => SvdFlavor::Wandc,
                Method::SvdSub => SvdFlavor::Sub,
                Method::SvdShifted => SvdFlavor::Shifted,
                _ => SvdFlavor::Cds,
            };
            let d = args.dim.unwrap_or_else(|| corpus.n_concepts().min(10));
            svd_prob_embed(&corpus, flavor, d, args.k_shift)?
        }
    };
    if !outcome.skipped.is_empty() {
        eprintln!(
            "warning: {} unembeddable problem(s) skipped: {}",
            outcome.skipped.len(),
            outcome.skipped.join(", ")
        );
    }
    outcome
        .set
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let mut manifest = RunManifest::new("embed", Some(args.seed));
    manifest.input(&args.corpus)?;
    if let Some(model) = &args.model {
        manifest.input(model)?;
    }
    if let Some(table) = &args.table {
        manifest.input(table)?;
    }
    if let Some(sel) = &args.select_words {
        manifest.input(sel)?;
    }
    manifest.output(&args.out);
    manifest.write_next_to(&args.out)
}

fn cmd_similar(args: SimilarArgs) -> Result<()> {
    let set = EmbeddingSet::load(&args.embeddings)
        .with_context(|| format!("loading embeddings {}", args.embeddings.display()))?;
    let ranked = rank_similar(&set, &args.id, args.k)?;
    for (id, score) in ranked {
        println!("{id}\t{score}");
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let triplets = Triplet::load_file(&args.triplets)
        .with_context(|| format!("loading triplets {}", args.triplets.display()))?;
    let reference = match &args.reference {
        Some(path) => Some(
            EmbeddingSet::load(path)
                .with_context(|| format!("loading reference embeddings {}", path.display()))?,
        ),
        None => None,
    };
    let mut reports = Vec::new();
    for path in &args.embeddings {
        let set = EmbeddingSet::load(path)
            .with_context(|| format!("loading embeddings {}", path.display()))?;
        let mut report = match &reference {
            Some(r) => eval_triplets_with_reference(&set, r, &triplets),
            None => eval_triplets(&set, &triplets),
        }
        .with_context(|| format!("evaluating {}", path.display()))?;
        report.histogram = gap_histogram(&report.records, args.bin_width, args.origin)?;
        reports.push(report);
    }

    let rows: Vec<(Method, f64)> = reports.iter().map(|r| (r.method, r.accuracy)).collect();
    print!("{}", render_accuracy_table(&rows));
    for report in &reports {
        println!("\n# histogram method={} (bin_lower\tcount\terrors)", report.method);
        print!("{}", render_histogram(&report.histogram));
    }
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&reports)?;
        std::fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = RunManifest::new("eval", None);
        for path in &args.embeddings {
            manifest.input(path)?;
        }
        manifest.input(&args.triplets)?;
        if let Some(reference) = &args.reference {
            manifest.input(reference)?;
        }
        manifest.output(out);
        manifest.write_next_to(out)?;
    }
    Ok(())
}

fn cmd_bench_imbalanced(args: BenchArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let concepts: Vec<usize> = args
        .concepts
        .iter()
        .map(|name| {
            corpus
                .dictionary
                .index_of(name)
                .ok_or_else(|| anyhow::anyhow!("unknown concept `{name}` in corpus"))
        })
        .collect::<Result<_>>()?;
    let regimes: Vec<Regime> = args
        .regimes
        .iter()
        .map(|name| {
            let mut regime = Regime::parse(name, args.seed)?;
            regime.pretrain_phase.epochs = args.pretrain_epochs;
            regime.pretrain_phase.learning_rate = args.learning_rate;
            regime.finetune_phase.epochs = args.finetune_epochs;
            regime.finetune_phase.learning_rate = args.learning_rate;
            Ok(regime)
        })
        .collect::<Result<_>>()?;
    let selection = match &args.select_words {
        Some(path) => Some(load_selection(path, &corpus)?),
        None => None,
    };
    let table = match &args.table {
        Some(path) => Some(
            WordVectorTable::load(path, OovPolicy::Skip)
                .with_context(|| format!("loading word vectors {}", path.display()))?,
        ),
        None => None,
    };
    let hidden: Vec<usize> = args
        .hidden
        .split(',')
        .map(|s| s.trim().parse().context("parsing --hidden"))
        .collect::<Result<_>>()?;
    if hidden.len() != 2 {
        bail!("--hidden expects two comma-separated sizes, got `{}`", args.hidden);
    }
    let cfg = RoundsConfig {
        rounds: args.rounds,
        test_fraction: args.test_fraction,
        threshold: args.threshold,
        mlp: MlpConfig {
            embed_dim: args.embed_dim,
            hidden: (hidden[0], hidden[1]),
        },
    };
    let matrix = regime_comparison(
        &corpus,
        &concepts,
        &regimes,
        table.as_ref(),
        &cfg,
        selection.as_ref(),
    )?;
    let names: Vec<String> = args.concepts.clone();
    print!("{}", render_comparison_table(&regimes, &names, &matrix));

    if let Some(out) = &args.out {
        #[derive(serde::Serialize)]
        struct Cell<'a> {
            regime: String,
            concept: &'a str,
            result: &'a prob2vec::imbalanced::FnFpResult,
        }
        let mut cells = Vec::new();
        for (regime, row) in regimes.iter().zip(matrix.iter()) {
            for (concept, result) in names.iter().zip(row.iter()) {
                cells.push(Cell {
                    regime: regime.name(),
                    concept,
                    result,
                });
            }
        }
        let json = serde_json::to_string_pretty(&cells)?;
        std::fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = RunManifest::new("bench-imbalanced", Some(args.seed));
        manifest.input(&args.corpus)?;
        if let Some(sel) = &args.select_words {
            manifest.input(sel)?;
        }
        if let Some(table) = &args.table {
            manifest.input(table)?;
        }
        manifest.output(out);
        manifest.write_next_to(out)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let sizes: Vec<usize> = args
        .clusters
        .split(',')
        .map(|s| s.trim().parse().context("parsing --clusters"))
        .collect::<Result<_>>()?;
    let spec = ClusterSpec::new(sizes, args.triplets);
    let (corpus, triplets) =
        generate_synthetic_corpus(args.concepts, args.problems, &spec, args.seed)
            .context("generating synthetic corpus")?;
    corpus
        .save(&args.out_corpus)
        .with_context(|| format!("writing {}", args.out_corpus.display()))?;
    Triplet::save_file(&triplets, &args.out_triplets)
        .with_context(|| format!("writing {}", args.out_triplets.display()))?;
    if let Some(rules_path) = &args.out_rules {
        let rules = marker_rules(args.concepts)?;
        let json = serde_json::to_string_pretty(&rules)?;
        std::fs::write(rules_path, json)
            .with_context(|| format!("writing {}", rules_path.display()))?;
    }
    let mut manifest = RunManifest::new("synth", Some(args.seed));
    manifest.output(&args.out_corpus);
    manifest.output(&args.out_triplets);
    if let Some(rules_path) = &args.out_rules {
        manifest.output(rules_path);
    }
    manifest.write_next_to(&args.out_corpus)
}
