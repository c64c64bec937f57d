use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use duet_core::bench::{self, BenchConfig, StubEngine, ThroughputReport};
use duet_core::corpus::Corpus;
use duet_core::dense_index::{HnswGraph, HnswParams, DEFAULT_EF_CONSTRUCTION, DEFAULT_EF_SEARCH, DEFAULT_M, DEFAULT_SEED};
use duet_core::encoding::{LookupEncoder, QueryEncoder, DEFAULT_MAX_TOKENS};
use duet_core::engine::{load_topics, AnyIndex, Searcher};
use duet_core::eval::{self, EvalConfig, MetricReport, Qrels};
use duet_core::fusion::{average_fuse, DEFAULT_FUSION_DEPTH};
use duet_core::model::DEFAULT_QUANTIZATION_SCALE;
use duet_core::sparse_index::{SparseIndex, DEFAULT_B, DEFAULT_K1};
use duet_core::write_atomic;

#[derive(Parser)]
#[command(name = "duet", version, about = "Dense and sparse top-k retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a JSONL corpus.
    Index(IndexArgs),
    /// Search an index and write a TREC run.
    Search(SearchArgs),
    /// Fuse two runs by averaging min-max normalized scores.
    Fuse(FuseArgs),
    /// Evaluate a run against relevance judgments.
    Eval(EvalArgs),
    /// Measure query throughput.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IndexKind {
    Bm25,
    Impact,
    Hnsw,
}

#[derive(Args)]
struct IndexArgs {
    /// Index kind; must match the corpus payload (contents, sparse vector, dense vector).
    #[arg(long, value_enum)]
    kind: IndexKind,
    /// JSONL corpus, one `{"id": .., "contents" | "vector": ..}` object per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Impact quantization scale.
    #[arg(long, default_value_t = DEFAULT_QUANTIZATION_SCALE)]
    scale: u32,
    #[arg(long, default_value_t = DEFAULT_K1)]
    k1: f64,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: f64,
    /// HNSW neighbors per node per layer.
    #[arg(long, default_value_t = DEFAULT_M)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_EF_CONSTRUCTION)]
    ef_construction: usize,
    /// Seed for HNSW level sampling.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// HNSW build threads. Only a single thread gives reproducible files.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum PoolingArg {
    /// Hidden state of the first ([CLS]) token.
    #[default]
    Cls,
    Mean,
}

#[derive(Args)]
struct EncoderArgs {
    /// Pre-encoded queries, `key TAB json-vector` per line. Keys are query texts when
    /// --topics is given, query ids otherwise.
    #[arg(long)]
    lookup: Option<PathBuf>,
    /// ONNX query encoder model.
    #[cfg(feature = "onnx")]
    #[arg(long, conflicts_with = "lookup", requires = "vocab")]
    model: Option<PathBuf>,
    /// WordPiece vocabulary for --model, one token per line.
    #[cfg(feature = "onnx")]
    #[arg(long, requires = "model")]
    vocab: Option<PathBuf>,
    /// Dense pooling for --model.
    #[cfg(feature = "onnx")]
    #[arg(long, value_enum, default_value_t = PoolingArg::Cls)]
    pooling: PoolingArg,
    /// Sparse term weights at or below this are pruned.
    #[cfg(feature = "onnx")]
    #[arg(long, default_value_t = 0.0)]
    sparse_threshold: f32,
    /// Query length cap in word pieces, including [CLS] and [SEP].
    #[cfg(feature = "onnx")]
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Topics, `qid TAB query text` per line.
    #[arg(long)]
    topics: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// HNSW search beam width (raised to k when smaller).
    #[arg(long, default_value_t = DEFAULT_EF_SEARCH)]
    ef_search: usize,
    /// Output TREC run file.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "duet")]
    run_tag: String,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    run_a: PathBuf,
    #[arg(long)]
    run_b: PathBuf,
    /// Hits per input considered and per query written.
    #[arg(long, default_value_t = DEFAULT_FUSION_DEPTH)]
    depth: usize,
    #[arg(long)]
    output: PathBuf,
    /// Defaults to `<tag a>+<tag b>`.
    #[arg(long)]
    run_tag: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Minimum grade counted relevant for RR, AP and recall (TREC DL passage judgments use 2).
    #[arg(long, default_value_t = 1)]
    rel_threshold: u32,
    /// Also print one row per query.
    #[arg(long)]
    per_query: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Index to search. Omit with --stub-delay-ms.
    #[arg(long, required_unless_present = "stub_delay_ms")]
    index: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    /// Benchmark a stub engine that sleeps this long per query instead of searching.
    #[arg(long, conflicts_with = "index")]
    stub_delay_ms: Option<f64>,
    /// Number of queries for the stub engine.
    #[arg(long, default_value_t = 1000)]
    stub_queries: usize,
    /// Worker thread counts, comma separated; one report per count. Defaults to the
    /// number of logical cores.
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_WARMUP_RUNS)]
    warmup: usize,
    #[arg(long, default_value_t = bench::DEFAULT_MEASURED_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = bench::DEFAULT_BENCH_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_EF_SEARCH)]
    ef_search: usize,
    /// Condition label; defaults to the encoder in use.
    #[arg(long)]
    condition: Option<String>,
    /// Also write the reports as JSON lines to this file.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_index(a: IndexArgs) -> Result<()> {
    let corpus = Corpus::load(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let start = Instant::now();
    let (bytes, docs) = match (a.kind, corpus) {
        (IndexKind::Bm25, Corpus::Text(docs)) => {
            let n = docs.len();
            (SparseIndex::build_bm25_text(docs, a.k1, a.b)?.to_bytes(), n)
        }
        (IndexKind::Impact, Corpus::Sparse(docs)) => {
            let n = docs.len();
            (SparseIndex::build_impact(docs, a.scale)?.to_bytes(), n)
        }
        (IndexKind::Hnsw, Corpus::Dense(docs)) => {
            let n = docs.len();
            let params = HnswParams::new(a.m, a.ef_construction, a.seed);
            (HnswGraph::build(params, docs, a.threads.max(1))?.to_bytes(), n)
        }
        (kind, corpus) => bail!(
            "{} corpus cannot build a {} index",
            corpus.kind(),
            kind.to_possible_value().expect("no skipped variants").get_name()
        ),
    };
    let elapsed = start.elapsed();
    write_atomic(&a.output, &bytes).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "indexed {docs} documents into {} ({} bytes) in {:.2}s",
        a.output.display(),
        bytes.len(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

/// Query encoder plus the topics to run, from --topics and the encoder flags.
fn prepare(
    index: &AnyIndex,
    topics: Option<&Path>,
    enc: &EncoderArgs,
) -> Result<(Option<Box<dyn QueryEncoder>>, Vec<(String, String)>, &'static str)> {
    let mut topic_list = match topics {
        Some(p) => Some(load_topics(p).with_context(|| format!("reading topics {}", p.display()))?),
        None => None,
    };
    if let Some(path) = &enc.lookup {
        let lookup = LookupEncoder::load(path).with_context(|| format!("reading {}", path.display()))?;
        let topics = topic_list
            .take()
            .unwrap_or_else(|| lookup.keys().into_iter().map(|k| (k.to_owned(), k.to_owned())).collect());
        return Ok((Some(Box::new(lookup)), topics, "pre-encoded"));
    }
    let Some(topics) = topic_list else {
        bail!("--topics is required unless queries come from --lookup");
    };
    #[cfg(feature = "onnx")]
    if let (Some(model), Some(vocab)) = (&enc.model, &enc.vocab) {
        use duet_core::encoding::{OutputHead, Pooling, RuntimeEncoder, Vocab};
        let vocab = Vocab::load(vocab)
            .with_context(|| format!("reading vocabulary {}", vocab.display()))?
            .with_max_tokens(enc.max_tokens);
        let head = match index {
            AnyIndex::Sparse(_) => OutputHead::Sparse {
                threshold: enc.sparse_threshold,
            },
            AnyIndex::Dense(_) => OutputHead::Dense(match enc.pooling {
                PoolingArg::Cls => Pooling::StartToken,
                PoolingArg::Mean => Pooling::Mean,
            }),
        };
        let encoder = RuntimeEncoder::load(model, vocab, head)?;
        return Ok((Some(Box::new(encoder)), topics, "onnx"));
    }
    let _ = index;
    Ok((None, topics, "text"))
}

fn load_index(path: &Path) -> Result<AnyIndex> {
    AnyIndex::load(path).with_context(|| format!("loading index {}", path.display()))
}

fn cmd_search(a: SearchArgs) -> Result<()> {
    let index = load_index(&a.index)?;
    let (encoder, topics, _) = prepare(&index, a.topics.as_deref(), &a.encoder)?;
    let searcher = Searcher::new(index, encoder)?.with_ef_search(a.ef_search);
    let run = searcher.search_all(&topics, a.k, &a.run_tag)?;
    eval::write_run(&run, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn cmd_fuse(a: FuseArgs) -> Result<()> {
    let run_a = eval::load_run(&a.run_a).with_context(|| format!("reading {}", a.run_a.display()))?;
    let run_b = eval::load_run(&a.run_b).with_context(|| format!("reading {}", a.run_b.display()))?;
    let mut fused = average_fuse(&run_a, &run_b, a.depth)?;
    if let Some(tag) = a.run_tag {
        fused.tag = tag;
    }
    eval::write_run(&fused, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let run = eval::load_run(&a.run).with_context(|| format!("reading {}", a.run.display()))?;
    let qrels = Qrels::load(&a.qrels).with_context(|| format!("reading {}", a.qrels.display()))?;
    let config = EvalConfig {
        rel_threshold: a.rel_threshold,
        ..EvalConfig::default()
    };
    let report = eval::evaluate(&run, &qrels, &config)?;
    println!("{}", MetricReport::header(&config));
    if a.per_query {
        for (qid, m) in &report.per_query {
            println!(
                "{qid:<24} {:>8} {:>8} {:>8} {:>8}",
                fmt_metric(m.rr),
                fmt_metric(m.recall),
                fmt_metric(m.ap),
                fmt_metric(m.ndcg)
            );
        }
    }
    let label = if run.tag.is_empty() { "all" } else { run.tag.as_str() };
    println!("{}", report.row(label));
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let threads = if a.threads.is_empty() {
        vec![bench::default_threads()]
    } else {
        a.threads.clone()
    };
    let config = |threads: usize, label: &str| BenchConfig {
        threads,
        warmup_runs: a.warmup,
        measured_runs: a.runs,
        k: a.k,
        encoder: a.condition.clone().unwrap_or_else(|| label.to_owned()),
    };
    let mut reports: Vec<ThroughputReport> = Vec::new();
    if let Some(ms) = a.stub_delay_ms {
        if !(ms.is_finite() && ms >= 0.0) {
            bail!("--stub-delay-ms must be a nonnegative number");
        }
        let engine = StubEngine {
            delay: Duration::from_secs_f64(ms / 1000.0),
        };
        let queries: Vec<(String, ())> = (0..a.stub_queries).map(|i| (i.to_string(), ())).collect();
        for &t in &threads {
            reports.push(bench::run_benchmark(&engine, &queries, &config(t, "stub"))?);
        }
    } else {
        let index = load_index(a.index.as_deref().expect("clap requires --index"))?;
        let (encoder, topics, label) = prepare(&index, a.topics.as_deref(), &a.encoder)?;
        let searcher = Searcher::new(index, encoder)?.with_ef_search(a.ef_search);
        for &t in &threads {
            reports.push(bench::run_benchmark(&searcher, &topics, &config(t, label))?);
        }
    }
    print!("{}", bench::format_table(&reports));
    if let Some(path) = &a.jsonl {
        let body: String = reports.iter().map(|r| r.to_json_line() + "\n").collect();
        write_atomic(path, body.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
