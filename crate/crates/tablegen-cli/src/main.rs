//! Command line for the table generation engine.
//!
//! Four subcommands cover the lifecycle: `build` turns raw tables and a
//! knowledge base dump into a verified artifact bundle, `train` fits a
//! semantic matcher, `generate` answers queries against a bundle plus trained
//! models, and `eval` scores run files against relevance assessments.
//!
//! Exit codes: 0 success, 2 usage or input problems, 3 corrupt artifacts,
//! 4 nothing to work on (no queries, no training pairs).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use tablegen::bundle::{load_bundle, save_bundle};
use tablegen::corpus::{parse_kb_dump, parse_table_corpus, EntityRepr, ParseReport, TableCorpus};
use tablegen::entity_ranking::{parse_weights, ENTITY_FEATURES};
use tablegen::error::Error as EngineError;
use tablegen::evaluation::{
    map_mrr, ndcg_at_k, parse_qrels, parse_queries, parse_run, MetricSummary, Qrels, Run,
};
use tablegen::pipeline::{generate_table, GeneratedTable, GenerationParams, Resources};
use tablegen::schema_determination::SCHEMA_FEATURES;
use tablegen::schema_norm::parse_overrides;
use tablegen::semantic_match::{
    entity_label_pairs, schema_training_pairs, train, DrrmTksModel, EmbeddingTable, ModelSet,
    TrainOptions,
};
use tablegen::{Analyzer, Config};

#[derive(Parser)]
#[command(name = "tablegen", version, about = "Generates relational tables from keyword queries")]
struct Cli {
    /// Config file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Individual config overrides, e.g. --set rounds=2.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Seed for everything stochastic; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for query-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest tables and a knowledge base into an artifact bundle.
    Build {
        /// Table corpus, one JSON table per line.
        #[arg(long)]
        tables: PathBuf,
        /// Knowledge base dump, one JSON entity per line.
        #[arg(long)]
        kb: PathBuf,
        /// Bundle output directory.
        #[arg(long)]
        out: PathBuf,
        /// Synonym override rules (`allow`/`deny` TSV).
        #[arg(long)]
        synonym_overrides: Option<PathBuf>,
    },
    /// Answer queries from a bundle and trained models.
    Generate {
        /// Bundle directory written by `build`.
        #[arg(long)]
        index: PathBuf,
        /// Directory holding trained matcher model files.
        #[arg(long)]
        models: PathBuf,
        /// One ad-hoc query.
        #[arg(long, conflicts_with = "queries")]
        query: Option<String>,
        /// Query file, `id<TAB>text` per line.
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Feedback rounds; overrides the config value.
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Entity feature weights file (`phi1 <w> .. phi7 <w>`).
        #[arg(long)]
        entity_weights: Option<PathBuf>,
        /// Schema feature weights file (`phi1 <w> .. phi5 <w>`).
        #[arg(long)]
        schema_weights: Option<PathBuf>,
    },
    /// Train a semantic matcher and write the model file.
    Train {
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        /// Entity text slice used by the entity matcher.
        #[arg(long, value_enum, default_value_t = Repr::All)]
        repr: Repr,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch mean loss, `epoch,loss` lines.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Score a run file against relevance assessments.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Comma-separated: ndcg@K, map, mrr.
        #[arg(long, default_value = "ndcg@5,ndcg@10,map,mrr")]
        metrics: String,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    SchemaMatcher,
    EntityMatcher,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repr {
    All,
    Description,
    Properties,
}

impl From<Repr> for EntityRepr {
    fn from(r: Repr) -> EntityRepr {
        match r {
            Repr::All => EntityRepr::All,
            Repr::Description => EntityRepr::Description,
            Repr::Properties => EntityRepr::Properties,
        }
    }
}

/// Marker for "valid inputs, but nothing to do" conditions (exit code 4).
#[derive(Debug)]
struct EmptyWork(String);

impl std::fmt::Display for EmptyWork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for EmptyWork {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logger(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<EmptyWork>().is_some() {
            return 4;
        }
        if let Some(engine) = cause.downcast_ref::<EngineError>() {
            let mut engine = engine;
            while let EngineError::Round { source, .. } = engine {
                engine = source;
            }
            return match engine {
                EngineError::CorruptBundle(_) => 3,
                EngineError::NoTrainingPairs => 4,
                _ => 2,
            };
        }
    }
    2
}

struct StderrLogger {
    level: log::LevelFilter,
}

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

fn init_logger(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    if log::set_boxed_logger(Box::new(StderrLogger { level })).is_ok() {
        log::set_max_level(level);
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Build { ref tables, ref kb, ref out, ref synonym_overrides } => {
            cmd_build(config, tables, kb, out, synonym_overrides.as_deref())
        }
        Command::Generate {
            ref index,
            ref models,
            ref query,
            ref queries,
            rounds,
            format,
            ref entity_weights,
            ref schema_weights,
        } => cmd_generate(
            config,
            index,
            models,
            query.as_deref(),
            queries.as_deref(),
            rounds,
            format,
            entity_weights.as_deref(),
            schema_weights.as_deref(),
            cli.threads,
        ),
        Command::Train { ref tables, ref kb, task, repr, ref out, ref loss_csv } => {
            cmd_train(config, tables, kb, task, repr, out, loss_csv.as_deref())
        }
        Command::Eval { ref run, ref qrels, ref metrics, format } => {
            cmd_eval(run, qrels, metrics, format)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)
            .with_context(|| format!("cannot load config {}", path.display()))?,
        None => Config::default(),
    };
    for kv in &cli.set {
        let (key, value) =
            kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        config.set(key.trim(), value).with_context(|| format!("bad --set {kv}"))?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn open(path: &Path, what: &str) -> Result<BufReader<File>> {
    let file =
        File::open(path).with_context(|| format!("cannot open {what} {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn warn_parse_report(what: &str, report: &ParseReport) {
    for (line, message) in &report.errors {
        log::warn!("{what} line {line}: {message}");
    }
}

fn analyzer_for(config: &Config) -> Result<Analyzer> {
    Ok(match &config.stopwords_file {
        Some(path) => Analyzer::from_stopword_file(Path::new(path))?,
        None => Analyzer::default(),
    })
}

fn load_corpus(
    config: &Config,
    tables: &Path,
    kb: &Path,
) -> Result<(tablegen::corpus::EntityStore, TableCorpus)> {
    let (store, kb_report) = parse_kb_dump(open(kb, "knowledge base")?)?;
    warn_parse_report("knowledge base", &kb_report);
    let (raw, table_report) = parse_table_corpus(open(tables, "table corpus")?)?;
    warn_parse_report("table corpus", &table_report);
    let (corpus, classify) = TableCorpus::from_raw(raw, &store);
    log::info!(
        "{} relational tables kept, {} non-relational dropped, {} entities; seed {}",
        classify.relational,
        classify.non_relational,
        store.len(),
        config.seed,
    );
    Ok((store, corpus))
}

fn cmd_build(
    config: Config,
    tables: &Path,
    kb: &Path,
    out: &Path,
    synonym_overrides: Option<&Path>,
) -> Result<()> {
    let (store, corpus) = load_corpus(&config, tables, kb)?;
    let rules = match synonym_overrides {
        Some(path) => parse_overrides(open(path, "synonym overrides")?)?,
        None => Vec::new(),
    };
    let resources = Resources::assemble(store, corpus, ModelSet::default(), config, &rules)?;
    let manifest = save_bundle(out, &resources)?;
    for artifact in &manifest.artifacts {
        println!("{}  {}", artifact.sha256, artifact.file);
    }
    println!("bundle written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    config: Config,
    index: &Path,
    models_dir: &Path,
    query: Option<&str>,
    queries: Option<&Path>,
    rounds: Option<usize>,
    format: Format,
    entity_weights: Option<&Path>,
    schema_weights: Option<&Path>,
    threads: Option<usize>,
) -> Result<()> {
    let parts = load_bundle(index)
        .with_context(|| format!("cannot load bundle {}", index.display()))?;
    let models = ModelSet::load_dir(models_dir)
        .with_context(|| format!("cannot load models from {}", models_dir.display()))?;
    let resources = parts.into_resources(models, config)?;

    let mut params = GenerationParams::from_config(&resources.config);
    if let Some(r) = rounds {
        params.rounds = r;
    }
    if let Some(path) = entity_weights {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        params.entity_weights = parse_weights(&text, ENTITY_FEATURES)?;
    }
    if let Some(path) = schema_weights {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        params.schema_weights = parse_weights(&text, SCHEMA_FEATURES)?;
    }

    let batch: Vec<(String, String)> = match (query, queries) {
        (Some(q), None) => vec![("q1".to_string(), q.to_string())],
        (None, Some(path)) => parse_queries(open(path, "query file")?)?,
        (None, None) => bail!("need --query or --queries"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    if batch.is_empty() {
        return Err(EmptyWork("query file holds no queries".to_string()).into());
    }

    let generated: Vec<(String, GeneratedTable)> = in_pool(threads, || {
        batch
            .par_iter()
            .map(|(id, text)| {
                generate_table(&resources, text, &params).map(|t| (id.clone(), t))
            })
            .collect::<std::result::Result<Vec<_>, EngineError>>()
    })??;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (id, table) in &generated {
        match format {
            Format::Json => writeln!(out, "{}", table.to_json())?,
            Format::Tsv => {
                writeln!(out, "# {id}\t{}", table.query)?;
                out.write_all(table.to_tsv().as_bytes())?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn in_pool<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot build thread pool")?;
            Ok(pool.install(work))
        }
    }
}

fn cmd_train(
    config: Config,
    tables: &Path,
    kb: &Path,
    task: Task,
    repr: Repr,
    out: &Path,
    loss_csv: Option<&Path>,
) -> Result<()> {
    let (store, corpus) = load_corpus(&config, tables, kb)?;
    let analyzer = analyzer_for(&config)?;
    let (pairs, report) = match task {
        Task::SchemaMatcher => schema_training_pairs(corpus.tables(), &analyzer, config.seed),
        Task::EntityMatcher => {
            entity_label_pairs(corpus.tables(), &store, repr.into(), &analyzer, config.seed)
        }
    };
    log::info!(
        "{} positive / {} negative pairs ({} queries empty, {} starved of negatives)",
        report.positives,
        report.negatives,
        report.empty_queries,
        report.starved_queries,
    );
    let vocab: BTreeSet<String> = pairs
        .iter()
        .flat_map(|p| p.query.iter().chain(p.doc.iter()).cloned())
        .collect();
    let embedding = EmbeddingTable::random_init(vocab, config.embedding_dim, config.seed);
    let mut model =
        DrrmTksModel::new(embedding, config.k_signals, (config.hidden1, config.hidden2), config.seed);
    let opts = TrainOptions {
        learning_rate: config.learning_rate,
        epochs: config.epochs,
        margin: config.margin,
        seed: config.seed,
    };
    let curve = train(&mut model, &pairs, &opts)?;
    model.save(out)?;
    if let Some(path) = loss_csv {
        let mut csv = String::from("epoch,mean_hinge_loss\n");
        for (epoch, loss) in curve.iter().enumerate() {
            csv.push_str(&format!("{},{loss}\n", epoch + 1));
        }
        std::fs::write(path, csv)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "trained on {} pairs for {} epochs; final mean loss {:.6}; model written to {}",
        pairs.len(),
        curve.len(),
        curve.last().copied().unwrap_or(0.0),
        out.display(),
    );
    Ok(())
}

enum MetricSpec {
    Ndcg(usize),
    Map,
    Mrr,
}

impl MetricSpec {
    fn parse(name: &str) -> Result<MetricSpec> {
        let name = name.trim();
        match name {
            "map" => Ok(MetricSpec::Map),
            "mrr" => Ok(MetricSpec::Mrr),
            _ => match name.strip_prefix("ndcg@").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 => Ok(MetricSpec::Ndcg(k)),
                _ => bail!("unknown metric `{name}` (expected ndcg@K, map, or mrr)"),
            },
        }
    }

    fn name(&self) -> String {
        match self {
            MetricSpec::Ndcg(k) => format!("ndcg@{k}"),
            MetricSpec::Map => "map".to_string(),
            MetricSpec::Mrr => "mrr".to_string(),
        }
    }

    fn compute(&self, run: &Run, qrels: &Qrels) -> MetricSummary {
        match self {
            MetricSpec::Ndcg(k) => ndcg_at_k(run, qrels, *k),
            MetricSpec::Map => map_mrr(run, qrels).0,
            MetricSpec::Mrr => map_mrr(run, qrels).1,
        }
    }
}

fn cmd_eval(run_path: &Path, qrels_path: &Path, metrics: &str, format: Format) -> Result<()> {
    let qrels = parse_qrels(open(qrels_path, "qrels file")?)
        .with_context(|| format!("cannot parse {}", qrels_path.display()))?;
    let run = parse_run(open(run_path, "run file")?)
        .with_context(|| format!("cannot parse {}", run_path.display()))?;
    if run.is_empty() {
        log::warn!("run file holds no rankings; every metric is zero");
    }
    let specs = metrics
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(MetricSpec::parse)
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        bail!("--metrics names no metrics");
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut report = serde_json::Map::new();
    for spec in &specs {
        let summary = spec.compute(&run, &qrels);
        let name = spec.name();
        match format {
            Format::Tsv => {
                for pq in &summary.per_query {
                    writeln!(out, "{name}\t{}\t{:.6}", pq.query, pq.value)?;
                }
                writeln!(out, "{name}\tmean\t{:.6}", summary.mean)?;
            }
            Format::Json => {
                let per_query: serde_json::Map<String, serde_json::Value> = summary
                    .per_query
                    .iter()
                    .map(|pq| (pq.query.clone(), pq.value.into()))
                    .collect();
                report.insert(
                    name,
                    serde_json::json!({
                        "per_query": per_query,
                        "mean": summary.mean,
                        "skipped": summary.skipped,
                    }),
                );
            }
        }
    }
    if format == Format::Json {
        writeln!(out, "{}", serde_json::Value::Object(report))?;
    }
    Ok(())
}
