//! Command-line front end. Each pipeline stage is a subcommand over a
//! shared data directory; built artifacts are plain JSON so they can be
//! inspected and diffed.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use groundwire::clients::{
    FailingGenerator, FaithfulEcho, HeuristicRewriter, HttpGenerator, HttpJudgeClient,
    OverlapReranker, UrlFabricator, Verbose,
};
use groundwire::config::PipelineConfig;
use groundwire::error::{Error, Result};
use groundwire::eval::{load_cases, run_eval, synth::synth_corpus, write_report};
use groundwire::graph::{
    build_graph, detect_communities, graph_retrieve, Communities, GazetteerExtractor,
    KnowledgeGraph,
};
use groundwire::grpo::env::{EnvironmentSpec, ToyEnvironment};
use groundwire::grpo::train::{train_toy, write_reward_csv, TrainConfig};
use groundwire::guardrail::{Guardrail, GuardrailConfig, UrlPolicy};
use groundwire::hybrid::{
    DenseIndex, EmbeddingRecord, HashedEmbedder, HybridChannel, LexicalIndex, LexicalIndexData,
    QueryBundle,
};
use groundwire::pipeline::{Generator, Pipeline, PipelineClients};
use groundwire::reward::judge::{ClientJudge, Grade, JudgeRequest, JudgeResult, RuleJudge};
use groundwire::reward::validate::{
    HttpStatusChecker, PrefixPool, StaticStatusChecker, StatusChecker,
};
use groundwire::reward::{canonicalize, score_answer};
use groundwire::store::{CorpusStore, Snapshot};

#[derive(Parser)]
#[command(name = "groundwire", version, about = "Evidence-grounded QA pipeline")]
struct Cli {
    /// Directory holding corpus.jsonl, citations.jsonl and built artifacts.
    #[arg(long, global = true, default_value = "data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Persona {
    /// Echoes the top evidence and cites only evidence URLs.
    Faithful,
    /// Fabricates a citation on half the queries.
    Fabricator,
    /// Faithful content wrapped in boilerplate.
    Verbose,
    /// Always errors; exercises degradation paths.
    Failing,
}

impl Persona {
    fn generator(self) -> Arc<dyn Generator> {
        match self {
            Persona::Faithful => Arc::new(FaithfulEcho::default()),
            Persona::Fabricator => Arc::new(UrlFabricator::default()),
            Persona::Verbose => Arc::new(Verbose::default()),
            Persona::Failing => Arc::new(FailingGenerator::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Lexical,
    Dense,
    Hybrid,
}

#[derive(Subcommand)]
enum Command {
    /// Append chunks from a JSONL file into the corpus.
    Ingest { file: PathBuf },
    /// Record citations for chunk ids (feeds the heat window).
    Cite {
        chunk_ids: Vec<String>,
        #[arg(long)]
        now: Option<i64>,
    },
    /// Print per-chunk citation heat, hottest first.
    HeatReport,
    /// Select the hot subset and write snapshot.json.
    Snapshot {
        #[arg(long)]
        percent: u32,
        #[arg(long)]
        now: Option<i64>,
    },
    /// Entity graph over the snapshot.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Lexical and dense indexes over the snapshot.
    Index {
        #[command(subcommand)]
        cmd: IndexCmd,
    },
    /// Query one retrieval channel from the built artifacts.
    Search {
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ChannelArg::Hybrid)]
        channel: ChannelArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full orchestrated retrieval.
    Retrieve {
        query: String,
        /// Print per-channel contributions and dedup decisions.
        #[arg(long)]
        explain: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score an answer file against evidence and a reference.
    Reward {
        /// Candidate answer, plain text.
        #[arg(long)]
        answer: PathBuf,
        /// Evidence URLs, one per line.
        #[arg(long)]
        evidence: PathBuf,
        /// Reference answer / grading materials, plain text.
        #[arg(long)]
        gt: PathBuf,
        /// Use the stub judge and checker instead of live endpoints.
        #[arg(long)]
        offline: bool,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        prefix_pool: Option<PathBuf>,
        /// Judge endpoint, required unless --offline.
        #[arg(long)]
        judge_endpoint: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Filter stdin to stdout, redacting unvalidated URLs and
    /// blocklisted terms; events go to a JSONL sidecar.
    Guardrail {
        /// Evidence URLs, one per line.
        #[arg(long)]
        evidence: PathBuf,
        /// Approved URL prefixes, one per line.
        #[arg(long)]
        prefix_pool: PathBuf,
        /// Blocklisted terms, one per line.
        #[arg(long)]
        blocklist: Option<PathBuf>,
        /// Events sidecar path.
        #[arg(long, default_value = "guardrail_events.jsonl")]
        events: PathBuf,
        /// Probe approved-prefix URLs over the network; default treats
        /// them as dead (fail closed).
        #[arg(long)]
        live: bool,
    },
    /// Train the toy template policy with GRPO and write the reward CSV.
    TrainToy {
        /// Training hyperparameters, JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Environment spec JSON; defaults to the built-in fixture.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value = "reward_curve.csv")]
        out: PathBuf,
    },
    /// Serve POST /v1/chat and GET /healthz.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, value_enum, default_value_t = Persona::Faithful)]
        persona: Persona,
        /// Remote generator endpoint; overrides --persona.
        #[arg(long)]
        generator_endpoint: Option<String>,
        #[arg(long)]
        prefix_pool: Option<PathBuf>,
        /// Probe approved-prefix URLs over the network.
        #[arg(long)]
        live: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an evaluation batch and write report artifacts.
    Eval {
        /// Corpus JSONL to index (in memory, whole corpus hot).
        #[arg(long)]
        corpus: PathBuf,
        /// Cases JSONL.
        #[arg(long)]
        cases: PathBuf,
        /// Report directory.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Persona::Fabricator)]
        persona: Persona,
        #[arg(long)]
        prefix_pool: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic corpus, cases, and prefix pool.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        hop_fraction: f64,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Build graph.json from the snapshot.
    Build {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Detect communities and write communities.json.
    Communities {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Local graph search from the built graph.json.
    Query {
        query: String,
        #[arg(long, default_value_t = 2)]
        hops: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Build index.json (BM25 postings) and embeddings.json.
    Build {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Wire form of one corpus chunk, shared by ingest/eval/synth files.
#[derive(Serialize, Deserialize)]
struct ChunkLine {
    id: String,
    text: String,
    #[serde(default)]
    source_doc: String,
    #[serde(default)]
    updated_at: i64,
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::stock()),
    }
}

fn now_unix() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Opens the store and restores snapshot.json when present.
fn open_store(data_dir: &Path) -> Result<CorpusStore> {
    let mut store = CorpusStore::open(data_dir)?;
    let snap_path = data_dir.join("snapshot.json");
    if snap_path.exists() {
        store.restore_snapshot(read_json::<Snapshot>(&snap_path)?);
    }
    Ok(store)
}

fn snapshot_texts(store: &CorpusStore) -> Result<BTreeMap<String, String>> {
    let snapshot = store.snapshot();
    if snapshot.is_empty() {
        return Err(Error::Config(
            "snapshot is empty; run `snapshot --percent N` first".into(),
        ));
    }
    let mut texts = BTreeMap::new();
    for id in &snapshot.chunk_ids {
        if let Some(chunk) = store.get(id) {
            texts.insert(id.clone(), chunk.text.clone());
        }
    }
    Ok(texts)
}

fn load_store_from_jsonl(path: &Path) -> Result<CorpusStore> {
    let mut store = CorpusStore::in_memory();
    let raw = std::fs::read_to_string(path)?;
    let mut latest = 0i64;
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ChunkLine = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            file: path.display().to_string(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        latest = latest.max(rec.updated_at);
        store.ingest(rec.id, rec.text, rec.source_doc, rec.updated_at)?;
    }
    store.rolling_update(100, latest + 1);
    Ok(store)
}

fn build_pipeline(
    store: &CorpusStore,
    config: &PipelineConfig,
    generator: Arc<dyn Generator>,
    pool: PrefixPool,
    live: bool,
) -> Result<Pipeline> {
    let checker: Arc<dyn StatusChecker> = if live {
        Arc::new(HttpStatusChecker::new(Duration::from_millis(
            config.reward.http_timeout_ms,
        )))
    } else {
        Arc::new(StaticStatusChecker::uniform(None))
    };
    Pipeline::build(
        store,
        config,
        PipelineClients {
            generator,
            rewriter: Some(Arc::new(HeuristicRewriter)),
            reranker: Some(Arc::new(OverlapReranker)),
            checker,
            prefix_pool: pool,
        },
    )
}

fn main() {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_target(false)
        .init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let data_dir = cli.data_dir;
    match cli.command {
        Command::Ingest { file } => {
            std::fs::create_dir_all(&data_dir)?;
            let mut store = open_store(&data_dir)?;
            let raw = std::fs::read_to_string(&file)?;
            let mut count = 0usize;
            for (idx, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: ChunkLine =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                        file: file.display().to_string(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                store.ingest(rec.id, rec.text, rec.source_doc, rec.updated_at)?;
                count += 1;
            }
            println!("ingested {count} chunks ({} total)", store.len());
        }
        Command::Cite { chunk_ids, now } => {
            let mut store = open_store(&data_dir)?;
            let at = now.unwrap_or_else(now_unix);
            for id in &chunk_ids {
                let heat = store.record_citation(id, at)?;
                println!("{id}: heat {heat}");
            }
        }
        Command::HeatReport => {
            let store = open_store(&data_dir)?;
            for row in store.heat_report() {
                println!("{}\t{}\t{}", row.chunk_id, row.heat, row.updated_at);
            }
        }
        Command::Snapshot { percent, now } => {
            let mut store = open_store(&data_dir)?;
            let snapshot = store.rolling_update(percent, now.unwrap_or_else(now_unix));
            write_json(&data_dir.join("snapshot.json"), snapshot.as_ref())?;
            println!(
                "snapshot: {} of {} chunks ({percent}%) at {}",
                snapshot.len(),
                store.len(),
                snapshot.created_at
            );
        }
        Command::Graph { cmd } => run_graph(&data_dir, cmd)?,
        Command::Index { cmd } => run_index(&data_dir, cmd)?,
        Command::Search { query, k, channel, config } => {
            run_search(&data_dir, &query, k, channel, &config)?
        }
        Command::Retrieve { query, explain, config } => {
            let config = load_config(&config)?;
            let store = open_store(&data_dir)?;
            let pipeline = build_pipeline(
                &store,
                &config,
                Arc::new(FailingGenerator::default()),
                PrefixPool::default(),
                false,
            )?;
            let (evidence, trace) = pipeline.orchestrator.retrieve(&query);
            if explain {
                println!("route: {}", trace.route.reason);
                println!("bundle: {:?}", trace.bundle.all().collect::<Vec<_>>());
                for o in &trace.outcomes {
                    println!(
                        "channel {}: {} hits in {:.1} ms{}",
                        o.name,
                        o.hits.len(),
                        o.elapsed_ms,
                        if o.timed_out { " (timed out)" } else { "" }
                    );
                    for h in &o.hits {
                        println!("  {} {:.4}", h.chunk_id, h.score);
                    }
                }
                println!("merged (rrf, provenance):");
                for m in &trace.merged {
                    println!("  {} {:.5} {:?}", m.chunk_id, m.score, m.channels);
                }
                for d in &trace.degradations {
                    println!("degradation [{}]: {}", d.component, d.detail);
                }
            }
            println!("evidence ({} tokens):", evidence.token_count);
            for item in &evidence.items {
                println!("  {} {:.5} {:?}", item.chunk_id, item.score, item.channels);
            }
        }
        Command::Reward {
            answer,
            evidence,
            gt,
            offline,
            query,
            prefix_pool,
            judge_endpoint,
            config,
        } => {
            let config = load_config(&config)?;
            let answer_text = std::fs::read_to_string(&answer)?;
            let gt_text = std::fs::read_to_string(&gt)?;
            let evidence_urls: std::collections::BTreeSet<String> =
                read_lines(&evidence)?.iter().map(|l| canonicalize(l)).collect();
            let pool = match &prefix_pool {
                Some(p) => PrefixPool::from_file(p)?,
                None => PrefixPool::default(),
            };
            let request = JudgeRequest {
                query: query.unwrap_or_default(),
                history: String::new(),
                materials: gt_text.clone(),
                answer_a: gt_text,
                answer_b: answer_text,
            };
            let breakdown = if offline {
                let judge = RuleJudge::new(
                    BTreeMap::new(),
                    JudgeResult {
                        grade: Grade::Soso,
                        style: 5,
                        safety: 10,
                        reason: "offline stub judge".into(),
                    },
                );
                let checker = StaticStatusChecker::uniform(None);
                score_answer(&judge, &request, &evidence_urls, &pool, &checker, &config.reward)?
            } else {
                let endpoint = judge_endpoint.ok_or_else(|| {
                    Error::Config("--judge-endpoint is required without --offline".into())
                })?;
                let judge = ClientJudge::new(HttpJudgeClient::new(
                    endpoint,
                    Duration::from_millis(config.reward.http_timeout_ms),
                )?);
                let checker =
                    HttpStatusChecker::new(Duration::from_millis(config.reward.http_timeout_ms));
                score_answer(&judge, &request, &evidence_urls, &pool, &checker, &config.reward)?
            };
            println!("{}", serde_json::to_string_pretty(&breakdown)?);
        }
        Command::Guardrail { evidence, prefix_pool, blocklist, events, live } => {
            let evidence_urls: std::collections::BTreeSet<String> =
                read_lines(&evidence)?.iter().map(|l| canonicalize(l)).collect();
            let pool = PrefixPool::from_file(&prefix_pool)?;
            let checker: Arc<dyn StatusChecker> = if live {
                Arc::new(HttpStatusChecker::new(Duration::from_millis(3000)))
            } else {
                Arc::new(StaticStatusChecker::uniform(None))
            };
            let config = match &blocklist {
                Some(p) => GuardrailConfig::with_blocklist(read_lines(p)?),
                None => GuardrailConfig::default(),
            };
            let mut guard = Guardrail::new(config, UrlPolicy::new(evidence_urls, pool, checker));

            let mut stdin = std::io::stdin().lock();
            let mut stdout = std::io::stdout().lock();
            let mut buf = [0u8; 8192];
            let mut pending: Vec<u8> = Vec::new();
            loop {
                let n = stdin.read(&mut buf)?;
                if n == 0 {
                    break;
                }
                pending.extend_from_slice(&buf[..n]);
                // Feed only complete UTF-8; keep a split char for later.
                let valid = match std::str::from_utf8(&pending) {
                    Ok(s) => s.len(),
                    Err(e) => e.valid_up_to(),
                };
                if valid > 0 {
                    let chunk = std::str::from_utf8(&pending[..valid]).expect("checked");
                    let out = guard.scan_chunk(chunk);
                    stdout.write_all(out.as_bytes())?;
                    stdout.flush()?;
                    pending.drain(..valid);
                }
            }
            if !pending.is_empty() {
                return Err(Error::Config("stdin ended mid UTF-8 sequence".into()));
            }
            let tail = guard.finalize();
            stdout.write_all(tail.as_bytes())?;
            stdout.flush()?;
            let mut sidecar = std::fs::File::create(&events)?;
            for event in guard.events() {
                let mut line = serde_json::to_string(event)?;
                line.push('\n');
                sidecar.write_all(line.as_bytes())?;
            }
            eprintln!("{} events -> {}", guard.events().len(), events.display());
        }
        Command::TrainToy { config, seed, env, out } => {
            let mut train_config = match &config {
                Some(p) => read_json::<TrainConfig>(p)?,
                None => TrainConfig::default(),
            };
            if let Some(seed) = seed {
                train_config.seed = seed;
            }
            let spec = match &env {
                Some(p) => EnvironmentSpec::load(p)?,
                None => EnvironmentSpec::toy_fixture(),
            };
            let environment = ToyEnvironment::new(spec)?;
            let report = train_toy(&environment, &train_config)?;
            write_reward_csv(&out, &report.steps)?;
            let last = report.steps.last().expect("at least one step");
            println!(
                "step {}: mean_reward {:.3}, r_h {:.3}",
                last.step, last.mean_reward, last.r_h
            );
            for (prompt, mass) in report.best_mass.iter().enumerate() {
                println!("prompt {prompt}: best-template mass {mass:.3}");
            }
            println!("reward curve -> {}", out.display());
        }
        Command::Serve { addr, persona, generator_endpoint, prefix_pool, live, config } => {
            let config = load_config(&config)?;
            let store = open_store(&data_dir)?;
            let generator: Arc<dyn Generator> = match generator_endpoint {
                Some(endpoint) => Arc::new(HttpGenerator::new(
                    endpoint,
                    Duration::from_millis(config.reward.http_timeout_ms),
                )?),
                None => persona.generator(),
            };
            let pool = match &prefix_pool {
                Some(p) => PrefixPool::from_file(p)?,
                None => PrefixPool::default(),
            };
            let pipeline = Arc::new(build_pipeline(&store, &config, generator, pool, live)?);
            println!("serving {} chunks on http://{addr}", pipeline.num_indexed());
            tokio::runtime::Runtime::new()?
                .block_on(groundwire::serve::serve(pipeline, addr))?;
        }
        Command::Eval { corpus, cases, report, persona, prefix_pool, config } => {
            let config = load_config(&config)?;
            let store = load_store_from_jsonl(&corpus)?;
            let cases = load_cases(&cases)?;
            let pool = match &prefix_pool {
                Some(p) => PrefixPool::from_file(p)?,
                None => PrefixPool::default(),
            };
            let pipeline = build_pipeline(&store, &config, persona.generator(), pool, false)?;
            let (results, summary) = run_eval(&pipeline, &cases)?;
            write_report(&report, &cases, &results, &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            println!("artifacts -> {}", report.display());
        }
        Command::Synth { seed, size, hop_fraction, out } => {
            let bundle = synth_corpus(seed, size, hop_fraction)?;
            std::fs::create_dir_all(&out)?;
            let mut corpus = std::fs::File::create(out.join("corpus.jsonl"))?;
            for (idx, chunk) in bundle.chunks.iter().enumerate() {
                let line = serde_json::to_string(&ChunkLine {
                    id: chunk.id.clone(),
                    text: chunk.text.clone(),
                    source_doc: "synth".into(),
                    updated_at: idx as i64,
                })?;
                corpus.write_all(line.as_bytes())?;
                corpus.write_all(b"\n")?;
            }
            let mut cases = std::fs::File::create(out.join("cases.jsonl"))?;
            for case in &bundle.cases {
                let mut line = serde_json::to_string(case)?;
                line.push('\n');
                cases.write_all(line.as_bytes())?;
            }
            std::fs::write(out.join("prefix_pool.txt"), bundle.prefix_pool.join("\n") + "\n")?;
            println!(
                "synth: {} chunks, {} cases ({} hop) -> {}",
                bundle.chunks.len(),
                bundle.cases.len(),
                bundle.cases.iter().filter(|c| c.hop).count(),
                out.display()
            );
        }
    }
    Ok(())
}

fn run_graph(data_dir: &Path, cmd: GraphCmd) -> Result<()> {
    match cmd {
        GraphCmd::Build { config } => {
            let config = load_config(&config)?;
            let _ = config;
            let store = open_store(data_dir)?;
            let texts = snapshot_texts(&store)?;
            let extractor = GazetteerExtractor::from_corpus(
                texts.values().map(|t| t.as_str()),
                &[] as &[&str],
            );
            let built = build_graph(&store.snapshot(), &store, &extractor)?;
            write_json(&data_dir.join("graph.json"), &built.graph)?;
            println!(
                "graph: {} entities, {} relations, {} chunks without entities",
                built.graph.entities.len(),
                built.graph.relations.len(),
                built.empty_chunks.len()
            );
        }
        GraphCmd::Communities { config } => {
            let config = load_config(&config)?;
            let store = open_store(data_dir)?;
            let graph: KnowledgeGraph = read_json(&data_dir.join("graph.json"))?;
            let communities = detect_communities(&graph, &store, &store.snapshot(), &config.graph);
            write_json(&data_dir.join("communities.json"), &communities)?;
            for (depth, level) in communities.levels.iter().enumerate() {
                println!("level {depth}: {} communities", level.members.len());
            }
        }
        GraphCmd::Query { query, hops, k } => {
            let graph: KnowledgeGraph = read_json(&data_dir.join("graph.json"))?;
            let communities: Communities = read_json(&data_dir.join("communities.json"))?;
            for hit in graph_retrieve(&graph, &communities, &query, hops, k) {
                println!("{} {:.4}", hit.chunk_id, hit.score);
            }
        }
    }
    Ok(())
}

fn run_index(data_dir: &Path, cmd: IndexCmd) -> Result<()> {
    match cmd {
        IndexCmd::Build { config } => {
            let config = load_config(&config)?;
            let store = open_store(data_dir)?;
            let texts = snapshot_texts(&store)?;
            let docs = || texts.iter().map(|(id, t)| (id.as_str(), t.as_str()));
            let lexical = LexicalIndex::build(docs(), config.hybrid.k1, config.hybrid.b);
            write_json(&data_dir.join("index.json"), lexical.data())?;
            let embedder = HashedEmbedder::new(config.hybrid.dims);
            let (dense, _) = DenseIndex::from_embedder(docs(), &embedder)?;
            write_json(
                &data_dir.join("embeddings.json"),
                &serde_json::json!({ "dims": dense.dims(), "records": dense.records() }),
            )?;
            println!(
                "index: {} terms, {} vectors x {} dims",
                lexical.data().postings.len(),
                dense.len(),
                dense.dims()
            );
        }
    }
    Ok(())
}

fn run_search(
    data_dir: &Path,
    query: &str,
    k: usize,
    channel: ChannelArg,
    config: &Option<PathBuf>,
) -> Result<()> {
    let config = load_config(config)?;
    let data: LexicalIndexData = read_json(&data_dir.join("index.json"))?;
    let lexical = LexicalIndex::from_data(data, Arc::new(groundwire::text::DefaultTokenizer));
    #[derive(Deserialize)]
    struct EmbeddingsFile {
        dims: usize,
        records: Vec<EmbeddingRecord>,
    }
    let emb: EmbeddingsFile = read_json(&data_dir.join("embeddings.json"))?;
    let (dense, _) = DenseIndex::build(emb.records, emb.dims);
    let embedder = HashedEmbedder::new(emb.dims);
    match channel {
        ChannelArg::Lexical => {
            for hit in lexical.search(query, k)? {
                println!("{} {:.4}", hit.chunk_id, hit.score);
            }
        }
        ChannelArg::Dense => {
            for hit in dense.search_text(&embedder, query, k)? {
                println!("{} {:.4}", hit.chunk_id, hit.score);
            }
        }
        ChannelArg::Hybrid => {
            let channel = HybridChannel {
                lexical: Arc::new(lexical),
                dense: Arc::new(dense),
                embedder: Arc::new(embedder),
                rrf_k: config.hybrid.rrf_k,
            };
            let (hits, degradations) = channel.run(&QueryBundle::bare(query), k);
            for hit in hits {
                println!("{} {:.4}", hit.chunk_id, hit.score);
            }
            for d in degradations {
                eprintln!("degradation [{}]: {}", d.component, d.detail);
            }
        }
    }
    Ok(())
}
