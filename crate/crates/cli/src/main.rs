//! `reina`: build BM25 indices over training data and augment datasets with
//! retrieved instances.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use reina_core::bm25::{merge_indices, retrieve, Bm25Params, InvertedIndex};
use reina_core::dataset::{open_dataset, DatasetRecord, JsonlWriter};
use reina_core::kg::KnowledgeBase;
use reina_core::pipeline::{
    attach_knowledge, index_instances, AugmentStats, Augmenter, Mode, PipelineConfig, StoredValue, TaskKind,
    TrainingInstance, DEFAULT_SEPARATOR,
};
use reina_core::text::{prefix_text, tokenize};
use reina_core::{ReinaError, Result};

const PREVIEW_TOKENS: usize = 30;

#[derive(Debug, Parser)]
#[command(name = "reina", version, about = "Retrieve similar training instances and augment inputs with them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index over a training set.
    Index(IndexArgs),
    /// Print the top hits for a query as JSON lines.
    Retrieve(RetrieveArgs),
    /// Augment every record of a dataset with retrieved instances.
    Augment(AugmentArgs),
    /// Merge several indices into one.
    Merge(MergeArgs),
}

#[derive(Debug, Args)]
struct KnowledgeArgs {
    /// Concept graph edges (head<TAB>relation<TAB>tail).
    #[arg(long, requires = "definitions")]
    concepts: Option<PathBuf>,
    /// Concept definitions (concept<TAB>definition).
    #[arg(long, requires = "concepts")]
    definitions: Option<PathBuf>,
}

impl KnowledgeArgs {
    fn load(&self) -> Result<Option<KnowledgeBase>> {
        match (&self.concepts, &self.definitions) {
            (Some(edges), Some(defs)) => Ok(Some(KnowledgeBase::load(edges, defs)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    task: TaskKind,
    /// Training set (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Index file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    /// Split language-modeling records into chunk pairs of this many words.
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    separator: String,
    #[command(flatten)]
    knowledge: KnowledgeArgs,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(short, long, default_value_t = 5)]
    k: usize,
    /// Document id to leave out of the results (repeatable).
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    task: TaskKind,
    #[arg(long)]
    index: PathBuf,
    /// Dataset to augment (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Augmented output (JSONL).
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "training")]
    mode: Mode,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 600)]
    input_budget: usize,
    #[arg(long, default_value_t = 1024)]
    total_budget: usize,
    #[arg(long, default_value_t = 512)]
    lm_context: usize,
    #[arg(long, default_value_t = 7)]
    overlap_n: usize,
    #[arg(long, default_value_t = 3)]
    overlap_max: usize,
    /// Keep retrieved values regardless of n-gram overlap with the gold label.
    #[arg(long)]
    no_overlap_filter: bool,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    separator: String,
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Worker threads; 1 runs serially.
    #[arg(long, env = "REINA_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    knowledge: KnowledgeArgs,
}

impl AugmentArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            task: self.task,
            mode: self.mode,
            top_k: self.top_k,
            input_budget_tokens: self.input_budget,
            total_budget_tokens: self.total_budget,
            lm_context_tokens: self.lm_context,
            overlap_n: self.overlap_n,
            overlap_max: (!self.no_overlap_filter).then_some(self.overlap_max),
            separator: self.separator.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct MergeArgs {
    /// Merged index file to write.
    #[arg(long)]
    output: PathBuf,
    /// Indices to merge, in order.
    #[arg(required = true)]
    indices: Vec<PathBuf>,
}

fn index_summary(index: &InvertedIndex) -> String {
    json!({
        "n_docs": index.n_docs(),
        "avgdl": index.avgdl(),
        "vocab_size": index.vocab_size(),
    })
    .to_string()
}

fn record_error(record: &DatasetRecord, err: ReinaError) -> ReinaError {
    match err {
        ReinaError::Validation(message) | ReinaError::InvalidParameter(message) => ReinaError::Record {
            line: record.line,
            message,
        },
        other => other,
    }
}

/// Instances of one record, validated for `mode`.
fn record_instances(
    record: &DatasetRecord,
    task: TaskKind,
    mode: Mode,
    chunk_size: Option<usize>,
) -> Result<Vec<TrainingInstance>> {
    let instances = record
        .instances(task, chunk_size)
        .map_err(|e| record_error(record, e))?;
    for inst in &instances {
        inst.validate(task, mode).map_err(|e| record_error(record, e))?;
    }
    Ok(instances)
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let params = Bm25Params::new(args.k1, args.b)?;
    let kb = args.knowledge.load()?;
    let mut instances = Vec::new();
    for record in open_dataset(&args.input)? {
        let record = record?;
        for mut inst in record_instances(&record, args.task, Mode::Training, args.chunk_size)? {
            if let (TaskKind::MultiChoiceQaWithKnowledge, Some(kb)) = (args.task, &kb) {
                attach_knowledge(&mut inst, kb, &args.separator);
            }
            if args.task == TaskKind::MultiChoiceQaWithKnowledge && inst.knowledge_k.is_none() {
                return Err(ReinaError::Record {
                    line: record.line,
                    message: format!(
                        "instance `{}` has no knowledge; pass --concepts/--definitions",
                        inst.id
                    ),
                });
            }
            instances.push(inst);
        }
    }
    let index = index_instances(args.task, &instances, params)?;
    index.save(&args.output)?;
    println!("{}", index_summary(&index));
    Ok(())
}

fn cmd_retrieve(args: RetrieveArgs) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let task: Option<TaskKind> = index.tag().parse().ok();
    let exclude: HashSet<String> = args.exclude.into_iter().collect();
    let hits = retrieve(&tokenize(&args.query), args.k, &index, Some(&exclude))?;
    for hit in hits {
        let raw = index.value_ref(&hit.doc_id).unwrap_or_default();
        let display = match task {
            Some(task) => StoredValue::decode(task, raw)?.display_text(),
            None => raw.to_owned(),
        };
        let line = json!({
            "doc_id": hit.doc_id,
            "score": hit.score,
            "rank": hit.rank,
            "value_preview": prefix_text(&display, PREVIEW_TOKENS),
        });
        println!("{line}");
    }
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let cfg = args.config()?;
    let kb = args.knowledge.load()?;
    let index = InvertedIndex::load(&args.index)?;
    let mut augmenter = Augmenter::new(&index, &cfg)?;
    if let Some(kb) = &kb {
        augmenter = augmenter.with_knowledge(kb);
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
        .max(1);
    let batch_size = 256 * workers;

    let mut writer = JsonlWriter::create(&args.output)?;
    let mut stats = AugmentStats::default();
    let mut batch: Vec<TrainingInstance> = Vec::with_capacity(batch_size);
    let mut flush = |batch: &mut Vec<TrainingInstance>, stats: &mut AugmentStats| -> Result<()> {
        for aug in augmenter.augment_batch(batch, workers)? {
            for example in &aug.examples {
                writer.write_augmented(example)?;
            }
            *stats += aug.stats;
        }
        batch.clear();
        eprintln!("augmented {} instances", stats.instances);
        Ok(())
    };

    for record in open_dataset(&args.input)? {
        let record = record?;
        for inst in record_instances(&record, cfg.task, cfg.mode, args.chunk_size)? {
            if cfg.task == TaskKind::MultiChoiceQaWithKnowledge && kb.is_none() && inst.knowledge_k.is_none() {
                return Err(ReinaError::Record {
                    line: record.line,
                    message: format!("instance `{}` has no knowledge", inst.id),
                });
            }
            batch.push(inst);
        }
        if batch.len() >= batch_size {
            flush(&mut batch, &mut stats)?;
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut stats)?;
    }
    writer.finish()?;
    eprintln!("{}", serde_json::to_string(&stats).expect("stats serialize"));
    Ok(())
}

fn cmd_merge(args: MergeArgs) -> Result<()> {
    let indices = args
        .indices
        .iter()
        .map(InvertedIndex::load)
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_indices(&indices)?;
    merged.save(&args.output)?;
    println!("{}", index_summary(&merged));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(args) => cmd_index(args),
        Command::Retrieve(args) => cmd_retrieve(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Merge(args) => cmd_merge(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("reina: {err}");
            ExitCode::from(if err.is_io() { 2 } else { 1 })
        }
    }
}
