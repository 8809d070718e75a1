//! Retrieve-and-combine augmentation.
//!
//! Each training instance is indexed as a key/value pair. An input is turned
//! into a query, the most similar keys are retrieved, leakage is filtered out
//! in training mode, and the retrieved values are concatenated with the input
//! under a token budget:
//!
//! | task                 | key                  | combined text                      |
//! |----------------------|----------------------|------------------------------------|
//! | summarization        | document             | `x; y1; ...; yK`                   |
//! | language modeling    | chunk C_i            | `y1; ...; yK; x` (next chunks)     |
//! | machine translation  | source sentence      | `x; y1; ...; yK` (targets only)    |
//! | multiple-choice QA   | question + gold      | `x; c; x1; y1; ...; xK; yK`        |
//! | QA with knowledge    | question + gold + K  | `x; c; x1; y1; ...; xK; yK`        |

use std::fmt;
use std::ops::{Add, AddAssign, Range};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bm25::{build_index, retrieve, Bm25Params, IndexedDoc, InvertedIndex};
use crate::error::{ReinaError, Result};
use crate::kg::KnowledgeBase;
use crate::text::{ngram_overlap_count, slice_tokens, token_count, token_spans, tokenize, TokenStream};

pub const DEFAULT_SEPARATOR: &str = "<\\s>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Summarization,
    LanguageModeling,
    MachineTranslation,
    MultiChoiceQa,
    MultiChoiceQaWithKnowledge,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Summarization,
        TaskKind::LanguageModeling,
        TaskKind::MachineTranslation,
        TaskKind::MultiChoiceQa,
        TaskKind::MultiChoiceQaWithKnowledge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Summarization => "summarization",
            TaskKind::LanguageModeling => "language_modeling",
            TaskKind::MachineTranslation => "machine_translation",
            TaskKind::MultiChoiceQa => "multi_choice_qa",
            TaskKind::MultiChoiceQaWithKnowledge => "multi_choice_qa_with_knowledge",
        }
    }

    pub fn is_qa(self) -> bool {
        matches!(self, TaskKind::MultiChoiceQa | TaskKind::MultiChoiceQaWithKnowledge)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = ReinaError;

    fn from_str(s: &str) -> Result<Self> {
        let task = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "summarization" | "summ" => TaskKind::Summarization,
            "language_modeling" | "lm" => TaskKind::LanguageModeling,
            "machine_translation" | "mt" => TaskKind::MachineTranslation,
            "multi_choice_qa" | "qa" => TaskKind::MultiChoiceQa,
            "multi_choice_qa_with_knowledge" | "qak" => TaskKind::MultiChoiceQaWithKnowledge,
            _ => {
                return Err(ReinaError::InvalidParameter(format!("unknown task `{s}`")));
            }
        };
        Ok(task)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Training,
    Inference,
}

impl FromStr for Mode {
    type Err = ReinaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "training" | "train" => Ok(Mode::Training),
            "inference" | "infer" => Ok(Mode::Inference),
            _ => Err(ReinaError::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

/// One labeled example. For QA tasks the label is the gold choice.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainingInstance {
    pub id: String,
    pub input_x: String,
    pub label_y: Option<String>,
    pub choices: Option<Vec<String>>,
    pub gold_choice_index: Option<usize>,
    pub knowledge_k: Option<String>,
}

impl TrainingInstance {
    pub fn new(id: impl Into<String>, input: impl Into<String>, label: impl Into<String>) -> Self {
        TrainingInstance {
            id: id.into(),
            input_x: input.into(),
            label_y: Some(label.into()),
            ..Default::default()
        }
    }

    pub fn qa<S: Into<String>>(
        id: impl Into<String>,
        question: impl Into<String>,
        choices: impl IntoIterator<Item = S>,
        gold: usize,
    ) -> Self {
        let choices: Vec<String> = choices.into_iter().map(Into::into).collect();
        TrainingInstance {
            id: id.into(),
            input_x: question.into(),
            label_y: choices.get(gold).cloned(),
            choices: Some(choices),
            gold_choice_index: Some(gold),
            knowledge_k: None,
        }
    }

    pub fn with_knowledge(mut self, knowledge: impl Into<String>) -> Self {
        self.knowledge_k = Some(knowledge.into());
        self
    }

    /// The gold label: the label text, or the gold choice for QA.
    pub fn gold_label(&self) -> Option<&str> {
        if let (Some(choices), Some(gold)) = (&self.choices, self.gold_choice_index) {
            return choices.get(gold).map(String::as_str);
        }
        self.label_y.as_deref()
    }

    pub fn validate(&self, task: TaskKind, mode: Mode) -> Result<()> {
        let fail = |msg: String| Err(ReinaError::Validation(format!("instance `{}`: {msg}", self.id)));
        if task.is_qa() {
            let Some(choices) = &self.choices else {
                return fail("QA instance has no choices".into());
            };
            if choices.len() < 2 {
                return fail(format!("QA instance needs >= 2 choices, has {}", choices.len()));
            }
            match self.gold_choice_index {
                Some(g) if g >= choices.len() => {
                    return fail(format!("gold index {g} out of range for {} choices", choices.len()));
                }
                Some(g) => {
                    if let Some(label) = &self.label_y {
                        if label != &choices[g] {
                            return fail("label differs from the gold choice".into());
                        }
                    }
                }
                None if mode == Mode::Training => {
                    return fail("QA training instance has no gold choice".into());
                }
                None => {}
            }
        } else if mode == Mode::Training && self.label_y.is_none() {
            return fail("training instance has no label".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub task: TaskKind,
    pub mode: Mode,
    pub top_k: usize,
    pub input_budget_tokens: usize,
    pub total_budget_tokens: usize,
    pub lm_context_tokens: usize,
    pub overlap_n: usize,
    /// Maximum distinct shared n-grams a retained value may have with the
    /// gold label. `None` disables the overlap filter.
    pub overlap_max: Option<usize>,
    pub separator: String,
}

impl PipelineConfig {
    pub fn new(task: TaskKind, mode: Mode) -> Self {
        PipelineConfig {
            task,
            mode,
            top_k: 5,
            input_budget_tokens: 600,
            total_budget_tokens: 1024,
            lm_context_tokens: 512,
            overlap_n: 7,
            overlap_max: Some(3),
            separator: DEFAULT_SEPARATOR.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("top_k", self.top_k),
            ("input_budget_tokens", self.input_budget_tokens),
            ("total_budget_tokens", self.total_budget_tokens),
            ("lm_context_tokens", self.lm_context_tokens),
            ("overlap_n", self.overlap_n),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(ReinaError::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        if self.input_budget_tokens >= self.total_budget_tokens {
            return Err(ReinaError::InvalidParameter(format!(
                "input budget ({}) must be smaller than total budget ({})",
                self.input_budget_tokens, self.total_budget_tokens
            )));
        }
        if self.separator.chars().any(char::is_whitespace) {
            return Err(ReinaError::InvalidParameter(
                "separator must not contain whitespace".into(),
            ));
        }
        Ok(())
    }

    /// Number of retrieval candidates fetched before filtering.
    pub fn fetch_size(&self) -> usize {
        self.top_k.saturating_mul(2)
    }

    fn glue(&self) -> String {
        if self.separator.is_empty() {
            " ".to_string()
        } else {
            format!(" {} ", self.separator)
        }
    }
}

/// The payload stored alongside an index key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StoredValue {
    Text(String),
    QaPair { question: String, answer: String },
}

impl StoredValue {
    /// The part compared against gold labels by the overlap filter.
    pub fn label_text(&self) -> &str {
        match self {
            StoredValue::Text(t) => t,
            StoredValue::QaPair { answer, .. } => answer,
        }
    }

    /// Human-readable form, segments joined by a space.
    pub fn display_text(&self) -> String {
        match self {
            StoredValue::Text(t) => t.clone(),
            StoredValue::QaPair { question, answer } => format!("{question} {answer}"),
        }
    }

    pub fn encode(&self) -> String {
        match self {
            StoredValue::Text(t) => t.clone(),
            StoredValue::QaPair { .. } => {
                serde_json::to_string(self).expect("string pair always serializes")
            }
        }
    }

    pub fn decode(task: TaskKind, raw: &str) -> Result<Self> {
        if task.is_qa() {
            serde_json::from_str::<StoredValue>(raw)
                .ok()
                .filter(|v| matches!(v, StoredValue::QaPair { .. }))
                .ok_or_else(|| ReinaError::IndexFormat(format!("bad QA value `{raw}`")))
        } else {
            Ok(StoredValue::Text(raw.to_owned()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub key: String,
    pub value: StoredValue,
}

fn join_nonempty(parts: &[&str]) -> String {
    parts
        .iter()
        .filter(|p| !p.trim().is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn make_key_value(task: TaskKind, inst: &TrainingInstance) -> Result<KeyValue> {
    inst.validate(task, Mode::Training)?;
    let gold = inst.gold_label().unwrap_or_default();
    let kv = match task {
        TaskKind::Summarization | TaskKind::LanguageModeling | TaskKind::MachineTranslation => {
            KeyValue {
                key: inst.input_x.clone(),
                value: StoredValue::Text(gold.to_owned()),
            }
        }
        TaskKind::MultiChoiceQa => KeyValue {
            key: join_nonempty(&[&inst.input_x, gold]),
            value: StoredValue::QaPair {
                question: inst.input_x.clone(),
                answer: gold.to_owned(),
            },
        },
        TaskKind::MultiChoiceQaWithKnowledge => {
            let Some(knowledge) = &inst.knowledge_k else {
                return Err(ReinaError::Validation(format!(
                    "instance `{}`: no knowledge string",
                    inst.id
                )));
            };
            KeyValue {
                key: join_nonempty(&[&inst.input_x, gold, knowledge]),
                value: StoredValue::QaPair {
                    question: inst.input_x.clone(),
                    answer: gold.to_owned(),
                },
            }
        }
    };
    Ok(kv)
}

/// Fills in the knowledge string of a QA training instance from its
/// question and gold choice.
pub fn attach_knowledge(inst: &mut TrainingInstance, kb: &KnowledgeBase, separator: &str) {
    if let Some(gold) = inst.gold_label().map(str::to_owned) {
        inst.knowledge_k = Some(kb.knowledge(&inst.input_x, &gold, separator).rendered);
    }
}

/// Builds an index over the key/value pairs of a training corpus, tagged
/// with the task so it cannot be misused for another one.
pub fn index_instances<'a, I>(task: TaskKind, instances: I, params: Bm25Params) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = &'a TrainingInstance>,
{
    let docs = instances
        .into_iter()
        .map(|inst| {
            let kv = make_key_value(task, inst)?;
            Ok(IndexedDoc {
                doc_id: inst.id.clone(),
                key_tokens: tokenize(&kv.key),
                value_ref: kv.value.encode(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_index(docs, params)?.with_tag(task.as_str()))
}

pub fn build_query(
    task: TaskKind,
    input_x: &str,
    choice: Option<&str>,
    knowledge: Option<&str>,
) -> Result<TokenStream> {
    let missing = |what: &str| Err(ReinaError::Validation(format!("{task} query needs {what}")));
    let unexpected = |what: &str| {
        Err(ReinaError::Validation(format!("{task} query does not take {what}")))
    };
    match task {
        TaskKind::Summarization | TaskKind::LanguageModeling | TaskKind::MachineTranslation => {
            if choice.is_some() {
                return unexpected("a choice");
            }
            if knowledge.is_some() {
                return unexpected("knowledge");
            }
            Ok(tokenize(input_x))
        }
        TaskKind::MultiChoiceQa => {
            let Some(choice) = choice else {
                return missing("a choice");
            };
            if knowledge.is_some() {
                return unexpected("knowledge");
            }
            Ok(tokenize(&join_nonempty(&[input_x, choice])))
        }
        TaskKind::MultiChoiceQaWithKnowledge => {
            let Some(choice) = choice else {
                return missing("a choice");
            };
            let Some(knowledge) = knowledge else {
                return missing("knowledge");
            };
            Ok(tokenize(&join_nonempty(&[input_x, choice, knowledge])))
        }
    }
}

struct Segment<'a> {
    text: &'a str,
    spans: Vec<Range<usize>>,
    cap: usize,
}

impl<'a> Segment<'a> {
    fn new(text: &'a str, cap: usize) -> Self {
        Segment {
            text,
            spans: token_spans(text),
            cap,
        }
    }
}

/// Token counts granted to each segment, visited in priority order. The
/// first segment that cannot be granted in full is truncated to what is
/// left and every segment after it is dropped.
fn allocate(segments: &[Segment<'_>], total: usize, sep_tokens: usize) -> Vec<usize> {
    let mut grants = vec![0; segments.len()];
    let mut remaining = total;
    let mut placed = 0usize;
    for (grant, seg) in grants.iter_mut().zip(segments) {
        let wanted = seg.spans.len().min(seg.cap);
        if wanted == 0 {
            continue;
        }
        let sep = if placed > 0 { sep_tokens } else { 0 };
        if remaining <= sep {
            break;
        }
        let available = remaining - sep;
        *grant = wanted.min(available);
        remaining -= *grant + sep;
        placed += 1;
        if *grant < wanted {
            break;
        }
    }
    grants
}

/// Concatenates the input with retrieved values according to the task's
/// combination rule, under the configured token budgets.
pub fn combine(
    task: TaskKind,
    input_x: &str,
    choice: Option<&str>,
    hits: &[StoredValue],
    cfg: &PipelineConfig,
) -> String {
    let input_cap = if task == TaskKind::LanguageModeling {
        cfg.lm_context_tokens
    } else {
        cfg.input_budget_tokens
    };

    // anchors first: they are allocated before any retrieved text
    let mut segments = vec![Segment::new(input_x, input_cap)];
    if task.is_qa() {
        if let Some(choice) = choice {
            segments.push(Segment::new(choice, usize::MAX));
        }
    }
    let n_anchors = segments.len();
    for hit in hits {
        match hit {
            StoredValue::Text(text) => segments.push(Segment::new(text, usize::MAX)),
            StoredValue::QaPair { question, answer } => {
                segments.push(Segment::new(question, usize::MAX));
                segments.push(Segment::new(answer, usize::MAX));
            }
        }
    }

    let grants = allocate(&segments, cfg.total_budget_tokens, token_count(&cfg.separator));
    let rendered: Vec<&str> = segments
        .iter()
        .zip(&grants)
        .map(|(seg, &n)| slice_tokens(seg.text, &seg.spans, 0, n))
        .collect();

    let (anchors, retrieved) = rendered.split_at(n_anchors);
    let ordered: Vec<&str> = if task == TaskKind::LanguageModeling {
        retrieved.iter().chain(anchors).copied().collect()
    } else {
        anchors.iter().chain(retrieved).copied().collect()
    };
    ordered
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(&cfg.glue())
}

/// A retrieved document with its decoded value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredValue {
    pub doc_id: String,
    pub value: StoredValue,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub kept: Vec<ScoredValue>,
    pub dropped_by_overlap: Vec<String>,
    pub dropped_self: usize,
}

/// Training mode removes the instance itself and any value that shares more
/// than `overlap_max` distinct `overlap_n`-grams with the gold label.
/// Inference mode keeps everything.
pub fn apply_filters(
    inst_id: &str,
    gold_label: Option<&str>,
    hits: Vec<ScoredValue>,
    cfg: &PipelineConfig,
) -> Result<FilterOutcome> {
    if cfg.mode == Mode::Inference {
        return Ok(FilterOutcome {
            kept: hits,
            ..Default::default()
        });
    }
    let gold = gold_label.ok_or_else(|| {
        ReinaError::Validation(format!(
            "instance `{inst_id}`: training mode needs a gold label"
        ))
    })?;
    let gold_tokens = tokenize(gold);
    let mut outcome = FilterOutcome::default();
    for hit in hits {
        if hit.doc_id == inst_id {
            outcome.dropped_self += 1;
            continue;
        }
        if let Some(max) = cfg.overlap_max {
            let shared = ngram_overlap_count(&tokenize(hit.value.label_text()), &gold_tokens, cfg.overlap_n)?;
            if shared > max {
                outcome.dropped_by_overlap.push(hit.doc_id);
                continue;
            }
        }
        outcome.kept.push(hit);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub id: String,
    pub combined_text: String,
    pub retrieved_ids: Vec<String>,
    pub retrieved_scores: Vec<f64>,
    pub dropped_by_overlap: Vec<String>,
    pub task: TaskKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AugmentStats {
    pub instances: usize,
    pub examples: usize,
    pub filtered_self: usize,
    pub filtered_overlap: usize,
}

impl Add for AugmentStats {
    type Output = AugmentStats;

    fn add(self, rhs: AugmentStats) -> AugmentStats {
        AugmentStats {
            instances: self.instances + rhs.instances,
            examples: self.examples + rhs.examples,
            filtered_self: self.filtered_self + rhs.filtered_self,
            filtered_overlap: self.filtered_overlap + rhs.filtered_overlap,
        }
    }
}

impl AddAssign for AugmentStats {
    fn add_assign(&mut self, rhs: AugmentStats) {
        *self = *self + rhs;
    }
}

/// Everything produced for one instance: one example per query (one per
/// choice for QA) plus the retained hits behind each example.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub examples: Vec<AugmentedExample>,
    /// Hits surviving the filters, before truncation to `top_k`.
    pub retained: Vec<Vec<ScoredValue>>,
    pub stats: AugmentStats,
}

/// Augments instances against a fixed index and configuration.
#[derive(Debug, Clone, Copy)]
pub struct Augmenter<'a> {
    index: &'a InvertedIndex,
    cfg: &'a PipelineConfig,
    knowledge: Option<&'a KnowledgeBase>,
}

impl<'a> Augmenter<'a> {
    pub fn new(index: &'a InvertedIndex, cfg: &'a PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        if !index.tag().is_empty() && index.tag() != cfg.task.as_str() {
            return Err(ReinaError::Incompatible(format!(
                "index was built for `{}`, not `{}`",
                index.tag(),
                cfg.task
            )));
        }
        Ok(Augmenter {
            index,
            cfg,
            knowledge: None,
        })
    }

    /// Computes per-choice knowledge strings from `kb` instead of using the
    /// instance's own knowledge field.
    pub fn with_knowledge(mut self, kb: &'a KnowledgeBase) -> Self {
        self.knowledge = Some(kb);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        self.cfg
    }

    fn knowledge_for(&self, inst: &TrainingInstance, choice: &str) -> Result<String> {
        if let Some(kb) = self.knowledge {
            return Ok(kb.knowledge(&inst.input_x, choice, &self.cfg.separator).rendered);
        }
        inst.knowledge_k.clone().ok_or_else(|| {
            ReinaError::Validation(format!(
                "instance `{}`: no knowledge string and no knowledge base",
                inst.id
            ))
        })
    }

    fn fetch(&self, query: &TokenStream) -> Result<Vec<ScoredValue>> {
        let task = self.cfg.task;
        retrieve(query, self.cfg.fetch_size(), self.index, None)?
            .into_iter()
            .map(|hit| {
                let raw = self
                    .index
                    .value_ref(&hit.doc_id)
                    .ok_or_else(|| ReinaError::UnknownDoc(hit.doc_id.clone()))?;
                Ok(ScoredValue {
                    value: StoredValue::decode(task, raw)?,
                    doc_id: hit.doc_id,
                    score: hit.score,
                })
            })
            .collect()
    }

    pub fn augment(&self, inst: &TrainingInstance) -> Result<Augmentation> {
        let cfg = self.cfg;
        let task = cfg.task;
        inst.validate(task, cfg.mode)?;

        let queries: Vec<(String, Option<&str>, TokenStream)> = if task.is_qa() {
            let choices = inst.choices.as_deref().unwrap_or_default();
            choices
                .iter()
                .enumerate()
                .map(|(j, choice)| {
                    let knowledge = match task {
                        TaskKind::MultiChoiceQaWithKnowledge => Some(self.knowledge_for(inst, choice)?),
                        _ => None,
                    };
                    let query = build_query(task, &inst.input_x, Some(choice), knowledge.as_deref())?;
                    Ok((format!("{}#{j}", inst.id), Some(choice.as_str()), query))
                })
                .collect::<Result<_>>()?
        } else {
            vec![(inst.id.clone(), None, build_query(task, &inst.input_x, None, None)?)]
        };

        let mut out = Augmentation {
            examples: Vec::with_capacity(queries.len()),
            retained: Vec::with_capacity(queries.len()),
            stats: AugmentStats {
                instances: 1,
                ..Default::default()
            },
        };
        for (example_id, choice, query) in queries {
            let hits = self.fetch(&query)?;
            let outcome = apply_filters(&inst.id, inst.gold_label(), hits, cfg)?;
            out.stats.filtered_self += outcome.dropped_self;
            out.stats.filtered_overlap += outcome.dropped_by_overlap.len();

            let top: Vec<&ScoredValue> = outcome.kept.iter().take(cfg.top_k).collect();
            let values: Vec<StoredValue> = top.iter().map(|h| h.value.clone()).collect();
            out.examples.push(AugmentedExample {
                id: example_id,
                combined_text: combine(task, &inst.input_x, choice, &values, cfg),
                retrieved_ids: top.iter().map(|h| h.doc_id.clone()).collect(),
                retrieved_scores: top.iter().map(|h| h.score).collect(),
                dropped_by_overlap: outcome.dropped_by_overlap,
                task,
            });
            out.retained.push(outcome.kept);
        }
        out.stats.examples = out.examples.len();
        Ok(out)
    }

    /// Augments a batch on `workers` threads. Output order follows input
    /// order; the first failing instance (in input order) is reported.
    pub fn augment_batch(
        &self,
        instances: &[TrainingInstance],
        workers: usize,
    ) -> Result<Vec<Augmentation>> {
        let run = || -> Vec<Result<Augmentation>> {
            instances.par_iter().map(|inst| self.augment(inst)).collect()
        };
        let results = if workers <= 1 {
            instances.iter().map(|inst| self.augment(inst)).collect()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| ReinaError::InvalidParameter(format!("worker pool: {e}")))?
                .install(run)
        };
        results.into_iter().collect()
    }
}

pub fn augment_instance(
    inst: &TrainingInstance,
    index: &InvertedIndex,
    cfg: &PipelineConfig,
) -> Result<Vec<AugmentedExample>> {
    Ok(Augmenter::new(index, cfg)?.augment(inst)?.examples)
}
