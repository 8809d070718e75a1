//! JSONL datasets in and out, and the language-modeling chunker.
//!
//! Input records:
//!
//! ```json
//! {"id": "17", "input": "...", "label": "...", "choices": ["..."], "gold": 0, "knowledge": "..."}
//! ```
//!
//! Only `input` is required. Records without an id get their zero-padded
//! ordinal. Unknown fields are kept and written back unchanged.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{Map, Value};

use crate::error::{ReinaError, Result};
use crate::pipeline::{AugmentedExample, TaskKind, TrainingInstance};
use crate::text::{slice_tokens, token_spans};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
    /// 1-based source line, 0 when not read from a file.
    #[serde(skip)]
    pub line: usize,
}

impl DatasetRecord {
    pub fn id(&self) -> &str {
        self.id.as_deref().unwrap_or_default()
    }

    pub fn to_instance(&self) -> TrainingInstance {
        let label = match (&self.label, &self.choices, self.gold) {
            (Some(label), _, _) => Some(label.clone()),
            (None, Some(choices), Some(gold)) => choices.get(gold).cloned(),
            _ => None,
        };
        TrainingInstance {
            id: self.id().to_owned(),
            input_x: self.input.clone(),
            label_y: label,
            choices: self.choices.clone(),
            gold_choice_index: self.gold,
            knowledge_k: self.knowledge.clone(),
        }
    }

    /// Instances for `task`. With a chunk size, language-modeling records
    /// are split into `(C_i, C_{i+1})` pairs with ids `<id>/<ordinal>`.
    pub fn instances(&self, task: TaskKind, chunk_size: Option<usize>) -> Result<Vec<TrainingInstance>> {
        match (task, chunk_size) {
            (TaskKind::LanguageModeling, Some(size)) => Ok(chunk_text(&self.input, size)?
                .into_iter()
                .map(|pair| TrainingInstance::new(
                    format!("{}/{}", self.id(), pair.ordinal),
                    pair.context_chunk,
                    pair.next_chunk,
                ))
                .collect()),
            _ => Ok(vec![self.to_instance()]),
        }
    }
}

/// Streaming, order-preserving reader over a JSONL dataset.
pub struct DatasetReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    ordinal: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(reader: R) -> Self {
        DatasetReader {
            lines: reader.lines(),
            line_no: 0,
            ordinal: 0,
            seen: HashSet::new(),
        }
    }

    fn parse(&mut self, text: &str) -> Result<DatasetRecord> {
        let line = self.line_no;
        let mut record: DatasetRecord = serde_json::from_str(text).map_err(|e| ReinaError::Parse {
            line,
            message: e.to_string(),
        })?;
        record.line = line;
        let id = record
            .id
            .get_or_insert_with(|| format!("{:08}", self.ordinal))
            .clone();
        self.ordinal += 1;
        if !self.seen.insert(id.clone()) {
            return Err(ReinaError::Record {
                line,
                message: format!("duplicate id `{id}`"),
            });
        }
        Ok(record)
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let text = match line {
                Ok(text) => text,
                Err(e) => {
                    return Some(Err(ReinaError::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&text));
        }
    }
}

pub fn open_dataset(path: impl AsRef<Path>) -> Result<DatasetReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ReinaError::io(path, e))?;
    Ok(DatasetReader::new(BufReader::new(file)))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>> {
    open_dataset(path)?.collect()
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[DatasetRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = JsonlWriter::create(path)?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        w.write_line(&line)?;
    }
    w.finish()
}

#[derive(Serialize)]
struct AugmentedLine<'a> {
    id: &'a str,
    combined_text: &'a str,
    retrieved_ids: &'a [String],
    retrieved_scores: Vec<Box<RawValue>>,
    dropped_by_overlap: &'a [String],
    task: TaskKind,
}

/// Fixed six-decimal rendering used for every score written to disk.
pub fn format_score(score: f64) -> String {
    format!("{score:.6}")
}

/// One JSON line for an augmented example; scores at six decimals.
pub fn augmented_to_json(example: &AugmentedExample) -> String {
    let scores = example
        .retrieved_scores
        .iter()
        .map(|s| RawValue::from_string(format_score(*s)).expect("finite score is valid JSON"))
        .collect();
    let line = AugmentedLine {
        id: &example.id,
        combined_text: &example.combined_text,
        retrieved_ids: &example.retrieved_ids,
        retrieved_scores: scores,
        dropped_by_overlap: &example.dropped_by_overlap,
        task: example.task,
    };
    serde_json::to_string(&line).expect("augmented example serializes")
}

/// Buffered line writer that reports failures with the file path.
pub struct JsonlWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| ReinaError::io(&path, e))?;
        Ok(JsonlWriter {
            inner: BufWriter::new(file),
            path,
        })
    }

    pub fn write_line(&mut self, line: &str) -> Result<()> {
        self.inner
            .write_all(line.as_bytes())
            .and_then(|_| self.inner.write_all(b"\n"))
            .map_err(|e| ReinaError::io(&self.path, e))
    }

    pub fn write_augmented(&mut self, example: &AugmentedExample) -> Result<()> {
        self.write_line(&augmented_to_json(example))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| ReinaError::io(&self.path, e))
    }
}

pub fn write_augmented<'a, I>(path: impl AsRef<Path>, examples: I) -> Result<()>
where
    I: IntoIterator<Item = &'a AugmentedExample>,
{
    let mut w = JsonlWriter::create(path)?;
    for example in examples {
        w.write_augmented(example)?;
    }
    w.finish()
}

pub fn read_augmented(path: impl AsRef<Path>) -> Result<Vec<AugmentedExample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ReinaError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ReinaError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ReinaError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPair {
    pub ordinal: usize,
    pub context_chunk: String,
    pub next_chunk: String,
}

/// Splits `text` into consecutive chunks of `chunk_size_words` tokens (the
/// last one may be shorter) and pairs each chunk with its successor.
pub fn chunk_text(text: &str, chunk_size_words: usize) -> Result<Vec<ChunkPair>> {
    if chunk_size_words == 0 {
        return Err(ReinaError::InvalidParameter("chunk size must be >= 1".into()));
    }
    let spans = token_spans(text);
    let chunks: Vec<&str> = (0..spans.len())
        .step_by(chunk_size_words)
        .map(|start| slice_tokens(text, &spans, start, start + chunk_size_words))
        .collect();
    Ok(chunks
        .windows(2)
        .enumerate()
        .map(|(ordinal, pair)| ChunkPair {
            ordinal,
            context_chunk: pair[0].to_owned(),
            next_chunk: pair[1].to_owned(),
        })
        .collect())
}
