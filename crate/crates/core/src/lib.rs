//! Retrieval of similar labeled training instances with BM25, and
//! task-specific combination of the retrieved labels with the input.
//!
//! ```text
//! text      tokenizer, n-grams, token budgets
//! bm25      inverted index, scoring, top-k retrieval, merging, on-disk format
//! kg        concept linking and knowledge strings for QA
//! pipeline  key/value construction, queries, filtering, combination
//! dataset   JSONL input/output and the language-modeling chunker
//! ```

pub mod bm25;
pub mod dataset;
pub mod error;
pub mod kg;
pub mod pipeline;
pub mod text;

pub use bm25::{bm25_score, build_index, merge_indices, retrieve, Bm25Params, IndexedDoc, InvertedIndex, RetrievalHit};
pub use error::{ReinaError, Result};
pub use pipeline::{
    apply_filters, augment_instance, build_query, combine, make_key_value, AugmentStats, AugmentedExample, Augmenter,
    Mode, PipelineConfig, StoredValue, TaskKind, TrainingInstance,
};
pub use text::{tokenize, Token, TokenStream};
