//! Inverted index over instance keys with Okapi BM25 scoring.
//!
//! Scores use the Lucene form of the formula:
//!
//! ```text
//! score(q, d) = Σ_{t ∈ distinct(q)} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·dl/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```
//!
//! The index is immutable once built. Larger corpora are assembled with
//! [`merge_indices`], which yields the same statistics as building over the
//! concatenated documents.

mod persist;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ReinaError, Result};
use crate::text::TokenStream;

pub use persist::{INDEX_MAGIC, INDEX_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let params = Bm25Params { k1, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(ReinaError::InvalidParameter(format!(
                "k1 must be a finite value >= 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(ReinaError::InvalidParameter(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// A document to be indexed: its key tokens and an opaque value payload.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedDoc {
    pub doc_id: String,
    pub key_tokens: TokenStream,
    pub value_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalHit {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct DocEntry {
    doc_id: String,
    len: u32,
    value_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: u32,
    tf: u32,
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    params: Bm25Params,
    tag: String,
    docs: Vec<DocEntry>,
    by_id: HashMap<String, u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    total_len: u64,
}

/// Inverse document frequency of a term present in `df` of `n` documents.
/// Strictly positive for all `1 <= df <= n`.
pub fn idf(n: usize, df: usize) -> f64 {
    let n = n as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

impl InvertedIndex {
    /// Attaches a free-form tag (e.g. the task the keys were built for).
    /// Indices can only be merged when their tags agree.
    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.total_len as f64 / self.docs.len() as f64
    }

    pub fn vocab_size(&self) -> usize {
        self.postings.len()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    /// Document ids in index order.
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc_id.as_str())
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.entry(doc_id).map(|d| d.len as usize)
    }

    pub fn value_ref(&self, doc_id: &str) -> Option<&str> {
        self.entry(doc_id).map(|d| d.value_ref.as_str())
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `(doc_id, term frequency)` for every document containing `term`.
    pub fn postings(&self, term: &str) -> impl Iterator<Item = (&str, u32)> {
        self.postings
            .get(term)
            .into_iter()
            .flatten()
            .map(|p| (self.docs[p.doc as usize].doc_id.as_str(), p.tf))
    }

    fn entry(&self, doc_id: &str) -> Option<&DocEntry> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i as usize])
    }

    fn term_weight(&self, idf: f64, tf: u32, dl: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = k1 * (1.0 - b + b * dl as f64 / self.avgdl());
        idf * tf * (k1 + 1.0) / (tf + norm)
    }

    fn from_parts(
        params: Bm25Params,
        tag: String,
        docs: Vec<DocEntry>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(ReinaError::EmptyCorpus);
        }
        let mut by_id = HashMap::with_capacity(docs.len());
        let mut total_len = 0u64;
        for (i, doc) in docs.iter().enumerate() {
            if doc.len == 0 {
                return Err(ReinaError::EmptyKey(doc.doc_id.clone()));
            }
            if by_id.insert(doc.doc_id.clone(), i as u32).is_some() {
                return Err(ReinaError::DuplicateDocId(doc.doc_id.clone()));
            }
            total_len += u64::from(doc.len);
        }
        Ok(InvertedIndex {
            params,
            tag,
            docs,
            by_id,
            postings,
            total_len,
        })
    }
}

pub fn build_index<I>(docs: I, params: Bm25Params) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = IndexedDoc>,
{
    params.validate()?;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    for doc in docs {
        if doc.key_tokens.is_empty() {
            return Err(ReinaError::EmptyKey(doc.doc_id));
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(ReinaError::DuplicateDocId(doc.doc_id));
        }
        let ordinal = u32::try_from(entries.len())
            .map_err(|_| ReinaError::InvalidParameter("too many documents".into()))?;
        let mut tfs: BTreeMap<&str, u32> = BTreeMap::new();
        for token in &doc.key_tokens {
            *tfs.entry(token.as_str()).or_default() += 1;
        }
        for (term, tf) in tfs {
            postings
                .entry(term.to_owned())
                .or_default()
                .push(Posting { doc: ordinal, tf });
        }
        entries.push(DocEntry {
            len: doc.key_tokens.len() as u32,
            doc_id: doc.doc_id,
            value_ref: doc.value_ref,
        });
    }
    InvertedIndex::from_parts(params, String::new(), entries, postings)
}

pub fn bm25_score(query: &TokenStream, doc_id: &str, index: &InvertedIndex) -> Result<f64> {
    let ordinal = *index
        .by_id
        .get(doc_id)
        .ok_or_else(|| ReinaError::UnknownDoc(doc_id.to_owned()))?;
    let dl = index.docs[ordinal as usize].len;
    let terms: BTreeSet<&str> = query.iter().map(|t| t.as_str()).collect();
    let mut score = 0.0;
    for term in terms {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        if let Ok(pos) = list.binary_search_by_key(&ordinal, |p| p.doc) {
            let w = idf(index.n_docs(), list.len());
            score += index.term_weight(w, list[pos].tf, dl);
        }
    }
    Ok(score)
}

fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Top-`k` documents by BM25 score, highest first, ties broken by ascending
/// doc id. Documents scoring zero are never returned.
pub fn retrieve(
    query: &TokenStream,
    k: usize,
    index: &InvertedIndex,
    exclude: Option<&HashSet<String>>,
) -> Result<Vec<RetrievalHit>> {
    if k == 0 {
        return Err(ReinaError::InvalidParameter("k must be >= 1".into()));
    }
    let terms: BTreeSet<&str> = query.iter().map(|t| t.as_str()).collect();
    let mut acc: HashMap<u32, f64> = HashMap::new();
    for term in terms {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        let w = idf(index.n_docs(), list.len());
        for p in list {
            let dl = index.docs[p.doc as usize].len;
            *acc.entry(p.doc).or_default() += index.term_weight(w, p.tf, dl);
        }
    }

    let mut candidates: Vec<(&str, f64)> = acc
        .into_iter()
        .filter(|&(_, score)| score > 0.0)
        .map(|(doc, score)| (index.docs[doc as usize].doc_id.as_str(), score))
        .filter(|(id, _)| exclude.is_none_or(|ex| !ex.contains(*id)))
        .collect();
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(|a, b| rank_order(*a, *b));

    Ok(candidates
        .into_iter()
        .enumerate()
        .map(|(i, (id, score))| RetrievalHit {
            doc_id: id.to_owned(),
            score,
            rank: i + 1,
        })
        .collect())
}

/// Combines several indices into one whose statistics (N, avgdl, document
/// frequencies) are recomputed over the union.
pub fn merge_indices<'a, I>(indices: I) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = &'a InvertedIndex>,
{
    let mut indices = indices.into_iter();
    let first = indices.next().ok_or(ReinaError::EmptyCorpus)?;
    let mut docs = first.docs.clone();
    let mut postings = first.postings.clone();
    for other in indices {
        if other.params != first.params {
            return Err(ReinaError::Incompatible(format!(
                "BM25 parameters differ: {:?} vs {:?}",
                first.params, other.params
            )));
        }
        if other.tag != first.tag {
            return Err(ReinaError::Incompatible(format!(
                "index tags differ: `{}` vs `{}`",
                first.tag, other.tag
            )));
        }
        let offset = docs.len() as u32;
        for (term, list) in &other.postings {
            postings
                .entry(term.clone())
                .or_default()
                .extend(list.iter().map(|p| Posting {
                    doc: p.doc + offset,
                    tf: p.tf,
                }));
        }
        docs.extend(other.docs.iter().cloned());
    }
    InvertedIndex::from_parts(first.params, first.tag.clone(), docs, postings)
}
