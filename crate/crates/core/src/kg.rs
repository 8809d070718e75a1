//! Commonsense knowledge strings for multiple-choice QA.
//!
//! Concepts mentioned in the question and in a candidate answer are found by
//! token-aligned string matching against a concept graph. The longest match on
//! each side becomes the question/answer concept; their definitions plus every
//! graph edge leading from a question concept to an answer concept form the
//! knowledge string.
//!
//! Fixture formats (UTF-8, one record per line, tab separated, no escaping):
//! - edges: `head<TAB>relation<TAB>tail`; a line with a single field declares
//!   a concept without edges
//! - definitions: `concept<TAB>definition`

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ReinaError, Result};
use crate::text::{token_count, tokenize, Token};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Edge {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Edge {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }

    /// "head relation tail"
    pub fn phrase(&self) -> String {
        format!("{} {} {}", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConceptGraph {
    concepts: BTreeSet<String>,
    edges: BTreeSet<Edge>,
    out_edges: BTreeMap<String, Vec<Edge>>,
    patterns: HashMap<Token, Vec<(Vec<Token>, String)>>,
}

impl ConceptGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_concept(&mut self, concept: impl Into<String>) {
        let concept = concept.into();
        if self.concepts.contains(&concept) {
            return;
        }
        let tokens = tokenize(&concept).into_tokens();
        if let Some(first) = tokens.first() {
            self.patterns
                .entry(first.clone())
                .or_default()
                .push((tokens, concept.clone()));
        }
        self.concepts.insert(concept);
    }

    pub fn add_edge(&mut self, edge: Edge) {
        self.add_concept(edge.head.clone());
        self.add_concept(edge.tail.clone());
        if self.edges.insert(edge.clone()) {
            self.out_edges.entry(edge.head.clone()).or_default().push(edge);
        }
    }

    pub fn concepts(&self) -> &BTreeSet<String> {
        &self.concepts
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.contains(concept)
    }

    fn edges_from(&self, head: &str) -> &[Edge] {
        self.out_edges.get(head).map_or(&[], Vec::as_slice)
    }

    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut graph = ConceptGraph::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ReinaError::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [concept] => graph.add_concept(*concept),
                [head, relation, tail] => graph.add_edge(Edge::new(*head, *relation, *tail)),
                _ => {
                    return Err(ReinaError::Record {
                        line: i + 1,
                        message: format!(
                            "expected head<TAB>relation<TAB>tail, found {} fields",
                            fields.len()
                        ),
                    })
                }
            }
        }
        Ok(graph)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ReinaError::io(path, e))?;
        Self::from_tsv(BufReader::new(file))
    }
}

#[derive(Debug, Clone, Default)]
pub struct DefinitionStore {
    defs: BTreeMap<String, String>,
}

impl DefinitionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, concept: impl Into<String>, definition: impl Into<String>) -> Result<()> {
        let concept = concept.into();
        let definition = definition.into();
        if definition.trim().is_empty() {
            return Err(ReinaError::Validation(format!(
                "empty definition for concept `{concept}`"
            )));
        }
        self.defs.insert(concept, definition);
        Ok(())
    }

    pub fn get(&self, concept: &str) -> Option<&str> {
        self.defs.get(concept).map(String::as_str)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut store = DefinitionStore::new();
        for (i, line) in reader.lines().enumerate() {
            let record_err = |message: String| ReinaError::Record {
                line: i + 1,
                message,
            };
            let line = line.map_err(|e| record_err(e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [concept, definition] = fields.as_slice() else {
                return Err(record_err(format!(
                    "expected concept<TAB>definition, found {} fields",
                    fields.len()
                )));
            };
            store
                .insert(*concept, *definition)
                .map_err(|e| record_err(e.to_string()))?;
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ReinaError::io(path, e))?;
        Self::from_tsv(BufReader::new(file))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeRecord {
    pub question_concept: Option<String>,
    pub answer_concept: Option<String>,
    pub definitions: Vec<String>,
    pub relations: Vec<Edge>,
    pub rendered: String,
}

/// Every graph concept whose tokens occur contiguously in `text`.
pub fn link_entities(text: &str, graph: &ConceptGraph) -> BTreeSet<String> {
    let tokens = tokenize(text).into_tokens();
    let mut found = BTreeSet::new();
    for start in 0..tokens.len() {
        let Some(candidates) = graph.patterns.get(&tokens[start]) else {
            continue;
        };
        for (pattern, concept) in candidates {
            if tokens[start..].starts_with(pattern) {
                found.insert(concept.clone());
            }
        }
    }
    found
}

/// The longest concept: most tokens, then most characters, then the
/// lexicographically smallest.
pub fn choose_concept(matched: &BTreeSet<String>) -> Option<String> {
    // BTreeSet iterates ascending, so keeping the first maximum gives the
    // lexicographic tie-break.
    let mut best: Option<(&String, usize, usize)> = None;
    for concept in matched {
        let key = (token_count(concept), concept.chars().count());
        match best {
            Some((_, t, c)) if (t, c) >= key => {}
            _ => best = Some((concept, key.0, key.1)),
        }
    }
    best.map(|(c, _, _)| c.clone())
}

/// Edges `(question_concept, r, answer_concept)`, ordered by relation label.
pub fn find_relations(question_concept: &str, answer_concept: &str, graph: &ConceptGraph) -> Vec<Edge> {
    let mut edges: Vec<Edge> = graph
        .edges_from(question_concept)
        .iter()
        .filter(|e| e.tail == answer_concept)
        .cloned()
        .collect();
    edges.sort_by(|a, b| a.relation.cmp(&b.relation));
    edges
}

/// All edges from any concept in `question_concepts` to any concept in
/// `answer_concepts`, ordered by head, then tail, then relation.
pub fn find_relations_between(
    question_concepts: &BTreeSet<String>,
    answer_concepts: &BTreeSet<String>,
    graph: &ConceptGraph,
) -> Vec<Edge> {
    let mut edges = Vec::new();
    for head in question_concepts {
        for tail in answer_concepts {
            edges.extend(find_relations(head, tail, graph));
        }
    }
    edges
}

fn join_segments(parts: &[String], separator: &str) -> String {
    let glue = if separator.is_empty() {
        " ".to_string()
    } else {
        format!(" {separator} ")
    };
    parts.join(&glue)
}

pub fn build_knowledge(
    question: &str,
    choice: &str,
    graph: &ConceptGraph,
    defs: &DefinitionStore,
    separator: &str,
) -> KnowledgeRecord {
    let question_matches = link_entities(question, graph);
    let answer_matches = link_entities(choice, graph);
    let question_concept = choose_concept(&question_matches);
    let answer_concept = choose_concept(&answer_matches);

    let mut definitions = Vec::new();
    if let Some(def) = question_concept.as_deref().and_then(|c| defs.get(c)) {
        definitions.push(def.to_owned());
    }
    if answer_concept != question_concept {
        if let Some(def) = answer_concept.as_deref().and_then(|c| defs.get(c)) {
            definitions.push(def.to_owned());
        }
    }

    let relations = find_relations_between(&question_matches, &answer_matches, graph);
    let parts: Vec<String> = definitions
        .iter()
        .cloned()
        .chain(relations.iter().map(Edge::phrase))
        .collect();
    let rendered = join_segments(&parts, separator);

    KnowledgeRecord {
        question_concept,
        answer_concept,
        definitions,
        relations,
        rendered,
    }
}

/// A concept graph and its definitions, loaded together.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub graph: ConceptGraph,
    pub defs: DefinitionStore,
}

impl KnowledgeBase {
    /// Every defined concept is also registered in the graph so it can be
    /// linked even without edges.
    pub fn new(mut graph: ConceptGraph, defs: DefinitionStore) -> Self {
        for concept in defs.concepts() {
            graph.add_concept(concept);
        }
        KnowledgeBase { graph, defs }
    }

    pub fn load(edges: impl AsRef<Path>, definitions: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(
            ConceptGraph::load(edges)?,
            DefinitionStore::load(definitions)?,
        ))
    }

    pub fn knowledge(&self, question: &str, choice: &str, separator: &str) -> KnowledgeRecord {
        build_knowledge(question, choice, &self.graph, &self.defs, separator)
    }
}
