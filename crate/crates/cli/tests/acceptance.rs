//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p reina-cli --test acceptance`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reina_core::bm25::{bm25_score, build_index, merge_indices, retrieve, Bm25Params, IndexedDoc};
use reina_core::dataset::chunk_text;
use reina_core::kg::{link_entities, ConceptGraph, Edge, KnowledgeBase, KnowledgeRecord};
use reina_core::pipeline::{
    apply_filters, index_instances, Augmenter, Mode, PipelineConfig, ScoredValue, StoredValue, TaskKind,
    TrainingInstance, DEFAULT_SEPARATOR,
};
use reina_core::text::{tokenize, TokenStream};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if let false = $cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn words(tokens: &str) -> Vec<String> {
    tokenize(tokens).iter().map(|t| t.to_string()).collect()
}

fn random_text(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> String {
    (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// BM25

/// Scores every document directly from its term counts; no postings.
fn brute_force(docs: &[(String, Vec<String>)], query: &[String], params: Bm25Params) -> Vec<(String, f64)> {
    let counts: Vec<HashMap<&str, usize>> = docs
        .iter()
        .map(|(_, toks)| {
            let mut m = HashMap::new();
            for t in toks {
                *m.entry(t.as_str()).or_default() += 1;
            }
            m
        })
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let distinct: BTreeSet<&str> = query.iter().map(String::as_str).collect();
    let idf: HashMap<&str, f64> = distinct
        .iter()
        .map(|t| {
            let df = counts.iter().filter(|c| c.contains_key(t)).count() as f64;
            (*t, (1.0 + (n - df + 0.5) / (df + 0.5)).ln())
        })
        .collect();

    let mut scored = Vec::new();
    for ((id, toks), c) in docs.iter().zip(&counts) {
        let norm = params.k1 * (1.0 - params.b + params.b * toks.len() as f64 / avgdl);
        let mut score = 0.0;
        for t in &distinct {
            if let Some(&tf) = c.get(t) {
                let tf = tf as f64;
                score += idf[t] * tf * (params.k1 + 1.0) / (tf + norm);
            }
        }
        if score > 0.0 {
            scored.push((id.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

fn indexed(docs: &[(String, Vec<String>)]) -> Vec<IndexedDoc> {
    docs.iter()
        .map(|(id, toks)| IndexedDoc {
            doc_id: id.clone(),
            key_tokens: TokenStream::from_words(toks.clone()).unwrap(),
            value_ref: String::new(),
        })
        .collect()
}

fn random_corpus(rng: &mut ChaCha8Rng, max_docs: usize, vocab: usize) -> Vec<(String, Vec<String>)> {
    let n = rng.gen_range(1..=max_docs);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=80);
            (format!("d{i:05}"), words(&random_text(rng, vocab, len)))
        })
        .collect()
}

fn bm25_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xb025);
    let params = Bm25Params::default();
    for corpus_no in 0..50 {
        let vocab = rng.gen_range(1..=500);
        let docs = random_corpus(&mut rng, 1000, vocab);
        let index = build_index(indexed(&docs), params).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            // a few query terms fall outside the vocabulary
            let qlen = rng.gen_range(1..=10);
            let query = words(&random_text(&mut rng, vocab + 10, qlen));
            let k = rng.gen_range(1..=20);
            let hits = retrieve(&TokenStream::from_words(query.clone()).unwrap(), k, &index, None)
                .map_err(|e| e.to_string())?;
            let expected = brute_force(&docs, &query, params);
            ensure!(
                hits.len() == expected.len().min(k),
                "corpus {corpus_no}: {} hits, oracle {}",
                hits.len(),
                expected.len().min(k)
            );
            for (hit, (id, score)) in hits.iter().zip(&expected) {
                ensure!(&hit.doc_id == id, "corpus {corpus_no}: got {} where oracle has {id}", hit.doc_id);
                let rel = (hit.score - score).abs() / score.abs();
                ensure!(rel <= 1e-9, "corpus {corpus_no}, {id}: {} vs {score}", hit.score);
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(())
}

fn hand_computed_score() -> Outcome {
    let docs = vec![("d".to_string(), vec!["a".to_string()])];
    let index = build_index(indexed(&docs), Bm25Params::default()).map_err(|e| e.to_string())?;
    let q = TokenStream::from_words(["a"]).unwrap();
    let score = bm25_score(&q, "d", &index).map_err(|e| e.to_string())?;
    let expected = (4.0f64 / 3.0).ln();
    ensure!((score - expected).abs() <= 1e-6, "{score} vs {expected}");
    ensure!((score - 0.287682).abs() <= 1e-6, "{score} vs 0.287682");
    Ok(())
}

// ---------------------------------------------------------------------------
// leakage and mode asymmetry

/// 500 summarization instances; every tenth reuses the summary of an earlier
/// instance so the overlap filter has something to remove.
fn toy_training_set(rng: &mut ChaCha8Rng) -> Vec<TrainingInstance> {
    let mut out: Vec<TrainingInstance> = Vec::with_capacity(500);
    for i in 0..500 {
        let doc_len = rng.gen_range(20..80);
        let doc = random_text(rng, 150, doc_len);
        let summary = if i % 10 == 9 {
            let donor: &TrainingInstance = &out[rng.gen_range(0..out.len())];
            donor.label_y.clone().unwrap()
        } else {
            let len = rng.gen_range(8..25);
            random_text(rng, 40, len)
        };
        out.push(TrainingInstance::new(format!("t{i:03}"), doc, summary));
    }
    out
}

fn distinct_grams(text: &str, n: usize) -> HashSet<Vec<String>> {
    let toks: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    toks.windows(n).map(<[String]>::to_vec).collect()
}

fn leakage_freedom() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ea4);
    let corpus = toy_training_set(&mut rng);
    let index = index_instances(TaskKind::Summarization, &corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::new(TaskKind::Summarization, Mode::Training);
    let aug = Augmenter::new(&index, &cfg).map_err(|e| e.to_string())?;
    let results = aug.augment_batch(&corpus, 4).map_err(|e| e.to_string())?;

    let mut dropped = 0;
    for (inst, res) in corpus.iter().zip(&results) {
        let ex = &res.examples[0];
        ensure!(!ex.retrieved_ids.contains(&inst.id), "{} retrieved itself", inst.id);
        dropped += ex.dropped_by_overlap.len();
        let gold = distinct_grams(inst.label_y.as_deref().unwrap(), 7);
        for id in &ex.retrieved_ids {
            let value = index.value_ref(id).unwrap();
            let shared = distinct_grams(value, 7).intersection(&gold).count();
            ensure!(shared <= 3, "{}: {id} shares {shared} 7-grams with gold", inst.id);
        }
    }
    ensure!(dropped > 0, "overlap filter never fired on the planted copies");

    // boundary: a 9-token gold has 3 distinct 7-grams, a 10-token one has 4
    let boundary = |len: usize| -> Result<bool, String> {
        let gold = (0..len).map(|i| format!("g{i}")).collect::<Vec<_>>().join(" ");
        let hits = vec![ScoredValue {
            doc_id: "other".into(),
            value: StoredValue::Text(format!("prefix {gold} suffix")),
            score: 1.0,
        }];
        let out = apply_filters("self", Some(&gold), hits, &cfg).map_err(|e| e.to_string())?;
        Ok(out.kept.len() == 1)
    };
    ensure!(boundary(9)?, "3 shared 7-grams should be kept");
    ensure!(!boundary(10)?, "4 shared 7-grams should be dropped");
    Ok(())
}

fn mode_asymmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa5e1);
    let mut corpus = toy_training_set(&mut rng);
    let doc = "the harbour authority closed the northern pier after the storm damaged its supports";
    let summary = "storm damage closes the northern pier of the harbour for repairs this week";
    corpus.push(TrainingInstance::new("planted-dup", doc, summary));
    corpus.push(TrainingInstance::new("planted-orig", doc, summary));
    let index = index_instances(TaskKind::Summarization, &corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
    let train_cfg = PipelineConfig::new(TaskKind::Summarization, Mode::Training);
    let infer_cfg = PipelineConfig::new(TaskKind::Summarization, Mode::Inference);
    let train = Augmenter::new(&index, &train_cfg).map_err(|e| e.to_string())?;
    let infer = Augmenter::new(&index, &infer_cfg).map_err(|e| e.to_string())?;

    for inst in corpus.iter().step_by(7) {
        let t = train.augment(inst).map_err(|e| e.to_string())?;
        let i = infer.augment(inst).map_err(|e| e.to_string())?;
        let inferred: HashSet<&str> = i.retained[0].iter().map(|h| h.doc_id.as_str()).collect();
        for hit in &t.retained[0] {
            ensure!(inferred.contains(hit.doc_id.as_str()), "{}: {} retained only in training", inst.id, hit.doc_id);
        }
    }

    let probe = corpus.last().unwrap();
    let i = infer.augment(probe).map_err(|e| e.to_string())?;
    ensure!(
        i.examples[0].retrieved_ids.iter().any(|id| id == "planted-dup"),
        "duplicate missing at inference: {:?}",
        i.examples[0].retrieved_ids
    );
    let t = train.augment(probe).map_err(|e| e.to_string())?;
    ensure!(
        !t.examples[0].retrieved_ids.iter().any(|id| id.starts_with("planted")),
        "duplicate leaked into training: {:?}",
        t.examples[0].retrieved_ids
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// CLI-driven checks

fn reina(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_reina"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "reina {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

/// Indexes `train` and augments it against itself, returning the output bytes.
fn index_and_augment(task: TaskKind, train: &Path, dir: &Path, extra: &[&str]) -> Result<Vec<u8>, String> {
    let idx = dir.join(format!("{}.idx", task.as_str()));
    let out = dir.join(format!("{}.jsonl", task.as_str()));
    let (train, idx_s, out_s) = (train.to_str().unwrap(), idx.to_str().unwrap(), out.to_str().unwrap());
    let mut kg = Vec::new();
    let (edges, defs) = (fixtures().join("kg/edges.tsv"), fixtures().join("kg/definitions.tsv"));
    if task == TaskKind::MultiChoiceQaWithKnowledge {
        kg = vec!["--concepts", edges.to_str().unwrap(), "--definitions", defs.to_str().unwrap()];
    }
    let mut index_args = vec!["index", "--task", task.as_str(), "--input", train, "--output", idx_s];
    index_args.extend(&kg);
    reina(&index_args)?;
    let mut aug_args = vec![
        "augment", "--task", task.as_str(), "--index", idx_s, "--input", train, "--output", out_s,
    ];
    aug_args.extend(&kg);
    aug_args.extend(extra);
    reina(&aug_args)?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn combination_goldens() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for task in TaskKind::ALL {
        let golden = fixtures().join("golden").join(task.as_str());
        let produced = index_and_augment(task, &golden.join("train.jsonl"), dir.path(), &["--workers", "1"])?;
        let expected = std::fs::read(golden.join("expected.jsonl")).map_err(|e| e.to_string())?;
        ensure!(produced == expected, "{} differs from its golden file", task.as_str());
    }
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xde7);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let train = dir.path().join("train.jsonl");
    let lines: String = toy_training_set(&mut rng)
        .iter()
        .map(|inst| {
            let rec = serde_json::json!({"id": inst.id, "input": inst.input_x, "label": inst.label_y});
            format!("{rec}\n")
        })
        .collect();
    std::fs::write(&train, lines).map_err(|e| e.to_string())?;

    let task = TaskKind::Summarization;
    let runs = [["--workers", "1"], ["--workers", "1"], ["--workers", "4"]];
    let mut outputs = Vec::new();
    for (i, extra) in runs.iter().enumerate() {
        let run_dir = dir.path().join(format!("run{i}"));
        std::fs::create_dir(&run_dir).map_err(|e| e.to_string())?;
        let bytes = index_and_augment(task, &train, &run_dir, extra)?;
        let idx = std::fs::read(run_dir.join("summarization.idx")).map_err(|e| e.to_string())?;
        outputs.push((idx, bytes));
    }
    ensure!(!outputs[0].1.is_empty(), "empty output");
    ensure!(outputs[0] == outputs[1], "two identical runs differ");
    ensure!(outputs[0].1 == outputs[2].1, "--workers 4 differs from --workers 1");
    Ok(())
}

// ---------------------------------------------------------------------------
// budgets, chunking, merging, knowledge

fn budget_conformance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0d6);
    // long documents, long labels and punctuation runs that tokenize densely
    let noisy = |rng: &mut ChaCha8Rng, len: usize| -> String {
        (0..len)
            .map(|_| match rng.gen_range(0..4) {
                0 => "?!".to_string(),
                1 => format!("x{}-y{}", rng.gen_range(0..30), rng.gen_range(0..30)),
                _ => format!("w{}", rng.gen_range(0..60)),
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let corpus: Vec<TrainingInstance> = (0..60)
        .map(|i| {
            let doc_len = rng.gen_range(300..2500);
            let label_len = rng.gen_range(50..700);
            TrainingInstance::new(format!("long{i:02}"), noisy(&mut rng, doc_len), noisy(&mut rng, label_len))
        })
        .collect();

    for task in [TaskKind::Summarization, TaskKind::LanguageModeling, TaskKind::MachineTranslation] {
        let index = index_instances(task, &corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
        for mode in [Mode::Training, Mode::Inference] {
            let cfg = PipelineConfig::new(task, mode);
            let aug = Augmenter::new(&index, &cfg).map_err(|e| e.to_string())?;
            for inst in &corpus {
                let ex = &aug.augment(inst).map_err(|e| e.to_string())?.examples[0];
                let combined = words(&ex.combined_text);
                ensure!(combined.len() <= 1024, "{} {}: {} tokens", task.as_str(), inst.id, combined.len());
                let input = words(&inst.input_x);
                if task == TaskKind::Summarization {
                    let keep = input.len().min(600);
                    ensure!(combined[..keep] == input[..keep], "{}: prefix is not the first 600 tokens", inst.id);
                    ensure!(
                        input.len() <= 600 || combined.get(keep).map(String::as_str) == Some("<"),
                        "{}: document not cut at 600 tokens",
                        inst.id
                    );
                }
            }
        }
    }
    Ok(())
}

fn chunker_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4a2);
    for _ in 0..100 {
        let len = rng.gen_range(0..1500);
        let text = random_text(&mut rng, 1000, len);
        let tokens = words(&text);
        for size in [64, 128] {
            let pairs = chunk_text(&text, size).map_err(|e| e.to_string())?;
            let expected = len.div_ceil(size).saturating_sub(1);
            ensure!(pairs.len() == expected, "L={len} s={size}: {} pairs, expected {expected}", pairs.len());
            let mut rebuilt: Vec<String> = Vec::new();
            for (i, pair) in pairs.iter().enumerate() {
                let ctx = words(&pair.context_chunk);
                ensure!(ctx.len() == size, "L={len} s={size}: chunk {i} has {} tokens", ctx.len());
                if let Some(next) = pairs.get(i + 1) {
                    ensure!(pair.next_chunk == next.context_chunk, "L={len} s={size}: pair {i} not chained");
                }
                rebuilt.extend(ctx);
            }
            if let Some(last) = pairs.last() {
                rebuilt.extend(words(&last.next_chunk));
                ensure!(rebuilt == tokens, "L={len} s={size}: chunks do not rebuild the text");
            }
        }
    }
    Ok(())
}

fn merge_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e6e);
    let params = Bm25Params::default();
    for split_no in 0..20 {
        let vocab = rng.gen_range(5..300);
        let mut docs = random_corpus(&mut rng, 400, vocab);
        if docs.len() < 2 {
            docs.push(("d99999".into(), vec!["w0".into()]));
        }
        docs.shuffle(&mut rng);
        let parts = rng.gen_range(2..=4.min(docs.len()));
        let mut cuts: Vec<usize> = (1..docs.len()).collect();
        cuts.shuffle(&mut rng);
        let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
        cuts.sort();
        let mut pieces = Vec::new();
        let mut from = 0;
        for cut in cuts.into_iter().chain([docs.len()]) {
            pieces.push(build_index(indexed(&docs[from..cut]), params).map_err(|e| e.to_string())?);
            from = cut;
        }
        let merged = merge_indices(&pieces).map_err(|e| e.to_string())?;
        let joint = build_index(indexed(&docs), params).map_err(|e| e.to_string())?;
        ensure!(merged.n_docs() == joint.n_docs(), "split {split_no}: N differs");
        ensure!(merged.avgdl() == joint.avgdl(), "split {split_no}: avgdl differs");
        for _ in 0..10 {
            let qlen = rng.gen_range(1..8);
            let q = TokenStream::from_words(words(&random_text(&mut rng, vocab, qlen))).unwrap();
            let a = retrieve(&q, 10, &merged, None).map_err(|e| e.to_string())?;
            let b = retrieve(&q, 10, &joint, None).map_err(|e| e.to_string())?;
            ensure!(a == b, "split {split_no}: merged retrieval differs");
        }
    }
    Ok(())
}

fn quadratic_links(text: &str, graph: &ConceptGraph) -> BTreeSet<String> {
    let toks = words(text);
    let mut found = BTreeSet::new();
    for concept in graph.concepts() {
        let pattern = words(concept);
        for start in 0..toks.len() {
            if toks.len() - start >= pattern.len() && toks[start..start + pattern.len()] == pattern[..] {
                found.insert(concept.clone());
            }
        }
    }
    found
}

fn kg_knowledge() -> Outcome {
    let kb = KnowledgeBase::load(fixtures().join("kg/edges.tsv"), fixtures().join("kg/definitions.tsv"))
        .map_err(|e| e.to_string())?;
    let golden = std::fs::read_to_string(fixtures().join("kg/expected.jsonl")).map_err(|e| e.to_string())?;
    for line in golden.lines() {
        let row: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let (q, c) = (row["question"].as_str().unwrap(), row["choice"].as_str().unwrap());
        let expected: KnowledgeRecord = serde_json::from_value(row["expected"].clone()).map_err(|e| e.to_string())?;
        let got = kb.knowledge(q, c, DEFAULT_SEPARATOR);
        ensure!(got == expected, "{q} / {c}: got {got:?}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x4b6);
    let lexicon = ["ice", "cream", "sun", "warm", "room", "cold", "bed", "the", "a"];
    for _ in 0..200 {
        let mut graph = ConceptGraph::new();
        for _ in 0..rng.gen_range(0..15) {
            let len = rng.gen_range(1..=3);
            let concept: Vec<&str> = (0..len).map(|_| *lexicon.choose(&mut rng).unwrap()).collect();
            if rng.gen_bool(0.5) {
                graph.add_concept(concept.join(" "));
            } else {
                graph.add_edge(Edge::new(concept.join(" "), "RelatedTo", "sun"));
            }
        }
        let len = rng.gen_range(0..30);
        let text: Vec<&str> = (0..len).map(|_| *lexicon.choose(&mut rng).unwrap()).collect();
        let text = text.join(" ");
        let got = link_entities(&text, &graph);
        let expected = quadratic_links(&text, &graph);
        ensure!(got == expected, "linking `{text}`: {got:?} vs {expected:?}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bm25 oracle equivalence", bm25_oracle_equivalence),
        ("hand-computed score ln(4/3)", hand_computed_score),
        ("leakage freedom", leakage_freedom),
        ("training/inference asymmetry", mode_asymmetry),
        ("combination golden files", combination_goldens),
        ("budget conformance", budget_conformance),
        ("chunker arithmetic", chunker_arithmetic),
        ("merge equivalence", merge_equivalence),
        ("kg knowledge", kg_knowledge),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name} ({secs:.2}s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
