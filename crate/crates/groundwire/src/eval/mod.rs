//! Offline evaluation: answer-quality metrics, a batch runner over the
//! pipeline, and report artifacts. Metrics are deliberately simple and
//! exactly specified so independent implementations agree to the digit.

pub mod synth;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Pipeline, QARequest, StageTimings};
use crate::reward::extract_urls;
use crate::reward::validate::PrefixPool;
use crate::text::tokenize;
use crate::types::ChunkId;

// --- metrics ------------------------------------------------------------

/// Word-level longest-common-subsequence F1 between candidate and
/// reference, scaled to 0..=100. Either side empty scores 0.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut prev = vec![0usize; r.len() + 1];
    let mut curr = vec![0usize; r.len() + 1];
    for ct in &c {
        for (j, rt) in r.iter().enumerate() {
            curr[j + 1] = if ct == rt {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let lcs = prev[r.len()] as f64;
    let precision = lcs / c.len() as f64;
    let recall = lcs / r.len() as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    100.0 * 2.0 * precision * recall / (precision + recall)
}

/// Fraction of flagged cases. Exact mean, no smoothing.
pub fn hallucination_rate(flags: &[bool]) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::EmptyCaseSet);
    }
    Ok(flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RecallMetrics {
    /// Mean per query of |retrieved intersect gold|.
    pub effective_chunks_per_query: f64,
    /// Sum of intersections over sum of gold sizes, scaled to 0..=100.
    pub recall_effectiveness: f64,
}

pub fn recall_metrics(
    retrieved: &[Vec<ChunkId>],
    gold: &[Vec<ChunkId>],
) -> Result<RecallMetrics> {
    if retrieved.is_empty() || retrieved.len() != gold.len() {
        return Err(Error::EmptyCaseSet);
    }
    let mut hit_sum = 0usize;
    let mut gold_sum = 0usize;
    for (got, want) in retrieved.iter().zip(gold) {
        let want: BTreeSet<&str> = want.iter().map(|id| id.as_str()).collect();
        hit_sum += got.iter().filter(|id| want.contains(id.as_str())).count();
        gold_sum += want.len();
    }
    Ok(RecallMetrics {
        effective_chunks_per_query: hit_sum as f64 / retrieved.len() as f64,
        recall_effectiveness: if gold_sum == 0 {
            0.0
        } else {
            100.0 * hit_sum as f64 / gold_sum as f64
        },
    })
}

/// True when the answer cites a URL that is neither present in the
/// retrieved evidence nor under an approved prefix. This is the static
/// grounding check evaluation uses to flag a hallucinated citation.
pub fn cites_ungrounded(answer: &str, evidence_urls: &BTreeSet<String>, pool: &PrefixPool) -> bool {
    extract_urls(answer)
        .into_iter()
        .any(|url| !evidence_urls.contains(&url) && !pool.approves(&url))
}

// --- cases and results -----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub query: String,
    pub gold_answer: String,
    pub gold_chunk_ids: Vec<ChunkId>,
    /// True when answering needs a chunk that shares no content terms
    /// with the query (reachable only through the entity graph).
    #[serde(default)]
    pub hop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub query: String,
    pub answer: String,
    pub refused: bool,
    pub rouge_l: f64,
    /// Ungrounded citation in the guarded answer.
    pub hallucinated: bool,
    /// Ungrounded citation in the raw generator output, before guarding.
    pub hallucinated_raw: bool,
    pub retrieved_ids: Vec<ChunkId>,
    pub gold_hits: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub cases: usize,
    pub refusals: usize,
    pub rouge_l_mean: f64,
    pub hallucination_rate: f64,
    pub hallucination_rate_raw: f64,
    pub recall: RecallMetrics,
    pub url_passed: usize,
    pub url_redacted: usize,
    pub safety_redacted: usize,
    pub mean_timings: StageTimings,
}

// --- runner -------------------------------------------------------------------

/// Runs every case through the pipeline and aggregates the metrics.
/// The raw (pre-guardrail) answer is scored alongside the served one so
/// reports show what the guardrail prevented.
pub fn run_eval(pipeline: &Pipeline, cases: &[EvalCase]) -> Result<(Vec<CaseResult>, EvalSummary)> {
    if cases.is_empty() {
        return Err(Error::EmptyCaseSet);
    }
    let pool = pipeline.prefix_pool();
    let mut results = Vec::with_capacity(cases.len());
    let mut url_passed = 0usize;
    let mut url_redacted = 0usize;
    let mut safety_redacted = 0usize;
    let mut sums = StageTimings::default();

    for case in cases {
        let (resp, _trace, raw) = pipeline.answer_traced(&QARequest::new(case.query.clone()));
        let evidence_urls = pipeline.evidence_urls(&resp.evidence_ids);
        let hallucinated = cites_ungrounded(&resp.answer, &evidence_urls, pool);
        let hallucinated_raw = raw
            .as_deref()
            .map(|text| cites_ungrounded(text, &evidence_urls, pool))
            .unwrap_or(false);
        for event in &resp.guardrail_events {
            match event.kind {
                crate::guardrail::GuardrailEventKind::UrlPassed => url_passed += 1,
                crate::guardrail::GuardrailEventKind::UrlRedacted => url_redacted += 1,
                crate::guardrail::GuardrailEventKind::SafetyRedacted => safety_redacted += 1,
            }
        }
        let gold: BTreeSet<&str> = case.gold_chunk_ids.iter().map(|id| id.as_str()).collect();
        let gold_hits =
            resp.evidence_ids.iter().filter(|id| gold.contains(id.as_str())).count();
        sums.rewrite_ms += resp.timings.rewrite_ms;
        sums.retrieval_ms += resp.timings.retrieval_ms;
        sums.graph_ms += resp.timings.graph_ms;
        sums.hybrid_ms += resp.timings.hybrid_ms;
        sums.rerank_ms += resp.timings.rerank_ms;
        sums.generation_ms += resp.timings.generation_ms;
        sums.guardrail_ms += resp.timings.guardrail_ms;
        sums.total_ms += resp.timings.total_ms;
        let rouge = rouge_l(&resp.answer, &case.gold_answer);
        results.push(CaseResult {
            case_id: case.id.clone(),
            query: case.query.clone(),
            answer: resp.answer,
            refused: resp.refused,
            rouge_l: rouge,
            hallucinated,
            hallucinated_raw,
            retrieved_ids: resp.evidence_ids,
            gold_hits,
            timings: resp.timings,
        });
    }

    let n = cases.len() as f64;
    let retrieved: Vec<Vec<ChunkId>> =
        results.iter().map(|r| r.retrieved_ids.clone()).collect();
    let gold: Vec<Vec<ChunkId>> = cases.iter().map(|c| c.gold_chunk_ids.clone()).collect();
    let summary = EvalSummary {
        cases: cases.len(),
        refusals: results.iter().filter(|r| r.refused).count(),
        rouge_l_mean: results.iter().map(|r| r.rouge_l).sum::<f64>() / n,
        hallucination_rate: hallucination_rate(
            &results.iter().map(|r| r.hallucinated).collect::<Vec<_>>(),
        )?,
        hallucination_rate_raw: hallucination_rate(
            &results.iter().map(|r| r.hallucinated_raw).collect::<Vec<_>>(),
        )?,
        recall: recall_metrics(&retrieved, &gold)?,
        url_passed,
        url_redacted,
        safety_redacted,
        mean_timings: StageTimings {
            rewrite_ms: sums.rewrite_ms / n,
            retrieval_ms: sums.retrieval_ms / n,
            graph_ms: sums.graph_ms / n,
            hybrid_ms: sums.hybrid_ms / n,
            rerank_ms: sums.rerank_ms / n,
            generation_ms: sums.generation_ms / n,
            guardrail_ms: sums.guardrail_ms / n,
            total_ms: sums.total_ms / n,
        },
    };
    Ok((results, summary))
}

// --- artifacts -------------------------------------------------------------------

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for row in rows {
        let mut line = serde_json::to_string(row)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Writes `cases.jsonl`, `results.jsonl`, and `summary.json` under `dir`
/// (created if missing).
pub fn write_report(
    dir: impl AsRef<Path>,
    cases: &[EvalCase],
    results: &[CaseResult],
    summary: &EvalSummary,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("cases.jsonl"), cases)?;
    write_jsonl(&dir.join("results.jsonl"), results)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

/// Reads one `EvalCase` per line.
pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<EvalCase>> {
    let raw = std::fs::read_to_string(&path)?;
    let mut cases = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        cases.push(serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            file: path.as_ref().display().to_string(),
            line: idx + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(cases)
}
