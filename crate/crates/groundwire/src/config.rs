//! Pipeline configuration. Every tunable has a pinned default so an empty
//! `{}` config file yields the stock pipeline; JSON files override fields
//! selectively.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Result;

/// How the orchestrator routes a query across channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RouteMode {
    /// Heuristic: run both channels unless the query is too thin for the graph.
    #[default]
    Auto,
    /// Always run both channels.
    Both,
    /// Always skip the graph channel.
    HybridOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSettings {
    /// Seed for community detection label shuffling.
    pub seed: u64,
    /// BFS expansion radius for local graph search.
    pub hops: usize,
    /// Results returned by the graph channel.
    pub k: usize,
    /// Community hierarchy depth.
    pub levels: usize,
    /// Label propagation round cap.
    pub max_rounds: usize,
    /// Community summary length cap, characters.
    pub summary_chars: usize,
    /// Member chunks sampled into a community summary.
    pub summary_chunks: usize,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self {
            seed: 42,
            hops: 2,
            k: 10,
            levels: 2,
            max_rounds: 100,
            summary_chars: 256,
            summary_chunks: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridSettings {
    /// BM25 term frequency saturation.
    pub k1: f64,
    /// BM25 length normalization.
    pub b: f64,
    /// Embedding dimensionality of the built-in hashed embedder.
    pub dims: usize,
    /// Reciprocal rank fusion constant.
    pub rrf_k: f64,
    /// Results returned by the hybrid channel.
    pub k: usize,
    /// Rewrites kept per query (the bundle is the original plus these).
    pub max_rewrites: usize,
}

impl Default for HybridSettings {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            dims: 256,
            rrf_k: 60.0,
            k: 10,
            max_rewrites: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorSettings {
    /// Budgets are per-channel wall-clock deadlines, milliseconds.
    pub graph_timeout_ms: u64,
    pub hybrid_timeout_ms: u64,
    pub rerank_timeout_ms: u64,
    pub rewrite_timeout_ms: u64,
    /// Candidates kept after rerank.
    pub final_k: usize,
    /// Evidence budget in whitespace tokens.
    pub token_budget: usize,
    pub route: RouteMode,
}

impl Default for OrchestratorSettings {
    fn default() -> Self {
        Self {
            graph_timeout_ms: 852,
            hybrid_timeout_ms: 167,
            rerank_timeout_ms: 557,
            rewrite_timeout_ms: 690,
            final_k: 24,
            token_budget: 8192,
            route: RouteMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardSettings {
    /// Liveness probe timeout, milliseconds. Probes that exceed it count
    /// as dead (fail closed).
    pub http_timeout_ms: u64,
    /// Weights for (faithfulness, style, safety, url) reward components.
    pub lambda: [f64; 4],
}

impl Default for RewardSettings {
    fn default() -> Self {
        Self {
            http_timeout_ms: 3000,
            lambda: [1.0, 1.0, 2.0, 2.0],
        }
    }
}

/// Top-level pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Percentage of the corpus promoted into the hot subset on each
    /// rolling update.
    pub kh_percent: u32,
    /// Citation window length, seconds.
    pub window_secs: i64,
    pub graph: GraphSettings,
    pub hybrid: HybridSettings,
    pub orchestrator: OrchestratorSettings,
    pub reward: RewardSettings,
    pub guardrail: crate::guardrail::GuardrailConfig,
    /// Served instead of generating when retrieval finds nothing.
    pub refusal_text: String,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&raw)?)
    }
}

/// Citation window default: 7 days.
pub const DEFAULT_WINDOW_SECS: i64 = 7 * 24 * 60 * 60;

/// Hot-subset share default: top 10 percent by citation heat.
pub const DEFAULT_KH_PERCENT: u32 = 10;

pub const DEFAULT_REFUSAL_TEXT: &str =
    "I could not find supporting material for that question, so I won't guess.";

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kh_percent: DEFAULT_KH_PERCENT,
            window_secs: DEFAULT_WINDOW_SECS,
            graph: GraphSettings::default(),
            hybrid: HybridSettings::default(),
            orchestrator: OrchestratorSettings::default(),
            reward: RewardSettings::default(),
            guardrail: crate::guardrail::GuardrailConfig::default(),
            refusal_text: DEFAULT_REFUSAL_TEXT.to_string(),
        }
    }
}

impl PipelineConfig {
    /// Stock configuration with the documented defaults filled in.
    pub fn stock() -> Self {
        Self::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_yields_defaults() {
        let cfg: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.orchestrator.graph_timeout_ms, 852);
        assert_eq!(cfg.orchestrator.hybrid_timeout_ms, 167);
        assert_eq!(cfg.orchestrator.rerank_timeout_ms, 557);
        assert_eq!(cfg.orchestrator.rewrite_timeout_ms, 690);
        assert_eq!(cfg.orchestrator.token_budget, 8192);
        assert_eq!(cfg.hybrid.k1, 1.2);
        assert_eq!(cfg.hybrid.b, 0.75);
        assert_eq!(cfg.hybrid.rrf_k, 60.0);
        assert_eq!(cfg.hybrid.max_rewrites, 3);
        assert_eq!(cfg.graph.hops, 2);
        assert_eq!(cfg.graph.seed, 42);
        assert_eq!(cfg.reward.lambda, [1.0, 1.0, 2.0, 2.0]);
        assert_eq!(cfg.reward.http_timeout_ms, 3000);
        assert_eq!(cfg.guardrail.max_url_length, 2048);
        assert!(!cfg.refusal_text.is_empty());
    }

    #[test]
    fn stock_sets_window_and_share() {
        let cfg = PipelineConfig::stock();
        assert_eq!(cfg.window_secs, 604_800);
        assert_eq!(cfg.kh_percent, 10);
    }

    #[test]
    fn partial_override_keeps_rest() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"orchestrator": {"final_k": 5}}"#).unwrap();
        assert_eq!(cfg.orchestrator.final_k, 5);
        assert_eq!(cfg.orchestrator.graph_timeout_ms, 852);
    }
}
