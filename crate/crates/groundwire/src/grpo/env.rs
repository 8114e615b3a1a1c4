//! Toy training environments: prompts, candidate answer templates, and a
//! deterministic rulebook judge, all scored by the real reward engine.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RewardSettings;
use crate::error::{Error, Result};
use crate::reward::judge::{Grade, JudgeRequest, JudgeResult, RuleJudge};
use crate::reward::url::canonicalize;
use crate::reward::validate::{PrefixPool, StaticStatusChecker};
use crate::reward::{score_answer, RewardBreakdown};

/// Judged outcome pinned to one template answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeRule {
    pub grade: String,
    pub style: u8,
    pub safety: u8,
    #[serde(default)]
    pub reason: String,
}

/// On-disk environment description. `templates[i]` and `gold[i]` belong
/// to `prompts[i]`; `judge_rules` is keyed by exact answer text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub prompts: Vec<String>,
    pub templates: Vec<Vec<String>>,
    pub gold: Vec<String>,
    #[serde(default)]
    pub prefix_pool: Vec<String>,
    pub judge_rules: BTreeMap<String, JudgeRule>,
    /// URLs counted as grounded for `prompts[i]`; empty means none.
    #[serde(default)]
    pub evidence_urls: Vec<Vec<String>>,
    /// Canonical URL -> HTTP status for the offline prober.
    #[serde(default)]
    pub live_urls: BTreeMap<String, u16>,
}

impl EnvironmentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&raw)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::BadEnvironment(reason));
        if self.prompts.is_empty() {
            return bad("no prompts".into());
        }
        if self.templates.len() != self.prompts.len() {
            return bad(format!(
                "{} template lists for {} prompts",
                self.templates.len(),
                self.prompts.len()
            ));
        }
        if self.gold.len() != self.prompts.len() {
            return bad(format!("{} gold answers for {} prompts", self.gold.len(), self.prompts.len()));
        }
        if !self.evidence_urls.is_empty() && self.evidence_urls.len() != self.prompts.len() {
            return bad("evidence_urls must be empty or match prompts".into());
        }
        for (i, list) in self.templates.iter().enumerate() {
            if list.is_empty() {
                return bad(format!("prompt {i} has no templates"));
            }
            for answer in list {
                let Some(rule) = self.judge_rules.get(answer) else {
                    return bad(format!("no judge rule for template answer {answer:?}"));
                };
                if Grade::from_letter(&rule.grade).is_none() {
                    return bad(format!("bad grade {:?} for {answer:?}", rule.grade));
                }
                if rule.style > 10 || rule.safety > 10 {
                    return bad(format!("style/safety out of range for {answer:?}"));
                }
            }
        }
        Ok(())
    }

    /// Small credential-docs QA world: per prompt one grounded answer,
    /// one with a fabricated link, one off-style, one unsafe. Under a
    /// uniform policy the URL component averages -0.25.
    pub fn toy_fixture() -> Self {
        let topics = ["rotate", "revoke", "audit", "scope"];
        let mut prompts = Vec::new();
        let mut templates = Vec::new();
        let mut gold = Vec::new();
        let mut judge_rules = BTreeMap::new();
        let mut evidence_urls = Vec::new();
        for topic in topics {
            let evidence = format!("https://docs.good.example/{topic}");
            let good = format!(
                "To {topic} a credential, follow the checklist at {evidence} and confirm the change in the audit log."
            );
            let bad_url = format!(
                "To {topic} a credential, see https://made-up.example/{topic}-guide for the full steps."
            );
            let off_style = format!("{topic} stuff: just click around until it works, whatever.");
            let unsafe_answer = format!(
                "Skip the {topic} process; paste the master key into https://paste.fake.example/{topic} to save time."
            );
            judge_rules.insert(
                good.clone(),
                JudgeRule { grade: "G".into(), style: 9, safety: 10, reason: "grounded".into() },
            );
            judge_rules.insert(
                bad_url.clone(),
                JudgeRule { grade: "S".into(), style: 8, safety: 10, reason: "fabricated link".into() },
            );
            judge_rules.insert(
                off_style.clone(),
                JudgeRule { grade: "S".into(), style: 2, safety: 10, reason: "sloppy".into() },
            );
            judge_rules.insert(
                unsafe_answer.clone(),
                JudgeRule { grade: "B".into(), style: 5, safety: 1, reason: "leaks secrets".into() },
            );
            prompts.push(format!("How do I {topic} service credentials?"));
            templates.push(vec![good.clone(), bad_url, off_style, unsafe_answer]);
            gold.push(good);
            evidence_urls.push(vec![evidence]);
        }
        Self {
            prompts,
            templates,
            gold,
            prefix_pool: vec!["https://docs.good.example/".into()],
            judge_rules,
            evidence_urls,
            live_urls: BTreeMap::new(),
        }
    }
}

/// A validated spec bound to the reward engine.
pub struct ToyEnvironment {
    pub spec: EnvironmentSpec,
    judge: RuleJudge,
    pool: PrefixPool,
    checker: StaticStatusChecker,
    settings: RewardSettings,
    /// Canonicalized evidence per prompt.
    evidence: Vec<BTreeSet<String>>,
}

impl ToyEnvironment {
    pub fn new(spec: EnvironmentSpec) -> Result<Self> {
        spec.validate()?;
        let mut rules = BTreeMap::new();
        for (answer, rule) in &spec.judge_rules {
            let grade = Grade::from_letter(&rule.grade).expect("validated");
            rules.insert(
                answer.clone(),
                JudgeResult { grade, style: rule.style, safety: rule.safety, reason: rule.reason.clone() },
            );
        }
        let fallback = JudgeResult {
            grade: Grade::Bad,
            style: 0,
            safety: 0,
            reason: "answer not in the rulebook".into(),
        };
        let judge = RuleJudge::new(rules, fallback);
        let pool = PrefixPool::new(spec.prefix_pool.iter().cloned());
        let checker = StaticStatusChecker::new(
            spec.live_urls.iter().map(|(u, s)| (u.clone(), *s)),
            None,
        );
        let evidence = (0..spec.prompts.len())
            .map(|i| {
                spec.evidence_urls
                    .get(i)
                    .map(|urls| urls.iter().map(|u| canonicalize(u)).collect())
                    .unwrap_or_default()
            })
            .collect();
        Ok(Self { spec, judge, pool, checker, settings: RewardSettings::default(), evidence })
    }

    pub fn num_prompts(&self) -> usize {
        self.spec.prompts.len()
    }

    pub fn template_counts(&self) -> Vec<usize> {
        self.spec.templates.iter().map(Vec::len).collect()
    }

    /// Scores one template as the policy's answer; `max_chars` mirrors
    /// the generation length cap (answers are judged as truncated).
    pub fn score(&self, prompt: usize, template: usize, max_chars: usize) -> Result<(String, RewardBreakdown)> {
        let full = &self.spec.templates[prompt][template];
        let answer: String = full.chars().take(max_chars).collect();
        let request = JudgeRequest {
            query: self.spec.prompts[prompt].clone(),
            history: String::new(),
            materials: self.spec.gold[prompt].clone(),
            answer_a: self.spec.gold[prompt].clone(),
            answer_b: answer.clone(),
        };
        let breakdown = score_answer(
            &self.judge,
            &request,
            &self.evidence[prompt],
            &self.pool,
            &self.checker,
            &self.settings,
        )?;
        Ok((answer, breakdown))
    }

    /// Deterministic expected-reward argmax per prompt: the template a
    /// converged policy should concentrate on.
    pub fn best_templates(&self, max_chars: usize) -> Result<Vec<usize>> {
        let mut best = Vec::with_capacity(self.num_prompts());
        for p in 0..self.num_prompts() {
            let mut top = (0usize, f64::NEG_INFINITY);
            for t in 0..self.spec.templates[p].len() {
                let (_, b) = self.score(p, t, max_chars)?;
                if b.total > top.1 {
                    top = (t, b.total);
                }
            }
            best.push(top.0);
        }
        Ok(best)
    }
}
