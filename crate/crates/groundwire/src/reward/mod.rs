//! Multi-dimensional answer scoring: evidence faithfulness and style and
//! safety from a judge, plus a hard URL-validity component computed by
//! this crate. The URL leg is the part that cannot be argued with: a link
//! is either in evidence, approved and alive, or it is a hallucination.

pub mod judge;
pub mod url;
pub mod validate;

pub use judge::{AnswerJudge, ClientJudge, Grade, JudgeClient, JudgeRequest, JudgeResult, RuleJudge};
pub use url::{canonicalize, extract_urls, find_urls, UrlMatch};
pub use validate::{
    score_url_reward, validate_urls, PrefixPool, StaticStatusChecker, StatusChecker, UrlVerdict,
};

use serde::{Deserialize, Serialize};

use crate::config::RewardSettings;
use crate::error::Result;

/// Reward components on their native scales plus the weighted total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Evidence faithfulness, from the judge grade: 1.0, 0.5 or 0.0.
    pub r_f: f64,
    /// Style score normalized to [0, 1].
    pub r_s: f64,
    /// Safety score normalized to [0, 1].
    pub r_a: f64,
    /// URL validity: (valid - invalid) / total, or 0.0 with no URLs.
    pub r_h: f64,
    /// Weighted sum of the four components.
    pub total: f64,
    /// Per-URL validation detail behind `r_h`.
    pub url_verdicts: Vec<UrlVerdict>,
}

/// Combines judge output and URL verdicts into the weighted total.
pub fn compute_reward(
    judge: &JudgeResult,
    verdicts: Vec<UrlVerdict>,
    settings: &RewardSettings,
) -> RewardBreakdown {
    let r_f = judge.grade.score();
    let r_s = judge.style as f64 / 10.0;
    let r_a = judge.safety as f64 / 10.0;
    let r_h = score_url_reward(&verdicts);
    let [l_f, l_s, l_a, l_h] = settings.lambda;
    RewardBreakdown {
        r_f,
        r_s,
        r_a,
        r_h,
        total: l_f * r_f + l_s * r_s + l_a * r_a + l_h * r_h,
        url_verdicts: verdicts,
    }
}

/// End-to-end scoring of one answer: extract URLs, validate them against
/// the evidence set and prefix pool, ask the judge, then combine.
pub fn score_answer(
    judge: &dyn AnswerJudge,
    request: &JudgeRequest,
    evidence_urls: &std::collections::BTreeSet<String>,
    pool: &PrefixPool,
    checker: &dyn StatusChecker,
    settings: &RewardSettings,
) -> Result<RewardBreakdown> {
    let urls = extract_urls(&request.answer_b);
    let verdicts = validate_urls(&urls, evidence_urls, pool, checker);
    let judged = judge.judge(request)?;
    Ok(compute_reward(&judged, verdicts, settings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(valid: bool) -> UrlVerdict {
        UrlVerdict {
            url: "https://x.com".into(),
            in_evidence: valid,
            prefix_approved: false,
            http_status: None,
            valid,
        }
    }

    #[test]
    fn weighted_total_good_grade_all_urls_valid() {
        let judge = JudgeResult {
            grade: Grade::Good,
            style: 8,
            safety: 9,
            reason: String::new(),
        };
        let out = compute_reward(&judge, vec![verdict(true)], &RewardSettings::default());
        assert!((out.r_f - 1.0).abs() < 1e-12);
        assert!((out.r_s - 0.8).abs() < 1e-12);
        assert!((out.r_a - 0.9).abs() < 1e-12);
        assert!((out.r_h - 1.0).abs() < 1e-12);
        // 1*1.0 + 1*0.8 + 2*0.9 + 2*1.0
        assert!((out.total - 5.6).abs() < 1e-12);
    }

    #[test]
    fn weighted_total_soso_grade_no_urls() {
        let judge = JudgeResult {
            grade: Grade::Soso,
            style: 10,
            safety: 10,
            reason: String::new(),
        };
        let out = compute_reward(&judge, vec![], &RewardSettings::default());
        assert!((out.r_h - 0.0).abs() < 1e-12);
        // 1*0.5 + 1*1.0 + 2*1.0 + 2*0.0
        assert!((out.total - 3.5).abs() < 1e-12);
    }
}
