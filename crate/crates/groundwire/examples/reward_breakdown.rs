//! Multi-dimensional reward scoring: a judge grades faithfulness, style,
//! and safety while the URL leg is computed locally and cannot be talked
//! around. Shows the weighted total, per-URL verdicts, and the fail-closed
//! rule for approved-prefix links whose probe dies.
//!
//! Run: cargo run -p groundwire --example reward_breakdown

use std::collections::{BTreeMap, BTreeSet};

use groundwire::config::RewardSettings;
use groundwire::reward::{
    score_answer, Grade, JudgeRequest, JudgeResult, PrefixPool, RuleJudge, StaticStatusChecker,
};

fn request(answer_b: &str) -> JudgeRequest {
    JudgeRequest {
        query: "how do I rotate the deploy key?".into(),
        history: String::new(),
        materials: "Rotate the deploy key monthly. Steps: https://kb.example/rotate".into(),
        answer_a: "Rotate it monthly; steps at https://kb.example/rotate".into(),
        answer_b: answer_b.into(),
    }
}

fn main() -> groundwire::error::Result<()> {
    let grounded = "Rotate the key monthly, see https://kb.example/rotate";
    let fabricated = "Just follow https://kb.example/rotate and https://blog.random.io/keys";
    let off_style = "ROTATE IT!!! monthly. https://kb.example/rotate";
    let approved_dead = "The runbook moved to https://docs.corp.example/keys/rotation";

    // Offline judge: deterministic verdicts keyed by answer text.
    let mut rules = BTreeMap::new();
    rules.insert(grounded.to_string(), JudgeResult { grade: Grade::Good, style: 9, safety: 10, reason: "matches material".into() });
    rules.insert(fabricated.to_string(), JudgeResult { grade: Grade::Soso, style: 7, safety: 10, reason: "extra unsourced link".into() });
    rules.insert(off_style.to_string(), JudgeResult { grade: Grade::Good, style: 2, safety: 10, reason: "shouting".into() });
    rules.insert(approved_dead.to_string(), JudgeResult { grade: Grade::Soso, style: 8, safety: 10, reason: "plausible pointer".into() });
    let judge = RuleJudge::new(rules, JudgeResult { grade: Grade::Bad, style: 0, safety: 0, reason: "unknown".into() });

    let evidence_urls: BTreeSet<String> = ["https://kb.example/rotate".to_string()].into();
    let pool = PrefixPool::new(vec!["https://docs.corp.example/".to_string()]);
    // Probe stub: the approved docs URL exists but answers 404.
    let checker = StaticStatusChecker::new(
        [("https://docs.corp.example/keys/rotation".to_string(), 404)],
        None,
    );
    let settings = RewardSettings::default();
    println!("weights lambda = {:?} over [r_f, r_s, r_a, r_h]\n", settings.lambda);

    for (label, answer) in [
        ("grounded", grounded),
        ("fabricated link", fabricated),
        ("off-style", off_style),
        ("approved prefix, dead URL", approved_dead),
    ] {
        let out = score_answer(&judge, &request(answer), &evidence_urls, &pool, &checker, &settings)?;
        println!("{label}:");
        println!("  answer: {answer}");
        println!(
            "  r_f {:.2}  r_s {:.2}  r_a {:.2}  r_h {:+.2}  total {:+.2}",
            out.r_f, out.r_s, out.r_a, out.r_h, out.total
        );
        for v in &out.url_verdicts {
            println!(
                "  url {:<40} in_evidence={} prefix_approved={} status={:?} -> {}",
                v.url,
                v.in_evidence,
                v.prefix_approved,
                v.http_status,
                if v.valid { "valid" } else { "INVALID" }
            );
        }
        println!();
    }

    // Same dead-link answer, but now the probe itself fails (None).
    // Absence of proof is treated as invalid: the checker fails closed.
    let no_probe = StaticStatusChecker::uniform(None);
    let out = score_answer(&judge, &request(approved_dead), &evidence_urls, &pool, &no_probe, &settings)?;
    let v = &out.url_verdicts[0];
    println!("probe unreachable: status={:?} -> {}", v.http_status, if v.valid { "valid" } else { "INVALID (fail closed)" });
    Ok(())
}
