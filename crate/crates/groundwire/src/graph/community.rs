//! Community detection: synchronous label propagation with a seeded
//! initial labeling, plus a second hierarchy level built by contracting
//! level-0 communities and re-running propagation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::GraphSettings;
use crate::graph::KnowledgeGraph;
use crate::store::{CorpusStore, Snapshot};
use crate::text::first_sentence;
use crate::types::ChunkId;

/// Synchronous label propagation over an undirected adjacency.
///
/// Nodes start with distinct labels assigned through a seeded shuffle (so
/// symmetric graphs do not resolve ties by node order alone, yet runs are
/// reproducible). Each round every node simultaneously adopts the most
/// frequent label among its neighbors, smallest label on ties; isolated
/// nodes keep theirs. Stops at a fixpoint or after `max_rounds`. Returned
/// labels are renumbered densely by first appearance over the sorted node
/// list.
pub fn label_propagation(
    adjacency: &BTreeMap<String, BTreeSet<String>>,
    seed: u64,
    max_rounds: usize,
) -> BTreeMap<String, usize> {
    let nodes: Vec<&String> = adjacency.keys().collect();
    let index: BTreeMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut initial: Vec<usize> = (0..nodes.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    initial.shuffle(&mut rng);
    let mut labels = initial;

    for _ in 0..max_rounds {
        let mut next = labels.clone();
        for (i, node) in nodes.iter().enumerate() {
            let neighbors = &adjacency[*node];
            if neighbors.is_empty() {
                continue;
            }
            let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
            for n in neighbors {
                *freq.entry(labels[index[n.as_str()]]).or_insert(0) += 1;
            }
            // Ascending label iteration plus strict > keeps the smallest
            // label among the most frequent.
            let mut best_label = labels[i];
            let mut best_count = 0usize;
            for (label, count) in freq {
                if count > best_count {
                    best_count = count;
                    best_label = label;
                }
            }
            next[i] = best_label;
        }
        if next == labels {
            break;
        }
        labels = next;
    }

    let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        let next_id = dense.len();
        let id = *dense.entry(labels[i]).or_insert(next_id);
        out.insert((*node).clone(), id);
    }
    out
}

/// One hierarchy level of community assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityLevel {
    /// entity -> community id, e.g. "l0.c3".
    pub assignments: BTreeMap<String, String>,
    /// community id -> member entities.
    pub members: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Communities {
    pub levels: Vec<CommunityLevel>,
    /// community id -> short text summary.
    pub summaries: BTreeMap<String, String>,
}

impl Communities {
    /// Level-0 community id of an entity, if assigned.
    pub fn base_community(&self, entity: &str) -> Option<&str> {
        self.levels.first()?.assignments.get(entity).map(String::as_str)
    }
}

fn level_from_labels(level: usize, labels: &BTreeMap<String, usize>) -> CommunityLevel {
    let mut assignments = BTreeMap::new();
    let mut members: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (node, label) in labels {
        let id = format!("l{level}.c{label}");
        assignments.insert(node.clone(), id.clone());
        members.entry(id).or_default().insert(node.clone());
    }
    CommunityLevel { assignments, members }
}

/// Detects the community hierarchy and writes a summary per community.
///
/// Summaries take the hottest `summary_chunks` member chunks (snapshot
/// order is heat order), join their first sentences, and cap the result
/// at `summary_chars` characters.
pub fn detect_communities(
    graph: &KnowledgeGraph,
    store: &CorpusStore,
    snapshot: &Snapshot,
    settings: &GraphSettings,
) -> Communities {
    let mut levels: Vec<CommunityLevel> = Vec::new();

    let base_labels = label_propagation(&graph.adjacency(), settings.seed, settings.max_rounds);
    levels.push(level_from_labels(0, &base_labels));

    for level in 1..settings.levels {
        let prev = &levels[level - 1];
        // Contract: one super-node per previous community, connected when
        // any relation crosses the two communities.
        let mut super_adj: BTreeMap<String, BTreeSet<String>> = prev
            .members
            .keys()
            .map(|id| (id.clone(), BTreeSet::new()))
            .collect();
        for (a, b, _) in &graph.relations {
            let ca = &prev.assignments[a];
            let cb = &prev.assignments[b];
            if ca != cb {
                super_adj.get_mut(ca).expect("community exists").insert(cb.clone());
                super_adj.get_mut(cb).expect("community exists").insert(ca.clone());
            }
        }
        let super_labels = label_propagation(&super_adj, settings.seed, settings.max_rounds);
        // Entities inherit their super-node's community.
        let entity_labels: BTreeMap<String, usize> = prev
            .assignments
            .iter()
            .map(|(entity, community)| (entity.clone(), super_labels[community]))
            .collect();
        levels.push(level_from_labels(level, &entity_labels));
    }

    let heat_rank: BTreeMap<&ChunkId, usize> = snapshot
        .chunk_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();

    let mut summaries = BTreeMap::new();
    for level in &levels {
        for (community, members) in &level.members {
            let mut chunks: BTreeSet<&ChunkId> = BTreeSet::new();
            for entity in members {
                if let Some(ids) = graph.entity_chunks.get(entity) {
                    chunks.extend(ids.iter());
                }
            }
            let mut ordered: Vec<&ChunkId> = chunks.into_iter().collect();
            ordered.sort_by_key(|id| (heat_rank.get(id).copied().unwrap_or(usize::MAX), (*id).clone()));
            let sentences: Vec<String> = ordered
                .iter()
                .take(settings.summary_chunks)
                .filter_map(|id| store.get(id))
                .map(|c| first_sentence(&c.text, settings.summary_chars))
                .collect();
            let joined = sentences.join(" ");
            let summary: String = joined.chars().take(settings.summary_chars).collect();
            summaries.insert(community.clone(), summary);
        }
    }

    Communities { levels, summaries }
}
