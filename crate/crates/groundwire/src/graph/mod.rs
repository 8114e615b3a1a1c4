//! Knowledge graph over the hot subset: entities as nodes, co-occurrence
//! relations as edges, with chunk attachments kept for retrieval.
//!
//! Incremental maintenance re-extracts only chunks that entered, left, or
//! changed since the last build; aggregation (entities, relations) is then
//! recomputed from the cached per-chunk extractions, so an incremental
//! update is structurally identical to a full rebuild over the same
//! snapshot.

pub mod community;
pub mod extract;
pub mod retrieve;

pub use community::{detect_communities, label_propagation, Communities, CommunityLevel};
pub use extract::{entity_in_tokens, EntityExtractor, GazetteerExtractor};
pub use retrieve::{graph_retrieve, seed_entities, GraphChannel};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{CorpusStore, Snapshot};
use crate::types::{ChunkId, Timestamp};

pub const CO_OCCURS: &str = "co_occurs";

/// Undirected labeled edge, endpoints ordered ascending.
pub type Relation = (String, String, String);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub entities: BTreeSet<String>,
    pub relations: BTreeSet<Relation>,
    /// entity -> chunks that mention it.
    pub entity_chunks: BTreeMap<String, BTreeSet<ChunkId>>,
    /// chunk -> entities mentioned, cached extraction result.
    pub chunk_entities: BTreeMap<ChunkId, BTreeSet<String>>,
    /// chunk -> updated_at seen at extraction time.
    pub chunk_versions: BTreeMap<ChunkId, Timestamp>,
}

impl KnowledgeGraph {
    pub fn neighbors(&self, entity: &str) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (a, b, _) in &self.relations {
            if a == entity {
                out.insert(b.as_str());
            } else if b == entity {
                out.insert(a.as_str());
            }
        }
        out
    }

    /// Adjacency over all entities, including isolated ones.
    pub fn adjacency(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut adj: BTreeMap<String, BTreeSet<String>> = self
            .entities
            .iter()
            .map(|e| (e.clone(), BTreeSet::new()))
            .collect();
        for (a, b, _) in &self.relations {
            adj.get_mut(a).expect("relation endpoint exists").insert(b.clone());
            adj.get_mut(b).expect("relation endpoint exists").insert(a.clone());
        }
        adj
    }

    /// Canonical serialized form; equal graphs serialize identically.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    /// Rebuilds entities, relations and attachments from the per-chunk
    /// extraction cache.
    fn reaggregate(&mut self) {
        self.entities.clear();
        self.relations.clear();
        self.entity_chunks.clear();
        for (chunk, entities) in &self.chunk_entities {
            for e in entities {
                self.entities.insert(e.clone());
                self.entity_chunks.entry(e.clone()).or_default().insert(chunk.clone());
            }
            let list: Vec<&String> = entities.iter().collect();
            for i in 0..list.len() {
                for j in i + 1..list.len() {
                    self.relations.insert((
                        list[i].clone(),
                        list[j].clone(),
                        CO_OCCURS.to_string(),
                    ));
                }
            }
        }
    }
}

/// Outcome of a build: the graph plus chunks that contributed nothing.
#[derive(Debug)]
pub struct GraphBuild {
    pub graph: KnowledgeGraph,
    /// Chunks with zero extracted entities (kept out of the graph).
    pub empty_chunks: Vec<ChunkId>,
}

/// What an incremental update touched.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct GraphDelta {
    pub added: Vec<ChunkId>,
    pub removed: Vec<ChunkId>,
    pub refreshed: Vec<ChunkId>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.refreshed.is_empty()
    }
}

/// Builds the graph over every chunk in the snapshot. A snapshot id the
/// store cannot resolve is a hard error: the snapshot and store are
/// supposed to move together.
pub fn build_graph(
    snapshot: &Snapshot,
    store: &CorpusStore,
    extractor: &dyn EntityExtractor,
) -> Result<GraphBuild> {
    let mut graph = KnowledgeGraph::default();
    let mut empty_chunks = Vec::new();
    for id in &snapshot.chunk_ids {
        let chunk = store.get(id).ok_or_else(|| Error::UnknownChunk(id.clone()))?;
        let entities: BTreeSet<String> = extractor.extract(&chunk.text)?.into_iter().collect();
        if entities.is_empty() {
            empty_chunks.push(id.clone());
        }
        graph.chunk_entities.insert(id.clone(), entities);
        graph.chunk_versions.insert(id.clone(), chunk.updated_at);
    }
    graph.reaggregate();
    Ok(GraphBuild { graph, empty_chunks })
}

/// Brings `graph` in line with a new snapshot, re-extracting only chunks
/// that are new or whose `updated_at` moved. Result is identical to a
/// full rebuild over the same snapshot and store.
pub fn incremental_update(
    graph: &mut KnowledgeGraph,
    snapshot: &Snapshot,
    store: &CorpusStore,
    extractor: &dyn EntityExtractor,
) -> Result<GraphDelta> {
    let wanted: BTreeSet<&ChunkId> = snapshot.chunk_ids.iter().collect();
    let present: BTreeSet<ChunkId> = graph.chunk_entities.keys().cloned().collect();

    let mut delta = GraphDelta::default();

    for id in &present {
        if !wanted.contains(id) {
            graph.chunk_entities.remove(id);
            graph.chunk_versions.remove(id);
            delta.removed.push(id.clone());
        }
    }

    for id in &snapshot.chunk_ids {
        let chunk = store.get(id).ok_or_else(|| Error::UnknownChunk(id.clone()))?;
        let known_version = graph.chunk_versions.get(id);
        let fresh = known_version == Some(&chunk.updated_at);
        if fresh {
            continue;
        }
        let entities: BTreeSet<String> = extractor.extract(&chunk.text)?.into_iter().collect();
        if present.contains(id) {
            delta.refreshed.push(id.clone());
        } else {
            delta.added.push(id.clone());
        }
        graph.chunk_entities.insert(id.clone(), entities);
        graph.chunk_versions.insert(id.clone(), chunk.updated_at);
    }

    if !delta.is_empty() {
        graph.reaggregate();
    }
    Ok(delta)
}
