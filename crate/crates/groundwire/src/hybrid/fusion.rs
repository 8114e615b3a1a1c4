//! Reciprocal rank fusion. Scores from different channels are not
//! commensurable, so fusion works on ranks alone:
//! score(d) = sum over lists containing d of 1 / (k + rank), rank 1-based.

use std::collections::BTreeMap;

use crate::types::{Channel, ScoredChunk};

/// Fuses ranked lists. Each input list must contain distinct chunk ids
/// (every producer in this crate already guarantees that). The fused
/// item keeps the channel tag of the list where it ranked best; on equal
/// ranks the earlier list wins. Output is ordered score desc, id asc.
pub fn rrf_fuse(lists: &[&[ScoredChunk]], k: f64) -> Vec<ScoredChunk> {
    struct Acc {
        score: f64,
        best_rank: usize,
        channel: Channel,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for list in lists {
        for (rank0, item) in list.iter().enumerate() {
            let rank = rank0 + 1;
            let contribution = 1.0 / (k + rank as f64);
            match acc.get_mut(item.chunk_id.as_str()) {
                Some(a) => {
                    a.score += contribution;
                    if rank < a.best_rank {
                        a.best_rank = rank;
                        a.channel = item.channel;
                    }
                }
                None => {
                    acc.insert(
                        item.chunk_id.as_str(),
                        Acc {
                            score: contribution,
                            best_rank: rank,
                            channel: item.channel,
                        },
                    );
                }
            }
        }
    }
    let mut out: Vec<ScoredChunk> = acc
        .into_iter()
        .map(|(id, a)| ScoredChunk::new(id, a.score, a.channel))
        .collect();
    crate::types::sort_ranked(&mut out);
    out
}
