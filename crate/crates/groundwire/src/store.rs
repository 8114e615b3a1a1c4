//! Corpus store: chunks, citation heat, and hot-subset snapshots.
//!
//! Heat is counted in tumbling windows. Each citation stamps its chunk's
//! counter with the window the citation falls in; the window origin moves
//! forward in whole multiples of `window_secs` as newer citations arrive.
//! Counters stamped with an older window read as zero, so expiry costs
//! nothing per tick.
//!
//! A rolling update ranks chunks by (heat desc, updated_at desc, id asc),
//! promotes the top `ceil(percent * N / 100)` into a new snapshot, swaps it
//! in atomically (readers holding the old `Arc` keep a consistent view),
//! and starts a fresh window.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_WINDOW_SECS;
use crate::error::{Error, Result};
use crate::reward::url::extract_urls;
use crate::types::{ChunkId, Timestamp};

const CORPUS_FILE: &str = "corpus.jsonl";
const CITATIONS_FILE: &str = "citations.jsonl";

/// A unit of retrievable knowledge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: ChunkId,
    pub text: String,
    pub source_doc: String,
    pub updated_at: Timestamp,
    /// Canonical URLs found in `text`; derived at ingest, never stored.
    #[serde(skip)]
    pub urls: BTreeSet<String>,
}

/// Wire form of a chunk in corpus.jsonl.
#[derive(Debug, Serialize, Deserialize)]
struct ChunkRecord {
    id: ChunkId,
    text: String,
    source_doc: String,
    updated_at: Timestamp,
}

/// Wire form of a citation event in citations.jsonl.
#[derive(Debug, Serialize, Deserialize)]
struct CitationRecord {
    chunk_id: ChunkId,
    ts: Timestamp,
}

/// Immutable hot-subset selection. Ids are ordered hottest first under the
/// same tie order used for selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Snapshot {
    pub created_at: Timestamp,
    pub percent: u32,
    pub chunk_ids: Vec<ChunkId>,
}

impl Snapshot {
    pub fn contains(&self, id: &str) -> bool {
        self.chunk_ids.iter().any(|c| c == id)
    }

    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeatCell {
    count: u64,
    window_start: Timestamp,
}

/// One row of a heat report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatEntry {
    pub chunk_id: ChunkId,
    pub heat: u64,
    pub updated_at: Timestamp,
}

#[derive(Debug)]
pub struct CorpusStore {
    chunks: BTreeMap<ChunkId, Chunk>,
    heats: BTreeMap<ChunkId, HeatCell>,
    window_secs: i64,
    /// Origin of the currently counting window; `None` until the first
    /// citation or rolling update.
    anchor: Option<Timestamp>,
    snapshot: Arc<Snapshot>,
    dir: Option<PathBuf>,
}

impl CorpusStore {
    /// Volatile store with the default 7-day window.
    pub fn in_memory() -> Self {
        Self::with_window(DEFAULT_WINDOW_SECS)
    }

    pub fn with_window(window_secs: i64) -> Self {
        assert!(window_secs > 0, "window must be positive");
        Self {
            chunks: BTreeMap::new(),
            heats: BTreeMap::new(),
            window_secs,
            anchor: None,
            snapshot: Arc::new(Snapshot::default()),
            dir: None,
        }
    }

    /// Opens (or creates) a persistent store. Chunk and citation history
    /// replay from the append-only logs in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open_with_window(dir, DEFAULT_WINDOW_SECS)
    }

    pub fn open_with_window(dir: impl AsRef<Path>, window_secs: i64) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut store = Self::with_window(window_secs);

        let corpus_path = dir.join(CORPUS_FILE);
        if corpus_path.exists() {
            for (idx, line) in std::fs::read_to_string(&corpus_path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: ChunkRecord =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                        file: CORPUS_FILE.to_string(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                store.apply_chunk(rec);
            }
        }

        let citations_path = dir.join(CITATIONS_FILE);
        if citations_path.exists() {
            for (idx, line) in std::fs::read_to_string(&citations_path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CitationRecord =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                        file: CITATIONS_FILE.to_string(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                store.apply_citation(&rec.chunk_id, rec.ts)?;
            }
        }

        store.dir = Some(dir);
        Ok(store)
    }

    // --- chunks ---------------------------------------------------------

    /// Inserts or replaces a chunk. Replacement keeps the chunk's heat:
    /// edits to text do not reset popularity.
    pub fn ingest(
        &mut self,
        id: impl Into<ChunkId>,
        text: impl Into<String>,
        source_doc: impl Into<String>,
        updated_at: Timestamp,
    ) -> Result<()> {
        let rec = ChunkRecord {
            id: id.into(),
            text: text.into(),
            source_doc: source_doc.into(),
            updated_at,
        };
        self.append(CORPUS_FILE, &rec)?;
        self.apply_chunk(rec);
        Ok(())
    }

    fn apply_chunk(&mut self, rec: ChunkRecord) {
        let urls = extract_urls(&rec.text).into_iter().collect();
        self.chunks.insert(
            rec.id.clone(),
            Chunk {
                id: rec.id,
                text: rec.text,
                source_doc: rec.source_doc,
                updated_at: rec.updated_at,
                urls,
            },
        );
    }

    pub fn get(&self, id: &str) -> Option<&Chunk> {
        self.chunks.get(id)
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.chunks.values()
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Union of canonical URLs across the given chunks. Unknown ids are
    /// skipped.
    pub fn evidence_urls<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        ids.into_iter()
            .filter_map(|id| self.chunks.get(id))
            .flat_map(|c| c.urls.iter().cloned())
            .collect()
    }

    // --- heat -----------------------------------------------------------

    /// Counts one recall of `id` at time `at`.
    pub fn record_citation(&mut self, id: &str, at: Timestamp) -> Result<u64> {
        if !self.chunks.contains_key(id) {
            return Err(Error::UnknownChunk(id.to_string()));
        }
        self.append(
            CITATIONS_FILE,
            &CitationRecord {
                chunk_id: id.to_string(),
                ts: at,
            },
        )?;
        self.apply_citation(id, at)
    }

    fn apply_citation(&mut self, id: &str, at: Timestamp) -> Result<u64> {
        if !self.chunks.contains_key(id) {
            return Err(Error::UnknownChunk(id.to_string()));
        }
        let anchor = match self.anchor {
            None => at,
            // Citations older than the window origin clamp into the
            // current window rather than resurrecting a past one.
            Some(a) if at < a + self.window_secs => a,
            Some(a) => a + ((at - a) / self.window_secs) * self.window_secs,
        };
        self.anchor = Some(anchor);
        let cell = self.heats.entry(id.to_string()).or_insert(HeatCell {
            count: 0,
            window_start: anchor,
        });
        if cell.window_start != anchor {
            cell.count = 0;
            cell.window_start = anchor;
        }
        cell.count += 1;
        Ok(cell.count)
    }

    /// Heat of `id` in the currently counting window.
    pub fn heat(&self, id: &str) -> u64 {
        match (self.anchor, self.heats.get(id)) {
            (Some(a), Some(cell)) if cell.window_start == a => cell.count,
            _ => 0,
        }
    }

    /// All chunks with their current heat, hottest first (heat desc,
    /// updated_at desc, id asc).
    pub fn heat_report(&self) -> Vec<HeatEntry> {
        let mut rows: Vec<HeatEntry> = self
            .chunks
            .values()
            .map(|c| HeatEntry {
                chunk_id: c.id.clone(),
                heat: self.heat(&c.id),
                updated_at: c.updated_at,
            })
            .collect();
        rows.sort_by(|x, y| {
            y.heat
                .cmp(&x.heat)
                .then(y.updated_at.cmp(&x.updated_at))
                .then(x.chunk_id.cmp(&y.chunk_id))
        });
        rows
    }

    // --- snapshots --------------------------------------------------------

    /// Selects the hot subset as of `now` and swaps it in. Counters whose
    /// window has expired by `now` read as zero; afterwards a fresh window
    /// starts at `now`.
    pub fn rolling_update(&mut self, percent: u32, now: Timestamp) -> Arc<Snapshot> {
        let live_anchor = match self.anchor {
            Some(a) if now < a + self.window_secs => Some(a),
            _ => None,
        };
        let heat_of = |id: &str| -> u64 {
            match (live_anchor, self.heats.get(id)) {
                (Some(a), Some(cell)) if cell.window_start == a => cell.count,
                _ => 0,
            }
        };

        let mut rows: Vec<(&ChunkId, u64, Timestamp)> = self
            .chunks
            .values()
            .map(|c| (&c.id, heat_of(&c.id), c.updated_at))
            .collect();
        rows.sort_by(|x, y| y.1.cmp(&x.1).then(y.2.cmp(&x.2)).then(x.0.cmp(y.0)));

        let k = select_count(self.chunks.len(), percent);
        let snapshot = Arc::new(Snapshot {
            created_at: now,
            percent,
            chunk_ids: rows.iter().take(k).map(|(id, _, _)| (*id).clone()).collect(),
        });

        if self.anchor != Some(now) {
            self.heats.clear();
        }
        self.anchor = Some(now);
        self.snapshot = Arc::clone(&snapshot);
        snapshot
    }

    /// Current snapshot. Cheap to clone; never mutated in place.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot)
    }

    /// Installs a previously saved snapshot (for example from disk).
    pub fn restore_snapshot(&mut self, snapshot: Snapshot) {
        self.snapshot = Arc::new(snapshot);
    }

    // --- persistence ------------------------------------------------------

    fn append<T: Serialize>(&self, file: &str, record: &T) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(file))?;
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}

/// Hot-subset size: ceil(percent * total / 100), percent clamped to 100.
pub fn select_count(total: usize, percent: u32) -> usize {
    let percent = percent.min(100) as usize;
    (percent * total).div_ceil(100)
}
