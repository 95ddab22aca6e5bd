//! Content-similarity graph, skip-gram style embeddings and the intersection
//! recommendation step.

mod loggen;
mod recommend;
mod train;

pub use loggen::{generate_log, LogSpec, SyntheticLog};
pub use recommend::{
    cosine_similarity, intersection_recommendation, mean_similarity, NearbyCatalog,
    Recommendation, SimilarityThreshold, Vehicle2Vec,
};
pub use train::{
    neighborhood, pair_gradient, pair_loss, softmax_prob, softmax_row, train_embeddings,
    EmbeddingModel, EmbeddingParams,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContentId(pub u32);

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("consumption log is empty")]
    EmptyLog,
    #[error("content {0} is not in the graph")]
    UnknownContent(ContentId),
    #[error("invalid embedding parameters: {0}")]
    Config(String),
    #[error("similarity undefined for a zero vector")]
    ZeroVector,
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("similarity threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentItem {
    pub id: ContentId,
    pub size_bytes: u64,
    pub popularity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConsumptionRecord {
    pub user_id: u32,
    pub content_id: ContentId,
    pub timestamp: u64,
}

/// Request count per item, ordered by content id.
pub fn popularity(log: &[ConsumptionRecord]) -> BTreeMap<ContentId, u64> {
    let mut out = BTreeMap::new();
    for r in log {
        *out.entry(r.content_id).or_insert(0) += 1;
    }
    out
}

/// Items consumed by each user, in log order with repeats removed.
pub fn histories(log: &[ConsumptionRecord]) -> BTreeMap<u32, Vec<ContentId>> {
    let mut out: BTreeMap<u32, Vec<ContentId>> = BTreeMap::new();
    let mut seen: HashMap<u32, BTreeSet<ContentId>> = HashMap::new();
    for r in log {
        if seen.entry(r.user_id).or_default().insert(r.content_id) {
            out.entry(r.user_id).or_default().push(r.content_id);
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct LogRow {
    user_id: u32,
    content_id: u32,
    timestamp: u64,
}

pub fn write_log_csv<W: std::io::Write>(log: &[ConsumptionRecord], out: W) -> Result<(), EmbedError> {
    let mut w = csv::Writer::from_writer(out);
    for r in log {
        w.serialize(LogRow {
            user_id: r.user_id,
            content_id: r.content_id.0,
            timestamp: r.timestamp,
        })
        .map_err(|e| EmbedError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| EmbedError::Io(e.to_string()))
}

pub fn read_log_csv<R: std::io::Read>(input: R) -> Result<Vec<ConsumptionRecord>, EmbedError> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rd.deserialize::<LogRow>().enumerate() {
        let row = row.map_err(|e| EmbedError::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(ConsumptionRecord {
            user_id: row.user_id,
            content_id: ContentId(row.content_id),
            timestamp: row.timestamp,
        });
    }
    Ok(out)
}

/// Undirected similarity graph over content items.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentGraph {
    nodes: Vec<ContentId>,
    index: HashMap<ContentId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl ContentGraph {
    /// Graph over `nodes` with `edges` given as (a, b, weight). Each pair is
    /// stored in both directions.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = ContentId>,
        edges: impl IntoIterator<Item = (ContentId, ContentId, f64)>,
    ) -> Result<Self, EmbedError> {
        let mut nodes: Vec<ContentId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<ContentId, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b, w) in edges {
            let ia = *index.get(&a).ok_or(EmbedError::UnknownContent(a))?;
            let ib = *index.get(&b).ok_or(EmbedError::UnknownContent(b))?;
            if ia == ib {
                return Err(EmbedError::Config(format!("self-loop on content {a}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(EmbedError::Config(format!("edge weight {w} outside (0, 1]")));
            }
            adjacency[ia].push((ib, w));
            adjacency[ib].push((ia, w));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|x| x.0);
            adj.dedup_by_key(|x| x.0);
        }
        Ok(Self {
            nodes,
            index,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[ContentId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn index_of(&self, c: ContentId) -> Result<usize, EmbedError> {
        self.index.get(&c).copied().ok_or(EmbedError::UnknownContent(c))
    }

    pub fn weight(&self, a: ContentId, b: ContentId) -> Option<f64> {
        let ia = self.index_of(a).ok()?;
        let ib = self.index_of(b).ok()?;
        self.adjacency[ia].iter().find(|e| e.0 == ib).map(|e| e.1)
    }

    pub fn neighbors(&self, c: ContentId) -> Result<Vec<(ContentId, f64)>, EmbedError> {
        let i = self.index_of(c)?;
        Ok(self.adjacency[i].iter().map(|&(j, w)| (self.nodes[j], w)).collect())
    }

    pub(crate) fn adjacency(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }
}

/// Co-consumption graph: items `a` and `b` are linked when at least
/// `min_cooccurrence` users consumed both, weighted by the Jaccard similarity
/// of their consumer sets.
pub fn build_content_graph(
    log: &[ConsumptionRecord],
    min_cooccurrence: usize,
) -> Result<ContentGraph, EmbedError> {
    if log.is_empty() {
        return Err(EmbedError::EmptyLog);
    }
    let min_co = min_cooccurrence.max(1);
    let mut consumers: BTreeMap<ContentId, BTreeSet<u32>> = BTreeMap::new();
    for r in log {
        consumers.entry(r.content_id).or_default().insert(r.user_id);
    }
    let hist = histories(log);
    let mut shared: BTreeMap<(ContentId, ContentId), usize> = BTreeMap::new();
    for items in hist.values() {
        let mut items = items.clone();
        items.sort_unstable();
        for (i, &a) in items.iter().enumerate() {
            for &b in &items[i + 1..] {
                *shared.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let edges = shared.into_iter().filter(|&(_, n)| n >= min_co).map(|((a, b), n)| {
        let union = consumers[&a].len() + consumers[&b].len() - n;
        (a, b, n as f64 / union as f64)
    });
    ContentGraph::from_edges(consumers.keys().copied(), edges.collect::<Vec<_>>())
}
