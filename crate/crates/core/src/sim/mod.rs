//! Deterministic fixed-step simulator: scenario loading, the world step,
//! event logging, run metrics and parameter sweeps.

mod events;
mod metrics;
mod scenario;
mod sweep;
mod world;

pub use events::{write_events, Event, EventKind, EVENT_HEADER};
pub use metrics::MetricsReport;
pub use scenario::{
    Accident, ContentSource, NetworkSource, ParseFailure, Policy, RsuPlacement, Scenario, VehicleCounts,
};
pub use sweep::{apply_axis, metric_table, run_sweep, write_sweep_csv, SweepAxis, SweepRow, SweepRun, SweepSpec};
pub use world::{run_scenario, run_with, RunOutput, World};

use crate::content_embed::{
    build_content_graph, generate_log, histories, popularity, read_log_csv, train_embeddings, ConsumptionRecord,
    ContentId, EmbeddingModel, EmbeddingParams,
};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Setup(String),
    #[error("io: {0}")]
    Io(String),
}

/// Consumption log, popularity and trained embeddings shared by every run
/// that uses the same content configuration.
#[derive(Debug, Clone)]
pub struct ContentEnv {
    pub log: Vec<ConsumptionRecord>,
    /// All items, ascending.
    pub items: Vec<ContentId>,
    pub popularity: BTreeMap<ContentId, u64>,
    /// Items by descending popularity, ties by id.
    pub by_popularity: Vec<ContentId>,
    pub histories: BTreeMap<u32, Vec<ContentId>>,
    pub users: Vec<u32>,
    pub model: EmbeddingModel,
}

impl ContentEnv {
    pub fn build(source: &ContentSource, params: &EmbeddingParams) -> Result<Self, SimError> {
        let log = match source {
            ContentSource::Synthetic(spec) => generate_log(spec).map_err(|e| SimError::Setup(e.to_string()))?.records,
            ContentSource::Log { path } => {
                let f = std::fs::File::open(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
                read_log_csv(f).map_err(|e| SimError::Setup(format!("{}: {e}", path.display())))?
            }
        };
        Self::from_log(log, params)
    }

    pub fn from_log(log: Vec<ConsumptionRecord>, params: &EmbeddingParams) -> Result<Self, SimError> {
        let graph = build_content_graph(&log, 1).map_err(|e| SimError::Setup(e.to_string()))?;
        let model = train_embeddings(&graph, params).map_err(|e| SimError::Setup(e.to_string()))?;
        let popularity = popularity(&log);
        let items: Vec<ContentId> = popularity.keys().copied().collect();
        let mut by_popularity = items.clone();
        by_popularity.sort_by(|a, b| popularity[b].cmp(&popularity[a]).then(a.cmp(b)));
        let histories = histories(&log);
        let users = histories.keys().copied().collect();
        Ok(Self {
            log,
            items,
            popularity,
            by_popularity,
            histories,
            users,
            model,
        })
    }
}
