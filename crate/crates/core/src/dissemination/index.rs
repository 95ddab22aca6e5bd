use super::{NodeId, Position};
use crate::content_embed::ContentId;
use crate::road_net::SegmentId;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub provider: NodeId,
    pub position: Position,
    pub expected_path: Vec<SegmentId>,
    pub report_tick: u64,
}

/// Content location table kept by a stationary index vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataIndex {
    pub host: NodeId,
    pub position: Position,
    table: BTreeMap<ContentId, BTreeMap<NodeId, IndexEntry>>,
    by_provider: BTreeMap<NodeId, (Vec<ContentId>, u64)>,
}

impl MetaDataIndex {
    pub fn new(host: NodeId, position: Position) -> Self {
        Self {
            host,
            position,
            table: BTreeMap::new(),
            by_provider: BTreeMap::new(),
        }
    }

    /// Replaces everything previously reported by `provider`.
    pub fn report(
        &mut self,
        provider: NodeId,
        items: &[ContentId],
        position: Position,
        expected_path: &[SegmentId],
        tick: u64,
    ) {
        self.remove_provider(provider);
        for &c in items {
            self.table.entry(c).or_default().insert(
                provider,
                IndexEntry {
                    provider,
                    position,
                    expected_path: expected_path.to_vec(),
                    report_tick: tick,
                },
            );
        }
        self.by_provider.insert(provider, (items.to_vec(), tick));
    }

    fn remove_provider(&mut self, provider: NodeId) {
        if let Some((items, _)) = self.by_provider.remove(&provider) {
            for c in items {
                if let Some(m) = self.table.get_mut(&c) {
                    m.remove(&provider);
                    if m.is_empty() {
                        self.table.remove(&c);
                    }
                }
            }
        }
    }

    /// Drops providers whose last report is older than `horizon` ticks.
    pub fn purge(&mut self, tick: u64, horizon: u64) -> usize {
        let stale: Vec<NodeId> = self
            .by_provider
            .keys()
            .copied()
            .filter(|p| self.by_provider[p].1 + horizon < tick)
            .collect();
        for p in &stale {
            self.remove_provider(*p);
        }
        stale.len()
    }

    pub fn lookup(&self, c: ContentId) -> Vec<&IndexEntry> {
        self.table.get(&c).map(|m| m.values().collect()).unwrap_or_default()
    }

    pub fn providers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.by_provider.keys().copied()
    }
}
