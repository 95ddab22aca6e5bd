//! Information-centric content plane: interests, content index vehicles,
//! provider caches, radio connectivity, byte-level transfers and the RSU
//! fallback.

mod cache;
mod forward;
mod index;
mod radio;

pub use cache::{CacheError, ProviderCache};
pub use forward::{forward_interest, ForwardContext, Forwarding};
pub use index::{IndexEntry, MetaDataIndex};
pub use radio::{distance_cm, Position, RadioGraph};

use crate::content_embed::ContentId;
use crate::road_net::SegmentId;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A radio node: a vehicle or a roadside unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Vehicle(u32),
    Rsu(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Vehicle(v) => write!(f, "{v}"),
            NodeId::Rsu(r) => write!(f, "r{r}"),
        }
    }
}

impl std::str::FromStr for NodeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix('r') {
            Some(r) => r.parse().map(NodeId::Rsu).map_err(|_| format!("invalid RSU id `{s}`")),
            None => s.parse().map(NodeId::Vehicle).map_err(|_| format!("invalid vehicle id `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisseminationParams {
    pub radio_range_m: f64,
    pub v2v_rate_bps: u64,
    pub rsu_rate_bps: u64,
    /// Ticks an RSU needs to fetch an item from the backhaul.
    pub rsu_fetch_ticks: u64,
    pub ttl_hops: u32,
    pub retry_interval_s: f64,
    pub max_retries: u32,
    pub report_period_ticks: u64,
    /// Index entries older than this many report periods are purged.
    pub stale_periods: u64,
    pub cache_capacity_bytes: u64,
    pub item_size_min_bytes: u64,
    pub item_size_max_bytes: u64,
    /// Fill provider caches with popular items before the run.
    pub warm_caches: bool,
    /// Same for the no-reroute reference policy, which has no caching layer
    /// of its own.
    pub baseline_warm_caches: bool,
    /// Popular items also copied at intersection stops.
    pub top_popular: usize,
    /// Broadcast interests through the whole connected neighborhood instead
    /// of directed forwarding to index vehicles.
    pub flood: bool,
    pub metadata_vehicles: u32,
}

impl Default for DisseminationParams {
    fn default() -> Self {
        Self {
            radio_range_m: 450.0,
            v2v_rate_bps: 2_000_000,
            rsu_rate_bps: 10_000_000,
            rsu_fetch_ticks: 3,
            ttl_hops: 15,
            retry_interval_s: 30.0,
            max_retries: 3,
            report_period_ticks: 10,
            stale_periods: 3,
            cache_capacity_bytes: 50_000_000,
            item_size_min_bytes: 1_000_000,
            item_size_max_bytes: 8_000_000,
            warm_caches: true,
            baseline_warm_caches: false,
            top_popular: 5,
            flood: false,
            metadata_vehicles: 4,
        }
    }
}

impl DisseminationParams {
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if !(self.radio_range_m.is_finite() && self.radio_range_m > 0.0) {
            e.push("dissemination.radio_range_m must be > 0".into());
        }
        if self.v2v_rate_bps == 0 || self.rsu_rate_bps == 0 {
            e.push("dissemination link rates must be > 0".into());
        }
        if self.ttl_hops == 0 {
            e.push("dissemination.ttl_hops must be > 0".into());
        }
        if !(self.retry_interval_s.is_finite() && self.retry_interval_s > 0.0) {
            e.push("dissemination.retry_interval_s must be > 0".into());
        }
        if self.report_period_ticks == 0 || self.stale_periods == 0 {
            e.push("dissemination.report_period_ticks and stale_periods must be > 0".into());
        }
        if self.item_size_min_bytes == 0 || self.item_size_min_bytes > self.item_size_max_bytes {
            e.push("dissemination item sizes require 0 < min <= max".into());
        }
        if self.item_size_max_bytes > self.cache_capacity_bytes {
            e.push("dissemination.cache_capacity_bytes must hold the largest item".into());
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Index,
    Provider,
    Rsu,
}

/// Where an interest is currently headed; `position` is the last known one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub kind: TargetKind,
    pub node: NodeId,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterestPacket {
    pub request_id: u64,
    pub content: ContentId,
    pub requester: u32,
    pub requester_path: Vec<SegmentId>,
    pub created_tick: u64,
    pub hop_count: u32,
    pub ttl_hops: u32,
    pub target: Option<Target>,
    /// Providers that turned out not to hold the item any more.
    pub excluded: Vec<NodeId>,
}

/// Outcome of a request for an item the requester already holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalHit {
    pub content: ContentId,
    pub tick: u64,
}

/// Request ids pack (requester, per-requester sequence number); two requests
/// by the same vehicle never share an id.
pub fn request_id(requester: u32, seq: u32) -> u64 {
    ((requester as u64) << 32) | seq as u64
}

pub fn create_interest(
    requester: u32,
    seq: u32,
    content: ContentId,
    tick: u64,
    held_locally: bool,
    path: &[SegmentId],
    ttl_hops: u32,
) -> Result<InterestPacket, LocalHit> {
    if held_locally {
        return Err(LocalHit { content, tick });
    }
    Ok(InterestPacket {
        request_id: request_id(requester, seq),
        content,
        requester,
        requester_path: path.to_vec(),
        created_tick: tick,
        hop_count: 0,
        ttl_hops,
        target: None,
        excluded: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentMessage {
    pub request_id: u64,
    pub content: ContentId,
    pub size_bytes: u64,
    pub remaining_bytes: u64,
    pub source: NodeId,
    pub completed_tick: Option<u64>,
}

impl ContentMessage {
    pub fn new(request_id: u64, content: ContentId, size_bytes: u64, source: NodeId) -> Self {
        Self {
            request_id,
            content,
            size_bytes,
            remaining_bytes: size_bytes,
            source,
            completed_tick: None,
        }
    }
}

/// Advances a transfer by one tick over a link of `rate_bps` bytes per
/// second; `None` means the endpoints are out of range and nothing moves.
/// Returns the remaining byte count.
pub fn transfer_step(msg: &mut ContentMessage, rate_bps: Option<u64>, tick_s: f64, tick: u64) -> u64 {
    if let Some(rate) = rate_bps {
        let sent = (rate as f64 * tick_s).floor() as u64;
        msg.remaining_bytes = msg.remaining_bytes.saturating_sub(sent);
        if msg.remaining_bytes == 0 && msg.completed_tick.is_none() {
            msg.completed_tick = Some(tick);
        }
    }
    msg.remaining_bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_id_text() {
        assert_eq!(NodeId::Rsu(3).to_string(), "r3");
        assert_eq!(NodeId::Vehicle(12).to_string(), "12");
        assert_eq!("r3".parse::<NodeId>(), Ok(NodeId::Rsu(3)));
        assert_eq!("12".parse::<NodeId>(), Ok(NodeId::Vehicle(12)));
        assert!("x".parse::<NodeId>().is_err());
    }

    #[test]
    fn local_hit_has_no_packet() {
        let r = create_interest(1, 0, ContentId(5), 10, true, &[], 15);
        assert_eq!(
            r,
            Err(LocalHit {
                content: ContentId(5),
                tick: 10
            })
        );
    }

    #[test]
    fn fresh_packet() {
        let path = [SegmentId(4), SegmentId(9)];
        let p = create_interest(1, 0, ContentId(5), 10, false, &path, 15).unwrap();
        assert_eq!(p.hop_count, 0);
        assert_eq!(p.requester_path, path.to_vec());
        let q = create_interest(1, 1, ContentId(6), 10, false, &path, 15).unwrap();
        assert_ne!(p.request_id, q.request_id);
    }

    #[test]
    fn transfer_rate_arithmetic() {
        let mut m = ContentMessage::new(1, ContentId(0), 1_000_000, NodeId::Vehicle(0));
        assert_eq!(transfer_step(&mut m, Some(1_000_000), 1.0, 4), 0);
        assert_eq!(m.completed_tick, Some(4));
    }

    #[test]
    fn transfer_resumes_after_break() {
        let mut m = ContentMessage::new(1, ContentId(0), 1_000_000, NodeId::Vehicle(0));
        transfer_step(&mut m, Some(400_000), 1.0, 0);
        assert_eq!(transfer_step(&mut m, None, 1.0, 1), 600_000);
        assert_eq!(transfer_step(&mut m, None, 1.0, 2), 600_000);
        assert_eq!(transfer_step(&mut m, Some(400_000), 1.0, 3), 200_000);
        assert_eq!(m.completed_tick, None);
    }
}
