use crate::content_embed::ContentId;
use crate::dissemination::NodeId;
use std::fmt;
use std::io::Write;

pub const EVENT_HEADER: &str = "tick,event_type,request_id,content_id,vehicle_from,vehicle_to,hops,bytes_remaining";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    RunStart,
    RunEnd,
    CacheCapacity,
    CacheInit,
    CacheInsert,
    CacheEvict,
    Request,
    LocalHit,
    InterestForward,
    InterestDrop,
    InterestRetry,
    IndexHit,
    IndexMiss,
    RsuFetch,
    Transfer,
    DeliverV2v,
    DeliverRsu,
    Fail,
    Replicate,
    Recommend,
    Decide,
    Plan,
    Replan,
    TripStart,
    TripEnd,
    CostSearch,
    CostSimilarity,
    CostNet,
    CostIndex,
}

impl EventKind {
    pub const ALL: [EventKind; 29] = [
        EventKind::RunStart,
        EventKind::RunEnd,
        EventKind::CacheCapacity,
        EventKind::CacheInit,
        EventKind::CacheInsert,
        EventKind::CacheEvict,
        EventKind::Request,
        EventKind::LocalHit,
        EventKind::InterestForward,
        EventKind::InterestDrop,
        EventKind::InterestRetry,
        EventKind::IndexHit,
        EventKind::IndexMiss,
        EventKind::RsuFetch,
        EventKind::Transfer,
        EventKind::DeliverV2v,
        EventKind::DeliverRsu,
        EventKind::Fail,
        EventKind::Replicate,
        EventKind::Recommend,
        EventKind::Decide,
        EventKind::Plan,
        EventKind::Replan,
        EventKind::TripStart,
        EventKind::TripEnd,
        EventKind::CostSearch,
        EventKind::CostSimilarity,
        EventKind::CostNet,
        EventKind::CostIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RunStart => "run_start",
            EventKind::RunEnd => "run_end",
            EventKind::CacheCapacity => "cache_capacity",
            EventKind::CacheInit => "cache_init",
            EventKind::CacheInsert => "cache_insert",
            EventKind::CacheEvict => "cache_evict",
            EventKind::Request => "request",
            EventKind::LocalHit => "local_hit",
            EventKind::InterestForward => "interest_forward",
            EventKind::InterestDrop => "interest_drop",
            EventKind::InterestRetry => "interest_retry",
            EventKind::IndexHit => "index_hit",
            EventKind::IndexMiss => "index_miss",
            EventKind::RsuFetch => "rsu_fetch",
            EventKind::Transfer => "transfer",
            EventKind::DeliverV2v => "deliver_v2v",
            EventKind::DeliverRsu => "deliver_rsu",
            EventKind::Fail => "fail",
            EventKind::Replicate => "replicate",
            EventKind::Recommend => "recommend",
            EventKind::Decide => "decide",
            EventKind::Plan => "plan",
            EventKind::Replan => "replan",
            EventKind::TripStart => "trip_start",
            EventKind::TripEnd => "trip_end",
            EventKind::CostSearch => "cost_search",
            EventKind::CostSimilarity => "cost_similarity",
            EventKind::CostNet => "cost_net",
            EventKind::CostIndex => "cost_index",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One log row. Column meaning varies slightly by kind:
///
/// * `run_start`: `vehicle_from` is the policy name, `request_id` the detour
///   budget in ms, `hops` the hop limit and `bytes_remaining` the tick length in ms.
/// * `trip_start` / `trip_end`: `request_id` is the trip id, `vehicle_from`
///   the consumer, `hops` the segment count and `bytes_remaining` the
///   reference shortest travel time (start) or realized route time (end), in ms.
/// * cache events: `bytes_remaining` is the cache occupancy after the change.
/// * cost events: `bytes_remaining` is the counter value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
    pub request_id: Option<u64>,
    pub content: Option<ContentId>,
    pub from: Option<String>,
    pub to: Option<NodeId>,
    pub hops: Option<u32>,
    pub bytes: Option<u64>,
}

impl Event {
    pub fn new(tick: u64, kind: EventKind) -> Self {
        Self {
            tick,
            kind,
            request_id: None,
            content: None,
            from: None,
            to: None,
            hops: None,
            bytes: None,
        }
    }

    pub fn request(mut self, id: u64) -> Self {
        self.request_id = Some(id);
        self
    }

    pub fn content(mut self, c: ContentId) -> Self {
        self.content = Some(c);
        self
    }

    pub fn from(mut self, n: NodeId) -> Self {
        self.from = Some(n.to_string());
        self
    }

    pub fn from_label(mut self, s: &str) -> Self {
        self.from = Some(s.to_string());
        self
    }

    pub fn to(mut self, n: NodeId) -> Self {
        self.to = Some(n);
        self
    }

    pub fn hops(mut self, h: u32) -> Self {
        self.hops = Some(h);
        self
    }

    pub fn bytes(mut self, b: u64) -> Self {
        self.bytes = Some(b);
        self
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.tick,
            self.kind,
            opt(&self.request_id),
            opt(&self.content),
            self.from.as_deref().unwrap_or(""),
            opt(&self.to),
            opt(&self.hops),
            opt(&self.bytes)
        )
    }
}

pub fn write_events<W: Write>(events: &[Event], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{EVENT_HEADER}")?;
    for e in events {
        writeln!(out, "{e}")?;
    }
    out.flush()
}
