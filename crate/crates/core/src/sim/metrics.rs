use super::events::{Event, EventKind};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Run summary derived from the event log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub requests: u64,
    pub delivered: u64,
    pub delivered_v2v: u64,
    pub delivered_rsu: u64,
    pub failed: u64,
    pub local_hits: u64,
    pub mean_delay_s: Option<f64>,
    pub delivery_rate: Option<f64>,
    pub trips: u64,
    pub mean_travel_time_s: Option<f64>,
    pub cost_search: u64,
    pub cost_similarity: u64,
    pub cost_net: u64,
    pub cost_index: u64,
}

impl MetricsReport {
    pub fn from_events(events: &[Event], tick_ms: u64) -> Self {
        let tick_s = tick_ms as f64 / 1000.0;
        let mut m = MetricsReport::default();
        let mut created: BTreeMap<u64, u64> = BTreeMap::new();
        let mut trip_start: BTreeMap<u64, u64> = BTreeMap::new();
        let mut delay_ticks = 0u64;
        let mut trip_ticks = 0u64;
        for e in events {
            match e.kind {
                EventKind::Request => {
                    m.requests += 1;
                    if let Some(id) = e.request_id {
                        created.insert(id, e.tick);
                    }
                }
                EventKind::LocalHit => m.local_hits += 1,
                EventKind::DeliverV2v | EventKind::DeliverRsu => {
                    m.delivered += 1;
                    if e.kind == EventKind::DeliverV2v {
                        m.delivered_v2v += 1;
                    } else {
                        m.delivered_rsu += 1;
                    }
                    if let Some(t0) = e.request_id.and_then(|id| created.get(&id)) {
                        delay_ticks += e.tick - t0;
                    }
                }
                EventKind::Fail => m.failed += 1,
                EventKind::TripStart => {
                    if let Some(id) = e.request_id {
                        trip_start.insert(id, e.tick);
                    }
                }
                EventKind::TripEnd => {
                    if let Some(t0) = e.request_id.and_then(|id| trip_start.get(&id)) {
                        m.trips += 1;
                        trip_ticks += e.tick - t0;
                    }
                }
                EventKind::CostSearch => m.cost_search += e.bytes.unwrap_or(0),
                EventKind::CostSimilarity => m.cost_similarity += e.bytes.unwrap_or(0),
                EventKind::CostNet => m.cost_net += e.bytes.unwrap_or(0),
                EventKind::CostIndex => m.cost_index += e.bytes.unwrap_or(0),
                _ => {}
            }
        }
        if m.delivered > 0 {
            m.mean_delay_s = Some(delay_ticks as f64 * tick_s / m.delivered as f64);
        }
        if m.requests > 0 {
            m.delivery_rate = Some(m.delivered as f64 / m.requests as f64);
        }
        if m.trips > 0 {
            m.mean_travel_time_s = Some(trip_ticks as f64 * tick_s / m.trips as f64);
        }
        m
    }

    pub fn cost_total(&self) -> u64 {
        self.cost_search + self.cost_similarity + self.cost_net + self.cost_index
    }

    /// `(name, value)` pairs in output order; absent means use `NA`.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("requests", Some(self.requests as f64)),
            ("delivered", Some(self.delivered as f64)),
            ("delivered_v2v", Some(self.delivered_v2v as f64)),
            ("delivered_rsu", Some(self.delivered_rsu as f64)),
            ("failed", Some(self.failed as f64)),
            ("local_hits", Some(self.local_hits as f64)),
            ("mean_delay_s", self.mean_delay_s),
            ("delivery_rate", self.delivery_rate),
            ("trips", Some(self.trips as f64)),
            ("mean_travel_time_s", self.mean_travel_time_s),
            ("cost_search", Some(self.cost_search as f64)),
            ("cost_similarity", Some(self.cost_similarity as f64)),
            ("cost_net", Some(self.cost_net as f64)),
            ("cost_index", Some(self.cost_index as f64)),
            ("cost_total", Some(self.cost_total() as f64)),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows().into_iter().find(|r| r.0 == name).and_then(|r| r.1)
    }

    /// `metric,value` CSV. Floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.rows() {
            match v {
                Some(x) => writeln!(out, "{name},{x}"),
                None => writeln!(out, "{name},NA"),
            }
            .expect("string write");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content_embed::ContentId;

    #[test]
    fn counts_and_means() {
        let ev = vec![
            Event::new(1, EventKind::Request).request(1).content(ContentId(0)),
            Event::new(2, EventKind::Request).request(2).content(ContentId(0)),
            Event::new(3, EventKind::LocalHit).content(ContentId(0)),
            Event::new(5, EventKind::DeliverV2v).request(1),
            Event::new(9, EventKind::Fail).request(2),
            Event::new(0, EventKind::TripStart).request(0),
            Event::new(40, EventKind::TripEnd).request(0),
        ];
        let m = MetricsReport::from_events(&ev, 500);
        assert_eq!((m.requests, m.delivered, m.failed, m.local_hits), (2, 1, 1, 1));
        assert_eq!(m.mean_delay_s, Some(2.0));
        assert_eq!(m.delivery_rate, Some(0.5));
        assert_eq!(m.mean_travel_time_s, Some(20.0));
        assert!(m.to_csv().contains("mean_delay_s,2\n"));
    }
}
