//! Independent re-computation of run metrics and invariant checks from an
//! event-log CSV.
//!
//! Nothing here uses the simulator's event or metric types: rows are parsed
//! from text and the metrics are rebuilt from scratch, so a disagreement with
//! the runner's `metrics.csv` points at a bug in one of the two.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

const COLUMNS: [&str; 8] = [
    "tick",
    "event_type",
    "request_id",
    "content_id",
    "vehicle_from",
    "vehicle_to",
    "hops",
    "bytes_remaining",
];

const KNOWN: [&str; 29] = [
    "run_start",
    "run_end",
    "cache_capacity",
    "cache_init",
    "cache_insert",
    "cache_evict",
    "request",
    "local_hit",
    "interest_forward",
    "interest_drop",
    "interest_retry",
    "index_hit",
    "index_miss",
    "rsu_fetch",
    "transfer",
    "deliver_v2v",
    "deliver_rsu",
    "fail",
    "replicate",
    "recommend",
    "decide",
    "plan",
    "replan",
    "trip_start",
    "trip_end",
    "cost_search",
    "cost_similarity",
    "cost_net",
    "cost_index",
];

/// Hop-carrying rows on the dissemination side.
const HOP_ROWS: [&str; 6] = [
    "interest_forward",
    "interest_drop",
    "rsu_fetch",
    "transfer",
    "deliver_v2v",
    "deliver_rsu",
];

const DEFAULT_TTL: u64 = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRow {
    pub line: usize,
    pub tick: u64,
    pub kind: String,
    pub request: Option<u64>,
    pub content: Option<u64>,
    pub from: String,
    pub to: String,
    pub hops: Option<u64>,
    pub bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Malformed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn field(s: &str, name: &str) -> Result<Option<u64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<u64>()
        .map(Some)
        .map_err(|_| format!("{name} is not a non-negative integer: {s:?}"))
}

/// Parses a log, collecting every malformed row rather than stopping at the first.
pub fn parse_log(text: &str) -> Result<Vec<LogRow>, Vec<Malformed>> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == COLUMNS.join(",") => {}
        Some((_, h)) => bad.push(Malformed {
            line: 1,
            message: format!("unexpected header {h:?}"),
        }),
        None => {
            return Err(vec![Malformed {
                line: 1,
                message: "empty log".into(),
            }])
        }
    }
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end();
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').collect();
        if cols.len() != COLUMNS.len() {
            bad.push(Malformed {
                line,
                message: format!("expected {} columns, found {}", COLUMNS.len(), cols.len()),
            });
            continue;
        }
        let parsed = (|| -> Result<LogRow, String> {
            let tick = field(cols[0], "tick")?.ok_or("tick is empty")?;
            if !KNOWN.contains(&cols[1]) {
                return Err(format!("unknown event_type {:?}", cols[1]));
            }
            Ok(LogRow {
                line,
                tick,
                kind: cols[1].to_string(),
                request: field(cols[2], "request_id")?,
                content: field(cols[3], "content_id")?,
                from: cols[4].to_string(),
                to: cols[5].to_string(),
                hops: field(cols[6], "hops")?,
                bytes: field(cols[7], "bytes_remaining")?,
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(message) => bad.push(Malformed { line, message }),
        }
    }
    if bad.is_empty() {
        Ok(rows)
    } else {
        Err(bad)
    }
}

/// Metrics rebuilt from the log, in `metrics.csv` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recomputed {
    pub values: Vec<(String, Option<f64>)>,
}

impl Recomputed {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (n, v) in &self.values {
            match v {
                Some(x) => out.push_str(&format!("{n},{x}\n")),
                None => out.push_str(&format!("{n},NA\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub policy: Option<String>,
    pub tick_ms: u64,
    pub metrics: Recomputed,
    /// Invariant violations, each prefixed with the offending line.
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes metrics and checks invariants. Needs a `run_start` row for
/// the tick length; without one, 1000 ms is assumed.
pub fn audit_rows(rows: &[LogRow]) -> AuditReport {
    let start = rows.iter().find(|r| r.kind == "run_start");
    let policy = start.map(|r| r.from.clone()).filter(|s| !s.is_empty());
    let tick_ms = start.and_then(|r| r.bytes).unwrap_or(1000);
    let ttl = start.and_then(|r| r.hops).unwrap_or(DEFAULT_TTL);
    let budget_ms = start.and_then(|r| r.request);
    let mut violations = Vec::new();

    let mut opened: BTreeMap<u64, (u64, String)> = BTreeMap::new();
    let mut closed: BTreeSet<u64> = BTreeSet::new();
    let (mut delivered, mut v2v, mut rsu, mut failed, mut local) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut delay_ticks = 0u64;
    let mut trips_open: BTreeMap<u64, (u64, Option<u64>)> = BTreeMap::new();
    let (mut trips, mut trip_ticks) = (0u64, 0u64);
    let mut costs: BTreeMap<&str, u64> = BTreeMap::new();
    let mut last_hops: BTreeMap<(u64, &str), u64> = BTreeMap::new();
    let mut capacity: BTreeMap<&str, u64> = BTreeMap::new();
    let mut held: BTreeSet<(&str, u64)> = BTreeSet::new();
    let mut prev_tick = 0u64;

    for r in rows {
        let at = format!("line {}", r.line);
        if r.tick < prev_tick {
            violations.push(format!("{at}: tick {} goes back from {prev_tick}", r.tick));
        }
        prev_tick = prev_tick.max(r.tick);
        if HOP_ROWS.contains(&r.kind.as_str()) {
            if let Some(h) = r.hops {
                if h > ttl {
                    violations.push(format!("{at}: {} hop count {h} exceeds limit {ttl}", r.kind));
                }
                if let Some(id) = r.request {
                    let lane = if r.kind == "transfer" || r.kind.starts_with("deliver") {
                        "content"
                    } else {
                        "interest"
                    };
                    let prev = last_hops.entry((id, lane)).or_insert(0);
                    if h < *prev && !(lane == "interest" && r.kind == "interest_drop") {
                        violations.push(format!("{at}: request {id} hop count falls from {prev} to {h}"));
                    }
                    *prev = (*prev).max(h);
                }
            }
        }
        match r.kind.as_str() {
            "request" => match r.request {
                Some(id) => {
                    if opened.insert(id, (r.tick, r.from.clone())).is_some() {
                        violations.push(format!("{at}: request {id} created twice"));
                    }
                }
                None => violations.push(format!("{at}: request without id")),
            },
            "interest_retry" => {
                if let Some(id) = r.request {
                    last_hops.remove(&(id, "interest"));
                    last_hops.remove(&(id, "content"));
                }
            }
            "local_hit" => local += 1,
            "deliver_v2v" | "deliver_rsu" | "fail" => {
                let Some(id) = r.request else {
                    violations.push(format!("{at}: {} without request id", r.kind));
                    continue;
                };
                let Some((t0, who)) = opened.get(&id) else {
                    violations.push(format!("{at}: {} for unknown request {id}", r.kind));
                    continue;
                };
                if !closed.insert(id) {
                    violations.push(format!("{at}: request {id} resolved twice"));
                    continue;
                }
                if r.kind == "fail" {
                    failed += 1;
                    continue;
                }
                if &r.to != who {
                    violations.push(format!("{at}: request {id} delivered to {} instead of {who}", r.to));
                }
                delivered += 1;
                if r.kind == "deliver_v2v" {
                    v2v += 1;
                } else {
                    rsu += 1;
                }
                delay_ticks += r.tick - t0;
            }
            "trip_start" => {
                if let Some(id) = r.request {
                    trips_open.insert(id, (r.tick, r.bytes));
                }
            }
            "trip_end" => {
                if let Some((t0, reference)) = r.request.and_then(|id| trips_open.remove(&id)) {
                    trips += 1;
                    trip_ticks += r.tick - t0;
                    if policy.as_deref() == Some("vesonet") {
                        if let (Some(budget), Some(reference), Some(realized)) = (budget_ms, reference, r.bytes) {
                            if realized > reference + budget + 1 {
                                violations.push(format!(
                                    "{at}: trip {} took {realized} ms, over {reference} ms + {budget} ms",
                                    r.request.unwrap()
                                ));
                            }
                        }
                    }
                }
            }
            "cache_capacity" => {
                capacity.insert(r.to.as_str(), r.bytes.unwrap_or(0));
            }
            "cache_init" | "cache_insert" | "cache_evict" => {
                let level = r.bytes.unwrap_or(0);
                match capacity.get(r.to.as_str()) {
                    Some(&cap) if level > cap => {
                        violations.push(format!("{at}: cache of {} holds {level} bytes over capacity {cap}", r.to))
                    }
                    None => violations.push(format!("{at}: cache event for {} with no declared capacity", r.to)),
                    _ => {}
                }
                if let Some(c) = r.content {
                    if r.kind == "cache_evict" {
                        held.remove(&(r.to.as_str(), c));
                    } else {
                        held.insert((r.to.as_str(), c));
                    }
                }
            }
            "replicate" => {
                if let Some(c) = r.content {
                    if held.contains(&(r.to.as_str(), c)) {
                        violations.push(format!("{at}: item {c} replicated to {} which already holds it", r.to));
                    }
                }
            }
            "cost_search" | "cost_similarity" | "cost_net" | "cost_index" => {
                *costs.entry(r.kind.as_str()).or_insert(0) += r.bytes.unwrap_or(0);
            }
            _ => {}
        }
    }
    let ended = rows.iter().any(|r| r.kind == "run_end");
    if ended {
        for id in opened.keys() {
            if !closed.contains(id) {
                violations.push(format!("request {id} neither delivered nor failed"));
            }
        }
    }

    let requests = opened.len() as u64;
    let tick_s = tick_ms as f64 / 1000.0;
    let cost = |k: &str| costs.get(k).copied().unwrap_or(0);
    let total = cost("cost_search") + cost("cost_similarity") + cost("cost_net") + cost("cost_index");
    let n = |x: u64| Some(x as f64);
    let values = vec![
        ("requests", n(requests)),
        ("delivered", n(delivered)),
        ("delivered_v2v", n(v2v)),
        ("delivered_rsu", n(rsu)),
        ("failed", n(failed)),
        ("local_hits", n(local)),
        (
            "mean_delay_s",
            (delivered > 0).then(|| delay_ticks as f64 * tick_s / delivered as f64),
        ),
        ("delivery_rate", (requests > 0).then(|| delivered as f64 / requests as f64)),
        ("trips", n(trips)),
        (
            "mean_travel_time_s",
            (trips > 0).then(|| trip_ticks as f64 * tick_s / trips as f64),
        ),
        ("cost_search", n(cost("cost_search"))),
        ("cost_similarity", n(cost("cost_similarity"))),
        ("cost_net", n(cost("cost_net"))),
        ("cost_index", n(cost("cost_index"))),
        ("cost_total", n(total)),
    ];
    AuditReport {
        policy,
        tick_ms,
        metrics: Recomputed {
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        },
        violations,
    }
}

/// Parses `metric,value` CSV as written by the runner.
pub fn parse_metrics_csv(text: &str) -> Result<BTreeMap<String, Option<f64>>, Vec<Malformed>> {
    let mut out = BTreeMap::new();
    let mut bad = Vec::new();
    for (i, raw) in text.lines().enumerate().skip(1) {
        let raw = raw.trim_end();
        if raw.is_empty() {
            continue;
        }
        let Some((k, v)) = raw.split_once(',') else {
            bad.push(Malformed {
                line: i + 1,
                message: "expected metric,value".into(),
            });
            continue;
        };
        let v = if v == "NA" {
            None
        } else {
            match v.parse::<f64>() {
                Ok(x) => Some(x),
                Err(_) => {
                    bad.push(Malformed {
                        line: i + 1,
                        message: format!("value {v:?} is not a number"),
                    });
                    continue;
                }
            }
        };
        out.insert(k.to_string(), v);
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(bad)
    }
}

/// Differences between recomputed metrics and a runner report. Counts
/// must match exactly, means to 1e-9 relative.
pub fn compare(recomputed: &Recomputed, runner: &BTreeMap<String, Option<f64>>) -> Vec<String> {
    let mut out = Vec::new();
    for (name, mine) in &recomputed.values {
        let Some(theirs) = runner.get(name) else {
            out.push(format!("{name}: missing from runner report"));
            continue;
        };
        let same = match (mine, theirs) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            _ => false,
        };
        if !same {
            out.push(format!("{name}: audit {mine:?} vs runner {theirs:?}"));
        }
    }
    out
}
