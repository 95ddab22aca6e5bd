use crate::content_embed::{EmbeddingParams, LogSpec};
use crate::dissemination::DisseminationParams;
use crate::provider_rl::DqnConfig;
use crate::road_net::{grid_network, read_edge_list, GridSpec, RoadNetwork, SegmentId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkSource {
    Grid(GridSpec),
    EdgeList { path: PathBuf },
}

impl Default for NetworkSource {
    fn default() -> Self {
        NetworkSource::Grid(GridSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContentSource {
    Synthetic(LogSpec),
    /// CSV `user_id,content_id,timestamp`.
    Log { path: PathBuf },
}

impl Default for ContentSource {
    fn default() -> Self {
        ContentSource::Synthetic(LogSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[default]
    Vesonet,
    #[serde(alias = "baseline")]
    BaselineNoReroute,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Vesonet => "vesonet",
            Policy::BaselineNoReroute => "baseline_no_reroute",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vesonet" => Ok(Policy::Vesonet),
            "baseline" | "baseline_no_reroute" => Ok(Policy::BaselineNoReroute),
            _ => Err(format!("unknown policy `{s}` (expected vesonet or baseline)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleCounts {
    pub consumers: u32,
    pub providers: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsuPlacement {
    pub segment: u32,
    pub offset_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accident {
    pub segment: u32,
    pub start_tick: u64,
    pub duration_ticks: u64,
}

impl Accident {
    pub fn active(&self, tick: u64) -> bool {
        tick >= self.start_tick && tick < self.start_tick + self.duration_ticks
    }
}

/// Everything a run needs. Mirrors the JSON configuration field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkSource,
    pub vehicles: VehicleCounts,
    pub velocity_cap_mps: f64,
    pub rsus: Vec<RsuPlacement>,
    pub accidents: Vec<Accident>,
    /// Duration used when accidents are generated by a sweep.
    pub accident_duration_ticks: u64,
    pub epsilon_s: f64,
    pub alpha: f64,
    pub dqn: DqnConfig,
    pub embedding: EmbeddingParams,
    pub content: ContentSource,
    pub dissemination: DisseminationParams,
    /// Per-consumer request probability per tick.
    pub request_rate: f64,
    pub tick_duration_s: f64,
    pub run_length: u64,
    pub rng_seed: u64,
    pub policy: Policy,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            network: NetworkSource::default(),
            vehicles: VehicleCounts {
                consumers: 70,
                providers: 30,
            },
            velocity_cap_mps: 15.0,
            rsus: Vec::new(),
            accidents: Vec::new(),
            accident_duration_ticks: 240,
            epsilon_s: 30.0,
            alpha: 0.5,
            dqn: DqnConfig::default(),
            embedding: EmbeddingParams::default(),
            content: ContentSource::default(),
            dissemination: DisseminationParams::default(),
            request_rate: 0.01,
            tick_duration_s: 1.0,
            run_length: 500,
            rng_seed: 1,
            policy: Policy::Vesonet,
        }
    }
}

/// A JSON parse failure with position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseFailure {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ParseFailure> {
        serde_json::from_str(text).map_err(|e| ParseFailure {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolves relative file references against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let NetworkSource::EdgeList { path } = &mut self.network {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let ContentSource::Log { path } = &mut self.content {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn tick_ms(&self) -> u64 {
        (self.tick_duration_s * 1000.0).round() as u64
    }

    pub fn build_network(&self) -> Result<RoadNetwork, String> {
        match &self.network {
            NetworkSource::Grid(spec) => grid_network(spec).map_err(|e| e.to_string()),
            NetworkSource::EdgeList { path } => read_edge_list(path).map_err(|e| e.to_string()),
        }
    }

    /// Every violated constraint, each naming its field.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if !(self.epsilon_s.is_finite() && self.epsilon_s >= 0.0) {
            e.push(format!("epsilon_s: must be a finite value >= 0, got {}", self.epsilon_s));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            e.push(format!("alpha: must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.velocity_cap_mps.is_finite() && self.velocity_cap_mps > 0.0) {
            e.push(format!("velocity_cap_mps: must be > 0, got {}", self.velocity_cap_mps));
        }
        if !(self.tick_duration_s.is_finite() && self.tick_duration_s > 0.0) {
            e.push(format!("tick_duration_s: must be > 0, got {}", self.tick_duration_s));
        } else if (self.tick_duration_s * 1000.0 - (self.tick_duration_s * 1000.0).round()).abs() > 1e-9 {
            e.push("tick_duration_s: must be a whole number of milliseconds".into());
        }
        if self.run_length == 0 {
            e.push("run_length: must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.request_rate) {
            e.push(format!("request_rate: must lie in [0, 1], got {}", self.request_rate));
        }
        if let NetworkSource::Grid(g) = &self.network {
            if g.rows == 0 || g.cols == 0 || g.rows * g.cols < 2 {
                e.push("network.rows/cols: grid needs at least 2 intersections".into());
            }
            if !(g.block_m > 0.0 && g.speed_limit_mps > 0.0) {
                e.push("network.block_m/speed_limit_mps: must be > 0".into());
            }
            if !(0.0..1.0).contains(&g.speed_jitter) {
                e.push("network.speed_jitter: must lie in [0, 1)".into());
            }
        }
        e.extend(self.dqn.validate());
        e.extend(self.embedding.validate().into_iter().map(|m| format!("embedding: {m}")));
        e.extend(self.dissemination.validate());
        if let ContentSource::Synthetic(spec) = &self.content {
            e.extend(spec.validate().into_iter().map(|m| format!("content: {m}")));
        }
        match self.build_network() {
            Err(msg) => e.push(format!("network: {msg}")),
            Ok(net) => {
                let n = net.segment_count() as u32;
                for (i, r) in self.rsus.iter().enumerate() {
                    match net.segment(SegmentId(r.segment)) {
                        Err(_) => e.push(format!("rsus[{i}].segment: unknown segment {} (network has {n})", r.segment)),
                        Ok(s) if !(0.0..=s.length_m).contains(&r.offset_m) => {
                            e.push(format!("rsus[{i}].offset_m: {} outside [0, {}]", r.offset_m, s.length_m))
                        }
                        _ => {}
                    }
                }
                for (i, a) in self.accidents.iter().enumerate() {
                    if a.segment >= n {
                        e.push(format!("accidents[{i}].segment: unknown segment {}", a.segment));
                    }
                }
                if net.intersection_count() < 2 {
                    e.push("network: needs at least 2 intersections".into());
                }
            }
        }
        e
    }

    /// Deterministic RSU placements at segment midpoints, spread out by
    /// farthest-point selection starting from the most central segment.
    pub fn spread_rsus(net: &RoadNetwork, count: usize) -> Vec<RsuPlacement> {
        let mids: Vec<(f64, f64)> = net
            .segments_all()
            .iter()
            .map(|s| {
                let a = net.intersection(s.from).unwrap().position;
                let b = net.intersection(s.to).unwrap().position;
                ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
            })
            .collect();
        if mids.is_empty() || count == 0 {
            return Vec::new();
        }
        let cx = mids.iter().map(|m| m.0).sum::<f64>() / mids.len() as f64;
        let cy = mids.iter().map(|m| m.1).sum::<f64>() / mids.len() as f64;
        let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
        let first = (0..mids.len())
            .min_by(|&i, &j| d2(mids[i], (cx, cy)).total_cmp(&d2(mids[j], (cx, cy))).then(i.cmp(&j)))
            .unwrap();
        let mut chosen = vec![first];
        let mut best: Vec<f64> = mids.iter().map(|&m| d2(m, mids[first])).collect();
        while chosen.len() < count.min(mids.len()) {
            let next = (0..mids.len())
                .max_by(|&i, &j| best[i].total_cmp(&best[j]).then(j.cmp(&i)))
                .unwrap();
            chosen.push(next);
            for (k, b) in best.iter_mut().enumerate() {
                *b = b.min(d2(mids[k], mids[next]));
            }
        }
        chosen
            .into_iter()
            .map(|i| RsuPlacement {
                segment: i as u32,
                offset_m: net.segments_all()[i].length_m / 2.0,
            })
            .collect()
    }

    /// `count` accidents on distinct random segments, starting in the first
    /// half of the run.
    pub fn random_accidents(&self, net: &RoadNetwork, count: usize) -> Vec<Accident> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(7);
        let mut segs: Vec<u32> = (0..net.segment_count() as u32).collect();
        segs.shuffle(&mut rng);
        segs.into_iter()
            .take(count)
            .map(|segment| Accident {
                segment,
                start_tick: rng.gen_range(0..(self.run_length / 2).max(1)),
                duration_ticks: self.accident_duration_ticks,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert!(Scenario::default().validate().is_empty());
    }

    #[test]
    fn negative_epsilon_named() {
        let s = Scenario {
            epsilon_s: -1.0,
            ..Default::default()
        };
        let errs = s.validate();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("epsilon_s"));
    }

    #[test]
    fn dangling_rsu_segment() {
        let s = Scenario {
            rsus: vec![RsuPlacement {
                segment: 100_000,
                offset_m: 0.0,
            }],
            alpha: 2.0,
            ..Default::default()
        };
        let errs = s.validate();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().any(|e| e.starts_with("rsus[0].segment")));
    }

    #[test]
    fn json_round_trip_and_positions() {
        let s = Scenario::default();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        let err = Scenario::from_json("{\n  \"epsilon_s\": \"x\"\n}").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(Scenario::from_json("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn rsus_spread_distinct() {
        let net = Scenario::default().build_network().unwrap();
        let r = Scenario::spread_rsus(&net, 8);
        assert_eq!(r.len(), 8);
        let mut segs: Vec<u32> = r.iter().map(|p| p.segment).collect();
        segs.sort_unstable();
        segs.dedup();
        assert_eq!(segs.len(), 8);
    }
}
