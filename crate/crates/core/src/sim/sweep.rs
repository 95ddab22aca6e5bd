use super::events::Event;
use super::metrics::MetricsReport;
use super::scenario::{Policy, Scenario};
use super::world::run_with;
use super::{ContentEnv, SimError};
use crate::road_net::RoadNetwork;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepAxis {
    Velocity,
    /// Total consumers plus providers; 70% consumers.
    Density,
    RsuCount,
    /// Number of halted segments.
    Accidents,
    RequestRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Velocity => "velocity",
            SweepAxis::Density => "density",
            SweepAxis::RsuCount => "rsu_count",
            SweepAxis::Accidents => "accidents",
            SweepAxis::RequestRate => "request_rate",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "velocity" => SweepAxis::Velocity,
            "density" => SweepAxis::Density,
            "rsu_count" | "rsu" => SweepAxis::RsuCount,
            "accidents" => SweepAxis::Accidents,
            "request_rate" => SweepAxis::RequestRate,
            _ => {
                return Err(format!(
                    "unknown axis `{s}` (expected velocity, density, rsu_count, accidents or request_rate)"
                ))
            }
        })
    }
}

/// Returns `base` with the axis set to `value`.
pub fn apply_axis(base: &Scenario, net: &RoadNetwork, axis: SweepAxis, value: f64) -> Result<Scenario, String> {
    let mut sc = base.clone();
    let count = |v: f64| {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(format!("{}: expected a non-negative integer, got {v}", axis.name()))
        }
    };
    match axis {
        SweepAxis::Velocity => sc.velocity_cap_mps = value,
        SweepAxis::RequestRate => sc.request_rate = value,
        SweepAxis::Density => {
            let n = count(value)?;
            let consumers = (n as f64 * 0.7).round() as u32;
            sc.vehicles.consumers = consumers;
            sc.vehicles.providers = n as u32 - consumers;
        }
        SweepAxis::RsuCount => {
            let n = count(value)?;
            let mut rsus: Vec<_> = base.rsus.iter().copied().take(n).collect();
            for extra in Scenario::spread_rsus(net, net.segment_count()) {
                if rsus.len() >= n {
                    break;
                }
                if !rsus.iter().any(|r| r.segment == extra.segment) {
                    rsus.push(extra);
                }
            }
            sc.rsus = rsus;
        }
        SweepAxis::Accidents => {
            let n = count(value)?;
            sc.accidents = base.random_accidents(net, n);
        }
    }
    Ok(sc)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub policies: Vec<Policy>,
    pub replicates: u32,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
    /// Keep every run's event log in the result.
    pub keep_events: bool,
}

/// One finished run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub value: f64,
    pub policy: Policy,
    pub seed: u64,
    pub metrics: MetricsReport,
    pub tick_ms: u64,
    pub events: Option<Vec<Event>>,
}

/// Replicate mean of one metric at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub policy: Policy,
    pub metric: String,
    /// `None` when no replicate produced the metric.
    pub mean: Option<f64>,
}

/// Runs every (value, policy, replicate) combination. Replicate `r` uses
/// seed `base.rng_seed + r`. The network and trained content embeddings are
/// built once and shared by all runs.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<SweepRun>), SimError> {
    let errs = base.validate();
    if !errs.is_empty() {
        return Err(SimError::Invalid(errs));
    }
    let net = Arc::new(base.build_network().map_err(SimError::Setup)?);
    let env = Arc::new(ContentEnv::build(&base.content, &base.embedding)?);
    let mut jobs = Vec::new();
    for &value in &spec.values {
        let point = apply_axis(base, &net, spec.axis, value).map_err(|e| SimError::Invalid(vec![e]))?;
        for &policy in &spec.policies {
            for r in 0..spec.replicates {
                let mut sc = point.clone();
                sc.policy = policy;
                sc.rng_seed = base.rng_seed + r as u64;
                jobs.push((value, sc));
            }
        }
    }
    let work = || -> Result<Vec<SweepRun>, SimError> {
        jobs.par_iter()
            .map(|(value, sc)| {
                let out = run_with(sc, net.clone(), env.clone())?;
                log::info!(
                    "{}={} policy={} seed={} delay={:?} rate={:?}",
                    spec.axis.name(),
                    value,
                    sc.policy.name(),
                    sc.rng_seed,
                    out.metrics.mean_delay_s,
                    out.metrics.delivery_rate
                );
                Ok(SweepRun {
                    value: *value,
                    policy: sc.policy,
                    seed: sc.rng_seed,
                    metrics: out.metrics,
                    tick_ms: sc.tick_ms(),
                    events: spec.keep_events.then_some(out.events),
                })
            })
            .collect()
    };
    let runs = if spec.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| SimError::Setup(e.to_string()))?
            .install(work)?
    } else {
        work()?
    };
    Ok((aggregate(spec, &runs), runs))
}

fn aggregate(spec: &SweepSpec, runs: &[SweepRun]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &value in &spec.values {
        for &policy in &spec.policies {
            let group: Vec<&SweepRun> = runs.iter().filter(|r| r.value == value && r.policy == policy).collect();
            let Some(first) = group.first() else { continue };
            for (metric, _) in first.metrics.rows() {
                let vals: Vec<f64> = group.iter().filter_map(|r| r.metrics.get(metric)).collect();
                let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                rows.push(SweepRow {
                    axis: spec.axis,
                    value,
                    policy,
                    metric: metric.to_string(),
                    mean,
                });
            }
        }
    }
    rows
}

/// Long-format CSV `axis,value,policy,metric,metric_value`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "axis,value,policy,metric,metric_value")?;
    for r in rows {
        let v = r.mean.map_or_else(|| "NA".to_string(), |m| m.to_string());
        writeln!(out, "{},{},{},{},{}", r.axis.name(), r.value, r.policy.name(), r.metric, v)?;
    }
    out.flush()
}

/// Replicate means keyed by (value, policy) for one metric.
pub fn metric_table(rows: &[SweepRow], metric: &str) -> BTreeMap<(String, Policy), Option<f64>> {
    rows.iter()
        .filter(|r| r.metric == metric)
        .map(|r| ((r.value.to_string(), r.policy), r.mean))
        .collect()
}
