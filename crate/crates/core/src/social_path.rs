//! Provider-aware route planning under a detour budget.
//!
//! [`alternative_social_path`] runs a depth-first search over simple paths
//! that keeps the best provider-maximizing route found so far and prunes
//! branches that cannot meet the time bound or that are dominated by an
//! earlier visit of the same intersection. [`shortest_social_path`] sweeps the
//! traffic-only shortest path segment by segment and splices in alternative
//! sub-routes while keeping the whole trip inside the budget.
//! [`brute_force_social_path`] is the exhaustive reference used by the tests.

use crate::cost::CostCounter;
use crate::road_net::{
    shortest_path_masked, time_to_destination, IntersectionId, Path, PathLabel, RoadError,
    RoadNetwork, SegmentId,
};
use std::cmp::Ordering;
use thiserror::Error;

/// Largest network the exhaustive oracle accepts.
pub const ORACLE_MAX_INTERSECTIONS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Road(#[from] RoadError),
    #[error("detour budget must be >= 0 seconds, got {0}")]
    InvalidBudget(f64),
    #[error("exhaustive search limited to {max} intersections, network has {nodes}")]
    TooLarge { nodes: usize, max: usize },
}

/// Allowed extra travel time over the traffic-only shortest path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetourBudget {
    epsilon_s: f64,
}

impl DetourBudget {
    pub fn new(epsilon_s: f64) -> Result<Self, PlanError> {
        if epsilon_s.is_nan() || epsilon_s < 0.0 {
            return Err(PlanError::InvalidBudget(epsilon_s));
        }
        Ok(Self { epsilon_s })
    }

    pub fn unlimited() -> Self {
        Self {
            epsilon_s: f64::INFINITY,
        }
    }

    pub fn seconds(&self) -> f64 {
        self.epsilon_s
    }
}

/// Bitset over dense intersection indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet(Vec<u64>);

impl NodeSet {
    pub fn with_capacity(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64).max(1)])
    }

    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

/// A visit of `node` by the search: arrival time, providers collected so far
/// and the set of intersections on the way there.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRecord {
    pub node: IntersectionId,
    pub best_time: f64,
    pub best_providers: u64,
    pub visited: NodeSet,
}

impl VisitRecord {
    /// A record prunes a later state at the same node when it arrived no
    /// later, with no fewer providers, through a subset of the intersections.
    /// Any simple continuation of the later state is then also a simple
    /// continuation of the record's path, so nothing reachable is lost.
    fn dominates(&self, time: f64, providers: u64, visited: &NodeSet) -> bool {
        self.best_time <= time && self.best_providers >= providers && self.visited.is_subset_of(visited)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub partial_path: Path,
    pub elapsed: f64,
    pub providers: u64,
}

/// Outcome of a planning query.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialPlan {
    pub path: Path,
    pub travel_time: f64,
    pub providers: u64,
    /// Search states generated while answering the query.
    pub expansions: u64,
}

type ProviderFn<'a> = Box<dyn Fn(SegmentId) -> u64 + 'a>;
type MaskFn<'a> = Box<dyn Fn(SegmentId) -> bool + 'a>;

/// Planner bound to one network snapshot.
///
/// Provider counts default to the snapshot's per-segment occupancy; a custom
/// weighting can be installed with [`SocialPlanner::with_provider_counts`].
/// Segments rejected by the mask are treated as absent.
pub struct SocialPlanner<'a> {
    net: &'a RoadNetwork,
    providers: ProviderFn<'a>,
    allowed: MaskFn<'a>,
    pub cost: CostCounter,
}

impl<'a> SocialPlanner<'a> {
    pub fn new(net: &'a RoadNetwork) -> Self {
        Self {
            net,
            providers: Box::new(move |s| net.occupancy(s).map_or(0, |o| o.providers as u64)),
            allowed: Box::new(|_| true),
            cost: CostCounter::default(),
        }
    }

    pub fn with_provider_counts(mut self, f: impl Fn(SegmentId) -> u64 + 'a) -> Self {
        self.providers = Box::new(f);
        self
    }

    pub fn with_mask(mut self, f: impl Fn(SegmentId) -> bool + 'a) -> Self {
        self.allowed = Box::new(f);
        self
    }

    pub fn shortest(&self, s: IntersectionId, d: IntersectionId) -> Result<Path, PlanError> {
        Ok(shortest_path_masked(self.net, s, d, &self.allowed)?)
    }

    pub fn path_providers(&self, path: &Path) -> u64 {
        path.segments().iter().map(|&s| (self.providers)(s)).sum()
    }

    /// Provider-maximizing simple path from `s` to `d` whose travel time stays
    /// within `budget` of the traffic-only shortest path.
    pub fn alternative(
        &mut self,
        s: IntersectionId,
        d: IntersectionId,
        budget: DetourBudget,
    ) -> Result<SocialPlan, PlanError> {
        let sh = self.shortest(s, d)?;
        let bound = self.net.travel_time(&sh)? + budget.seconds();
        self.alternative_within(s, d, bound)
    }

    /// Same search with an absolute travel-time bound.
    pub fn alternative_within(
        &mut self,
        s: IntersectionId,
        d: IntersectionId,
        bound: f64,
    ) -> Result<SocialPlan, PlanError> {
        let mut ctx = SearchContext::new(self, s, d, bound)?;
        if s != d {
            let root = SearchState {
                partial_path: Path::empty(s),
                elapsed: 0.0,
                providers: 0,
            };
            ctx.social_graph_pruning(&root)?;
        }
        let plan = ctx.finish();
        self.cost.search_expansions += plan.expansions;
        Ok(plan)
    }

    /// Segment-wise sweep over the shortest path (see module docs).
    pub fn shortest_social(
        &mut self,
        s: IntersectionId,
        d: IntersectionId,
        budget: DetourBudget,
    ) -> Result<SocialPlan, PlanError> {
        let net = self.net;
        let sh = self.shortest(s, d)?;
        let eps = budget.seconds();
        let nodes = sh.nodes(net);
        // prefix[i] = travel time of the shortest path up to nodes[i]
        let mut prefix = Vec::with_capacity(nodes.len());
        prefix.push(0.0);
        for (i, &seg) in sh.segments().iter().enumerate() {
            let wait = if i > 0 { net.signal_wait(nodes[i])? } else { 0.0 };
            prefix.push(prefix[i] + wait + net.segment(seg)?.base_travel_time_s);
        }

        let mut so = Path::empty(s);
        let mut so_time = 0.0;
        let mut expansions = 0;
        for (i, &sh_seg) in sh.segments().iter().enumerate() {
            let (n_cur, n_next) = (nodes[i], nodes[i + 1]);
            debug_assert_eq!(so.destination(), n_cur);
            let join_wait = if so.is_empty() { 0.0 } else { net.signal_wait(n_cur)? };

            let temp = self.alternative_within(n_cur, n_next, prefix[i + 1] + eps - so_time - join_wait)?;
            let partial = self.alternative_within(s, n_next, prefix[i + 1] + eps)?;
            expansions += temp.expansions + partial.expansions;
            let candidate = so.concat(&temp.path)?.erase_loops(net);
            let cand_time = net.travel_time(&candidate)?;

            so = if partial.travel_time - cand_time <= eps {
                if self.path_providers(&candidate) < partial.providers {
                    partial.path
                } else {
                    candidate
                }
            } else {
                let step = Path::from_segments(net, vec![sh_seg])?;
                so.concat(&step)?.erase_loops(net)
            };
            so_time = net.travel_time(&so)?;
        }
        Ok(SocialPlan {
            providers: self.path_providers(&so),
            travel_time: so_time,
            path: so,
            expansions,
        })
    }
}

/// Mutable state of one [`SocialPlanner::alternative_within`] query: the best
/// path so far and the visit records.
pub struct SearchContext<'p, 'a> {
    planner: &'p SocialPlanner<'a>,
    source: IntersectionId,
    dest: IntersectionId,
    dest_idx: usize,
    source_idx: usize,
    bound: f64,
    remaining: Vec<f64>,
    best: PathLabel,
    best_providers: u64,
    visits: Vec<Vec<VisitRecord>>,
    on_path: NodeSet,
    expansions: u64,
}

impl<'p, 'a> SearchContext<'p, 'a> {
    /// Seeds the incumbent with the traffic-only shortest path from `s` to `d`.
    pub fn new(
        planner: &'p SocialPlanner<'a>,
        s: IntersectionId,
        d: IntersectionId,
        bound: f64,
    ) -> Result<Self, PlanError> {
        let net = planner.net;
        let sh = planner.shortest(s, d)?;
        let sh_time = net.travel_time(&sh)?;
        let remaining = time_to_destination(net, d, &planner.allowed)?;
        let n = net.intersection_count();
        Ok(Self {
            planner,
            source: s,
            dest: d,
            dest_idx: net.index_of(d)?,
            source_idx: net.index_of(s)?,
            bound,
            remaining,
            best_providers: planner.path_providers(&sh),
            best: PathLabel {
                time: sh_time,
                nodes: sh.nodes(net),
                segments: sh.segments().to_vec(),
            },
            visits: vec![Vec::new(); n],
            on_path: NodeSet::with_capacity(n),
            expansions: 0,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    pub fn visit_records(&self, node: IntersectionId) -> &[VisitRecord] {
        self.planner
            .net
            .index_of(node)
            .map_or(&[], |i| self.visits[i].as_slice())
    }

    pub fn best(&self) -> (Path, f64, u64) {
        (
            Path::from_parts_unchecked(self.source, self.dest, self.best.segments.clone()),
            self.best.time,
            self.best_providers,
        )
    }

    /// Explores every simple continuation of `state` toward the destination,
    /// replacing the incumbent whenever a feasible arrival carries strictly
    /// more providers (equal counts fall back to the shortest-path order).
    pub fn social_graph_pruning(&mut self, state: &SearchState) -> Result<(), PlanError> {
        let net = self.planner.net;
        let mut nodes = state.partial_path.nodes(net);
        let mut segs = state.partial_path.segments().to_vec();
        if state.partial_path.source() != self.source {
            return Err(PlanError::Road(RoadError::InvalidPath(
                "search state does not start at the query source".into(),
            )));
        }
        self.on_path = NodeSet::with_capacity(net.intersection_count());
        for &n in &nodes {
            self.on_path.insert(net.index_of(n)?);
        }
        self.recurse(&mut nodes, &mut segs, state.elapsed, state.providers);
        Ok(())
    }

    fn recurse(&mut self, nodes: &mut Vec<IntersectionId>, segs: &mut Vec<SegmentId>, t: f64, so: u64) {
        let net = self.planner.net;
        self.expansions += 1;
        if t > self.bound {
            return;
        }
        let cur = *nodes.last().expect("non-empty node stack");
        let ci = net.index_of(cur).expect("node in network");
        if ci == self.dest_idx {
            let label = PathLabel {
                time: t,
                nodes: nodes.clone(),
                segments: segs.clone(),
            };
            let better = so > self.best_providers
                || (so == self.best_providers && label.compare(&self.best) == Ordering::Less);
            if better {
                self.best = label;
                self.best_providers = so;
            }
            return;
        }
        let records = &mut self.visits[ci];
        if records.iter().any(|r| r.dominates(t, so, &self.on_path)) {
            return;
        }
        let rec = VisitRecord {
            node: cur,
            best_time: t,
            best_providers: so,
            visited: self.on_path.clone(),
        };
        records.retain(|r| !rec.dominates(r.best_time, r.best_providers, &r.visited));
        records.push(rec);

        let wait = if ci == self.source_idx { 0.0 } else { net.wait_by_index(ci) };
        let slack = 1e-9 * self.bound.abs().max(1.0);
        for &s in net.outgoing_by_index(ci) {
            if !(self.planner.allowed)(s) {
                continue;
            }
            let seg = net.seg(s);
            let ni = net.index_of(seg.to).expect("segment head in network");
            if self.on_path.contains(ni) {
                continue;
            }
            let t_new = t + wait + seg.base_travel_time_s;
            let to_go = if ni == self.dest_idx {
                0.0
            } else {
                net.wait_by_index(ni) + self.remaining[ni]
            };
            if t_new + to_go > self.bound + slack {
                continue;
            }
            let so_new = so + (self.planner.providers)(s);
            nodes.push(seg.to);
            segs.push(s);
            self.on_path.insert(ni);
            self.recurse(nodes, segs, t_new, so_new);
            self.on_path.remove(ni);
            nodes.pop();
            segs.pop();
        }
    }

    pub fn finish(self) -> SocialPlan {
        SocialPlan {
            path: Path::from_parts_unchecked(self.source, self.dest, self.best.segments),
            travel_time: self.best.time,
            providers: self.best_providers,
            expansions: self.expansions,
        }
    }
}

pub fn alternative_social_path(
    network: &RoadNetwork,
    s: IntersectionId,
    d: IntersectionId,
    budget: DetourBudget,
) -> Result<Path, PlanError> {
    Ok(SocialPlanner::new(network).alternative(s, d, budget)?.path)
}

pub fn shortest_social_path(
    network: &RoadNetwork,
    source: IntersectionId,
    dest: IntersectionId,
    budget: DetourBudget,
) -> Result<Path, PlanError> {
    Ok(SocialPlanner::new(network).shortest_social(source, dest, budget)?.path)
}

/// Exhaustive reference: enumerates every simple `s -> d` path and returns the
/// provider maximum among those within the time bound, ties broken like
/// [`crate::road_net::shortest_path`].
pub fn brute_force_social_path(
    network: &RoadNetwork,
    s: IntersectionId,
    d: IntersectionId,
    budget: DetourBudget,
) -> Result<Path, PlanError> {
    Ok(brute_force_plan(network, s, d, budget)?.path)
}

/// [`brute_force_social_path`] with travel time, provider count and the number
/// of states the enumeration visited.
pub fn brute_force_plan(
    network: &RoadNetwork,
    s: IntersectionId,
    d: IntersectionId,
    budget: DetourBudget,
) -> Result<SocialPlan, PlanError> {
    let n = network.intersection_count();
    if n > ORACLE_MAX_INTERSECTIONS {
        return Err(PlanError::TooLarge {
            nodes: n,
            max: ORACLE_MAX_INTERSECTIONS,
        });
    }
    let sh = crate::road_net::shortest_path(network, s, d)?;
    let bound = network.travel_time(&sh)? + budget.seconds();
    let mut oracle = Exhaustive {
        net: network,
        dest: d,
        source: s,
        bound,
        best: None,
        expansions: 0,
        on_path: vec![false; n],
    };
    oracle.on_path[network.index_of(s)?] = true;
    oracle.walk(&mut vec![s], &mut Vec::new(), 0.0, 0);
    let (label, providers) = oracle
        .best
        .ok_or(PlanError::Road(RoadError::NoPath { from: s, to: d }))?;
    Ok(SocialPlan {
        path: Path::from_parts_unchecked(s, d, label.segments),
        travel_time: label.time,
        providers,
        expansions: oracle.expansions,
    })
}

struct Exhaustive<'a> {
    net: &'a RoadNetwork,
    source: IntersectionId,
    dest: IntersectionId,
    bound: f64,
    best: Option<(PathLabel, u64)>,
    expansions: u64,
    on_path: Vec<bool>,
}

impl Exhaustive<'_> {
    fn walk(&mut self, nodes: &mut Vec<IntersectionId>, segs: &mut Vec<SegmentId>, t: f64, so: u64) {
        self.expansions += 1;
        let cur = *nodes.last().unwrap();
        if cur == self.dest {
            if t <= self.bound {
                let label = PathLabel {
                    time: t,
                    nodes: nodes.clone(),
                    segments: segs.clone(),
                };
                let better = match &self.best {
                    None => true,
                    Some((b, bp)) => so > *bp || (so == *bp && label.compare(b) == Ordering::Less),
                };
                if better {
                    self.best = Some((label, so));
                }
            }
            return;
        }
        let wait = if cur == self.source {
            0.0
        } else {
            self.net.signal_wait(cur).unwrap()
        };
        let out: Vec<SegmentId> = self.net.outgoing(cur).unwrap().to_vec();
        for s in out {
            let seg = self.net.segment(s).unwrap();
            let ni = self.net.index_of(seg.to).unwrap();
            if self.on_path[ni] {
                continue;
            }
            let p = self.net.occupancy(s).unwrap().providers as u64;
            let (to, time) = (seg.to, t + wait + seg.base_travel_time_s);
            self.on_path[ni] = true;
            nodes.push(to);
            segs.push(s);
            self.walk(nodes, segs, time, so + p);
            segs.pop();
            nodes.pop();
            self.on_path[ni] = false;
        }
    }
}
