//! Road network substrate: intersections, directed road segments, paths,
//! per-segment occupancy and the static travel-time model.

mod grid;
mod import;
mod shortest;

pub use grid::{grid_network, GridSpec};
pub use import::{parse_edge_list, read_edge_list, write_edge_list};
pub use shortest::{shortest_path, shortest_path_masked, time_to_destination, PathLabel};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntersectionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentId(pub u32);

impl fmt::Display for IntersectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadError {
    #[error("unknown intersection {0}")]
    UnknownIntersection(IntersectionId),
    #[error("unknown segment {0}")]
    UnknownSegment(SegmentId),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("no path from {from} to {to}")]
    NoPath {
        from: IntersectionId,
        to: IntersectionId,
    },
    #[error("duplicate intersection {0}")]
    DuplicateIntersection(IntersectionId),
    #[error("invalid segment {from}->{to}: {reason}")]
    InvalidSegment {
        from: IntersectionId,
        to: IntersectionId,
        reason: String,
    },
    #[error("invalid signal cycle at {0}: green must be > 0 and red >= 0")]
    InvalidSignal(IntersectionId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// Fixed-time signal plan of an intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalCycle {
    pub green_s: f64,
    pub red_s: f64,
    #[serde(default)]
    pub phase_offset_s: f64,
}

impl SignalCycle {
    pub const DEFAULT: SignalCycle = SignalCycle {
        green_s: 30.0,
        red_s: 30.0,
        phase_offset_s: 0.0,
    };

    pub fn new(green_s: f64, red_s: f64, phase_offset_s: f64) -> Option<Self> {
        let ok = green_s.is_finite() && green_s > 0.0 && red_s.is_finite() && red_s >= 0.0;
        ok.then_some(Self {
            green_s,
            red_s,
            phase_offset_s,
        })
    }

    pub fn cycle_s(&self) -> f64 {
        self.green_s + self.red_s
    }

    /// Mean residual red time for a vehicle arriving uniformly over the cycle.
    pub fn expected_wait(&self) -> f64 {
        self.red_s * self.red_s / (2.0 * self.cycle_s())
    }

    /// Green iff the phase position `(t + offset) mod cycle` falls in `[0, green)`.
    pub fn is_green(&self, t_s: f64) -> bool {
        let c = self.cycle_s();
        let phase = (t_s + self.phase_offset_s).rem_euclid(c);
        phase < self.green_s
    }

    /// Seconds from `t_s` until the current red phase ends (0 when green).
    pub fn remaining_red(&self, t_s: f64) -> f64 {
        let c = self.cycle_s();
        let phase = (t_s + self.phase_offset_s).rem_euclid(c);
        if phase < self.green_s {
            0.0
        } else {
            c - phase
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: IntersectionId,
    /// Meters.
    pub position: (f64, f64),
    /// `None` means an uncontrolled junction with no expected wait.
    pub signal: Option<SignalCycle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: SegmentId,
    pub from: IntersectionId,
    pub to: IntersectionId,
    pub length_m: f64,
    pub speed_limit_mps: f64,
    pub base_travel_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOccupancy {
    pub consumers: u32,
    pub providers: u32,
    pub as_of_tick: u64,
}

/// A route through the network. The empty path sits at `source == destination`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    source: IntersectionId,
    destination: IntersectionId,
    segments: Vec<SegmentId>,
}

impl Path {
    pub fn empty(at: IntersectionId) -> Self {
        Self {
            source: at,
            destination: at,
            segments: Vec::new(),
        }
    }

    /// Builds a path from a segment sequence, checking that consecutive
    /// segments share an intersection. Repeated segments are rejected.
    pub fn from_segments(net: &RoadNetwork, segments: Vec<SegmentId>) -> Result<Self, RoadError> {
        let first = *segments
            .first()
            .ok_or_else(|| RoadError::InvalidPath("no segments".into()))?;
        let source = net.segment(first)?.from;
        let mut at = source;
        let mut seen = std::collections::HashSet::with_capacity(segments.len());
        for &s in &segments {
            let seg = net.segment(s)?;
            if seg.from != at {
                return Err(RoadError::InvalidPath(format!(
                    "segment {} starts at {} but path is at {}",
                    s, seg.from, at
                )));
            }
            if !seen.insert(s) {
                return Err(RoadError::InvalidPath(format!("segment {s} repeated")));
            }
            at = seg.to;
        }
        Ok(Self {
            source,
            destination: at,
            segments,
        })
    }

    /// Like [`Path::from_segments`] but allows repeated segments. Used for
    /// realized vehicle routes, which may revisit roads after a replan.
    pub fn walk(net: &RoadNetwork, source: IntersectionId, segments: Vec<SegmentId>) -> Result<Self, RoadError> {
        net.index_of(source)?;
        let mut at = source;
        for &s in &segments {
            let seg = net.segment(s)?;
            if seg.from != at {
                return Err(RoadError::InvalidPath(format!(
                    "segment {} starts at {} but path is at {}",
                    s, seg.from, at
                )));
            }
            at = seg.to;
        }
        Ok(Self {
            source,
            destination: at,
            segments,
        })
    }

    pub(crate) fn from_parts_unchecked(
        source: IntersectionId,
        destination: IntersectionId,
        segments: Vec<SegmentId>,
    ) -> Self {
        Self {
            source,
            destination,
            segments,
        }
    }

    pub fn source(&self) -> IntersectionId {
        self.source
    }

    pub fn destination(&self) -> IntersectionId {
        self.destination
    }

    pub fn segments(&self) -> &[SegmentId] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Intersection sequence `source, ..., destination`.
    pub fn nodes(&self, net: &RoadNetwork) -> Vec<IntersectionId> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(self.source);
        for &s in &self.segments {
            out.push(net.segments[s.0 as usize].to);
        }
        out
    }

    /// True when no intersection is visited twice.
    pub fn is_simple(&self, net: &RoadNetwork) -> bool {
        let nodes = self.nodes(net);
        let mut seen = std::collections::HashSet::with_capacity(nodes.len());
        nodes.into_iter().all(|n| seen.insert(n))
    }

    pub fn concat(&self, other: &Path) -> Result<Path, RoadError> {
        if self.destination != other.source {
            return Err(RoadError::InvalidPath(format!(
                "cannot join path ending at {} with path starting at {}",
                self.destination, other.source
            )));
        }
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        Ok(Path {
            source: self.source,
            destination: other.destination,
            segments,
        })
    }

    /// Prefix of the path ending at the first visit of `node`.
    pub fn prefix_to(&self, net: &RoadNetwork, node: IntersectionId) -> Option<Path> {
        if self.source == node {
            return Some(Path::empty(node));
        }
        let mut segs = Vec::new();
        for &s in &self.segments {
            segs.push(s);
            if net.segments[s.0 as usize].to == node {
                return Some(Path {
                    source: self.source,
                    destination: node,
                    segments: segs,
                });
            }
        }
        None
    }

    /// Removes cycles so that every intersection appears at most once,
    /// keeping the endpoints. Travel time never increases.
    pub fn erase_loops(&self, net: &RoadNetwork) -> Path {
        let mut nodes = vec![self.source];
        let mut segs: Vec<SegmentId> = Vec::new();
        for &s in &self.segments {
            let to = net.segments[s.0 as usize].to;
            if let Some(pos) = nodes.iter().position(|&n| n == to) {
                nodes.truncate(pos + 1);
                segs.truncate(pos);
            } else {
                nodes.push(to);
                segs.push(s);
            }
        }
        Path {
            source: self.source,
            destination: self.destination,
            segments: segs,
        }
    }
}

/// Time-weighted directed road graph with an occupancy snapshot.
///
/// Read-only queries take `&self`; occupancy updates need `&mut self` and are
/// performed by the simulation between query phases.
#[derive(Debug, Clone, Default)]
pub struct RoadNetwork {
    intersections: Vec<Intersection>,
    index: HashMap<IntersectionId, usize>,
    segments: Vec<RoadSegment>,
    outgoing: Vec<Vec<SegmentId>>,
    incoming: Vec<Vec<SegmentId>>,
    occupancy: Vec<SegmentOccupancy>,
}

impl RoadNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_intersection(&mut self, node: Intersection) -> Result<(), RoadError> {
        if self.index.contains_key(&node.id) {
            return Err(RoadError::DuplicateIntersection(node.id));
        }
        if let Some(sig) = node.signal {
            if SignalCycle::new(sig.green_s, sig.red_s, sig.phase_offset_s).is_none() {
                return Err(RoadError::InvalidSignal(node.id));
            }
        }
        self.index.insert(node.id, self.intersections.len());
        self.intersections.push(node);
        self.outgoing.push(Vec::new());
        self.incoming.push(Vec::new());
        Ok(())
    }

    /// Adds a directed segment. `base_travel_time_s` defaults to
    /// `length / speed_limit` and may not be smaller than that.
    pub fn add_segment(
        &mut self,
        from: IntersectionId,
        to: IntersectionId,
        length_m: f64,
        speed_limit_mps: f64,
        base_travel_time_s: Option<f64>,
    ) -> Result<SegmentId, RoadError> {
        let bad = |reason: &str| RoadError::InvalidSegment {
            from,
            to,
            reason: reason.to_string(),
        };
        let fi = self.index_of(from)?;
        let ti = self.index_of(to)?;
        if from == to {
            return Err(bad("self-loop"));
        }
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(bad("length must be > 0"));
        }
        if !(speed_limit_mps.is_finite() && speed_limit_mps > 0.0) {
            return Err(bad("speed limit must be > 0"));
        }
        let free_flow = length_m / speed_limit_mps;
        let base = base_travel_time_s.unwrap_or(free_flow);
        if !(base.is_finite() && base >= free_flow) {
            return Err(bad("base travel time below length / speed limit"));
        }
        let id = SegmentId(self.segments.len() as u32);
        self.segments.push(RoadSegment {
            id,
            from,
            to,
            length_m,
            speed_limit_mps,
            base_travel_time_s: base,
        });
        self.occupancy.push(SegmentOccupancy::default());
        self.outgoing[fi].push(id);
        self.incoming[ti].push(id);
        let segs = &self.segments;
        self.outgoing[fi].sort_by_key(|s| (segs[s.0 as usize].to, *s));
        self.incoming[ti].sort_by_key(|s| (segs[s.0 as usize].from, *s));
        Ok(id)
    }

    pub fn intersection_count(&self) -> usize {
        self.intersections.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn segments_all(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn intersection(&self, id: IntersectionId) -> Result<&Intersection, RoadError> {
        Ok(&self.intersections[self.index_of(id)?])
    }

    pub fn intersection_mut(&mut self, id: IntersectionId) -> Result<&mut Intersection, RoadError> {
        let i = self.index_of(id)?;
        Ok(&mut self.intersections[i])
    }

    pub fn contains(&self, id: IntersectionId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn segment(&self, id: SegmentId) -> Result<&RoadSegment, RoadError> {
        self.segments
            .get(id.0 as usize)
            .ok_or(RoadError::UnknownSegment(id))
    }

    /// Outgoing segments ordered by (head intersection id, segment id).
    pub fn outgoing(&self, id: IntersectionId) -> Result<&[SegmentId], RoadError> {
        Ok(&self.outgoing[self.index_of(id)?])
    }

    pub fn incoming(&self, id: IntersectionId) -> Result<&[SegmentId], RoadError> {
        Ok(&self.incoming[self.index_of(id)?])
    }

    pub fn max_out_degree(&self) -> usize {
        self.outgoing.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Dense index of an intersection (its insertion order), used by the
    /// array-backed distance maps.
    pub fn index_of(&self, id: IntersectionId) -> Result<usize, RoadError> {
        self.index
            .get(&id)
            .copied()
            .ok_or(RoadError::UnknownIntersection(id))
    }

    pub(crate) fn outgoing_by_index(&self, idx: usize) -> &[SegmentId] {
        &self.outgoing[idx]
    }

    pub(crate) fn incoming_by_index(&self, idx: usize) -> &[SegmentId] {
        &self.incoming[idx]
    }

    pub(crate) fn seg(&self, id: SegmentId) -> &RoadSegment {
        &self.segments[id.0 as usize]
    }

    /// Expected red-light wait when passing through `id`.
    pub fn signal_wait(&self, id: IntersectionId) -> Result<f64, RoadError> {
        Ok(self.wait_by_index(self.index_of(id)?))
    }

    pub(crate) fn wait_by_index(&self, idx: usize) -> f64 {
        self.intersections[idx]
            .signal
            .map_or(0.0, |s| s.expected_wait())
    }

    pub fn occupancy(&self, id: SegmentId) -> Result<SegmentOccupancy, RoadError> {
        self.occupancy
            .get(id.0 as usize)
            .copied()
            .ok_or(RoadError::UnknownSegment(id))
    }

    pub fn set_occupancy(&mut self, id: SegmentId, occ: SegmentOccupancy) -> Result<(), RoadError> {
        let slot = self
            .occupancy
            .get_mut(id.0 as usize)
            .ok_or(RoadError::UnknownSegment(id))?;
        *slot = occ;
        Ok(())
    }

    pub fn clear_occupancy(&mut self, tick: u64) {
        for o in &mut self.occupancy {
            *o = SegmentOccupancy {
                as_of_tick: tick,
                ..Default::default()
            };
        }
    }

    /// Σ base travel time + expected signal wait at each intermediate intersection.
    pub fn travel_time(&self, path: &Path) -> Result<f64, RoadError> {
        let mut at = path.source;
        self.index_of(at)?;
        let mut total = 0.0;
        for (i, &s) in path.segments.iter().enumerate() {
            let seg = self.segment(s)?;
            if seg.from != at {
                return Err(RoadError::InvalidPath(format!(
                    "segment {} does not start at {}",
                    s, at
                )));
            }
            if i > 0 {
                total += self.signal_wait(at)?;
            }
            total += seg.base_travel_time_s;
            at = seg.to;
        }
        if at != path.destination {
            return Err(RoadError::InvalidPath("destination mismatch".into()));
        }
        Ok(total)
    }

    /// Σ provider occupancy over the path's segments at the snapshot tick.
    pub fn providers_on_path(&self, path: &Path) -> u64 {
        path.segments
            .iter()
            .filter_map(|s| self.occupancy.get(s.0 as usize))
            .map(|o| o.providers as u64)
            .sum()
    }
}

/// Free function form of [`RoadNetwork::travel_time`].
pub fn travel_time(path: &Path, network: &RoadNetwork) -> Result<f64, RoadError> {
    network.travel_time(path)
}

/// Free function form of [`RoadNetwork::providers_on_path`].
pub fn providers_on_path(path: &Path, network: &RoadNetwork) -> u64 {
    network.providers_on_path(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, signal: Option<SignalCycle>) -> Intersection {
        Intersection {
            id: IntersectionId(id),
            position: (id as f64 * 100.0, 0.0),
            signal,
        }
    }

    #[test]
    fn single_segment_no_signal() {
        let mut net = RoadNetwork::new();
        net.add_intersection(node(1, None)).unwrap();
        net.add_intersection(node(2, None)).unwrap();
        let s = net
            .add_segment(IntersectionId(1), IntersectionId(2), 100.0, 10.0, None)
            .unwrap();
        let p = Path::from_segments(&net, vec![s]).unwrap();
        assert_eq!(net.travel_time(&p).unwrap(), 10.0);
    }

    #[test]
    fn empty_path_zero_time() {
        let mut net = RoadNetwork::new();
        net.add_intersection(node(1, None)).unwrap();
        assert_eq!(net.travel_time(&Path::empty(IntersectionId(1))).unwrap(), 0.0);
    }

    #[test]
    fn two_segments_with_signal_wait() {
        // red 20 / green 20 -> 400 / 80 = 5 s expected wait
        let mut net = RoadNetwork::new();
        net.add_intersection(node(1, None)).unwrap();
        net.add_intersection(node(2, SignalCycle::new(20.0, 20.0, 0.0))).unwrap();
        net.add_intersection(node(3, None)).unwrap();
        let a = net
            .add_segment(IntersectionId(1), IntersectionId(2), 100.0, 10.0, None)
            .unwrap();
        let b = net
            .add_segment(IntersectionId(2), IntersectionId(3), 150.0, 10.0, None)
            .unwrap();
        let p = Path::from_segments(&net, vec![a, b]).unwrap();
        assert_eq!(net.travel_time(&p).unwrap(), 30.0);
    }

    #[test]
    fn unknown_segment_is_invalid_path() {
        let mut net = RoadNetwork::new();
        net.add_intersection(node(1, None)).unwrap();
        let p = Path::from_parts_unchecked(IntersectionId(1), IntersectionId(1), vec![SegmentId(9)]);
        assert!(matches!(net.travel_time(&p), Err(RoadError::UnknownSegment(_))));
    }

    #[test]
    fn segment_invariants_enforced() {
        let mut net = RoadNetwork::new();
        net.add_intersection(node(1, None)).unwrap();
        net.add_intersection(node(2, None)).unwrap();
        let (a, b) = (IntersectionId(1), IntersectionId(2));
        assert!(net.add_segment(a, b, 0.0, 10.0, None).is_err());
        assert!(net.add_segment(a, b, 10.0, 0.0, None).is_err());
        assert!(net.add_segment(a, b, 100.0, 10.0, Some(5.0)).is_err());
        assert!(net.add_segment(a, a, 100.0, 10.0, None).is_err());
        assert!(net.add_segment(a, b, 100.0, 10.0, Some(12.0)).is_ok());
    }

    #[test]
    fn providers_counted_per_segment() {
        let mut net = RoadNetwork::new();
        for i in 1..=3 {
            net.add_intersection(node(i, None)).unwrap();
        }
        let a = net
            .add_segment(IntersectionId(1), IntersectionId(2), 100.0, 10.0, None)
            .unwrap();
        let b = net
            .add_segment(IntersectionId(2), IntersectionId(3), 100.0, 10.0, None)
            .unwrap();
        let p = Path::from_segments(&net, vec![a, b]).unwrap();
        assert_eq!(net.providers_on_path(&Path::empty(IntersectionId(1))), 0);
        let occ = |p| SegmentOccupancy {
            consumers: 0,
            providers: p,
            as_of_tick: 0,
        };
        net.set_occupancy(a, occ(2)).unwrap();
        net.set_occupancy(b, occ(3)).unwrap();
        assert_eq!(net.providers_on_path(&p), 5);
        net.set_occupancy(b, occ(2)).unwrap();
        assert_eq!(net.providers_on_path(&p), 4);
    }

    #[test]
    fn signal_phases() {
        let s = SignalCycle::new(30.0, 30.0, 0.0).unwrap();
        assert!(s.is_green(0.0));
        assert!(s.is_green(29.9));
        assert!(!s.is_green(30.0));
        assert_eq!(s.remaining_red(45.0), 15.0);
        assert_eq!(s.expected_wait(), 7.5);
        assert!(SignalCycle::new(0.0, 10.0, 0.0).is_none());
        assert!(SignalCycle::new(10.0, -1.0, 0.0).is_none());
    }

    #[test]
    fn erase_loops_keeps_endpoints() {
        let mut net = RoadNetwork::new();
        for i in 1..=3 {
            net.add_intersection(node(i, None)).unwrap();
        }
        let (a, b, c) = (IntersectionId(1), IntersectionId(2), IntersectionId(3));
        let ab = net.add_segment(a, b, 100.0, 10.0, None).unwrap();
        let ba = net.add_segment(b, a, 100.0, 10.0, None).unwrap();
        let ac = net.add_segment(a, c, 100.0, 10.0, None).unwrap();
        let w = Path::walk(&net, a, vec![ab, ba, ac]).unwrap();
        assert!(!w.is_simple(&net));
        let e = w.erase_loops(&net);
        assert_eq!(e.segments(), &[ac]);
        assert_eq!(e.destination(), c);
    }
}
