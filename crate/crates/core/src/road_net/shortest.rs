use super::{IntersectionId, Path, RoadError, RoadNetwork, SegmentId};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// A partial route as seen by the label-setting search.
///
/// Labels are totally ordered by (travel time, segment count, intersection-id
/// sequence, segment-id sequence), which is the deterministic tie-break used
/// for every shortest-path query in the crate.
#[derive(Debug, Clone)]
pub struct PathLabel {
    pub time: f64,
    pub nodes: Vec<IntersectionId>,
    pub segments: Vec<SegmentId>,
}

impl PathLabel {
    pub fn compare(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.segments.len().cmp(&other.segments.len()))
            .then_with(|| self.nodes.cmp(&other.nodes))
            .then_with(|| self.segments.cmp(&other.segments))
    }
}

impl PartialEq for PathLabel {
    fn eq(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }
}
impl Eq for PathLabel {}
impl PartialOrd for PathLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PathLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other)
    }
}

/// Traffic-only shortest path. Ties go to fewer segments, then to the
/// lexicographically smallest intersection-id sequence.
pub fn shortest_path(
    network: &RoadNetwork,
    source: IntersectionId,
    dest: IntersectionId,
) -> Result<Path, RoadError> {
    shortest_path_masked(network, source, dest, |_| true)
}

/// [`shortest_path`] restricted to segments for which `allowed` holds.
pub fn shortest_path_masked(
    network: &RoadNetwork,
    source: IntersectionId,
    dest: IntersectionId,
    allowed: impl Fn(SegmentId) -> bool,
) -> Result<Path, RoadError> {
    let si = network.index_of(source)?;
    let di = network.index_of(dest)?;
    if si == di {
        return Ok(Path::empty(source));
    }
    let n = network.intersection_count();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(PathLabel {
        time: 0.0,
        nodes: vec![source],
        segments: Vec::new(),
    }));
    while let Some(Reverse(label)) = heap.pop() {
        let at = *label.nodes.last().expect("label has a node");
        let ai = network.index_of(at)?;
        if settled[ai] {
            continue;
        }
        settled[ai] = true;
        if ai == di {
            return Ok(Path::from_parts_unchecked(source, dest, label.segments));
        }
        let wait = if ai == si { 0.0 } else { network.wait_by_index(ai) };
        for &s in network.outgoing_by_index(ai) {
            if !allowed(s) {
                continue;
            }
            let seg = network.seg(s);
            let ti = network.index_of(seg.to)?;
            if settled[ti] {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(seg.to);
            let mut segments = label.segments.clone();
            segments.push(s);
            heap.push(Reverse(PathLabel {
                time: label.time + wait + seg.base_travel_time_s,
                nodes,
                segments,
            }));
        }
    }
    Err(RoadError::NoPath {
        from: source,
        to: dest,
    })
}

/// Lower bound on remaining travel time from every intersection to `dest`,
/// indexed by dense intersection index. The value at a node excludes that
/// node's own signal wait; unreachable nodes get `f64::INFINITY`.
pub fn time_to_destination(
    network: &RoadNetwork,
    dest: IntersectionId,
    allowed: impl Fn(SegmentId) -> bool,
) -> Result<Vec<f64>, RoadError> {
    let di = network.index_of(dest)?;
    let n = network.intersection_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[di] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((OrdF64(0.0), di)));
    while let Some(Reverse((OrdF64(d), vi))) = heap.pop() {
        if done[vi] {
            continue;
        }
        done[vi] = true;
        let through = if vi == di {
            0.0
        } else {
            network.wait_by_index(vi) + d
        };
        for &s in network.incoming_by_index(vi) {
            if !allowed(s) {
                continue;
            }
            let seg = network.seg(s);
            let ui = network.index_of(seg.from)?;
            let cand = seg.base_travel_time_s + through;
            if cand < dist[ui] {
                dist[ui] = cand;
                heap.push(Reverse((OrdF64(cand), ui)));
            }
        }
    }
    Ok(dist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
