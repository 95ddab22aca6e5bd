use super::NodeId;
use std::collections::{HashMap, VecDeque};

/// Planar position in centimeters.
pub type Position = (i64, i64);

pub fn distance_cm(a: Position, b: Position) -> f64 {
    let dx = (a.0 - b.0) as f64;
    let dy = (a.1 - b.1) as f64;
    (dx * dx + dy * dy).sqrt()
}

fn dist2(a: Position, b: Position) -> i128 {
    let dx = (a.0 - b.0) as i128;
    let dy = (a.1 - b.1) as i128;
    dx * dx + dy * dy
}

/// Unit-disk connectivity snapshot: two nodes are linked iff they are within
/// range. Node order is the order given at construction and decides every
/// tie.
#[derive(Debug, Clone)]
pub struct RadioGraph {
    nodes: Vec<NodeId>,
    pos: Vec<Position>,
    index: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    component: Vec<usize>,
    range_cm: i64,
}

impl RadioGraph {
    pub fn new(nodes: &[(NodeId, Position)], range_m: f64) -> Self {
        let range_cm = (range_m * 100.0).round() as i64;
        let r2 = (range_cm as i128) * (range_cm as i128);
        let cell = range_cm.max(1);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &(_, p)) in nodes.iter().enumerate() {
            grid.entry((p.0.div_euclid(cell), p.1.div_euclid(cell))).or_default().push(i);
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (i, &(_, p)) in nodes.iter().enumerate() {
            let (cx, cy) = (p.0.div_euclid(cell), p.1.div_euclid(cell));
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(v) = grid.get(&(cx + dx, cy + dy)) {
                        for &j in v {
                            if j != i && dist2(p, nodes[j].1) <= r2 {
                                adj[i].push(j);
                            }
                        }
                    }
                }
            }
            adj[i].sort_unstable();
        }
        let mut component = vec![usize::MAX; nodes.len()];
        let mut next = 0;
        for s in 0..nodes.len() {
            if component[s] != usize::MAX {
                continue;
            }
            component[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if component[v] == usize::MAX {
                        component[v] = next;
                        q.push_back(v);
                    }
                }
            }
            next += 1;
        }
        Self {
            index: nodes.iter().enumerate().map(|(i, n)| (n.0, i)).collect(),
            pos: nodes.iter().map(|n| n.1).collect(),
            nodes: nodes.iter().map(|n| n.0).collect(),
            adj,
            component,
            range_cm,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, n: NodeId) -> Option<usize> {
        self.index.get(&n).copied()
    }

    pub fn node(&self, i: usize) -> NodeId {
        self.nodes[i]
    }

    pub fn position(&self, i: usize) -> Position {
        self.pos[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn in_range(&self, a: Position, b: Position) -> bool {
        dist2(a, b) <= (self.range_cm as i128) * (self.range_cm as i128)
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.component[a] == self.component[b]
    }

    /// Fewest-hop route from `a` to `b`, both endpoints included.
    pub fn route(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if !self.connected(a, b) {
            return None;
        }
        let mut prev = vec![usize::MAX; self.len()];
        prev[a] = a;
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            if u == b {
                break;
            }
            for &v in &self.adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Hop distance from `a` to every node (`u32::MAX` when unreachable).
    pub fn hops_from(&self, a: usize) -> Vec<u32> {
        let mut d = vec![u32::MAX; self.len()];
        d[a] = 0;
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if d[v] == u32::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        d
    }

    /// Neighbor strictly closer to `target` than `from` is, closest first.
    pub fn greedy_next(&self, from: usize, target: Position) -> Option<usize> {
        let here = dist2(self.pos[from], target);
        self.adj[from]
            .iter()
            .copied()
            .map(|j| (dist2(self.pos[j], target), j))
            .filter(|&(d, _)| d < here)
            .min()
            .map(|(_, j)| j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> RadioGraph {
        let v = NodeId::Vehicle;
        RadioGraph::new(
            &[(v(0), (0, 0)), (v(1), (40_000, 0)), (v(2), (80_000, 0)), (v(3), (200_000, 0))],
            450.0,
        )
    }

    #[test]
    fn unit_disk_links() {
        let g = line();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.neighbors(3).is_empty());
        assert!(g.in_range((0, 0), (45_000, 0)));
        assert!(!g.in_range((0, 0), (45_001, 0)));
    }

    #[test]
    fn routes_and_components() {
        let g = line();
        assert_eq!(g.route(0, 2), Some(vec![0, 1, 2]));
        assert_eq!(g.route(0, 3), None);
        assert_eq!(g.hops_from(0), vec![0, 1, 2, u32::MAX]);
        assert_eq!(g.greedy_next(0, (200_000, 0)), Some(1));
        assert_eq!(g.greedy_next(2, (200_000, 0)), None);
    }
}
