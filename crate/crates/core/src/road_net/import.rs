//! Plain-text edge list: one `from_id to_id length_m speed_mps` line per
//! segment, whitespace separated, `#` starts a comment. Intersections are
//! declared implicitly by the segments that reference them.
//!
//! An optional `node <id> <x_m> <y_m>` line pins an intersection position for
//! the radio model. Unpinned intersections are laid out on a square lattice in
//! id order with the median segment length as spacing.

use super::{Intersection, IntersectionId, RoadError, RoadNetwork, SignalCycle};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub fn parse_edge_list(text: &str) -> Result<RoadNetwork, RoadError> {
    let mut positions: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut edges: Vec<(usize, u32, u32, f64, f64)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let err = |message: String| RoadError::Parse { line, message };
        if toks[0] == "node" {
            if toks.len() != 4 {
                return Err(err(format!("expected `node id x y`, got {} fields", toks.len())));
            }
            let id = parse_id(toks[1]).map_err(err)?;
            let x = parse_num(toks[2], "x").map_err(err)?;
            let y = parse_num(toks[3], "y").map_err(err)?;
            positions.insert(id, (x, y));
            continue;
        }
        if toks.len() != 4 {
            return Err(err(format!(
                "expected `from_id to_id length_m speed_mps`, got {} fields",
                toks.len()
            )));
        }
        let from = parse_id(toks[0]).map_err(err)?;
        let to = parse_id(toks[1]).map_err(err)?;
        let length = parse_num(toks[2], "length").map_err(err)?;
        let speed = parse_num(toks[3], "speed").map_err(err)?;
        edges.push((line, from, to, length, speed));
    }

    let mut ids: Vec<u32> = edges.iter().flat_map(|e| [e.1, e.2]).collect();
    ids.extend(positions.keys().copied());
    ids.sort_unstable();
    ids.dedup();

    let spacing = median_length(&edges).unwrap_or(100.0);
    let side = (ids.len() as f64).sqrt().ceil().max(1.0) as usize;
    let mut net = RoadNetwork::new();
    for (k, &id) in ids.iter().enumerate() {
        let position = positions.get(&id).copied().unwrap_or_else(|| {
            ((k % side) as f64 * spacing, (k / side) as f64 * spacing)
        });
        net.add_intersection(Intersection {
            id: IntersectionId(id),
            position,
            signal: Some(SignalCycle::DEFAULT),
        })?;
    }
    for (line, from, to, length, speed) in edges {
        net.add_segment(IntersectionId(from), IntersectionId(to), length, speed, None)
            .map_err(|e| RoadError::Parse {
                line,
                message: e.to_string(),
            })?;
    }
    Ok(net)
}

pub fn read_edge_list(path: &std::path::Path) -> Result<RoadNetwork, RoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| RoadError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
}

/// Serializes a network (positions and segments) in the edge-list format.
/// Segment base travel times are not preserved; they are re-derived from
/// length and speed limit on import.
pub fn write_edge_list(net: &RoadNetwork) -> String {
    let mut out = String::from("# from_id to_id length_m speed_mps\n");
    for n in net.intersections() {
        let _ = writeln!(out, "node {} {} {}", n.id.0, n.position.0, n.position.1);
    }
    for s in net.segments_all() {
        let _ = writeln!(out, "{} {} {} {}", s.from.0, s.to.0, s.length_m, s.speed_limit_mps);
    }
    out
}

fn parse_id(tok: &str) -> Result<u32, String> {
    tok.parse::<u32>()
        .map_err(|_| format!("invalid intersection id `{tok}`"))
}

fn parse_num(tok: &str, what: &str) -> Result<f64, String> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("invalid {what} `{tok}`")),
    }
}

fn median_length(edges: &[(usize, u32, u32, f64, f64)]) -> Option<f64> {
    let mut lens: Vec<f64> = edges.iter().map(|e| e.3).filter(|l| *l > 0.0).collect();
    if lens.is_empty() {
        return None;
    }
    lens.sort_by(f64::total_cmp);
    Some(lens[lens.len() / 2])
}
