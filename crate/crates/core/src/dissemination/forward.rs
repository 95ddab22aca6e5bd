use super::{InterestPacket, MetaDataIndex, NodeId, Position, RadioGraph, Target, TargetKind};
use crate::content_embed::ContentId;

/// What the forwarding step needs to know about the world.
pub trait ForwardContext {
    fn stores(&self, node: NodeId, content: ContentId) -> bool;
    fn index_at(&self, node: NodeId) -> Option<&MetaDataIndex>;
    /// Stationary index vehicles and their positions.
    fn index_hosts(&self) -> &[(NodeId, Position)];
    fn rsus(&self) -> &[(NodeId, Position)];
    /// Best guess of where the requester is, from the path in the packet.
    fn requester_hint(&self, _packet: &InterestPacket) -> Option<Position> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forwarding {
    /// Hop budget exhausted.
    Drop,
    /// The holder has the item.
    Answer,
    /// The packet reached a roadside unit.
    AtRsu,
    /// Pass to this radio node (dense index), costing one hop.
    Hop(usize),
    /// No neighbor makes progress; the holder keeps the packet.
    StoreCarry,
}

fn nearest(from: Position, options: &[(NodeId, Position)]) -> Option<(NodeId, Position)> {
    options
        .iter()
        .copied()
        .min_by(|a, b| {
            super::distance_cm(from, a.1)
                .total_cmp(&super::distance_cm(from, b.1))
                .then(a.0.cmp(&b.0))
        })
}

/// One forwarding decision for `packet` at radio node `holder`. A neighbor
/// storing the item takes the packet directly. Index vehicles resolve the
/// item to the listed provider nearest the requester (or to the nearest RSU
/// on a miss);
/// other nodes pass the packet toward its current target, along a connected
/// route when one exists and greedily by position otherwise. Returns the
/// decision and whether an index table was consulted.
pub fn forward_interest(
    packet: &mut InterestPacket,
    holder: usize,
    radio: &RadioGraph,
    ctx: &impl ForwardContext,
) -> (Forwarding, bool) {
    let here = radio.node(holder);
    let here_pos = radio.position(holder);
    if packet.hop_count >= packet.ttl_hops {
        return (Forwarding::Drop, false);
    }
    if ctx.stores(here, packet.content) {
        return (Forwarding::Answer, false);
    }
    if matches!(here, NodeId::Rsu(_)) {
        return (Forwarding::AtRsu, false);
    }
    // the interest is heard by every neighbor; one that stores the item answers
    let holder_nearby = radio
        .neighbors(holder)
        .iter()
        .copied()
        .filter(|&j| ctx.stores(radio.node(j), packet.content))
        .min_by(|&a, &b| {
            super::distance_cm(here_pos, radio.position(a))
                .total_cmp(&super::distance_cm(here_pos, radio.position(b)))
                .then(radio.node(a).cmp(&radio.node(b)))
        });
    if let Some(j) = holder_nearby {
        return (Forwarding::Hop(j), false);
    }
    if let Some(t) = packet.target {
        if t.node == here && t.kind == TargetKind::Provider {
            packet.excluded.push(here);
            packet.target = None;
        }
    }

    let mut looked_up = false;
    let unresolved = packet.target.is_none_or(|t| t.kind == TargetKind::Index);
    if let (Some(idx), true) = (ctx.index_at(here), unresolved) {
        looked_up = true;
        let anchor = ctx.requester_hint(packet).unwrap_or(here_pos);
        let best = idx
            .lookup(packet.content)
            .into_iter()
            .filter(|e| !packet.excluded.contains(&e.provider) && e.provider != NodeId::Vehicle(packet.requester))
            .min_by(|a, b| {
                super::distance_cm(anchor, a.position)
                    .total_cmp(&super::distance_cm(anchor, b.position))
                    .then(a.provider.cmp(&b.provider))
            });
        packet.target = match best {
            Some(e) => Some(Target {
                kind: TargetKind::Provider,
                node: e.provider,
                position: e.position,
            }),
            None => nearest(here_pos, ctx.rsus()).map(|(node, position)| Target {
                kind: TargetKind::Rsu,
                node,
                position,
            }),
        };
        if packet.target.is_none() {
            // miss with no roadside unit to fall back on
            packet.target = Some(Target {
                kind: TargetKind::Index,
                node: here,
                position: here_pos,
            });
            return (Forwarding::StoreCarry, true);
        }
    }
    if packet.target.is_none() {
        packet.target = nearest(here_pos, ctx.index_hosts())
            .map(|(node, position)| Target {
                kind: TargetKind::Index,
                node,
                position,
            })
            .or_else(|| {
                nearest(here_pos, ctx.rsus()).map(|(node, position)| Target {
                    kind: TargetKind::Rsu,
                    node,
                    position,
                })
            });
    }
    let Some(target) = packet.target else {
        return (Forwarding::StoreCarry, looked_up);
    };
    if target.node == here {
        return (Forwarding::StoreCarry, looked_up);
    }
    let next = radio
        .index_of(target.node)
        .and_then(|t| radio.route(holder, t))
        .map(|r| r[1])
        .or_else(|| radio.greedy_next(holder, target.position));
    match next {
        Some(j) => (Forwarding::Hop(j), looked_up),
        None => (Forwarding::StoreCarry, looked_up),
    }
}
