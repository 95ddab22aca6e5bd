use super::events::{Event, EventKind};
use super::metrics::MetricsReport;
use super::scenario::{Policy, Scenario};
use super::{ContentEnv, SimError};
use crate::content_embed::{intersection_recommendation, ContentId, NearbyCatalog, SimilarityThreshold, Vehicle2Vec};
use crate::cost::CostCounter;
use crate::dissemination::{
    create_interest, distance_cm, forward_interest, transfer_step, ContentMessage, ForwardContext, Forwarding,
    InterestPacket, MetaDataIndex, NodeId, Position, ProviderCache, RadioGraph, Target, TargetKind,
};
use crate::provider_rl::{normalize_cd, reward, CurvePoint, DqnAgent, RlState, Transition};
use crate::road_net::{
    shortest_path, time_to_destination, IntersectionId, Path, RoadNetwork, SegmentId, SegmentOccupancy,
};
use crate::social_path::{DetourBudget, SocialPlanner};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

const STREAM_SETUP: u64 = 1;
const STREAM_TRIPS: u64 = 2 << 32;
const STREAM_REQUESTS: u64 = 3 << 32;
/// Replication orders wait this long for a provider to come into range.
const REPLICATION_PATIENCE_TICKS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Consumer,
    Provider,
    Metadata,
}

#[derive(Debug, Clone)]
struct Trip {
    id: u64,
    origin: IntersectionId,
    dest: IntersectionId,
    reference_s: f64,
    bound_s: f64,
    /// Static travel time of the route committed so far (RL providers).
    planned_s: f64,
    /// Remaining-time lower bounds toward `dest` (RL providers).
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Vehicle {
    id: u32,
    role: Role,
    route: Vec<SegmentId>,
    route_pos: usize,
    offset_cm: i64,
    /// Where the vehicle sits when it has no route.
    at: IntersectionId,
    pos: Position,
    trip: Option<Trip>,
    trip_rng: ChaCha8Rng,
    req_rng: ChaCha8Rng,
    stop_served: bool,
    pending: Option<(RlState, usize, f64)>,
    replan_epoch: u64,
    store: BTreeSet<ContentId>,
    wishlist: Vec<ContentId>,
    req_seq: u32,
    profile: Option<Vehicle2Vec>,
    cache: Option<ProviderCache>,
}

impl Vehicle {
    fn node(&self) -> NodeId {
        NodeId::Vehicle(self.id)
    }
}

#[derive(Debug, Clone)]
struct ActiveRequest {
    content: ContentId,
    requester: u32,
    created: u64,
    last_issue: u64,
    retries: u32,
    packet: Option<(InterestPacket, NodeId)>,
    fetch: Option<(NodeId, u64)>,
    message: Option<ContentMessage>,
    /// Node currently holding the whole payload.
    carrier: NodeId,
    /// Next node the payload is being sent to.
    link: Option<NodeId>,
    content_hops: u32,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<Event>,
    pub metrics: MetricsReport,
    pub cost: CostCounter,
    pub curve: Vec<CurvePoint>,
    pub agents: Vec<DqnAgent>,
}

struct Ctx<'a> {
    net: &'a RoadNetwork,
    node_cm: &'a [Position],
    vehicles: &'a [Vehicle],
    indexes: &'a BTreeMap<NodeId, MetaDataIndex>,
    hosts: &'a [(NodeId, Position)],
    rsus: &'a [(NodeId, Position)],
}

impl ForwardContext for Ctx<'_> {
    fn stores(&self, node: NodeId, content: ContentId) -> bool {
        match node {
            NodeId::Vehicle(v) => self.vehicles[v as usize].cache.as_ref().is_some_and(|c| c.contains(content)),
            NodeId::Rsu(_) => false,
        }
    }
    fn index_at(&self, node: NodeId) -> Option<&MetaDataIndex> {
        self.indexes.get(&node)
    }
    fn index_hosts(&self) -> &[(NodeId, Position)] {
        self.hosts
    }
    fn rsus(&self) -> &[(NodeId, Position)] {
        self.rsus
    }
    fn requester_hint(&self, packet: &InterestPacket) -> Option<Position> {
        let first = self.net.segment(*packet.requester_path.first()?).ok()?;
        Some(self.node_cm[self.net.index_of(first.to).ok()?])
    }
}

pub struct World {
    sc: Scenario,
    net: Arc<RoadNetwork>,
    env: Arc<ContentEnv>,
    tick: u64,
    tick_s: f64,
    vehicles: Vec<Vehicle>,
    consumers: usize,
    rsus: Vec<(NodeId, Position)>,
    hosts: Vec<(NodeId, Position)>,
    indexes: BTreeMap<NodeId, MetaDataIndex>,
    sizes: BTreeMap<ContentId, u64>,
    occupancy: Vec<SegmentOccupancy>,
    accidents_now: BTreeSet<u32>,
    accident_epoch: u64,
    requests: BTreeMap<u64, ActiveRequest>,
    replication: VecDeque<(NodeId, ContentId, u64)>,
    agents: Vec<DqnAgent>,
    curve: Vec<CurvePoint>,
    reward_sum: f64,
    reward_n: u64,
    cost: CostCounter,
    events: Vec<Event>,
    next_trip: u64,
    node_cm: Vec<Position>,
    seg_len_cm: Vec<i64>,
    seg_step_cm: Vec<i64>,
    radio: RadioGraph,
    component: Vec<usize>,
}

fn to_cm(p: (f64, f64)) -> Position {
    ((p.0 * 100.0).round() as i64, (p.1 * 100.0).round() as i64)
}

fn ms(s: f64) -> u64 {
    (s * 1000.0).round().max(0.0) as u64
}

fn components(radio: &RadioGraph) -> Vec<usize> {
    let mut comp = vec![usize::MAX; radio.len()];
    for start in 0..radio.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = start;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in radio.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = start;
                    stack.push(v);
                }
            }
        }
    }
    comp
}

/// Intersections spread by farthest-point selection from the most central one.
fn spread_intersections(net: &RoadNetwork, count: usize) -> Vec<IntersectionId> {
    let nodes = net.intersections();
    if nodes.is_empty() || count == 0 {
        return Vec::new();
    }
    let cx = nodes.iter().map(|n| n.position.0).sum::<f64>() / nodes.len() as f64;
    let cy = nodes.iter().map(|n| n.position.1).sum::<f64>() / nodes.len() as f64;
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let first = (0..nodes.len())
        .min_by(|&i, &j| d2(nodes[i].position, (cx, cy)).total_cmp(&d2(nodes[j].position, (cx, cy))).then(i.cmp(&j)))
        .unwrap();
    let mut chosen = vec![first];
    let mut best: Vec<f64> = nodes.iter().map(|n| d2(n.position, nodes[first].position)).collect();
    while chosen.len() < count.min(nodes.len()) {
        let next = (0..nodes.len())
            .max_by(|&i, &j| best[i].total_cmp(&best[j]).then(j.cmp(&i)))
            .unwrap();
        chosen.push(next);
        for (k, b) in best.iter_mut().enumerate() {
            *b = b.min(d2(nodes[k].position, nodes[next].position));
        }
    }
    chosen.into_iter().map(|i| nodes[i].id).collect()
}

impl World {
    pub fn new(sc: Scenario, net: Arc<RoadNetwork>, env: Arc<ContentEnv>) -> Result<Self, SimError> {
        let errs = sc.validate();
        if !errs.is_empty() {
            return Err(SimError::Invalid(errs));
        }
        if env.items.is_empty() {
            return Err(SimError::Setup("content catalog is empty".into()));
        }
        let tick_s = sc.tick_ms() as f64 / 1000.0;
        let d = &sc.dissemination;
        let rng_for = |stream: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(sc.rng_seed);
            r.set_stream(stream);
            r
        };
        let mut setup = rng_for(STREAM_SETUP);

        let sizes: BTreeMap<ContentId, u64> = env
            .items
            .iter()
            .map(|&c| (c, setup.gen_range(d.item_size_min_bytes..=d.item_size_max_bytes)))
            .collect();

        let node_cm: Vec<Position> = net.intersections().iter().map(|n| to_cm(n.position)).collect();
        let seg_len_cm: Vec<i64> = net
            .segments_all()
            .iter()
            .map(|s| ((s.length_m * 100.0).round() as i64).max(1))
            .collect();
        let seg_step_cm: Vec<i64> = net
            .segments_all()
            .iter()
            .map(|s| ((s.speed_limit_mps.min(sc.velocity_cap_mps) * 100.0 * tick_s).round() as i64).max(1))
            .collect();

        let consumers = sc.vehicles.consumers as usize;
        let providers = sc.vehicles.providers as usize;
        let hosts_at = spread_intersections(&net, d.metadata_vehicles as usize);
        let mut vehicles = Vec::new();
        let total = consumers + providers + hosts_at.len();
        for id in 0..total {
            let role = if id < consumers {
                Role::Consumer
            } else if id < consumers + providers {
                Role::Provider
            } else {
                Role::Metadata
            };
            let mut trip_rng = rng_for(STREAM_TRIPS | id as u64);
            let at = match role {
                Role::Metadata => hosts_at[id - consumers - providers],
                _ => net.intersections()[trip_rng.gen_range(0..net.intersection_count())].id,
            };
            let pos = node_cm[net.index_of(at).expect("known intersection")];
            vehicles.push(Vehicle {
                id: id as u32,
                role,
                route: Vec::new(),
                route_pos: 0,
                offset_cm: 0,
                at,
                pos,
                trip: None,
                trip_rng,
                req_rng: rng_for(STREAM_REQUESTS | id as u64),
                stop_served: false,
                pending: None,
                replan_epoch: 0,
                store: BTreeSet::new(),
                wishlist: Vec::new(),
                req_seq: 0,
                profile: None,
                cache: (role == Role::Provider).then(|| ProviderCache::new(id as u32, d.cache_capacity_bytes)),
            });
        }

        // consumer interests: two users' histories, the older half as profile
        for v in vehicles.iter_mut().filter(|v| v.role == Role::Consumer) {
            let mut past = Vec::new();
            for _ in 0..2 {
                let user = *env.users.choose(&mut setup).expect("log has users");
                let h = &env.histories[&user];
                let half = h.len() / 2;
                past.extend_from_slice(&h[..half]);
                v.wishlist.extend_from_slice(&h[half..]);
            }
            if v.wishlist.is_empty() {
                v.wishlist = past.clone();
            }
            v.profile = Some(Vehicle2Vec::from_history(&env.model, v.id, &past));
        }

        let rsus: Vec<(NodeId, Position)> = sc
            .rsus
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let seg = net.segment(SegmentId(r.segment)).expect("validated");
                let a = net.intersection(seg.from).unwrap().position;
                let b = net.intersection(seg.to).unwrap().position;
                let f = if seg.length_m > 0.0 { r.offset_m / seg.length_m } else { 0.0 };
                (NodeId::Rsu(i as u32), to_cm((a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)))
            })
            .collect();
        let hosts: Vec<(NodeId, Position)> = vehicles
            .iter()
            .filter(|v| v.role == Role::Metadata)
            .map(|v| (v.node(), v.pos))
            .collect();
        let indexes = hosts.iter().map(|&(n, p)| (n, MetaDataIndex::new(n, p))).collect();

        let agent_count = match (sc.policy, sc.dqn.shared) {
            (Policy::BaselineNoReroute, _) => 0,
            (Policy::Vesonet, true) => 1,
            (Policy::Vesonet, false) => providers,
        };
        let mut agents = Vec::with_capacity(agent_count);
        for k in 0..agent_count {
            let mut cfg = sc.dqn.clone();
            cfg.rng_seed = cfg.rng_seed.wrapping_mul(1_000_003).wrapping_add(sc.rng_seed).wrapping_add(k as u64);
            agents.push(DqnAgent::new(cfg).map_err(|e| SimError::Setup(e.to_string()))?);
        }

        let mut world = Self {
            tick_s,
            net: net.clone(),
            env,
            tick: 0,
            vehicles,
            consumers,
            rsus,
            hosts,
            indexes,
            sizes,
            occupancy: vec![SegmentOccupancy::default(); net.segment_count()],
            accidents_now: BTreeSet::new(),
            accident_epoch: 0,
            requests: BTreeMap::new(),
            replication: VecDeque::new(),
            agents,
            curve: Vec::new(),
            reward_sum: 0.0,
            reward_n: 0,
            cost: CostCounter::default(),
            events: Vec::new(),
            next_trip: 0,
            node_cm,
            seg_len_cm,
            seg_step_cm,
            radio: RadioGraph::new(&[], 1.0),
            component: Vec::new(),
            sc,
        };
        world.setup(&mut setup);
        Ok(world)
    }

    fn vesonet(&self) -> bool {
        self.sc.policy == Policy::Vesonet
    }

    fn log(&mut self, e: Event) {
        self.events.push(e);
    }

    fn now_s(&self) -> f64 {
        self.tick as f64 * self.tick_s
    }

    fn setup(&mut self, rng: &mut ChaCha8Rng) {
        let d = self.sc.dissemination.clone();
        self.log(
            Event::new(0, EventKind::RunStart)
                .from_label(self.sc.policy.name())
                .request(ms(self.sc.epsilon_s))
                .hops(d.ttl_hops)
                .bytes(self.sc.tick_ms()),
        );
        let warm = match self.sc.policy {
            Policy::Vesonet => d.warm_caches,
            Policy::BaselineNoReroute => d.baseline_warm_caches,
        };
        let weights: Vec<u64> = self.env.items.iter().map(|c| self.env.popularity[c]).collect();
        let pick = WeightedIndex::new(&weights).expect("positive popularity");
        for vi in 0..self.vehicles.len() {
            if self.vehicles[vi].role != Role::Provider {
                continue;
            }
            let node = self.vehicles[vi].node();
            self.log(Event::new(0, EventKind::CacheCapacity).to(node).bytes(d.cache_capacity_bytes));
            if !warm {
                continue;
            }
            for _ in 0..4 * self.env.items.len() {
                let c = self.env.items[pick.sample(rng)];
                let size = self.sizes[&c];
                let cache = self.vehicles[vi].cache.as_mut().unwrap();
                if cache.capacity() - cache.used() < d.item_size_min_bytes {
                    break;
                }
                if cache.contains(c) || cache.used() + size > cache.capacity() {
                    continue;
                }
                cache.insert(c, size).expect("fits");
                let used = cache.used();
                self.log(Event::new(0, EventKind::CacheInit).content(c).to(node).bytes(used));
            }
        }
        self.update_accidents();
        // providers first so consumers plan against their routes
        for vi in self.consumers..self.vehicles.len() {
            if self.vehicles[vi].role == Role::Provider {
                self.start_trip(vi);
            }
        }
        self.refresh_positions();
        self.snapshot_occupancy();
        for vi in 0..self.consumers {
            self.start_trip(vi);
        }
        self.refresh_positions();
        self.snapshot_occupancy();
        self.rebuild_radio();
    }

    fn accident_blocked(&self, s: SegmentId) -> bool {
        self.accidents_now.contains(&s.0)
    }

    fn update_accidents(&mut self) {
        let now: BTreeSet<u32> = self
            .sc
            .accidents
            .iter()
            .filter(|a| a.active(self.tick))
            .map(|a| a.segment)
            .collect();
        if now != self.accidents_now {
            self.accidents_now = now;
            self.accident_epoch += 1;
        }
    }

    fn cd(&self, s: SegmentId) -> f64 {
        let o = self.occupancy[s.0 as usize];
        normalize_cd(o.consumers as f64 - o.providers as f64, self.sc.dqn.cd_scale)
    }

    // ---- trips and routing ----

    fn draw_destination(&mut self, vi: usize, origin: IntersectionId) -> Option<IntersectionId> {
        let n = self.net.intersection_count();
        for _ in 0..16 {
            let d = self.net.intersections()[self.vehicles[vi].trip_rng.gen_range(0..n)].id;
            if d != origin && shortest_path(&self.net, origin, d).is_ok() {
                return Some(d);
            }
        }
        None
    }

    fn start_trip(&mut self, vi: usize) {
        let origin = self.vehicles[vi].at;
        let v = &mut self.vehicles[vi];
        v.route.clear();
        v.route_pos = 0;
        v.offset_cm = 0;
        v.trip = None;
        v.stop_served = false;
        let Some(dest) = self.draw_destination(vi, origin) else {
            return;
        };
        let sh = shortest_path(&self.net, origin, dest).expect("destination reachable");
        let reference_s = self.net.travel_time(&sh).expect("valid path");
        let id = self.next_trip;
        self.next_trip += 1;
        let role = self.vehicles[vi].role;
        let mut trip = Trip {
            id,
            origin,
            dest,
            reference_s,
            bound_s: reference_s + self.sc.epsilon_s,
            planned_s: 0.0,
            h: Vec::new(),
        };
        match (role, self.sc.policy) {
            (Role::Consumer, Policy::Vesonet) => {
                let route = self.plan_consumer(origin, dest, trip.bound_s).unwrap_or_else(|| sh.segments().to_vec());
                self.vehicles[vi].route = route;
            }
            (Role::Provider, Policy::Vesonet) => {
                trip.h = time_to_destination(&self.net, dest, |_| true).expect("known destination");
            }
            _ => self.vehicles[vi].route = sh.segments().to_vec(),
        }
        self.vehicles[vi].trip = Some(trip);
        if role == Role::Consumer {
            let v = &self.vehicles[vi];
            let ev = Event::new(self.tick, EventKind::TripStart)
                .request(id)
                .from(v.node())
                .hops(v.route.len() as u32)
                .bytes(ms(reference_s));
            self.log(ev);
        } else if role == Role::Provider && self.vesonet() {
            self.decide(vi);
        }
    }

    /// Social route from `origin` to `dest` with travel time at most `bound`,
    /// avoiding halted segments when that fits the bound.
    fn plan_consumer(&mut self, origin: IntersectionId, dest: IntersectionId, bound: f64) -> Option<Vec<SegmentId>> {
        let net = self.net.clone();
        let occ = &self.occupancy;
        let blocked = self.accidents_now.clone();
        let counts = |s: SegmentId| occ[s.0 as usize].providers as u64;
        let mut masked = SocialPlanner::new(&net)
            .with_provider_counts(counts)
            .with_mask(move |s| !blocked.contains(&s.0));
        let mut plan = None;
        if let Ok(p) = masked.shortest(origin, dest) {
            let t = net.travel_time(&p).ok()?;
            if t <= bound {
                let budget = DetourBudget::new((bound - t).max(0.0)).ok()?;
                plan = masked.shortest_social(origin, dest, budget).ok();
            }
        }
        let mut spent = masked.cost;
        if plan.is_none() {
            let mut open = SocialPlanner::new(&net).with_provider_counts(counts);
            let t = net.travel_time(&open.shortest(origin, dest).ok()?).ok()?;
            let budget = DetourBudget::new((bound - t).max(0.0)).ok()?;
            plan = open.shortest_social(origin, dest, budget).ok();
            spent += open.cost;
        }
        self.cost += spent;
        plan.map(|p| p.path.segments().to_vec())
    }

    fn end_trip(&mut self, vi: usize) {
        let Some(trip) = self.vehicles[vi].trip.take() else {
            return;
        };
        let role = self.vehicles[vi].role;
        if role == Role::Consumer {
            let route = self.vehicles[vi].route.clone();
            let hops = route.len() as u32;
            let realized = Path::walk(&self.net, trip.origin, route)
                .and_then(|p| self.net.travel_time(&p))
                .expect("realized route is a walk");
            let ev = Event::new(self.tick, EventKind::TripEnd)
                .request(trip.id)
                .from(self.vehicles[vi].node())
                .hops(hops)
                .bytes(ms(realized));
            self.log(ev);
        }
        if let Some((s_o, a_o, r)) = self.vehicles[vi].pending.take() {
            let t = Transition {
                s_n: s_o.clone(),
                s_o,
                a_o,
                r,
                terminal: true,
            };
            self.learn(vi, t);
        }
        self.vehicles[vi].at = trip.dest;
        self.start_trip(vi);
    }

    fn agent_of(&self, vi: usize) -> usize {
        if self.sc.dqn.shared {
            0
        } else {
            vi - self.consumers
        }
    }

    fn learn(&mut self, vi: usize, t: Transition) {
        let k = self.agent_of(vi);
        self.reward_sum += t.r;
        self.reward_n += 1;
        let batch = self.sc.dqn.batch_size as u64;
        let agent = &mut self.agents[k];
        agent.observe(t);
        if let Some(loss) = agent.train_step() {
            // online forward, target forward, backward per sample
            self.cost.net_passes += 3 * batch;
            let point = CurvePoint {
                step: agent.updates(),
                loss,
                epsilon: agent.epsilon(),
                mean_reward: self.reward_sum / self.reward_n as f64,
            };
            self.curve.push(point);
        }
    }

    /// Chooses the next segment of an RL provider standing at the end of its
    /// committed route.
    fn decide(&mut self, vi: usize) {
        let net = self.net.clone();
        let v = &self.vehicles[vi];
        let Some(trip) = v.trip.clone() else { return };
        let trip = &trip;
        let first = v.route.is_empty();
        let node = match v.route.last() {
            Some(&s) => net.segment(s).unwrap().to,
            None => trip.origin,
        };
        if node == trip.dest {
            return;
        }
        let wait_here = if first { 0.0 } else { net.signal_wait(node).unwrap() };
        let k = self.sc.dqn.slots;
        let outs: Vec<SegmentId> = net.outgoing(node).unwrap().iter().copied().take(k).collect();
        if outs.is_empty() {
            return;
        }
        let h = &trip.h;
        let hi = |n: IntersectionId| h[net.index_of(n).unwrap()];
        let tail = |s: SegmentId| {
            let seg = net.segment(s).unwrap();
            let rest = if seg.to == trip.dest {
                0.0
            } else {
                net.signal_wait(seg.to).unwrap() + hi(seg.to)
            };
            seg.base_travel_time_s + rest
        };
        let slots: Vec<(f64, bool)> = outs
            .iter()
            .map(|&s| {
                let total = trip.planned_s + wait_here + tail(s);
                let ok = total.is_finite() && total <= trip.bound_s + 1e-9 && !self.accident_blocked(s);
                (self.cd(s), ok)
            })
            .collect();
        let eps = self.sc.epsilon_s.max(1.0);
        let slack = (trip.bound_s - (trip.planned_s + wait_here + hi(node))) / eps;
        let distance = hi(node) / trip.reference_s.max(1.0);
        let state = RlState::new(&slots, k, slack.clamp(0.0, 1.0), distance.clamp(0.0, 1.0)).expect("finite features");
        let current_cd = v.route.last().map_or(0.0, |&s| self.cd(s));

        if let Some((s_o, a_o, r)) = self.vehicles[vi].pending.take() {
            self.learn(
                vi,
                Transition {
                    s_o,
                    a_o,
                    r,
                    s_n: state.clone(),
                    terminal: false,
                },
            );
        }
        let chosen = if state.has_feasible() {
            let ai = self.agent_of(vi);
            let a = self.agents[ai].act(&state).expect("feasible action exists");
            self.cost.net_passes += 1;
            let r = reward(current_cd, slots[a].0, self.sc.dqn.reward_mode);
            self.vehicles[vi].pending = Some((state, a, r));
            let ev = Event::new(self.tick, EventKind::Decide)
                .from(NodeId::Vehicle(vi as u32))
                .hops(a as u32);
            self.log(ev);
            outs[a]
        } else {
            *outs.iter().min_by(|a, b| tail(**a).total_cmp(&tail(**b))).unwrap()
        };
        let v = &mut self.vehicles[vi];
        let trip = v.trip.as_mut().unwrap();
        trip.planned_s += wait_here + net.segment(chosen).unwrap().base_travel_time_s;
        v.route.push(chosen);
    }

    // ---- per-tick phases ----

    pub fn step(&mut self) {
        self.update_accidents();
        self.motion();
        self.refresh_positions();
        self.snapshot_occupancy();
        self.rebuild_radio();
        self.reports();
        self.requests_phase();
        self.transfers();
        if self.vesonet() {
            self.replicate();
            self.recommend();
            self.provider_decisions();
            self.replan();
        }
        self.tick += 1;
    }

    fn motion(&mut self) {
        let t_s = self.now_s();
        let net = self.net.clone();
        let mut arrived = Vec::new();
        for vi in 0..self.vehicles.len() {
            let blocked = &self.accidents_now;
            let v = &mut self.vehicles[vi];
            if v.role == Role::Metadata || v.route.is_empty() || v.route_pos >= v.route.len() {
                continue;
            }
            let mut seg = v.route[v.route_pos];
            if blocked.contains(&seg.0) {
                continue;
            }
            if v.offset_cm >= self.seg_len_cm[seg.0 as usize] {
                if v.route_pos + 1 >= v.route.len() {
                    continue;
                }
                let node = net.segment(seg).unwrap().to;
                let green = net.intersection(node).unwrap().signal.is_none_or(|s| s.is_green(t_s));
                if !green {
                    continue;
                }
                v.route_pos += 1;
                v.offset_cm = 0;
                v.stop_served = false;
                seg = v.route[v.route_pos];
                if blocked.contains(&seg.0) {
                    continue;
                }
            }
            let len = self.seg_len_cm[seg.0 as usize];
            v.offset_cm = (v.offset_cm + self.seg_step_cm[seg.0 as usize]).min(len);
            if v.offset_cm == len && v.route_pos + 1 == v.route.len() {
                let dest = v.trip.as_ref().map(|t| t.dest);
                if Some(net.segment(seg).unwrap().to) == dest {
                    arrived.push(vi);
                }
            }
        }
        for vi in arrived {
            self.end_trip(vi);
        }
    }

    fn refresh_positions(&mut self) {
        let net = &self.net;
        for v in &mut self.vehicles {
            v.pos = match v.route.get(v.route_pos) {
                Some(&s) if v.role != Role::Metadata => {
                    let seg = net.segment(s).unwrap();
                    let a = self.node_cm[net.index_of(seg.from).unwrap()];
                    let b = self.node_cm[net.index_of(seg.to).unwrap()];
                    let len = self.seg_len_cm[s.0 as usize] as i128;
                    let off = v.offset_cm as i128;
                    let lerp = |p: i64, q: i64| p + ((q - p) as i128 * off / len) as i64;
                    (lerp(a.0, b.0), lerp(a.1, b.1))
                }
                _ => self.node_cm[net.index_of(v.at).unwrap()],
            };
        }
    }

    fn snapshot_occupancy(&mut self) {
        for o in &mut self.occupancy {
            *o = SegmentOccupancy {
                as_of_tick: self.tick,
                ..Default::default()
            };
        }
        for v in &self.vehicles {
            if let Some(&s) = v.route.get(v.route_pos) {
                let o = &mut self.occupancy[s.0 as usize];
                match v.role {
                    Role::Consumer => o.consumers += 1,
                    Role::Provider => o.providers += 1,
                    Role::Metadata => {}
                }
            }
        }
    }

    fn rebuild_radio(&mut self) {
        let mut nodes: Vec<(NodeId, Position)> = self.vehicles.iter().map(|v| (v.node(), v.pos)).collect();
        nodes.extend_from_slice(&self.rsus);
        self.radio = RadioGraph::new(&nodes, self.sc.dissemination.radio_range_m);
        self.component = components(&self.radio);
    }

    fn radio_index(&self, n: NodeId) -> usize {
        self.radio.index_of(n).expect("every node is on the radio graph")
    }

    /// Remaining expected route of a provider from its current segment.
    fn expected_path(&self, v: &Vehicle) -> Vec<SegmentId> {
        let mut path: Vec<SegmentId> = v.route.get(v.route_pos..).map(<[_]>::to_vec).unwrap_or_default();
        if let (Some(trip), Some(&last)) = (v.trip.as_ref(), path.last()) {
            let end = self.net.segment(last).unwrap().to;
            if end != trip.dest {
                if let Ok(p) = shortest_path(&self.net, end, trip.dest) {
                    path.extend_from_slice(p.segments());
                }
            }
        }
        path
    }

    fn reports(&mut self) {
        let d = &self.sc.dissemination;
        if !self.tick.is_multiple_of(d.report_period_ticks) {
            return;
        }
        let horizon = d.report_period_ticks * d.stale_periods;
        let mut reports = Vec::new();
        for v in self.vehicles.iter().filter(|v| v.role == Role::Provider) {
            let comp = self.component[self.radio_index(v.node())];
            let items: Vec<ContentId> = v.cache.as_ref().unwrap().items().collect();
            let path = self.expected_path(v);
            for &(host, _) in &self.hosts {
                if self.component[self.radio_index(host)] == comp {
                    reports.push((host, v.node(), items.clone(), v.pos, path.clone()));
                }
            }
        }
        for (host, provider, items, pos, path) in reports {
            self.indexes.get_mut(&host).unwrap().report(provider, &items, pos, &path, self.tick);
        }
        for idx in self.indexes.values_mut() {
            idx.purge(self.tick, horizon);
        }
    }

    fn requests_phase(&mut self) {
        let tick = self.tick;
        let d = self.sc.dissemination.clone();
        let retry_ticks = (d.retry_interval_s / self.tick_s).ceil() as u64;
        let deadline = retry_ticks * (d.max_retries as u64 + 1);

        let expired: Vec<u64> = self
            .requests
            .iter()
            .filter(|(_, r)| tick - r.created >= deadline)
            .map(|(&id, _)| id)
            .collect();
        for id in expired {
            let r = self.requests.remove(&id).unwrap();
            self.log(
                Event::new(tick, EventKind::Fail)
                    .request(id)
                    .content(r.content)
                    .to(NodeId::Vehicle(r.requester)),
            );
        }

        let mut retried = Vec::new();
        for (&id, r) in self.requests.iter_mut() {
            if r.message.is_none() && r.fetch.is_none() && tick - r.last_issue >= retry_ticks && r.retries < d.max_retries
            {
                r.retries += 1;
                r.last_issue = tick;
                let requester = self.vehicles[r.requester as usize].node();
                let pkt = InterestPacket {
                    request_id: id,
                    content: r.content,
                    requester: r.requester,
                    requester_path: remaining_route(&self.vehicles[r.requester as usize]),
                    created_tick: r.created,
                    hop_count: 0,
                    ttl_hops: d.ttl_hops,
                    target: None,
                    excluded: Vec::new(),
                };
                r.packet = Some((pkt, requester));
                retried.push(Event::new(tick, EventKind::InterestRetry).request(id).content(r.content).from(requester).hops(r.retries));
            }
        }
        self.events.extend(retried);

        if tick + deadline <= self.sc.run_length {
            for vi in 0..self.consumers {
                let v = &mut self.vehicles[vi];
                if v.req_rng.gen::<f64>() >= self.sc.request_rate {
                    continue;
                }
                let content = *v.wishlist.choose(&mut v.req_rng).expect("wishlist non-empty");
                let held = v.store.contains(&content);
                match create_interest(v.id, v.req_seq, content, tick, held, &remaining_route(v), d.ttl_hops) {
                    Err(hit) => {
                        let ev = Event::new(tick, EventKind::LocalHit).content(hit.content).from(v.node());
                        self.log(ev);
                    }
                    Ok(mut pkt) => {
                        v.req_seq += 1;
                        let node = v.node();
                        let id = pkt.request_id;
                        if d.flood {
                            pkt.target = self.flood_target(node, content);
                        }
                        self.requests.insert(
                            id,
                            ActiveRequest {
                                content,
                                requester: node_vehicle(node),
                                created: tick,
                                last_issue: tick,
                                retries: 0,
                                packet: Some((pkt, node)),
                                fetch: None,
                                message: None,
                                carrier: node,
                                link: None,
                                content_hops: 0,
                            },
                        );
                        self.log(Event::new(tick, EventKind::Request).request(id).content(content).from(node));
                    }
                }
            }
        }

        self.forward_all();

        let ready: Vec<u64> = self
            .requests
            .iter()
            .filter(|(_, r)| r.fetch.is_some_and(|(_, t)| t <= tick))
            .map(|(&id, _)| id)
            .collect();
        for id in ready {
            let r = self.requests.get_mut(&id).unwrap();
            let (rsu, _) = r.fetch.take().unwrap();
            let size = self.sizes[&r.content];
            r.message = Some(ContentMessage::new(id, r.content, size, rsu));
            r.carrier = rsu;
            r.link = None;
            r.content_hops = 0;
            if self.sc.policy == Policy::Vesonet {
                self.replication.push_back((rsu, r.content, tick));
            }
        }
    }

    fn flood_target(&self, from: NodeId, content: ContentId) -> Option<Target> {
        let here = self.radio_index(from);
        let pos = self.radio.position(here);
        self.vehicles
            .iter()
            .filter(|v| v.cache.as_ref().is_some_and(|c| c.contains(content)))
            .filter(|v| self.component[self.radio_index(v.node())] == self.component[here])
            .min_by(|a, b| distance_cm(pos, a.pos).total_cmp(&distance_cm(pos, b.pos)).then(a.id.cmp(&b.id)))
            .map(|v| Target {
                kind: TargetKind::Provider,
                node: v.node(),
                position: v.pos,
            })
    }

    fn forward_all(&mut self) {
        let tick = self.tick;
        let mut requests = std::mem::take(&mut self.requests);
        let mut events = Vec::new();
        for (&id, r) in requests.iter_mut() {
            let Some((mut pkt, holder_node)) = r.packet.take() else {
                continue;
            };
            let ctx = Ctx {
                net: &self.net,
                node_cm: &self.node_cm,
                vehicles: &self.vehicles,
                indexes: &self.indexes,
                hosts: &self.hosts,
                rsus: &self.rsus,
            };
            let mut holder = self.radio_index(holder_node);
            let mut keep = true;
            for _ in 0..=pkt.ttl_hops + 1 {
                let (step, looked_up) = forward_interest(&mut pkt, holder, &self.radio, &ctx);
                let here = self.radio.node(holder);
                if looked_up {
                    self.cost.index_lookups += 1;
                    let e = match pkt.target {
                        Some(t) if t.kind == TargetKind::Provider => {
                            Event::new(tick, EventKind::IndexHit).to(t.node)
                        }
                        _ => Event::new(tick, EventKind::IndexMiss),
                    };
                    events.push(e.request(id).content(r.content).from(here));
                }
                match step {
                    Forwarding::Hop(j) => {
                        pkt.hop_count += 1;
                        events.push(
                            Event::new(tick, EventKind::InterestForward)
                                .request(id)
                                .content(r.content)
                                .from(here)
                                .to(self.radio.node(j))
                                .hops(pkt.hop_count),
                        );
                        holder = j;
                    }
                    Forwarding::Answer => {
                        let size = self.sizes[&r.content];
                        r.message = Some(ContentMessage::new(id, r.content, size, here));
                        r.carrier = here;
                        r.link = None;
                        r.content_hops = 0;
                        keep = false;
                        break;
                    }
                    Forwarding::AtRsu => {
                        events.push(
                            Event::new(tick, EventKind::RsuFetch)
                                .request(id)
                                .content(r.content)
                                .from(here)
                                .to(NodeId::Vehicle(r.requester))
                                .hops(pkt.hop_count),
                        );
                        r.fetch = Some((here, tick + self.sc.dissemination.rsu_fetch_ticks));
                        keep = false;
                        break;
                    }
                    Forwarding::Drop => {
                        events.push(
                            Event::new(tick, EventKind::InterestDrop)
                                .request(id)
                                .content(r.content)
                                .from(here)
                                .hops(pkt.hop_count),
                        );
                        keep = false;
                        break;
                    }
                    Forwarding::StoreCarry => break,
                }
            }
            if keep {
                r.packet = Some((pkt, self.radio.node(holder)));
            }
        }
        // answering providers refresh the item's recency
        for r in requests.values() {
            if let Some(m) = &r.message {
                if let NodeId::Vehicle(p) = m.source {
                    if m.remaining_bytes == m.size_bytes {
                        if let Some(c) = self.vehicles[p as usize].cache.as_mut() {
                            c.touch(m.content);
                        }
                    }
                }
            }
        }
        self.requests = requests;
        self.events.extend(events);
    }

    /// Moves each payload one link at a time toward its requester: straight
    /// to it when in range, else along a connected route, else greedily by
    /// position. A link that breaks restarts on the next choice.
    fn transfers(&mut self) {
        let tick = self.tick;
        let d = &self.sc.dissemination;
        let mut done = Vec::new();
        let mut events = Vec::new();
        for (&id, r) in self.requests.iter_mut() {
            let Some(msg) = r.message.as_mut() else { continue };
            let requester = NodeId::Vehicle(r.requester);
            let here = self.radio.index_of(r.carrier).expect("carrier on radio graph");
            let dst = self.radio.index_of(requester).expect("requester on radio graph");
            if let Some(t) = r.link {
                let ti = self.radio.index_of(t).expect("link end on radio graph");
                if !self.radio.neighbors(here).contains(&ti) {
                    r.link = None;
                }
            }
            if r.link.is_none() {
                let next = if self.radio.neighbors(here).contains(&dst) {
                    Some(dst)
                } else {
                    self.radio
                        .route(here, dst)
                        .map(|p| p[1])
                        .or_else(|| self.radio.greedy_next(here, self.radio.position(dst)))
                };
                let Some(next) = next else { continue };
                r.link = Some(self.radio.node(next));
                msg.remaining_bytes = msg.size_bytes;
            }
            let to = r.link.unwrap();
            let rate = match r.carrier {
                NodeId::Rsu(_) => d.rsu_rate_bps,
                NodeId::Vehicle(_) => d.v2v_rate_bps,
            };
            let left = transfer_step(msg, Some(rate), self.tick_s, tick);
            let ev = Event::new(tick, EventKind::Transfer)
                .request(id)
                .content(r.content)
                .from(r.carrier)
                .to(to)
                .hops(r.content_hops + 1);
            events.push(ev.bytes(left));
            if left > 0 {
                continue;
            }
            r.content_hops += 1;
            r.carrier = to;
            r.link = None;
            msg.completed_tick = None;
            if to == requester {
                let kind = match msg.source {
                    NodeId::Rsu(_) => EventKind::DeliverRsu,
                    NodeId::Vehicle(_) => EventKind::DeliverV2v,
                };
                events.push(
                    Event::new(tick, kind)
                        .request(id)
                        .content(r.content)
                        .from(msg.source)
                        .to(requester)
                        .hops(r.content_hops)
                        .bytes(0),
                );
                done.push(id);
            } else if r.content_hops >= d.ttl_hops {
                events.push(
                    Event::new(tick, EventKind::InterestDrop)
                        .request(id)
                        .content(r.content)
                        .from(to)
                        .hops(r.content_hops),
                );
                r.message = None;
            }
        }
        self.events.extend(events);
        for id in done {
            let r = self.requests.remove(&id).unwrap();
            self.vehicles[r.requester as usize].store.insert(r.content);
        }
    }

    fn cache_insert(&mut self, vi: usize, c: ContentId, from: NodeId, kind: EventKind) -> bool {
        let size = self.sizes[&c];
        let node = self.vehicles[vi].node();
        let cache = self.vehicles[vi].cache.as_mut().unwrap();
        let mut level = cache.used();
        let Ok(evicted) = cache.insert(c, size) else {
            return false;
        };
        let used = cache.used();
        let mut evs = vec![Event::new(self.tick, kind).content(c).from(from).to(node).bytes(size)];
        for e in evicted {
            level -= self.sizes[&e];
            evs.push(Event::new(self.tick, EventKind::CacheEvict).content(e).to(node).bytes(level));
        }
        evs.push(Event::new(self.tick, EventKind::CacheInsert).content(c).to(node).bytes(used));
        self.events.extend(evs);
        true
    }

    fn replicate(&mut self) {
        let tick = self.tick;
        let mut keep = VecDeque::new();
        while let Some((rsu, c, since)) = self.replication.pop_front() {
            let ri = self.radio_index(rsu);
            let in_range: Vec<usize> = self
                .radio
                .neighbors(ri)
                .iter()
                .filter_map(|&j| match self.radio.node(j) {
                    NodeId::Vehicle(v) if self.vehicles[v as usize].role == Role::Provider => Some(v as usize),
                    _ => None,
                })
                .collect();
            let best = in_range
                .iter()
                .copied()
                .filter(|&v| !self.vehicles[v].cache.as_ref().unwrap().contains(c))
                .min_by_key(|&v| (self.vehicles[v].cache.as_ref().unwrap().used(), v));
            match best {
                Some(v) => {
                    self.cache_insert(v, c, rsu, EventKind::Replicate);
                }
                None if in_range.is_empty() && tick - since < REPLICATION_PATIENCE_TICKS => keep.push_back((rsu, c, since)),
                None => {}
            }
        }
        self.replication = keep;
    }

    /// Segment -> expected entry time for a consumer's remaining route.
    fn consumer_etas(&self, v: &Vehicle, now: f64) -> BTreeMap<SegmentId, f64> {
        let mut out = BTreeMap::new();
        let Some(&cur) = v.route.get(v.route_pos) else {
            return out;
        };
        let seg = self.net.segment(cur).unwrap();
        let frac = 1.0 - v.offset_cm as f64 / self.seg_len_cm[cur.0 as usize] as f64;
        out.insert(cur, now);
        let mut t = now + frac * seg.base_travel_time_s;
        for &s in &v.route[v.route_pos + 1..] {
            let seg = self.net.segment(s).unwrap();
            t += self.net.signal_wait(seg.from).unwrap();
            out.entry(s).or_insert(t);
            t += seg.base_travel_time_s;
        }
        out
    }

    fn recommend(&mut self) {
        let now = self.now_s();
        let net = self.net.clone();
        let d = self.sc.dissemination.clone();
        let alpha = SimilarityThreshold::new(self.sc.alpha).expect("validated");
        for vi in self.consumers..self.vehicles.len() {
            let v = &self.vehicles[vi];
            if v.role != Role::Provider || v.stop_served {
                continue;
            }
            let Some(&seg) = v.route.get(v.route_pos) else { continue };
            if v.offset_cm < self.seg_len_cm[seg.0 as usize] {
                continue;
            }
            let node = net.segment(seg).unwrap().to;
            let Some(signal) = net.intersection(node).unwrap().signal else { continue };
            let red_left = signal.remaining_red(now);
            if red_left <= 0.0 {
                continue;
            }
            self.vehicles[vi].stop_served = true;
            let v = &self.vehicles[vi];
            let me = self.radio_index(v.node());
            let nearby: Vec<NearbyCatalog> = self
                .radio
                .neighbors(me)
                .iter()
                .filter_map(|&j| match self.radio.node(j) {
                    NodeId::Vehicle(p) => self.vehicles[p as usize].cache.as_ref().map(|c| NearbyCatalog {
                        provider: p,
                        items: c.items().collect(),
                    }),
                    NodeId::Rsu(_) => None,
                })
                .filter(|c| !c.items.is_empty())
                .collect();
            if nearby.is_empty() {
                continue;
            }

            // consumers expected on this provider's path within one signal cycle
            let mut own = Vec::new();
            let mut t = now + red_left;
            if let Some(trip) = v.trip.as_ref() {
                if node != trip.dest {
                    if let Ok(p) = shortest_path(&net, node, trip.dest) {
                        for (i, &s) in p.segments().iter().enumerate() {
                            let sg = net.segment(s).unwrap();
                            if i > 0 {
                                t += net.signal_wait(sg.from).unwrap();
                            }
                            own.push((s, t));
                            t += sg.base_travel_time_s;
                        }
                    }
                }
            }
            let window = signal.cycle_s();
            let audience: Vec<Vehicle2Vec> = self.vehicles[..self.consumers]
                .iter()
                .filter(|c| {
                    let etas = self.consumer_etas(c, now);
                    own.iter().any(|(s, tp)| etas.get(s).is_some_and(|tc| (tc - tp).abs() <= window))
                })
                .filter_map(|c| c.profile.clone())
                .collect();

            let cached: BTreeSet<ContentId> = v.cache.as_ref().unwrap().items().collect();
            let mut picks: Vec<ContentId> =
                intersection_recommendation(&self.env.model, &cached, &nearby, &audience, alpha, &mut self.cost)
                    .into_iter()
                    .map(|r| r.content)
                    .collect();
            let offered: BTreeSet<ContentId> = nearby.iter().flat_map(|c| c.items.iter().copied()).collect();
            let popular: Vec<ContentId> = self
                .env
                .by_popularity
                .iter()
                .copied()
                .filter(|c| offered.contains(c) && !cached.contains(c) && !picks.contains(c))
                .take(d.top_popular)
                .collect();
            picks.extend(popular);

            let mut budget = (red_left * d.v2v_rate_bps as f64).floor() as u64;
            for c in picks {
                let size = self.sizes[&c];
                if size > budget {
                    continue;
                }
                let source = nearby.iter().find(|n| n.items.contains(&c)).unwrap().provider;
                if self.cache_insert(vi, c, NodeId::Vehicle(source), EventKind::Recommend) {
                    budget -= size;
                }
            }
        }
    }

    fn provider_decisions(&mut self) {
        for vi in self.consumers..self.vehicles.len() {
            let v = &self.vehicles[vi];
            if v.role != Role::Provider || v.trip.is_none() {
                continue;
            }
            let Some(&last) = v.route.last() else { continue };
            if v.route_pos + 1 == v.route.len() && v.offset_cm >= self.seg_len_cm[last.0 as usize] {
                self.decide(vi);
            }
        }
    }

    fn replan(&mut self) {
        let net = self.net.clone();
        for vi in 0..self.consumers {
            let v = &self.vehicles[vi];
            if v.replan_epoch == self.accident_epoch || v.trip.is_none() || v.route.is_empty() {
                continue;
            }
            let epoch = self.accident_epoch;
            self.vehicles[vi].replan_epoch = epoch;
            let v = &self.vehicles[vi];
            if !v.route[v.route_pos + 1..].iter().any(|s| self.accident_blocked(*s)) {
                continue;
            }
            let trip = v.trip.as_ref().unwrap();
            let (origin, dest, bound, trip_id) = (trip.origin, trip.dest, trip.bound_s, trip.id);
            let kept = v.route[..=v.route_pos].to_vec();
            let node = net.segment(kept[kept.len() - 1]).unwrap().to;
            let so_far = Path::walk(&net, origin, kept.clone()).and_then(|p| net.travel_time(&p)).unwrap();
            let left = bound - so_far - net.signal_wait(node).unwrap();
            let blocked = self.accidents_now.clone();
            let occ = &self.occupancy;
            let mut planner = SocialPlanner::new(&net)
                .with_provider_counts(|s| occ[s.0 as usize].providers as u64)
                .with_mask(move |s| !blocked.contains(&s.0));
            let plan = planner
                .shortest(node, dest)
                .ok()
                .and_then(|p| net.travel_time(&p).ok())
                .filter(|&t| t <= left)
                .and_then(|t| DetourBudget::new(left - t).ok())
                .and_then(|b| planner.shortest_social(node, dest, b).ok());
            self.cost += planner.cost;
            drop(planner);
            if let Some(plan) = plan {
                let mut route = kept;
                route.extend_from_slice(plan.path.segments());
                let total = so_far + net.signal_wait(node).unwrap() + plan.travel_time;
                let ev = Event::new(self.tick, EventKind::Replan)
                    .request(trip_id)
                    .from(NodeId::Vehicle(vi as u32))
                    .hops(route.len() as u32)
                    .bytes(ms(total));
                self.vehicles[vi].route = route;
                self.log(ev);
            }
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Closes open requests as failed and appends cost counters.
    pub fn finish(mut self) -> RunOutput {
        let tick = self.tick;
        let open = std::mem::take(&mut self.requests);
        for (id, r) in open {
            self.log(
                Event::new(tick, EventKind::Fail)
                    .request(id)
                    .content(r.content)
                    .to(NodeId::Vehicle(r.requester)),
            );
        }
        let c = self.cost;
        for (kind, v) in [
            (EventKind::CostSearch, c.search_expansions),
            (EventKind::CostSimilarity, c.similarity_evals),
            (EventKind::CostNet, c.net_passes),
            (EventKind::CostIndex, c.index_lookups),
        ] {
            self.log(Event::new(tick, kind).bytes(v));
        }
        self.log(Event::new(tick, EventKind::RunEnd));
        let metrics = MetricsReport::from_events(&self.events, self.sc.tick_ms());
        RunOutput {
            events: self.events,
            metrics,
            cost: c,
            curve: self.curve,
            agents: self.agents,
        }
    }
}

fn remaining_route(v: &Vehicle) -> Vec<SegmentId> {
    v.route.get(v.route_pos..).map(<[_]>::to_vec).unwrap_or_default()
}

fn node_vehicle(n: NodeId) -> u32 {
    match n {
        NodeId::Vehicle(v) => v,
        NodeId::Rsu(_) => unreachable!("requests come from vehicles"),
    }
}

/// Runs a scenario to completion with a prebuilt network and content environment.
pub fn run_with(sc: &Scenario, net: Arc<RoadNetwork>, env: Arc<ContentEnv>) -> Result<RunOutput, SimError> {
    let mut w = World::new(sc.clone(), net, env)?;
    while w.tick() < sc.run_length {
        w.step();
    }
    Ok(w.finish())
}

pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, SimError> {
    let errs = sc.validate();
    if !errs.is_empty() {
        return Err(SimError::Invalid(errs));
    }
    let net = Arc::new(sc.build_network().map_err(SimError::Setup)?);
    let env = Arc::new(ContentEnv::build(&sc.content, &sc.embedding)?);
    run_with(sc, net, env)
}
