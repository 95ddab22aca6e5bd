#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vesonet::road_net::{
    shortest_path, Intersection, IntersectionId, RoadNetwork, SegmentOccupancy, SignalCycle,
};

/// Random directed graph with at most 12 intersections and 30 segments, random
/// signals and random provider placement, plus a reachable (s, d) pair.
pub fn random_instance(seed: u64) -> (RoadNetwork, IntersectionId, IntersectionId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(4..=12u32);
        let m = rng.gen_range(n as usize..=30);
        let mut net = RoadNetwork::new();
        for i in 0..n {
            let signal = if rng.gen_bool(0.7) {
                SignalCycle::new(rng.gen_range(10..=40) as f64, rng.gen_range(10..=40) as f64, 0.0)
            } else {
                None
            };
            net.add_intersection(Intersection {
                id: IntersectionId(i),
                position: (rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)),
                signal,
            })
            .unwrap();
        }
        for _ in 0..m {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            let len = rng.gen_range(50..=600) as f64;
            let speed = rng.gen_range(5..=20) as f64;
            let s = net.add_segment(IntersectionId(a), IntersectionId(b), len, speed, None).unwrap();
            let providers = if rng.gen_bool(0.5) { rng.gen_range(0..=5) } else { 0 };
            net.set_occupancy(
                s,
                SegmentOccupancy {
                    consumers: 0,
                    providers,
                    as_of_tick: 0,
                },
            )
            .unwrap();
        }
        for _ in 0..20 {
            let s = IntersectionId(rng.gen_range(0..n));
            let d = IntersectionId(rng.gen_range(0..n));
            if s != d && shortest_path(&net, s, d).is_ok() {
                return (net, s, d);
            }
        }
    }
}

pub const BUDGETS: [f64; 4] = [0.0, 10.0, 30.0, 120.0];
