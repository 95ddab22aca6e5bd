use super::{Intersection, IntersectionId, RoadError, RoadNetwork, SignalCycle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Synthetic Manhattan grid with two-way streets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: u32,
    pub cols: u32,
    pub block_m: f64,
    pub speed_limit_mps: f64,
    /// Relative spread of per-segment speed limits, `limit * (1 ± jitter)`.
    pub speed_jitter: f64,
    pub green_s: f64,
    pub red_s: f64,
    /// Draw each signal's phase offset uniformly (whole seconds).
    pub randomize_offsets: bool,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        // 10 x 10 blocks of 250 m covers about 5 km^2.
        Self {
            rows: 10,
            cols: 10,
            block_m: 250.0,
            speed_limit_mps: 15.0,
            speed_jitter: 0.2,
            green_s: 30.0,
            red_s: 30.0,
            randomize_offsets: true,
            seed: 1,
        }
    }
}

pub fn grid_network(spec: &GridSpec) -> Result<RoadNetwork, RoadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut net = RoadNetwork::new();
    let cycle = spec.green_s + spec.red_s;
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let id = IntersectionId(r * spec.cols + c);
            let offset = if spec.randomize_offsets && cycle > 0.0 {
                rng.gen_range(0..cycle.max(1.0) as u32) as f64
            } else {
                0.0
            };
            let signal = SignalCycle::new(spec.green_s, spec.red_s, offset).ok_or(RoadError::InvalidSignal(id))?;
            net.add_intersection(Intersection {
                id,
                position: (c as f64 * spec.block_m, r as f64 * spec.block_m),
                signal: Some(signal),
            })?;
        }
    }
    let mut link = |net: &mut RoadNetwork, a: u32, b: u32| -> Result<(), RoadError> {
        for (f, t) in [(a, b), (b, a)] {
            let j = if spec.speed_jitter > 0.0 {
                rng.gen_range(-spec.speed_jitter..=spec.speed_jitter)
            } else {
                0.0
            };
            let speed = (spec.speed_limit_mps * (1.0 + j) * 100.0).round() / 100.0;
            net.add_segment(IntersectionId(f), IntersectionId(t), spec.block_m, speed, None)?;
        }
        Ok(())
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let id = r * spec.cols + c;
            if c + 1 < spec.cols {
                link(&mut net, id, id + 1)?;
            }
            if r + 1 < spec.rows {
                link(&mut net, id, id + spec.cols)?;
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let spec = GridSpec {
            rows: 4,
            cols: 4,
            ..Default::default()
        };
        let net = grid_network(&spec).unwrap();
        assert_eq!(net.intersection_count(), 16);
        // 2 * (rows*(cols-1) + cols*(rows-1))
        assert_eq!(net.segment_count(), 48);
        assert_eq!(net.max_out_degree(), 4);
    }

    #[test]
    fn grid_is_seeded() {
        let spec = GridSpec::default();
        let a = grid_network(&spec).unwrap();
        let b = grid_network(&spec).unwrap();
        assert_eq!(a.segments_all(), b.segments_all());
        assert_eq!(a.intersections(), b.intersections());
    }
}
