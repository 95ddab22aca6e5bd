//! Content deliverability and the Q-learning routing policy for providers.

mod mlp;
mod toy;

pub use mlp::Mlp;
pub use toy::{run_two_exit_toy, ToyOutcome};

use crate::road_net::{SegmentId, SegmentOccupancy};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::{BufRead, Write};
use thiserror::Error;

/// Feature value of a padding slot.
pub const PADDING: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("no feasible action")]
    DeadEnd,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

/// Consumers minus providers on a segment at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deliverability {
    pub segment: SegmentId,
    pub tick: u64,
    pub value: i64,
}

pub fn content_deliverability(segment: SegmentId, occupancy: &SegmentOccupancy) -> Deliverability {
    Deliverability {
        segment,
        tick: occupancy.as_of_tick,
        value: occupancy.consumers as i64 - occupancy.providers as i64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// new − old: positive when the provider moves toward more demand.
    #[default]
    Increase,
    /// old − new.
    OldMinusNew,
}

pub fn reward(old_cd: f64, new_cd: f64, mode: RewardMode) -> f64 {
    match mode {
        RewardMode::Increase => new_cd - old_cd,
        RewardMode::OldMinusNew => old_cd - new_cd,
    }
}

/// Scaled deliverability clamped to [−1, 1].
pub fn normalize_cd(cd: f64, scale: f64) -> f64 {
    (cd / scale).clamp(-1.0, 1.0)
}

/// Observation at an intersection: one deliverability feature per outgoing
/// slot (K slots, padded), then remaining detour budget and distance to the
/// destination, both normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct RlState {
    features: Vec<f64>,
    feasible: Vec<bool>,
}

impl RlState {
    /// `slots` holds (normalized CD, feasible) per real outgoing segment;
    /// the remaining `k - slots.len()` slots are padding.
    pub fn new(slots: &[(f64, bool)], k: usize, budget: f64, distance: f64) -> Result<Self, RlError> {
        if slots.len() > k {
            return Err(RlError::InvalidState(format!("{} slots exceed K = {k}", slots.len())));
        }
        let mut features: Vec<f64> = slots.iter().map(|s| s.0).collect();
        let mut feasible: Vec<bool> = slots.iter().map(|s| s.1).collect();
        features.resize(k, PADDING);
        feasible.resize(k, false);
        features.push(budget);
        features.push(distance);
        if features.iter().any(|f| !f.is_finite()) {
            return Err(RlError::InvalidState("non-finite feature".into()));
        }
        Ok(Self { features, feasible })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feasible(&self) -> &[bool] {
        &self.feasible
    }

    pub fn slots(&self) -> usize {
        self.feasible.len()
    }

    pub fn has_feasible(&self) -> bool {
        self.feasible.iter().any(|&f| f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s_o: RlState,
    pub a_o: usize,
    pub r: f64,
    pub s_n: RlState,
    pub terminal: bool,
}

/// Greedy feasible index of `q`, ties to the lowest index.
pub fn argmax_feasible(q: &[f64], feasible: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&v, &ok)) in q.iter().zip(feasible).enumerate() {
        if ok && best.is_none_or(|b| v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// Epsilon-greedy choice over feasible slots.
pub fn select_action(net: &Mlp, state: &RlState, epsilon: f64, rng: &mut impl Rng) -> Result<usize, RlError> {
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        let options: Vec<usize> = (0..state.slots()).filter(|&i| state.feasible[i]).collect();
        if options.is_empty() {
            return Err(RlError::DeadEnd);
        }
        return Ok(options[rng.gen_range(0..options.len())]);
    }
    argmax_feasible(&net.forward(&state.features), &state.feasible).ok_or(RlError::DeadEnd)
}

/// Tabular Q-learning update.
pub fn q_backup(q_old: f64, r: f64, max_next_q: f64, beta: f64, gamma: f64) -> f64 {
    q_old + beta * (r + gamma * max_next_q - q_old)
}

fn td_target(target: &Mlp, t: &Transition, gamma: f64) -> f64 {
    if t.terminal {
        return t.r;
    }
    let q = target.forward(&t.s_n.features);
    let next = argmax_feasible(&q, &t.s_n.feasible).map_or(0.0, |a| q[a]);
    t.r + gamma * next
}

/// Mean squared temporal-difference error of `online` against `target`.
pub fn td_loss(online: &Mlp, target: &Mlp, batch: &[&Transition], gamma: f64) -> f64 {
    let sum: f64 = batch
        .iter()
        .map(|t| {
            let e = td_target(target, t, gamma) - online.forward(&t.s_o.features)[t.a_o];
            e * e
        })
        .sum();
    sum / batch.len() as f64
}

/// Gradient of [`td_loss`] with respect to the online parameters; the target
/// is held fixed.
pub fn td_gradient(online: &Mlp, target: &Mlp, batch: &[&Transition], gamma: f64) -> Vec<f64> {
    let mut grad = vec![0.0; online.params().len()];
    let n = batch.len() as f64;
    let mut go = vec![0.0; online.output_len()];
    for t in batch {
        let q = online.forward(&t.s_o.features)[t.a_o];
        let y = td_target(target, t, gamma);
        go.iter_mut().for_each(|g| *g = 0.0);
        go[t.a_o] = 2.0 * (q - y) / n;
        online.backward(&t.s_o.features, &go, &mut grad);
    }
    grad
}

/// Bounded FIFO of transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` distinct transitions drawn uniformly; `None` if fewer are stored.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Option<Vec<&Transition>> {
        if n == 0 || self.items.len() < n {
            return None;
        }
        Some(sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect())
    }
}

/// Linear decay from `start` to `end` over `decay_steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            self.end
        } else {
            self.start + (self.end - self.start) * step as f64 / self.decay_steps as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub target_sync: u64,
    pub hidden: Vec<usize>,
    pub bias: bool,
    /// K, the number of outgoing-segment slots in the state.
    pub slots: usize,
    /// Deliverability is divided by this before entering the state.
    pub cd_scale: f64,
    pub reward_mode: RewardMode,
    /// One network for all providers; otherwise one per provider.
    pub shared: bool,
    pub rng_seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 5000,
            buffer_capacity: 10_000,
            batch_size: 32,
            target_sync: 500,
            hidden: vec![64, 64],
            bias: true,
            slots: 4,
            cd_scale: 10.0,
            reward_mode: RewardMode::Increase,
            shared: true,
            rng_seed: 1,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if !(0.0..1.0).contains(&self.gamma) {
            e.push("dqn.gamma must lie in [0, 1)".to_string());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            e.push("dqn.learning_rate must be > 0".to_string());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=self.epsilon_start).contains(&self.epsilon_end) {
            e.push("dqn epsilon requires 0 <= epsilon_end <= epsilon_start <= 1".to_string());
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.target_sync == 0 || self.slots == 0 {
            e.push("dqn buffer_capacity, batch_size, target_sync and slots must be > 0".to_string());
        }
        if self.hidden.contains(&0) {
            e.push("dqn.hidden layer sizes must be > 0".to_string());
        }
        if !(self.cd_scale.is_finite() && self.cd_scale > 0.0) {
            e.push("dqn.cd_scale must be > 0".to_string());
        }
        e
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: self.epsilon_decay_steps,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.slots + 2];
        s.extend(&self.hidden);
        s.push(self.slots);
        s
    }
}

/// Online and target networks, replay memory and exploration state.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub config: DqnConfig,
    online: Mlp,
    target: Mlp,
    buffer: ReplayBuffer,
    steps: u64,
    updates: u64,
    rng: ChaCha8Rng,
}

impl DqnAgent {
    pub fn new(config: DqnConfig) -> Result<Self, RlError> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(RlError::Config(errs.join("; ")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let online = Mlp::new(&config.layer_sizes(), config.bias, &mut rng);
        Ok(Self {
            target: online.clone(),
            online,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            steps: 0,
            updates: 0,
            rng,
            config,
        })
    }

    /// Replaces both networks, e.g. from a checkpoint.
    pub fn with_network(mut self, net: Mlp) -> Result<Self, RlError> {
        if net.sizes() != self.config.layer_sizes().as_slice() {
            return Err(RlError::Config("network shape does not match configuration".into()));
        }
        self.target = net.clone();
        self.online = net;
        Ok(self)
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn epsilon(&self) -> f64 {
        self.config.schedule().value(self.steps)
    }

    /// Exploring choice; advances the exploration schedule.
    pub fn act(&mut self, state: &RlState) -> Result<usize, RlError> {
        let eps = self.epsilon();
        self.steps += 1;
        select_action(&self.online, state, eps, &mut self.rng)
    }

    pub fn greedy(&self, state: &RlState) -> Result<usize, RlError> {
        argmax_feasible(&self.online.forward(state.features()), state.feasible()).ok_or(RlError::DeadEnd)
    }

    pub fn observe(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// One gradient step on a sampled batch, returning the batch loss before
    /// the step, or `None` when the buffer holds fewer than a batch.
    ///
    /// The step follows the gradient of half the loss so that the learning
    /// rate plays the role of the tabular step size.
    pub fn train_step(&mut self) -> Option<f64> {
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let loss = td_loss(&self.online, &self.target, &batch, self.config.gamma);
        let grad = td_gradient(&self.online, &self.target, &batch, self.config.gamma);
        let lr = self.config.learning_rate;
        for (p, g) in self.online.params_mut().iter_mut().zip(&grad) {
            *p -= lr * 0.5 * g;
        }
        self.updates += 1;
        if self.updates.is_multiple_of(self.config.target_sync) {
            self.sync_target();
        }
        Some(loss)
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }
}

/// Text checkpoint: `sizes,<n0>,<n1>,...`, `bias,<true|false>`, then one
/// parameter per line.
pub fn write_checkpoint<W: Write>(net: &Mlp, mut out: W) -> Result<(), RlError> {
    let io = |e: std::io::Error| RlError::Io(e.to_string());
    let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
    writeln!(out, "sizes,{}", sizes.join(",")).map_err(io)?;
    writeln!(out, "bias,{}", net.has_bias()).map_err(io)?;
    for p in net.params() {
        writeln!(out, "{p}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Mlp, RlError> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), RlError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(RlError::Io(e.to_string())),
            None => Err(RlError::Parse {
                line: 0,
                message: format!("missing {what}"),
            }),
        }
    };
    let (ln, sizes) = next("sizes")?;
    let sizes: Vec<usize> = sizes
        .strip_prefix("sizes,")
        .ok_or(RlError::Parse {
            line: ln,
            message: "expected `sizes,...`".into(),
        })?
        .split(',')
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| RlError::Parse {
            line: ln,
            message: e.to_string(),
        })?;
    let (ln, bias) = next("bias")?;
    let bias = match bias.as_str() {
        "bias,true" => true,
        "bias,false" => false,
        _ => {
            return Err(RlError::Parse {
                line: ln,
                message: "expected `bias,true|false`".into(),
            })
        }
    };
    let mut params = Vec::new();
    for (i, l) in lines {
        let l = l.map_err(|e| RlError::Io(e.to_string()))?;
        if l.is_empty() {
            continue;
        }
        params.push(l.parse::<f64>().map_err(|_| RlError::Parse {
            line: i + 1,
            message: format!("invalid parameter `{l}`"),
        })?);
    }
    Mlp::from_parts(sizes, bias, params).ok_or(RlError::Parse {
        line: 0,
        message: "parameter count does not match layer sizes".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub loss: f64,
    pub epsilon: f64,
    pub mean_reward: f64,
}

/// CSV `step,loss,epsilon,mean_reward`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<(), RlError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(|e| RlError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| RlError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(consumers: u32, providers: u32) -> SegmentOccupancy {
        SegmentOccupancy {
            consumers,
            providers,
            as_of_tick: 7,
        }
    }

    #[test]
    fn deliverability_cases() {
        assert_eq!(content_deliverability(SegmentId(0), &occ(5, 2)).value, 3);
        assert_eq!(content_deliverability(SegmentId(0), &occ(3, 3)).value, 0);
        assert_eq!(content_deliverability(SegmentId(0), &occ(0, 4)).value, -4);
        assert_eq!(content_deliverability(SegmentId(0), &occ(0, 4)).tick, 7);
    }

    #[test]
    fn reward_modes() {
        assert_eq!(reward(3.0, 5.0, RewardMode::Increase), 2.0);
        assert_eq!(reward(3.0, 5.0, RewardMode::OldMinusNew), -2.0);
        assert_eq!(reward(4.0, 4.0, RewardMode::Increase), 0.0);
        assert_eq!(reward(4.0, 4.0, RewardMode::OldMinusNew), 0.0);
    }

    #[test]
    fn backup_cases() {
        assert_eq!(q_backup(0.0, 1.0, 0.0, 0.5, 0.9), 0.5);
        assert_eq!(q_backup(0.7, 1.0, 3.0, 0.0, 0.9), 0.7);
        let fixed = 1.0 + 0.9 * 2.0;
        assert_eq!(q_backup(fixed, 1.0, 2.0, 0.37, 0.9), fixed);
    }

    fn linear(q: &[f64]) -> Mlp {
        // bias-only output: Q equals the bias regardless of input
        let k = q.len();
        let mut params = vec![0.0; (k + 2) * k];
        params.extend_from_slice(q);
        Mlp::from_parts(vec![k + 2, k], true, params).unwrap()
    }

    #[test]
    fn greedy_selection_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = RlState::new(&[(0.0, true), (0.0, true), (0.0, true)], 3, 1.0, 1.0).unwrap();
        assert_eq!(select_action(&linear(&[0.1, 0.9, 0.3]), &s, 0.0, &mut rng).unwrap(), 1);
        let s2 = RlState::new(&[(0.0, true), (0.0, true)], 2, 1.0, 1.0).unwrap();
        assert_eq!(select_action(&linear(&[0.9, 0.9]), &s2, 0.0, &mut rng).unwrap(), 0);
        let masked = RlState::new(&[(0.0, true), (0.0, false), (0.0, true)], 3, 1.0, 1.0).unwrap();
        assert_eq!(select_action(&linear(&[0.1, 0.9, 0.3]), &masked, 0.0, &mut rng).unwrap(), 2);
        let dead = RlState::new(&[(0.0, false)], 3, 1.0, 1.0).unwrap();
        assert_eq!(select_action(&linear(&[0.1, 0.9, 0.3]), &dead, 0.5, &mut rng), Err(RlError::DeadEnd));
    }

    #[test]
    fn padding_uses_sentinel() {
        let s = RlState::new(&[(0.4, true)], 3, 0.5, 0.25).unwrap();
        assert_eq!(s.features(), &[0.4, PADDING, PADDING, 0.5, 0.25]);
        assert_eq!(s.feasible(), &[true, false, false]);
        assert!(RlState::new(&[(f64::NAN, true)], 3, 0.5, 0.25).is_err());
        assert!(RlState::new(&[(0.0, true); 4], 3, 0.5, 0.25).is_err());
    }

    #[test]
    fn buffer_is_bounded_fifo() {
        let s = RlState::new(&[(0.0, true)], 1, 0.0, 0.0).unwrap();
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(Transition {
                s_o: s.clone(),
                a_o: 0,
                r: i as f64,
                s_n: s.clone(),
                terminal: true,
            });
            assert!(b.len() <= 3);
        }
        assert_eq!(b.iter().map(|t| t.r).collect::<Vec<_>>(), vec![2.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(b.sample(4, &mut rng).is_none());
        assert_eq!(b.sample(3, &mut rng).unwrap().len(), 3);
    }

    #[test]
    fn schedule_reaches_end_exactly() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            decay_steps: 100,
        };
        let mut prev = f64::INFINITY;
        for step in 0..150 {
            let v = s.value(step);
            assert!(v <= prev);
            prev = v;
        }
        assert_eq!(s.value(100), 0.05);
        assert_eq!(s.value(0), 1.0);
    }

    #[test]
    fn per_sample_loss() {
        let net = linear(&[0.5]);
        let s = RlState::new(&[(0.0, true)], 1, 0.0, 0.0).unwrap();
        let t = Transition {
            s_o: s.clone(),
            a_o: 0,
            r: 1.0,
            s_n: s,
            terminal: true,
        };
        assert_eq!(td_loss(&net, &net, &[&t], 0.9), 0.25);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[4, 8, 2], true, &mut rng);
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), net);
    }

    #[test]
    fn short_buffer_is_noop() {
        let mut agent = DqnAgent::new(DqnConfig::default()).unwrap();
        let before = agent.online().clone();
        assert_eq!(agent.train_step(), None);
        assert_eq!(agent.online(), &before);
    }
}
