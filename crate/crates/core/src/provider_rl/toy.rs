use super::{reward, CurvePoint, DqnAgent, DqnConfig, RlError, RlState, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of [`run_two_exit_toy`].
#[derive(Debug, Clone)]
pub struct ToyOutcome {
    /// Fraction of evaluation states where the greedy choice is the
    /// high-deliverability exit.
    pub greedy_accuracy: f64,
    pub final_loss: Option<f64>,
    pub curve: Vec<CurvePoint>,
    pub agent: DqnAgent,
}

/// A provider at an intersection with two exits whose deliverability is
/// fixed at 5 and 1. The exit order is shuffled every episode; episodes end
/// after one move. The agent takes `steps` environment steps with one
/// training update per step, then is evaluated greedily on `eval_states`
/// fresh draws.
pub fn run_two_exit_toy(
    mut config: DqnConfig,
    steps: u64,
    eval_states: usize,
    seed: u64,
) -> Result<ToyOutcome, RlError> {
    const CDS: [f64; 2] = [5.0, 1.0];
    config.slots = 2;
    config.rng_seed = seed;
    let mut agent = DqnAgent::new(config)?;
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(1);
    let scale = agent.config.cd_scale;
    let draw = |rng: &mut ChaCha8Rng| -> (RlState, [f64; 2]) {
        let order = if rng.gen_bool(0.5) { CDS } else { [CDS[1], CDS[0]] };
        let slots = [(order[0] / scale, true), (order[1] / scale, true)];
        (RlState::new(&slots, 2, 1.0, 1.0).expect("finite"), order)
    };

    let mut curve = Vec::new();
    let mut rewards = 0.0;
    let mut last_loss = None;
    for step in 1..=steps {
        let (state, order) = draw(&mut env);
        let eps = agent.epsilon();
        let a = agent.act(&state)?;
        let r = reward(0.0, order[a], agent.config.reward_mode);
        rewards += r;
        agent.observe(Transition {
            s_o: state.clone(),
            a_o: a,
            r,
            s_n: state,
            terminal: true,
        });
        if let Some(l) = agent.train_step() {
            last_loss = Some(l);
        }
        if step % 100 == 0 || step == steps {
            curve.push(CurvePoint {
                step,
                loss: last_loss.unwrap_or(f64::NAN),
                epsilon: eps,
                mean_reward: rewards / step as f64,
            });
        }
    }

    let mut hits = 0;
    for _ in 0..eval_states {
        let (state, order) = draw(&mut env);
        if order[agent.greedy(&state)?] == CDS[0] {
            hits += 1;
        }
    }
    Ok(ToyOutcome {
        greedy_accuracy: hits as f64 / eval_states.max(1) as f64,
        final_loss: last_loss,
        curve,
        agent,
    })
}
