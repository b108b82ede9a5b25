use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{encode_observation, td_loss_and_gradients, QNetwork, Transition};
use crate::dynamics::{run_episode, seed_infection, step, Allocation, Decision, EpidemicParams, HealthState};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::Policy;
use crate::rng::{self, episode_rng, SimRng};

/// Linear decay from `start` to `end` over `decay_steps` environment steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl EpsilonSchedule {
    pub fn at(&self, step: usize) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.decay_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub hidden: usize,
    pub iterations: usize,
    pub steps_per_iteration: usize,
    pub max_steps_per_episode: usize,
    pub epsilon: EpsilonSchedule,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    pub target_sync: usize,
    /// Rescale gradients whose global norm exceeds this.
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.7,
            learning_rate: 1e-3,
            hidden: 106,
            iterations: 50,
            steps_per_iteration: 500,
            max_steps_per_episode: 20,
            epsilon: EpsilonSchedule { start: 1.0, end: 0.01, decay_steps: 5_000 },
            replay_capacity: 10_000,
            batch_size: 32,
            warmup: 500,
            target_sync: 100,
            max_grad_norm: Some(10.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// The published hyperparameters. The learning rate was tuned for a
    /// different optimizer, so gradient clipping is tightened to keep plain
    /// SGD bounded.
    pub fn published_preset() -> Self {
        Self { gamma: 0.7, hidden: 106, learning_rate: 0.95, iterations: 2543, max_grad_norm: Some(1.0), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        for (name, v) in [
            ("hidden", self.hidden),
            ("iterations", self.iterations),
            ("steps_per_iteration", self.steps_per_iteration),
            ("max_steps_per_episode", self.max_steps_per_episode),
            ("replay_capacity", self.replay_capacity),
            ("batch_size", self.batch_size),
            ("target_sync", self.target_sync),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        let eps = &self.epsilon;
        if ![eps.start, eps.end].iter().all(|e| (0.0..=1.0).contains(e)) {
            return bad("epsilon outside [0, 1]".into());
        }
        if self.max_grad_norm.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return bad("max_grad_norm must be positive".into());
        }
        Ok(())
    }
}

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), next: 0 }
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices(&self, batch: usize, rng: &mut SimRng) -> Vec<usize> {
        (0..batch).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn sample(&self, batch: usize, rng: &mut SimRng) -> Vec<Transition> {
        self.sample_indices(batch, rng).into_iter().map(|i| self.items[i].clone()).collect()
    }
}

fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (a, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = a;
        }
    }
    best
}

fn action_allocation(action: usize, num_nodes: usize, slots: usize) -> Allocation {
    let mut s = vec![None; slots];
    if action < num_nodes && slots > 0 {
        s[0] = Some(action);
    }
    Allocation::from_slots(s)
}

/// Acts greedily with respect to a Q-network; ties go to the lowest action.
#[derive(Debug, Clone)]
pub struct QPolicy {
    net: QNetwork,
}

impl QPolicy {
    pub fn new(net: QNetwork) -> Result<Self> {
        net.validate()?;
        Ok(Self { net })
    }

    pub fn network(&self) -> &QNetwork {
        &self.net
    }

    pub fn action(&self, state: &HealthState) -> usize {
        argmax(&self.net.forward_q(&encode_observation(state)))
    }
}

impl QNetwork {
    pub(crate) fn forward_q(&self, observation: &[f64]) -> Vec<f64> {
        super::network::q_forward(self, observation).expect("observation width checked by caller")
    }
}

impl Policy for QPolicy {
    fn name(&self) -> String {
        "dqn".into()
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        action_allocation(self.action(decision.state), decision.graph.num_nodes(), decision.slots)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub policy: QPolicy,
    /// Mean return of the episodes finished in each iteration.
    pub learning_curve: Vec<f64>,
    pub gradient_steps: usize,
}

pub fn learning_curve_csv(curve: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "mean_return"])?;
    for (i, r) in curve.iter().enumerate() {
        w.write_record([i.to_string(), r.to_string()])?;
    }
    crate::error::finish_csv(w)
}

struct Env<'a> {
    graph: &'a Graph,
    params: &'a EpidemicParams,
    state: HealthState,
    steps: usize,
    budget: Option<usize>,
    episode_return: f64,
}

impl<'a> Env<'a> {
    fn new(graph: &'a Graph, params: &'a EpidemicParams, rng: &mut SimRng) -> Self {
        let mut env = Self {
            graph,
            params,
            state: HealthState::susceptible(graph.num_nodes()),
            steps: 0,
            budget: None,
            episode_return: 0.0,
        };
        env.reset(rng);
        env
    }

    fn reset(&mut self, rng: &mut SimRng) {
        self.state = HealthState::susceptible(self.graph.num_nodes());
        seed_infection(&mut self.state, self.params, rng);
        self.steps = 0;
        self.budget = self.params.treatment_budget;
        self.episode_return = 0.0;
    }
}

pub fn train_dqn(graph: &Graph, params: &EpidemicParams, config: &TrainConfig) -> Result<TrainedAgent> {
    config.validate()?;
    let n = graph.num_nodes();
    params.validate(n)?;
    let mut init_rng = rng::seeded(rng::mix_seed(config.seed, 0));
    let mut act_rng = rng::seeded(rng::mix_seed(config.seed, 1));
    let mut env_rng = rng::seeded(rng::mix_seed(config.seed, 2));
    let mut replay_rng = rng::seeded(rng::mix_seed(config.seed, 3));

    let mut net = QNetwork::init(n, config.hidden, &mut init_rng);
    let mut target = net.clone();
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut env = Env::new(graph, params, &mut env_rng);
    let max_steps = config.max_steps_per_episode.min(params.horizon.max(1));
    let mut learning_curve = Vec::with_capacity(config.iterations);
    let mut env_steps = 0;
    let mut gradient_steps = 0;

    for iteration in 0..config.iterations {
        let mut finished = Vec::new();
        for _ in 0..config.steps_per_iteration {
            if !env.state.has_infected() {
                env.reset(&mut env_rng);
                if !env.state.has_infected() {
                    return Err(Error::InvalidParameter("initial infection seeds nobody".into()));
                }
            }
            let observation = encode_observation(&env.state);
            let action = if act_rng.gen::<f64>() < config.epsilon.at(env_steps) {
                act_rng.gen_range(0..=n)
            } else {
                argmax(&net.forward_q(&observation))
            };
            let slots = params.slots(env.budget);
            let allocation = action_allocation(action, n, slots);
            if let Some(b) = env.budget.as_mut() {
                *b -= allocation.num_treated();
            }
            let outcome = step(graph, &env.state, params, &allocation, &mut env_rng)?;
            let reward = -(outcome.newly_infected.len() as f64);
            env.state = outcome.state;
            env.steps += 1;
            env.episode_return += reward;
            env_steps += 1;
            let terminal = !env.state.has_infected();
            replay.push(Transition {
                observation,
                action,
                reward,
                next_observation: encode_observation(&env.state),
                terminal,
            });
            if terminal || env.steps >= max_steps {
                finished.push(env.episode_return);
                env.reset(&mut env_rng);
            }

            if replay.len() >= config.warmup.max(config.batch_size) {
                let batch = replay.sample(config.batch_size, &mut replay_rng);
                let (loss, mut grad) = td_loss_and_gradients(&net, &target, &batch, config.gamma);
                if !loss.is_finite() {
                    return Err(Error::Diverged { iteration, detail: format!("loss {loss}") });
                }
                if let Some(limit) = config.max_grad_norm {
                    let norm = grad.norm();
                    if norm > limit {
                        grad.params_mut().for_each(|g| *g *= limit / norm);
                    }
                }
                net.add_scaled(&grad, -config.learning_rate);
                if !net.is_finite() {
                    return Err(Error::Diverged { iteration, detail: "non-finite weights".into() });
                }
                gradient_steps += 1;
                if gradient_steps % config.target_sync == 0 {
                    target = net.clone();
                }
            }
        }
        let mean = if finished.is_empty() {
            env.episode_return
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };
        learning_curve.push(mean);
    }
    Ok(TrainedAgent { policy: QPolicy::new(net)?, learning_curve, gradient_steps })
}

/// Per-episode returns (minus post-seeding infections) of `policy` over
/// `episodes` episodes capped at `max_steps` steps.
pub fn evaluate_returns(
    graph: &Graph,
    params: &EpidemicParams,
    policy: &dyn Policy,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let capped = EpidemicParams { horizon: params.horizon.min(max_steps), ..params.clone() };
    (0..episodes as u64)
        .map(|i| {
            let trace = run_episode(graph, &capped, policy, &mut episode_rng(seed, i))?;
            Ok(-(trace.newly_infected.iter().map(Vec::len).sum::<usize>() as f64))
        })
        .collect()
}
