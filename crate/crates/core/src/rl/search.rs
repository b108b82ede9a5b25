use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::{evaluate_returns, train_dqn, TrainConfig};
use crate::dynamics::EpidemicParams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Closed sampling ranges; learning rate and iterations are sampled log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRanges {
    pub gamma: (f64, f64),
    pub hidden: (usize, usize),
    pub learning_rate: (f64, f64),
    pub iterations: (usize, usize),
}

impl Default for SearchRanges {
    fn default() -> Self {
        Self { gamma: (0.0, 0.99), hidden: (5, 500), learning_rate: (1e-4, 1.0), iterations: (100, 100_000) }
    }
}

/// What each trial may spend. Sampled iteration counts are kept in the
/// reported config, but training stops after `max_iterations` when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub eval_episodes: usize,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub trial: usize,
    pub config: TrainConfig,
    pub iterations_run: usize,
    pub mean_return: f64,
}

fn log_uniform(rng: &mut rng::SimRng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi)
}

impl SearchRanges {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma.0 <= self.gamma.1
            && self.gamma.0 >= 0.0
            && self.gamma.1 < 1.0
            && 1 <= self.hidden.0
            && self.hidden.0 <= self.hidden.1
            && 0.0 < self.learning_rate.0
            && self.learning_rate.0 <= self.learning_rate.1
            && 1 <= self.iterations.0
            && self.iterations.0 <= self.iterations.1;
        if ok { Ok(()) } else { Err(Error::InvalidConfig(format!("bad search ranges {self:?}"))) }
    }

    pub fn sample(&self, base: &TrainConfig, rng: &mut rng::SimRng) -> TrainConfig {
        let gamma = rng.gen_range(self.gamma.0..=self.gamma.1);
        let hidden = rng.gen_range(self.hidden.0..=self.hidden.1);
        let learning_rate = log_uniform(rng, self.learning_rate.0, self.learning_rate.1);
        let iterations = log_uniform(rng, self.iterations.0 as f64, self.iterations.1 as f64).round() as usize;
        TrainConfig {
            gamma,
            hidden,
            learning_rate,
            iterations: iterations.clamp(self.iterations.0, self.iterations.1),
            ..base.clone()
        }
    }
}

/// Trains one agent per sampled config and ranks them by mean evaluation
/// return, best first. Diverged trials rank last with `-inf`.
pub fn random_search(
    graph: &Graph,
    params: &EpidemicParams,
    base: &TrainConfig,
    ranges: &SearchRanges,
    trials: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Result<Vec<SearchResult>> {
    ranges.validate()?;
    if trials == 0 || budget.eval_episodes == 0 {
        return Err(Error::InvalidConfig("trials and eval_episodes must be positive".into()));
    }
    let mut sampler = rng::seeded(seed);
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut config = ranges.sample(base, &mut sampler);
        config.seed = rng::mix_seed(seed, trial as u64 + 1);
        let iterations_run = budget.max_iterations.map_or(config.iterations, |m| m.min(config.iterations));
        let run = TrainConfig { iterations: iterations_run, ..config.clone() };
        let mean_return = match train_dqn(graph, params, &run) {
            Ok(agent) => {
                let returns = evaluate_returns(
                    graph,
                    params,
                    &agent.policy,
                    budget.eval_episodes,
                    config.max_steps_per_episode,
                    rng::mix_seed(config.seed, 99),
                )?;
                returns.iter().sum::<f64>() / returns.len() as f64
            }
            Err(Error::Diverged { .. }) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        results.push(SearchResult { trial, config, iterations_run, mean_return });
    }
    results.sort_by(|a, b| b.mean_return.total_cmp(&a.mean_return).then(a.trial.cmp(&b.trial)));
    Ok(results)
}
