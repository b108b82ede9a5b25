use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Compartment, HealthState};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// One affine layer; `weights` holds one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weights: vec![vec![0.0; inputs]; outputs], bias: vec![0.0; outputs] }
    }

    fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn outputs(&self) -> usize {
        self.bias.len()
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(&self.bias)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().flatten().chain(self.bias.iter_mut())
    }
}

/// Input, one rectified hidden layer, linear head. Serialized layer-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
}

impl QNetwork {
    pub fn zeros(num_nodes: usize, hidden: usize) -> Self {
        Self { layers: vec![Dense::zeros(3 * num_nodes, hidden), Dense::zeros(hidden, num_nodes + 1)] }
    }

    /// Uniform He-style initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn init(num_nodes: usize, hidden: usize, rng: &mut SimRng) -> Self {
        let mut net = Self::zeros(num_nodes, hidden);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            for w in layer.weights.iter_mut().flatten() {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn hidden_width(&self) -> usize {
        self.layers[0].outputs()
    }

    pub fn num_actions(&self) -> usize {
        self.layers[1].outputs()
    }

    pub fn num_nodes(&self) -> usize {
        self.input_width() / 3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("Q-network: {m}")));
        if self.layers.len() != 2 {
            return bad("expected exactly two layers");
        }
        let [first, head] = [&self.layers[0], &self.layers[1]];
        for layer in [first, head] {
            if layer.weights.len() != layer.outputs() || layer.weights.iter().any(|r| r.len() != layer.inputs()) {
                return bad("ragged weight matrix");
            }
        }
        if head.inputs() != first.outputs() {
            return bad("hidden widths disagree");
        }
        if first.inputs() % 3 != 0 || head.outputs() != first.inputs() / 3 + 1 {
            return bad("input must be 3n wide and output n + 1 wide");
        }
        if !self.is_finite() {
            return bad("non-finite parameter");
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|x| x.is_finite())
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Dense::params)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Dense::params_mut)
    }

    pub fn num_params(&self) -> usize {
        self.params().count()
    }

    pub fn norm(&self) -> f64 {
        self.params().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `self += scale * other`, parameter-wise.
    pub fn add_scaled(&mut self, other: &QNetwork, scale: f64) {
        for (p, g) in self.params_mut().zip(other.params()) {
            *p += scale * g;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    /// Hidden pre-activations and outputs for one observation.
    fn forward_parts(&self, observation: &[f64]) -> (Vec<(usize, f64)>, Vec<f64>, Vec<f64>) {
        let active: Vec<(usize, f64)> =
            observation.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect();
        let [first, head] = [&self.layers[0], &self.layers[1]];
        let pre: Vec<f64> = first
            .weights
            .iter()
            .zip(&first.bias)
            .map(|(row, b)| b + active.iter().map(|&(i, x)| row[i] * x).sum::<f64>())
            .collect();
        let q = head
            .weights
            .iter()
            .zip(&head.bias)
            .map(|(row, b)| b + row.iter().zip(&pre).map(|(w, z)| w * z.max(0.0)).sum::<f64>())
            .collect();
        (active, pre, q)
    }
}

/// One-hot encoding: entries `3v`, `3v + 1`, `3v + 2` flag S, I, R for node `v`.
pub fn encode_observation(state: &HealthState) -> Vec<f64> {
    let mut x = vec![0.0; 3 * state.len()];
    for (v, c) in state.compartments().iter().enumerate() {
        let offset = match c {
            Compartment::S => 0,
            Compartment::I => 1,
            Compartment::R => 2,
        };
        x[3 * v + offset] = 1.0;
    }
    x
}

pub fn q_forward(net: &QNetwork, observation: &[f64]) -> Result<Vec<f64>> {
    if observation.len() != net.input_width() {
        return Err(Error::InvalidParameter(format!(
            "observation width {} for a network expecting {}",
            observation.len(),
            net.input_width()
        )));
    }
    Ok(net.forward_parts(observation).2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    /// Minus the number of nodes newly infected by the step.
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
}

/// Mean squared TD error against `y = r + gamma * max_a' Q_target(s', a')`
/// (`y = r` at terminals) and its gradient with respect to `net`.
pub fn td_loss_and_gradients(
    net: &QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
) -> (f64, QNetwork) {
    let mut grad = QNetwork::zeros(net.num_nodes(), net.hidden_width());
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for t in batch {
        let y = if t.terminal {
            t.reward
        } else {
            let next = target.forward_parts(&t.next_observation).2;
            t.reward + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let (active, pre, q) = net.forward_parts(&t.observation);
        let err = q[t.action] - y;
        loss += scale * err * err;
        let g = 2.0 * scale * err;

        let head = &net.layers[1];
        let (g_first, g_head) = grad.layers.split_at_mut(1);
        let (g_first, g_head) = (&mut g_first[0], &mut g_head[0]);
        g_head.bias[t.action] += g;
        for (h, z) in pre.iter().enumerate() {
            if *z > 0.0 {
                g_head.weights[t.action][h] += g * z;
                let dz = g * head.weights[t.action][h];
                g_first.bias[h] += dz;
                for &(i, x) in &active {
                    g_first.weights[h][i] += dz * x;
                }
            }
        }
    }
    (loss, grad)
}
