//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use contagion::dynamics::HealthState;
use contagion::graph::Graph;
use contagion::lp::LinearProgram;
use contagion::rl::{encode_observation, td_loss_and_gradients, QNetwork, Transition};
use contagion::rng::SimRng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Erdős–Rényi graph; may be disconnected.
pub fn random_graph(rng: &mut SimRng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Betweenness by listing every simple path, summed over unordered pairs.
pub fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
    fn walk(g: &Graph, at: usize, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == target {
            out.push(path.clone());
            return;
        }
        for &w in g.neighbors(at) {
            if !path.contains(&w) {
                path.push(w);
                walk(g, w, target, path, out);
                path.pop();
            }
        }
    }
    let n = g.num_nodes();
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths = Vec::new();
            walk(g, s, t, &mut vec![s], &mut paths);
            let Some(shortest) = paths.iter().map(Vec::len).min() else { continue };
            let best: Vec<_> = paths.into_iter().filter(|p| p.len() == shortest).collect();
            for p in &best {
                for &v in &p[1..p.len() - 1] {
                    score[v] += 1.0 / best.len() as f64;
                }
            }
        }
    }
    score
}

/// Random bounded LP: every feasible instance has an optimal vertex because
/// `sum x <= cap` is always present.
pub fn random_lp(rng: &mut SimRng) -> LinearProgram {
    let n = rng.gen_range(1..=8);
    let coef = |rng: &mut SimRng| rng.gen_range(-1.0..1.0);
    let mut lp = LinearProgram::new((0..n).map(|_| coef(rng)).collect());
    let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.3)).collect();
    for _ in 0..rng.gen_range(0..=2) {
        let row: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let rhs = if rng.gen_bool(0.7) {
            row.iter().zip(&anchor).map(|(a, x)| a * x).sum()
        } else {
            coef(rng)
        };
        lp.add_eq(row, rhs);
    }
    for _ in 0..rng.gen_range(1..=4) {
        let row: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        lp.add_ub(row, rng.gen_range(-0.2..1.0));
    }
    lp.add_ub(vec![1.0; n], rng.gen_range(1.0..5.0));
    lp
}

/// Minimum objective over all basic feasible points, or `None` if none exists.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    rows.extend(lp.eq_matrix.iter().cloned().zip(lp.eq_rhs.iter().copied()));
    rows.extend(lp.ub_matrix.iter().cloned().zip(lp.ub_rhs.iter().copied()));
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(rows.len(), n, 0, &mut pick, &mut |chosen| {
        let a = DMatrix::from_fn(n, n, |r, c| rows[chosen[r]].0[c]);
        let b = DVector::from_iterator(n, chosen.iter().map(|&r| rows[r].1));
        let Some(x) = a.clone().lu().solve(&b) else { return };
        if (&a * &x - &b).amax() > 1e-10 {
            return;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        if lp.max_violation(&x) <= 1e-9 {
            let obj = lp.objective_at(&x);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    });
    best
}

fn choose(m: usize, k: usize, start: usize, pick: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        visit(pick);
        return;
    }
    for i in start..m {
        if m - i < k - pick.len() {
            break;
        }
        pick.push(i);
        choose(m, k, i + 1, pick, visit);
        pick.pop();
    }
}

fn random_state(rng: &mut SimRng, n: usize) -> HealthState {
    let s: String = (0..n).map(|_| ['S', 'I', 'R'][rng.gen_range(0..3)]).collect();
    HealthState::parse(&s).unwrap()
}

pub fn random_batch(rng: &mut SimRng, num_nodes: usize, size: usize) -> Vec<Transition> {
    (0..size)
        .map(|_| Transition {
            observation: encode_observation(&random_state(rng, num_nodes)),
            action: rng.gen_range(0..=num_nodes),
            reward: -(rng.gen_range(0..=num_nodes) as f64),
            next_observation: encode_observation(&random_state(rng, num_nodes)),
            terminal: rng.gen_bool(0.2),
        })
        .collect()
}

/// Largest per-parameter relative gap between the analytic gradient and a
/// central difference with step `h`. The denominator is floored at `1e-6`
/// so parameters with vanishing gradient compare on absolute error.
pub fn gradient_relative_error(net: &QNetwork, target: &QNetwork, batch: &[Transition], gamma: f64, h: f64) -> f64 {
    let (_, grad) = td_loss_and_gradients(net, target, batch, gamma);
    let analytic: Vec<f64> = grad.params().copied().collect();
    let loss_with = |i: usize, delta: f64| {
        let mut probe = net.clone();
        *probe.params_mut().nth(i).unwrap() += delta;
        td_loss_and_gradients(&probe, target, batch, gamma).0
    };
    (0..analytic.len())
        .map(|i| {
            let fd = (loss_with(i, h) - loss_with(i, -h)) / (2.0 * h);
            (analytic[i] - fd).abs() / (analytic[i].abs() + fd.abs()).max(1e-6)
        })
        .fold(0.0, f64::max)
}

/// Mean and standard error of paired differences `a - b`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
